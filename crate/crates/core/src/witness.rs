//! Impossibility witnesses for set and approximate preference aggregation.
//!
//! A witness is a concrete cyclic profile together with machine-checked
//! facts: every slot's safe area is the singleton of its own input, and
//! the pinned inputs are either more numerous than the set-agreement
//! bound or further apart than the approximate-agreement slack. Any
//! unanimity-respecting algorithm is therefore forced to output the
//! pinned inputs on this profile and violate the agreement clause.
//!
//! Witness profiles use the round-robin slot assignment whenever the
//! cycle fits into the slots. When the cycle is longer than the slot
//! count the assignment stays equitable but places the two rotations a
//! half-cycle apart first, since those realize the threshold distance.

use num_rational::Rational64;
use serde_json::{json, Value};

use crate::cyclic::{cyclic_preference_list, BlockPartition, SystemParams, Synchrony};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind};
use crate::prefs::{enumerate_strict, format_default, Preference, Profile};
use crate::safety;

/// Which task a witness defeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessTask {
    KSet { k: usize },
    Approx { eps: Rational64, metric: MetricKind },
}

/// The model and task a witness was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessParams {
    pub system: SystemParams,
    pub synchrony: Synchrony,
    pub m: usize,
    pub task: WitnessTask,
}

/// The agreement-defeating fact the witness pins down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessEvidence {
    /// Slots pinned to pairwise-distinct outputs.
    DistinctDecisions { slots: Vec<usize>, count: usize },
    /// Two slots pinned to outputs this far apart.
    Distance { slots: (usize, usize), distance: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessVerdict {
    Verified,
    Failed(String),
}

/// A fully materialized impossibility witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessReport {
    pub params: WitnessParams,
    /// Cycle length `j`.
    pub cycle_len: usize,
    /// Minimum block size `ℓ`.
    pub min_block: usize,
    /// Block evenness `ℓ · j / m`; 1 exactly when all blocks share a size.
    pub delta: Rational64,
    /// The even-cycle bound `(δ²/2)·diam_KT` or `δ²·diam_SF` on the
    /// strict domain, when the cycle length is even.
    pub delta_form_bound: Option<Rational64>,
    pub blocks: BlockPartition,
    pub profile: Profile,
    /// The strict upper bound the task parameter must stay below.
    pub threshold: u64,
    pub safe_areas: Vec<Vec<Preference>>,
    pub evidence: WitnessEvidence,
    pub verdict: WitnessVerdict,
}

/// A witness, or the named precondition that rules one out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessOutcome {
    Report(Box<WitnessReport>),
    NotApplicable { precondition: String },
}

impl WitnessOutcome {
    pub fn report(&self) -> Option<&WitnessReport> {
        match self {
            WitnessOutcome::Report(r) => Some(r),
            WitnessOutcome::NotApplicable { .. } => None,
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self.report().map(|r| &r.verdict), Some(WitnessVerdict::Verified))
    }
}

/// The agreement slack below which the cyclic construction defeats
/// `ε`-approximate aggregation: `⌊j²/4⌋·ℓ²` for Kendall tau,
/// `⌊j²/2⌋·ℓ²` for the Spearman footrule.
pub fn approx_threshold(cycle_len: usize, min_block: usize, metric: MetricKind) -> u64 {
    let j = cycle_len as u64;
    let l_sq = (min_block * min_block) as u64;
    match metric {
        MetricKind::Kt => (j * j / 4) * l_sq,
        MetricKind::Sf => (j * j / 2) * l_sq,
    }
}

// Rotation assigned to each slot. Round-robin when the cycle fits;
// otherwise an injective equitable assignment that keeps rotations
// 0 and floor(k/2) in the profile.
fn rotation_assignment(cycle_len: usize, slots: usize) -> Vec<usize> {
    if cycle_len <= slots {
        return (0..slots).map(|j| j % cycle_len).collect();
    }
    let mut rots = vec![0];
    if slots > 1 {
        rots.push(cycle_len / 2);
    }
    let mut next = 1;
    while rots.len() < slots {
        while rots.contains(&next) {
            next += 1;
        }
        rots.push(next);
        next += 1;
    }
    rots
}

fn witness_profile(bp: &BlockPartition, slots: usize) -> Result<(Profile, Vec<usize>)> {
    let list = cyclic_preference_list(bp);
    let rots = rotation_assignment(bp.k(), slots);
    let profile = Profile::new(rots.iter().map(|&r| list[r].clone()).collect())?;
    Ok((profile, rots))
}

fn pinned_safe_areas(profile: &Profile, t: usize) -> Result<(Vec<Vec<Preference>>, bool)> {
    let w_o = enumerate_strict(profile.m())?;
    let mut areas = Vec::with_capacity(profile.len());
    let mut all_pinned = true;
    for slot in 0..profile.len() {
        let area = safety::safe_area_clamped(profile.entries(), slot, t, &w_o)?;
        all_pinned &= area.as_slice() == std::slice::from_ref(profile.get(slot));
        areas.push(area);
    }
    Ok((areas, all_pinned))
}

fn delta_form_bound(
    cycle_len: usize,
    delta: Rational64,
    m: usize,
    metric: MetricKind,
) -> Option<Rational64> {
    if cycle_len % 2 != 0 {
        return None;
    }
    let m = m as i64;
    Some(match metric {
        MetricKind::Kt => delta * delta / 2 * Rational64::new(m * m - m, 2),
        MetricKind::Sf => delta * delta * Rational64::from_integer(m * m / 2),
    })
}

/// Witness against `k`-set aggregation on the full strict domain: the
/// singleton-block `m`-cycle pins more than `k` distinct outputs.
/// Applicable when `m >= ceil(participants/t)` and `k < min(m, n)`.
pub fn kset_witness(
    system: SystemParams,
    synchrony: Synchrony,
    m: usize,
    k: usize,
) -> Result<WitnessOutcome> {
    if k < 1 {
        return Err(Error::Argument("k-set aggregation needs k >= 1".into()));
    }
    let participants = system.participants(synchrony);
    let needed = participants.div_ceil(system.t());
    if m < needed {
        return Ok(WitnessOutcome::NotApplicable {
            precondition: format!(
                "m >= ceil(participants/t) fails: m={m} < {needed}"
            ),
        });
    }
    if k >= m.min(system.n()) {
        return Ok(WitnessOutcome::NotApplicable {
            precondition: format!(
                "k < min(m, n) fails: k={k} >= {}",
                m.min(system.n())
            ),
        });
    }
    // When k is not below the participant count (asynchronous only), the
    // profile extends to all n slots and is checked as a synchronous one.
    let slots = if k < participants { participants } else { system.n() };
    let blocks = BlockPartition::singletons(m)?;
    let (profile, _) = witness_profile(&blocks, slots)?;
    let (safe_areas, all_pinned) = pinned_safe_areas(&profile, system.t())?;

    let pinned: Vec<usize> = (0..=k).collect();
    let distinct = {
        let mut outs: Vec<&Preference> = pinned.iter().map(|&s| profile.get(s)).collect();
        outs.sort();
        outs.dedup();
        outs.len()
    };
    let verdict = if !all_pinned {
        WitnessVerdict::Failed("a safe area is not the singleton of its own input".into())
    } else if distinct <= k {
        WitnessVerdict::Failed(format!("only {distinct} distinct pinned outputs"))
    } else {
        WitnessVerdict::Verified
    };
    Ok(WitnessOutcome::Report(Box::new(WitnessReport {
        params: WitnessParams { system, synchrony, m, task: WitnessTask::KSet { k } },
        cycle_len: m,
        min_block: 1,
        delta: Rational64::from_integer(1),
        delta_form_bound: None,
        blocks,
        profile,
        threshold: m.min(system.n()) as u64,
        safe_areas,
        evidence: WitnessEvidence::DistinctDecisions { slots: pinned, count: distinct },
        verdict,
    })))
}

/// Witness against `ε`-approximate aggregation on the full strict
/// domain, via the singleton-block `m`-cycle. Applicable when
/// `m >= ceil(participants/t)` and `ε` is strictly below `⌊m²/4⌋`
/// (Kendall tau) or `⌊m²/2⌋` (footrule).
pub fn approx_witness(
    system: SystemParams,
    synchrony: Synchrony,
    m: usize,
    metric: MetricKind,
    eps: Rational64,
) -> Result<WitnessOutcome> {
    let blocks = BlockPartition::singletons(m)?;
    block_witness(system, synchrony, &blocks, metric, eps)
}

/// Witness against `ε`-approximate aggregation from an arbitrary block
/// partition with `j` blocks of size at least `ℓ`: the rotations half a
/// cycle apart are `⌊j²/4⌋ℓ²` (Kendall tau) or `⌊j²/2⌋ℓ²` (footrule)
/// apart, so any `ε` strictly below that is defeated. Applicable when
/// `j >= ceil(participants/t)` and at least two slots participate.
pub fn block_witness(
    system: SystemParams,
    synchrony: Synchrony,
    blocks: &BlockPartition,
    metric: MetricKind,
    eps: Rational64,
) -> Result<WitnessOutcome> {
    let cycle_len = blocks.k();
    let m = blocks.m();
    let min_block = blocks.min_block_size();
    let participants = system.participants(synchrony);
    let needed = participants.div_ceil(system.t());
    if cycle_len < needed {
        return Ok(WitnessOutcome::NotApplicable {
            precondition: format!(
                "cycle length >= ceil(participants/t) fails: j={cycle_len} < {needed}"
            ),
        });
    }
    if participants < 2 {
        return Ok(WitnessOutcome::NotApplicable {
            precondition: "fewer than two participants; no two decisions to separate".into(),
        });
    }
    let threshold = approx_threshold(cycle_len, min_block, metric);
    if eps >= Rational64::from_integer(threshold as i64) {
        return Ok(WitnessOutcome::NotApplicable {
            precondition: format!("eps < threshold fails: eps={eps} >= {threshold}"),
        });
    }

    let (profile, rots) = witness_profile(blocks, participants)?;
    let (safe_areas, all_pinned) = pinned_safe_areas(&profile, system.t())?;

    let near = rots.iter().position(|&r| r == 0);
    let far = rots.iter().position(|&r| r == cycle_len / 2);
    let (verdict, evidence) = match (near, far) {
        (Some(i), Some(j)) if i != j => {
            let distance = metrics::distance(metric, profile.get(i), profile.get(j))?;
            let verdict = if !all_pinned {
                WitnessVerdict::Failed("a safe area is not the singleton of its own input".into())
            } else if Rational64::from_integer(distance as i64) <= eps {
                WitnessVerdict::Failed(format!("pinned distance {distance} does not exceed eps"))
            } else {
                WitnessVerdict::Verified
            };
            (verdict, WitnessEvidence::Distance { slots: (i, j), distance })
        }
        _ => (
            WitnessVerdict::Failed("the two half-cycle rotations do not both appear".into()),
            WitnessEvidence::Distance { slots: (0, 0), distance: 0 },
        ),
    };

    let delta = Rational64::new((min_block * cycle_len) as i64, m as i64);
    Ok(WitnessOutcome::Report(Box::new(WitnessReport {
        params: WitnessParams { system, synchrony, m, task: WitnessTask::Approx { eps, metric } },
        cycle_len,
        min_block,
        delta,
        delta_form_bound: delta_form_bound(cycle_len, delta, m, metric),
        blocks: blocks.clone(),
        profile,
        threshold,
        safe_areas,
        evidence,
        verdict,
    })))
}

/// Recomputes every fact in a report from its parameters and block
/// partition. Any mismatch with the recorded facts is an integrity
/// error; a consistent report earns `Verified` only if the pinning and
/// the strict task inequality genuinely hold.
pub fn verify_witness(report: &WitnessReport) -> Result<WitnessVerdict> {
    let blocks = &report.blocks;
    if report.cycle_len != blocks.k() || report.min_block != blocks.min_block_size() {
        return Err(Error::Integrity("cycle shape does not match the block partition".into()));
    }
    if report.params.m != blocks.m() {
        return Err(Error::Integrity("alternative count does not match the blocks".into()));
    }
    let (expected_profile, rots) = witness_profile(blocks, report.profile.len())?;
    if expected_profile != report.profile {
        return Err(Error::Integrity("profile does not match the witness construction".into()));
    }
    let expected_delta =
        Rational64::new((report.min_block * report.cycle_len) as i64, report.params.m as i64);
    if report.delta != expected_delta {
        return Err(Error::Integrity("delta does not match the block shape".into()));
    }
    let (safe_areas, all_pinned) = pinned_safe_areas(&report.profile, report.params.system.t())?;
    if safe_areas != report.safe_areas {
        return Err(Error::Integrity("safe areas do not match recomputation".into()));
    }

    match &report.params.task {
        WitnessTask::KSet { k } => {
            let bound = report.params.m.min(report.params.system.n()) as u64;
            if report.threshold != bound {
                return Err(Error::Integrity("threshold does not match min(m, n)".into()));
            }
            let WitnessEvidence::DistinctDecisions { slots, count } = &report.evidence else {
                return Err(Error::Integrity("set-agreement witness needs distinct-output evidence".into()));
            };
            let mut outs: Vec<&Preference> = Vec::new();
            for &slot in slots {
                if slot >= report.profile.len() {
                    return Err(Error::Integrity(format!("evidence slot {slot} out of range")));
                }
                outs.push(report.profile.get(slot));
            }
            outs.sort();
            outs.dedup();
            if outs.len() != *count {
                return Err(Error::Integrity("distinct-output count does not match".into()));
            }
            if !all_pinned {
                return Ok(WitnessVerdict::Failed(
                    "a safe area is not the singleton of its own input".into(),
                ));
            }
            if (*k as u64) >= bound {
                return Ok(WitnessVerdict::Failed("k is not below min(m, n)".into()));
            }
            if *count <= *k {
                return Ok(WitnessVerdict::Failed("not enough distinct pinned outputs".into()));
            }
            Ok(WitnessVerdict::Verified)
        }
        WitnessTask::Approx { eps, metric } => {
            let bound = approx_threshold(report.cycle_len, report.min_block, *metric);
            if report.threshold != bound {
                return Err(Error::Integrity("threshold does not match the cycle shape".into()));
            }
            let WitnessEvidence::Distance { slots: (i, j), distance } = &report.evidence else {
                return Err(Error::Integrity("approximate witness needs distance evidence".into()));
            };
            if *i >= report.profile.len() || *j >= report.profile.len() {
                return Err(Error::Integrity("evidence slots out of range".into()));
            }
            let measured = metrics::distance(*metric, report.profile.get(*i), report.profile.get(*j))?;
            if measured != *distance {
                return Err(Error::Integrity("recorded distance does not match measurement".into()));
            }
            if rots.get(*i) != Some(&0) || rots.get(*j) != Some(&(report.cycle_len / 2)) {
                return Err(Error::Integrity(
                    "evidence slots are not the half-cycle rotation pair".into(),
                ));
            }
            if !all_pinned {
                return Ok(WitnessVerdict::Failed(
                    "a safe area is not the singleton of its own input".into(),
                ));
            }
            if *eps >= Rational64::from_integer(bound as i64) {
                return Ok(WitnessVerdict::Failed(
                    "eps is not strictly below the threshold".into(),
                ));
            }
            if Rational64::from_integer(*distance as i64) <= *eps {
                return Ok(WitnessVerdict::Failed("pinned distance does not exceed eps".into()));
            }
            Ok(WitnessVerdict::Verified)
        }
    }
}

fn ratio_string(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl WitnessReport {
    /// JSON form with 1-based slot identities and serialized preferences.
    pub fn to_json(&self) -> Value {
        let task = match &self.params.task {
            WitnessTask::KSet { k } => json!({ "kind": "kset", "k": k }),
            WitnessTask::Approx { eps, metric } => json!({
                "kind": "approx",
                "eps": ratio_string(*eps),
                "metric": metric.to_string(),
            }),
        };
        let witness = match &self.evidence {
            WitnessEvidence::DistinctDecisions { slots, count } => json!({
                "slots": slots.iter().map(|s| s + 1).collect::<Vec<_>>(),
                "distinct": count,
            }),
            WitnessEvidence::Distance { slots: (i, j), distance } => json!({
                "slots": [i + 1, j + 1],
                "distance": distance,
            }),
        };
        json!({
            "params": {
                "n": self.params.system.n(),
                "t": self.params.system.t(),
                "synchrony": self.params.synchrony.to_string(),
                "m": self.params.m,
                "task": task,
            },
            "j": self.cycle_len,
            "ell": self.min_block,
            "delta": ratio_string(self.delta),
            "delta_form_bound": self.delta_form_bound.map(ratio_string),
            "blocks": self.blocks.to_string(),
            "threshold": self.threshold,
            "profile": self.profile.entries().iter().map(format_default).collect::<Vec<_>>(),
            "safe_areas": self
                .safe_areas
                .iter()
                .map(|area| area.iter().map(format_default).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "witness": witness,
            "verdict": match &self.verdict {
                WitnessVerdict::Verified => "verified".to_string(),
                WitnessVerdict::Failed(reason) => format!("failed: {reason}"),
            },
        })
    }
}

impl WitnessOutcome {
    pub fn to_json(&self) -> Value {
        match self {
            WitnessOutcome::Report(report) => {
                json!({ "outcome": "report", "report": report.to_json() })
            }
            WitnessOutcome::NotApplicable { precondition } => {
                json!({ "outcome": "not-applicable", "precondition": precondition })
            }
        }
    }
}
