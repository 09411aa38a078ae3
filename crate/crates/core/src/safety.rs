//! Unanimity sets and safe areas.
//!
//! The unanimity set of a collection of preferences is every output the
//! unanimity property still allows when exactly that collection is the
//! correct set. A process cannot know which of its peers are correct, so
//! the outputs genuinely available to it form the *safe area*: the
//! intersection of unanimity sets over every large-enough subset of its
//! view that contains it.

use std::collections::BTreeSet;

use itertools::Itertools;

use crate::aggregation::{AggregationMap, PropertyCheck, UnanimityWitness};
use crate::cyclic::{self, SystemParams, Synchrony};
use crate::error::{Error, Result};
use crate::prefs::{Domain, Preference, Profile};

/// Largest indexed set `safe_area` will enumerate subsets of.
pub const SAFE_AREA_MAX_PARTICIPANTS: usize = 10;

/// Ordered pairs `(a, b)` that an output must rank `a ≻ b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl ConstraintSet {
    /// The pairs ranked strictly the same way by every member.
    ///
    /// With no members every ordered pair is vacuously unanimous, which
    /// makes the set inconsistent for `m >= 2`.
    pub fn unanimous_pairs(members: &[Preference], m: usize) -> ConstraintSet {
        assert!(
            members.iter().all(|p| p.m() == m),
            "constraint extraction needs a common alternative set"
        );
        let mut pairs = BTreeSet::new();
        for a in 0..m {
            for b in 0..m {
                if a != b && members.iter().all(|r| r.strictly_prefers(a, b)) {
                    pairs.insert((a, b));
                }
            }
        }
        ConstraintSet { pairs }
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    /// True when some pair is required in both directions.
    pub fn is_inconsistent(&self) -> bool {
        self.pairs.iter().any(|&(a, b)| self.pairs.contains(&(b, a)))
    }

    pub fn admits(&self, s: &Preference) -> bool {
        self.pairs.iter().all(|&(a, b)| s.strictly_prefers(a, b))
    }
}

/// Members of `w_o` consistent with every pair on which `members` are
/// strictly unanimous.
pub fn unanimity_set(members: &[Preference], w_o: &Domain) -> Vec<Preference> {
    let constraints = ConstraintSet::unanimous_pairs(members, w_o.m());
    w_o.members().iter().filter(|s| constraints.admits(s)).cloned().collect()
}

/// The safe area of the indexed set `members` with respect to the member
/// at `self_pos`: the intersection of unanimity sets over all subsets of
/// size `|members| - t` containing `self_pos`.
pub fn safe_area(
    members: &[Preference],
    self_pos: usize,
    t: usize,
    w_o: &Domain,
) -> Result<Vec<Preference>> {
    let j = members.len();
    if j > SAFE_AREA_MAX_PARTICIPANTS {
        return Err(Error::Capacity(format!(
            "safe areas are enumerated for at most {SAFE_AREA_MAX_PARTICIPANTS} participants, got {j}"
        )));
    }
    if j <= t {
        return Err(Error::Argument(format!(
            "safe area needs more participants than faults, got {j} participants with t={t}"
        )));
    }
    if self_pos >= j {
        return Err(Error::Argument(format!("position {self_pos} is outside the indexed set")));
    }
    let subset_size = j - t;
    let others: Vec<usize> = (0..j).filter(|&p| p != self_pos).collect();
    let mut area: Option<Vec<Preference>> = None;
    for rest in others.iter().combinations(subset_size - 1) {
        let subset: Vec<Preference> = std::iter::once(self_pos)
            .chain(rest.into_iter().copied())
            .map(|p| members[p].clone())
            .collect();
        let allowed = unanimity_set(&subset, w_o);
        area = Some(match area {
            None => allowed,
            Some(current) => current.into_iter().filter(|s| allowed.contains(s)).collect(),
        });
    }
    Ok(area.expect("at least one qualifying subset exists"))
}

/// [`safe_area`] with the fault bound capped at `|members| - 1`, so a
/// constraining subset always exists. For views larger than `t` this is
/// the plain safe area; for views of at most `t` participants it
/// degenerates to the unanimity set of the member's own preference,
/// which is exactly what unanimity still guarantees in that regime.
pub fn safe_area_clamped(
    members: &[Preference],
    self_pos: usize,
    t: usize,
    w_o: &Domain,
) -> Result<Vec<Preference>> {
    let capped = t.min(members.len().saturating_sub(1));
    safe_area(members, self_pos, capped, w_o)
}

/// `u`-unanimity of an aggregation map: whenever at least `u` input
/// slots rank `a ≻ b`, every one of *those* slots' outputs ranks `a ≻ b`.
pub fn check_u_unanimity(map: &AggregationMap, u: i64) -> PropertyCheck<UnanimityWitness> {
    let m = map.input_domain().m();
    for (input, output) in map.rows() {
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                let agreeing: Vec<usize> = (0..map.n_slots())
                    .filter(|&i| input.get(i).strictly_prefers(a, b))
                    .collect();
                if (agreeing.len() as i64) < u {
                    continue;
                }
                for &slot in &agreeing {
                    if !output.get(slot).strictly_prefers(a, b) {
                        return PropertyCheck::Violated(UnanimityWitness {
                            profile: input,
                            a,
                            b,
                            slot,
                        });
                    }
                }
            }
        }
    }
    PropertyCheck::Satisfied
}

/// A slot whose safe area differs from the singleton of its own input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicSafeViolation {
    pub slot: usize,
    pub safe_area: Vec<Preference>,
    pub expected: Vec<Preference>,
}

/// Outcome of checking that a cyclic profile pins every safe area.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicSafeOutcome {
    /// The recognized cycle length.
    pub k: usize,
    pub check: PropertyCheck<CyclicSafeViolation>,
}

/// Verifies that a profile recognized as cyclic has
/// `safe_area(R, i, t) = {R_i} ∩ W_O` at every slot.
pub fn verify_cyclic_safe(
    profile: &Profile,
    params: SystemParams,
    synchrony: Synchrony,
    w_o: &Domain,
) -> Result<CyclicSafeOutcome> {
    let k = cyclic::in_cyclic_family(profile, params, synchrony)?.ok_or_else(|| {
        Error::Argument("profile is not in the cyclic family for these parameters".into())
    })?;
    for slot in 0..profile.len() {
        let area = safe_area(profile.entries(), slot, params.t(), w_o)?;
        let own = profile.get(slot);
        let expected: Vec<Preference> =
            if w_o.contains(own) { vec![own.clone()] } else { Vec::new() };
        if area != expected {
            return Ok(CyclicSafeOutcome {
                k,
                check: PropertyCheck::Violated(CyclicSafeViolation {
                    slot,
                    safe_area: area,
                    expected,
                }),
            });
        }
    }
    Ok(CyclicSafeOutcome { k, check: PropertyCheck::Satisfied })
}
