//! Aggregation maps and their Arrovian property checkers.
//!
//! An [`AggregationMap`] is a total function from input profiles over a
//! finite input domain to output profiles, materialized as an explicit
//! table so every checker can sweep the whole input space. Single-output
//! maps that are independent of irrelevant alternatives admit a compact
//! *pair-table* form ([`PairTableSwf`]) which is what the exhaustive
//! dictatorship verifier enumerates at the `n = 2`, `m = 3` scale.

use std::collections::{BTreeSet, HashMap};

use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind};
use crate::prefs::{enumerate_strict, enumerate_weak, Domain, Preference, Profile};

/// Largest explicit table an [`AggregationMap`] will materialize.
pub const MAP_TABLE_CAP: usize = 250_000;

/// Outcome of a property check, carrying a concrete counterexample on
/// failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyCheck<W> {
    Satisfied,
    Violated(W),
}

impl<W> PropertyCheck<W> {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, PropertyCheck::Satisfied)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            PropertyCheck::Satisfied => None,
            PropertyCheck::Violated(w) => Some(w),
        }
    }
}

/// A pair `(a, b)` ranked `a ≻ b` by every input slot but not by some
/// output slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnanimityWitness {
    pub profile: Profile,
    pub a: usize,
    pub b: usize,
    pub slot: usize,
}

/// Two profiles agreeing on the pair `{a, b}` whose outputs differ there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IiaWitness {
    pub a: usize,
    pub b: usize,
    pub first: Profile,
    pub second: Profile,
}

/// An input profile whose output has more than `k` distinct entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KSetWitness {
    pub profile: Profile,
    pub distinct: usize,
}

/// An input profile whose output entries are further apart than allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementWitness {
    pub profile: Profile,
    pub slots: (usize, usize),
    pub distance: u64,
}

/// Maps every output slot to the input slot whose strict rankings it
/// always reproduces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DictatorAssignment {
    pub delta: Vec<usize>,
}

/// The space `W^slots` of input profiles, indexed lexicographically with
/// slot 0 most significant.
#[derive(Debug, Clone)]
pub struct ProfileSpace {
    domain: Domain,
    slots: usize,
    count: usize,
}

impl ProfileSpace {
    pub fn new(domain: Domain, slots: usize) -> Result<Self> {
        if slots == 0 {
            return Err(Error::Argument("a profile space needs at least one slot".into()));
        }
        if domain.is_empty() {
            return Err(Error::Argument("a profile space needs a non-empty domain".into()));
        }
        let mut count = 1usize;
        for _ in 0..slots {
            count = count
                .checked_mul(domain.len())
                .filter(|&c| c <= MAP_TABLE_CAP)
                .ok_or_else(|| {
                    Error::Capacity(format!(
                        "profile space |W|^n = {}^{} exceeds the sweep cap {MAP_TABLE_CAP}",
                        domain.len(),
                        slots
                    ))
                })?;
        }
        Ok(ProfileSpace { domain, slots, count })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn profile(&self, index: usize) -> Profile {
        assert!(index < self.count, "profile index out of range");
        let base = self.domain.len();
        let mut entries = vec![self.domain.members()[0].clone(); self.slots];
        let mut rest = index;
        for slot in (0..self.slots).rev() {
            entries[slot] = self.domain.members()[rest % base].clone();
            rest /= base;
        }
        Profile::new(entries).expect("members share one alternative set")
    }

    pub fn index_of(&self, profile: &Profile) -> Option<usize> {
        if profile.len() != self.slots {
            return None;
        }
        let mut index = 0usize;
        for entry in profile.entries() {
            index = index * self.domain.len() + self.domain.index_of(entry)?;
        }
        Some(index)
    }

    pub fn iter(&self) -> impl Iterator<Item = Profile> + '_ {
        (0..self.count).map(|i| self.profile(i))
    }
}

/// A total map from `W_I^n` to `W_O^n`, stored as an explicit table.
#[derive(Debug, Clone)]
pub struct AggregationMap {
    space: ProfileSpace,
    w_o: Domain,
    table: Vec<Profile>,
}

impl AggregationMap {
    /// Materializes the table of `f` over the whole input space,
    /// validating that every output lands in `W_O`.
    pub fn from_fn(
        w_i: Domain,
        w_o: Domain,
        n_slots: usize,
        mut f: impl FnMut(&Profile) -> Result<Profile>,
    ) -> Result<Self> {
        let space = ProfileSpace::new(w_i, n_slots)?;
        let mut table = Vec::with_capacity(space.len());
        for input in space.iter() {
            let output = f(&input)?;
            if output.len() != n_slots {
                return Err(Error::Argument(format!(
                    "output profile has {} entries, expected {n_slots}",
                    output.len()
                )));
            }
            for entry in output.entries() {
                if !w_o.contains(entry) {
                    return Err(Error::Argument(format!(
                        "output {entry} is not a member of the output domain"
                    )));
                }
            }
            table.push(output);
        }
        Ok(AggregationMap { space, w_o, table })
    }

    /// `F(R) = R`.
    pub fn identity(w: Domain, n_slots: usize) -> Result<Self> {
        AggregationMap::from_fn(w.clone(), w, n_slots, |r| Ok(r.clone()))
    }

    /// Every output slot copies input slot `source`.
    pub fn projection(w: Domain, n_slots: usize, source: usize) -> Result<Self> {
        if source >= n_slots {
            return Err(Error::Argument(format!("source slot {source} out of range")));
        }
        AggregationMap::from_fn(w.clone(), w, n_slots, |r| {
            Profile::new(vec![r.get(source).clone(); n_slots])
        })
    }

    /// Ignores the input and returns `out` everywhere.
    pub fn constant(w_i: Domain, w_o: Domain, out: Profile) -> Result<Self> {
        let n_slots = out.len();
        AggregationMap::from_fn(w_i, w_o, n_slots, |_| Ok(out.clone()))
    }

    pub fn n_slots(&self) -> usize {
        self.space.slots()
    }

    pub fn input_domain(&self) -> &Domain {
        self.space.domain()
    }

    pub fn output_domain(&self) -> &Domain {
        &self.w_o
    }

    pub fn input_space(&self) -> &ProfileSpace {
        &self.space
    }

    pub fn evaluate(&self, input: &Profile) -> Result<&Profile> {
        let index = self
            .space
            .index_of(input)
            .ok_or_else(|| Error::Argument(format!("profile {input} is not in the input space")))?;
        Ok(&self.table[index])
    }

    /// All `(input, output)` rows in index order.
    pub fn rows(&self) -> impl Iterator<Item = (Profile, &Profile)> + '_ {
        self.space.iter().zip(self.table.iter())
    }

    /// Unanimity: a pair ranked strictly by every input slot must be
    /// ranked the same way by every output slot.
    pub fn check_unanimity(&self) -> PropertyCheck<UnanimityWitness> {
        let m = self.space.domain().m();
        for (input, output) in self.rows() {
            for a in 0..m {
                for b in 0..m {
                    if a == b || !input.entries().iter().all(|r| r.strictly_prefers(a, b)) {
                        continue;
                    }
                    for slot in 0..self.n_slots() {
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

    /// Independence of irrelevant alternatives: the outputs' order on any
    /// pair depends only on the inputs' orders on that pair.
    pub fn check_iia(&self) -> PropertyCheck<IiaWitness> {
        let m = self.space.domain().m();
        for a in 0..m {
            for b in (a + 1)..m {
                let keep = [a, b];
                let mut seen: HashMap<Vec<Preference>, (Profile, Vec<Preference>)> = HashMap::new();
                for (input, output) in self.rows() {
                    let in_sig: Vec<Preference> = input
                        .entries()
                        .iter()
                        .map(|r| r.restrict(&keep).expect("pair restriction"))
                        .collect();
                    let out_sig: Vec<Preference> = output
                        .entries()
                        .iter()
                        .map(|r| r.restrict(&keep).expect("pair restriction"))
                        .collect();
                    match seen.get(&in_sig) {
                        None => {
                            seen.insert(in_sig, (input, out_sig));
                        }
                        Some((first, first_out)) if *first_out != out_sig => {
                            return PropertyCheck::Violated(IiaWitness {
                                a,
                                b,
                                first: first.clone(),
                                second: input,
                            });
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        PropertyCheck::Satisfied
    }

    /// At most `k` distinct entries in every output profile.
    pub fn check_k_set(&self, k: usize) -> Result<PropertyCheck<KSetWitness>> {
        if k < 1 {
            return Err(Error::Argument("k-set agreement needs k >= 1".into()));
        }
        for (input, output) in self.rows() {
            let distinct = output.distinct().len();
            if distinct > k {
                return Ok(PropertyCheck::Violated(KSetWitness { profile: input, distinct }));
            }
        }
        Ok(PropertyCheck::Satisfied)
    }

    /// Every output profile has diameter at most `eps` under `metric`.
    pub fn check_eps_agreement(
        &self,
        eps: Rational64,
        metric: MetricKind,
    ) -> Result<PropertyCheck<AgreementWitness>> {
        if self.w_o.members().iter().any(|p| !p.is_strict()) {
            return Err(Error::Domain(
                "approximate agreement needs a strict output domain".into(),
            ));
        }
        for (input, output) in self.rows() {
            for i in 0..output.len() {
                for j in (i + 1)..output.len() {
                    let d = metrics::distance(metric, output.get(i), output.get(j))?;
                    if Rational64::from_integer(d as i64) > eps {
                        return Ok(PropertyCheck::Violated(AgreementWitness {
                            profile: input,
                            slots: (i, j),
                            distance: d,
                        }));
                    }
                }
            }
        }
        Ok(PropertyCheck::Satisfied)
    }

    fn is_decisive(&self, set: &BTreeSet<usize>) -> bool {
        let m = self.space.domain().m();
        for (input, output) in self.rows() {
            for a in 0..m {
                for b in 0..m {
                    if a == b || !set.iter().all(|&i| input.get(i).strictly_prefers(a, b)) {
                        continue;
                    }
                    if !output.entries().iter().all(|o| o.strictly_prefers(a, b)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All inclusion-minimal decisive sets of input slots.
    pub fn find_decisive_sets(&self) -> Vec<BTreeSet<usize>> {
        let n = self.n_slots();
        let mut decisive: Vec<BTreeSet<usize>> = Vec::new();
        for mask in 1u32..(1 << n) {
            let set: BTreeSet<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            if self.is_decisive(&set) {
                decisive.push(set);
            }
        }
        decisive
            .iter()
            .filter(|s| !decisive.iter().any(|other| other.len() < s.len() && other.is_subset(s)))
            .cloned()
            .collect()
    }

    /// True when some decisive set has size at most `k`.
    pub fn is_k_dictatorship(&self, k: usize) -> bool {
        self.find_decisive_sets().iter().any(|s| s.len() <= k)
    }

    /// For each output slot, the unique input slot whose strict pairs are
    /// always reproduced there.
    pub fn coordinate_dictators(&self) -> Result<DictatorAssignment> {
        let m = self.space.domain().m();
        let n = self.n_slots();
        let mut delta = Vec::with_capacity(n);
        for j in 0..n {
            let mut candidates = Vec::new();
            'candidate: for i in 0..n {
                for (input, output) in self.rows() {
                    for a in 0..m {
                        for b in 0..m {
                            if a != b
                                && input.get(i).strictly_prefers(a, b)
                                && !output.get(j).strictly_prefers(a, b)
                            {
                                continue 'candidate;
                            }
                        }
                    }
                }
                candidates.push(i);
            }
            match candidates.as_slice() {
                [single] => delta.push(*single),
                [] => {
                    return Err(Error::Verification(format!(
                        "output slot {j} has no coordinate dictator"
                    )))
                }
                many => {
                    return Err(Error::Verification(format!(
                        "output slot {j} has {} coordinate dictators (trivial input domain?)",
                        many.len()
                    )))
                }
            }
        }
        Ok(DictatorAssignment { delta })
    }
}

/// Relative order of an (ordered) pair of alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairOrder {
    FirstOverSecond,
    SecondOverFirst,
    Tied,
}

fn pair_list(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            pairs.push((a, b));
        }
    }
    pairs
}

/// A single-output aggregation rule in pair-table form: for every
/// unordered pair of alternatives, a table from the tuple of per-slot
/// strict pair orders (slot `i` contributes bit `i`, set when the second
/// alternative wins) to an output pair order. Such rules are independent
/// of irrelevant alternatives by construction; they define a valid
/// social-welfare function only if the induced relation is a weak order
/// on every input profile, which [`PairTableSwf::output_on`] checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairTableSwf {
    n_slots: usize,
    m: usize,
    tables: Vec<Vec<PairOrder>>,
}

impl PairTableSwf {
    pub fn new(n_slots: usize, m: usize, tables: Vec<Vec<PairOrder>>) -> Result<Self> {
        let pairs = m * (m - 1) / 2;
        if tables.len() != pairs || tables.iter().any(|t| t.len() != 1 << n_slots) {
            return Err(Error::Argument(format!(
                "pair tables must have shape {pairs} x {}",
                1 << n_slots
            )));
        }
        Ok(PairTableSwf { n_slots, m, tables })
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// The output preference on a strict input profile, or `None` when
    /// the induced pairwise relation is not a weak order.
    pub fn output_on(&self, profile: &Profile) -> Result<Option<Preference>> {
        if profile.len() != self.n_slots || profile.m() != self.m {
            return Err(Error::Argument("profile shape does not match the pair tables".into()));
        }
        if !profile.is_strict() {
            return Err(Error::Domain("pair-table rules take strict inputs".into()));
        }
        let pairs = pair_list(self.m);
        let orders: Vec<PairOrder> = pairs
            .iter()
            .enumerate()
            .map(|(pidx, &(a, b))| {
                let mut combo = 0usize;
                for slot in 0..self.n_slots {
                    if profile.get(slot).strictly_prefers(b, a) {
                        combo |= 1 << slot;
                    }
                }
                self.tables[pidx][combo]
            })
            .collect();
        // Candidate levels: the number of alternatives strictly above each
        // one. In a genuine weak order this reconstructs the levels; the
        // verification pass below rejects everything else.
        let mut above = vec![0usize; self.m];
        for (pidx, &(a, b)) in pairs.iter().enumerate() {
            match orders[pidx] {
                PairOrder::FirstOverSecond => above[b] += 1,
                PairOrder::SecondOverFirst => above[a] += 1,
                PairOrder::Tied => {}
            }
        }
        let candidate = Preference::from_levels(&above)?;
        for (pidx, &(a, b)) in pairs.iter().enumerate() {
            let consistent = match orders[pidx] {
                PairOrder::FirstOverSecond => candidate.strictly_prefers(a, b),
                PairOrder::SecondOverFirst => candidate.strictly_prefers(b, a),
                PairOrder::Tied => {
                    !candidate.strictly_prefers(a, b) && !candidate.strictly_prefers(b, a)
                }
            };
            if !consistent {
                return Ok(None);
            }
        }
        Ok(Some(candidate))
    }

    /// The full output table over `w_i^n_slots`, or `None` if any profile
    /// induces an invalid relation.
    pub fn output_table(&self, w_i: &Domain) -> Result<Option<Vec<Preference>>> {
        let space = ProfileSpace::new(w_i.clone(), self.n_slots)?;
        let mut outputs = Vec::with_capacity(space.len());
        for profile in space.iter() {
            match self.output_on(&profile)? {
                Some(out) => outputs.push(out),
                None => return Ok(None),
            }
        }
        Ok(Some(outputs))
    }

    /// The consensus aggregation map that decides this rule's output in
    /// every output slot.
    pub fn consensus_map(&self, w_i: &Domain, w_o: &Domain) -> Result<AggregationMap> {
        let n = self.n_slots;
        AggregationMap::from_fn(w_i.clone(), w_o.clone(), n, |profile| {
            match self.output_on(profile)? {
                Some(out) => Profile::new(vec![out; n]),
                None => Err(Error::Verification(format!(
                    "pair tables induce an invalid relation on {profile}"
                ))),
            }
        })
    }
}

/// Builds the product map whose output slot `j` applies `swfs[j]`.
pub fn product_map(swfs: &[&PairTableSwf], w_i: &Domain, w_o: &Domain) -> Result<AggregationMap> {
    let n = swfs.len();
    if n == 0 {
        return Err(Error::Argument("a product map needs at least one rule".into()));
    }
    if swfs.iter().any(|s| s.n_slots() != n || s.m() != w_i.m()) {
        return Err(Error::Argument("every rule must take n-slot profiles over W_I".into()));
    }
    AggregationMap::from_fn(w_i.clone(), w_o.clone(), n, |profile| {
        let entries = swfs
            .iter()
            .map(|swf| {
                swf.output_on(profile)?.ok_or_else(|| {
                    Error::Verification(format!(
                        "pair tables induce an invalid relation on {profile}"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Profile::new(entries)
    })
}

/// One rule surviving the exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct ArrowSurvivor {
    pub swf: PairTableSwf,
    pub consensus: AggregationMap,
}

/// Result of enumerating every pair-table rule at the base scale.
#[derive(Debug, Clone)]
pub struct ArrowEnumeration {
    /// Total number of candidate rules (all pair-table fillings).
    pub candidates: u64,
    /// Candidates whose tables respect unanimous pairs.
    pub unanimous: u64,
    /// Candidates that additionally induce a weak order on every profile.
    pub survivors: Vec<ArrowSurvivor>,
}

const ARROW_SLOTS: usize = 2;
const ARROW_M: usize = 3;

/// Exhaustively enumerates every single-output pair-table rule for two
/// slots over three alternatives (3 pairs, 4 input combos each, 3 output
/// orders: `3^12` candidates), keeping those that respect unanimity and
/// induce a weak order on all 36 strict input profiles.
pub fn enumerate_arrow_maps(n_slots: usize, m: usize) -> Result<ArrowEnumeration> {
    if n_slots != ARROW_SLOTS || m != ARROW_M {
        return Err(Error::Capacity(format!(
            "exhaustive rule enumeration is supported only at n = {ARROW_SLOTS}, m = {ARROW_M}"
        )));
    }
    let w_i = enumerate_strict(m)?;
    let w_o = enumerate_weak(m)?;
    let pairs = m * (m - 1) / 2;
    let cells = pairs * (1 << n_slots);
    let candidates = 3u64.pow(cells as u32);

    let decode = |index: u64| -> PairTableSwf {
        let mut tables = vec![vec![PairOrder::Tied; 1 << n_slots]; pairs];
        let mut rest = index;
        for table in tables.iter_mut() {
            for cell in table.iter_mut() {
                *cell = match rest % 3 {
                    0 => PairOrder::FirstOverSecond,
                    1 => PairOrder::SecondOverFirst,
                    _ => PairOrder::Tied,
                };
                rest /= 3;
            }
        }
        PairTableSwf::new(n_slots, m, tables).expect("decoded tables have the right shape")
    };

    let respects_unanimous_pairs = |swf: &PairTableSwf| {
        let everyone_second = (1usize << n_slots) - 1;
        swf.tables.iter().all(|t| {
            t[0] == PairOrder::FirstOverSecond && t[everyone_second] == PairOrder::SecondOverFirst
        })
    };

    let unanimous = (0..candidates)
        .into_par_iter()
        .filter(|&c| respects_unanimous_pairs(&decode(c)))
        .count() as u64;

    let surviving_indices: Vec<u64> = (0..candidates)
        .into_par_iter()
        .filter(|&c| {
            let swf = decode(c);
            respects_unanimous_pairs(&swf)
                && swf.output_table(&w_i).map(|t| t.is_some()).unwrap_or(false)
        })
        .collect();

    let survivors = surviving_indices
        .into_iter()
        .map(|c| {
            let swf = decode(c);
            let consensus = swf.consensus_map(&w_i, &w_o)?;
            Ok(ArrowSurvivor { swf, consensus })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ArrowEnumeration { candidates, unanimous, survivors })
}

/// Facts established about one product of surviving rules.
#[derive(Debug, Clone, Serialize)]
pub struct ProductMapReport {
    /// Which surviving rule feeds each output slot.
    pub assignment: Vec<usize>,
    pub unanimity: bool,
    pub iia: bool,
    pub consensus: bool,
    /// Passes `ε`-agreement for every integer `ε` below the strict-domain
    /// Kendall tau diameter.
    pub agrees_below_kt_diameter: bool,
    /// Same, below the Spearman footrule diameter.
    pub agrees_below_sf_diameter: bool,
    pub dictatorship: bool,
    pub dictators: Vec<usize>,
}

/// The checks behind the fault-free synchronous propositions: all
/// unanimity+IIA maps at base scale, with their agreement and
/// dictatorship verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct PerfectSyncReport {
    pub surviving_rules: usize,
    pub maps: Vec<ProductMapReport>,
}

/// Builds every unanimity+IIA aggregation map at the base scale as a
/// product of surviving single-output rules (one per output coordinate)
/// and records, for each, whether it satisfies consensus, approximate
/// agreement below the metric diameters, and dictatorship.
pub fn verify_perfect_sync_props() -> Result<PerfectSyncReport> {
    let enumeration = enumerate_arrow_maps(ARROW_SLOTS, ARROW_M)?;
    let w_i = enumerate_strict(ARROW_M)?;
    let w_o_weak = enumerate_weak(ARROW_M)?;
    let w_o_strict = w_i.clone();
    let kt_diam = metrics::diameter(&w_o_strict, MetricKind::Kt)?;
    let sf_diam = metrics::diameter(&w_o_strict, MetricKind::Sf)?;

    let rules: Vec<&PairTableSwf> = enumeration.survivors.iter().map(|s| &s.swf).collect();
    let mut maps = Vec::new();
    for first in 0..rules.len() {
        for second in 0..rules.len() {
            let map = product_map(&[rules[first], rules[second]], &w_i, &w_o_weak)?;
            let consensus = map.check_k_set(1)?.is_satisfied();
            // Outputs of surviving rules on strict inputs are strict here,
            // so the agreement checks can run against the strict domain.
            let strict_view =
                AggregationMap::from_fn(w_i.clone(), w_o_strict.clone(), ARROW_SLOTS, |profile| {
                    map.evaluate(profile).cloned()
                })?;
            let agrees = |metric: MetricKind, diam: u64| -> Result<bool> {
                for eps in 0..diam {
                    let check = strict_view
                        .check_eps_agreement(Rational64::from_integer(eps as i64), metric)?;
                    if !check.is_satisfied() {
                        return Ok(false);
                    }
                }
                Ok(true)
            };
            maps.push(ProductMapReport {
                assignment: vec![first, second],
                unanimity: map.check_unanimity().is_satisfied(),
                iia: map.check_iia().is_satisfied(),
                consensus,
                agrees_below_kt_diameter: agrees(MetricKind::Kt, kt_diam)?,
                agrees_below_sf_diameter: agrees(MetricKind::Sf, sf_diam)?,
                dictatorship: map.is_k_dictatorship(1),
                dictators: map.coordinate_dictators()?.delta,
            });
        }
    }
    Ok(PerfectSyncReport { surviving_rules: enumeration.survivors.len(), maps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prefs::{parse_default, parse_profile_default};

    fn l3() -> Domain {
        enumerate_strict(3).unwrap()
    }

    fn p3() -> Domain {
        enumerate_weak(3).unwrap()
    }

    #[test]
    fn profile_space_round_trips_indices() {
        let space = ProfileSpace::new(l3(), 2).unwrap();
        assert_eq!(space.len(), 36);
        for idx in 0..space.len() {
            let profile = space.profile(idx);
            assert_eq!(space.index_of(&profile), Some(idx));
        }
    }

    #[test]
    fn unanimity_examples() {
        let identity = AggregationMap::identity(l3(), 2).unwrap();
        assert!(identity.check_unanimity().is_satisfied());

        let proj = AggregationMap::projection(l3(), 2, 0).unwrap();
        assert!(proj.check_unanimity().is_satisfied());

        let out = parse_profile_default("0>1>2,0>1>2").unwrap();
        let constant = AggregationMap::constant(l3(), l3(), out).unwrap();
        match constant.check_unanimity() {
            PropertyCheck::Violated(w) => {
                // the witness really is unanimous on (a, b) yet flipped in slot w.slot
                assert!(w.profile.entries().iter().all(|r| r.strictly_prefers(w.a, w.b)));
                let output = constant.evaluate(&w.profile).unwrap();
                assert!(!output.get(w.slot).strictly_prefers(w.a, w.b));
            }
            PropertyCheck::Satisfied => panic!("constant map cannot be unanimous"),
        }
    }

    #[test]
    fn iia_examples() {
        let proj = AggregationMap::projection(l3(), 2, 0).unwrap();
        assert!(proj.check_iia().is_satisfied());

        // Borda-style positional rule: rank by total positional score.
        let borda = AggregationMap::from_fn(l3(), p3(), 2, |profile| {
            let m = profile.m();
            let mut score = vec![0usize; m];
            for r in profile.entries() {
                for a in 0..m {
                    score[a] += m - 1 - r.level(a);
                }
            }
            let top = *score.iter().max().unwrap();
            let levels: Vec<usize> = score.iter().map(|s| top - s).collect();
            let out = Preference::from_levels(&levels)?;
            Profile::new(vec![out; 2])
        })
        .unwrap();
        match borda.check_iia() {
            PropertyCheck::Violated(w) => {
                let keep = [w.a, w.b];
                let sig = |p: &Profile| -> Vec<Preference> {
                    p.entries().iter().map(|r| r.restrict(&keep).unwrap()).collect()
                };
                assert_eq!(sig(&w.first), sig(&w.second));
                let out_first = borda.evaluate(&w.first).unwrap();
                let out_second = borda.evaluate(&w.second).unwrap();
                assert_ne!(sig(out_first), sig(out_second));
            }
            PropertyCheck::Satisfied => panic!("positional rules are not IIA"),
        }
    }

    #[test]
    fn k_set_examples() {
        let identity = AggregationMap::identity(l3(), 2).unwrap();
        assert!(identity.check_k_set(2).unwrap().is_satisfied());
        match identity.check_k_set(1).unwrap() {
            PropertyCheck::Violated(w) => assert_eq!(w.distinct, 2),
            PropertyCheck::Satisfied => panic!("identity on two slots is not consensus"),
        }
        let out = parse_profile_default("0>1>2,0>1>2").unwrap();
        let constant = AggregationMap::constant(l3(), l3(), out).unwrap();
        assert!(constant.check_k_set(1).unwrap().is_satisfied());
        assert!(identity.check_k_set(0).is_err());
    }

    #[test]
    fn eps_agreement_examples() {
        let out = parse_profile_default("0>1>2,0>1>2").unwrap();
        let constant = AggregationMap::constant(l3(), l3(), out).unwrap();
        assert!(constant
            .check_eps_agreement(Rational64::from_integer(0), MetricKind::Kt)
            .unwrap()
            .is_satisfied());

        let identity = AggregationMap::identity(l3(), 2).unwrap();
        match identity
            .check_eps_agreement(Rational64::from_integer(2), MetricKind::Kt)
            .unwrap()
        {
            PropertyCheck::Violated(w) => assert_eq!(w.distance, 3),
            PropertyCheck::Satisfied => panic!("identity cannot 2-agree"),
        }

        let proj = AggregationMap::projection(l3(), 2, 1).unwrap();
        assert!(proj
            .check_eps_agreement(Rational64::from_integer(0), MetricKind::Sf)
            .unwrap()
            .is_satisfied());

        let weak_identity = AggregationMap::identity(p3(), 2).unwrap();
        assert!(weak_identity
            .check_eps_agreement(Rational64::from_integer(1), MetricKind::Kt)
            .is_err());
    }

    #[test]
    fn decisive_set_examples() {
        let proj = AggregationMap::projection(l3(), 2, 0).unwrap();
        let sets = proj.find_decisive_sets();
        assert_eq!(sets, vec![BTreeSet::from([0])]);
        assert!(proj.is_k_dictatorship(1));

        let identity = AggregationMap::identity(l3(), 2).unwrap();
        let sets = identity.find_decisive_sets();
        assert_eq!(sets, vec![BTreeSet::from([0, 1])]);
        assert!(!identity.is_k_dictatorship(1));
        assert!(identity.is_k_dictatorship(2));
    }

    #[test]
    fn coordinate_dictator_examples() {
        let w = l3();
        let proj_pair = AggregationMap::from_fn(w.clone(), w.clone(), 2, |r| {
            Profile::new(vec![r.get(0).clone(), r.get(1).clone()])
        })
        .unwrap();
        assert_eq!(proj_pair.coordinate_dictators().unwrap().delta, vec![0, 1]);

        let both_second = AggregationMap::projection(w.clone(), 2, 1).unwrap();
        assert_eq!(both_second.coordinate_dictators().unwrap().delta, vec![1, 1]);

        let out = parse_profile_default("0>1>2,0>1>2").unwrap();
        let constant = AggregationMap::constant(w, l3(), out).unwrap();
        assert!(constant.coordinate_dictators().is_err());
    }

    #[test]
    fn pair_table_rule_reconstructs_weak_orders() {
        // The rule copying slot 0 is realizable as pair tables.
        let tables = vec![
            vec![
                PairOrder::FirstOverSecond,
                PairOrder::SecondOverFirst,
                PairOrder::FirstOverSecond,
                PairOrder::SecondOverFirst,
            ];
            3
        ];
        let swf = PairTableSwf::new(2, 3, tables).unwrap();
        let profile = parse_profile_default("1>2>0,0>1>2").unwrap();
        assert_eq!(swf.output_on(&profile).unwrap(), Some(parse_default("1>2>0").unwrap()));
        let consensus = swf.consensus_map(&l3(), &p3()).unwrap();
        assert!(consensus.check_iia().is_satisfied());
        assert!(consensus.check_unanimity().is_satisfied());
    }

    #[test]
    fn pair_table_rule_detects_invalid_relations() {
        // Tables that force 0 ≻ 1, 2 ≻ 0, and 1 ≻ 2 whenever the slots
        // disagree produce a cycle, which must be rejected.
        let cell = |disagree: PairOrder| {
            vec![PairOrder::FirstOverSecond, disagree, disagree, PairOrder::SecondOverFirst]
        };
        let tables = vec![
            cell(PairOrder::FirstOverSecond),  // {0,1}: 0 wins disagreements
            cell(PairOrder::SecondOverFirst),  // {0,2}: 2 wins disagreements
            cell(PairOrder::FirstOverSecond),  // {1,2}: 1 wins disagreements
        ];
        let swf = PairTableSwf::new(2, 3, tables).unwrap();
        let profile = parse_profile_default("0>1>2,2>0>1").unwrap();
        assert_eq!(swf.output_on(&profile).unwrap(), None);
        assert_eq!(swf.output_table(&l3()).unwrap(), None);
    }
}
