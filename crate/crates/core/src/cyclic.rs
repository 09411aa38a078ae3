//! Cyclic preference lists, equitable slot assignments, and cyclic profiles.
//!
//! A `k`-cyclic preference list fixes an ordered partition of the
//! alternatives into `k` blocks, each with an internal strict order, and
//! rotates the block sequence: the `j`-th list member ranks block `j`
//! first, then `j+1`, wrapping around. Distributing such a list equitably
//! over process slots yields profiles whose safe areas collapse to
//! singletons, which is what makes them useful as impossibility witnesses.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::{Preference, Profile, STRICT_ENUMERATION_CAP};

/// Communication model of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Synchrony {
    Sync,
    Async,
}

impl fmt::Display for Synchrony {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Synchrony::Sync => "sync",
            Synchrony::Async => "async",
        })
    }
}

impl FromStr for Synchrony {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sync" => Ok(Synchrony::Sync),
            "async" => Ok(Synchrony::Async),
            other => Err(Error::Argument(format!(
                "unknown synchrony {other:?} (expected sync or async)"
            ))),
        }
    }
}

/// Process count and crash-fault bound, with `1 <= t < n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemParams {
    n: usize,
    t: usize,
}

impl SystemParams {
    pub fn new(n: usize, t: usize) -> Result<Self> {
        if t < 1 || t >= n {
            return Err(Error::Argument(format!(
                "fault bound must satisfy 1 <= t < n, got n={n}, t={t}"
            )));
        }
        Ok(SystemParams { n, t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of process slots participating in canonical executions:
    /// all `n` under synchrony, the `n - t` never-crashed ones otherwise.
    pub fn participants(&self, synchrony: Synchrony) -> usize {
        match synchrony {
            Synchrony::Sync => self.n,
            Synchrony::Async => self.n - self.t,
        }
    }
}

/// An ordered partition of the alternatives into nonempty blocks; the
/// order *within* each block is its internal strict preference, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    /// Validates that `blocks` partitions `0..m` where `m` is the total
    /// number of listed alternatives.
    pub fn from_blocks(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Argument("a block partition needs at least one block".into()));
        }
        let m: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; m];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::Argument("blocks must be non-empty".into()));
            }
            for &a in block {
                if a >= m {
                    return Err(Error::Argument(format!(
                        "alternative {a} out of range for m={m}"
                    )));
                }
                if seen[a] {
                    return Err(Error::Argument(format!("alternative {a} appears twice")));
                }
                seen[a] = true;
            }
        }
        Ok(BlockPartition { blocks })
    }

    /// One alternative per block, in index order.
    pub fn singletons(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("m must be at least 1".into()));
        }
        BlockPartition::from_blocks((0..m).map(|a| vec![a]).collect())
    }

    /// Parses the textual form `"0,1|2,3"`: blocks separated by `|`,
    /// alternatives within a block (best first) separated by `,`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        for part in text.split('|') {
            let mut block = Vec::new();
            for token in part.split(',') {
                let token = token.trim();
                if token.is_empty() {
                    return Err(Error::Argument(format!("empty alternative in blocks {text:?}")));
                }
                block.push(token.parse::<usize>().map_err(|_| {
                    Error::Argument(format!("invalid alternative {token:?} in blocks"))
                })?);
            }
            blocks.push(block);
        }
        BlockPartition::from_blocks(blocks)
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks (the cycle length `k`).
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Total number of alternatives.
    pub fn m(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Size of the smallest block.
    pub fn min_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// The internal order of block `i` as a preference over that block's
    /// alternatives (index `j` of the result is the `j`-th smallest member).
    pub fn block_order(&self, i: usize) -> Preference {
        let block = &self.blocks[i];
        let mut sorted = block.clone();
        sorted.sort_unstable();
        let levels: Vec<usize> = sorted
            .iter()
            .map(|a| block.iter().position(|b| b == a).expect("member of block"))
            .collect();
        Preference::from_levels(&levels).expect("block order is valid")
    }
}

impl fmt::Display for BlockPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, a) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
        }
        Ok(())
    }
}

/// The `k` rotations of a block partition: member `j` ranks blocks
/// `j, j+1, ..., k-1, 0, ..., j-1`, each internally ordered.
pub fn cyclic_preference_list(bp: &BlockPartition) -> Vec<Preference> {
    let k = bp.k();
    (0..k)
        .map(|j| {
            let order: Vec<usize> = (0..k)
                .flat_map(|off| bp.blocks()[(j + off) % k].iter().copied())
                .collect();
            Preference::strict_from_order(&order).expect("rotation is a permutation")
        })
        .collect()
}

/// Round-robin equitable partition of `0..slots` into `k` classes:
/// slot `j` joins class `j mod k`. Class sizes differ by at most one;
/// classes may be empty when `k > slots`.
pub fn equitable_partition(slots: usize, k: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); k];
    for j in 0..slots {
        classes[j % k].push(j);
    }
    classes
}

/// The profile assigning rotation `j mod k` of the cyclic list to slot `j`.
pub fn cyclic_profile(bp: &BlockPartition, slots: usize) -> Result<Profile> {
    if slots == 0 {
        return Err(Error::Argument("a profile needs at least one slot".into()));
    }
    let list = cyclic_preference_list(bp);
    Profile::new((0..slots).map(|j| list[j % list.len()].clone()).collect())
}

/// Test utility: the round-robin profile with its slots permuted by a
/// seeded shuffle. The rotation multiset is unchanged, so the result is
/// still an equitably assigned cyclic profile.
pub fn shuffled_cyclic_profile(bp: &BlockPartition, slots: usize, seed: u64) -> Result<Profile> {
    let base = cyclic_profile(bp, slots)?;
    let mut entries: Vec<Preference> = base.entries().to_vec();
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = move || {
        // splitmix64
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    for i in (1..entries.len()).rev() {
        entries.swap(i, (next() % (i as u64 + 1)) as usize);
    }
    Profile::new(entries)
}

/// Searches for the least `k` with `ceil(participants/t) <= k <= m` such
/// that the profile is a `k`-cyclic profile under *some* block partition
/// and *some* equitable slot assignment. Returns `None` when no such `k`
/// exists.
pub fn in_cyclic_family(
    profile: &Profile,
    params: SystemParams,
    synchrony: Synchrony,
) -> Result<Option<usize>> {
    let slots = params.participants(synchrony);
    if profile.len() != slots {
        return Err(Error::Argument(format!(
            "profile has {} entries but the model has {} participants",
            profile.len(),
            slots
        )));
    }
    let m = profile.m();
    if m > STRICT_ENUMERATION_CAP {
        return Err(Error::Capacity(format!(
            "cyclic recognition supports m <= {STRICT_ENUMERATION_CAP}, got {m}"
        )));
    }
    if !profile.is_strict() {
        return Ok(None);
    }
    let k_min = slots.div_ceil(params.t()).max(1);
    for k in k_min..=m {
        if is_k_cyclic(profile, k) {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

fn is_k_cyclic(profile: &Profile, k: usize) -> bool {
    let m = profile.m();
    if k > m {
        return false;
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut found = false;
    permute_until(&mut order, 0, &mut |perm| {
        compositions(m, k, &mut |cuts| {
            if found {
                return;
            }
            let mut blocks = Vec::with_capacity(k);
            let mut start = 0;
            for &len in cuts {
                blocks.push(perm[start..start + len].to_vec());
                start += len;
            }
            let bp = BlockPartition::from_blocks(blocks).expect("segments partition the set");
            if matches_cyclic_list(profile, &cyclic_preference_list(&bp)) {
                found = true;
            }
        });
        found
    });
    found
}

fn matches_cyclic_list(profile: &Profile, list: &[Preference]) -> bool {
    let k = list.len();
    let slots = profile.len();
    let mut counts = vec![0usize; k];
    for entry in profile.entries() {
        match list.iter().position(|r| r == entry) {
            Some(i) => counts[i] += 1,
            None => return false,
        }
    }
    let lo = slots / k;
    let hi = slots.div_ceil(k);
    counts.iter().all(|&c| c == lo || c == hi)
}

// Visits permutations until the visitor reports success.
fn permute_until(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if at == items.len() {
        return visit(items);
    }
    for i in at..items.len() {
        items.swap(at, i);
        let done = permute_until(items, at + 1, visit);
        items.swap(at, i);
        if done {
            return true;
        }
    }
    false
}

// Visits all compositions of `total` into `parts` positive summands.
fn compositions(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(remaining: usize, parts: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if parts == 1 {
            if remaining >= 1 {
                current.push(remaining);
                visit(current);
                current.pop();
            }
            return;
        }
        for first in 1..=remaining.saturating_sub(parts - 1) {
            current.push(first);
            rec(remaining - first, parts - 1, current, visit);
            current.pop();
        }
    }
    if parts >= 1 {
        let mut current = Vec::with_capacity(parts);
        rec(total, parts, &mut current, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::kendall_tau;
    use crate::prefs::{parse_default, parse_profile_default};

    #[test]
    fn participants_examples() {
        let p = SystemParams::new(5, 2).unwrap();
        assert_eq!(p.participants(Synchrony::Sync), 5);
        assert_eq!(p.participants(Synchrony::Async), 3);
        let q = SystemParams::new(2, 1).unwrap();
        assert_eq!(q.participants(Synchrony::Async), 1);
        assert!(SystemParams::new(3, 0).is_err());
        assert!(SystemParams::new(3, 3).is_err());
    }

    #[test]
    fn cyclic_list_singleton_blocks() {
        let bp = BlockPartition::singletons(3).unwrap();
        let list = cyclic_preference_list(&bp);
        let expected: Vec<_> = ["0>1>2", "1>2>0", "2>0>1"]
            .iter()
            .map(|s| parse_default(s).unwrap())
            .collect();
        assert_eq!(list, expected);
    }

    #[test]
    fn cyclic_list_degenerate_and_block_cases() {
        let single = BlockPartition::from_blocks(vec![vec![1, 0, 2]]).unwrap();
        assert_eq!(cyclic_preference_list(&single), vec![parse_default("1>0>2").unwrap()]);

        let bp = BlockPartition::parse("0,1|2,3").unwrap();
        let list = cyclic_preference_list(&bp);
        assert_eq!(
            list,
            vec![parse_default("0>1>2>3").unwrap(), parse_default("2>3>0>1").unwrap()]
        );
    }

    #[test]
    fn rotations_respect_block_orders() {
        for text in ["0|1|2", "0,1|2,3", "2,0|1|3", "3,1,0|2"] {
            let bp = BlockPartition::parse(text).unwrap();
            let list = cyclic_preference_list(&bp);
            for r in &list {
                for i in 0..bp.k() {
                    let mut subset = bp.blocks()[i].clone();
                    subset.sort_unstable();
                    assert_eq!(r.restrict(&subset).unwrap(), bp.block_order(i));
                }
            }
        }
    }

    #[test]
    fn equitable_partition_sizes() {
        let sizes =
            |slots, k| -> Vec<usize> { equitable_partition(slots, k).iter().map(Vec::len).collect() };
        assert_eq!(sizes(5, 3), vec![2, 2, 1]);
        assert_eq!(sizes(2, 3), vec![1, 1, 0]);
        assert_eq!(sizes(4, 2), vec![2, 2]);
    }

    #[test]
    fn cyclic_profile_examples() {
        let bp = BlockPartition::singletons(3).unwrap();
        assert_eq!(
            cyclic_profile(&bp, 3).unwrap(),
            parse_profile_default("0>1>2,1>2>0,2>0>1").unwrap()
        );
        assert_eq!(
            cyclic_profile(&bp, 4).unwrap(),
            parse_profile_default("0>1>2,1>2>0,2>0>1,0>1>2").unwrap()
        );
        let constant = BlockPartition::from_blocks(vec![vec![0, 1]]).unwrap();
        assert_eq!(
            cyclic_profile(&constant, 3).unwrap(),
            parse_profile_default("0>1,0>1,0>1").unwrap()
        );
    }

    #[test]
    fn recognizer_round_trips_the_rotation_profile() {
        let params = SystemParams::new(4, 1).unwrap();
        let bp = BlockPartition::singletons(3).unwrap();
        let profile = cyclic_profile(&bp, 3).unwrap();
        assert_eq!(in_cyclic_family(&profile, params, Synchrony::Async).unwrap(), Some(3));
    }

    #[test]
    fn recognizer_rejects_constant_profile_below_bound() {
        // k = 1 is below ceil(3/1) = 3, and no k in 3..=3 matches.
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1>2,0>1>2,0>1>2").unwrap();
        assert_eq!(in_cyclic_family(&profile, params, Synchrony::Sync).unwrap(), None);
    }

    #[test]
    fn recognizer_finds_reversal_pair() {
        let params = SystemParams::new(2, 1).unwrap();
        let profile = parse_profile_default("0>1,1>0").unwrap();
        assert_eq!(in_cyclic_family(&profile, params, Synchrony::Sync).unwrap(), Some(2));
    }

    #[test]
    fn recognizer_checks_length() {
        let params = SystemParams::new(3, 1).unwrap();
        let profile = parse_profile_default("0>1,1>0").unwrap();
        assert!(in_cyclic_family(&profile, params, Synchrony::Sync).is_err());
    }

    #[test]
    fn constructor_recognizer_round_trip_over_small_partitions() {
        // every constructed profile with k >= ceil(slots/t) is recognized
        for m in 2..=4usize {
            for text in partitions_with_small_blocks(m) {
                let bp = BlockPartition::parse(&text).unwrap();
                let k = bp.k();
                for slots in 2..=4usize {
                    for t in 1..=2usize {
                        if k < slots.div_ceil(t) || t + slots < 3 {
                            continue;
                        }
                        let params = SystemParams::new(slots + t, t).unwrap();
                        let profile = cyclic_profile(&bp, slots).unwrap();
                        let found = in_cyclic_family(&profile, params, Synchrony::Async).unwrap();
                        assert!(
                            found.is_some_and(|f| f <= k),
                            "m={m} blocks={text} slots={slots} t={t} found={found:?}"
                        );
                    }
                }
            }
        }
    }

    // All ordered partitions of 0..m with block sizes 1 or 2, as parse texts.
    fn partitions_with_small_blocks(m: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut order: Vec<usize> = (0..m).collect();
        super::permute_until(&mut order, 0, &mut |perm| {
            for parts in 1..=m {
                super::compositions(m, parts, &mut |cuts| {
                    if cuts.iter().all(|&c| c <= 2) {
                        out.push(render(perm, cuts));
                    }
                });
            }
            false
        });
        out.sort();
        out.dedup();
        out
    }

    fn render(perm: &[usize], cuts: &[usize]) -> String {
        let mut parts = Vec::new();
        let mut start = 0;
        for &len in cuts {
            let block: Vec<String> =
                perm[start..start + len].iter().map(|a| a.to_string()).collect();
            parts.push(block.join(","));
            start += len;
        }
        parts.join("|")
    }

    #[test]
    fn shuffled_profiles_stay_in_the_cyclic_family() {
        let bp = BlockPartition::singletons(3).unwrap();
        let params = SystemParams::new(3, 1).unwrap();
        for seed in 0..8u64 {
            let profile = shuffled_cyclic_profile(&bp, 3, seed).unwrap();
            assert_eq!(in_cyclic_family(&profile, params, Synchrony::Sync).unwrap(), Some(3));
        }
        // identical seeds give identical profiles
        assert_eq!(
            shuffled_cyclic_profile(&bp, 5, 42).unwrap(),
            shuffled_cyclic_profile(&bp, 5, 42).unwrap()
        );
    }

    #[test]
    fn singleton_cyclic_kendall_tau_follows_half_product() {
        // KT between the first rotation and the one floor(j/2) steps away
        // equals floor(j/2) * ceil(j/2) for singleton blocks.
        for j in 2..=6usize {
            let bp = BlockPartition::singletons(j).unwrap();
            let list = cyclic_preference_list(&bp);
            let measured = kendall_tau(&list[0], &list[j / 2]).unwrap();
            assert_eq!(measured, ((j / 2) * j.div_ceil(2)) as u64, "j={j}");
        }
    }
}
