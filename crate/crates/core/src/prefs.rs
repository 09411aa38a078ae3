//! Alternatives, weak and strict preferences, domains, and profiles.
//!
//! A preference is stored as a canonical *level assignment*: `levels[a]` is
//! the index of the equivalence class of alternative `a`, lower meaning more
//! preferred, with occupied levels forming the contiguous range `0..L`.
//! Completeness, reflexivity, and transitivity hold by construction, so no
//! runtime relation checks are needed. A preference is strict exactly when
//! every alternative sits on its own level.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest `m` for which `enumerate_strict` will materialize all `m!` orders.
pub const STRICT_ENUMERATION_CAP: usize = 8;
/// Largest `m` for which `enumerate_weak` will materialize all weak orders.
pub const WEAK_ENUMERATION_CAP: usize = 6;

const FORBIDDEN_NAME_CHARS: [char; 3] = ['>', '=', ','];

/// A finite set of `m` alternatives with display names.
///
/// Alternative identity is the dense index `0..m`; names are presentation
/// only and default to `"0".."m-1"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternativeSet {
    names: Vec<String>,
}

impl AlternativeSet {
    /// The default alternative set with names `"0".."m-1"`.
    ///
    /// Panics if `m == 0`.
    pub fn indexed(m: usize) -> Self {
        assert!(m > 0, "alternative set must be non-empty");
        AlternativeSet {
            names: (0..m).map(|i| i.to_string()).collect(),
        }
    }

    /// An alternative set with explicit display names.
    pub fn with_names<S: Into<String>>(names: Vec<S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::argument("alternative set must be non-empty"));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::argument("alternative names must be non-empty"));
            }
            if name.contains(FORBIDDEN_NAME_CHARS) {
                return Err(Error::argument(format!(
                    "alternative name {name:?} contains a reserved character (one of '>', '=', ',')"
                )));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::argument(format!("duplicate alternative name {name:?}")));
            }
        }
        Ok(AlternativeSet { names })
    }

    pub fn m(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, a: usize) -> &str {
        &self.names[a]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Parses the textual form `group ('>' group)*` with
    /// `group = name ('=' name)*`, requiring each alternative exactly once.
    pub fn parse_pref(&self, text: &str) -> Result<Preference> {
        let tokens = tokenize(text)?;
        let mut levels = vec![usize::MAX; self.m()];
        for token in &tokens {
            let idx = self.index_of(&token.name).ok_or(Error::Parse {
                pos: token.pos,
                msg: format!("unknown alternative {:?}", token.name),
            })?;
            if levels[idx] != usize::MAX {
                return Err(Error::Parse {
                    pos: token.pos,
                    msg: format!("duplicate alternative {:?}", token.name),
                });
            }
            levels[idx] = token.group;
        }
        if let Some(missing) = levels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Parse {
                pos: text.len(),
                msg: format!("missing alternative {:?}", self.name(missing)),
            });
        }
        Preference::from_levels(&levels)
    }

    /// Canonical serialization of `p` using this set's names.
    pub fn format_pref(&self, p: &Preference) -> Result<String> {
        if p.m() != self.m() {
            return Err(Error::argument(format!(
                "preference is over {} alternatives but the set has {}",
                p.m(),
                self.m()
            )));
        }
        let mut out = String::new();
        for (i, group) in p.groups().iter().enumerate() {
            if i > 0 {
                out.push('>');
            }
            for (j, &a) in group.iter().enumerate() {
                if j > 0 {
                    out.push('=');
                }
                out.push_str(self.name(a));
            }
        }
        Ok(out)
    }
}

struct Token {
    name: String,
    group: usize,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut group = 0usize;
    let mut start = 0usize;
    let mut expect_name_at = 0usize;
    for (pos, ch) in text.char_indices().chain(std::iter::once((text.len(), '\0'))) {
        if ch == '>' || ch == '=' || ch == '\0' {
            let raw = &text[start..pos];
            let name = raw.trim();
            if name.is_empty() {
                return Err(Error::Parse {
                    pos: expect_name_at,
                    msg: "expected an alternative name".into(),
                });
            }
            tokens.push(Token {
                name: name.to_string(),
                group,
                pos: start + (raw.len() - raw.trim_start().len()),
            });
            if ch == '>' {
                group += 1;
            }
            start = pos + ch.len_utf8();
            expect_name_at = start;
        }
    }
    Ok(tokens)
}

/// Parses a preference whose names are the default indices `"0".."m-1"`,
/// with `m` inferred from the number of names present.
pub fn parse_default(text: &str) -> Result<Preference> {
    let tokens = tokenize(text)?;
    let m = tokens.len();
    let mut levels = vec![usize::MAX; m];
    for token in &tokens {
        let idx: usize = token.name.parse().map_err(|_| Error::Parse {
            pos: token.pos,
            msg: format!("unknown alternative {:?} (expected an index below {m})", token.name),
        })?;
        if idx >= m {
            return Err(Error::Parse {
                pos: token.pos,
                msg: format!("unknown alternative {:?} (expected an index below {m})", token.name),
            });
        }
        if levels[idx] != usize::MAX {
            return Err(Error::Parse {
                pos: token.pos,
                msg: format!("duplicate alternative {:?}", token.name),
            });
        }
        levels[idx] = token.group;
    }
    Preference::from_levels(&levels)
}

/// Canonical serialization under the default index names.
pub fn format_default(p: &Preference) -> String {
    AlternativeSet::indexed(p.m())
        .format_pref(p)
        .expect("default alternative set always matches")
}

/// A complete reflexive transitive relation on `m` alternatives, in
/// canonical level form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Preference {
    levels: Vec<u8>,
}

impl Preference {
    /// Builds a preference from an arbitrary level assignment, compressing
    /// the occupied levels to the canonical contiguous range.
    pub fn from_levels(levels: &[usize]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::argument("a preference needs at least one alternative"));
        }
        if levels.len() > u8::MAX as usize {
            return Err(Error::argument("too many alternatives"));
        }
        let mut occupied: Vec<usize> = levels.to_vec();
        occupied.sort_unstable();
        occupied.dedup();
        let canonical = levels
            .iter()
            .map(|l| occupied.binary_search(l).expect("level present") as u8)
            .collect();
        Ok(Preference { levels: canonical })
    }

    /// Builds the strict order listing alternatives from most to least
    /// preferred; `order` must be a permutation of `0..order.len()`.
    pub fn strict_from_order(order: &[usize]) -> Result<Self> {
        let m = order.len();
        let mut levels = vec![usize::MAX; m];
        for (pos, &a) in order.iter().enumerate() {
            if a >= m {
                return Err(Error::argument(format!("alternative {a} out of range for m={m}")));
            }
            if levels[a] != usize::MAX {
                return Err(Error::argument(format!("alternative {a} listed twice")));
            }
            levels[a] = pos;
        }
        Preference::from_levels(&levels)
    }

    /// Number of alternatives.
    pub fn m(&self) -> usize {
        self.levels.len()
    }

    /// Equivalence-class index of `a`; lower is more preferred.
    pub fn level(&self, a: usize) -> usize {
        self.levels[a] as usize
    }

    /// Number of occupied levels.
    pub fn num_levels(&self) -> usize {
        self.levels.iter().map(|&l| l as usize).max().unwrap_or(0) + 1
    }

    /// True when no two alternatives are tied.
    pub fn is_strict(&self) -> bool {
        self.num_levels() == self.m()
    }

    /// `a ≻ b`: strictly prefers `a` over `b`.
    ///
    /// Panics if `a` or `b` is out of range.
    pub fn strictly_prefers(&self, a: usize, b: usize) -> bool {
        self.levels[a] < self.levels[b]
    }

    /// `a ≿ b`: ranks `a` at least as high as `b`.
    pub fn weakly_prefers(&self, a: usize, b: usize) -> bool {
        self.levels[a] <= self.levels[b]
    }

    /// Restriction to the subset `keep`, preserving relative order and
    /// ties. The result is over `keep.len()` alternatives; index `i` of the
    /// result corresponds to the `i`-th smallest member of `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Result<Preference> {
        if keep.is_empty() {
            return Err(Error::argument("cannot restrict to an empty subset"));
        }
        let mut subset: Vec<usize> = keep.to_vec();
        subset.sort_unstable();
        subset.dedup();
        if let Some(&bad) = subset.iter().find(|&&a| a >= self.m()) {
            return Err(Error::argument(format!(
                "alternative {bad} out of range for m={}",
                self.m()
            )));
        }
        let levels: Vec<usize> = subset.iter().map(|&a| self.level(a)).collect();
        Preference::from_levels(&levels)
    }

    /// Rank of `a`: the number of alternatives weakly preferred to `a`.
    /// Defined for strict preferences only.
    pub fn rank(&self, a: usize) -> Result<usize> {
        if !self.is_strict() {
            return Err(Error::domain("rank is defined on strict preferences only"));
        }
        Ok(self.level(a) + 1)
    }

    /// Alternatives grouped by level, most preferred group first; within a
    /// group, ascending index order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_levels()];
        for a in 0..self.m() {
            groups[self.level(a)].push(a);
        }
        groups
    }

    /// All ordered pairs `(a, b)` with `a ≻ b`.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let m = self.m();
        let mut pairs = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if self.strictly_prefers(a, b) {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_default(self))
    }
}

/// A duplicate-free set of preferences over a common alternative set,
/// held in a deterministic sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    alts: AlternativeSet,
    members: Vec<Preference>,
}

impl Domain {
    pub fn new(alts: AlternativeSet, members: Vec<Preference>) -> Result<Self> {
        for p in &members {
            if p.m() != alts.m() {
                return Err(Error::argument(format!(
                    "domain member over {} alternatives does not match m={}",
                    p.m(),
                    alts.m()
                )));
            }
        }
        let mut members = members;
        members.sort();
        members.dedup();
        Ok(Domain { alts, members })
    }

    pub fn alternatives(&self) -> &AlternativeSet {
        &self.alts
    }

    pub fn m(&self) -> usize {
        self.alts.m()
    }

    pub fn members(&self) -> &[Preference] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &Preference) -> bool {
        self.index_of(p).is_some()
    }

    /// Position of `p` in the sorted member list.
    pub fn index_of(&self, p: &Preference) -> Option<usize> {
        self.members.binary_search(p).ok()
    }

    /// True when some pair of members strictly disagrees on some pair of
    /// alternatives.
    pub fn is_non_trivial(&self) -> bool {
        let m = self.m();
        for r in &self.members {
            for s in &self.members {
                for a in 0..m {
                    for b in 0..m {
                        if r.strictly_prefers(a, b) && s.strictly_prefers(b, a) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

/// All `m!` strict preferences on `m` alternatives.
pub fn enumerate_strict(m: usize) -> Result<Domain> {
    if m < 1 {
        return Err(Error::argument("m must be at least 1"));
    }
    if m > STRICT_ENUMERATION_CAP {
        return Err(Error::capacity(format!(
            "enumerate_strict supports m <= {STRICT_ENUMERATION_CAP}, got {m}"
        )));
    }
    let mut members = Vec::new();
    let mut order: Vec<usize> = (0..m).collect();
    permute(&mut order, 0, &mut |perm| {
        members.push(Preference::strict_from_order(perm).expect("permutation is valid"));
    });
    Domain::new(AlternativeSet::indexed(m), members)
}

fn permute(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}

/// All weak orders on `m` alternatives; sizes follow the ordered Bell
/// numbers (1, 3, 13, 75, 541, 4683 for m = 1..=6).
pub fn enumerate_weak(m: usize) -> Result<Domain> {
    if m < 1 {
        return Err(Error::argument("m must be at least 1"));
    }
    if m > WEAK_ENUMERATION_CAP {
        return Err(Error::capacity(format!(
            "enumerate_weak supports m <= {WEAK_ENUMERATION_CAP}, got {m}"
        )));
    }
    let mut members = Vec::new();
    let mut levels = vec![0usize; m];
    descend_levels((1u32 << m) - 1, 0, &mut levels, &mut members);
    Domain::new(AlternativeSet::indexed(m), members)
}

// Chooses each successive level as a nonempty subset of the remaining
// alternatives, producing every canonical weak order exactly once.
fn descend_levels(remaining: u32, level: usize, levels: &mut Vec<usize>, out: &mut Vec<Preference>) {
    if remaining == 0 {
        out.push(Preference::from_levels(levels).expect("levels are valid"));
        return;
    }
    // Iterate over the nonempty submasks of `remaining`.
    let mut sub = remaining;
    while sub != 0 {
        for a in 0..levels.len() {
            if sub & (1 << a) != 0 {
                levels[a] = level;
            }
        }
        descend_levels(remaining & !sub, level + 1, levels, out);
        sub = (sub - 1) & remaining;
    }
}

/// An ordered sequence of preferences, one per process slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Profile {
    entries: Vec<Preference>,
}

impl Profile {
    pub fn new(entries: Vec<Preference>) -> Result<Self> {
        let first_m = match entries.first() {
            Some(p) => p.m(),
            None => return Err(Error::argument("a profile needs at least one entry")),
        };
        if entries.iter().any(|p| p.m() != first_m) {
            return Err(Error::argument("profile entries must share one alternative set"));
        }
        Ok(Profile { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn m(&self) -> usize {
        self.entries[0].m()
    }

    pub fn entries(&self) -> &[Preference] {
        &self.entries
    }

    pub fn get(&self, slot: usize) -> &Preference {
        &self.entries[slot]
    }

    pub fn is_strict(&self) -> bool {
        self.entries.iter().all(Preference::is_strict)
    }

    /// The set of distinct entries.
    pub fn distinct(&self) -> Vec<Preference> {
        let mut set = self.entries.clone();
        set.sort();
        set.dedup();
        set
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Parses a comma-separated list of default-named preferences.
pub fn parse_profile_default(text: &str) -> Result<Profile> {
    let mut entries = Vec::new();
    for part in text.split(',') {
        entries.push(parse_default(part)?);
    }
    Profile::new(entries)
}
