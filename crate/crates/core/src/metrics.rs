//! Kendall tau and Spearman footrule distances on strict preferences.
//!
//! Both metrics are integer-valued on linear orders, so distances and
//! diameters are exact `u64` counts; no floating point is involved.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prefs::{Domain, Preference, Profile};

/// Which rank metric to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// Kendall tau: number of discordant pairs.
    Kt,
    /// Spearman footrule: total absolute rank displacement.
    Sf,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Kt => "kt",
            MetricKind::Sf => "sf",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kt" | "kendall-tau" => Ok(MetricKind::Kt),
            "sf" | "spearman-footrule" => Ok(MetricKind::Sf),
            other => Err(Error::Argument(format!("unknown metric {other:?} (expected kt or sf)"))),
        }
    }
}

fn require_strict_pair(r: &Preference, s: &Preference) -> Result<()> {
    if r.m() != s.m() {
        return Err(Error::Argument(format!(
            "preferences are over different alternative sets ({} vs {})",
            r.m(),
            s.m()
        )));
    }
    if !r.is_strict() || !s.is_strict() {
        return Err(Error::Domain("rank metrics are defined on strict preferences only".into()));
    }
    Ok(())
}

/// Number of ordered pairs `(a, b)` with `a ≻_R b` and `b ≻_S a`; equals
/// the count of discordant unordered pairs.
pub fn kendall_tau(r: &Preference, s: &Preference) -> Result<u64> {
    require_strict_pair(r, s)?;
    let m = r.m();
    let mut discordant = 0u64;
    for a in 0..m {
        for b in 0..m {
            if r.strictly_prefers(a, b) && s.strictly_prefers(b, a) {
                discordant += 1;
            }
        }
    }
    Ok(discordant)
}

/// Sum over alternatives of the absolute rank difference.
pub fn spearman_footrule(r: &Preference, s: &Preference) -> Result<u64> {
    require_strict_pair(r, s)?;
    let mut total = 0u64;
    for a in 0..r.m() {
        let ra = r.rank(a)? as i64;
        let sa = s.rank(a)? as i64;
        total += ra.abs_diff(sa);
    }
    Ok(total)
}

/// Distance under the chosen metric.
pub fn distance(kind: MetricKind, r: &Preference, s: &Preference) -> Result<u64> {
    match kind {
        MetricKind::Kt => kendall_tau(r, s),
        MetricKind::Sf => spearman_footrule(r, s),
    }
}

fn set_diameter(members: &[Preference], kind: MetricKind) -> Result<u64> {
    let mut max = 0u64;
    for (i, r) in members.iter().enumerate() {
        for s in &members[i + 1..] {
            max = max.max(distance(kind, r, s)?);
        }
    }
    Ok(max)
}

/// Maximum pairwise distance over a domain.
pub fn diameter(w: &Domain, kind: MetricKind) -> Result<u64> {
    if w.is_empty() {
        return Err(Error::Argument("diameter of an empty domain".into()));
    }
    set_diameter(w.members(), kind)
}

/// Diameter of the set of entries of a profile (duplicates collapse).
pub fn profile_diameter(profile: &Profile, kind: MetricKind) -> Result<u64> {
    set_diameter(&profile.distinct(), kind)
}
