//! Preference aggregation under crash faults, at enumeration scale.
//!
//! This crate provides the pieces needed to state and machine-check
//! agreement properties of distributed preference aggregation:
//!
//! - [`prefs`] — weak and strict preferences, domains, profiles;
//! - [`metrics`] — Kendall tau and Spearman footrule distances and diameters;
//! - [`cyclic`] — block-rotated preference lists and cyclic profiles;
//! - [`aggregation`] — aggregation maps with unanimity/IIA/agreement checkers
//!   and an exhaustive dictatorship verifier at the `n = 2`, `m = 3` scale;
//! - [`safety`] — unanimity sets and safe areas;
//! - [`sim`] — a deterministic round-based crash-fault simulator;
//! - [`witness`] — constructions that turn cyclic profiles into verified
//!   impossibility witnesses for set and approximate agreement tasks;
//! - [`suite`] — the end-to-end verification suite the CLI reproduces.
//!
//! Everything is exact: distances are integers, thresholds are integers,
//! and agreement slack is compared as a rational number. All types are
//! immutable values and all operations are deterministic.

pub mod aggregation;
pub mod cyclic;
mod error;
pub mod metrics;
pub mod prefs;
pub mod safety;
pub mod sim;
pub mod suite;
pub mod witness;

pub use error::{Error, Result};
pub use num_rational::Rational64;

/// Parses an exact nonnegative rational from `"3"`, `"7/2"`, or `"3.5"`.
pub fn parse_ratio(text: &str) -> Result<Rational64> {
    let text = text.trim();
    let parse_int = |s: &str| -> Result<i64> {
        s.parse::<i64>()
            .map_err(|_| Error::Argument(format!("invalid rational component {s:?}")))
    };
    let value = if let Some((num, den)) = text.split_once('/') {
        let den = parse_int(den)?;
        if den == 0 {
            return Err(Error::Argument("rational denominator must be nonzero".into()));
        }
        Rational64::new(parse_int(num)?, den)
    } else if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Argument(format!("invalid decimal {text:?}")));
        }
        let scale = 10i64
            .checked_pow(frac.len() as u32)
            .ok_or_else(|| Error::Argument("decimal has too many digits".into()))?;
        let negative = whole.trim_start().starts_with('-');
        let whole = parse_int(if whole.is_empty() { "0" } else { whole })?;
        let frac = parse_int(frac)?;
        let magnitude = Rational64::new(whole.abs() * scale + frac, scale);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    } else {
        Rational64::from_integer(parse_int(text)?)
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_parsing_is_exact() {
        assert_eq!(parse_ratio("3").unwrap(), Rational64::from_integer(3));
        assert_eq!(parse_ratio("7/2").unwrap(), Rational64::new(7, 2));
        assert_eq!(parse_ratio("3.5").unwrap(), Rational64::new(7, 2));
        assert_eq!(parse_ratio("-0.25").unwrap(), Rational64::new(-1, 4));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
    }
}
