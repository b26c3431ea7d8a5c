use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::LinAlgError;

/// Arbitrary-precision rational. `BigRational` keeps the denominator
/// positive and the fraction fully reduced, which is exactly the canonical
/// form required here (canonical zero is 0/1).
pub type Rat = BigRational;

/// Shorthand for small rational constants in code and tests.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a rational literal: `"p/q"` or `"n"`, optional leading `-`.
/// Rejects zero denominators.
pub fn parse_rat(s: &str) -> Result<Rat, LinAlgError> {
    let bad = |reason: &str| LinAlgError::BadRational {
        literal: s.to_string(),
        reason: reason.to_string(),
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(bad("empty literal"));
    }
    let (num_str, den_str) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (t, None),
    };
    let num: BigInt = num_str.parse().map_err(|_| bad("bad numerator"))?;
    let den: BigInt = match den_str {
        Some(d) => d.parse().map_err(|_| bad("bad denominator"))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    if den.is_negative() {
        return Err(bad("negative denominator"));
    }
    Ok(Rat::new(num, den))
}

/// Formats a rational as `"p/q"`, or just `"p"` for integers.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
