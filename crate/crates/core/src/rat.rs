//! Exact rational arithmetic helpers.
//!
//! All model coefficients are stored as [`Rat`] (arbitrary-precision
//! rationals). Floats only appear at the MPS boundary and inside the
//! floating-point simplex.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// Rational from an integer.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Rational `n/d`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parse a plain decimal literal (`-12.34`, `5`, `0.001`) into an exact
/// rational. Scientific notation is not accepted; instance files use plain
/// decimals.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().ok()?;
    let den = BigInt::from(10u8).pow(frac_part.len() as u32);
    Some(Rat::new(num * BigInt::from(sign), den))
}

/// Render a rational as decimal text when its denominator is of the form
/// `2^a 5^b` (exact), otherwise as a 17-significant-digit float.
pub fn to_decimal_string(r: &Rat) -> String {
    if r.is_zero() {
        return "0".to_string();
    }
    let mut den = r.denom().abs();
    let mut pow2 = 0u32;
    let mut pow5 = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        pow2 += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        pow5 += 1;
    }
    if den.is_one() {
        // exact decimal with 10^max(pow2,pow5) scale
        let shift = pow2.max(pow5);
        let scaled = (r * Rat::from_integer(BigInt::from(10u8).pow(shift))).to_integer();
        let neg = scaled.is_negative();
        let digits = scaled.abs().to_string();
        let s = if shift == 0 {
            digits
        } else {
            let shift = shift as usize;
            let padded = format!("{:0>width$}", digits, width = shift + 1);
            let (int_part, frac_part) = padded.split_at(padded.len() - shift);
            let frac_part = frac_part.trim_end_matches('0');
            if frac_part.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac_part}")
            }
        };
        if neg {
            format!("-{s}")
        } else {
            s
        }
    } else {
        format!("{:.16e}", to_f64(r))
    }
}

/// Nearest f64.
pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back through a scaled division for extreme magnitudes
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact rational from an f64 (every finite f64 is a dyadic rational).
pub fn from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// True if the value is 0 or 1.
pub fn is_zero_or_one(r: &Rat) -> bool {
    r.is_zero() || r.is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_plain_decimals() {
        assert_eq!(parse_decimal("42.84"), Some(ratio(4284, 100)));
        assert_eq!(parse_decimal("-0.5"), Some(ratio(-1, 2)));
        assert_eq!(parse_decimal("7"), Some(rat(7)));
        assert_eq!(parse_decimal(""), None);
        assert_eq!(parse_decimal("1e3"), None);
    }

    #[test]
    fn decimal_rendering_round_trips() {
        for s in ["0", "1", "-3.25", "42.84", "0.001", "-1136"] {
            let r = parse_decimal(s).unwrap();
            assert_eq!(parse_decimal(&to_decimal_string(&r)).unwrap(), r);
        }
        // non-decimal denominator falls back to float form
        let third = ratio(1, 3);
        assert!(to_decimal_string(&third).contains('e'));
    }
}
