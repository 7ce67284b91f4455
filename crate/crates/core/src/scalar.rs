//! Number types shared by the exact and floating code paths.

use core::fmt::{Debug, Display};
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Zero};

/// Exact rational number used for structure constants with rational entries.
pub type Rational = Ratio<i128>;

/// Tolerance under which a floating value counts as zero in identity checks.
pub const FLOAT_ZERO_TOL: f64 = 1e-12;

/// Field operations needed by the curvature engine.
///
/// Implemented for `f64` (tolerance based comparisons) and [`Rational`]
/// (exact comparisons).
pub trait Scalar:
    Copy
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` when comparisons are exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn to_f64(self) -> f64;

    /// Zero test: exact for rationals, `|x| <= FLOAT_ZERO_TOL` for floats.
    fn is_negligible(self) -> bool;

    fn agrees_with(self, other: Self) -> bool {
        (self - other).is_negligible()
    }

    fn half() -> Self {
        Self::one() / Self::from_i64(2)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn is_negligible(self) -> bool {
        self.abs() <= FLOAT_ZERO_TOL
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v as i128)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn is_negligible(self) -> bool {
        self.is_zero()
    }
}

/// Parse `"3"`, `"-3/4"` or a plain decimal such as `"0.125"` into a rational.
///
/// Scientific notation and anything that does not fit in `i128` is rejected;
/// callers fall back to floating arithmetic in that case.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num: i128 = num.trim().parse().ok()?;
        let den: i128 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Ratio::new(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut numer: i128 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer.checked_mul(10)?.checked_add((b - b'0') as i128)?;
    }
    let mut denom: i128 = 1;
    for _ in 0..frac_part.len() {
        denom = denom.checked_mul(10)?;
    }
    if negative {
        numer = -numer;
    }
    Some(Ratio::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("-3/4"), Some(Ratio::new(-3, 4)));
        assert_eq!(parse_rational("0.125"), Some(Ratio::new(1, 8)));
        assert_eq!(parse_rational("+2"), Some(Ratio::from_integer(2)));
        assert_eq!(parse_rational(".5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_rational("1e-3"), None);
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("-"), None);
    }

    #[test]
    fn rational_display_is_reduced() {
        let q = Rational::from_i64(-6) / Rational::from_i64(8);
        assert_eq!(alloc::format!("{q}"), "-3/4");
        assert_eq!(alloc::format!("{}", Rational::from_i64(2)), "2");
    }
}
