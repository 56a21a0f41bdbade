//! Exact rational helpers.
//!
//! `Rational` is an arbitrary-precision fraction kept in lowest terms with a
//! positive denominator. The helpers here cover construction, the `p/q` text
//! form used by state files and CLI flags, and lossy conversion for reports.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn uint(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `num/den`, reduced. Panics on a zero denominator.
pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Exact non-negative integer power.
pub fn pow(base: &Rational, exp: u32) -> Rational {
    let mut acc = one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

/// Always `<num>/<den>`, also for integers.
pub fn to_text(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts `p/q` or a plain integer, optional leading `-`.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Rational::from_integer(n))
    }
}

/// Lossy conversion for human-readable output only.
pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large or tiny values: scale through the bit lengths.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift > 0 {
        r / Rational::from_integer(BigInt::one() << (shift as usize))
    } else {
        r * Rational::from_integer(BigInt::one() << ((-shift) as usize))
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// 12 significant digits, the report format.
pub fn display(r: &Rational) -> String {
    format!("{:.12e}", to_f64(r))
}

/// `log_base(value)` as a float, for iteration-budget logging.
pub fn log_ratio(value: &Rational, base: &Rational) -> f64 {
    ln(value) / ln(base)
}

fn ln(r: &Rational) -> f64 {
    let nb = r.numer().abs().bits() as f64;
    let db = r.denom().bits() as f64;
    // ln(n/d) = ln(n) - ln(d) evaluated on leading bits to avoid overflow.
    let lead = |x: &BigInt, bits: f64| -> f64 {
        let drop = (bits - 60.0).max(0.0) as usize;
        let top = (x.abs() >> drop).to_f64().unwrap_or(1.0);
        top.ln() + drop as f64 * std::f64::consts::LN_2
    };
    lead(r.numer(), nb) - lead(&r.denom().clone(), db)
}

/// An MBB ratio, which is infinite for a buyer with positive utility for a
/// zero-price good.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ratio {
    Finite(Rational),
    Infinite,
}

impl Ratio {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Ratio::Finite(r) => Some(r),
            Ratio::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Ratio::Infinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_and_integer() {
        assert_eq!(parse("3/6"), Some(frac(1, 2)));
        assert_eq!(parse("-4"), Some(int(-4)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
    }

    #[test]
    fn text_form_always_has_denominator() {
        assert_eq!(to_text(&int(7)), "7/1");
        assert_eq!(to_text(&frac(-2, 4)), "-1/2");
    }

    #[test]
    fn power_is_exact() {
        assert_eq!(pow(&frac(3, 2), 3), frac(27, 8));
        assert_eq!(pow(&frac(3, 2), 0), one());
    }

    #[test]
    fn float_conversion_survives_huge_values() {
        let big = pow(&int(10), 400);
        let v = to_f64(&(one() / &big));
        assert_eq!(v, 0.0);
        let ratio = log_ratio(&big, &int(10));
        assert!((ratio - 400.0).abs() < 1e-6);
    }
}
