//! Exact scalars: arbitrary-precision rationals and Gaussian rationals
//! (complex numbers with rational real and imaginary parts).
//!
//! Everything downstream bottoms out here and stays exact: no floats, no
//! rounding. Moduli of complex numbers are irrational in general, so they are
//! only ever handled through their squares or through certified rational
//! upper bounds ([`sqrt_upper_bound`]).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Exact rational scalar used throughout the crate.
pub type Rational = num_rational::BigRational;

/// Build a rational from an integer pair. Panics if `den` is zero.
pub fn ratio(num: i64, den: i64) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parse the textual forms `p/q` and `p`.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let bad = |reason: &str| Error::BadRational {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text.trim(), None),
    };
    let num: BigInt = num.parse().map_err(|_| bad("invalid numerator"))?;
    let den: BigInt = match den {
        Some(d) => d.parse().map_err(|_| bad("invalid denominator"))?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Canonical textual form: `p` when the denominator is 1, otherwise `p/q`
/// with the fraction fully reduced and the sign on the numerator.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Serde adapter serializing a [`Rational`] as its canonical string form.
pub mod rational_serde {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(D::Error::custom)
    }
}

/// Default grid resolution for square-root upper bounds: 2^-50, comfortably
/// below the 10^-6 slack budget and fine enough that certified perturbation
/// bounds stay strictly monotone in k.
pub const SQRT_GRID_BITS: u32 = 50;

/// A rational `r` with `r*r >= x`, exact when `x` is the square of a
/// rational and otherwise within 2^-50 of the true square root.
pub fn sqrt_upper_bound(x: &Rational) -> Rational {
    sqrt_upper_bound_with_bits(x, SQRT_GRID_BITS)
}

/// As [`sqrt_upper_bound`] at a caller-chosen resolution of 2^-bits.
///
/// The inexact branch rounds up to a fixed absolute grid, so at a given
/// resolution the bound is a monotone function of `x`; callers comparing
/// bounds of nested quantities can rely on strict ordering whenever the
/// true roots differ by more than the grid step.
pub fn sqrt_upper_bound_with_bits(x: &Rational, bits: u32) -> Rational {
    assert!(!x.is_negative(), "negative radicand");
    if x.is_zero() {
        return Rational::zero();
    }
    let p = x.numer();
    let q = x.denom();
    // x = p/q reduced, so x is a rational square iff p and q both are.
    let sp = p.sqrt();
    let sq = q.sqrt();
    if &(&sp * &sp) == p && &(&sq * &sq) == q {
        return Rational::new(sp, sq);
    }
    // ceil(sqrt(x) * 2^bits) / 2^bits, with integer square roots only.
    let scale = BigInt::one() << bits;
    let scaled = p * &scale * &scale;
    let t = (&scaled + q - BigInt::one()) / q; // ceil(p * 2^(2 bits) / q)
    let mut m = t.sqrt();
    if &m * &m < t {
        m += BigInt::one();
    }
    Rational::new(m, scale)
}

/// A complex number with exact rational real and imaginary parts.
///
/// Gaussian rationals form a field, so every arithmetic identity asserted by
/// the library (inverses, intertwinings, idempotency) can be checked with
/// exact equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    re: Rational,
    im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        Self { re, im }
    }

    pub fn from_rational(re: Rational) -> Self {
        Self {
            re,
            im: Rational::zero(),
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `num/den` as a real Gaussian rational. Panics if `den` is zero.
    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(ratio(num, den))
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    pub fn re(&self) -> &Rational {
        &self.re
    }

    pub fn im(&self) -> &Rational {
        &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `|z|^2 = re^2 + im^2`, an exact rational. The modulus itself is kept
    /// out of the API because it is irrational in general.
    pub fn modulus_squared(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, Error> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n2 = rhs.modulus_squared();
        let num = self * &rhs.conjugate();
        Ok(Self {
            re: num.re / &n2,
            im: num.im / &n2,
        })
    }

    pub fn checked_inv(&self) -> Result<Self, Error> {
        Self::one().checked_div(self)
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

/// Panics on division by zero; use [`GaussianRational::checked_div`] when
/// the divisor is untrusted.
impl Div for &GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        self.checked_div(rhs).expect("division by zero")
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

macro_rules! forward_value_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait for GaussianRational {
            type Output = GaussianRational;
            fn $method(self, rhs: GaussianRational) -> GaussianRational {
                $trait::$method(&self, &rhs)
            }
        }
    )*};
}
forward_value_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

impl PartialOrd for GaussianRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order on (re, im). This is a container ordering for
/// deterministic maps and sorted output, not a field order on the complexes.
impl Ord for GaussianRational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = String::new();
        if !self.re.is_zero() {
            parts.push_str(&format_rational(&self.re));
        }
        if !self.im.is_zero() {
            if !parts.is_empty() && !self.im.is_negative() {
                parts.push('+');
            }
            let im_abs = self.im.abs();
            if self.im.is_negative() {
                parts.push('-');
            }
            if !im_abs.is_one() {
                parts.push_str(&format_rational(&im_abs));
            }
            parts.push('i');
        }
        write!(f, "{parts}")
    }
}

impl fmt::Debug for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexRepr {
    re: String,
    im: String,
}

impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ComplexRepr {
            re: format_rational(&self.re),
            im: format_rational(&self.im),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = ComplexRepr::deserialize(d)?;
        let re = parse_rational(&repr.re).map_err(D::Error::custom)?;
        let im = parse_rational(&repr.im).map_err(D::Error::custom)?;
        Ok(GaussianRational::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(re: (i64, i64), im: (i64, i64)) -> GaussianRational {
        GaussianRational::new(ratio(re.0, re.1), ratio(im.0, im.1))
    }

    #[test]
    fn conjugate_product() {
        let a = g((1, 1), (1, 1));
        let b = g((1, 1), (-1, 1));
        assert_eq!(&a * &b, GaussianRational::from_integer(2));
    }

    #[test]
    fn pythagorean_modulus() {
        let z = g((3, 5), (4, 5));
        assert_eq!(z.modulus_squared(), ratio(1, 1));
    }

    #[test]
    fn division_checked_by_back_multiplication() {
        // (1/2) / (2i), checked by multiplying back.
        let a = g((1, 2), (0, 1));
        let b = g((0, 1), (2, 1));
        let q = a.checked_div(&b).unwrap();
        assert_eq!(q, g((0, 1), (-1, 4)));
        assert_eq!(&b * &q, a);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let a = GaussianRational::one();
        assert!(matches!(
            a.checked_div(&GaussianRational::zero()),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn rational_round_trip() {
        for text in ["0", "-7", "3/4", "-22/7"] {
            let x = parse_rational(text).unwrap();
            assert_eq!(format_rational(&x), text);
        }
        assert_eq!(format_rational(&parse_rational("6/4").unwrap()), "3/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
    }

    #[test]
    fn sqrt_bound_exact_on_squares() {
        assert_eq!(sqrt_upper_bound(&ratio(9, 4)), ratio(3, 2));
        assert_eq!(sqrt_upper_bound(&ratio(0, 1)), ratio(0, 1));
    }

    #[test]
    fn sqrt_bound_is_an_upper_bound_with_small_slack() {
        for (p, q) in [(2, 1), (1, 3), (17, 12), (5, 99)] {
            let x = ratio(p, q);
            let r = sqrt_upper_bound(&x);
            assert!(&r * &r >= x, "bound must dominate the root");
            // (r - 2^-50)^2 < x, i.e. the bound is tight to the grid.
            let step = Rational::new(BigInt::one(), BigInt::one() << 50);
            let lower = &r - &step;
            assert!(&lower * &lower < x);
        }
    }

    #[test]
    fn display_forms() {
        assert_eq!(g((0, 1), (0, 1)).to_string(), "0");
        assert_eq!(g((3, 2), (0, 1)).to_string(), "3/2");
        assert_eq!(g((0, 1), (1, 1)).to_string(), "i");
        assert_eq!(g((0, 1), (-1, 1)).to_string(), "-i");
        assert_eq!(g((1, 2), (-3, 1)).to_string(), "1/2-3i");
        assert_eq!(g((-1, 1), (2, 3)).to_string(), "-1+2/3i");
    }
}
