//! Coefficient rings for q-series.
//!
//! Exact work happens over `BigRational`; numeric work over `f64`, `f32`
//! or `Complex<f64>`. Every coefficient type can be promoted to a complex
//! double for evaluation at points of the upper half-plane.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

pub trait Scalar: Num + Clone + Debug + Neg<Output = Self> + Send + Sync + 'static {
    /// True for arbitrary-precision rational coefficients.
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;

    fn to_complex(&self) -> Complex64;

    /// `self^p`, exactly when possible. `None` when the root does not exist
    /// in the ring (exact mode) or is ill-defined.
    fn pow_rational(&self, p: Rational64) -> Option<Self>;

    /// Canonical text form: `num/den` for rationals, `a+bi` for complex.
    fn to_text(&self) -> String;

    fn parse_text(s: &str) -> Option<Self>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn from_ratio64(r: Rational64) -> Self {
        Self::from_rational(&ratio64_to_big(r))
    }

    fn abs_f64(&self) -> f64 {
        self.to_complex().norm()
    }

    fn pow_u32(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

pub fn ratio64_to_big(r: Rational64) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Option<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |x: &str| -> Option<f64> {
        match x {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => x.parse().ok(),
        }
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k % 2 == 0 {
            return None;
        }
        return exact_root(&-n, k).map(|r| -r);
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }

    fn pow_rational(&self, p: Rational64) -> Option<Self> {
        let (pn, pd) = (*p.numer(), *p.denom());
        if self.is_zero() {
            return if pn > 0 { Some(Self::zero()) } else { None };
        }
        let root = if pd == 1 {
            self.clone()
        } else {
            let k = u32::try_from(pd).ok()?;
            BigRational::new(exact_root(self.numer(), k)?, exact_root(self.denom(), k)?)
        };
        let e = i32::try_from(pn).ok()?;
        Some(num_traits::Pow::pow(&root, e))
    }

    fn to_text(&self) -> String {
        format_rational(self)
    }

    fn parse_text(s: &str) -> Option<Self> {
        parse_rational(s)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }

    fn pow_rational(&self, p: Rational64) -> Option<Self> {
        if *p.denom() == 1 {
            return Some(self.powi(i32::try_from(*p.numer()).ok()?));
        }
        (*self > 0.0).then(|| self.powf(*p.numer() as f64 / *p.denom() as f64))
    }

    fn to_text(&self) -> String {
        format!("{:.16e}", self)
    }

    fn parse_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r) as f32
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self as f64, 0.0)
    }

    fn pow_rational(&self, p: Rational64) -> Option<Self> {
        (*self as f64).pow_rational(p).map(|x| x as f32)
    }

    fn to_text(&self) -> String {
        format!("{:.8e}", self)
    }

    fn parse_text(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        Complex64::new(rational_to_f64(r), 0.0)
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn pow_rational(&self, p: Rational64) -> Option<Self> {
        if *p.denom() == 1 {
            return Some(self.powi(i32::try_from(*p.numer()).ok()?));
        }
        (!self.is_zero()).then(|| self.powf(*p.numer() as f64 / *p.denom() as f64))
    }

    fn to_text(&self) -> String {
        format_complex(*self)
    }

    fn parse_text(s: &str) -> Option<Self> {
        parse_complex(s)
    }
}

/// Binomial coefficient C(n, k) as a big integer; zero outside 0 ≤ k ≤ n.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Generalized binomial C(y, p) for any integer y and p ≥ 0.
pub fn binomial_general(y: i64, p: i64) -> BigInt {
    if p < 0 {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..p {
        num *= BigInt::from(y - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_roots() {
        assert_eq!(q(4, 9).pow_rational(Rational64::new(1, 2)), Some(q(2, 3)));
        assert_eq!(q(-8, 27).pow_rational(Rational64::new(2, 3)), Some(q(4, 9)));
        assert_eq!(q(2, 1).pow_rational(Rational64::new(1, 2)), None);
        assert_eq!(q(2, 3).pow_rational(Rational64::new(-2, 1)), Some(q(9, 4)));
    }

    #[test]
    fn text_round_trip() {
        let r = q(-7, 12);
        assert_eq!(r.to_text(), "-7/12");
        assert_eq!(BigRational::parse_text("-7/12"), Some(r));
        assert_eq!(BigRational::parse_text("5"), Some(q(5, 1)));
        let z = Complex64::new(-1.25, 3.0e-7);
        assert_eq!(Complex64::parse_text(&z.to_text()), Some(z));
        assert_eq!(parse_complex("1.3i"), Some(Complex64::new(0.0, 1.3)));
        assert_eq!(parse_complex("0.4+1.3i"), Some(Complex64::new(0.4, 1.3)));
        assert_eq!(parse_complex("-2e-3-i"), Some(Complex64::new(-2e-3, -1.0)));
        assert_eq!(parse_complex("2"), Some(Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = format_complex(Complex64::new(1.0 / 3.0, -2.0));
        let mantissa = s.split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 4), BigInt::zero());
        assert_eq!(binomial_general(1, 2), BigInt::zero());
        assert_eq!(binomial_general(-1, 3), BigInt::from(-1));
    }
}
