//! Truncated Laurent series in q with rational lead exponent, the Boole
//! operator θ = q d/dq, and polynomials in τ = log q over such series.
//!
//! A series stores its lead exponent and the coefficients of
//! q^{lead}, q^{lead+1}, …; the number of stored coefficients is its
//! relative precision and `lead + len` its absolute precision. The zero
//! series stores no coefficients and keeps its absolute precision in `lead`.
//! Binary operations truncate to the shorter operand.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::hecke::HeckeContext;
use crate::scalar::Scalar;

/// Largest exponent denominator accepted by default.
pub const DEFAULT_MAX_DENOMINATOR: i64 = 48;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("exponents {0} and {1} lie on different lattices")]
    Lattice(Rational64, Rational64),
    #[error("inverse of a series that is zero to its precision")]
    ZeroInverse,
    #[error("lead coefficient {coeff} has no exact root for exponent {power}")]
    NoRoot { coeff: String, power: Rational64 },
    #[error("exponent {0} has denominator above {1}")]
    Denominator(Rational64, i64),
    #[error("point {0} is not in the upper half-plane")]
    NotInUpperHalfPlane(String),
    #[error("|q| = {0} is not below 1")]
    Divergent(f64),
    #[error("malformed series JSON: {0}")]
    Json(String),
    #[error("negative integer power of a zero series")]
    ZeroPower,
}

pub type SeriesResult<T> = Result<T, SeriesError>;

fn is_integer(r: Rational64) -> bool {
    *r.denom() == 1
}

fn ceil_to_usize(r: Rational64) -> usize {
    let c = r.ceil().to_integer();
    if c < 0 {
        0
    } else {
        c as usize
    }
}

#[derive(Clone, Debug)]
pub struct QSeries<T> {
    lead: Rational64,
    coeffs: Vec<T>,
}

/// Value of a series at a point together with a tail estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub tail: f64,
}

impl<T: Scalar> QSeries<T> {
    /// Builds `Σ coeffs[n] q^{lead+n}` and strips leading zeros.
    pub fn new(lead: Rational64, coeffs: Vec<T>) -> Self {
        let mut s = QSeries { lead, coeffs };
        s.normalize();
        s
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        Self::new(Rational64::zero(), coeffs)
    }

    /// The zero series known up to q^{precision}.
    pub fn zero(precision: Rational64) -> Self {
        QSeries {
            lead: precision,
            coeffs: Vec::new(),
        }
    }

    /// `c·q^{exponent}` with `len` known coefficients.
    pub fn monomial(c: T, exponent: Rational64, len: usize) -> Self {
        let mut coeffs = vec![T::zero(); len];
        if len > 0 {
            coeffs[0] = c;
        }
        Self::new(exponent, coeffs)
    }

    pub fn constant(c: T, len: usize) -> Self {
        Self::monomial(c, Rational64::zero(), len)
    }

    pub fn one(len: usize) -> Self {
        Self::constant(T::one(), len)
    }

    /// q with absolute precision `len`.
    pub fn q(len: usize) -> Self {
        Self::monomial(T::one(), Rational64::one(), len.saturating_sub(1))
    }

    fn normalize(&mut self) {
        let k = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if k > 0 {
            self.coeffs.drain(..k);
            self.lead += Rational64::from_integer(k as i64);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lead exponent, `None` for the zero series.
    pub fn valuation(&self) -> Option<Rational64> {
        (!self.is_zero()).then_some(self.lead)
    }

    /// Lead exponent for nonzero series, the precision for the zero series.
    pub fn lead_exponent(&self) -> Rational64 {
        self.lead
    }

    /// Absolute precision: the first exponent whose coefficient is unknown.
    pub fn precision(&self) -> Rational64 {
        self.lead + Rational64::from_integer(self.coeffs.len() as i64)
    }

    /// Number of known coefficients from the lead on.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn lead_coeff(&self) -> Option<&T> {
        self.coeffs.first()
    }

    /// Coefficient of q^e. `None` when e is beyond the precision; zero below
    /// the lead or off the exponent lattice.
    pub fn coeff(&self, e: Rational64) -> Option<T> {
        if e >= self.precision() {
            return None;
        }
        let d = e - self.lead;
        if d < Rational64::zero() || !is_integer(d) {
            return Some(T::zero());
        }
        Some(self.coeffs[d.to_integer() as usize].clone())
    }

    /// Coefficients at exponents `from, from+1, …, from+n−1`, with zeros below
    /// the lead and `None` once the precision is exceeded.
    pub fn window(&self, from: Rational64, n: usize) -> Option<Vec<T>> {
        (0..n)
            .map(|k| self.coeff(from + Rational64::from_integer(k as i64)))
            .collect()
    }

    /// The constant coefficient, when known.
    pub fn constant_term(&self) -> Option<T> {
        self.coeff(Rational64::zero())
    }

    /// Truncates to absolute precision `prec` (no-op when already coarser).
    pub fn truncate(&self, prec: Rational64) -> Self {
        if prec >= self.precision() {
            return self.clone();
        }
        if prec <= self.lead {
            return Self::zero(prec);
        }
        let len = ceil_to_usize(prec - self.lead);
        QSeries {
            lead: self.lead,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    /// Keeps at most `len` coefficients from the lead on.
    pub fn truncate_len(&self, len: usize) -> Self {
        if len >= self.coeffs.len() {
            return self.clone();
        }
        Self::new(self.lead, self.coeffs[..len].to_vec())
    }

    /// Multiplication by q^e.
    pub fn shift(&self, e: Rational64) -> Self {
        QSeries {
            lead: self.lead + e,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.precision());
        }
        Self::new(self.lead, self.coeffs.iter().map(|x| x.clone() * c.clone()).collect())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> QSeries<U> {
        QSeries::new(self.lead, self.coeffs.iter().map(f).collect())
    }

    pub fn to_complex(&self) -> QSeries<Complex64> {
        self.map(|c| c.to_complex())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }

    /// The series minus its constant coefficient.
    pub fn nonconstant_part(&self) -> Self {
        match self.constant_term() {
            Some(c) if !c.is_zero() => {
                let len = self.precision().to_integer().max(0) as usize;
                self - &Self::constant(c, len)
            }
            _ => self.clone(),
        }
    }

    fn add_signed(&self, other: &Self, negate: bool) -> SeriesResult<Self> {
        let prec = self.precision().min(other.precision());
        let lead = match (self.valuation(), other.valuation()) {
            (None, None) => return Ok(Self::zero(prec)),
            (Some(a), None) | (None, Some(a)) => a,
            (Some(a), Some(b)) => {
                if !is_integer(a - b) {
                    return Err(SeriesError::Lattice(a, b));
                }
                a.min(b)
            }
        };
        if prec <= lead {
            return Ok(Self::zero(prec));
        }
        let len = ceil_to_usize(prec - lead);
        let pick = |s: &Self, n: usize| -> T {
            if s.is_zero() {
                return T::zero();
            }
            let k = lead + Rational64::from_integer(n as i64) - s.lead;
            if k < Rational64::zero() {
                T::zero()
            } else {
                s.coeffs[k.to_integer() as usize].clone()
            }
        };
        let coeffs = (0..len)
            .map(|n| {
                let (x, y) = (pick(self, n), pick(other, n));
                if negate {
                    x - y
                } else {
                    x + y
                }
            })
            .collect();
        let out = Self::new(lead, coeffs);
        Ok(if out.is_zero() { Self::zero(prec) } else { out })
    }

    pub fn try_add(&self, other: &Self) -> SeriesResult<Self> {
        self.add_signed(other, false)
    }

    pub fn try_sub(&self, other: &Self) -> SeriesResult<Self> {
        self.add_signed(other, true)
    }

    pub fn mul_series(&self, other: &Self) -> Self {
        match (self.valuation(), other.valuation()) {
            (None, None) => Self::zero(self.lead + other.lead),
            (None, Some(v)) => Self::zero(self.lead + v),
            (Some(v), None) => Self::zero(other.lead + v),
            (Some(a), Some(b)) => {
                let len = self.len().min(other.len());
                let mut out = vec![T::zero(); len];
                for (i, x) in self.coeffs[..len].iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in other.coeffs[..len - i].iter().enumerate() {
                        out[i + j] = out[i + j].clone() + x.clone() * y.clone();
                    }
                }
                let s = Self::new(a + b, out);
                if s.is_zero() {
                    Self::zero(a + b + Rational64::from_integer(len as i64))
                } else {
                    s
                }
            }
        }
    }

    pub fn inv(&self) -> SeriesResult<Self> {
        let c0 = self.lead_coeff().ok_or(SeriesError::ZeroInverse)?.clone();
        let n = self.len();
        let inv0 = T::one() / c0;
        let mut r: Vec<T> = Vec::with_capacity(n);
        r.push(inv0.clone());
        for k in 1..n {
            let mut acc = T::zero();
            for i in 1..=k {
                acc = acc + self.coeffs[i].clone() * r[k - i].clone();
            }
            r.push(-(acc * inv0.clone()));
        }
        Ok(Self::new(-self.lead, r))
    }

    pub fn try_div(&self, other: &Self) -> SeriesResult<Self> {
        Ok(self.mul_series(&other.inv()?))
    }

    pub fn pow_int(&self, n: i64) -> SeriesResult<Self> {
        if n < 0 {
            if self.is_zero() {
                return Err(SeriesError::ZeroPower);
            }
            return self.inv()?.pow_int(-n);
        }
        let mut base = self.clone();
        let mut acc = Self::one(self.len().max(1));
        if self.is_zero() {
            return Ok(if n == 0 {
                Self::one(0)
            } else {
                Self::zero(self.lead * Rational64::from_integer(n))
            });
        }
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_series(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_series(&base);
            }
        }
        Ok(acc)
    }

    /// `self^p` for rational p via the binomial series of the unit part.
    pub fn pow_frac(&self, p: Rational64) -> SeriesResult<Self> {
        self.pow_frac_bounded(p, DEFAULT_MAX_DENOMINATOR)
    }

    pub fn pow_frac_bounded(&self, p: Rational64, max_den: i64) -> SeriesResult<Self> {
        if is_integer(p) {
            return self.pow_int(p.to_integer());
        }
        let c0 = self.lead_coeff().ok_or(SeriesError::ZeroInverse)?.clone();
        let lead = self.lead * p;
        if *lead.denom() > max_den {
            return Err(SeriesError::Denominator(lead, max_den));
        }
        let root = c0.pow_rational(p).ok_or_else(|| SeriesError::NoRoot {
            coeff: c0.to_text(),
            power: p,
        })?;
        let inv0 = T::one() / c0;
        let g: Vec<T> = self.coeffs.iter().map(|c| c.clone() * inv0.clone()).collect();
        let n = g.len();
        let pp = T::from_ratio64(p);
        let mut f: Vec<T> = Vec::with_capacity(n);
        f.push(T::one());
        for k in 1..n {
            let mut acc = T::zero();
            for j in 1..=k {
                let w = (pp.clone() + T::one()) * T::from_i64(j as i64) - T::from_i64(k as i64);
                acc = acc + w * g[j].clone() * f[k - j].clone();
            }
            f.push(acc / T::from_i64(k as i64));
        }
        Ok(Self::new(lead, f.into_iter().map(|c| c * root.clone()).collect()))
    }

    /// The Boole operator θ = q d/dq.
    pub fn theta(&self) -> Self {
        let prec = self.precision();
        let s = Self::new(
            self.lead,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| c.clone() * T::from_ratio64(self.lead + Rational64::from_integer(n as i64)))
                .collect(),
        );
        if s.is_zero() {
            Self::zero(prec)
        } else {
            s
        }
    }

    pub fn theta_n(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |s, _| s.theta())
    }

    /// Splits a nonzero series as `c·q^v·(1 + …)`, returning `(c, v, 1 + …)`.
    pub fn unit_part(&self) -> Option<(T, Rational64, Self)> {
        let c = self.lead_coeff()?.clone();
        let inv = T::one() / c.clone();
        Some((
            c,
            self.lead,
            Self::new(
                Rational64::zero(),
                self.coeffs.iter().map(|x| x.clone() * inv.clone()).collect(),
            ),
        ))
    }

    /// Value at z with q = κ·exp(2πiz/ϖ), κ the cusp scale of `ctx`.
    pub fn evaluate(&self, z: Complex64, ctx: &HeckeContext) -> SeriesResult<Evaluation> {
        let logq = log_q(z, ctx)?;
        self.evaluate_log(logq)
    }

    /// Value with log q supplied directly.
    pub fn evaluate_log(&self, logq: Complex64) -> SeriesResult<Evaluation> {
        let q = logq.exp();
        let aq = q.norm();
        if aq >= 1.0 {
            return Err(SeriesError::Divergent(aq));
        }
        let lead = *self.lead.numer() as f64 / *self.lead.denom() as f64;
        let factor = (logq * lead).exp();
        if self.is_zero() {
            return Ok(Evaluation {
                value: Complex64::zero(),
                tail: factor.norm() / (1.0 - aq),
            });
        }
        let mut acc = Complex64::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * q + c.to_complex();
        }
        let n = self.coeffs.len();
        let last = self.coeffs[n.saturating_sub(3)..]
            .iter()
            .map(|c| c.abs_f64())
            .fold(0.0, f64::max);
        let tail = factor.norm() * last * aq.powi(n as i32) / (1.0 - aq);
        Ok(Evaluation {
            value: acc * factor,
            tail,
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lead": format!("{}/{}", self.lead.numer(), self.lead.denom()),
            "coeffs": self.coeffs.iter().map(|c| c.to_text()).collect::<Vec<_>>(),
            "mode": if T::EXACT { "exact" } else { "float" },
            "N": self.coeffs.len(),
        })
    }

    pub fn from_json(v: &Value) -> SeriesResult<Self> {
        let bad = |m: &str| SeriesError::Json(m.to_string());
        let lead = v["lead"].as_str().ok_or_else(|| bad("lead"))?;
        let lead = crate::scalar::parse_rational(lead).ok_or_else(|| bad("lead"))?;
        let lead = Rational64::new(
            i64::try_from(lead.numer()).map_err(|_| bad("lead"))?,
            i64::try_from(lead.denom()).map_err(|_| bad("lead"))?,
        );
        let mode = v["mode"].as_str().ok_or_else(|| bad("mode"))?;
        if (mode == "exact") != T::EXACT {
            return Err(bad("mode"));
        }
        let coeffs = v["coeffs"]
            .as_array()
            .ok_or_else(|| bad("coeffs"))?
            .iter()
            .map(|c| c.as_str().and_then(T::parse_text).ok_or_else(|| bad("coefficient")))
            .collect::<SeriesResult<Vec<T>>>()?;
        if v["N"].as_u64() != Some(coeffs.len() as u64) {
            return Err(bad("N"));
        }
        Ok(Self::new(lead, coeffs))
    }
}

/// log q = log κ + 2πiz/ϖ, the substitution value of τ.
pub fn log_q(z: Complex64, ctx: &HeckeContext) -> SeriesResult<Complex64> {
    if z.im <= 0.0 {
        return Err(SeriesError::NotInUpperHalfPlane(crate::scalar::format_complex(z)));
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * std::f64::consts::PI);
    Ok(two_pi_i * z / ctx.varpi + ctx.cusp_scale.ln())
}

impl QSeries<BigRational> {
    /// Exact series from integer coefficients starting at q^0.
    pub fn from_ints(c: &[i64]) -> Self {
        Self::from_coeffs(c.iter().map(|&x| BigRational::from_integer(x.into())).collect())
    }
}

impl<T: Scalar> PartialEq for QSeries<T> {
    fn eq(&self, other: &Self) -> bool {
        matches!(self.try_sub(other), Ok(d) if d.is_zero())
    }
}

impl<T: Scalar> fmt::Display for QSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let exp = |e: Rational64| -> String {
            if e.is_zero() {
                String::new()
            } else if e.is_one() {
                "q".into()
            } else if is_integer(e) {
                format!("q^{}", e)
            } else {
                format!("q^({})", e)
            }
        };
        let mut first = true;
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.lead + Rational64::from_integer(n as i64);
            let mut t = c.to_text();
            if T::EXACT {
                t = t.trim_end_matches("/1").to_string();
            }
            let (sign, body) = match t.strip_prefix('-') {
                Some(rest) if T::EXACT => ("-", rest.to_string()),
                _ => ("+", t.clone()),
            };
            let mono = exp(e);
            let term = if body == "1" && !mono.is_empty() {
                mono
            } else if mono.is_empty() {
                body
            } else {
                format!("{}*{}", body, mono)
            };
            if first {
                write!(f, "{}{}", if sign == "-" { "-" } else { "" }, term)?;
                first = false;
            } else {
                write!(f, " {} {}", sign, term)?;
            }
        }
        let o = format!("O({})", {
            let e = exp(self.precision());
            if e.is_empty() {
                "1".to_string()
            } else {
                e
            }
        });
        if first {
            write!(f, "{}", o)
        } else {
            write!(f, " + {}", o)
        }
    }
}

macro_rules! series_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, T: Scalar> $tr<&'a QSeries<T>> for &'a QSeries<T> {
            type Output = QSeries<T>;
            fn $m(self, rhs: &'a QSeries<T>) -> QSeries<T> {
                let f: fn(&QSeries<T>, &QSeries<T>) -> QSeries<T> = $body;
                f(self, rhs)
            }
        }
        impl<T: Scalar> $tr<QSeries<T>> for QSeries<T> {
            type Output = QSeries<T>;
            fn $m(self, rhs: QSeries<T>) -> QSeries<T> {
                (&self).$m(&rhs)
            }
        }
        impl<'a, T: Scalar> $tr<&'a QSeries<T>> for QSeries<T> {
            type Output = QSeries<T>;
            fn $m(self, rhs: &'a QSeries<T>) -> QSeries<T> {
                (&self).$m(rhs)
            }
        }
        impl<'a, T: Scalar> $tr<QSeries<T>> for &'a QSeries<T> {
            type Output = QSeries<T>;
            fn $m(self, rhs: QSeries<T>) -> QSeries<T> {
                self.$m(&rhs)
            }
        }
    };
}

// Operators panic on exponent-lattice mismatch; use `try_add`/`try_sub`
// where operands may live on different lattices.
series_binop!(Add, add, |a, b| a.try_add(b).expect("series addition"));
series_binop!(Sub, sub, |a, b| a.try_sub(b).expect("series subtraction"));
series_binop!(Mul, mul, |a, b| a.mul_series(b));

impl<T: Scalar> Neg for QSeries<T> {
    type Output = QSeries<T>;
    fn neg(self) -> QSeries<T> {
        -&self
    }
}

impl<T: Scalar> Neg for &QSeries<T> {
    type Output = QSeries<T>;
    fn neg(self) -> QSeries<T> {
        QSeries {
            lead: self.lead,
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }
}

/// Polynomial in τ = log q with series coefficients; θτ = 1.
#[derive(Clone, Debug)]
pub struct TauPoly<T> {
    terms: Vec<QSeries<T>>,
}

impl<T: Scalar> TauPoly<T> {
    pub fn new(terms: Vec<QSeries<T>>) -> Self {
        let mut p = TauPoly { terms };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        while self.terms.len() > 1 && self.terms.last().is_some_and(|t| t.is_zero()) {
            self.terms.pop();
        }
    }

    pub fn from_series(s: QSeries<T>) -> Self {
        TauPoly { terms: vec![s] }
    }

    /// τ itself, with coefficients known to relative precision `len`.
    pub fn tau(len: usize) -> Self {
        TauPoly {
            terms: vec![QSeries::zero(Rational64::from_integer(len as i64)), QSeries::one(len)],
        }
    }

    pub fn terms(&self) -> &[QSeries<T>] {
        &self.terms
    }

    /// Coefficient of τ^k (zero series beyond the degree).
    pub fn term(&self, k: usize) -> QSeries<T> {
        self.terms
            .get(k)
            .cloned()
            .unwrap_or_else(|| QSeries::zero(self.precision()))
    }

    pub fn degree(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.is_zero())
    }

    pub fn precision(&self) -> Rational64 {
        self.terms
            .iter()
            .map(|t| t.precision())
            .min()
            .unwrap_or_else(Rational64::zero)
    }

    pub fn try_add(&self, other: &Self) -> SeriesResult<Self> {
        let n = self.terms.len().max(other.terms.len());
        let terms = (0..n)
            .map(|k| match (self.terms.get(k), other.terms.get(k)) {
                (Some(a), Some(b)) => a.try_add(b),
                (Some(a), None) => Ok(a.clone()),
                (None, Some(b)) => Ok(b.clone()),
                (None, None) => unreachable!(),
            })
            .collect::<SeriesResult<Vec<_>>>()?;
        Ok(Self::new(terms))
    }

    pub fn try_sub(&self, other: &Self) -> SeriesResult<Self> {
        self.try_add(&other.neg_poly())
    }

    pub fn neg_poly(&self) -> Self {
        TauPoly {
            terms: self.terms.iter().map(|t| -t).collect(),
        }
    }

    pub fn try_mul(&self, other: &Self) -> SeriesResult<Self> {
        let n = self.terms.len() + other.terms.len() - 1;
        let mut out: Vec<Option<QSeries<T>>> = vec![None; n];
        for (i, a) in self.terms.iter().enumerate() {
            for (j, b) in other.terms.iter().enumerate() {
                let p = a.mul_series(b);
                out[i + j] = Some(match out[i + j].take() {
                    None => p,
                    Some(acc) => acc.try_add(&p)?,
                });
            }
        }
        Ok(Self::new(out.into_iter().map(|t| t.expect("filled")).collect()))
    }

    pub fn mul_series(&self, s: &QSeries<T>) -> Self {
        Self::new(self.terms.iter().map(|t| t.mul_series(s)).collect())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.terms.iter().map(|t| t.scale(c)).collect())
    }

    /// θ(Σ τ^k f_k) = Σ τ^k (θf_k + (k+1) f_{k+1}).
    pub fn theta(&self) -> Self {
        let n = self.terms.len();
        let terms = (0..n)
            .map(|k| {
                let d = self.terms[k].theta();
                if k + 1 < n {
                    let up = self.terms[k + 1].scale(&T::from_i64((k + 1) as i64));
                    d.try_add(&up).expect("τ-coefficients share a lattice")
                } else {
                    d
                }
            })
            .collect();
        Self::new(terms)
    }

    /// The τ⁰ coefficient when the polynomial is τ-free.
    pub fn as_series(&self) -> Option<QSeries<T>> {
        (self.degree() == 0).then(|| self.terms[0].clone())
    }

    /// Value at z with τ = log κ + 2πiz/ϖ.
    pub fn evaluate(&self, z: Complex64, ctx: &HeckeContext) -> SeriesResult<Evaluation> {
        let tau = log_q(z, ctx)?;
        let mut value = Complex64::zero();
        let mut tail = 0.0;
        let mut pow = Complex64::one();
        for t in &self.terms {
            let e = t.evaluate_log(tau)?;
            value += pow * e.value;
            tail += pow.norm() * e.tail;
            pow *= tau;
        }
        Ok(Evaluation { value, tail })
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.terms.iter().map(|t| t.to_json()).collect())
    }
}

impl<T: Scalar> PartialEq for TauPoly<T> {
    fn eq(&self, other: &Self) -> bool {
        matches!(self.try_sub(other), Ok(d) if d.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    type S = QSeries<BigRational>;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn e(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn difference_of_squares() {
        let a = S::from_ints(&[1, 1, 0, 0, 0]);
        let b = S::from_ints(&[1, -1, 0, 0, 0]);
        assert_eq!(&a * &b, S::from_ints(&[1, 0, -1, 0, 0]));
    }

    #[test]
    fn cancellation_and_shift() {
        let a = S::from_ints(&[1, 240, 0]);
        let b = S::from_ints(&[0, -240, 0]);
        assert_eq!(&a + &b, S::from_ints(&[1, 0, 0]));
        let qinv = S::monomial(r(1, 1), e(-1, 1), 4);
        let q2 = S::monomial(r(1, 1), e(2, 1), 4);
        let p = &qinv * &q2;
        assert_eq!(p.valuation(), Some(e(1, 1)));
        assert_eq!(p.coeffs()[0], r(1, 1));
    }

    #[test]
    fn truncation_to_shorter_operand() {
        let a = S::from_ints(&[1, 2, 3, 4, 5, 6]);
        let b = S::from_ints(&[1, 1]);
        assert_eq!((&a + &b).precision(), e(2, 1));
        assert_eq!((&a * &b).len(), 2);
    }

    #[test]
    fn geometric_inverse() {
        let a = S::from_ints(&[1, -1, 0, 0, 0, 0]);
        assert_eq!(a.inv().unwrap(), S::from_ints(&[1, 1, 1, 1, 1, 1]));
        let q = S::monomial(r(1, 1), e(1, 1), 3);
        assert_eq!(q.inv().unwrap().valuation(), Some(e(-1, 1)));
        let two = S::constant(r(2, 1), 3);
        assert_eq!(two.inv().unwrap().coeffs()[0], r(1, 2));
        assert_eq!(S::zero(e(3, 1)).inv(), Err(SeriesError::ZeroInverse));
    }

    #[test]
    fn theta_rules() {
        let a = S::from_ints(&[0, 1, 3, 0]);
        assert_eq!(a.theta(), S::from_ints(&[0, 1, 6, 0]));
        assert!(S::one(4).theta().is_zero());
        let m = S::monomial(r(1, 1), e(5, 6), 3).theta();
        assert_eq!(m.lead_coeff(), Some(&r(5, 6)));
        assert_eq!(m.valuation(), Some(e(5, 6)));
    }

    #[test]
    fn binomial_half_power() {
        let a = S::from_ints(&[1, 1, 0, 0, 0]);
        let h = a.pow_frac(e(1, 2)).unwrap();
        assert_eq!(h.coeffs()[..4], [r(1, 1), r(1, 2), r(-1, 8), r(1, 16)]);
        let m = S::monomial(r(1, 1), e(1, 1), 3).pow_frac(e(5, 6)).unwrap();
        assert_eq!(m.valuation(), Some(e(5, 6)));
        let b = S::from_ints(&[1, -24, 252, 0, 0]);
        assert_eq!(b.pow_frac(e(2, 1)).unwrap(), &b * &b);
        let c = S::constant(r(2, 1), 3);
        assert!(matches!(c.pow_frac(e(1, 2)), Err(SeriesError::NoRoot { .. })));
        let c4 = S::constant(r(4, 9), 3);
        assert_eq!(c4.pow_frac(e(1, 2)).unwrap().coeffs()[0], r(2, 3));
    }

    #[test]
    fn lattice_mismatch_is_an_error() {
        let a = S::monomial(r(1, 1), e(1, 2), 3);
        let b = S::one(3);
        assert!(matches!(a.try_add(&b), Err(SeriesError::Lattice(..))));
        let z = S::zero(e(3, 1));
        assert_eq!(a.try_add(&z).unwrap().valuation(), Some(e(1, 2)));
    }

    #[test]
    fn equality_respects_truncation() {
        let a = S::from_ints(&[1, 2, 3]);
        let b = S::from_ints(&[1, 2, 3, 4, 5]);
        assert_eq!(a, b);
        assert_ne!(a, S::from_ints(&[1, 2, 4]));
    }

    #[test]
    fn tau_poly_theta() {
        let f = S::from_ints(&[1, 3, -2, 7, 0]);
        let t = TauPoly::tau(5);
        let tf = t.mul_series(&f);
        let lhs = tf.theta().try_sub(&TauPoly::from_series(f.clone())).unwrap();
        let rhs = t.mul_series(&f.theta());
        assert!(lhs.try_sub(&rhs).unwrap().is_zero());
        assert_eq!(TauPoly::tau(4).theta(), TauPoly::from_series(S::one(4)));
    }

    #[test]
    fn json_round_trip() {
        let a = S::new(e(-1, 2), vec![r(3, 4), r(0, 1), r(-5, 1)]);
        let j = a.to_json();
        assert_eq!(j["lead"], "-1/2");
        assert_eq!(j["coeffs"][0], "3/4");
        assert_eq!(j["mode"], "exact");
        assert_eq!(S::from_json(&j).unwrap(), a);
        let f = a.to_complex();
        assert_eq!(f.to_json()["mode"], "float");
        assert_eq!(QSeries::<Complex64>::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn display_form() {
        let a = S::from_ints(&[1, -24, 252]);
        assert_eq!(a.to_string(), "1 - 24*q + 252*q^2 + O(q^3)");
        assert_eq!(S::zero(e(2, 1)).to_string(), "O(q^2)");
    }

    #[test]
    fn generic_float_series() {
        let a: QSeries<f64> = QSeries::from_coeffs(vec![1.0, 1.0, 0.0, 0.0]);
        let h = a.pow_frac(e(1, 2)).unwrap();
        assert!((h.coeffs()[2] + 0.125).abs() < 1e-15);
        let s: QSeries<f32> = QSeries::from_coeffs(vec![1.0, -1.0, 0.0]);
        assert_eq!(s.inv().unwrap().coeffs(), &[1.0f32, 1.0, 1.0]);
    }
}
