//! Hecke automorphic linear differential equations
//! ∂^{r+1}y + B₄∂^{r−1}y + ⋯ + B_{2r+2}y = 0, their θ-form, indicial roots
//! and q-Frobenius solutions with powers of τ = log q, the adapted
//! Wronskian and the Δ-power theorem.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::forms::{classical_eisenstein, discriminant, FormSystem, FormsError};
use crate::hecke::{HeckeContext, HeckeError};
use crate::matrixkit::{Mat, MatError};
use crate::scalar::{format_complex, ratio64_to_big, Scalar};
use crate::series::{QSeries, SeriesError, TauPoly};
use crate::vectorform::{LawCheck, LawReport};

type Q = BigRational;
type S = QSeries<Q>;
type P = TauPoly<Q>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrobeniusError {
    #[error("coefficients must read (1, 0, B4, …, B_(2r+2)): {0}")]
    NormalForm(String),
    #[error("indicial polynomial {0} has roots outside ℚ")]
    IrrationalExponents(String),
    #[error("θ-form coefficient A_{0} is not a power series in q")]
    NotRegular(usize),
    #[error("exponent {0} does not fit a 64-bit rational")]
    ExponentOverflow(String),
    #[error("Wronskian depends on τ (degree {0}); the solutions are not fundamental")]
    TauDependent(usize),
    #[error("expected {expected} solutions, got {got}")]
    Count { expected: usize, got: usize },
    #[error("at least one coefficient is required")]
    NoTerms,
    #[error("tail bound {bound:.3e} exceeds tolerance {tol:.3e} at z = {z}")]
    TailBound { bound: f64, tol: f64, z: String },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Matrix(#[from] MatError),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
}

pub type FrResult<T> = Result<T, FrobeniusError>;

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Number of known coefficients from q⁰ on; a zero series counts up to its precision.
fn known_len(s: &S) -> usize {
    s.precision().floor().to_integer().max(0) as usize
}

/// A Hecke automorphic linear differential equation of order r+1.
#[derive(Clone, Debug)]
pub struct HaldeSpec {
    pub ctx: HeckeContext,
    pub w: i64,
    pub r: usize,
    /// (1, 0, B₄, …, B_{2r+2}); `b[j]` multiplies ∂^{r+1−j}y.
    pub b: Vec<S>,
}

impl HaldeSpec {
    pub fn new(ctx: &HeckeContext, w: i64, r: usize, b: Vec<S>) -> FrResult<Self> {
        if b.len() != r + 2 {
            return Err(FrobeniusError::NormalForm(format!(
                "{} coefficients for r = {r}",
                b.len()
            )));
        }
        if b[0].is_zero() || b[0] != S::one(b[0].len()) {
            return Err(FrobeniusError::NormalForm("leading coefficient is not 1".into()));
        }
        if !b[1].is_zero() {
            return Err(FrobeniusError::NormalForm("B2 is not 0".into()));
        }
        Ok(HaldeSpec {
            ctx: ctx.clone(),
            w,
            r,
            b,
        })
    }

    /// Builds the equation from (B₂, B₄, …, B_{2r+2}) with the leading 1 implied.
    pub fn from_tail(ctx: &HeckeContext, w: i64, tail: Vec<S>) -> FrResult<Self> {
        let r = tail.len().checked_sub(1).ok_or(FrobeniusError::NoTerms)?;
        let len = tail.iter().map(known_len).max().unwrap_or(1).max(1);
        let mut b = vec![S::one(len)];
        b.extend(tail);
        Self::new(ctx, w, r, b)
    }

    pub fn order(&self) -> usize {
        self.r + 1
    }
}

/// Σ_{j=0}^{n} A_j θ^j with A_n = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaForm {
    pub a: Vec<S>,
}

impl ThetaForm {
    pub fn new(a: Vec<S>) -> FrResult<Self> {
        match a.last() {
            Some(top) if *top == S::one(top.len().max(1)) => Ok(ThetaForm { a }),
            Some(_) => Err(FrobeniusError::NormalForm("θ-form is not monic".into())),
            None => Err(FrobeniusError::NoTerms),
        }
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// Relative precision shared by all coefficients.
    fn len(&self) -> usize {
        self.a
            .iter()
            .map(|s| s.precision().to_integer().max(0) as usize)
            .min()
            .unwrap_or(0)
    }

    /// A_{j,m}: coefficient of q^m in A_j.
    fn coeff(&self, j: usize, m: usize) -> Q {
        self.a[j]
            .coeff(Rational64::from_integer(m as i64))
            .unwrap_or_else(Q::zero)
    }

    fn check_regular(&self) -> FrResult<()> {
        for (j, s) in self.a.iter().enumerate() {
            if let Some(v) = s.valuation() {
                if v < Rational64::zero() || !v.is_integer() {
                    return Err(FrobeniusError::NotRegular(j));
                }
            }
        }
        Ok(())
    }

    /// I_m(x) = Σ_j A_{j,m} x^j, ascending coefficients.
    fn shift_poly(&self, m: usize) -> Vec<Q> {
        (0..self.a.len()).map(|j| self.coeff(j, m)).collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.a.iter().map(|s| s.to_json()).collect())
    }
}

/// Expands every ∂^k into θ-powers and sums Σ B_j ∂^{r+1−j}.
pub fn to_theta_form(h: &HaldeSpec, fs: &FormSystem) -> FrResult<ThetaForm> {
    let len = h.b.iter().map(known_len).max().unwrap_or(1).max(1).min(fs.n_terms);
    let e2 = fs.e2().truncate_len(len);
    let n = h.order();
    let zero = S::zero(Rational64::from_integer(len as i64));
    // ops[k][i]: coefficient of θ^i in ∂^k.
    let mut ops: Vec<Vec<S>> = vec![vec![S::one(len)]];
    for k in 0..n {
        let wk = qi(h.w - h.r as i64 + 2 * k as i64);
        let c = &wk * &fs.ctx.b;
        let prev = &ops[k];
        let mut next = vec![zero.clone(); prev.len() + 1];
        for (i, ci) in prev.iter().enumerate() {
            next[i + 1] = &next[i + 1] + ci;
            next[i] = &(&next[i] + &ci.theta()) - &(&e2 * ci).scale(&c);
        }
        ops.push(next);
    }
    let mut a = vec![zero; n + 1];
    for (j, bj) in h.b.iter().enumerate() {
        for (i, c) in ops[n - j].iter().enumerate() {
            a[i] = &a[i] + &(bj * c);
        }
    }
    ThetaForm::new(a)
}

/// Indicial polynomial with its rational roots, largest first, repeated by
/// multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicial {
    /// Ascending coefficients of Σ A_{j,0} λ^j.
    pub poly: Vec<Q>,
    pub roots: Vec<Q>,
}

impl Indicial {
    pub fn multiplicity(&self, x: &Q) -> usize {
        self.roots.iter().filter(|r| *r == x).count()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "polynomial": self.poly.iter().map(Scalar::to_text).collect::<Vec<_>>(),
            "exponents": self.roots.iter().map(Scalar::to_text).collect::<Vec<_>>(),
        })
    }
}

fn poly_text(p: &[Q]) -> String {
    let mut parts = Vec::new();
    for (j, c) in p.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let mono = match j {
            0 => String::new(),
            1 => "λ".to_string(),
            _ => format!("λ^{j}"),
        };
        parts.push(if mono.is_empty() {
            c.to_text()
        } else {
            format!("{}*{}", c.to_text(), mono)
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

fn eval_poly(p: &[Q], x: &Q) -> Q {
    p.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
}

/// Quotient of p by (λ − x), assuming x is a root.
fn deflate(p: &[Q], x: &Q) -> Vec<Q> {
    let n = p.len() - 1;
    let mut out = vec![Q::zero(); n];
    let mut carry = Q::zero();
    for j in (1..=n).rev() {
        carry = &p[j] + carry * x;
        out[j - 1] = carry.clone();
    }
    out
}

fn divisors(n: &BigInt) -> Option<Vec<u64>> {
    let n = n.abs().to_u64()?;
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    Some(out)
}

pub fn indicial(tf: &ThetaForm) -> FrResult<Indicial> {
    tf.check_regular()?;
    let poly = tf.shift_poly(0);
    let mut p = poly.clone();
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    let mut roots = Vec::new();
    while p.len() > 1 && p[0].is_zero() {
        roots.push(Q::zero());
        p.remove(0);
    }
    if p.len() > 1 {
        let lcm = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p
            .iter()
            .map(|c| (c * Q::from_integer(lcm.clone())).to_integer())
            .collect();
        let fail = || FrobeniusError::IrrationalExponents(poly_text(&poly));
        let num = divisors(&ints[0]).ok_or_else(fail)?;
        let den = divisors(ints.last().unwrap()).ok_or_else(fail)?;
        let mut candidates = Vec::new();
        for a in &num {
            for b in &den {
                let x = Q::new(BigInt::from(*a), BigInt::from(*b));
                candidates.push(x.clone());
                candidates.push(-x);
            }
        }
        candidates.sort();
        candidates.dedup();
        for x in candidates {
            while p.len() > 1 && eval_poly(&p, &x).is_zero() {
                p = deflate(&p, &x);
                roots.push(x.clone());
            }
        }
        if p.len() > 1 {
            return Err(fail());
        }
    }
    roots.sort_by(|a, b| b.cmp(a));
    Ok(Indicial { poly, roots })
}

/// A q-Frobenius solution q^λ Σ_n q^n P_n(τ).
#[derive(Clone, Debug)]
pub struct FrobeniusSolution {
    pub exponent: Rational64,
    /// Which solution among those attached to a repeated exponent.
    pub log_index: usize,
    pub body: P,
}

impl FrobeniusSolution {
    pub fn tau_degree(&self) -> usize {
        self.body.degree()
    }

    /// Coefficient of τ^k q^{λ+n}.
    pub fn coefficient(&self, k: usize, n: usize) -> Q {
        self.body
            .term(k)
            .coeff(self.exponent + Rational64::from_integer(n as i64))
            .unwrap_or_else(Q::zero)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "exponent": format!("{}/{}", self.exponent.numer(), self.exponent.denom()),
            "log_index": self.log_index,
            "tau_degree": self.tau_degree(),
            "leading_coefficient": self.coefficient(self.log_index, 0).to_text(),
            "body": self.body.to_json(),
        })
    }
}

/// Polynomials in τ, ascending coefficients.
type TauCoeffs = Vec<Q>;

/// Taylor coefficients of I at x: I(x + D) = Σ c_i D^i.
fn taylor(p: &[Q], x: &Q) -> Vec<Q> {
    let n = p.len();
    (0..n)
        .map(|i| {
            (i..n).fold(Q::zero(), |acc, j| {
                let c = Q::from_integer(crate::scalar::binomial(j as i64, i as i64));
                acc + c * &p[j] * num_traits::Pow::pow(x, (j - i) as u32)
            })
        })
        .collect()
}

fn deriv(p: &[Q]) -> TauCoeffs {
    p.iter().enumerate().skip(1).map(|(k, c)| c * qi(k as i64)).collect()
}

fn integrate(p: &[Q]) -> TauCoeffs {
    let mut out = vec![Q::zero()];
    out.extend(p.iter().enumerate().map(|(k, c)| c / qi(k as i64 + 1)));
    out
}

fn add_into(acc: &mut TauCoeffs, p: &[Q], scale: &Q) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Q::zero());
    }
    for (a, c) in acc.iter_mut().zip(p) {
        *a += c * scale;
    }
}

/// Σ c_i D^i P.
fn apply_op(c: &[Q], p: &[Q]) -> TauCoeffs {
    let mut out = Vec::new();
    let mut d = p.to_vec();
    for ci in c {
        if d.is_empty() {
            break;
        }
        if !ci.is_zero() {
            add_into(&mut out, &d, ci);
        }
        d = deriv(&d);
    }
    out
}

/// Solves Σ c_i D^i P = R with c_m the first nonzero coefficient; the kernel
/// (polynomials of degree < m) is fixed at 0.
fn solve_op(c: &[Q], rhs: &[Q]) -> TauCoeffs {
    let m = c.iter().position(|x| !x.is_zero()).expect("nonzero operator");
    let lead = &c[m];
    let tail: Vec<Q> = c[m..].iter().map(|x| x / lead).collect();
    let v: TauCoeffs = rhs.iter().map(|x| x / lead).collect();
    // (1 + N)S = V with N nilpotent: S = Σ_t (−N)^t V.
    let mut s = v.clone();
    let mut term = v;
    let mut nil = tail.clone();
    nil[0] = Q::zero();
    for _ in 0..=rhs.len() {
        term = apply_op(&nil, &term).into_iter().map(|x| -x).collect();
        if term.iter().all(Zero::is_zero) {
            break;
        }
        add_into(&mut s, &term, &Q::one());
    }
    (0..m).fold(s, |acc, _| integrate(&acc))
}

fn to_ratio64(x: &Q) -> FrResult<Rational64> {
    let n = x.numer().to_i64();
    let d = x.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Rational64::new(n, d)),
        _ => Err(FrobeniusError::ExponentOverflow(x.to_text())),
    }
}

/// One solution starting at q^ρ with P_0 = τ^i.
fn solve_branch(tf: &ThetaForm, rho: &Q, i: usize, n_terms: usize) -> FrResult<FrobeniusSolution> {
    let shifts: Vec<Vec<Q>> = (0..n_terms).map(|m| tf.shift_poly(m)).collect();
    let mut ps: Vec<TauCoeffs> = Vec::with_capacity(n_terms);
    let mut p0 = vec![Q::zero(); i + 1];
    p0[i] = Q::one();
    ps.push(p0);
    for n in 1..n_terms {
        let mut rhs: TauCoeffs = Vec::new();
        for m in 1..=n {
            if shifts[m].iter().all(Zero::is_zero) {
                continue;
            }
            let x = rho + qi((n - m) as i64);
            add_into(&mut rhs, &apply_op(&taylor(&shifts[m], &x), &ps[n - m]), &-Q::one());
        }
        let c = taylor(&shifts[0], &(rho + qi(n as i64)));
        let p = if rhs.iter().all(Zero::is_zero) {
            Vec::new()
        } else {
            solve_op(&c, &rhs)
        };
        ps.push(p);
    }
    let exponent = to_ratio64(rho)?;
    let degree = ps
        .iter()
        .map(|p| p.iter().rposition(|c| !c.is_zero()).unwrap_or(0))
        .max()
        .unwrap_or(0);
    let terms = (0..=degree)
        .map(|k| {
            let coeffs = ps.iter().map(|p| p.get(k).cloned().unwrap_or_else(Q::zero)).collect();
            let s = S::new(exponent, coeffs);
            if s.is_zero() {
                S::zero(exponent + Rational64::from_integer(n_terms as i64))
            } else {
                s
            }
        })
        .collect();
    Ok(FrobeniusSolution {
        exponent,
        log_index: i,
        body: TauPoly::new(terms),
    })
}

/// A full set of q-Frobenius solutions to relative order `n_terms`, one per
/// indicial root counted with multiplicity, in descending exponent order.
pub fn frobenius_solve(tf: &ThetaForm, n_terms: usize) -> FrResult<Vec<FrobeniusSolution>> {
    if n_terms == 0 {
        return Err(FrobeniusError::NoTerms);
    }
    let ind = indicial(tf)?;
    let n_terms = n_terms.min(tf.len());
    let mut branches = Vec::new();
    let mut k = 0;
    while k < ind.roots.len() {
        let rho = &ind.roots[k];
        let m = ind.multiplicity(rho);
        for i in 0..m {
            branches.push((rho.clone(), i));
        }
        k += m;
    }
    branches
        .par_iter()
        .map(|(rho, i)| solve_branch(tf, rho, *i, n_terms))
        .collect()
}

/// Σ A_j θ^j y.
pub fn residual(tf: &ThetaForm, y: &P) -> FrResult<P> {
    let mut d = y.clone();
    let mut acc: Option<P> = None;
    for (j, a) in tf.a.iter().enumerate() {
        if j > 0 {
            d = d.theta();
        }
        let term = d.mul_series(a);
        acc = Some(match acc {
            None => term,
            Some(x) => x.try_add(&term)?,
        });
    }
    acc.ok_or(FrobeniusError::NoTerms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WronskianMode {
    /// Rows ∂^i y with the Serre ladder from weight w − r.
    Serre,
    /// Rows θ^i y.
    Theta,
}

impl std::str::FromStr for WronskianMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "serre" => Ok(WronskianMode::Serre),
            "theta" => Ok(WronskianMode::Theta),
            _ => Err(format!("unknown Wronskian mode `{s}`")),
        }
    }
}

/// det of the (r+1)×(r+1) derivative matrix; must be free of τ.
pub fn wronskian(sols: &[P], mode: WronskianMode, fs: &FormSystem, w: i64, r: usize) -> FrResult<S> {
    if sols.len() != r + 1 {
        return Err(FrobeniusError::Count {
            expected: r + 1,
            got: sols.len(),
        });
    }
    let cols: Vec<Vec<P>> = sols
        .iter()
        .map(|y| {
            let mut rows = vec![y.clone()];
            for i in 1..=r {
                let prev = &rows[i - 1];
                rows.push(match mode {
                    WronskianMode::Theta => prev.theta(),
                    WronskianMode::Serre => {
                        let wk = qi(w - r as i64 + 2 * (i as i64 - 1));
                        crate::forms::serre_derivative_tau(prev, &wk, fs)
                    }
                });
            }
            rows
        })
        .collect();
    let m = Mat::from_fn(r + 1, r + 1, |i, k| cols[k][i].clone());
    let det = m.det()?;
    det.as_series().ok_or(FrobeniusError::TauDependent(det.degree()))
}

/// W / Δ^{w(r+1)/δ} split into its constant and the rest.
#[derive(Clone, Debug)]
pub struct DeltaPower {
    pub exponent: Rational64,
    pub constant: Q,
    pub residual: S,
}

impl DeltaPower {
    pub fn holds(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "exponent": format!("{}/{}", self.exponent.numer(), self.exponent.denom()),
            "constant": self.constant.to_text(),
            "holds": self.holds(),
            "residual": self.residual.to_json(),
        })
    }
}

pub fn delta_power_check(wr: &S, fs: &FormSystem, w: i64, r: usize) -> FrResult<DeltaPower> {
    let exponent = Rational64::new(w * (r as i64 + 1), fs.ctx.delta);
    let delta = discriminant(fs)?.series;
    let len = wr.len().min(delta.len());
    let power = delta.truncate_len(len).pow_frac(exponent)?;
    let ratio = wr.truncate_len(len).try_div(&power)?;
    let constant = ratio.constant_term().unwrap_or_else(Q::zero);
    Ok(DeltaPower {
        exponent,
        constant,
        residual: ratio.nonconstant_part(),
    })
}

/// W(−1/z)/z^k − W(z) (`wronskian.S`) and W(z + ϖ) − W(z) (`wronskian.T`).
pub fn wronskian_modularity(wr: &S, ctx: &HeckeContext, k: i64, points: &[Complex64], tol: f64) -> FrResult<LawReport> {
    let per: Vec<Vec<LawCheck>> = points
        .par_iter()
        .map(|&z| -> FrResult<Vec<LawCheck>> {
            let at = wr.evaluate(z, ctx)?;
            let sz = ctx.apply_s(z)?;
            let at_s = wr.evaluate(sz, ctx)?;
            let at_t = wr.evaluate(ctx.apply_t(z, 1), ctx)?;
            let zk = z.powi(k as i32);
            let s_tail = at_s.tail / zk.norm() + at.tail;
            let t_tail = at_t.tail + at.tail;
            let bound = s_tail.max(t_tail);
            if bound.is_nan() || bound > tol {
                return Err(FrobeniusError::TailBound {
                    bound,
                    tol,
                    z: format_complex(z),
                });
            }
            Ok(vec![
                LawCheck {
                    law: "wronskian.S".into(),
                    z,
                    residual: (at_s.value / zk - at.value).norm(),
                    tail: s_tail,
                },
                LawCheck {
                    law: "wronskian.T".into(),
                    z,
                    residual: (at_t.value - at.value).norm(),
                    tail: t_tail,
                },
            ])
        })
        .collect::<FrResult<_>>()?;
    Ok(LawReport {
        checks: per.into_iter().flatten().collect(),
    })
}

/// det [[E₄,E₆,E₈],[E₆,E₈,E₁₀],[E₈,E₁₀,E₁₂]] / Δ².
#[derive(Clone, Debug)]
pub struct Garvan {
    pub determinant: S,
    pub constant: Q,
    pub residual: S,
}

impl Garvan {
    pub fn holds(&self) -> bool {
        self.residual.is_zero()
    }
}

/// The Hankel determinant of (e₄, e₆, e₈, e₁₀, e₁₂) divided by Δ².
pub fn garvan_from(e: &[S; 5], delta: &S) -> FrResult<Garvan> {
    let m = Mat::from_fn(3, 3, |i, j| e[i + j].clone());
    let determinant = m.det()?;
    let ratio = determinant.try_div(&delta.pow_int(2)?)?;
    Ok(Garvan {
        constant: ratio.constant_term().unwrap_or_else(Q::zero),
        residual: ratio.nonconstant_part(),
        determinant,
    })
}

/// The identity for the classical level-one Eisenstein series, with
/// Δ = (E₄³ − E₆²)/1728.
pub fn garvan_check(n_terms: usize) -> FrResult<Garvan> {
    // Δ starts at q, so Δ² costs two orders of relative precision.
    let n = n_terms + 2;
    let e = [4, 6, 8, 10, 12].map(|k| classical_eisenstein(k / 2, n));
    let delta = (&e[0].pow_int(3)? - &e[1].pow_int(2)?).scale(&Q::new(1.into(), 1728.into()));
    let g = garvan_from(&e, &delta)?;
    Ok(Garvan {
        determinant: g.determinant,
        constant: g.constant,
        residual: g.residual.truncate(Rational64::from_integer(n_terms as i64)),
    })
}

/// The exponent λ as a big rational.
pub fn exponent_value(s: &FrobeniusSolution) -> Q {
    ratio64_to_big(s.exponent)
}
