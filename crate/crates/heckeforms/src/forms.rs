//! q-expansions of the canonical forms on 𝔥(ϖ_μ): the normalized
//! Eisenstein series Ê₂, …, Ê₂μ from the generalized Ramanujan system, û and
//! v̂, the hauptmodul J, the discriminant Δ, the Ramanujan-Serre derivative
//! and the Darboux-Halphen triple.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::hecke::HeckeContext;
use crate::matrixkit::{solve_affine, Mat};
use crate::scalar::{binomial, Scalar};
use crate::series::{QSeries, SeriesError, TauPoly};

type Q = BigRational;
type S = QSeries<Q>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormsError {
    #[error("Ramanujan recursion is singular at order {0}")]
    SingularRecursion(usize),
    #[error("at least one coefficient is required")]
    NoTerms,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("Darboux-Halphen coefficient matrix is singular")]
    SingularDh,
    #[error("no rational scale fits the Darboux-Halphen residual")]
    DhFit,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// One monomial `coef · Π E_{2(f+1)}` of a Ramanujan line.
#[derive(Clone, Debug)]
pub struct Term {
    pub coef: Q,
    /// Indices k−1 of the factors Ê₂ₖ; one or two entries.
    pub factors: Vec<usize>,
}

/// θÊ_{2(target+1)} = Σ terms.
#[derive(Clone, Debug)]
pub struct Line {
    pub target: usize,
    pub terms: Vec<Term>,
}

/// The μ lines of the generalized Ramanujan system:
/// θE₂ = b(E₂² − E₄) and, for 2 ≤ k ≤ μ,
/// θE₂ₖ = k(μ−2)/(2μ)·E₂ₖE₂ − (μ−k)/μ·E₂ₖ₊₂ − (k−2)/2·E₄E₂ₖ₋₂.
pub fn ramanujan_lines(mu: i64) -> Vec<Line> {
    let b = q(mu - 2, 4 * mu);
    let mut lines = vec![Line {
        target: 0,
        terms: vec![
            Term {
                coef: b.clone(),
                factors: vec![0, 0],
            },
            Term {
                coef: -b,
                factors: vec![1],
            },
        ],
    }];
    for k in 2..=mu {
        let t = (k - 1) as usize;
        let mut terms = vec![Term {
            coef: q(k * (mu - 2), 2 * mu),
            factors: vec![t, 0],
        }];
        if k < mu {
            terms.push(Term {
                coef: -q(mu - k, mu),
                factors: vec![t + 1],
            });
        }
        if k > 2 {
            terms.push(Term {
                coef: -q(k - 2, 2),
                factors: vec![1, t - 1],
            });
        }
        lines.push(Line { target: t, terms });
    }
    lines
}

#[derive(Clone, Debug)]
pub struct FormSystem {
    pub ctx: HeckeContext,
    /// `e[k-1]` is Ê₂ₖ, k = 1..μ.
    pub e: Vec<S>,
    /// Number of coefficients q⁰ … q^{N−1}.
    pub n_terms: usize,
}

/// Σ_{i=1}^{n−1} a_i b_{n−i}.
fn inner_conv(a: &[Q], b: &[Q], n: usize) -> Q {
    (1..n).fold(Q::zero(), |acc, i| acc + &a[i] * &b[n - i])
}

/// Solves the Ramanujan system order by order.
pub fn eisenstein_system(ctx: &HeckeContext, n_terms: usize) -> Result<FormSystem, FormsError> {
    if n_terms == 0 {
        return Err(FormsError::NoTerms);
    }
    let mu = ctx.mu as usize;
    let lines = ramanujan_lines(ctx.mu);
    let mut e: Vec<Vec<Q>> = vec![vec![Q::one()]; mu];
    for n in 1..n_terms {
        let mut a = Mat::<Q>::zeros(mu, mu);
        let mut rhs = vec![Q::zero(); mu];
        for (li, line) in lines.iter().enumerate() {
            let t = line.target;
            a.set(li, t, a.get(li, t) + qi(n as i64));
            for term in &line.terms {
                for &f in &term.factors {
                    a.set(li, f, a.get(li, f) - &term.coef);
                }
                if let [x, y] = term.factors[..] {
                    rhs[li] += &term.coef * inner_conv(&e[x], &e[y], n);
                }
            }
        }
        let sol = solve_affine(&a, &rhs).map_err(|_| FormsError::SingularRecursion(n))?;
        let x = match (n, sol.kernel.len()) {
            (_, 0) if n > 1 => sol.particular,
            (1, 1) => scale_gauge(ctx, &sol.kernel[0])?,
            (_, 1) => resonance_gauge(ctx, &e, n, &sol.particular, &sol.kernel[0])?,
            _ => return Err(FormsError::SingularRecursion(n)),
        };
        for (k, c) in x.into_iter().enumerate() {
            e[k].push(c);
        }
    }
    Ok(FormSystem {
        ctx: ctx.clone(),
        e: e.into_iter().map(S::from_coeffs).collect(),
        n_terms,
    })
}

/// Fixes the scale of q at order 1 so that J = E₄³/(E₄³ − E₆²) = d/q + O(1).
fn scale_gauge(ctx: &HeckeContext, v: &[Q]) -> Result<Vec<Q>, FormsError> {
    if v[0].is_zero() {
        return Err(FormsError::SingularRecursion(1));
    }
    let v: Vec<Q> = v.iter().map(|x| x / &v[0]).collect();
    let lin = qi(3) * &v[1] - qi(2) * &v[2];
    if lin.is_zero() {
        return Err(FormsError::SingularRecursion(1));
    }
    let s = (&ctx.cusp_rational * lin).recip();
    Ok(v.into_iter().map(|x| x * &s).collect())
}

/// Fixes a free parameter at order n ≥ 2 by asking the discriminant equation
/// θΔ − δbÊ₂Δ = 0 to hold at the first order the parameter reaches.
fn resonance_gauge(ctx: &HeckeContext, e: &[Vec<Q>], n: usize, p: &[Q], k: &[Q]) -> Result<Vec<Q>, FormsError> {
    let trial = |t: &Q| -> Vec<Q> { p.iter().zip(k).map(|(a, b)| a + b * t).collect() };
    let coefficient = |x: &[Q]| -> Result<Q, FormsError> {
        let ser = |i: usize| {
            let mut c = e[i].clone();
            c.push(x[i].clone());
            S::from_coeffs(c)
        };
        let d = discriminant_raw(ctx, &ser(1), &ser(2))?;
        let lead = d.valuation().ok_or(FormsError::SingularRecursion(n))?;
        let r = d.theta() - (&ser(0) * &d).scale(&(qi(ctx.delta) * &ctx.b));
        Ok(r.coeff(lead + Rational64::from_integer(n as i64 - 1))
            .unwrap_or_else(Q::zero))
    };
    let c0 = coefficient(&trial(&Q::zero()))?;
    let c1 = coefficient(&trial(&Q::one()))?;
    if c1 == c0 {
        return Err(FormsError::SingularRecursion(n));
    }
    Ok(trial(&(-&c0 / (c1 - &c0))))
}

impl FormSystem {
    pub fn mu(&self) -> i64 {
        self.ctx.mu
    }

    /// Ê₂ₖ for 1 ≤ k ≤ μ.
    pub fn eisenstein(&self, k: usize) -> Option<&S> {
        k.checked_sub(1).and_then(|i| self.e.get(i))
    }

    pub fn e2(&self) -> &S {
        &self.e[0]
    }

    pub fn e4(&self) -> &S {
        &self.e[1]
    }

    pub fn e6(&self) -> &S {
        &self.e[2]
    }

    /// A series by name: E2 … E{2μ}, u, v, J, Jnorm, Delta.
    pub fn symbol(&self, name: &str) -> Result<S, FormsError> {
        match name {
            "u" => Ok(invert_uv(self).0),
            "v" => Ok(invert_uv(self).1),
            "J" => hauptmodul(self),
            "Jnorm" => hauptmodul_normalized(self),
            "Delta" => Ok(discriminant(self)?.series),
            _ => name
                .strip_prefix('E')
                .and_then(|w| w.parse::<usize>().ok())
                .filter(|w| w % 2 == 0)
                .and_then(|w| self.eisenstein(w / 2))
                .cloned()
                .ok_or_else(|| FormsError::UnknownSymbol(name.to_string())),
        }
    }
}

/// RHS − θÊ₂ₖ for each line of the Ramanujan system.
pub fn ramanujan_residual(fs: &FormSystem) -> Vec<S> {
    residual_of(&fs.e, fs.mu())
}

/// Residuals of the Ramanujan system for arbitrary series Ê₂, …, Ê₂μ.
pub fn residual_of(e: &[S], mu: i64) -> Vec<S> {
    ramanujan_lines(mu)
        .iter()
        .map(|line| {
            let rhs = line
                .terms
                .iter()
                .map(|t| {
                    let prod = t.factors[1..]
                        .iter()
                        .fold(e[t.factors[0]].clone(), |acc, &f| &acc * &e[f]);
                    prod.scale(&t.coef)
                })
                .reduce(|a, b| &a + &b)
                .expect("every line has terms");
            rhs - e[line.target].theta()
        })
        .collect()
}

/// û = Ê₄²/Ê₆ and v̂ = Ê₆/Ê₄, so ûv̂ = Ê₄ and ûv̂² = Ê₆.
pub fn invert_uv(fs: &FormSystem) -> (S, S) {
    let (e4, e6) = (fs.e4(), fs.e6());
    let u = (e4 * e4).try_div(e6).expect("Ê₆ has constant term 1");
    let v = e6.try_div(e4).expect("Ê₄ has constant term 1");
    (u, v)
}

/// J = v̂/(v̂ − û), taken literally.
pub fn hauptmodul(fs: &FormSystem) -> Result<S, FormsError> {
    let (u, v) = invert_uv(fs);
    Ok(v.try_div(&(&v - &u))?)
}

/// 1 − J = E₄³/(E₄³ − E₆²), with J(r₁) = 1, J(r₂) = 0 and a pole at i∞.
pub fn hauptmodul_normalized(fs: &FormSystem) -> Result<S, FormsError> {
    normalized_j(fs.e4(), fs.e6())
}

fn normalized_j(e4: &S, e6: &S) -> Result<S, FormsError> {
    let c = &(e4 * e4) * e4;
    Ok(c.try_div(&(&c - &(e6 * e6)))?)
}

/// Affine map x ↦ αx + β taking (J(r₁), J(r₂)) to (1, 0).
#[derive(Clone, Copy, Debug)]
pub struct MobiusFit {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub j_r1: Complex64,
    pub j_r2: Complex64,
}

/// Fits the renormalization of the literal J from its values at the vertices.
pub fn fit_hauptmodul(fs: &FormSystem) -> Result<MobiusFit, FormsError> {
    let j = hauptmodul(fs)?;
    let j_r1 = j.evaluate(fs.ctx.r1, &fs.ctx)?.value;
    let j_r2 = j.evaluate(fs.ctx.r2, &fs.ctx)?.value;
    let alpha = (j_r1 - j_r2).inv();
    Ok(MobiusFit {
        alpha,
        beta: -j_r2 * alpha,
        j_r1,
        j_r2,
    })
}

/// Δ with lead coefficient 1, the stripped constant and the weight δ.
#[derive(Clone, Debug)]
pub struct Discriminant {
    pub series: S,
    pub constant: Q,
    pub weight: i64,
}

fn discriminant_raw(ctx: &HeckeContext, e4: &S, e6: &S) -> Result<S, FormsError> {
    let mu = ctx.mu;
    let j = normalized_j(e4, e6)?;
    let len = j.len();
    let jm1 = &j - &S::one(len + 1);
    let ratio = j.theta().try_div(&(&j * &jm1))?;
    let d = if mu % 2 == 0 {
        &(&ratio.pow_int(mu)? * &j) * &jm1.pow_int(mu / 2)?
    } else {
        &(&ratio.pow_int(2 * mu)? * &j.pow_int(2)?) * &jm1.pow_int(mu)?
    };
    Ok(d)
}

/// The Hecke automorphic discriminant built from the normalized hauptmodul:
/// (θJ/(J(J−1)))^μ J (J−1)^{μ/2} for even μ and
/// (θJ/(J(J−1)))^{2μ} J² (J−1)^μ for odd μ.
pub fn discriminant(fs: &FormSystem) -> Result<Discriminant, FormsError> {
    let d = discriminant_raw(&fs.ctx, fs.e4(), fs.e6())?;
    let (constant, _, _) = d.unit_part().ok_or(FormsError::SingularRecursion(0))?;
    Ok(Discriminant {
        series: d.scale(&constant.recip()),
        constant,
        weight: fs.ctx.delta,
    })
}

/// ∂_w f = θf − w·b·Ê₂·f.
pub fn serre_derivative<T: Scalar>(f: &QSeries<T>, w: &Q, fs: &FormSystem) -> QSeries<T> {
    let e2: QSeries<T> = fs.e2().map(T::from_rational);
    let c = T::from_rational(&(w * &fs.ctx.b));
    f.theta() - (&e2 * f).scale(&c)
}

/// ∂_w on τ-polynomials.
pub fn serre_derivative_tau<T: Scalar>(f: &TauPoly<T>, w: &Q, fs: &FormSystem) -> TauPoly<T> {
    let e2: QSeries<T> = fs.e2().map(T::from_rational);
    let c = T::from_rational(&(w * &fs.ctx.b));
    f.theta().try_sub(&f.mul_series(&e2).scale(&c)).expect("shared lattice")
}

/// ∂^k = ∂_{w+2(k−1)} ∘ … ∘ ∂_w.
pub fn serre_iterated<T: Scalar>(f: &QSeries<T>, w: &Q, k: usize, fs: &FormSystem) -> QSeries<T> {
    (0..k).fold(f.clone(), |g, i| serre_derivative(&g, &(w + qi(2 * i as i64)), fs))
}

/// Solution triple of the Darboux-Halphen system reconstructed from Ê₂, û, v̂.
#[derive(Clone, Debug)]
pub struct DhTriple {
    pub y1: S,
    pub y2: S,
    pub y3: S,
    pub fitted_scale: Q,
}

/// Rows (1, −1, 0), (0, −1, 1), ((b−a)/b, −1, (b+a−1)/b).
pub fn dh_matrix(ctx: &HeckeContext) -> Mat<Q> {
    let (a, b) = (&ctx.a, &ctx.b);
    Mat::from_rows(vec![
        vec![qi(1), qi(-1), qi(0)],
        vec![qi(0), qi(-1), qi(1)],
        vec![(b - a) / b, qi(-1), (b + a - qi(1)) / b],
    ])
    .expect("rectangular")
}

/// The three right-hand sides of the Hecke Darboux-Halphen system, minus θy.
pub fn dh_residual(t: &DhTriple, ctx: &HeckeContext) -> [S; 3] {
    let mu = ctx.mu;
    let (y1, y2, y3) = (&t.y1, &t.y2, &t.y3);
    let (p12, p13, p23) = (y1 * y2, y1 * y3, y2 * y3);
    let r1 = (&(&p12 + &p13) - &p23).scale(&-q(3 * mu - 2, 4 * mu)) - (y1 * y1).scale(&q(1, mu)) - y1.theta();
    let r2 = (&(&p12 + &p23) - &p13).scale(&-q(3 * mu + 2, 4 * mu)) - y2.theta();
    let r3 = (&(&p13 + &p23) - &p12).scale(&-q(mu - 2, 4 * mu)) - (y3 * y3).scale(&q(1, 2)) - y3.theta();
    [r1, r2, r3]
}

fn dh_line1_constant(y: &[Q], mu: i64) -> Q {
    let (y1, y2, y3) = (&y[0], &y[1], &y[2]);
    -q(3 * mu - 2, 4 * mu) * (y1 * y2 + y1 * y3 - y2 * y3) - q(1, mu) * y1 * y1
}

/// Solves ŷ₁ − ŷ₂ = û, ŷ₃ − ŷ₂ = v̂, ((b−a)ŷ₁ − bŷ₂ + (b+a−1)ŷ₃)/b = sÊ₂,
/// with s fitted so that the constant term of the first DH residual vanishes.
pub fn recover_dh(fs: &FormSystem) -> Result<DhTriple, FormsError> {
    let ctx = &fs.ctx;
    let m = dh_matrix(ctx);
    let inv = m.inverse().map_err(|_| FormsError::SingularDh)?;
    let y_at = |s: &Q| -> Vec<Q> {
        (0..3)
            .map(|i| inv.get(i, 0) + inv.get(i, 1) + inv.get(i, 2) * s)
            .collect()
    };
    let f = |s: i64| dh_line1_constant(&y_at(&qi(s)), ctx.mu);
    let (f0, f1, fm) = (f(0), f(1), f(-1));
    let qa = (&f1 + &fm) / qi(2) - &f0;
    let qb = (&f1 - &fm) / qi(2);
    let s = fit_quadratic_root(&qa, &qb, &f0).ok_or(FormsError::DhFit)?;
    let (u, v) = invert_uv(fs);
    let e2s = fs.e2().scale(&s);
    let row = |i: usize| -> S { &(&u.scale(inv.get(i, 0)) + &v.scale(inv.get(i, 1))) + &e2s.scale(inv.get(i, 2)) };
    Ok(DhTriple {
        y1: row(0),
        y2: row(1),
        y3: row(2),
        fitted_scale: s,
    })
}

/// Rational root of a s² + b s + c nearest to 1.
fn fit_quadratic_root(a: &Q, b: &Q, c: &Q) -> Option<Q> {
    if a.is_zero() {
        return (!b.is_zero()).then(|| -c / b);
    }
    let disc = b * b - qi(4) * a * c;
    if disc.is_negative() {
        return None;
    }
    let root = disc.pow_rational(Rational64::new(1, 2))?;
    let two_a = qi(2) * a;
    let r1 = (-b + &root) / &two_a;
    let r2 = (-b - &root) / &two_a;
    Some(if (&r1 - qi(1)).abs() <= (&r2 - qi(1)).abs() {
        r1
    } else {
        r2
    })
}

/// Bernoulli number B_m with B₁ = −1/2.
pub fn bernoulli(m: usize) -> Q {
    let mut b: Vec<Q> = Vec::with_capacity(m + 1);
    for n in 0..=m {
        if n == 0 {
            b.push(qi(1));
            continue;
        }
        let s = (0..n).fold(Q::zero(), |acc, k| {
            acc + Q::from_integer(binomial(n as i64 + 1, k as i64)) * &b[k]
        });
        b.push(-s / qi(n as i64 + 1));
    }
    b.pop().expect("nonempty")
}

/// σ_k(n) = Σ_{d | n} d^k.
pub fn divisor_sigma(k: u32, n: u64) -> BigInt {
    (1..=n)
        .filter(|d| n % d == 0)
        .map(|d| num_traits::pow(BigInt::from(d), k as usize))
        .sum()
}

/// Classical E₂ₖ = 1 − (4k/B₂ₖ) Σ σ₂ₖ₋₁(n) qⁿ for the modular group.
pub fn classical_eisenstein(k: usize, n_terms: usize) -> S {
    let factor = -qi(4 * k as i64) / bernoulli(2 * k);
    let coeffs = (0..n_terms)
        .map(|n| {
            if n == 0 {
                qi(1)
            } else {
                &factor * Q::from_integer(divisor_sigma(2 * k as u32 - 1, n as u64))
            }
        })
        .collect();
    S::from_coeffs(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::context;

    fn sys(mu: i64, n: usize) -> FormSystem {
        eisenstein_system(&context(mu).unwrap(), n).unwrap()
    }

    #[test]
    fn classical_series_for_mu_three() {
        let fs = sys(3, 6);
        assert_eq!(fs.e2(), &S::from_ints(&[1, -24, -72, -96, -168, -144]));
        assert_eq!(fs.e4(), &S::from_ints(&[1, 240, 2160, 6720, 17520, 30240]));
        assert_eq!(fs.e6(), &S::from_ints(&[1, -504, -16632, -122976, -532728, -1575504]));
    }

    #[test]
    fn residuals_vanish() {
        for mu in [3, 5] {
            assert!(ramanujan_residual(&sys(mu, 20)).iter().all(|r| r.is_zero()));
        }
    }

    #[test]
    fn perturbed_residual() {
        let mut fs = sys(3, 10);
        fs.e[1] = &fs.e[1] + &S::monomial(qi(1), Rational64::one(), 9);
        let r = ramanujan_residual(&fs);
        assert_eq!(r[0].valuation(), Some(Rational64::one()));
        assert_eq!(r[0].lead_coeff(), Some(&-q(1, 12)));
    }

    #[test]
    fn uv_identities() {
        let fs = sys(4, 15);
        let (u, v) = invert_uv(&fs);
        assert_eq!(&u * &v, fs.e4().clone());
        assert_eq!(&(&u * &v) * &v, fs.e6().clone());
        let fs3 = sys(3, 4);
        assert_eq!(invert_uv(&fs3).0.coeffs()[1], qi(984));
        for mu in 4..=6 {
            let fs = sys(mu, 12);
            let (u, v) = invert_uv(&fs);
            let mut p = &u * &v;
            for k in 3..=mu as usize {
                p = &p * &v;
                assert_eq!(&p, fs.eisenstein(k).unwrap(), "μ = {mu}, k = {k}");
            }
        }
    }

    #[test]
    fn hauptmodul_pole() {
        let fs = sys(3, 8);
        let j = hauptmodul(&fs).unwrap();
        assert_eq!(j.valuation(), Some(Rational64::from_integer(-1)));
        assert_eq!(j.lead_coeff(), Some(&-q(1, 1728)));
        assert_eq!(hauptmodul_normalized(&fs).unwrap().coeffs()[1], q(744, 1728));
    }

    #[test]
    fn discriminant_lead_exponents() {
        for (mu, lead) in [(3, 1), (4, 1), (5, 3), (6, 2)] {
            let d = discriminant(&sys(mu, 12)).unwrap();
            assert_eq!(d.series.valuation(), Some(Rational64::from_integer(lead)));
            assert_eq!(d.weight, context(mu).unwrap().delta);
        }
        let d3 = discriminant(&sys(3, 6)).unwrap().series;
        assert_eq!(d3, S::from_ints(&[0, 1, -24, 252, -1472, 4830]));
    }

    #[test]
    fn serre_examples() {
        let fs = sys(3, 12);
        let w4 = serre_derivative(fs.e4(), &qi(4), &fs);
        assert_eq!(w4, fs.e6().scale(&-q(1, 3)));
        let w6 = serre_derivative(fs.e6(), &qi(6), &fs);
        assert_eq!(w6, (fs.e4() * fs.e4()).scale(&-q(1, 2)));
        let d = discriminant(&fs).unwrap().series;
        assert!(serre_derivative(&d, &qi(12), &fs).is_zero());
    }

    #[test]
    fn dh_recovery() {
        let fs = sys(3, 8);
        assert_eq!(dh_matrix(&fs.ctx).det().unwrap(), qi(11));
        let t = recover_dh(&fs).unwrap();
        assert_eq!(t.fitted_scale, qi(1));
        let (u, v) = invert_uv(&fs);
        assert!((&(&t.y1 - &t.y2) - &u).is_zero());
        assert!((&(&t.y3 - &t.y2) - &v).is_zero());
        let r = dh_residual(&t, &fs.ctx);
        assert_eq!(r[0].coeff(Rational64::zero()), Some(Q::zero()));
    }

    #[test]
    fn bernoulli_and_classical() {
        assert_eq!(bernoulli(12), q(-691, 2730));
        assert_eq!(classical_eisenstein(4, 3).coeffs()[1], qi(480));
        assert_eq!(classical_eisenstein(6, 3).coeffs()[1], q(65520, 691));
        assert_eq!(&classical_eisenstein(2, 30), sys(3, 30).e4());
    }

    #[test]
    fn resonant_orders() {
        let fs = sys(6, 6);
        assert_eq!(fs.e2(), &S::from_ints(&[1, -6, -18, -42, -42, -36]));
        assert_eq!(fs.e4().coeffs()[..3], [qi(1), qi(24), qi(216)]);
        assert!(ramanujan_residual(&fs).iter().all(|r| r.is_zero()));
    }
}
