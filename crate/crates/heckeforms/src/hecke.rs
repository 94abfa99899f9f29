//! Constants of the Hecke triangle group 𝔥(ϖ_μ), its generators, projective
//! ratios and dimensions of spaces of automorphic forms.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};
use statrs::function::gamma::digamma;
use thiserror::Error;

use crate::scalar::{format_complex, format_rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeckeError {
    #[error("μ must be at least 3, got {0}")]
    InvalidMu(i64),
    #[error("S is undefined at z = 0")]
    ZeroPoint,
    #[error("point {0} is not in the upper half-plane")]
    NotInUpperHalfPlane(String),
    #[error("degenerate point configuration")]
    Degenerate,
    #[error("no dimension formula for weight {0}")]
    UnsupportedWeight(i64),
}

/// How much of ϖ is representable exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactField {
    /// ϖ = 1.
    Rational,
    /// ϖ² ∈ ℚ (ϖ = √2 or √3).
    Quadratic,
    NumericOnly,
}

impl ExactField {
    pub fn name(self) -> &'static str {
        match self {
            ExactField::Rational => "rational",
            ExactField::Quadratic => "quadratic",
            ExactField::NumericOnly => "numeric-only",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeckeContext {
    pub mu: i64,
    /// ϖ = 2cos(π/μ), the translation length of T.
    pub varpi: f64,
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
    /// Weight of the discriminant, 2·lcm(2, μ).
    pub delta: i64,
    /// δ/(2πi).
    pub structure_constant: Complex64,
    /// ϖ/(2πi·b), the quasi-period of the normalized Ê₂.
    pub quasi_period: Complex64,
    pub r1: Complex64,
    pub r2: Complex64,
    pub exact_field: ExactField,
    /// Analytic cusp constant: J = d_μ/q_an + O(1) with q_an = e^{2πiz/ϖ}.
    pub cusp_constant: f64,
    /// Rational cusp constant used by the exact recursion.
    pub cusp_rational: BigRational,
    /// κ = d/d_μ; the series variable is q = κ·e^{2πiz/ϖ}.
    pub cusp_scale: f64,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// d_μ = exp(2γ + ψ(1−α) + ψ(1−β) − π·sec(π/μ)), α = (μ−2)/(4μ), β = (μ+2)/(4μ).
pub fn analytic_cusp_constant(mu: i64) -> f64 {
    let m = mu as f64;
    let alpha = (m - 2.0) / (4.0 * m);
    let beta = (m + 2.0) / (4.0 * m);
    let euler_gamma = -digamma(1.0);
    (2.0 * euler_gamma + digamma(1.0 - alpha) + digamma(1.0 - beta) - PI / (PI / m).cos()).exp()
}

impl HeckeContext {
    pub fn new(mu: i64) -> Result<Self, HeckeError> {
        if mu < 3 {
            return Err(HeckeError::InvalidMu(mu));
        }
        let m = mu as f64;
        let varpi = if mu == 3 { 1.0 } else { 2.0 * (PI / m).cos() };
        let a = ratio(mu + 2, 4 * mu);
        let b = ratio(mu - 2, 4 * mu);
        let c = ratio(3 * mu - 2, 4 * mu);
        let delta = 2 * 2.lcm(&mu);
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let structure_constant = Complex64::new(delta as f64, 0.0) / two_pi_i;
        let quasi_period = Complex64::new(varpi * (4 * mu) as f64 / (mu - 2) as f64, 0.0) / two_pi_i;
        let r1 = Complex64::new(0.0, 1.0);
        let r2 = -Complex64::from_polar(1.0, -PI / m);
        let exact_field = match mu {
            3 => ExactField::Rational,
            4 | 6 => ExactField::Quadratic,
            _ => ExactField::NumericOnly,
        };
        let cusp_constant = analytic_cusp_constant(mu);
        let (cusp_rational, cusp_scale) = match mu {
            3 => (ratio(1, 1728), 1.0),
            4 => (ratio(1, 256), 1.0),
            6 => (ratio(1, 108), 1.0),
            _ => {
                let n = (1.0 / cusp_constant).round().max(1.0) as i64;
                (ratio(1, n), 1.0 / (n as f64 * cusp_constant))
            }
        };
        Ok(HeckeContext {
            mu,
            varpi,
            a,
            b,
            c,
            delta,
            structure_constant,
            quasi_period,
            r1,
            r2,
            exact_field,
            cusp_constant,
            cusp_rational,
            cusp_scale,
        })
    }

    /// ϖ² when it is rational.
    pub fn varpi_squared_exact(&self) -> Option<BigRational> {
        match self.mu {
            3 => Some(ratio(1, 1)),
            4 => Some(ratio(2, 1)),
            6 => Some(ratio(3, 1)),
            _ => None,
        }
    }

    pub fn b_f64(&self) -> f64 {
        self.b.to_f64().unwrap_or(f64::NAN)
    }

    pub fn apply_s(&self, z: Complex64) -> Result<Complex64, HeckeError> {
        if z.is_zero() {
            return Err(HeckeError::ZeroPoint);
        }
        Ok(-z.inv())
    }

    pub fn apply_t(&self, z: Complex64, times: i64) -> Complex64 {
        z + self.varpi * times as f64
    }

    /// Image of z under the word given as a string over {S, T, t}; `t` is T⁻¹.
    /// Letters act right to left, as in a product of matrices.
    pub fn apply_word(&self, word: &str, z: Complex64) -> Result<Complex64, HeckeError> {
        let mut w = z;
        for ch in word.chars().rev() {
            w = match ch {
                'S' => self.apply_s(w)?,
                'T' => self.apply_t(w, 1),
                't' => self.apply_t(w, -1),
                _ => return Err(HeckeError::Degenerate),
            };
        }
        Ok(w)
    }

    /// dim M_w = ⌊w(μ−2)/(4μ)⌋ + 1 for w ≡ 0 mod 4, w ≥ 0.
    pub fn dim_m(&self, w: i64) -> Result<i64, HeckeError> {
        if w < 0 || w % 4 != 0 {
            return Err(HeckeError::UnsupportedWeight(w));
        }
        Ok(Integer::div_floor(&(w * (self.mu - 2)), &(4 * self.mu)) + 1)
    }

    /// Σ_{k=0}^{r} dim M_{w−2k}; fails if any summand weight is inadmissible.
    pub fn dim_qm(&self, w: i64, r: i64) -> Result<i64, HeckeError> {
        (0..=r).map(|k| self.dim_m(w - 2 * k)).sum()
    }

    /// Σ dim M_{w−2k} over the summands with admissible weight only.
    pub fn dim_qm_admissible(&self, w: i64, r: i64) -> i64 {
        (0..=r).filter_map(|k| self.dim_m(w - 2 * k).ok()).sum()
    }

    /// The Table-1 style record.
    pub fn to_json(&self) -> Value {
        json!({
            "mu": self.mu,
            "varpi": format!("{:.16e}", self.varpi),
            "a": format_rational(&self.a),
            "b": format_rational(&self.b),
            "c": format_rational(&self.c),
            "delta": self.delta,
            "structure_constant": format_complex(self.structure_constant),
            "quasi_period": format_complex(self.quasi_period),
            "r1": format_complex(self.r1),
            "r2": format_complex(self.r2),
            "r3": "infinity",
            "generators": {
                "S": "z -> -1/z",
                "T": format!("z -> z + {:.16e}", self.varpi),
            },
            "exact_field": self.exact_field.name(),
            "cusp_constant": format!("{:.16e}", self.cusp_constant),
            "cusp_rational": format_rational(&self.cusp_rational),
            "cusp_scale": format!("{:.16e}", self.cusp_scale),
        })
    }
}

/// Convenience constructor.
pub fn context(mu: i64) -> Result<HeckeContext, HeckeError> {
    HeckeContext::new(mu)
}

/// [z1, z2, z3, z4] = (z1−z3)(z2−z4) / ((z1−z2)(z3−z4)).
pub fn cross_ratio(z1: Complex64, z2: Complex64, z3: Complex64, z4: Complex64) -> Result<Complex64, HeckeError> {
    let den = (z1 - z2) * (z3 - z4);
    if den.is_zero() {
        return Err(HeckeError::Degenerate);
    }
    Ok((z1 - z3) * (z2 - z4) / den)
}

/// [z1, z2, z3] = [z1, z2, z3, ∞] = (z1−z3)/(z1−z2).
pub fn affine_ratio(z1: Complex64, z2: Complex64, z3: Complex64) -> Result<Complex64, HeckeError> {
    let den = z1 - z2;
    if den.is_zero() {
        return Err(HeckeError::Degenerate);
    }
    Ok((z1 - z3) / den)
}
