//! Acceptance run: one verdict line per criterion.
//!
//! Verdicts are printed as they are computed. The process exits 0 after the
//! summary so the remaining test targets still run; set
//! `HECKEFORMS_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::time::{Duration, Instant};

use heckeforms::formexpr::{eval_series, parse};
use heckeforms::forms::{self, discriminant, eisenstein_system, invert_uv, serre_derivative, FormSystem};
use heckeforms::frobenius::{self, HaldeSpec, WronskianMode};
use heckeforms::matrixkit;
use heckeforms::vectorform::{self, ChiMode, LawReport, QuasiForm};
use heckeforms::{context, ExactSeries, Rational};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type S = ExactSeries;
type Q = Rational;

const SEED: u64 = 0x0048_6563_6b65;
const LAW_TOL: f64 = 1e-7;
const QUASI_PERIOD_TOL: f64 = 1e-8;
const WRONSKIAN_TOL: f64 = 1e-6;
const GARVAN_CONSTANT: (i64, i64) = (-746_496_000, 691);

struct Verdict {
    pass: bool,
    detail: String,
}

type Outcome = Result<Verdict, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn system(mu: i64, n: usize) -> Result<FormSystem, String> {
    let ctx = context(mu).map_err(|e| e.to_string())?;
    eisenstein_system(&ctx, n).map_err(|e| e.to_string())
}

fn points() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 1.2),
        Complex64::new(0.3, 1.1),
        Complex64::new(0.0, 1.0),
    ]
}

fn sigma(k: u32, n: u64) -> BigInt {
    (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(k)).sum()
}

fn divisor_series(constant: i64, k: u32, n: usize) -> S {
    let mut c = vec![Q::one()];
    c.extend((1..n as u64).map(|m| Q::from_integer(BigInt::from(constant) * sigma(k, m))));
    S::from_coeffs(c)
}

/// Coefficients of Π (1 − qⁿ)²⁴ up to q^{len−1}.
fn eta24_body(len: usize) -> Vec<BigInt> {
    let mut p = vec![BigInt::zero(); len];
    p[0] = BigInt::one();
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                let t = p[i - n].clone();
                p[i] -= t;
            }
        }
    }
    p
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let fs = system(3, 8)?;
    let e = parse("(5*E2^3 − 3*E4*E2 − 2*E6)/51840", 3).map_err(|e| e.to_string())?;
    let s = eval_series(&e, &fs, 8).map_err(|e| e.to_string())?;
    let got: Vec<Q> = (0..8)
        .map(|k| s.coeff(Rational64::from_integer(k)).unwrap_or_else(Q::zero))
        .collect();
    let want: Vec<Q> = [0, 0, 1, 8, 30, 80, 180, 336].iter().map(|&x| qi(x)).collect();
    let elapsed = start.elapsed();
    let exact = got == want && s.precision() >= Rational64::from_integer(8);
    Ok(Verdict {
        pass: exact && elapsed < Duration::from_secs(1),
        detail: format!(
            "coefficients {} (exact match: {exact}), {:.3} s of 1 s",
            got.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
            elapsed.as_secs_f64()
        ),
    })
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let n = 50;
    let fs = system(3, n + 1)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, c, s) in [(1usize, -24i64, 1u32), (2, 240, 3), (3, -504, 5)] {
        let e = fs.eisenstein(k).ok_or("missing series")?.truncate_len(n);
        let same = e == divisor_series(c, s, n) && e.len() == n;
        ok &= same;
        notes.push(format!("E{} {}", 2 * k, if same { "ok" } else { "mismatch" }));
    }
    let d = discriminant(&fs).map_err(|e| e.to_string())?.series;
    let eta = eta24_body(n);
    let same = d.lead_exponent() == Rational64::one()
        && d.len() >= n
        && d.coeffs()
            .iter()
            .zip(&eta)
            .all(|(a, b)| *a == Q::from_integer(b.clone()));
    ok &= same;
    notes.push(format!("Delta {}", if same { "ok" } else { "mismatch" }));
    let elapsed = start.elapsed();
    Ok(Verdict {
        pass: ok && elapsed < Duration::from_secs(5),
        detail: format!(
            "{} to {n} terms, {:.3} s of 5 s",
            notes.join(", "),
            elapsed.as_secs_f64()
        ),
    })
}

fn criterion_3() -> Outcome {
    let n = 60;
    let mut ok = true;
    let mut notes = Vec::new();
    for mu in 3..=8 {
        let fs = system(mu, n)?;
        let residual_zero = forms::ramanujan_residual(&fs).iter().all(S::is_zero);
        let (u, v) = invert_uv(&fs);
        let uv = &u * &v;
        let e4 = uv == *fs.e4();
        let e6 = &uv * &v == *fs.e6();
        let mut powers = true;
        if (4..=6).contains(&mu) {
            let mut p = u.clone();
            for k in 2..=mu as usize {
                p = &p * &v;
                let ratio = p
                    .try_div(fs.eisenstein(k).ok_or("missing series")?)
                    .map_err(|e| e.to_string())?;
                powers &= ratio.nonconstant_part().is_zero();
            }
        }
        let this = residual_zero && e4 && e6 && powers;
        ok &= this;
        if !this {
            notes.push(format!(
                "μ={mu}: residual {residual_zero}, uv {e4}, uv² {e6}, powers {powers}"
            ));
        }
    }
    Ok(Verdict {
        pass: ok,
        detail: if ok {
            format!("residuals zero to N={n} for μ=3..8; ûv̂=Ê4, ûv̂²=Ê6; ûv̂^(k−1)/Ê2k constant for μ=4,5,6")
        } else {
            notes.join("; ")
        },
    })
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for mu in 3..=6 {
        let fs = system(mu, 30)?;
        let d = discriminant(&fs).map_err(|e| e.to_string())?;
        let annihilated = serre_derivative(&d.series, &qi(d.weight), &fs).is_zero();
        let lead = Rational64::new(fs.ctx.delta * (mu - 2), 4 * mu);
        let lead_ok = d.series.lead_exponent() == lead;
        ok &= annihilated && lead_ok;
        notes.push(format!(
            "μ={mu}: ∂Δ=0 {annihilated}, lead {} (expected {lead})",
            d.series.lead_exponent()
        ));
    }
    Ok(Verdict {
        pass: ok,
        detail: notes.join("; "),
    })
}

/// Dijkgraaf at μ = 3, a seeded (w = 8, r = 2) form at μ = 3 and Ê₂ at μ = 4,
/// each carrying the quasi-period measured at 1.2i.
fn instance_grid() -> Result<Vec<(String, QuasiForm)>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let nonzero = |rng: &mut ChaCha8Rng| loop {
        let (n, d) = (rng.gen_range(-9i64..=9), rng.gen_range(1i64..=9));
        if n != 0 {
            return q(n, d);
        }
    };
    let n = 60;
    let f3 = system(3, n)?;
    let f4 = system(4, n)?;
    let measured = |fs: &FormSystem| -> Result<ChiMode, String> {
        let qp = vectorform::estimate_quasiperiod(fs, points()[0], LAW_TOL).map_err(|e| e.to_string())?;
        Ok(ChiMode::Numeric(qp.value))
    };
    let e4 = f3.e4();
    let h = vec![
        (e4 * e4).scale(&nonzero(&mut rng)),
        f3.e6().scale(&nonzero(&mut rng)),
        e4.scale(&nonzero(&mut rng)),
    ];
    let zero = S::zero(Rational64::from_integer(n as i64));
    let err = |e: vectorform::VectorFormError| e.to_string();
    Ok(vec![
        (
            "Dijkgraaf μ=3".to_string(),
            vectorform::dijkgraaf(&f3).map_err(err)?.with_chi(measured(&f3)?),
        ),
        (
            "random w=8 r=2 μ=3".to_string(),
            QuasiForm::new(&f3, 8, h).map_err(err)?.with_chi(measured(&f3)?),
        ),
        (
            "Ê2 μ=4".to_string(),
            QuasiForm::new(&f4, 2, vec![zero, S::one(n)])
                .map_err(err)?
                .with_chi(measured(&f4)?),
        ),
    ])
}

fn law_lines(label: &str, report: &LawReport, laws: &[&str], tol: f64, ok: &mut bool, notes: &mut Vec<String>) {
    for law in laws {
        let max = report.max_residual(law).unwrap_or(f64::INFINITY);
        let pass = max < tol;
        *ok &= pass;
        notes.push(format!("{label} {law} {max:.2e}{}", if pass { "" } else { " FAIL" }));
    }
}

fn criterion_5() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, u) in instance_grid()? {
        let rep = vectorform::verify_fundamental(&u, &points(), u.chi(), LAW_TOL).map_err(|e| e.to_string())?;
        law_lines(
            &label,
            &rep,
            &["fundamental.T", "fundamental.S"],
            LAW_TOL,
            &mut ok,
            &mut notes,
        );
        let corrected = rep.max_residual("fundamental.T.corrected").unwrap_or(f64::INFINITY);
        notes.push(format!("{label} corrected T {corrected:.2e}"));
    }
    let fs = system(3, 60)?;
    let qp = vectorform::estimate_quasiperiod(&fs, points()[0], LAW_TOL).map_err(|e| e.to_string())?;
    let paper = Complex64::new(0.0, -6.0 / std::f64::consts::PI);
    let dev = (qp.value - paper).norm();
    ok &= dev < QUASI_PERIOD_TOL;
    notes.push(format!("quasi-period μ=3 deviation from 6/(πi) {dev:.2e}"));
    Ok(Verdict {
        pass: ok,
        detail: notes.join("; "),
    })
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let stated = ["quasiUnderS", "auxGUnderS", "auxFUnderS", "fWithWeights", "auxFUnderT"];
    for (label, u) in instance_grid()? {
        let laws = vectorform::verify_component_laws(&u, &points(), u.chi(), 3, LAW_TOL).map_err(|e| e.to_string())?;
        law_lines(&label, &laws, &stated, LAW_TOL, &mut ok, &mut notes);
        let vt = vectorform::vandermonde_translates(&u, &points(), u.chi(), LAW_TOL).map_err(|e| e.to_string())?;
        law_lines(&label, &vt, &["vandermonde"], LAW_TOL, &mut ok, &mut notes);
        let fixed = laws.max_residual("fWithWeights.corrected").unwrap_or(f64::INFINITY);
        let vfixed = vt.max_residual("vandermonde.corrected").unwrap_or(f64::INFINITY);
        notes.push(format!(
            "{label} corrected fWithWeights {fixed:.2e}, corrected vandermonde {vfixed:.2e}"
        ));
    }
    Ok(Verdict {
        pass: ok,
        detail: format!("a=3; {}", notes.join("; ")),
    })
}

fn random_rational(rng: &mut ChaCha8Rng) -> Q {
    q(rng.gen_range(-20i64..=20), rng.gen_range(1i64..=12))
}

/// A μ = 3 quasiform with random integer combinations of E4^a E6^b.
fn random_quasiform(fs: &FormSystem, rng: &mut ChaCha8Rng) -> Result<QuasiForm, String> {
    let r = rng.gen_range(0usize..=4);
    let tops: Vec<i64> = [0i64, 4, 6, 8, 10, 12]
        .into_iter()
        .filter(|t| t + 2 * r as i64 <= 16)
        .collect();
    let top = tops[rng.gen_range(0..tops.len())];
    let w = top + 2 * r as i64;
    let prec = Rational64::from_integer(fs.n_terms as i64);
    let mut h = Vec::new();
    for m in 0..=r {
        let k = w - 2 * m as i64;
        let mut acc = S::zero(prec);
        for a in 0..=k.max(0) / 4 {
            let rest = k - 4 * a;
            if rest < 0 || rest % 6 != 0 {
                continue;
            }
            let mut c = rng.gen_range(-5i64..=5);
            if m == r && c == 0 {
                c = 1;
            }
            let mono = &fs.e4().pow_int(a).map_err(|e| e.to_string())?
                * &fs.e6().pow_int(rest / 6).map_err(|e| e.to_string())?;
            acc = &acc + &mono.scale(&qi(c));
        }
        h.push(acc);
    }
    QuasiForm::new(fs, w, h).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut notes = Vec::new();

    let mut mixed = true;
    for _ in 0..100 {
        let (x, y, z) = (
            random_rational(&mut rng),
            random_rational(&mut rng),
            random_rational(&mut rng),
        );
        for r in 0..=8 {
            mixed &= matrixkit::mixed_binomial_lhs(&x, &y, &z, r) == matrixkit::mixed_binomial_rhs(&x, &y, &z, r);
        }
    }
    notes.push(format!("mixed binomial {}", if mixed { "ok" } else { "FAIL" }));

    let mut conv = true;
    for y in 0..=12 {
        for k in 0..=y {
            for p in 0..=y {
                conv &= matrixkit::binom_convolution(k, y, p) == matrixkit::binom_convolution_closed(k, y, p);
            }
        }
    }
    notes.push(format!("binomial convolution {}", if conv { "ok" } else { "FAIL" }));

    let fs = system(3, 12)?;
    let (mut stated, mut corrected, mut deep) = (0, 0, 0);
    for _ in 0..50 {
        let u = random_quasiform(&fs, &mut rng)?;
        let g = vectorform::gstack_check(&u).map_err(|e| e.to_string())?;
        stated += g.stated as usize;
        corrected += g.corrected as usize;
        deep += (u.r >= 2) as usize;
    }
    let gstack = stated == 50;
    notes.push(format!(
        "gStack stated {stated}/50 (r ≥ 2 in {deep}), corrected {corrected}/50"
    ));

    let mut dets = true;
    for r in 0..=8 {
        dets &= matrixkit::pascal_lower::<Q>(r)
            .det()
            .map_err(|e| e.to_string())?
            .is_one();
        dets &= matrixkit::alt_exchange::<Q>(r)
            .det()
            .map_err(|e| e.to_string())?
            .abs()
            .is_one();
    }
    notes.push(format!("determinants {}", if dets { "ok" } else { "FAIL" }));

    Ok(Verdict {
        pass: mixed && conv && gstack && dets,
        detail: notes.join("; "),
    })
}

fn kz(fs: &FormSystem) -> Result<HaldeSpec, String> {
    let prec = Rational64::from_integer(fs.n_terms as i64);
    HaldeSpec::from_tail(&fs.ctx, 5, vec![S::zero(prec), fs.e4().scale(&q(-1, 6))]).map_err(|e| e.to_string())
}

fn criterion_8() -> Outcome {
    let err = |e: frobenius::FrobeniusError| e.to_string();
    let fs = system(3, 40)?;
    let tf = frobenius::to_theta_form(&kz(&fs)?, &fs).map_err(err)?;
    let roots = frobenius::indicial(&tf).map_err(err)?.roots;
    let exps = roots == vec![q(5, 6), Q::zero()];
    let sols = frobenius::frobenius_solve(&tf, 40).map_err(err)?;
    let y0 = sols
        .iter()
        .find(|s| s.exponent.is_zero())
        .and_then(|s| s.body.as_series())
        .ok_or("no λ=0 series solution")?;
    let ratio = y0.try_div(fs.e4()).map_err(|e| e.to_string())?;
    let proportional = ratio.nonconstant_part().is_zero() && ratio.len() >= 40;
    let bodies: Vec<_> = sols.iter().map(|s| s.body.clone()).collect();
    let w = frobenius::wronskian(&bodies, WronskianMode::Serre, &fs, 5, 1).map_err(err)?;
    let dp = frobenius::delta_power_check(&w.truncate_len(30), &fs, 5, 1).map_err(err)?;
    let delta_power = dp.holds() && dp.residual.precision() >= Rational64::from_integer(30);

    let mut first_order = true;
    for mu in 3..=6 {
        let f = system(mu, 30)?;
        let h = HaldeSpec::from_tail(&f.ctx, f.ctx.delta, vec![S::zero(Rational64::from_integer(30))]).map_err(err)?;
        let tf = frobenius::to_theta_form(&h, &f).map_err(err)?;
        let sols = frobenius::frobenius_solve(&tf, 30).map_err(err)?;
        let w = frobenius::wronskian(&[sols[0].body.clone()], WronskianMode::Serre, &f, f.ctx.delta, 0).map_err(err)?;
        let d = discriminant(&f).map_err(|e| e.to_string())?.series;
        let dp = frobenius::delta_power_check(&w, &f, f.ctx.delta, 0).map_err(err)?;
        first_order &= w.len() >= 30 && w == d && dp.holds() && dp.constant.is_one();
    }
    Ok(Verdict {
        pass: exps && proportional && delta_power && first_order,
        detail: format!(
            "exponents [{}] {exps}; λ=0 ∝ Ê4 to 40 terms {proportional}; W/Δ^(5/6) constant {} to 30 terms {delta_power}; r=0 W=Δ with C=1 for μ=3..6 {first_order}",
            roots.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
            dp.constant
        ),
    })
}

fn criterion_9() -> Outcome {
    let err = |e: frobenius::FrobeniusError| e.to_string();
    let fs = system(3, 30)?;
    let tf = frobenius::to_theta_form(&kz(&fs)?, &fs).map_err(err)?;
    let sols = frobenius::frobenius_solve(&tf, 30).map_err(err)?;
    let bodies: Vec<_> = sols.iter().map(|s| s.body.clone()).collect();
    let ws = frobenius::wronskian(&bodies, WronskianMode::Serre, &fs, 5, 1).map_err(err)?;
    let wt = frobenius::wronskian(&bodies, WronskianMode::Theta, &fs, 5, 1).map_err(err)?;
    let same = ws == wt;
    let mut ok = same;
    let mut notes = vec![format!("KZ serre ≡ theta {same}")];
    for mu in [3, 4] {
        let f = system(mu, 40)?;
        let h = HaldeSpec::from_tail(&f.ctx, f.ctx.delta, vec![S::zero(Rational64::from_integer(40))]).map_err(err)?;
        let tf = frobenius::to_theta_form(&h, &f).map_err(err)?;
        let sols = frobenius::frobenius_solve(&tf, 40).map_err(err)?;
        let w = frobenius::wronskian(&[sols[0].body.clone()], WronskianMode::Serre, &f, f.ctx.delta, 0).map_err(err)?;
        let rep = frobenius::wronskian_modularity(&w, &f.ctx, f.ctx.delta, &points(), WRONSKIAN_TOL).map_err(err)?;
        law_lines(
            &format!("W=Δ μ={mu}"),
            &rep,
            &["wronskian.S", "wronskian.T"],
            WRONSKIAN_TOL,
            &mut ok,
            &mut notes,
        );
    }
    Ok(Verdict {
        pass: ok,
        detail: notes.join("; "),
    })
}

fn criterion_10() -> Outcome {
    let first = frobenius::garvan_check(20).map_err(|e| e.to_string())?;
    let again = frobenius::garvan_check(20).map_err(|e| e.to_string())?;
    let golden = q(GARVAN_CONSTANT.0, GARVAN_CONSTANT.1);
    let stable = first.constant == again.constant;
    let locked = first.constant == golden;
    Ok(Verdict {
        pass: first.holds() && stable && locked,
        detail: format!(
            "constant series to 20 terms {}; constant {} (golden {golden}, rerun equal {stable})",
            first.holds(),
            first.constant
        ),
    })
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Dijkgraaf series", criterion_1),
        ("classical reproduction", criterion_2),
        ("Ramanujan system and û,v̂ identities", criterion_3),
        ("discriminant annihilation", criterion_4),
        ("fundamental theorem", criterion_5),
        ("component laws and Vandermonde translates", criterion_6),
        ("exact matrix suites", criterion_7),
        ("Frobenius solutions", criterion_8),
        ("Wronskian modes and modularity", criterion_9),
        ("Garvan identity", criterion_10),
    ];
    let mut failed = Vec::new();
    let mut desk_scale = true;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => {
                if [5, 6, 9, 10].contains(&n) {
                    desk_scale = false;
                }
                (false, format!("error: {e}"))
            }
        };
        if !pass {
            failed.push(n);
        }
        let tag = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {tag}: {name} ({:.2} s) {detail}",
            start.elapsed().as_secs_f64()
        );
    }
    let tag = if desk_scale { "PASS" } else { "FAIL" };
    println!(
        "criterion 11 {tag}: desk scale (criteria 5, 6, 9, 10 ran at the paper's own scale with pinned tolerances)"
    );
    if !desk_scale {
        failed.push(11);
    }
    println!(
        "acceptance: {}/11 criteria pass{}",
        11 - failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(
                "; failing: {}",
                failed.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")
            )
        }
    );
    let strict = std::env::var("HECKEFORMS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
