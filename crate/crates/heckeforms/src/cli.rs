//! The `heckeforms` command line: subcommands `expand`, `group`,
//! `vectorform`, `frobenius` and `verify`, each emitting one JSON report.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or schema error,
//! 3 computational failure.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::formexpr::{self, FormExpr, Weight};
use crate::forms::{self, eisenstein_system, FormSystem};
use crate::frobenius::{self, HaldeSpec, WronskianMode};
use crate::hecke::{context, HeckeContext};
use crate::matrixkit;
use crate::scalar::{format_complex, parse_complex, parse_rational, Scalar};
use crate::series::QSeries;
use crate::vectorform::{self, ChiMode, LawReport, QuasiForm, Zeta};

type Q = BigRational;
type S = QSeries<Q>;

pub const SCHEMA: &str = "heckeforms/1";
const DEFAULT_PRECISION_BITS: u32 = 128;

#[derive(Parser, Debug)]
#[command(
    name = "heckeforms",
    version,
    about = "Quasiautomorphic forms on Hecke triangle groups"
)]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Include wall-clock timing in the report.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// q-expansion of a named form or an expression.
    Expand(ExpandArgs),
    /// Constants of the Hecke group 𝔥(ϖ_μ).
    Group(GroupArgs),
    /// Hauptbuch, vector-form and transformation laws of a quasiform.
    Vectorform(VectorformArgs),
    /// q-Frobenius solutions of a Hecke automorphic differential equation.
    Frobenius(FrobeniusArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
}

fn mu_parser() -> clap::builder::RangedI64ValueParser<i64> {
    clap::value_parser!(i64).range(3..)
}

#[derive(clap::Args, Debug, Serialize)]
pub struct ExpandArgs {
    #[arg(long, value_parser = mu_parser())]
    pub mu: i64,
    /// One of E2 … E{2μ}, u, v, J, Jnorm, Delta.
    #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
    pub symbol: Option<String>,
    #[arg(long)]
    pub expr: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub terms: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct GroupArgs {
    #[arg(long, value_parser = mu_parser())]
    pub mu: i64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    All,
    Fundamental,
    Laws,
    Gstack,
    Vandermonde,
    Quasiperiod,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct VectorformArgs {
    /// JSON file {"mu", "w", "r", "h": [expr, …]}.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value_t = CheckKind::All)]
    pub check: CheckKind,
    /// Comma separated points a+bi in the upper half-plane.
    #[arg(long)]
    pub z: Option<String>,
    #[arg(long, default_value_t = 80)]
    pub terms: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Translation count for the component laws under T^a.
    #[arg(long, default_value_t = 1)]
    pub a: i64,
    /// Exact ζ for the emitted vector-form, as p/q.
    #[arg(long)]
    pub zeta: Option<String>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct FrobeniusArgs {
    /// JSON file {"mu", "w", "r", "B": [expr, …]} listing B₂ … B_{2r+2}.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub terms: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Vectorform,
    Frobenius,
    All,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, value_delimiter = ',', default_value = "3", value_parser = mu_parser())]
    pub mu: Vec<i64>,
    #[arg(long, default_value_t = 40)]
    pub terms: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

/// Quasiform input file.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct QuasiSpec {
    pub mu: i64,
    pub w: i64,
    pub r: usize,
    pub h: Vec<String>,
}

/// Differential equation input file.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    pub mu: i64,
    pub w: i64,
    pub r: usize,
    #[serde(rename = "B")]
    pub b: Vec<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl ToString) -> Failure {
    Failure::Compute(e.to_string())
}

/// A finished command: the report body and whether every check passed.
struct Outcome {
    body: Value,
    pass: bool,
    csv: Option<Vec<(String, String)>>,
}

/// Runs the command line `args` (program name first), writing the report to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    let precision = match precision_bits() {
        Ok(p) => p,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            return f.code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let start = Instant::now();
    let result = pool.install(|| dispatch(&cli.command));
    let elapsed = start.elapsed();
    match result {
        Ok(outcome) => {
            if let Some(rows) = &outcome.csv {
                if let Err(e) = write_csv(rows, out) {
                    let _ = writeln!(err, "error: {e}");
                    return 3;
                }
            } else {
                let mut report = envelope(&cli.command, precision);
                merge(&mut report, outcome.body);
                report["pass"] = Value::Bool(outcome.pass);
                if cli.timing {
                    report["timing_ms"] = json!(elapsed.as_secs_f64() * 1e3);
                }
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                let _ = writeln!(out, "{text}");
            }
            if outcome.pass {
                0
            } else {
                1
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn precision_bits() -> Result<u32, Failure> {
    match std::env::var("HECKEFORMS_PRECISION") {
        Err(_) => Ok(DEFAULT_PRECISION_BITS),
        Ok(s) => s
            .trim()
            .parse::<u32>()
            .ok()
            .filter(|&b| b > 0)
            .ok_or_else(|| usage(format!("HECKEFORMS_PRECISION must be a positive integer, got `{s}`"))),
    }
}

fn envelope(cmd: &Command, requested_bits: u32) -> Value {
    let (name, args) = match cmd {
        Command::Expand(a) => ("expand", serde_json::to_value(a)),
        Command::Group(a) => ("group", serde_json::to_value(a)),
        Command::Vectorform(a) => ("vectorform", serde_json::to_value(a)),
        Command::Frobenius(a) => ("frobenius", serde_json::to_value(a)),
        Command::Verify(a) => ("verify", serde_json::to_value(a)),
    };
    json!({
        "schema": SCHEMA,
        "command": name,
        "args": args.expect("arguments serialize"),
        "precision": {"requested_bits": requested_bits, "effective_bits": f64::MANTISSA_DIGITS},
    })
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn write_csv(rows: &[(String, String)], out: &mut dyn Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["exponent", "coefficient"])?;
    for (e, c) in rows {
        w.write_record([e, c])?;
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Expand(a) => cmd_expand(a),
        Command::Group(a) => cmd_group(a),
        Command::Vectorform(a) => cmd_vectorform(a),
        Command::Frobenius(a) => cmd_frobenius(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn ctx_for(mu: i64) -> Result<HeckeContext, Failure> {
    context(mu).map_err(usage)
}

fn system(ctx: &HeckeContext, n: usize) -> Result<FormSystem, Failure> {
    eisenstein_system(ctx, n.max(1)).map_err(compute)
}

fn rat_text(r: Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Recomputes with a growing coefficient budget until `f` yields at least
/// `n` coefficients.
fn with_len(ctx: &HeckeContext, n: usize, f: impl Fn(&FormSystem, usize) -> Result<S, Failure>) -> Result<S, Failure> {
    let mut extra = 4;
    loop {
        let budget = n + extra;
        let fs = system(ctx, budget)?;
        let s = f(&fs, budget)?;
        if s.len() >= n || s.is_zero() {
            return Ok(s.truncate_len(n));
        }
        if extra > 4 * n + 64 {
            return Err(compute(format!("could not reach {n} coefficients")));
        }
        extra *= 2;
    }
}

fn parse_expr(src: &str, mu: i64) -> Result<FormExpr, Failure> {
    formexpr::parse(src, mu).map_err(|e| usage(format!("`{src}`: {e}")))
}

fn eval(e: &FormExpr, fs: &FormSystem, n: usize) -> Result<S, Failure> {
    formexpr::eval_series(e, fs, n).map_err(compute)
}

fn warnings_json(e: &FormExpr) -> Vec<Value> {
    e.warnings
        .iter()
        .map(|w| json!({"message": w.message, "start": w.span.start, "end": w.span.end}))
        .collect()
}

fn weight_json(w: Weight) -> Value {
    match w {
        Weight::Of(k) => json!(k),
        Weight::Weightless => json!("weightless"),
    }
}

fn cmd_expand(a: &ExpandArgs) -> Result<Outcome, Failure> {
    let ctx = ctx_for(a.mu)?;
    let (label, series, extra) = match (&a.symbol, &a.expr) {
        (Some(name), _) => {
            let s = with_len(&ctx, a.terms, |fs, _| {
                fs.symbol(name).map_err(|e| match e {
                    forms::FormsError::UnknownSymbol(_) => usage(e),
                    _ => compute(e),
                })
            })?;
            (name.clone(), s, json!({}))
        }
        (None, Some(src)) => {
            let e = parse_expr(src, a.mu)?;
            let s = with_len(&ctx, a.terms, |fs, n| eval(&e, fs, n))?;
            let info =
                json!({"weight": weight_json(e.weight), "warnings": warnings_json(&e), "canonical": e.to_string()});
            (src.clone(), s, info)
        }
        (None, None) => return Err(usage("one of --symbol or --expr is required")),
    };
    let csv = (a.format == Format::Csv).then(|| {
        series
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    rat_text(series.lead_exponent() + Rational64::from_integer(i as i64)),
                    c.to_text(),
                )
            })
            .collect()
    });
    let mut body = json!({"mu": a.mu, "terms": a.terms, "form": label, "series": series.to_json()});
    merge(&mut body, extra);
    Ok(Outcome { body, pass: true, csv })
}

fn cmd_group(a: &GroupArgs) -> Result<Outcome, Failure> {
    let ctx = ctx_for(a.mu)?;
    Ok(Outcome {
        body: json!({"mu": a.mu, "group": ctx.to_json()}),
        pass: true,
        csv: None,
    })
}

fn read_spec<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

const DEFAULT_POINTS: [(f64, f64); 3] = [(0.0, 1.2), (0.3, 1.1), (0.0, 1.0)];

fn default_points() -> Vec<Complex64> {
    DEFAULT_POINTS.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

fn parse_points(s: &str) -> Result<Vec<Complex64>, Failure> {
    s.split(',')
        .map(|t| {
            let z = parse_complex(t).ok_or_else(|| usage(format!("bad point `{t}`")))?;
            if z.im > 0.0 {
                Ok(z)
            } else {
                Err(usage(format!("point `{t}` is not in the upper half-plane")))
            }
        })
        .collect()
}

fn law_summary(report: &LawReport, tol: f64) -> (Value, bool) {
    let mut laws = serde_json::Map::new();
    let mut pass = true;
    for law in report.laws() {
        let max = report.max_residual(&law).unwrap_or(f64::NAN);
        let ok = report.law_passes(&law, tol);
        pass &= ok;
        laws.insert(law, json!({"max_residual": max, "pass": ok}));
    }
    (json!({"laws": laws, "checks": report.to_json(tol)}), pass)
}

fn cmd_vectorform(a: &VectorformArgs) -> Result<Outcome, Failure> {
    let spec: QuasiSpec = read_spec(&a.spec)?;
    let ctx = ctx_for(spec.mu)?;
    if spec.h.is_empty() || spec.r != spec.h.len() - 1 {
        return Err(usage(format!(
            "r = {} does not match {} components",
            spec.r,
            spec.h.len()
        )));
    }
    let points = match &a.z {
        Some(s) => parse_points(s)?,
        None => default_points(),
    };
    let zeta = a
        .zeta
        .as_deref()
        .map(|s| parse_rational(s).ok_or_else(|| usage(format!("bad ζ `{s}`"))))
        .transpose()?;
    let exprs: Vec<FormExpr> = spec
        .h
        .iter()
        .map(|s| parse_expr(s, spec.mu))
        .collect::<Result<_, _>>()?;
    let fs = system(&ctx, a.terms)?;
    let h: Vec<S> = exprs.iter().map(|e| eval(e, &fs, a.terms)).collect::<Result<_, _>>()?;

    let mut warnings = Vec::new();
    for (m, (e, s)) in exprs.iter().zip(&h).enumerate() {
        let want = spec.w - 2 * m as i64;
        warnings.extend(warnings_json(e));
        if let Weight::Of(k) = e.weight {
            if k != want && !s.is_zero() {
                warnings.push(json!({"message": format!("h_{m} has weight {k}, expected {want}")}));
            }
        }
    }

    let u = QuasiForm::new(&fs, spec.w, h).map_err(usage)?;
    let qp = vectorform::estimate_quasiperiod(&fs, points[0], a.tol).map_err(compute)?;
    let u = u.with_chi(ChiMode::Numeric(qp.value));
    let chi = u.chi();
    let mut body = json!({
        "mu": spec.mu,
        "w": spec.w,
        "r": spec.r,
        "terms": a.terms,
        "warnings": warnings,
        "total": u.total().to_json(),
        "hauptbuch": vectorform::g_components(&u).to_json(),
    });
    let mut pass = true;
    let want = |k: CheckKind| a.check == CheckKind::All || a.check == k;

    if want(CheckKind::Quasiperiod) {
        body["quasiperiod"] = qp.to_json();
    }
    let mut laws = LawReport::default();
    if want(CheckKind::Fundamental) {
        laws.checks.extend(
            vectorform::verify_fundamental(&u, &points, chi, a.tol)
                .map_err(compute)?
                .checks,
        );
    }
    if want(CheckKind::Laws) {
        laws.checks.extend(
            vectorform::verify_component_laws(&u, &points, chi, a.a, a.tol)
                .map_err(compute)?
                .checks,
        );
    }
    if want(CheckKind::Vandermonde) {
        laws.checks.extend(
            vectorform::vandermonde_translates(&u, &points, chi, a.tol)
                .map_err(compute)?
                .checks,
        );
    }
    if !laws.checks.is_empty() {
        let (v, ok) = law_summary(&laws, a.tol);
        body["transformation_laws"] = v;
        pass &= ok;
    }
    if want(CheckKind::Gstack) {
        let g = vectorform::gstack_check(&u).map_err(compute)?;
        pass &= g.stated && g.corrected;
        body["gstack"] = g.to_json();
    }
    if let Some(z) = zeta {
        let f = vectorform::vector_form(&u, Zeta::Exact(z), false).map_err(|e| match e {
            vectorform::VectorFormError::ZetaRange(_) => usage(e),
            _ => compute(e),
        })?;
        body["vector_form"] = f.to_json();
    }
    Ok(Outcome { body, pass, csv: None })
}

fn cmd_frobenius(a: &FrobeniusArgs) -> Result<Outcome, Failure> {
    let spec: OdeSpec = read_spec(&a.spec)?;
    let ctx = ctx_for(spec.mu)?;
    if spec.b.is_empty() || spec.r != spec.b.len() - 1 {
        return Err(usage(format!(
            "r = {} does not match {} coefficients B₂ … B_(2r+2)",
            spec.r,
            spec.b.len()
        )));
    }
    let exprs: Vec<FormExpr> = spec
        .b
        .iter()
        .map(|s| parse_expr(s, spec.mu))
        .collect::<Result<_, _>>()?;
    let fs = system(&ctx, a.terms)?;
    let tail: Vec<S> = exprs.iter().map(|e| eval(e, &fs, a.terms)).collect::<Result<_, _>>()?;
    let h = HaldeSpec::from_tail(&ctx, spec.w, tail).map_err(usage)?;
    let (body, pass) = solve_report(&h, &fs, a.terms)?;
    Ok(Outcome { body, pass, csv: None })
}

fn solve_report(h: &HaldeSpec, fs: &FormSystem, n: usize) -> Result<(Value, bool), Failure> {
    let tf = frobenius::to_theta_form(h, fs).map_err(compute)?;
    let ind = frobenius::indicial(&tf).map_err(compute)?;
    let sols = frobenius::frobenius_solve(&tf, n).map_err(compute)?;
    let residual_zero: Vec<bool> = sols
        .par_iter()
        .map(|s| frobenius::residual(&tf, &s.body).map(|r| r.is_zero()))
        .collect::<Result<_, _>>()
        .map_err(compute)?;
    let bodies: Vec<_> = sols.iter().map(|s| s.body.clone()).collect();
    let serre = frobenius::wronskian(&bodies, WronskianMode::Serre, fs, h.w, h.r);
    let theta = frobenius::wronskian(&bodies, WronskianMode::Theta, fs, h.w, h.r);
    let mut pass = residual_zero.iter().all(|&b| b);
    let wronskian = match (&serre, &theta) {
        (Ok(ws), Ok(wt)) => {
            let dp = frobenius::delta_power_check(ws, fs, h.w, h.r).map_err(compute)?;
            let equal = ws == wt;
            pass &= equal && dp.holds();
            json!({"serre": ws.to_json(), "theta_equal": equal, "delta_power": dp.to_json()})
        }
        (Err(e), _) | (_, Err(e)) => {
            pass = false;
            json!({"error": e.to_string()})
        }
    };
    let solutions: Vec<Value> = sols
        .iter()
        .zip(&residual_zero)
        .map(|(s, &z)| {
            let mut v = s.to_json();
            v["residual_zero"] = json!(z);
            v
        })
        .collect();
    let body = json!({
        "mu": h.ctx.mu,
        "w": h.w,
        "r": h.r,
        "terms": n,
        "theta_form": tf.to_json(),
        "indicial": ind.to_json(),
        "solutions": solutions,
        "wronskian": wronskian,
    });
    Ok((body, pass))
}

/// One named verification with its outcome.
struct Check {
    name: String,
    mu: Option<i64>,
    pass: bool,
    residual: Option<f64>,
    detail: Value,
}

impl Check {
    fn exact(name: impl Into<String>, mu: Option<i64>, pass: bool, detail: Value) -> Self {
        Check {
            name: name.into(),
            mu,
            pass,
            residual: None,
            detail,
        }
    }

    fn numeric(name: impl Into<String>, mu: Option<i64>, residual: f64, tol: f64, detail: Value) -> Self {
        Check {
            name: name.into(),
            mu,
            pass: residual < tol,
            residual: Some(residual),
            detail,
        }
    }

    fn failed(name: impl Into<String>, mu: Option<i64>, f: Failure) -> Self {
        Check::exact(name, mu, false, json!({"error": f.message()}))
    }

    fn to_json(&self) -> Value {
        let mut v = json!({"name": self.name, "pass": self.pass});
        if let Some(mu) = self.mu {
            v["mu"] = json!(mu);
        }
        if let Some(r) = self.residual {
            v["max_residual"] = json!(r);
        }
        if !self.detail.is_null() {
            v["detail"] = self.detail.clone();
        }
        v
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let suites: Vec<Suite> = match a.suite {
        Suite::All => vec![Suite::Identities, Suite::Vectorform, Suite::Frobenius],
        s => vec![s],
    };
    for &mu in &a.mu {
        ctx_for(mu)?;
    }
    let mut blocks = Vec::new();
    let mut pass = true;
    for suite in suites {
        let checks = match suite {
            Suite::Identities => identities_suite(&a.mu, a.terms),
            Suite::Vectorform => vectorform_suite(&a.mu, a.terms, a.tol),
            Suite::Frobenius => frobenius_suite(&a.mu, a.terms, a.tol),
            Suite::All => unreachable!(),
        };
        let failed = checks.iter().filter(|c| !c.pass).count();
        pass &= failed == 0;
        blocks.push(json!({
            "suite": serde_json::to_value(suite).expect("suite name"),
            "passed": checks.len() - failed,
            "failed": failed,
            "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        }));
    }
    Ok(Outcome {
        body: json!({"mu": a.mu, "terms": a.terms, "tol": a.tol, "suites": blocks}),
        pass,
        csv: None,
    })
}

/// Runs `f` for every μ in parallel and concatenates the checks in μ order.
fn per_mu(mus: &[i64], f: impl Fn(i64) -> Vec<Check> + Sync) -> Vec<Check> {
    mus.par_iter()
        .map(|&mu| f(mu))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn zero_check(name: &str, mu: i64, residual: &S) -> Check {
    Check::exact(
        name,
        Some(mu),
        residual.is_zero(),
        json!({"max_abs_coefficient": residual.max_abs()}),
    )
}

fn identities_suite(mus: &[i64], n: usize) -> Vec<Check> {
    let mut checks = per_mu(mus, |mu| match identities_for(mu, n) {
        Ok(c) => c,
        Err(f) => vec![Check::failed("identities", Some(mu), f)],
    });
    checks.extend(matrix_checks());
    checks
}

fn identities_for(mu: i64, n: usize) -> Result<Vec<Check>, Failure> {
    let ctx = ctx_for(mu)?;
    let fs = system(&ctx, n)?;
    let mut out = Vec::new();

    let res = forms::ramanujan_residual(&fs);
    let worst = res.iter().map(QSeries::max_abs).fold(0.0, f64::max);
    out.push(Check::exact(
        "ramanujan.residual",
        Some(mu),
        res.iter().all(QSeries::is_zero),
        json!({"max_abs_coefficient": worst}),
    ));

    let (u, v) = forms::invert_uv(&fs);
    out.push(zero_check("uv.E4", mu, &(&(&u * &v) - fs.e4())));
    out.push(zero_check("uv2.E6", mu, &(&(&(&u * &v) * &v) - fs.e6())));
    for k in 2..=mu as usize {
        let e = fs.eisenstein(k).expect("k ≤ μ");
        let mut p = u.clone();
        for _ in 1..k {
            p = &p * &v;
        }
        let name = format!("uv_power.E{}", 2 * k);
        match p.try_div(e) {
            Ok(ratio) => {
                let rest = ratio.nonconstant_part();
                out.push(Check::exact(
                    name,
                    Some(mu),
                    rest.is_zero(),
                    json!({"constant": ratio.constant_term().map(|c| c.to_text()), "max_abs_coefficient": rest.max_abs()}),
                ));
            }
            Err(e) => out.push(Check::failed(name, Some(mu), compute(e))),
        }
    }

    let d = forms::discriminant(&fs).map_err(compute)?;
    let dd = forms::serre_derivative(&d.series, &Q::from_integer(BigInt::from(d.weight)), &fs);
    out.push(zero_check("discriminant.serre", mu, &dd));
    let lead = crate::scalar::ratio64_to_big(d.series.lead_exponent());
    let want = Q::from_integer(BigInt::from(ctx.delta)) * &ctx.b;
    out.push(Check::exact(
        "discriminant.lead_exponent",
        Some(mu),
        lead == want,
        json!({"lead": lead.to_text(), "expected": want.to_text()}),
    ));

    if mu == 3 {
        for k in 1..=3 {
            let c = forms::classical_eisenstein(k, n);
            let e = fs.eisenstein(k).expect("k ≤ 3");
            out.push(zero_check(&format!("classical.E{}", 2 * k), mu, &(e - &c)));
        }
        let eta = eta24(d.series.len());
        out.push(zero_check("classical.eta24", mu, &(&d.series - &eta)));
    }
    Ok(out)
}

/// q Π_{n≥1} (1 − qⁿ)²⁴ to `len` coefficients.
fn eta24(len: usize) -> S {
    let mut p = S::one(len);
    for k in 1..len {
        let mut c = vec![Q::zero(); len];
        c[0] = Q::one();
        c[k] = -Q::one();
        p = &p * &S::from_coeffs(c);
    }
    p.pow_int(24).expect("unit").shift(Rational64::one())
}

fn matrix_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let dets: Vec<(usize, Q, Q)> = (0..=8usize)
        .into_par_iter()
        .map(|r| {
            let p = matrixkit::pascal_lower::<Q>(r).det().expect("square");
            let s = matrixkit::alt_exchange::<Q>(r).det().expect("square");
            (r, p, s)
        })
        .collect();
    out.push(Check::exact(
        "matrix.det_pascal",
        None,
        dets.iter().all(|(_, p, _)| p.is_one()),
        json!(dets
            .iter()
            .map(|(r, p, _)| json!({"r": r, "det": p.to_text()}))
            .collect::<Vec<_>>()),
    ));
    out.push(Check::exact(
        "matrix.det_alt_exchange",
        None,
        dets.iter().all(|(_, _, s)| s.abs().is_one()),
        json!(dets
            .iter()
            .map(|(r, _, s)| json!({"r": r, "det": s.to_text()}))
            .collect::<Vec<_>>()),
    ));

    let mut bad = Vec::new();
    let mut count = 0;
    for y in 0..=12 {
        for k in 0..=y {
            for p in 0..=y {
                count += 1;
                if matrixkit::binom_convolution(k, y, p) != matrixkit::binom_convolution_closed(k, y, p) {
                    bad.push(json!([k, y, p]));
                }
            }
        }
    }
    out.push(Check::exact(
        "matrix.binom_convolution",
        None,
        bad.is_empty(),
        json!({"cases": count, "mismatches": bad}),
    ));

    let grid: Vec<Q> = [(-2, 1), (1, 3), (5, 2)]
        .iter()
        .map(|&(n, d)| Q::new(n.into(), BigInt::from(d)))
        .collect();
    let mut cases = 0;
    let mut mismatches = 0;
    for r in 0..=8 {
        for x in &grid {
            for y in &grid {
                for z in &grid {
                    cases += 1;
                    if matrixkit::mixed_binomial_lhs(x, y, z, r) != matrixkit::mixed_binomial_rhs(x, y, z, r) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    out.push(Check::exact(
        "matrix.mixed_binomial",
        None,
        mismatches == 0,
        json!({"cases": cases, "mismatches": mismatches}),
    ));
    out
}

fn points_json(points: &[Complex64]) -> Value {
    json!(points.iter().map(|&z| format_complex(z)).collect::<Vec<_>>())
}

/// Named quasiform instances for μ: Ê₂ always, Dijkgraaf and a fixed
/// weight-8 depth-2 form at μ = 3.
fn instances(fs: &FormSystem) -> Result<Vec<(&'static str, QuasiForm)>, Failure> {
    let n = fs.n_terms;
    let zero = S::zero(Rational64::from_integer(n as i64));
    let mut out = vec![("E2", QuasiForm::new(fs, 2, vec![zero, S::one(n)]).map_err(compute)?)];
    if fs.mu() == 3 {
        out.push(("dijkgraaf", vectorform::dijkgraaf(fs).map_err(compute)?));
        let c = |p: i64, q: i64| Q::new(p.into(), q.into());
        let e4 = fs.e4();
        let h = vec![(e4 * e4).scale(&c(2, 1)), fs.e6().scale(&c(-3, 7)), e4.scale(&c(5, 11))];
        out.push(("quasi8", QuasiForm::new(fs, 8, h).map_err(compute)?));
    }
    Ok(out)
}

fn vectorform_suite(mus: &[i64], n: usize, tol: f64) -> Vec<Check> {
    per_mu(mus, |mu| match vectorform_for(mu, n, tol) {
        Ok(c) => c,
        Err(f) => vec![Check::failed("vectorform", Some(mu), f)],
    })
}

fn vectorform_for(mu: i64, n: usize, tol: f64) -> Result<Vec<Check>, Failure> {
    let ctx = ctx_for(mu)?;
    let fs = system(&ctx, n)?;
    let points = default_points();
    let mut out = Vec::new();
    let qp = vectorform::estimate_quasiperiod(&fs, points[0], tol).map_err(compute)?;
    let dev = (qp.value - qp.derived).norm();
    out.push(Check::numeric("quasiperiod", Some(mu), dev, tol, qp.to_json()));
    if mu == 3 {
        let paper = Complex64::new(0.0, -6.0 / std::f64::consts::PI);
        let d = (qp.value - paper).norm();
        out.push(Check::numeric(
            "quasiperiod.six_over_pi_i",
            Some(mu),
            d,
            1e-8,
            json!({"expected": format_complex(paper)}),
        ));
    }

    for (label, u) in instances(&fs)? {
        let u = u.with_chi(ChiMode::Numeric(qp.value));
        let chi = u.chi();
        let reports = [
            vectorform::verify_fundamental(&u, &points, chi, tol),
            vectorform::verify_component_laws(&u, &points, chi, 1, tol),
            vectorform::vandermonde_translates(&u, &points, chi, tol),
        ];
        for rep in reports {
            match rep {
                Ok(rep) => {
                    for law in rep.laws() {
                        let max = rep.max_residual(&law).unwrap_or(f64::NAN);
                        out.push(Check::numeric(
                            format!("{label}.{law}"),
                            Some(mu),
                            max,
                            tol,
                            json!({"points": points_json(&points)}),
                        ));
                    }
                }
                Err(e) => out.push(Check::failed(format!("{label}.laws"), Some(mu), compute(e))),
            }
        }
        if u.r >= 1 {
            match vectorform::gstack_check(&u) {
                Ok(g) => {
                    out.push(Check::exact(
                        format!("{label}.gstack.stated"),
                        Some(mu),
                        g.stated,
                        Value::Null,
                    ));
                    out.push(Check::exact(
                        format!("{label}.gstack.corrected"),
                        Some(mu),
                        g.corrected,
                        Value::Null,
                    ));
                }
                Err(e) => out.push(Check::failed(format!("{label}.gstack"), Some(mu), compute(e))),
            }
        }
    }
    Ok(out)
}

fn frobenius_suite(mus: &[i64], n: usize, tol: f64) -> Vec<Check> {
    let mut out = per_mu(mus, |mu| match frobenius_for(mu, n, tol) {
        Ok(c) => c,
        Err(f) => vec![Check::failed("frobenius", Some(mu), f)],
    });
    if mus.contains(&3) {
        match frobenius::garvan_check(n.min(20)) {
            Ok(g) => out.push(Check::exact(
                "garvan",
                Some(3),
                g.holds(),
                json!({"constant": g.constant.to_text(), "max_abs_coefficient": g.residual.max_abs()}),
            )),
            Err(e) => out.push(Check::failed("garvan", Some(3), compute(e))),
        }
    }
    out
}

fn frobenius_for(mu: i64, n: usize, tol: f64) -> Result<Vec<Check>, Failure> {
    let ctx = ctx_for(mu)?;
    let fs = system(&ctx, n)?;
    let mut out = Vec::new();
    let prec = Rational64::from_integer(n as i64);

    let h = HaldeSpec::from_tail(&ctx, ctx.delta, vec![S::zero(prec)]).map_err(compute)?;
    let tf = frobenius::to_theta_form(&h, &fs).map_err(compute)?;
    let sols = frobenius::frobenius_solve(&tf, n).map_err(compute)?;
    let w = frobenius::wronskian(&[sols[0].body.clone()], WronskianMode::Serre, &fs, ctx.delta, 0).map_err(compute)?;
    let delta = forms::discriminant(&fs).map_err(compute)?.series;
    let dp = frobenius::delta_power_check(&w, &fs, ctx.delta, 0).map_err(compute)?;
    out.push(Check::exact(
        "first_order.wronskian_is_delta",
        Some(mu),
        w == delta && dp.holds() && dp.constant.is_one(),
        dp.to_json(),
    ));
    let points = default_points();
    match frobenius::wronskian_modularity(&w, &ctx, ctx.delta, &points, tol) {
        Ok(rep) => {
            for law in rep.laws() {
                let max = rep.max_residual(&law).unwrap_or(f64::NAN);
                out.push(Check::numeric(
                    format!("first_order.{law}"),
                    Some(mu),
                    max,
                    tol,
                    json!({"points": points_json(&points)}),
                ));
            }
        }
        Err(e) => out.push(Check::failed("first_order.modularity", Some(mu), compute(e))),
    }

    if mu == 3 {
        let kz = HaldeSpec::from_tail(
            &ctx,
            5,
            vec![S::zero(prec), fs.e4().scale(&Q::new((-1).into(), 6.into()))],
        )
        .map_err(compute)?;
        let (report, pass) = solve_report(&kz, &fs, n)?;
        let exps = report["indicial"]["exponents"].clone();
        out.push(Check::exact(
            "kz.exponents",
            Some(mu),
            exps == json!(["5/6", "0/1"]),
            json!({"exponents": exps}),
        ));
        out.push(Check::exact(
            "kz.wronskian",
            Some(mu),
            pass,
            json!({"theta_equal": report["wronskian"]["theta_equal"], "delta_power": report["wronskian"]["delta_power"]["constant"]}),
        ));
        let tf = frobenius::to_theta_form(&kz, &fs).map_err(compute)?;
        let sols = frobenius::frobenius_solve(&tf, n).map_err(compute)?;
        let y0 = sols
            .iter()
            .find(|s| s.exponent.is_zero())
            .and_then(|s| s.body.as_series());
        let ok = y0
            .and_then(|y| y.try_div(fs.e4()).ok())
            .is_some_and(|ratio| ratio.nonconstant_part().is_zero());
        out.push(Check::exact("kz.lambda0_is_E4", Some(mu), ok, Value::Null));
    }
    Ok(out)
}
