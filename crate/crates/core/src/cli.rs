//! Batch command-line surface.
//!
//! Every subcommand runs one job and writes one report to the output stream,
//! as JSON (default) or as CSV with dotted column names. Diagnostics go to the
//! error stream. Reports carry a `"schema"` tag, an echo of the resolved
//! configuration, and a list of checks. Each check names the bound it compares
//! against and records the signed residual `value − bound`.
//!
//! Exit codes: 0 success, 2 invariant violation, 3 dimension cap exceeded,
//! 4 bad arguments, 1 I/O failure.

use std::ffi::OsString;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::calculus::Calculus;
use crate::channel::{self, Direction, EquivariantChannel};
use crate::entangle::{self, OptimizerConfig, BOUND_SLACK, PLATEAU_REL_TOL};
use crate::error::{Error, Result};
use crate::jones_wenzl::{self, tolerance, CAP_TOL, FIXES_TOL, IDEMPOTENCE_TOL, SYMMETRY_TOL, TRACE_REL_TOL};
use crate::qnum::{admissible_triples, AdmissibleTriple, QParams};
use crate::random::{stream_rng, unit_vector};
use crate::vertex::{self, EquivariantIsometry};

pub const SCHEMA: &str = "wenzl-lab/1";
/// Directory for serialized Jones–Wenzl projections, reused across runs.
pub const CACHE_ENV: &str = "WENZL_LAB_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

/// Agreement of the two θ-net evaluations.
pub const THETA_REL_TOL: f64 = 1e-7;
/// Optimizer attainment of the supremum.
pub const ATTAIN_REL_TOL: f64 = 1e-6;
/// Floor for sampled Choi values at or below the threshold.
pub const CHOI_SAMPLE_TOL: f64 = 1e-6;
pub const CHOI_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "wenzl-lab", version, about = "Jones-Wenzl calculus, entangled subspaces and equivariant channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub job: JobConfig,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct JobConfig {
    /// Rank N of O_N^+.
    #[arg(long, global = true, default_value_t = 3)]
    pub n: usize,
    /// Irrep label k of the input space H_k.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Irrep label l of the first output factor.
    #[arg(long, global = true)]
    pub l: Option<usize>,
    /// Irrep label m of the second output factor.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Optimizer restarts.
    #[arg(long, global = true, default_value_t = 20)]
    pub restarts: usize,
    /// Optimizer stopping tolerance on the per-sweep gain.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Largest ambient dimension N^legs any tensor may reach.
    #[arg(long, global = true, default_value_t = 4096)]
    pub max_dim: usize,
    /// Random samples per job.
    #[arg(long, global = true, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true, value_enum, default_value_t = LogBase::E)]
    pub log_base: LogBase,
    /// Embed wall time in the report instead of printing it to stderr.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum LogBase {
    #[value(name = "e")]
    #[serde(rename = "e")]
    E,
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
}

impl LogBase {
    /// Converts an entropy in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    /// Trace out the first factor; output on H_m.
    TraceFirst,
    /// Trace out the last factor; output on H_l.
    TraceLast,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::TraceFirst => Direction::TraceFirst,
            DirectionArg::TraceLast => Direction::TraceLast,
        }
    }
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Irrep dimensions [k+1]_q for k = 0..=max-k.
    Dims {
        #[arg(long, default_value_t = 10)]
        max_k: usize,
    },
    /// θ-net by closed form and by brute-force trace.
    Theta,
    /// Defining residuals of the Jones–Wenzl projection p_k.
    JwVerify,
    /// Isometry defects and θ agreement for α_k^{l,m}.
    Isometry,
    /// Random search against the largest-Schmidt-coefficient bound.
    Schmidt,
    /// Alternating optimizer for sup λ_1.
    MaxSchmidt,
    /// Saturating witness, Schmidt plateau and E_μ surrogate.
    Saturation {
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
    },
    /// S¹→S^∞ norm and the maximally mixed output of the channel.
    Channel {
        #[arg(long, value_enum, default_value_t = DirectionArg::TraceFirst)]
        direction: DirectionArg,
    },
    /// Minimum output entropy bracket.
    Moe,
    /// d-positivity threshold and witness of the Choi-type map.
    Choi {
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Defaults to the threshold θ/(d[k+1]).
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Table over all admissible triples in the given ranges.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 3)]
    pub n_min: usize,
    #[arg(long, default_value_t = 5)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1)]
    pub l_min: usize,
    #[arg(long, default_value_t = 2)]
    pub l_max: usize,
    #[arg(long, default_value_t = 1)]
    pub m_min: usize,
    #[arg(long, default_value_t = 2)]
    pub m_max: usize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dims { .. } => "dims",
            Command::Theta => "theta",
            Command::JwVerify => "jw-verify",
            Command::Isometry => "isometry",
            Command::Schmidt => "schmidt",
            Command::MaxSchmidt => "max-schmidt",
            Command::Saturation { .. } => "saturation",
            Command::Channel { .. } => "channel",
            Command::Moe => "moe",
            Command::Choi { .. } => "choi",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

/// One comparison of a computed value with a bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The bound in words, e.g. `"[k+1]/theta"`.
    pub bound: String,
    pub relation: Relation,
    pub value: f64,
    pub bound_value: f64,
    /// `value − bound_value`.
    pub residual: f64,
    /// Absolute slack, or relative to `|bound_value|` when `relative`.
    pub tolerance: f64,
    pub relative: bool,
    pub holds: bool,
    /// Whether a failure makes the run exit with an invariant violation.
    pub enforced: bool,
}

impl Check {
    fn new(name: &str, bound: &str, relation: Relation, value: f64, bound_value: f64, tolerance: f64, relative: bool) -> Self {
        let residual = value - bound_value;
        let slack = if relative { tolerance * bound_value.abs() } else { tolerance };
        let holds = match relation {
            Relation::AtMost => residual <= slack,
            Relation::AtLeast => residual >= -slack,
            Relation::Equal => residual.abs() <= slack,
        };
        Self {
            name: name.into(),
            bound: bound.into(),
            relation,
            value,
            bound_value,
            residual,
            tolerance,
            relative,
            holds,
            enforced: true,
        }
    }

    fn at_most(name: &str, bound: &str, value: f64, bound_value: f64, tol: f64) -> Self {
        Self::new(name, bound, Relation::AtMost, value, bound_value, tol, false)
    }

    fn at_least(name: &str, bound: &str, value: f64, bound_value: f64, tol: f64) -> Self {
        Self::new(name, bound, Relation::AtLeast, value, bound_value, tol, false)
    }

    fn equal(name: &str, bound: &str, value: f64, bound_value: f64, tol: f64) -> Self {
        Self::new(name, bound, Relation::Equal, value, bound_value, tol, false)
    }

    fn equal_rel(name: &str, bound: &str, value: f64, bound_value: f64, tol: f64) -> Self {
        Self::new(name, bound, Relation::Equal, value, bound_value, tol, true)
    }

    fn informational(mut self) -> Self {
        self.enforced = false;
        self
    }
}

/// Result fields and checks of one job, before the envelope is added.
pub struct Outcome {
    pub fields: Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn new(fields: Value, checks: Vec<Check>) -> Self {
        let fields = match fields {
            Value::Object(map) => map,
            other => Map::from_iter([("result".to_string(), other)]),
        };
        Self { fields, checks }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds || !c.enforced)
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } => EXIT_CAP,
        Error::InvalidRank { .. }
        | Error::NotAdmissible { .. }
        | Error::Overflow { .. }
        | Error::IndexOutOfRange { .. }
        | Error::RepeatedIndex(_)
        | Error::InvalidSplit { .. }
        | Error::WitnessUnavailable(_)
        | Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_VIOLATION,
    }
}

/// Parses `args` (including the program name) and runs the job.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    execute(&cli, out, err)
}

/// Runs an already parsed command line.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let start = Instant::now();
    let outcome = match validate(&cli.job).and_then(|_| dispatch(&cli.command, &cli.job)) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let passed = outcome.passed();
    let report = envelope(cli, outcome, cli.job.timing.then_some(elapsed));
    if !cli.job.timing {
        let _ = writeln!(err, "wall time: {elapsed:.3} s");
    }
    for c in report["checks"].as_array().into_iter().flatten() {
        if c["holds"] == Value::Bool(false) {
            let tag = if c["enforced"] == Value::Bool(true) { "violation" } else { "note" };
            let text = |key: &str| c[key].as_str().unwrap_or_default().to_owned();
            let _ = writeln!(
                err,
                "{tag}: {} = {} fails {} {} = {}",
                text("name"),
                c["value"],
                text("relation"),
                text("bound"),
                c["bound_value"]
            );
        }
    }
    let written = match cli.job.format {
        Format::Json => write_json(out, &report),
        Format::Csv => write_csv(out, &report),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_IO;
    }
    if passed {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

fn validate(job: &JobConfig) -> Result<()> {
    if job.restarts == 0 {
        return Err(Error::InvalidArgument("--restarts must be positive".into()));
    }
    if !(job.tol.is_finite() && job.tol > 0.0) {
        return Err(Error::InvalidArgument("--tol must be a positive number".into()));
    }
    if job.max_dim == 0 {
        return Err(Error::InvalidArgument("--max-dim must be positive".into()));
    }
    Ok(())
}

fn envelope(cli: &Cli, outcome: Outcome, wall_time: Option<f64>) -> Value {
    let mut config = serde_json::to_value(&cli.job).expect("config serializes");
    if let (Value::Object(c), Value::Object(extra)) = (&mut config, command_args(&cli.command)) {
        c.extend(extra);
    }
    let mut report = Map::new();
    report.insert("schema".into(), json!(SCHEMA));
    report.insert("command".into(), json!(cli.command.name()));
    report.insert("config".into(), config);
    report.insert("status".into(), json!(if outcome.passed() { "ok" } else { "violation" }));
    report.insert("checks".into(), serde_json::to_value(&outcome.checks).expect("checks serialize"));
    for (key, value) in outcome.fields {
        report.insert(key, value);
    }
    if let Some(t) = wall_time {
        report.insert("wall_time_s".into(), json!(t));
    }
    Value::Object(report)
}

fn command_args(cmd: &Command) -> Value {
    match serde_json::to_value(cmd).expect("command serializes") {
        // Unit variants serialize as a bare string and carry no arguments.
        Value::Object(map) => map.into_iter().next().map(|(_, v)| v).unwrap_or(Value::Null),
        _ => Value::Null,
    }
}

fn write_json(out: &mut dyn Write, report: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, report)?;
    writeln!(out)?;
    Ok(())
}

/// Flattens nested objects and arrays into `(dotted.key, value)` pairs.
pub fn flatten(value: &Value) -> Vec<(String, String)> {
    fn go(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match value {
            Value::Object(map) => map.iter().for_each(|(k, v)| go(&key(k), v, out)),
            Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| go(&key(&i.to_string()), v, out)),
            Value::Null => out.push((prefix.to_string(), String::new())),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    go("", value, &mut out);
    out
}

/// Moves the identifying columns of a sweep row to the front.
fn leading_first(mut row: Vec<(String, String)>) -> Vec<(String, String)> {
    const LEADING: [&str; 6] = ["n", "k", "l", "m", "r", "status"];
    row.sort_by_key(|(k, _)| LEADING.iter().position(|l| l == k).unwrap_or(LEADING.len()));
    row
}

/// A sweep becomes one CSV row per table row; anything else is one row.
fn write_csv(out: &mut dyn Write, report: &Value) -> Result<()> {
    let rows: Vec<Vec<(String, String)>> = match report.get("rows").and_then(Value::as_array) {
        Some(rows) => rows.iter().map(flatten).map(leading_first).collect(),
        None => vec![flatten(report)],
    };
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = rows.first().map(|r| r.iter().map(|(k, _)| k.as_str()).collect()).unwrap_or_default();
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for row in &rows {
        w.write_record(row.iter().map(|(_, v)| v.as_str())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn calculus(job: &JobConfig, n: usize) -> Result<Calculus> {
    let calc = Calculus::with_cap(n, job.max_dim)?;
    Ok(match std::env::var_os(CACHE_ENV) {
        Some(dir) if !dir.is_empty() => calc.with_store(dir),
        _ => calc,
    })
}

fn triple(job: &JobConfig) -> Result<AdmissibleTriple> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")));
    AdmissibleTriple::new(need(job.k, "k")?, need(job.l, "l")?, need(job.m, "m")?)
}

fn optimizer(job: &JobConfig) -> OptimizerConfig {
    OptimizerConfig { restarts: job.restarts, tol: job.tol, seed: job.seed, ..OptimizerConfig::default() }
}

fn legs_tol(base: f64, n: usize, legs: usize) -> f64 {
    tolerance(base, n, legs)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Runs one job and returns its result fields and checks.
pub fn dispatch(cmd: &Command, job: &JobConfig) -> Result<Outcome> {
    match cmd {
        Command::Dims { max_k } => dims(job, *max_k),
        Command::Theta => theta(job),
        Command::JwVerify => jw_verify(job),
        Command::Isometry => isometry(job),
        Command::Schmidt => schmidt(job),
        Command::MaxSchmidt => max_schmidt(job),
        Command::Saturation { mu } => saturation(job, *mu),
        Command::Channel { direction } => channel_cmd(job, (*direction).into()),
        Command::Moe => moe(job),
        Command::Choi { d, scale } => choi(job, *d, *scale),
        Command::Sweep(args) => sweep(job, args),
    }
}

fn dims(job: &JobConfig, max_k: usize) -> Result<Outcome> {
    let params = QParams::new(job.n)?;
    let dims = (0..=max_k).map(|k| params.dim_irrep_usize(k)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..max_k {
        let lhs = params.q_int(k + 2)?;
        let rhs = job.n as f64 * params.q_int(k + 1)? - params.q_int(k)?;
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    let checks = vec![Check::equal("dimension_recursion", "[n+1] = N[n] - [n-1] (max rel. error)", worst, 0.0, 1e-10)];
    Ok(Outcome::new(json!({ "q": params.q(), "dims": dims }), checks))
}

fn theta(job: &JobConfig) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let t = triple(job)?;
    let closed = calc.params().theta_net(&t);
    let traced = vertex::theta_by_trace(&vertex::three_vertex(&calc, t)?);
    let rel_err = (traced - closed).abs() / closed;
    let checks = vec![Check::equal_rel("theta_agreement", "theta closed form", traced, closed, THETA_REL_TOL)];
    Ok(Outcome::new(
        json!({ "triple": t, "theta_closed": closed, "theta_trace": traced, "rel_err": rel_err }),
        checks,
    ))
}

fn jw_verify(job: &JobConfig) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let k = job.k.ok_or_else(|| Error::InvalidArgument("--k is required".into()))?;
    let r = jones_wenzl::verify_jw(calc.params(), &*calc.projection(k)?);
    let tol = |base| tolerance(base, job.n, k);
    let checks = vec![
        Check::at_most("idempotence", "||p^2 - p||_max", r.idempotence, 0.0, tol(IDEMPOTENCE_TOL)),
        Check::at_most("symmetry", "||p - p^T||_max", r.symmetry, 0.0, tol(SYMMETRY_TOL)),
        Check::at_most("cap_annihilation", "||cap p||_max", r.cap_annihilation, 0.0, tol(CAP_TOL)),
        Check::equal_rel("trace", "[k+1]_q", r.trace, r.trace_expected, tol(TRACE_REL_TOL)),
        Check::equal("rank", "round([k+1]_q)", r.rank as f64, r.expected_rank as f64, 0.0),
    ];
    Ok(Outcome::new(to_value(&r), checks))
}

fn build_isometry(calc: &Calculus, job: &JobConfig) -> Result<EquivariantIsometry> {
    vertex::isometry(calc, triple(job)?)
}

fn isometry(job: &JobConfig) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = build_isometry(&calc, job)?;
    let s = vertex::summarize(&calc, &iso)?;
    let t = s.triple;
    let tol = legs_tol(FIXES_TOL, job.n, t.l + t.m);
    let checks = vec![
        Check::equal_rel("theta_agreement", "theta closed form", s.theta_trace, s.theta_closed, THETA_REL_TOL),
        Check::at_most("isometry", "||alpha^* alpha - 1||_max", s.isometry_defect, 0.0, tol),
        Check::at_most("range", "||(p_l (x) p_m) alpha - alpha||_max", s.range_defect, 0.0, tol),
        Check::at_most("domain", "||alpha p_k - alpha||_max", s.domain_defect, 0.0, tol),
        Check::at_most("vertex_norm", "[r+1]_q", s.vertex_norm_sq, s.vertex_norm_sq_bound, 1e-9 * s.vertex_norm_sq_bound),
    ];
    Ok(Outcome::new(to_value(&s), checks))
}

fn rd_checks(params: &QParams, t: &AdmissibleTriple, observed: f64) -> Result<Vec<Check>> {
    let bound = params.rd_bound(t)?;
    Ok(vec![
        Check::at_most("lambda_1", "[k+1]/theta", observed, bound.exact, BOUND_SLACK),
        Check::at_most("rd_coarse", "C(q)^2 q^r", bound.exact, bound.coarse, 0.0),
    ])
}

fn schmidt(job: &JobConfig) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = build_isometry(&calc, job)?;
    let t = iso.triple();
    let cert = entangle::rd_certificate(&calc, &iso, job.samples, job.seed)?;
    let first = unit_vector(&mut stream_rng(job.seed, 0), iso.domain_dim());
    let mut sample = entangle::schmidt_spectrum(&iso.apply(&first)?, t.l)?;
    sample.entropy = job.log_base.convert(sample.entropy);
    let checks = rd_checks(calc.params(), &t, cert.max_observed)?;
    Ok(Outcome::new(json!({ "certificate": cert, "first_sample": sample }), checks))
}

fn max_schmidt(job: &JobConfig) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = build_isometry(&calc, job)?;
    let t = iso.triple();
    let r = entangle::max_schmidt_optimizer(&iso, &optimizer(job))?;
    let target = calc.params().lambda_max(&t).sqrt();
    let checks = vec![
        Check::at_most("sup_bound", "([k+1]/theta)^(1/2)", r.value, target, BOUND_SLACK),
        Check::equal_rel("attainment", "([k+1]/theta)^(1/2)", r.value, target, ATTAIN_REL_TOL).informational(),
    ];
    Ok(Outcome::new(
        json!({
            "triple": t,
            "value": r.value,
            "lambda_1": r.value * r.value,
            "target": target,
            "rel_err": (r.value - target).abs() / target,
            "converged": r.converged,
            "converged_restarts": r.converged_restarts,
            "restarts": r.restarts,
            "best_restart": r.best_restart,
            "sweeps": r.sweeps,
        }),
        checks,
    ))
}

fn saturation(job: &JobConfig, mu: f64) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = build_isometry(&calc, job)?;
    let t = iso.triple();
    let witness = entangle::saturation_witness(&calc, t)?;
    let sat = entangle::verify_saturation(&calc, &iso, &witness)?;
    let hr = entangle::higher_rank_value(&calc, &iso, &witness)?;
    let mut e_mu = entangle::e_mu_report(calc.params(), t, mu)?;
    e_mu.entropy_lower = job.log_base.convert(e_mu.entropy_lower);
    e_mu.dim_term = job.log_base.convert(e_mu.dim_term);
    e_mu.value = job.log_base.convert(e_mu.value);
    let fix_tol = tolerance(FIXES_TOL, job.n, t.l.max(t.m));
    let checks = vec![
        Check::at_most("plateau", "top |A| Schmidt values = [k+1]/theta (max rel. dev.)", sat.max_rel_dev, 0.0, PLATEAU_REL_TOL),
        Check::at_most("family_fixed", "||p eta - eta|| over the family", witness.fix_residual, 0.0, fix_tol),
        Check::at_most("input_in_domain", "||p_k xi - xi||", witness.domain_residual, 0.0, fix_tol),
        Check::equal_rel("higher_rank", "|A| ([k+1]/theta)^(1/2)", hr.lhs, hr.rhs_exact, PLATEAU_REL_TOL),
        Check::at_least("higher_rank_floor", "|A| q^(r/2)", hr.lhs, hr.rhs_floor, 1e-12 * hr.rhs_floor).informational(),
    ];
    Ok(Outcome::new(
        json!({
            "saturation": sat,
            "fix_residual": witness.fix_residual,
            "domain_residual": witness.domain_residual,
            "higher_rank": hr,
            "e_mu": e_mu,
        }),
        checks,
    ))
}

fn channel_cmd(job: &JobConfig, direction: Direction) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = Arc::new(build_isometry(&calc, job)?);
    let ch = EquivariantChannel::new(iso, direction);
    let t = ch.triple();
    let norm = channel::channel_norm_1_to_inf(&calc, &ch, &optimizer(job))?;
    let dk = ch.input_dim();
    let mixed = channel::channel_apply(&ch, &(nalgebra::DMatrix::identity(dk, dk) / dk as f64))?;
    let spectrum = channel::output_spectrum(&mixed);
    let min_eig = nalgebra::SymmetricEigen::new(mixed.clone()).eigenvalues.min();
    let entropy = job.log_base.convert(channel::von_neumann_entropy(&mixed)?);
    let mut checks = vec![
        Check::at_most("norm_sup", "[k+1]/theta", norm.value, norm.exact, BOUND_SLACK),
        Check::equal_rel("norm_attained", "[k+1]/theta", norm.value, norm.exact, ATTAIN_REL_TOL).informational(),
        // q^r exceeds 1/[r+1] once r ≥ 1, so this is a comparison, not a floor.
        Check::at_least("norm_floor", "q^r", norm.value, norm.lower_bound, 1e-12).informational(),
        Check::equal("mixed_output_trace", "1", mixed.trace(), 1.0, 1e-10),
        Check::at_least("mixed_output_psd", "0", min_eig, 0.0, 1e-10),
    ];
    if let Some(upper) = norm.upper_bound {
        checks.insert(1, Check::at_most("norm_coarse", "C(q)^2 q^r", norm.value, upper, BOUND_SLACK));
    }
    Ok(Outcome::new(
        json!({
            "triple": t,
            "direction": direction,
            "input_dim": dk,
            "output_dim": ch.output_dim(),
            "norm": norm,
            "mixed_output": { "spectrum": spectrum, "entropy": entropy, "min_eigenvalue": min_eig },
        }),
        checks,
    ))
}

fn moe(job: &JobConfig) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = Arc::new(build_isometry(&calc, job)?);
    let ch = EquivariantChannel::new(iso, Direction::TraceFirst);
    let t = ch.triple();
    let mut b = channel::moe_bracket(&calc, &ch, job.samples, job.restarts, job.seed)?;
    let lb = job.log_base;
    b.lower = lb.convert(b.lower);
    b.upper = lb.convert(b.upper);
    b.gap = lb.convert(b.gap);
    b.witness_entropy = lb.convert(b.witness_entropy);
    b.coarse_lower = b.coarse_lower.map(|c| lb.convert(c));
    let mut checks = vec![Check::at_least("upper_vs_lower", "log(theta/[k+1])", b.upper, b.lower, BOUND_SLACK)];
    if let Some(c) = b.coarse_lower {
        checks.push(Check::at_least("lower_vs_coarse", "-r log q - 2 log C(q)", b.lower, c, BOUND_SLACK));
    }
    if t.k == 0 && t.l == t.m {
        checks.push(Check::at_most("bell_gap", "0", b.gap, 0.0, BOUND_SLACK));
    }
    if t.is_highest_weight() {
        checks.push(Check::equal("highest_weight_upper", "0", b.upper, 0.0, BOUND_SLACK));
    }
    Ok(Outcome::new(to_value(&b), checks))
}

fn choi(job: &JobConfig, d: usize, scale: Option<f64>) -> Result<Outcome> {
    let calc = calculus(job, job.n)?;
    let iso = build_isometry(&calc, job)?;
    let t = iso.triple();
    let threshold = channel::d_positivity_threshold(calc.params(), t, d)?;
    let scale = scale.unwrap_or(threshold);
    if !scale.is_finite() || scale < 0.0 {
        return Err(Error::InvalidArgument("--scale must be a non-negative number".into()));
    }
    let r = channel::choi_witness_value(&calc, &iso, d, scale, job.samples, job.seed)?;
    let mut checks = vec![Check::equal("witness_residual", "d - scale d^2 [k+1]/theta", r.witness_value, r.predicted, CHOI_RESIDUAL_TOL)];
    if let Some(min) = r.sampled_min {
        let check = Check::at_least("sampled_min", "0 on Schmidt rank <= d", min, 0.0, CHOI_SAMPLE_TOL);
        checks.push(if scale <= threshold { check } else { check.informational() });
    }
    Ok(Outcome::new(to_value(&r), checks))
}

/// One line of a sweep. Fields are `None` for skipped rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub r: usize,
    pub status: &'static str,
    pub reason: Option<String>,
    pub lambda_exact: Option<f64>,
    pub lambda_coarse: Option<f64>,
    pub theta_closed: Option<f64>,
    pub theta_trace: Option<f64>,
    pub theta_rel_err: Option<f64>,
    pub moe_lower: Option<f64>,
    pub moe_upper: Option<f64>,
    pub moe_gap: Option<f64>,
    pub family_size: Option<usize>,
    /// `|A| [k+1]/θ`, defined for `r ≥ 1`.
    pub mass: Option<f64>,
}

impl SweepRow {
    fn skipped(n: usize, t: AdmissibleTriple, reason: String) -> Self {
        Self {
            n,
            k: t.k,
            l: t.l,
            m: t.m,
            r: t.r,
            status: "skipped",
            reason: Some(reason),
            lambda_exact: None,
            lambda_coarse: None,
            theta_closed: None,
            theta_trace: None,
            theta_rel_err: None,
            moe_lower: None,
            moe_upper: None,
            moe_gap: None,
            family_size: None,
            mass: None,
        }
    }
}

fn sweep_row(calc: &Calculus, job: &JobConfig, t: AdmissibleTriple) -> Result<SweepRow> {
    let n = calc.n();
    if let Err(e @ Error::CapExceeded { .. }) = calc.dim(t.l + t.m) {
        return Ok(SweepRow::skipped(n, t, e.to_string()));
    }
    let params = calc.params();
    let iso = Arc::new(vertex::isometry(calc, t)?);
    let ch = EquivariantChannel::new(iso.clone(), Direction::TraceFirst);
    let b = channel::moe_bracket(calc, &ch, job.samples, 0, job.seed)?;
    let lambda = params.lambda_max(&t);
    let family = entangle::family_size(n, t.r);
    let lb = job.log_base;
    Ok(SweepRow {
        n,
        k: t.k,
        l: t.l,
        m: t.m,
        r: t.r,
        status: "ok",
        reason: None,
        lambda_exact: Some(lambda),
        lambda_coarse: params.rd_bound(&t).ok().map(|b| b.coarse),
        theta_closed: Some(iso.theta_closed()),
        theta_trace: Some(iso.theta_trace()),
        theta_rel_err: Some(iso.theta_rel_err()),
        moe_lower: Some(lb.convert(b.lower)),
        moe_upper: Some(lb.convert(b.upper)),
        moe_gap: Some(lb.convert(b.gap)),
        family_size: Some(family),
        mass: (t.r >= 1).then_some(family as f64 * lambda),
    })
}

fn sweep(job: &JobConfig, args: &SweepArgs) -> Result<Outcome> {
    if args.n_min > args.n_max || args.l_min > args.l_max || args.m_min > args.m_max {
        return Err(Error::InvalidArgument("sweep ranges must satisfy min <= max".into()));
    }
    let calcs = (args.n_min..=args.n_max).map(|n| calculus(job, n).map(Arc::new)).collect::<Result<Vec<_>>>()?;
    let mut jobs = Vec::new();
    for calc in &calcs {
        for l in args.l_min..=args.l_max {
            for m in args.m_min..=args.m_max {
                let mut triples = admissible_triples(l, m);
                triples.sort_by_key(|t| t.k);
                jobs.extend(triples.into_iter().map(|t| (calc.clone(), t)));
            }
        }
    }
    let rows = jobs.par_iter().map(|(calc, t)| sweep_row(calc, job, *t)).collect::<Result<Vec<_>>>()?;

    let computed: Vec<&SweepRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let worst_theta = computed.iter().filter_map(|r| r.theta_rel_err).fold(0.0, f64::max);
    let worst_bracket = computed.iter().filter_map(|r| Some(r.moe_upper? - r.moe_lower?)).fold(f64::INFINITY, f64::min);
    let mut checks = vec![Check::at_most("theta_agreement", "theta closed form (max rel. error)", worst_theta, 0.0, THETA_REL_TOL)];
    if worst_bracket.is_finite() {
        checks.push(Check::at_least("moe_bracket", "upper - lower (min)", worst_bracket, 0.0, BOUND_SLACK));
    }
    let skipped = rows.len() - computed.len();
    Ok(Outcome::new(json!({ "row_count": rows.len(), "skipped": skipped, "rows": rows }), checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("wenzl-lab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn json_of(args: &[&str]) -> Value {
        let (code, out, err) = run_str(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str(&out).unwrap()
    }

    #[test]
    fn dims_example() {
        let v = json_of(&["dims", "--n", "3", "--max-k", "5"]);
        assert_eq!(v["dims"], json!([1, 3, 8, 21, 55, 144]));
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["config"]["max_k"], 5);
    }

    #[test]
    fn theta_example() {
        let v = json_of(&["theta", "--n", "3", "--k", "2", "--l", "2", "--m", "2"]);
        assert!((v["theta_closed"].as_f64().unwrap() - 56.0 / 3.0).abs() < 1e-12);
        assert!(v["rel_err"].as_f64().unwrap() < 1e-7);
        assert_eq!(v["checks"][0]["bound"], "theta closed form");
    }

    #[test]
    fn choi_example() {
        let v = json_of(&["choi", "--n", "3", "--k", "0", "--l", "1", "--m", "1", "--d", "2", "--scale", "1.6"]);
        assert!(v["witness_value"].as_f64().unwrap() < 0.0);
        assert!((v["threshold"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_str(&["theta", "--n", "3", "--k", "1", "--l", "1", "--m", "1"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["theta", "--n", "3", "--k", "2"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["theta", "--n", "three"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["theta", "--n", "3", "--k", "0", "--l", "4", "--m", "4", "--max-dim", "100"]).0, EXIT_CAP);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn csv_uses_dotted_columns() {
        let (code, out, _) = run_str(&["theta", "--n", "3", "--k", "0", "--l", "1", "--m", "1", "--format", "csv"]);
        assert_eq!(code, 0);
        let header = out.lines().next().unwrap();
        assert!(header.contains("config.n") && header.contains("triple.k") && header.contains("checks.0.residual"));
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn log_base_two() {
        let args = ["moe", "--n", "4", "--k", "0", "--l", "1", "--m", "1", "--samples", "5", "--restarts", "1"];
        let e = json_of(&args);
        let mut with_two = args.to_vec();
        with_two.extend(["--log-base", "2"]);
        let two = json_of(&with_two);
        assert!((two["lower"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert!((e["lower"].as_f64().unwrap() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows_and_mass() {
        let v = json_of(&["sweep", "--samples", "5"]);
        // (1,1) and (2,2) give 2 and 3 triples, (1,2) and (2,1) give 2 each.
        assert_eq!(v["row_count"], 27);
        let masses: Vec<f64> = v["rows"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|r| r["k"] == 0 && r["l"] == 1 && r["m"] == 1)
            .map(|r| r["mass"].as_f64().unwrap())
            .collect();
        for (got, want) in masses.iter().zip([1.0 / 3.0, 0.5, 0.6]) {
            assert!((got - want).abs() < 1e-12);
        }
        let skipped = json_of(&["sweep", "--n-min", "3", "--n-max", "3", "--l-max", "2", "--m-max", "2", "--max-dim", "27", "--samples", "2"]);
        assert_eq!(skipped["skipped"], 3);
        assert_eq!(skipped["rows"].as_array().unwrap().last().unwrap()["status"], "skipped");
    }

    #[test]
    fn timing_is_opt_in() {
        let v = json_of(&["dims", "--max-k", "2"]);
        assert!(v.get("wall_time_s").is_none());
        let v = json_of(&["dims", "--max-k", "2", "--timing"]);
        assert!(v["wall_time_s"].as_f64().is_some());
    }
}
