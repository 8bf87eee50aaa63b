//! Command-line driver: configuration, experiment commands and output formats.
//!
//! Step `t` of an experiment maps the iterate `u_t` to `u_{t+1}` (and produces `v_t` in the
//! rectangular case); per-step rows report `u_{t+1}` and `v_t`.

pub mod config;
mod table;

pub use config::{ConfigError, ExperimentConfig};
pub use table::{Cell, Table};

use crate::amp_engine::{AmpTrajectory, CumulantSource};
use crate::ensembles::{build_rect_instance, build_symmetric_instance, InstanceKind, SpectrumInput};
use crate::error::Error;
use crate::freeprob::CumulantTable;
use crate::rng::replicate_seed;
use crate::spectra::SpectralLaw;
use crate::state_evolution::{
    bayes_amp_rect, bayes_amp_symmetric, fixed_point_rect_with, fixed_point_symmetric_with,
    pca_baseline_rect, pca_baseline_rect_series, pca_baseline_symmetric,
    pca_baseline_symmetric_series, se_pca_rect, se_pca_symmetric, FixedPoint, SeTrajectory,
};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_SIMULATION: i32 = 4;

/// Fraction of replicates that must finish for `simulate` and `compare` to succeed.
pub const MIN_COMPLETED_FRACTION: f64 = 0.9;

#[derive(Debug, Parser)]
#[command(name = "rotamp", version, about = "AMP for rotationally invariant spiked matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving every output file; without it the main table goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Moments and free cumulants of the configured law or moment list.
    Cumulants,
    /// State-evolution predictions, plus the fixed point.
    Se,
    /// Fixed point of the state evolution.
    FixedPoint,
    /// Spectral-PCA overlaps.
    Baseline,
    /// Monte Carlo runs of Bayes-AMP.
    Simulate,
    /// State evolution joined with simulation summaries.
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A named output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    fn table(stem: &str, table: &Table, format: Format) -> Self {
        match format {
            Format::Csv => Artifact { name: format!("{stem}.csv"), body: table.to_csv() },
            Format::Json => Artifact { name: format!("{stem}.json"), body: pretty(&table.to_json()) },
        }
    }

    fn json(stem: &str, value: &Value) -> Self {
        Artifact { name: format!("{stem}.json"), body: pretty(value) }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Domain(Error),
    Simulation { completed: usize, total: usize },
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Domain(_) => EXIT_DOMAIN,
            Failure::Simulation { .. } => EXIT_SIMULATION,
        }
    }

    pub fn diagnostic(&self) -> Value {
        match self {
            Failure::Config(msg) => json!({ "error": "ConfigError", "message": msg }),
            Failure::Domain(e) => json!({ "error": error_name(e), "message": e.to_string() }),
            Failure::Simulation { completed, total } => json!({
                "error": "SimulationFailure",
                "message": format!("only {completed} of {total} replicates finished"),
            }),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => Failure::Config(msg),
            other => Failure::Domain(other),
        }
    }
}

pub fn error_name(e: &Error) -> &'static str {
    match e {
        Error::RadiusExceeded { .. } => "RadiusExceeded",
        Error::OutOfDomain { .. } => "OutOfDomain",
        Error::InverseOutOfRange { .. } => "InverseOutOfRange",
        Error::BelowTransition(_) => "BelowTransition",
        Error::QuantileUnavailable(_) => "QuantileUnavailable",
        Error::TooFewEntries { .. } => "TooFewEntries",
        Error::DimensionMismatch { .. } => "DimensionMismatch",
        Error::ShapeMismatch(_) => "ShapeMismatch",
        Error::InsufficientCumulants { .. } => "InsufficientCumulants",
        Error::InsufficientCoefficients(_) => "InsufficientCoefficients",
        Error::NonFiniteIterate { .. } => "NonFiniteIterate",
        Error::DegenerateNoise(_) => "DegenerateNoise",
        Error::NoConvergence { .. } => "NoConvergence",
        Error::QuadratureFailure(_) => "QuadratureFailure",
        Error::InvalidArgument(_) => "InvalidArgument",
    }
}

/// Artifacts produced by a command, with the failure (if any) that ended it.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<Failure>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Outcome { artifacts, failure: None }
    }

    fn failed(failure: Failure) -> Self {
        Outcome { artifacts: vec![], failure: Some(failure) }
    }

    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(EXIT_OK, Failure::exit_code)
    }
}

fn is_rect(cfg: &ExperimentConfig) -> bool {
    cfg.kind == InstanceKind::Rectangular
}

fn parse_moments(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Failure::Config(format!("not a number: {s:?}"))))
        .collect()
}

fn given_moments(cfg: &ExperimentConfig) -> Result<Option<Vec<f64>>, Failure> {
    let m = match (&cfg.moments, &cfg.moments_file) {
        (Some(m), None) => m.clone(),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_moments(&text)?
        }
        (None, None) => return Ok(None),
        (Some(_), Some(_)) => return Err(Failure::Config("give moments or moments_file, not both".into())),
    };
    if m.is_empty() {
        return Err(Failure::Config("moment list is empty".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Failure::Config("moments must be finite".into()));
    }
    Ok(Some(m))
}

/// Moments and free cumulants. Rectangular rows are indexed by even orders `2, 4, ..`.
pub fn cmd_cumulants(cfg: &ExperimentConfig, format: Format) -> Outcome {
    run(|| {
        let table = match (given_moments(cfg)?, is_rect(cfg)) {
            (Some(m), false) => CumulantTable::square_from_moments(&m),
            (Some(m), true) => CumulantTable::rect_from_moments(&m, cfg.aspect()?),
            (None, false) => cfg.require_law()?.cumulants(cfg.order),
            (None, true) => cfg.require_law()?.rect_cumulants(cfg.aspect()?, (cfg.order / 2).max(1)),
        };
        let step = if is_rect(cfg) { 2 } else { 1 };
        let mut out = Table::new(&["k", "moment", "cumulant"]);
        for (i, (m, c)) in table.moments.iter().zip(&table.cumulants).enumerate() {
            out.push(vec![Cell::Int((step * (i + 1)) as u64), Cell::Num(*m), Cell::Num(*c)]);
        }
        Ok(vec![Artifact::table("cumulants", &out, format)])
    })
}

fn run(f: impl FnOnce() -> Result<Vec<Artifact>, Failure>) -> Outcome {
    match f() {
        Ok(a) => Outcome::ok(a),
        Err(e) => Outcome::failed(e),
    }
}

/// Limit cumulants of the configured law with `k` entries.
fn limit_cumulants(cfg: &ExperimentConfig, law: &SpectralLaw, k: usize) -> Result<CumulantTable, Failure> {
    Ok(if is_rect(cfg) { law.rect_cumulants(cfg.aspect()?, k) } else { law.cumulants(k) })
}

pub fn state_evolution(cfg: &ExperimentConfig) -> Result<SeTrajectory, Failure> {
    let (alpha, steps, law) = (cfg.require_alpha()?, cfg.require_steps()?, cfg.require_law()?);
    let cum = limit_cumulants(cfg, law, 2 * steps)?;
    Ok(if is_rect(cfg) {
        se_pca_rect(&cfg.prior, cfg.prior_v(), &cum, cfg.aspect()?, alpha, cfg.epsilon, steps)?
    } else {
        se_pca_symmetric(&cfg.prior, &cum, alpha, cfg.epsilon, steps)?
    })
}

fn se_table(se: &SeTrajectory) -> Table {
    let rect = se.omega.is_some();
    let mut cols = vec!["t", "mu", "sigma_tt", "overlap_pred"];
    if rect {
        cols.extend(["nu", "omega_tt", "overlap_v_pred"]);
    }
    let mut out = Table::new(&cols);
    for t in 1..=se.steps {
        let mut row = vec![
            Cell::Int(t as u64),
            Cell::Num(se.mu[t - 1]),
            Cell::Num(se.sigma[(t - 1, t - 1)]),
            Cell::Num(se.overlap_u[t]),
        ];
        if let Some(om) = &se.omega {
            row.extend([Cell::Num(se.nu[t - 1]), Cell::Num(om[(t - 1, t - 1)]), Cell::Num(se.overlap_v[t - 1])]);
        }
        out.push(row);
    }
    out
}

/// Fixed point with the spectral baselines taken from the law.
pub fn fixed_point(cfg: &ExperimentConfig) -> Result<FixedPoint, Failure> {
    let (alpha, law) = (cfg.require_alpha()?, cfg.require_law()?);
    let cum = limit_cumulants(cfg, law, cfg.series_order)?;
    let mut fp = if is_rect(cfg) {
        fixed_point_rect_with(&cfg.prior, cfg.prior_v(), &cum, cfg.aspect()?, alpha, &cfg.picard)?
    } else {
        fixed_point_symmetric_with(&cfg.prior, &cum, alpha, &cfg.picard)?
    };
    if is_rect(cfg) {
        let b = pca_baseline_rect(law, cfg.aspect()?, alpha).ok();
        fp.delta_pca = b.map(|p| p.0);
        fp.gamma_pca = b.map(|p| p.1);
    } else {
        fp.delta_pca = pca_baseline_symmetric(law, alpha).ok();
    }
    Ok(fp)
}

fn fixed_point_json(fp: &FixedPoint) -> Value {
    json!({
        "delta_star": fp.delta_star,
        "sigma_star": fp.sigma_star,
        "gamma_star": fp.gamma_star,
        "omega_star": fp.omega_star,
        "x_star": fp.x_star,
        "delta_pca": fp.delta_pca,
        "gamma_pca": fp.gamma_pca,
        "converged": fp.converged,
        "residual": fp.residual,
    })
}

fn record_artifact(stem: &str, value: &Value, format: Format) -> Artifact {
    match format {
        Format::Json => Artifact::json(stem, value),
        Format::Csv => Artifact::table(stem, &Table::from_record(value), format),
    }
}

pub fn cmd_se(cfg: &ExperimentConfig, format: Format) -> Outcome {
    let se = match state_evolution(cfg) {
        Ok(se) => se,
        Err(f) => return Outcome::failed(f),
    };
    let main = match format {
        Format::Csv => Artifact::table("se", &se_table(&se), format),
        Format::Json => Artifact::json("se", &se.to_json()),
    };
    match fixed_point(cfg) {
        Ok(fp) => Outcome::ok(vec![main, Artifact::json("fixed_point", &fixed_point_json(&fp))]),
        Err(f) => Outcome { artifacts: vec![main], failure: Some(f) },
    }
}

pub fn cmd_fixed_point(cfg: &ExperimentConfig, format: Format) -> Outcome {
    run(|| Ok(vec![record_artifact("fixed_point", &fixed_point_json(&fixed_point(cfg)?), format)]))
}

/// Baselines from the law (Cauchy or D-transform) and from the cumulant series.
pub fn baseline(cfg: &ExperimentConfig) -> Result<Value, Failure> {
    let (alpha, law) = (cfg.require_alpha()?, cfg.require_law()?);
    let cum = limit_cumulants(cfg, law, cfg.series_order)?;
    let series_ok = |r: crate::Result<f64>| r.ok();
    Ok(if is_rect(cfg) {
        let (d, g) = pca_baseline_rect(law, cfg.aspect()?, alpha)?;
        let s = pca_baseline_rect_series(&cum, alpha).ok();
        json!({
            "delta_pca": d,
            "gamma_pca": g,
            "delta_pca_series": s.map(|p| p.0),
            "gamma_pca_series": s.map(|p| p.1),
        })
    } else {
        let d = pca_baseline_symmetric(law, alpha)?;
        json!({
            "delta_pca": d,
            "gamma_pca": null,
            "delta_pca_series": series_ok(pca_baseline_symmetric_series(&cum, alpha)),
            "gamma_pca_series": null,
        })
    })
}

pub fn cmd_baseline(cfg: &ExperimentConfig, format: Format) -> Outcome {
    run(|| Ok(vec![record_artifact("baseline", &baseline(cfg)?, format)]))
}

/// Per-step overlaps of one replicate: `(overlap_u, norm_u, overlap_v, norm_v)` of `u_{t+1}`, `v_t`.
pub type StepOverlaps = (f64, f64, Option<f64>, Option<f64>);

fn step_overlaps(tr: &AmpTrajectory) -> Vec<StepOverlaps> {
    let rec = &tr.overlaps;
    (1..rec.len())
        .map(|t| (rec[t].overlap_u.unwrap_or(f64::NAN), rec[t].norm_u, rec[t - 1].overlap_v, rec[t - 1].norm_v))
        .collect()
}

/// Runs replicate `index` with seed `replicate_seed(seed, index)`.
pub fn simulate_replicate(
    cfg: &ExperimentConfig,
    se: &SeTrajectory,
    limit: &CumulantTable,
    seed: u64,
    index: usize,
) -> crate::Result<Vec<StepOverlaps>> {
    let law = cfg.law.clone().ok_or_else(|| Error::InvalidArgument("law is required".into()))?;
    let spectrum = SpectrumInput::Law { law, mode: cfg.sampling };
    let alpha = cfg.alpha.unwrap_or(0.0);
    let rs = replicate_seed(seed, index as u64);
    let need = se.steps;
    let tr = if is_rect(cfg) {
        let (m, n) = match (cfg.m, cfg.n) {
            (Some(m), Some(n)) => (m, n),
            _ => return Err(Error::InvalidArgument("m and n are required".into())),
        };
        let inst = build_rect_instance(&spectrum, m, n, alpha, &cfg.prior, cfg.prior_v(), cfg.epsilon, rs, cfg.rotation)?;
        let cum = match cfg.cumulant_source {
            CumulantSource::Empirical => inst.empirical_cumulants(need),
            CumulantSource::Limit => limit.clone(),
        };
        bayes_amp_rect(&inst, &cfg.prior, cfg.prior_v(), se, &cum, cfg.cumulant_source)?
    } else {
        let n = cfg.n.ok_or_else(|| Error::InvalidArgument("n is required".into()))?;
        let inst = build_symmetric_instance(&spectrum, n, alpha, &cfg.prior, cfg.epsilon, rs, cfg.rotation)?;
        let cum = match cfg.cumulant_source {
            CumulantSource::Empirical => inst.empirical_cumulants(need),
            CumulantSource::Limit => limit.clone(),
        };
        bayes_amp_symmetric(&inst, &cfg.prior, se, &cum, cfg.cumulant_source)?
    };
    Ok(step_overlaps(&tr))
}

/// Replicate results in index order.
pub struct Simulation {
    pub steps: usize,
    pub rect: bool,
    pub results: Vec<crate::Result<Vec<StepOverlaps>>>,
}

fn mean_sd(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = xs.len();
    if n == 0 {
        return (None, None);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (Some(mean), Some(var.sqrt()))
}

/// Per-step mean and standard deviation of the finished replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSummary {
    pub t: usize,
    pub mean_u: Option<f64>,
    pub sd_u: Option<f64>,
    pub mean_v: Option<f64>,
    pub sd_v: Option<f64>,
}

impl Simulation {
    pub fn completed(&self) -> usize {
        self.results.iter().filter(|r| r.is_ok()).count()
    }

    pub fn summary(&self) -> Vec<StepSummary> {
        let done: Vec<&Vec<StepOverlaps>> = self.results.iter().filter_map(|r| r.as_ref().ok()).collect();
        (1..=self.steps)
            .map(|t| {
                let us: Vec<f64> = done.iter().map(|r| r[t - 1].0).collect();
                let vs: Vec<f64> = done.iter().filter_map(|r| r[t - 1].2).collect();
                let (mean_u, sd_u) = mean_sd(&us);
                let (mean_v, sd_v) = if self.rect { mean_sd(&vs) } else { (None, None) };
                StepSummary { t, mean_u, sd_u, mean_v, sd_v }
            })
            .collect()
    }

    fn table(&self) -> Table {
        let mut cols = vec!["replicate", "t", "overlap_u", "norm_u"];
        if self.rect {
            cols.extend(["overlap_v", "norm_v"]);
        }
        let mut out = Table::new(&cols);
        for (r, res) in self.results.iter().enumerate() {
            let Ok(rows) = res else { continue };
            for (i, (ou, nu, ov, nv)) in rows.iter().enumerate() {
                let mut row = vec![Cell::Int(r as u64), Cell::Int(i as u64 + 1), Cell::Num(*ou), Cell::Num(*nu)];
                if self.rect {
                    row.extend([Cell::opt(*ov), Cell::opt(*nv)]);
                }
                out.push(row);
            }
        }
        out
    }

    fn summary_json(&self) -> Value {
        let failures: Vec<Value> = self
            .results
            .iter()
            .enumerate()
            .filter_map(|(r, res)| res.as_ref().err().map(|e| json!({ "replicate": r, "error": error_name(e), "message": e.to_string() })))
            .collect();
        let steps: Vec<Value> = self
            .summary()
            .iter()
            .map(|s| json!({ "t": s.t, "mean_u": s.mean_u, "sd_u": s.sd_u, "mean_v": s.mean_v, "sd_v": s.sd_v }))
            .collect();
        json!({
            "replicates": self.results.len(),
            "completed": self.completed(),
            "failures": failures,
            "steps": steps,
        })
    }

    fn failure(&self) -> Option<Failure> {
        let (completed, total) = (self.completed(), self.results.len());
        let short = (completed as f64) + 1e-9 < MIN_COMPLETED_FRACTION * total as f64;
        short.then_some(Failure::Simulation { completed, total })
    }
}

/// State evolution followed by all replicates (in parallel, deterministic in the seed).
pub fn simulate(cfg: &ExperimentConfig) -> Result<(SeTrajectory, Simulation), Failure> {
    cfg.require_law()?;
    cfg.require_alpha()?;
    if is_rect(cfg) {
        cfg.require_m()?;
    }
    cfg.require_n()?;
    let se = state_evolution(cfg)?;
    let limit = limit_cumulants(cfg, cfg.require_law()?, se.steps)?;
    let results = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| simulate_replicate(cfg, &se, &limit, cfg.seed, r))
        .collect();
    let sim = Simulation { steps: se.steps, rect: is_rect(cfg), results };
    Ok((se, sim))
}

pub fn cmd_simulate(cfg: &ExperimentConfig, format: Format) -> Outcome {
    match simulate(cfg) {
        Ok((_, sim)) => Outcome {
            artifacts: vec![Artifact::table("simulate", &sim.table(), format), Artifact::json("summary", &sim.summary_json())],
            failure: sim.failure(),
        },
        Err(f) => Outcome::failed(f),
    }
}

/// Rows `(t, side, se_prediction, empirical_mean, empirical_sd, abs_gap)`.
pub fn compare_table(se: &SeTrajectory, sim: &Simulation) -> Table {
    let mut out = Table::new(&["t", "side", "se_prediction", "empirical_mean", "empirical_sd", "abs_gap"]);
    for s in sim.summary() {
        let mut sides = vec![("u", se.overlap_u[s.t], s.mean_u, s.sd_u)];
        if sim.rect {
            sides.push(("v", se.overlap_v[s.t - 1], s.mean_v, s.sd_v));
        }
        for (side, pred, mean, sd) in sides {
            out.push(vec![
                Cell::Int(s.t as u64),
                Cell::Text(side.into()),
                Cell::Num(pred),
                Cell::opt(mean),
                Cell::opt(sd),
                Cell::opt(mean.map(|m| (m - pred).abs())),
            ]);
        }
    }
    out
}

pub fn cmd_compare(cfg: &ExperimentConfig, format: Format) -> Outcome {
    match simulate(cfg) {
        Ok((se, sim)) => Outcome {
            artifacts: vec![
                Artifact::table("compare", &compare_table(&se, &sim), format),
                Artifact::json("summary", &sim.summary_json()),
            ],
            failure: sim.failure(),
        },
        Err(f) => Outcome::failed(f),
    }
}

pub fn execute(command: Command, cfg: &ExperimentConfig, format: Format) -> Outcome {
    match command {
        Command::Cumulants => cmd_cumulants(cfg, format),
        Command::Se => cmd_se(cfg, format),
        Command::FixedPoint => cmd_fixed_point(cfg, format),
        Command::Baseline => cmd_baseline(cfg, format),
        Command::Simulate => cmd_simulate(cfg, format),
        Command::Compare => cmd_compare(cfg, format),
    }
}

fn write_out(dir: &PathBuf, artifacts: &[Artifact]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.body)?;
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let report = |f: &Failure| eprintln!("{}", pretty(&f.diagnostic()).trim_end());
    let Some(path) = &cli.config else {
        report(&Failure::Config("--config is required".into()));
        return EXIT_CONFIG;
    };
    let mut cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            report(&e.into());
            return EXIT_CONFIG;
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = Some(o.clone());
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            report(&Failure::Config("--threads must be positive".into()));
            return EXIT_CONFIG;
        }
        // Fails only if a global pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let outcome = execute(cli.command, &cfg, cli.format);
    let mut artifacts = outcome.artifacts.clone();
    if let Some(f) = &outcome.failure {
        report(f);
        artifacts.push(Artifact::json("error", &f.diagnostic()));
    }
    match &cfg.out_dir {
        Some(dir) => {
            if let Err(e) = write_out(dir, &artifacts) {
                eprintln!("cannot write {}: {e}", dir.display());
                return EXIT_CONFIG;
            }
        }
        None => {
            if let Some(a) = outcome.artifacts.first() {
                print!("{}", a.body);
            }
        }
    }
    outcome.exit_code()
}
