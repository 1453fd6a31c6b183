mod config;
mod output;
mod verify;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use elastic_flow::curve::aligned_hausdorff;
use elastic_flow::diagnostics::convergence_report;
use elastic_flow::elastica::{find_all, reference_arc, SeedGrid};
use elastic_flow::flow::{run_observed, StopReason};
use rayon::prelude::*;
use serde::Serialize;

use config::{ConfigFile, ExperimentConfig, Overrides};
use output::{write_curve, write_json, write_report_csv, write_trace};
use verify::Suite;

/// Exit codes. Stop reasons other than convergence each get their own.
mod code {
    pub const OK: u8 = 0;
    /// Verification failed or no elastica was found.
    pub const FAILED: u8 = 1;
    pub const MAX_TIME: u8 = 2;
    pub const LENGTH_COLLAPSE: u8 = 3;
    pub const BOUNDARY_TANGENCY: u8 = 4;
    pub const STEP_FAILURE: u8 = 5;
    pub const USAGE: u8 = 64;
    pub const CONFIG: u8 = 65;
    pub const IO: u8 = 74;
}

fn reason_code(reason: StopReason) -> u8 {
    match reason {
        StopReason::Converged => code::OK,
        StopReason::MaxTimeReached => code::MAX_TIME,
        StopReason::LengthCollapse => code::LENGTH_COLLAPSE,
        StopReason::BoundaryTangency => code::BOUNDARY_TANGENCY,
        StopReason::StepFailure => code::STEP_FAILURE,
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait Classify<T> {
    fn or_code(self, code: u8) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn or_code(self, code: u8) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

type Outcome = std::result::Result<u8, Failure>;

#[derive(Parser)]
#[command(name = "elastic-flow", version, about = "Length-penalized elastic flow with endpoints sliding on an axis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the perturbed initial arc.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow and write its trace, snapshots and diagnostics.
    Simulate(Common),
    /// Find critical points by shooting.
    Elastica {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Launch angles scanned.
        #[arg(long, default_value_t = 60)]
        phi_count: usize,
        /// Shortest length scanned, in units of 1/sqrt(mu).
        #[arg(long, default_value_t = 0.5)]
        length_min: f64,
        /// Longest length scanned, in units of 1/sqrt(mu).
        #[arg(long, default_value_t = 6.0)]
        length_max: f64,
    },
    /// Run invariant suites and print a pass/fail table.
    Verify {
        #[arg(long)]
        variations: bool,
        #[arg(long)]
        ibp: bool,
        #[arg(long)]
        dissipation: bool,
        #[arg(long)]
        scaling: bool,
        #[arg(long)]
        all: bool,
    },
    /// Run `simulate` for several values of mu.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated values of mu.
        #[arg(long, value_delimiter = ',', required = true)]
        mu_list: Vec<f64>,
        /// Run the values concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

fn load(common: &Common) -> std::result::Result<ConfigFile, Failure> {
    match &common.config {
        Some(p) if !p.exists() => Err(Failure { code: code::IO, error: anyhow::anyhow!("config file {} not found", p.display()) }),
        Some(p) => ConfigFile::load(p).or_code(code::CONFIG),
        None => Ok(ConfigFile::default()),
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a ExperimentConfig,
    stop_reason: StopReason,
    final_energy: f64,
    final_time: f64,
    steps: usize,
    last_error: Option<String>,
    wall_time: f64,
}

/// Runs one experiment into `cfg.output_dir`; returns the stop reason and
/// final energy.
fn simulate_into(file: &ConfigFile, over: Overrides) -> std::result::Result<(StopReason, f64, ExperimentConfig, elastic_flow::curve::DiscreteCurve), Failure> {
    let (cfg, curve) = ExperimentConfig::resolve(file, over).or_code(code::CONFIG)?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).or_code(code::IO)?;
    let mut write_error = None;
    let outcome = run_observed(&curve, &cfg.flow, |state| {
        if write_error.is_none() {
            if let Err(e) = write_curve(&dir.join(format!("snapshot_{}.csv", state.steps)), &state.curve) {
                write_error = Some(e);
            }
        }
    })
    .or_code(code::CONFIG)?;
    if let Some(e) = write_error {
        return Err(Failure { code: code::IO, error: e });
    }
    let io = |r: Result<()>| r.or_code(code::IO);
    io(write_trace(&dir.join("trace.csv"), &outcome.trace))?;
    let report = convergence_report(&outcome.trace).or_code(code::CONFIG)?;
    io(write_json(&dir.join("report.json"), &report))?;
    io(write_report_csv(&dir.join("report.csv"), &outcome.trace, &report, report.theta_hat.unwrap_or(0.5)))?;
    let final_energy = outcome.state.energy(cfg.mu);
    let meta = Metadata {
        config: &cfg,
        stop_reason: outcome.reason,
        final_energy,
        final_time: outcome.state.time,
        steps: outcome.state.steps,
        last_error: outcome.last_error.as_ref().map(ToString::to_string),
        wall_time: outcome.wall_time,
    };
    io(write_json(&dir.join("metadata.json"), &meta))?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok((outcome.reason, final_energy, cfg, outcome.state.curve))
}

fn simulate(common: &Common) -> Outcome {
    let file = load(common)?;
    let over = Overrides { mu: common.mu, out: common.out.as_deref(), seed: common.seed };
    let (reason, energy, cfg, _) = simulate_into(&file, over)?;
    println!("{reason:?} with final energy {energy:.12} in {}", cfg.output_dir.display());
    Ok(reason_code(reason))
}

#[derive(Serialize)]
struct SolutionRecord {
    a: f64,
    phi0: f64,
    #[serde(rename = "L")]
    length: f64,
    kind: elastic_flow::elastica::ElasticaKind,
    energy: f64,
    endpoint_gap: f64,
    ode_residual: f64,
    residuals: elastic_flow::elastica::BoundaryResiduals,
}

fn elastica(mu: f64, out: &Path, grid: SeedGrid) -> Outcome {
    let solutions = find_all(mu, &grid).or_code(code::CONFIG)?;
    std::fs::create_dir_all(out).or_code(code::IO)?;
    let records: Vec<SolutionRecord> = solutions
        .iter()
        .map(|s| SolutionRecord {
            a: s.params.a,
            phi0: s.params.phi0,
            length: s.params.length,
            kind: s.kind(),
            energy: s.energy,
            endpoint_gap: s.endpoint_gap,
            ode_residual: s.ode_residual,
            residuals: s.bc_residuals,
        })
        .collect();
    for (i, s) in solutions.iter().enumerate() {
        write_curve(&out.join(format!("elastica_{i}.csv")), &s.curve).or_code(code::IO)?;
    }
    write_json(&out.join("elastica.json"), &serde_json::json!({ "mu": mu, "solutions": records })).or_code(code::IO)?;
    println!("{} solution(s) at mu = {mu}", solutions.len());
    for (i, r) in records.iter().enumerate() {
        println!("  {i}: {:?} phi0 = {:.10} L = {:.10} E = {:.10}", r.kind, r.phi0, r.length, r.energy);
    }
    Ok(if solutions.is_empty() { code::FAILED } else { code::OK })
}

fn verify_cmd(suites: &[Suite]) -> Outcome {
    let mut all = true;
    println!("{:<12} {:<6} detail", "suite", "result");
    for &s in suites {
        let o = verify::run_suite(s);
        all &= o.passed;
        println!("{:<12} {:<6} {}", format!("{s:?}").to_lowercase(), if o.passed { "pass" } else { "FAIL" }, o.detail);
    }
    Ok(if all { code::OK } else { code::FAILED })
}

#[derive(Serialize)]
struct SweepEntry {
    mu: f64,
    output_dir: PathBuf,
    stop_reason: Option<StopReason>,
    exit_code: u8,
    final_energy: Option<f64>,
    /// Aligned Hausdorff distance of a converged curve to the shooting arc.
    distance_to_elastica: Option<f64>,
    error: Option<String>,
}

fn sweep(common: &Common, mu_list: &[f64], parallel: bool) -> Outcome {
    let file = load(common)?;
    let mut seen = BTreeSet::new();
    let mut mus = Vec::new();
    for &mu in mu_list {
        if seen.insert(mu.to_bits()) {
            mus.push(mu);
        } else {
            eprintln!("warning: duplicate mu = {mu} dropped");
        }
    }
    let root = common.out.clone().or_else(|| file.output_dir.clone()).unwrap_or_else(|| "out".into());
    let one = |&mu: &f64| -> SweepEntry {
        let dir = root.join(format!("mu_{mu}"));
        let over = Overrides { mu: Some(mu), out: Some(&dir), seed: common.seed };
        match simulate_into(&file, over) {
            Ok((reason, energy, _, curve)) => {
                let distance = (reason == StopReason::Converged)
                    .then(|| reference_arc(mu).ok().map(|arc| aligned_hausdorff(&curve, &arc.curve).0))
                    .flatten();
                SweepEntry { mu, output_dir: dir, stop_reason: Some(reason), exit_code: reason_code(reason), final_energy: Some(energy), distance_to_elastica: distance, error: None }
            }
            Err(f) => SweepEntry { mu, output_dir: dir, stop_reason: None, exit_code: f.code, final_energy: None, distance_to_elastica: None, error: Some(format!("{:#}", f.error)) },
        }
    };
    let entries: Vec<SweepEntry> = if parallel { mus.par_iter().map(one).collect() } else { mus.iter().map(one).collect() };
    // Critical energies scale like sqrt(mu): E = 2 mu L with L ∝ 1/sqrt(mu).
    let scaled: Vec<f64> = entries
        .iter()
        .filter(|e| e.stop_reason == Some(StopReason::Converged))
        .filter_map(|e| e.final_energy.map(|v| v / e.mu.sqrt()))
        .collect();
    let spread = scaled.iter().fold(0.0f64, |m, v| m.max((v - scaled[0]).abs() / scaled[0]));
    std::fs::create_dir_all(&root).or_code(code::IO)?;
    write_json(&root.join("sweep.json"), &serde_json::json!({ "runs": entries, "scaled_energy_spread": spread })).or_code(code::IO)?;
    for e in &entries {
        match &e.error {
            Some(err) => println!("mu = {}: error (exit {}): {err}", e.mu, e.exit_code),
            None => println!("mu = {}: {:?}, E = {:.12}", e.mu, e.stop_reason.unwrap(), e.final_energy.unwrap()),
        }
    }
    if scaled.len() > 1 {
        println!("E/sqrt(mu) spread across converged runs: {spread:.2e}");
        if spread > 1e-6 {
            eprintln!("warning: converged energies do not follow the sqrt(mu) scaling (spread {spread:.2e})");
        }
    }
    Ok(entries.iter().map(|e| e.exit_code).max().unwrap_or(code::OK))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Simulate(common) => simulate(&common),
        Command::Elastica { mu, out, phi_count, length_min, length_max } => {
            let grid = SeedGrid { phi_count, length_min, length_max, ..SeedGrid::default() };
            elastica(mu, &out, grid)
        }
        Command::Verify { variations, ibp, dissipation, scaling, all } => {
            let picked: Vec<Suite> = [
                (variations, Suite::Variations),
                (ibp, Suite::Ibp),
                (dissipation, Suite::Dissipation),
                (scaling, Suite::Scaling),
            ]
            .into_iter()
            .filter(|(on, _)| *on || all)
            .map(|(_, s)| s)
            .collect();
            if picked.is_empty() {
                return Err(Failure {
                    code: code::USAGE,
                    error: anyhow::anyhow!("select at least one suite: --variations, --ibp, --dissipation, --scaling or --all"),
                });
            }
            verify_cmd(&picked)
        }
        Command::Sweep { common, mu_list, parallel } => sweep(&common, &mu_list, parallel),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { code::OK });
        }
    };
    match dispatch(cli) {
        Ok(c) => ExitCode::from(c),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
