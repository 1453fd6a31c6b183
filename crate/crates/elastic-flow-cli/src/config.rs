//! Experiment configuration: a flat `key = value` file (TOML syntax, no
//! tables) plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use elastic_flow::curve::DiscreteCurve;
use elastic_flow::flow::FlowConfig;
use elastic_flow::generators::{arc_perturbed, pinched_loop};
use serde::{Deserialize, Serialize};

use crate::output::read_curve;

/// Keys accepted in a config file. Every key is optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub initial: Option<String>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub radius: Option<f64>,
    pub loop_radius: Option<f64>,
    pub path: Option<PathBuf>,
    pub mu: Option<f64>,
    pub n_nodes: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub u_tol: Option<f64>,
    pub rho_min: Option<f64>,
    pub len_min: Option<f64>,
    pub reparam_every: Option<usize>,
    pub snapshot_every: Option<usize>,
    pub admissibility_tol: Option<f64>,
    pub allow_inadmissible: Option<bool>,
    pub max_halvings: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`; relative curve paths are taken relative to its folder.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut file = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let (Some(p), Some(dir)) = (&file.path, path.parent()) {
            if p.is_relative() {
                file.path = Some(dir.join(p));
            }
        }
        Ok(file)
    }
}

/// Initial curve of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCurve {
    Segment,
    Semicircle { radius: f64 },
    ArcPerturbed { amplitude: f64, seed: u64 },
    PinchedLoop { loop_radius: f64 },
    File { path: PathBuf },
}

/// A fully resolved experiment, as recorded in the run metadata.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub initial: InitialCurve,
    pub mu: f64,
    pub output_dir: PathBuf,
    pub flow: FlowConfig,
}

/// Command-line values that override the file.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides<'a> {
    pub mu: Option<f64>,
    pub out: Option<&'a Path>,
    pub seed: Option<u64>,
}

pub const DEFAULT_NODES: usize = 200;

impl ExperimentConfig {
    /// Builds the initial curve and the flow settings. Unset flow keys take
    /// the defaults of [`FlowConfig::for_curve`].
    pub fn resolve(file: &ConfigFile, over: Overrides) -> Result<(Self, DiscreteCurve)> {
        let mu = over.mu.or(file.mu).unwrap_or(1.0);
        let n = file.n_nodes.unwrap_or(DEFAULT_NODES);
        let initial = match file.initial.as_deref().unwrap_or("arc_perturbed") {
            "segment" => InitialCurve::Segment,
            "semicircle" => InitialCurve::Semicircle { radius: file.radius.unwrap_or(1.0) },
            "arc_perturbed" => InitialCurve::ArcPerturbed {
                amplitude: file.amplitude.unwrap_or(1e-2),
                seed: over.seed.or(file.seed).unwrap_or(7),
            },
            "pinched_loop" => InitialCurve::PinchedLoop { loop_radius: file.loop_radius.unwrap_or(0.05) },
            "file" => match &file.path {
                Some(p) => InitialCurve::File { path: p.clone() },
                None => bail!("initial = \"file\" needs a path"),
            },
            other => bail!("unknown initial curve {other:?}; expected segment, semicircle, arc_perturbed, pinched_loop or file"),
        };
        let curve = match &initial {
            InitialCurve::Segment => DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], n)?,
            InitialCurve::Semicircle { radius } => DiscreteCurve::semicircle(*radius, n)?,
            InitialCurve::ArcPerturbed { amplitude, seed } => arc_perturbed(mu, n, *amplitude, *seed)?,
            InitialCurve::PinchedLoop { loop_radius } => pinched_loop(mu, n, *loop_radius)?,
            InitialCurve::File { path } => read_curve(path)?,
        };
        let mut flow = FlowConfig::for_curve(&curve, mu)?;
        if let Some(v) = file.n_nodes {
            flow.n_nodes = v;
        }
        macro_rules! set {
            ($($key:ident),*) => {$(
                if let Some(v) = file.$key {
                    flow.$key = v;
                }
            )*};
        }
        set!(dt, t_max, u_tol, rho_min, len_min, reparam_every, snapshot_every, admissibility_tol, allow_inadmissible, max_halvings);
        flow.validate()?;
        let output_dir = over.out.map(Path::to_path_buf).or_else(|| file.output_dir.clone()).unwrap_or_else(|| "out".into());
        Ok((ExperimentConfig { initial, mu, output_dir, flow }, curve))
    }
}
