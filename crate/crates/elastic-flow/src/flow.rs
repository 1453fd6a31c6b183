//! The elastic flow `(∂ₜγ)^⊥ = (−2∂ₛ²k − k³ + μk)ν` with Navier boundary
//! conditions, endpoints sliding on the x-axis.
//!
//! Each step is linearly implicit in increment form. With `δ = γⁿ⁺¹ − γⁿ`
//! and `c_i = 2Δt/|∂ₓγ_i|⁴` frozen at the current state, interior nodes
//! solve
//!
//! ```text
//! δ_i + c_i (∂ₓ⁴δ)_i = Δt V_i ν_i ,
//! ```
//!
//! so the stiff fourth-order part acts implicitly while the full normal
//! speed enters explicitly. Two rows at each end replace the interior
//! equation: `y = 0` and `∂ₓ²y = 0` for the `y` system; `∂ₓ²x = 0` and
//! the third-order condition for the `x` system. With `∂ₓ²γ = 0` the
//! third-order condition `2∂ₛk τ₂ + μτ₁ = 0` reads
//! `⟨ν, ∂ₓ³γ⟩ = −μτ₁|∂ₓγ|³ / (2τ₂)`, which couples the two components only
//! through `ν₂ ∂ₓ³y`. Solving for `y` first leaves a banded system for `x`.
//!
//! The velocity is purely normal; the parametrization is restored every
//! `reparam_every` steps by resampling to equal arclength.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::curve::{bounding_box, build_cache, resample_uniform, resample_with, BoundingBox, DiscreteCurve, GeometryCache};
use crate::error::{Error, Result};
use crate::numerics::banded::BandMatrix;
use crate::numerics::stencil;
use crate::variations::{energy_of, gradient_of, normal_velocity, third_order_residual};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub mu: f64,
    pub dt: f64,
    /// Number of segments `N`.
    pub n_nodes: usize,
    pub t_max: f64,
    /// Converged once the dissipation drops below this.
    pub u_tol: f64,
    /// Boundary tangency floor for `τ₂` at the ends.
    pub rho_min: f64,
    /// Length collapse threshold.
    pub len_min: f64,
    pub reparam_every: usize,
    pub snapshot_every: usize,
    /// Tolerance on the admissibility residuals of the initial curve.
    pub admissibility_tol: f64,
    /// Start even if the initial curve fails [`check_admissible`].
    pub allow_inadmissible: bool,
    /// Times `dt` may be halved below its nominal value when steps fail. It
    /// grows back by a factor 1.25 per accepted step.
    pub max_halvings: usize,
}

impl FlowConfig {
    /// Defaults for flowing `curve`: `dt = 0.1 (ℓ/N)²`, `len_min = 0.01 ℓ`.
    pub fn for_curve(curve: &DiscreteCurve, mu: f64) -> Result<Self> {
        let cache = build_cache(curve)?;
        let n = curve.segments();
        let h = cache.total_len / n as f64;
        Ok(FlowConfig {
            mu,
            dt: 0.1 * h * h,
            n_nodes: n,
            t_max: 50.0,
            u_tol: 1e-8,
            rho_min: 1e-3,
            len_min: 0.01 * cache.total_len,
            reparam_every: 10,
            snapshot_every: 100,
            admissibility_tol: 1e-6,
            allow_inadmissible: false,
            max_halvings: 10,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu", self.mu),
            ("dt", self.dt),
            ("u_tol", self.u_tol),
            ("len_min", self.len_min),
            ("admissibility_tol", self.admissibility_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_max must be nonnegative, got {}", self.t_max)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return Err(Error::InvalidParameter(format!("rho_min must lie in (0, 1), got {}", self.rho_min)));
        }
        if self.n_nodes < DiscreteCurve::MIN_SEGMENTS || self.reparam_every == 0 || self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("n_nodes, reparam_every and snapshot_every must be positive (n_nodes >= 16)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    /// 0 for the start of the curve, 1 for the end.
    pub end: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub residuals: Vec<NamedResidual>,
    pub passed: bool,
}

impl AdmissibilityReport {
    pub fn get(&self, name: &str, end: usize) -> Option<f64> {
        self.residuals.iter().find(|r| r.name == name && r.end == end).map(|r| r.value)
    }

    /// The largest failing residual, formatted for messages.
    pub fn worst(&self) -> String {
        self.residuals
            .iter()
            .filter(|r| if r.name == "nondegeneracy" { r.value < 0.0 } else { r.value.abs() > 0.0 })
            .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
            .map(|r| format!("{} at end {} = {:e}", r.name, r.end, r.value))
            .unwrap_or_default()
    }
}

/// Residuals of the initial-data conditions at both ends: attachment `y`,
/// second order `|∂ₓ²γ|`, third order `(−2∂ₛk ν + μτ)₁`, non-degeneracy
/// margin `τ₂ − ρ`, and fourth order `((−2∂ₛ²k − k³ + μk)ν)₂`.
///
/// Values are reported raw but compared with `tol` in units where `μ = 1`
/// (lengths times `√μ`, the third order over `μ`, the fourth over `μ^1.5`),
/// so a curve and its rescalings pass or fail together.
pub fn check_admissible(curve: &DiscreteCurve, mu: f64, rho: f64, tol: f64) -> Result<AdmissibilityReport> {
    let cache = build_cache(curve)?;
    let n = curve.segments();
    let mut residuals = Vec::new();
    let mut passed = true;
    for (end, i) in [(0, 0), (1, n)] {
        let d2 = cache.derivs.at(2, i);
        let root = mu.sqrt();
        let values = [
            ("attachment", curve.nodes()[i][1], root),
            ("second_order", d2[0].hypot(d2[1]), root),
            ("third_order", third_order_residual(&cache, mu, i), 1.0 / mu),
            ("nondegeneracy", cache.tau[i][1] - rho, 1.0),
            ("fourth_order", normal_velocity(&cache, mu, i) * cache.nu[i][1], 1.0 / (mu * root)),
        ];
        for (name, value, scale) in values {
            let ok = if name == "nondegeneracy" { value >= 0.0 } else { (value * scale).abs() <= tol };
            passed &= ok;
            residuals.push(NamedResidual { name: name.into(), end, value });
        }
    }
    Ok(AdmissibilityReport { residuals, passed })
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub curve: DiscreteCurve,
    pub time: f64,
    pub cache: GeometryCache,
    /// Steps taken so far.
    pub steps: usize,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve) -> Result<Self> {
        if !curve.is_constrained() {
            return Err(Error::InvalidParameter("flow needs a constrained curve".into()));
        }
        let cache = build_cache(&curve)?;
        Ok(FlowState { curve, time: 0.0, cache, steps: 0 })
    }

    /// `u = ∫ V² ds`.
    pub fn dissipation(&self, mu: f64) -> f64 {
        self.cache.integrate_ds(|i| normal_velocity(&self.cache, mu, i).powi(2))
    }

    pub fn energy(&self, mu: f64) -> f64 {
        energy_of(&self.cache, mu)
    }

    /// `min(τ₂(0), τ₂(1))`.
    pub fn tangency(&self) -> f64 {
        let n = self.cache.segments();
        self.cache.tau[0][1].min(self.cache.tau[n][1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Converged,
    MaxTimeReached,
    LengthCollapse,
    BoundaryTangency,
    StepFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub length: f64,
    pub bbox: BoundingBox,
    pub tangency: f64,
    pub dual_norm: f64,
    /// Running `∫ u dt` since the start, summed over every step with `u` at
    /// the end of the step. This matches the implicit step: a stiff
    /// transient that the step damps at once contributes its damped value.
    pub dissipated: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FlowTrace {
    pub samples: Vec<TraceSample>,
}

pub fn sample(state: &FlowState, mu: f64, dissipated: f64) -> TraceSample {
    TraceSample {
        t: state.time,
        energy: state.energy(mu),
        dissipation: state.dissipation(mu),
        length: state.cache.total_len,
        bbox: bounding_box(&state.curve),
        tangency: state.tangency(),
        dual_norm: gradient_of(&state.cache, mu).dual_norm,
        dissipated,
    }
}

#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: FlowState,
    pub trace: FlowTrace,
    pub reason: StopReason,
    /// The error behind the last rejected step, if any.
    pub last_error: Option<Error>,
    pub wall_time: f64,
}

const BAND: usize = 8;
/// Largest node displacement per step, relative to the shortest segment.
const MAX_MOVE: f64 = 0.25;
/// Relative energy rise tolerated in a single step. Boundary rows snap the
/// end conditions back after resampling, which can cost a little energy.
const ENERGY_SLACK: f64 = 1e-4;

/// One unit-spacing stencil row scattered into the matrix, times `scale`.
fn put_row(m: &mut BandMatrix, row: usize, node: usize, order: usize, n: usize, scale: f64) {
    let p = stencil::operator(order).row(n, node);
    let start = (node as isize + p.rel_start) as usize;
    for j in 0..p.width() {
        m.add(row, start + j, scale * p.weight(j));
    }
}

fn interior_rows(m: &mut BandMatrix, cache: &GeometryCache, dt: f64, n: usize) {
    let nf = n as f64;
    for i in 2..=n - 2 {
        let s = cache.speed[i];
        let c = 2.0 * dt / (s * s * s * s) * nf.powi(4);
        m.add(i, i, 1.0);
        put_row(m, i, i, 4, n, c);
    }
}

/// Advances by `dt` (ignoring `config.dt`), resampling on schedule.
pub fn step_with_dt(state: &FlowState, config: &FlowConfig, dt: f64) -> Result<FlowState> {
    let cache = &state.cache;
    let nodes = state.curve.nodes();
    let n = state.curve.segments();
    let nf = n as f64;
    let mu = config.mu;
    // Normal speed V, plus a tangential speed interpolating between the
    // slide each endpoint needs to stay on the axis. It vanishes at
    // stationary curves and keeps nodes near the ends from bunching up.
    let slide = |i: usize| -normal_velocity(cache, mu, i) * cache.nu[i][1] / cache.tau[i][1];
    let (t0, t1) = (slide(0), slide(n));
    let vel: Vec<[f64; 2]> = (0..=n)
        .map(|i| {
            let v = normal_velocity(cache, mu, i);
            let s = i as f64 / nf;
            let w = (1.0 - s) * t0 + s * t1;
            let (t, nu) = (cache.tau[i], cache.nu[i]);
            [v * nu[0] + w * t[0], v * nu[1] + w * t[1]]
        })
        .collect();
    let xs: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = nodes.iter().map(|p| p[1]).collect();
    let d2 = stencil::operator(2);
    let d3 = stencil::operator(3);

    let mut my = BandMatrix::zeros(n + 1, BAND, BAND);
    let mut by = vec![0.0; n + 1];
    interior_rows(&mut my, cache, dt, n);
    for i in 2..=n - 2 {
        by[i] = dt * vel[i][1];
    }
    for (row, node) in [(0, 0), (n, n)] {
        my.add(row, node, 1.0);
        by[row] = -ys[node];
    }
    for (row, node) in [(1, 0), (n - 1, n)] {
        put_row(&mut my, row, node, 2, n, 1.0);
        by[row] = -d2.apply_row(&ys, node);
    }
    my.solve(&mut by)?;
    let mut new_y: Vec<f64> = ys.iter().zip(&by).map(|(a, b)| a + b).collect();
    new_y[0] = 0.0;
    new_y[n] = 0.0;

    let mut mx = BandMatrix::zeros(n + 1, BAND, BAND);
    let mut bx = vec![0.0; n + 1];
    interior_rows(&mut mx, cache, dt, n);
    for i in 2..=n - 2 {
        bx[i] = dt * vel[i][0];
    }
    for (row, node) in [(0, 0), (n, n)] {
        put_row(&mut mx, row, node, 2, n, 1.0);
        bx[row] = -d2.apply_row(&xs, node);
    }
    for (row, node) in [(1, 0), (n - 1, n)] {
        let (t, nu, s) = (cache.tau[node], cache.nu[node], cache.speed[node]);
        if t[1].abs() < 1e-12 {
            return Err(Error::SingularMatrix(row));
        }
        // Third derivatives in unit spacing; the target is scaled to match.
        let target = -mu * t[0] * s * s * s / (2.0 * t[1]) / nf.powi(3);
        put_row(&mut mx, row, node, 3, n, nu[0]);
        bx[row] = target - nu[1] * d3.apply_row(&new_y, node) - nu[0] * d3.apply_row(&xs, node);
    }
    mx.solve(&mut bx)?;
    // An explicit step that moves nodes across their neighbours is unstable.
    let moved = bx.iter().zip(&by).map(|(a, b)| a.hypot(*b)).fold(0.0f64, f64::max);
    let limit = MAX_MOVE * cache.seg_len.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(moved <= limit) {
        return Err(Error::StepTooLarge { step: state.steps + 1, moved, limit });
    }
    let new_nodes = xs.iter().zip(&bx).zip(&new_y).map(|((x, d), y)| [x + d, *y]).collect();
    let mut curve = DiscreteCurve::new(new_nodes, true)?;
    let steps = state.steps + 1;
    if steps % config.reparam_every == 0 {
        let c = build_cache(&curve)?;
        curve = resample_with(&curve, &c.speed, n)?;
    }
    let cache = build_cache(&curve)?;
    if let Some(index) = cache.k.iter().zip(&cache.ds2_k).position(|(a, b)| !(a.is_finite() && b.is_finite())) {
        return Err(Error::NonFiniteNode { index });
    }
    // The flow decreases the energy; a step that raises it has gone unstable.
    let (e_old, e_new) = (energy_of(&state.cache, mu), energy_of(&cache, mu));
    if !(e_new <= e_old + ENERGY_SLACK * e_old.abs()) {
        return Err(Error::EnergyIncrease { step: steps, before: e_old, after: e_new });
    }
    Ok(FlowState { curve, time: state.time + dt, cache, steps })
}

/// One step of size `config.dt`.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    step_with_dt(state, config, config.dt)
}

/// Growth of the step size after a successful step, once it was cut.
const DT_GROWTH: f64 = 1.25;

/// Runs the flow until one of the stop conditions holds.
pub fn run(initial: &DiscreteCurve, config: &FlowConfig) -> Result<FlowOutcome> {
    run_observed(initial, config, |_| {})
}

/// As [`run`], calling `observer` with every sampled state.
pub fn run_observed(initial: &DiscreteCurve, config: &FlowConfig, mut observer: impl FnMut(&FlowState)) -> Result<FlowOutcome> {
    config.validate()?;
    let clock = Instant::now();
    let curve = if initial.segments() == config.n_nodes {
        initial.clone()
    } else {
        resample_uniform(initial, config.n_nodes)?
    };
    if !config.allow_inadmissible {
        let report = check_admissible(&curve, config.mu, config.rho_min, config.admissibility_tol)?;
        if !report.passed {
            return Err(Error::NotAdmissible(report.worst()));
        }
    }
    let mut state = FlowState::new(curve)?;
    let mut trace = FlowTrace::default();
    let mut u = state.dissipation(config.mu);
    let mut dissipated = 0.0;
    trace.samples.push(sample(&state, config.mu, dissipated));
    observer(&state);
    let mut last_sampled = 0;
    let mut dt = config.dt;
    let mut last_error = None;
    let dt_floor = config.dt * 0.5f64.powi(config.max_halvings as i32);
    let reason = loop {
        if u < config.u_tol {
            break StopReason::Converged;
        }
        if state.cache.total_len < config.len_min {
            break StopReason::LengthCollapse;
        }
        if state.tangency() < config.rho_min {
            break StopReason::BoundaryTangency;
        }
        let remaining = config.t_max - state.time;
        if remaining <= 1e-12 * config.t_max.max(config.dt) {
            break StopReason::MaxTimeReached;
        }
        match step_with_dt(&state, config, dt.min(remaining)) {
            Ok(next) => {
                let u_next = next.dissipation(config.mu);
                dissipated += u_next * (next.time - state.time);
                u = u_next;
                state = next;
                dt = (dt * DT_GROWTH).min(config.dt);
            }
            Err(e) => {
                last_error = Some(e);
                dt *= 0.5;
                if dt < dt_floor {
                    break StopReason::StepFailure;
                }
                continue;
            }
        }
        if state.steps % config.snapshot_every == 0 {
            trace.samples.push(sample(&state, config.mu, dissipated));
            observer(&state);
            last_sampled = state.steps;
        }
    };
    if last_sampled != state.steps {
        trace.samples.push(sample(&state, config.mu, dissipated));
        observer(&state);
    }
    Ok(FlowOutcome { state, trace, reason, last_error, wall_time: clock.elapsed().as_secs_f64() })
}
