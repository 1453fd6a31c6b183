//! Post-processing of flow traces: dissipation, energy-gap decay, the
//! Łojasiewicz exponent and compactness.
//!
//! `E∞` is not known in advance; callers pass a proxy, normally the final
//! sampled energy of a converged run. Gaps are floored at [`GAP_FLOOR`] so
//! logarithms stay finite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::curve::BoundingBox;
use crate::flow::{FlowTrace, TraceSample};

pub const GAP_FLOOR: f64 = 1e-12;
/// Gaps below this are treated as numerical noise by the exponent fit.
pub const FIT_GAP_MIN: f64 = 1e-10;
/// Leading fraction of samples dropped as the initial transient.
pub const TRANSIENT: f64 = 0.2;
pub const MIN_FIT_SAMPLES: usize = 10;

/// Gap `E(t) − E∞`, floored.
pub fn energy_gaps(trace: &FlowTrace, e_inf: f64) -> Vec<(f64, f64)> {
    trace.samples.iter().map(|s| (s.t, (s.energy - e_inf).max(GAP_FLOOR))).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DissipationReport {
    /// `∫ u dt` at step resolution, from the run's running integral.
    pub u_integral: f64,
    /// Trapezoidal `∫ u dt` over the samples only. Misses transients that
    /// decay between samples.
    pub u_integral_sampled: f64,
    /// `E(γ₀) − E∞`.
    pub energy_drop: f64,
    /// `u_integral ≤ energy_drop + 5%`.
    pub within_bound: bool,
    pub gap_non_increasing: bool,
}

pub fn dissipation_report(trace: &FlowTrace, e_inf: f64) -> Result<DissipationReport> {
    let s = &trace.samples;
    let first = s.first().ok_or(Error::EmptyTrace)?;
    let u_integral_sampled = s.windows(2).map(|w| 0.5 * (w[0].dissipation + w[1].dissipation) * (w[1].t - w[0].t)).sum::<f64>();
    let u_integral = s.last().map_or(0.0, |l| l.dissipated - first.dissipated);
    let energy_drop = first.energy - e_inf;
    let gaps = energy_gaps(trace, e_inf);
    Ok(DissipationReport {
        u_integral,
        u_integral_sampled,
        energy_drop,
        within_bound: u_integral <= energy_drop + 0.05 * energy_drop.abs().max(GAP_FLOOR),
        gap_non_increasing: gaps.windows(2).all(|w| w[1].1 <= w[0].1),
    })
}

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

pub fn fit_line(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: n });
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 1e-24 * (1.0 + mx * mx) * nf) {
        return Err(Error::InsufficientSamples { needed: n, found: 0 });
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LineFit { slope, intercept: my - slope * mx, r2, samples: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LojasiewiczFit {
    /// `θ̂ = 1 − 1/m`, clamped to `(0, 1/2]`.
    pub theta_hat: f64,
    /// Unclamped `1 − 1/m`.
    pub theta_raw: f64,
    /// `C` in `gap^(1−θ) ≤ C·‖δE‖`, from the regression intercept.
    pub c_hat: f64,
    pub fit_r2: f64,
    /// Slope `m` of `log gap` against `log dual_norm`.
    pub slope: f64,
    pub samples: usize,
}

fn fit_window(trace: &FlowTrace, e_inf: f64) -> Vec<(usize, f64)> {
    let skip = (TRANSIENT * trace.samples.len() as f64).ceil() as usize;
    trace
        .samples
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(i, s)| (i, s.energy - e_inf))
        .filter(|&(_, g)| g > FIT_GAP_MIN)
        .collect()
}

/// Log-log regression of the gap against the dual norm of the gradient
/// over the window past the transient and above the noise floor.
pub fn fit_lojasiewicz(trace: &FlowTrace, e_inf: f64) -> Result<LojasiewiczFit> {
    let window = fit_window(trace, e_inf);
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, found: window.len() });
    }
    let points: Vec<(f64, f64)> = window
        .iter()
        .filter(|(i, _)| trace.samples[*i].dual_norm > 0.0)
        .map(|&(i, g)| (trace.samples[i].dual_norm.ln(), g.ln()))
        .collect();
    if points.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, found: points.len() });
    }
    let fit = fit_line(&points)?;
    let m = fit.slope;
    let theta_raw = 1.0 - 1.0 / m;
    // log gap = m log dual + b, so gap^(1/m) = e^(b/m) dual.
    Ok(LojasiewiczFit {
        theta_hat: theta_raw.clamp(f64::MIN_POSITIVE, 0.5),
        theta_raw,
        c_hat: (fit.intercept / m).exp(),
        fit_r2: fit.r2,
        slope: m,
        samples: fit.samples,
    })
}

/// Slope of `log gap` against `t` over the tail half of the samples with
/// gap above [`GAP_FLOOR`]. Negative for a decaying gap.
pub fn decay_rate_fit(trace: &FlowTrace, e_inf: f64) -> Result<LineFit> {
    let live: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|s| s.energy - e_inf > GAP_FLOOR)
        .map(|s| (s.t, (s.energy - e_inf).ln()))
        .collect();
    if live.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES, found: live.len() });
    }
    let tail = &live[live.len() / 2..];
    if tail.len() < MIN_FIT_SAMPLES / 2 {
        return Err(Error::InsufficientSamples { needed: MIN_FIT_SAMPLES / 2, found: tail.len() });
    }
    fit_line(tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub max_bbox_diam: f64,
    pub initial_diam: f64,
    pub initial_length: f64,
    /// `(ℓ_lo, ℓ_hi)` over the samples.
    pub length_range: (f64, f64),
    /// `max_bbox_diam ≤ 2·initial_diam + 2·initial_length` and `ℓ_lo > 0`.
    pub within_envelope: bool,
}

pub fn compactness_report(trace: &FlowTrace) -> Result<CompactnessReport> {
    let first = trace.samples.first().ok_or(Error::EmptyTrace)?;
    let max_bbox_diam = trace.samples.iter().map(|s| s.bbox.diameter()).fold(f64::NEG_INFINITY, f64::max);
    let lo = trace.samples.iter().map(|s| s.length).fold(f64::INFINITY, f64::min);
    let hi = trace.samples.iter().map(|s| s.length).fold(f64::NEG_INFINITY, f64::max);
    let initial_diam = first.bbox.diameter();
    Ok(CompactnessReport {
        max_bbox_diam,
        initial_diam,
        initial_length: first.length,
        length_range: (lo, hi),
        within_envelope: lo > 0.0 && max_bbox_diam <= 2.0 * initial_diam + 2.0 * first.length,
    })
}

/// Whether `H(t) = gap^θ` is non-increasing up to `tol` per sample.
pub fn h_non_increasing(trace: &FlowTrace, e_inf: f64, theta: f64, tol: f64) -> bool {
    let h: Vec<f64> = energy_gaps(trace, e_inf).iter().map(|(_, g)| g.powf(theta)).collect();
    h.windows(2).all(|w| w[1] <= w[0] + tol)
}

/// Fraction of consecutive sample pairs satisfying the discrete
/// dissipation identity `|ΔE/Δt + u| ≤ rel·(u + 1)`, with `u` averaged
/// over the pair.
pub fn dissipation_identity_fraction(trace: &FlowTrace, rel: f64) -> Option<f64> {
    let s = &trace.samples;
    if s.len() < 2 {
        return None;
    }
    let ok = s
        .windows(2)
        .filter(|w| {
            let dt = w[1].t - w[0].t;
            let u = 0.5 * (w[0].dissipation + w[1].dissipation);
            ((w[1].energy - w[0].energy) / dt + u).abs() <= rel * (u + 1.0)
        })
        .count();
    Some(ok as f64 / (s.len() - 1) as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub e_inf: f64,
    pub energy_gap_series: Vec<(f64, f64)>,
    pub theta_hat: Option<f64>,
    pub theta_raw: Option<f64>,
    pub c_hat: Option<f64>,
    pub fit_r2: Option<f64>,
    pub decay_rate: Option<f64>,
    pub decay_r2: Option<f64>,
    pub u_integral: f64,
    pub energy_drop: f64,
    pub gap_non_increasing: bool,
    pub max_bbox_diam: f64,
    pub length_range: (f64, f64),
    pub warnings: Vec<String>,
}

/// All diagnostics with `E∞` taken as the final sampled energy. Fits that
/// lack samples are reported as `None` with a warning.
pub fn convergence_report(trace: &FlowTrace) -> Result<ConvergenceReport> {
    let e_inf = trace.samples.last().ok_or(Error::EmptyTrace)?.energy;
    let d = dissipation_report(trace, e_inf)?;
    let c = compactness_report(trace)?;
    let mut warnings = Vec::new();
    let loj = fit_lojasiewicz(trace, e_inf).map_err(|e| warnings.push(format!("exponent fit: {e}"))).ok();
    let decay = decay_rate_fit(trace, e_inf).map_err(|e| warnings.push(format!("decay fit: {e}"))).ok();
    if let Some(f) = &loj {
        if f.theta_hat < 0.45 && f.fit_r2 >= 0.99 {
            warnings.push(format!("theta_hat = {:.4} is below the nondegenerate expectation 0.45", f.theta_hat));
        }
    }
    if !d.within_bound {
        warnings.push(format!("dissipation integral {:e} exceeds the energy drop {:e}", d.u_integral, d.energy_drop));
    }
    Ok(ConvergenceReport {
        e_inf,
        energy_gap_series: energy_gaps(trace, e_inf),
        theta_hat: loj.map(|f| f.theta_hat),
        theta_raw: loj.map(|f| f.theta_raw),
        c_hat: loj.map(|f| f.c_hat),
        fit_r2: loj.map(|f| f.fit_r2),
        decay_rate: decay.map(|f| f.slope),
        decay_r2: decay.map(|f| f.r2),
        u_integral: d.u_integral,
        energy_drop: d.energy_drop,
        gap_non_increasing: d.gap_non_increasing,
        max_bbox_diam: c.max_bbox_diam,
        length_range: c.length_range,
        warnings,
    })
}

/// A trace with prescribed `(gap, dual_norm)` at `t = 0, 0.1, 0.2, …` over
/// `E∞ = 1`, with `u = dual²` and a trapezoidal running integral. Used to
/// check the fits against known exponents.
pub fn synthetic_trace(n: usize, f: impl Fn(f64) -> (f64, f64)) -> FlowTrace {
    let mut dissipated = 0.0;
    let mut prev_u = None;
    let samples = (0..n)
        .map(|i| {
            let t = 0.1 * i as f64;
            let (gap, dual) = f(t);
            let u = dual * dual;
            if let Some(p) = prev_u {
                dissipated += 0.05 * (p + u);
            }
            prev_u = Some(u);
            TraceSample {
                t,
                energy: 1.0 + gap,
                dissipation: u,
                length: 1.0,
                bbox: BoundingBox { xmin: 0.0, xmax: 1.0, ymin: 0.0, ymax: 0.5 },
                tangency: 0.5,
                dual_norm: dual,
                dissipated,
            }
        })
        .collect();
    FlowTrace { samples }
}
