//! Critical points of the penalized energy by shooting.
//!
//! A stationary curve has zero normal speed, `2∂ₛ²k + k³ − μk = 0`, and
//! satisfies the Navier conditions at both ends. Writing `θ` for the tangent
//! angle, the curve is integrated from the origin as
//!
//! ```text
//! k′ = w,  w′ = (μk − k³)/2,  θ′ = k,  γ′ = (cos θ, sin θ),
//! k(0) = 0,  w(0) = a,  θ(0) = φ₀,  γ(0) = 0,
//! ```
//!
//! with classical fixed-step RK4, and `(a, φ₀, L)` is found by Newton's
//! method on the terminal conditions. The third-order condition at the
//! start is linear in `a`, so by default `a = −μ cos φ₀ / (2 sin φ₀)` is
//! eliminated and Newton runs on `(φ₀, L)` with residuals `(k(L), y(L))`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{DiscreteCurve, Vec2};
use crate::error::{Error, Result};
use crate::numerics::stencil;

pub const DEFAULT_STEPS: usize = 2048;
const MIN_STEPS: usize = 64;
const BC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingParams {
    /// `∂ₛk(0)`.
    pub a: f64,
    /// Launch angle of `τ(0)`.
    pub phi0: f64,
    /// Total length.
    #[serde(rename = "L")]
    pub length: f64,
}

impl ShootingParams {
    /// Parameters with `a` fixed by the third-order condition at `s = 0`.
    pub fn eliminated(mu: f64, phi0: f64, length: f64) -> Self {
        ShootingParams { a: -mu * phi0.cos() / (2.0 * phi0.sin()), phi0, length }
    }

    fn distance(&self, o: &ShootingParams) -> f64 {
        (self.a - o.a).abs().max((self.phi0 - o.phi0).abs()).max((self.length - o.length).abs())
    }
}

/// State at `s = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub k: f64,
    pub ds_k: f64,
    pub theta: f64,
    pub point: Vec2,
}

type State = [f64; 5];

fn rhs(s: &State, mu: f64) -> State {
    let (k, w, th) = (s[0], s[1], s[2]);
    [w, 0.5 * (mu * k - k * k * k), k, th.cos(), th.sin()]
}

fn rk4_step(s: &State, h: f64, mu: f64) -> State {
    let add = |a: &State, b: &State, c: f64| -> State {
        let mut r = *a;
        for i in 0..5 {
            r[i] += c * b[i];
        }
        r
    };
    let k1 = rhs(s, mu);
    let k2 = rhs(&add(s, &k1, 0.5 * h), mu);
    let k3 = rhs(&add(s, &k2, 0.5 * h), mu);
    let k4 = rhs(&add(s, &k3, h), mu);
    let mut r = *s;
    for i in 0..5 {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    r
}

fn integrate_states(p: &ShootingParams, mu: f64, n_steps: usize) -> Result<Vec<State>> {
    if n_steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!("n_steps must be at least {MIN_STEPS}")));
    }
    if !(p.length > 0.0 && p.length.is_finite()) {
        return Err(Error::InvalidParameter(format!("length must be positive, got {}", p.length)));
    }
    let h = p.length / n_steps as f64;
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut s: State = [0.0, p.a, p.phi0, 0.0, 0.0];
    out.push(s);
    for step in 1..=n_steps {
        s = rk4_step(&s, h, mu);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        out.push(s);
    }
    Ok(out)
}

fn terminal(s: &State) -> Terminal {
    Terminal { k: s[0], ds_k: s[1], theta: s[2], point: [s[3], s[4]] }
}

/// Integrates the stationarity system; the returned curve is unconstrained
/// because `y(L)` is generally nonzero.
pub fn integrate_shooting(params: &ShootingParams, mu: f64, n_steps: usize) -> Result<(DiscreteCurve, Terminal)> {
    let states = integrate_states(params, mu, n_steps)?;
    let curve = DiscreteCurve::new(states.iter().map(|s| [s[3], s[4]]).collect(), false)?;
    Ok((curve, terminal(states.last().unwrap())))
}

/// `(−2∂ₛk ν + μτ)₁ = 2∂ₛk sin θ + μ cos θ`.
fn third_order(ds_k: f64, theta: f64, mu: f64) -> f64 {
    2.0 * ds_k * theta.sin() + mu * theta.cos()
}

fn residuals_with(params: &ShootingParams, mu: f64, n_steps: usize) -> Result<[f64; 4]> {
    let t = terminal(integrate_states(params, mu, n_steps)?.last().unwrap());
    Ok([t.k, t.point[1], third_order(params.a, params.phi0, mu), third_order(t.ds_k, t.theta, mu)])
}

/// `(k(L), y(L), third-order residual at 0, third-order residual at L)`.
pub fn residual_vector(params: &ShootingParams, mu: f64) -> Result<[f64; 4]> {
    residuals_with(params, mu, DEFAULT_STEPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElasticaKind {
    Arc,
    Loop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: ElasticaKind,
    /// `∫|k| ds`, the total variation of the tangent angle.
    pub turning: f64,
    pub self_intersecting: bool,
    /// Curvature vanishes identically (a straight line).
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryResiduals {
    pub k0: f64,
    pub k_end: f64,
    pub attachment_end: f64,
    pub third_order0: f64,
    pub third_order_end: f64,
}

impl BoundaryResiduals {
    pub fn max_abs(&self) -> f64 {
        [self.k0, self.k_end, self.attachment_end, self.third_order0, self.third_order_end]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElasticaSolution {
    pub mu: f64,
    pub params: ShootingParams,
    pub curve: DiscreteCurve,
    /// Curvature at the curve nodes.
    pub curvature: Vec<f64>,
    pub ode_residual: f64,
    pub bc_residuals: BoundaryResiduals,
    pub classification: Classification,
    pub energy: f64,
    /// `|x(L) − x(0)|`.
    pub endpoint_gap: f64,
    pub n_steps: usize,
}

impl ElasticaSolution {
    pub fn kind(&self) -> ElasticaKind {
        self.classification.kind
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub n_steps: usize,
    /// Newton on `(a, φ₀, L)` with residuals `(r₁, r₂, r₃)` instead of the
    /// eliminated two-unknown system.
    pub full_system: bool,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { n_steps: DEFAULT_STEPS, full_system: false, max_iterations: 100 }
    }
}

pub fn solve(mu: f64, guess: &ShootingParams) -> Result<ElasticaSolution> {
    solve_with(mu, guess, &SolveOptions::default())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lin_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c].abs() <= 1e-14 * scale || !a[p][c].is_finite() {
            return Err(Error::SingularJacobian);
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * b[k]).sum();
        b[r] = (b[r] - s) / a[r][r];
    }
    Ok(b)
}

pub fn solve_with(mu: f64, guess: &ShootingParams, opts: &SolveOptions) -> Result<ElasticaSolution> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::NonPositiveMu(mu));
    }
    let n = opts.n_steps;
    let to_params = |u: &[f64]| -> ShootingParams {
        if opts.full_system {
            ShootingParams { a: u[0], phi0: u[1], length: u[2] }
        } else {
            ShootingParams::eliminated(mu, u[0], u[1])
        }
    };
    let feasible = |u: &[f64]| {
        let p = to_params(u);
        p.phi0 > 0.0 && p.phi0 < PI && p.length > 1e-3 / mu.sqrt() && p.a.is_finite()
    };
    // Residuals in units where the elastica has length of order one, so
    // the tolerances do not depend on mu.
    let (k_unit, len_unit) = (mu.sqrt(), 1.0 / mu.sqrt());
    let eval = |u: &[f64]| -> Result<Vec<f64>> {
        let r = residuals_with(&to_params(u), mu, n)?;
        let scaled = [r[0] / k_unit, r[1] / len_unit, r[2] / mu];
        Ok(scaled[..if opts.full_system { 3 } else { 2 }].to_vec())
    };
    let mut u: Vec<f64> = if opts.full_system {
        vec![guess.a, guess.phi0, guess.length]
    } else {
        vec![guess.phi0, guess.length]
    };
    if !feasible(&u) {
        return Err(Error::InvalidParameter("initial guess outside phi0 in (0, pi), L > 0".into()));
    }
    let mut f = eval(&u)?;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if norm(&f) <= 1e-13 {
            break;
        }
        iterations += 1;
        let m = u.len();
        let mut jac = vec![vec![0.0; m]; m];
        for j in 0..m {
            let h = 1e-6 * (1.0 + u[j].abs());
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let fp = eval(&up)?;
            let fm = eval(&um)?;
            for i in 0..m {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let delta = lin_solve(jac, f.iter().map(|v| -v).collect())?;
        let mut lambda = 1.0;
        let f0 = norm(&f);
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            if feasible(&trial) {
                if let Ok(ft) = eval(&trial) {
                    if norm(&ft) < f0 || norm(&delta) * lambda < 1e-14 {
                        u = trial;
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        if norm(&delta) <= 1e-15 * (1.0 + norm(&u)) {
            break;
        }
    }
    let params = to_params(&u);
    let r = residuals_with(&params, mu, n)?;
    let bc = BoundaryResiduals { k0: 0.0, k_end: r[0], attachment_end: r[1], third_order0: r[2], third_order_end: r[3] };
    let scaled = [bc.k_end / k_unit, bc.attachment_end / len_unit, bc.third_order0 / mu, bc.third_order_end / mu];
    let worst = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(worst <= BC_TOL) {
        return Err(Error::NoConvergence { iterations, residual: worst });
    }
    build_solution(mu, params, bc, n)
}

fn build_solution(mu: f64, params: ShootingParams, bc: BoundaryResiduals, n: usize) -> Result<ElasticaSolution> {
    let states = integrate_states(&params, mu, n)?;
    let curvature: Vec<f64> = states.iter().map(|s| s[0]).collect();
    if curvature.iter().all(|k| k.abs() < 1e-12) {
        return Err(Error::NoConvergence { iterations: 0, residual: f64::NAN });
    }
    let mut nodes: Vec<Vec2> = states.iter().map(|s| [s[3], s[4]]).collect();
    nodes[n][1] = 0.0;
    let curve = DiscreteCurve::new(nodes, true)?;
    let h = params.length / n as f64;
    // Trapezoid on the RK4 nodes; the energy check uses the curve module.
    let energy = h * curvature.iter().enumerate().map(|(i, k)| {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        w * k * k
    }).sum::<f64>() + mu * params.length;
    let classification = classify_curve(&curve, &curvature, params.length);
    let endpoint_gap = (curve.nodes()[n][0] - curve.nodes()[0][0]).abs();
    Ok(ElasticaSolution {
        mu,
        params,
        ode_residual: ode_residual(&params, mu, n)?,
        curve,
        curvature,
        bc_residuals: bc,
        classification,
        energy,
        endpoint_gap,
        n_steps: n,
    })
}

/// Pointwise residual of the stationarity system on the trajectory
/// integrated with `2n` steps: the larger of `|2∂ₛw + k³ − μk|` and
/// `|∂ₛk − w|`, with `∂ₛ` from the sixth-order stencils.
pub fn ode_residual(params: &ShootingParams, mu: f64, n: usize) -> Result<f64> {
    let states = integrate_states(params, mu, 2 * n)?;
    let k: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let w: Vec<f64> = states.iter().map(|s| s[1]).collect();
    let op = stencil::operator(1);
    let mut dk = vec![0.0; k.len()];
    let mut dw = vec![0.0; k.len()];
    op.apply(&k, &mut dk);
    op.apply(&w, &mut dw);
    let inv_l = 1.0 / params.length;
    Ok((0..k.len()).fold(0.0f64, |m, i| {
        let r1 = 2.0 * dw[i] * inv_l + k[i].powi(3) - mu * k[i];
        let r2 = dk[i] * inv_l - w[i];
        m.max(r1.abs()).max(r2.abs())
    }))
}

fn segments_cross(p: Vec2, q: Vec2, r: Vec2, s: Vec2) -> bool {
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let (d1, d2) = (orient(r, s, p), orient(r, s, q));
    let (d3, d4) = (orient(p, q, r), orient(p, q, s));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Whether two non-adjacent segments of the polyline cross. The first and
/// last segments are skipped as a pair since both ends lie on the axis and
/// may meet there.
pub fn self_intersects(curve: &DiscreteCurve) -> bool {
    let p = curve.nodes();
    let m = p.len() - 1;
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_cross(p[i], p[i + 1], p[j], p[j + 1]) {
                return true;
            }
        }
    }
    false
}

fn classify_curve(curve: &DiscreteCurve, curvature: &[f64], length: f64) -> Classification {
    let n = curvature.len() - 1;
    let h = length / n as f64;
    let turning = h * curvature.iter().enumerate().map(|(i, k)| if i == 0 || i == n { 0.5 * k.abs() } else { k.abs() }).sum::<f64>();
    let degenerate = curvature.iter().all(|k| k.abs() < 1e-12);
    let self_intersecting = !degenerate && self_intersects(curve);
    let kind = if turning >= 2.0 * PI || self_intersecting { ElasticaKind::Loop } else { ElasticaKind::Arc };
    Classification { kind, turning, self_intersecting, degenerate }
}

/// Loop iff the tangent angle varies by at least `2π` or the curve crosses
/// itself; otherwise Arc. A straight line is an Arc flagged degenerate.
pub fn classify(solution: &ElasticaSolution) -> Classification {
    classify_curve(&solution.curve, &solution.curvature, solution.params.length)
}

/// Seed grid for [`find_all`]. Lengths are given for `μ = 1` and scaled by
/// `1/√μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedGrid {
    pub phi_min: f64,
    pub phi_max: f64,
    pub phi_count: usize,
    pub length_min: f64,
    pub length_max: f64,
    /// RK4 steps per unit length (at `μ = 1`) for the scan.
    pub steps_per_length: usize,
}

impl Default for SeedGrid {
    fn default() -> Self {
        SeedGrid { phi_min: 0.1, phi_max: PI - 0.1, phi_count: 60, length_min: 0.5, length_max: 6.0, steps_per_length: 200 }
    }
}

/// Newton seeds: for each launch angle the trajectory is integrated once,
/// the zeros of `k` are located, and sign changes of `y` at the `j`-th zero
/// between neighbouring angles give `(φ₀, L)`.
pub fn find_seeds(mu: f64, grid: &SeedGrid) -> Result<Vec<ShootingParams>> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::NonPositiveMu(mu));
    }
    if grid.phi_count < 2 || !(grid.phi_min > 0.0 && grid.phi_max < PI && grid.phi_min < grid.phi_max) {
        return Err(Error::InvalidParameter("seed grid needs 0 < phi_min < phi_max < pi and two angles".into()));
    }
    let scale = 1.0 / mu.sqrt();
    let (lmin, lmax) = (grid.length_min * scale, grid.length_max * scale);
    // Integrate past the window so a zero that leaves it between two
    // neighbouring angles still pairs up.
    let reach = 1.25 * lmax;
    let steps = ((1.25 * grid.length_max * grid.steps_per_length as f64).ceil() as usize).max(MIN_STEPS);
    let zeros_at = |phi: f64| -> Result<Vec<(f64, f64)>> {
        let p = ShootingParams::eliminated(mu, phi, reach);
        let st = integrate_states(&p, mu, steps)?;
        let h = reach / steps as f64;
        let mut out = Vec::new();
        for i in 1..steps {
            let (k0, k1) = (st[i][0], st[i + 1][0]);
            if k0 != 0.0 && k0 * k1 <= 0.0 {
                let t = k0 / (k0 - k1);
                let s = (i as f64 + t) * h;
                if s >= lmin {
                    out.push((s, st[i][4] + t * (st[i + 1][4] - st[i][4])));
                }
            }
        }
        Ok(out)
    };
    let phis: Vec<f64> = (0..grid.phi_count)
        .map(|i| grid.phi_min + (grid.phi_max - grid.phi_min) * i as f64 / (grid.phi_count - 1) as f64)
        .collect();
    let rows: Vec<Vec<(f64, f64)>> = phis.iter().map(|&p| zeros_at(p)).collect::<Result<_>>()?;
    let mut seeds = Vec::new();
    for w in 0..phis.len() - 1 {
        let (a, b) = (&rows[w], &rows[w + 1]);
        for j in 0..a.len().min(b.len()) {
            let ((la, ya), (lb, yb)) = (a[j], b[j]);
            if ya * yb <= 0.0 && ya != yb {
                let t = ya / (ya - yb);
                let phi = phis[w] + t * (phis[w + 1] - phis[w]);
                let length = la + t * (lb - la);
                if length <= lmax {
                    seeds.push(ShootingParams::eliminated(mu, phi, length));
                }
            }
        }
    }
    Ok(seeds)
}

/// Solves from every seed and keeps distinct solutions (parameter distance
/// above `1e−6`), ordered by length then launch angle.
pub fn find_all(mu: f64, grid: &SeedGrid) -> Result<Vec<ElasticaSolution>> {
    let mut found: Vec<ElasticaSolution> = Vec::new();
    for seed in find_seeds(mu, grid)? {
        if let Ok(sol) = solve(mu, &seed) {
            if !found.iter().any(|f| f.params.distance(&sol.params) < 1e-6) {
                found.push(sol);
            }
        }
    }
    found.sort_by(|a, b| a.params.length.total_cmp(&b.params.length).then(a.params.phi0.total_cmp(&b.params.phi0)));
    Ok(found)
}

/// The single-hump solution at `μ` with `φ₀ < π/2`, used as the reference
/// arc throughout the crate.
pub fn reference_arc(mu: f64) -> Result<ElasticaSolution> {
    let guess = ShootingParams::eliminated(mu, 0.71, 5.3 / mu.sqrt());
    solve(mu, &guess)
}
