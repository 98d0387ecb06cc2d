//! The ε-regularized energy and its Euler-Lagrange solver.
//!
//! For ε > 0 the nonsmooth edge term is replaced by `|v|_ε = sqrt(|v|² + ε²)`
//! plus a quadratic stabilizer:
//!
//!   E_ε(u) = Σ_k h (1/2λ)|u_k − f_k|² + Σ_e h (|δ_e|_ε + (ε²/2)|δ_e|²),
//!
//! with `δ_e = (u_{e+1} − u_e)/h` the discrete derivative on edge `e`. The
//! minimizer solves the finite-difference Euler-Lagrange system
//!
//!   (1/λ)(u_k − f_k) = (φ_k − φ_{k-1})/h,   φ_e = δ_e/|δ_e|_ε + ε² δ_e,
//!
//! with zero-flux ghost edges (homogeneous Neumann). The fluxes are
//! edge-centered and the divergence cell-centered, so discrete integration
//! by parts holds exactly and channel means are conserved.
//!
//! The solver is damped lagged diffusivity: the scalar edge coefficient
//! `1/|δ_e|_ε + ε²` is frozen per iteration, which decouples channels and
//! reduces each pass to a symmetric positive-definite tridiagonal solve per
//! channel. This majorizes the energy, so it descends globally; a Newton
//! polish on the full nonlinear residual (block-tridiagonal, n x n blocks
//! per cell) takes over when the fixed point slows down.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TvError};
use crate::signal::{Signal, Window};
use crate::util::{kahan_sum, solve_dense};

#[derive(Debug, Clone, Copy)]
pub struct SmoothParams {
    /// Regularization strength ε.
    pub epsilon: f64,
    /// Fidelity weight λ.
    pub lambda: f64,
    /// Residual target in the discrete L² norm.
    pub newton_tol: f64,
    /// Outer-iteration budget (fixed-point passes plus Newton steps).
    pub max_newton: usize,
    /// Initial damping factor in ]0, 1]; halved on energy increase.
    pub damping: f64,
}

impl SmoothParams {
    pub fn new(epsilon: f64, lambda: f64) -> SmoothParams {
        SmoothParams {
            epsilon,
            lambda,
            ..SmoothParams::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(TvError::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(TvError::InvalidParams(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(TvError::InvalidParams(format!(
                "damping must lie in ]0, 1], got {}",
                self.damping
            )));
        }
        if self.newton_tol <= 0.0 {
            return Err(TvError::InvalidParams("newton_tol must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams {
            epsilon: 1e-2,
            lambda: 1.0,
            newton_tol: 1e-10,
            max_newton: 2000,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoothReport {
    pub u_eps: Signal,
    /// Discrete L² norm of the Euler-Lagrange residual at `u_eps`.
    pub residual_norm: f64,
    /// E_ε(u_eps).
    pub energy: f64,
    pub iterations: usize,
    /// False when the residual target was not reached within `max_newton`.
    pub converged: bool,
}

/// One row of the local p-energy table produced by [`lemma_local_bound`].
#[derive(Debug, Clone, Copy)]
pub struct LocalBoundRow {
    pub epsilon: f64,
    /// `Σ_{e in inner} h |δ(u_ε)_e|_ε^p`.
    pub inner_p_energy: f64,
    /// `Σ_{e in outer} h |δf_e|^p`, independent of ε.
    pub target: f64,
}

fn smoothed_norm(v2: f64, eps: f64) -> f64 {
    (v2 + eps * eps).sqrt()
}

/// Discrete derivative field: edge-indexed rows `(u_{e+1} - u_e)/h`.
fn derivative(u: &Signal) -> Vec<f64> {
    let n = u.channels();
    let h = u.grid().h();
    let mut out = vec![0.0; u.n_edges() * n];
    for e in 0..u.n_edges() {
        for c in 0..n {
            out[e * n + c] = (u.value(e + 1, c) - u.value(e, c)) / h;
        }
    }
    out
}

/// E_ε(u) with datum `f`.
pub fn energy_smoothed(u: &Signal, f: &Signal, params: &SmoothParams) -> Result<f64> {
    params.validate()?;
    u.check_same_shape(f)?;
    let h = u.grid().h();
    let eps = params.epsilon;
    let n = u.channels();
    let fidelity = kahan_sum(
        u.values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b) * (a - b)),
    );
    let delta = derivative(u);
    let edge_terms = kahan_sum((0..u.n_edges()).map(|e| {
        let v2: f64 = (0..n).map(|c| delta[e * n + c] * delta[e * n + c]).sum();
        smoothed_norm(v2, eps) + 0.5 * eps * eps * v2
    }));
    Ok(0.5 * h / params.lambda * fidelity + h * edge_terms)
}

/// Coordinate gradient of E_ε at `u` (entry per cell and channel).
pub fn energy_smoothed_gradient(u: &Signal, f: &Signal, params: &SmoothParams) -> Result<Vec<f64>> {
    params.validate()?;
    u.check_same_shape(f)?;
    Ok(gradient_raw(u, f, params))
}

fn gradient_raw(u: &Signal, f: &Signal, params: &SmoothParams) -> Vec<f64> {
    let n = u.channels();
    let n_cells = u.n_cells();
    let h = u.grid().h();
    let eps = params.epsilon;
    let delta = derivative(u);
    // Edge fluxes φ_e = z_e + ε² δ_e.
    let mut flux = vec![0.0; u.n_edges() * n];
    for e in 0..u.n_edges() {
        let v2: f64 = (0..n).map(|c| delta[e * n + c] * delta[e * n + c]).sum();
        let nrm = smoothed_norm(v2, eps);
        for c in 0..n {
            flux[e * n + c] = delta[e * n + c] / nrm + eps * eps * delta[e * n + c];
        }
    }
    let mut grad = vec![0.0; n_cells * n];
    for k in 0..n_cells {
        for c in 0..n {
            let left = if k > 0 { flux[(k - 1) * n + c] } else { 0.0 };
            let right = if k < u.n_edges() { flux[k * n + c] } else { 0.0 };
            grad[k * n + c] =
                h / params.lambda * (u.value(k, c) - f.value(k, c)) + left - right;
        }
    }
    grad
}

/// Discrete L² norm of the Euler-Lagrange residual, `‖∇E_ε/h‖_{L²,h}`.
fn residual_norm(grad: &[f64], h: f64) -> f64 {
    (kahan_sum(grad.iter().map(|g| g * g)) / h).sqrt()
}

/// Minimizes E_ε for the datum `f` (started from `f`).
///
/// Small ε makes the Euler-Lagrange system stiff near derivative sign
/// changes, so the solve warm-starts through a decreasing ε ladder down to
/// the target; each stage alternates lagged-diffusivity passes with Newton
/// bursts on the full residual.
pub fn minimize_smoothed(f: &Signal, params: &SmoothParams) -> Result<SmoothReport> {
    params.validate()?;
    if f.n_cells() == 1 {
        return Ok(SmoothReport {
            u_eps: f.clone(),
            residual_norm: 0.0,
            energy: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let mut ladder = vec![params.epsilon];
    let mut eps = params.epsilon;
    while eps < 0.05 {
        eps *= 10.0;
        ladder.push(eps);
    }
    ladder.reverse();

    let mut u = f.clone();
    let mut iterations = 0usize;
    for (i, &stage_eps) in ladder.iter().enumerate() {
        let last = i + 1 == ladder.len();
        let stage_params = SmoothParams {
            epsilon: stage_eps,
            // Intermediate stages only need to land in the Newton basin.
            newton_tol: if last { params.newton_tol } else { 1e-6 },
            ..*params
        };
        let budget = params.max_newton.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let (u_next, its, done) = solve_stage(u, f, &stage_params, budget)?;
        u = u_next;
        iterations += its;
        if last {
            let grad = gradient_raw(&u, f, params);
            let res = residual_norm(&grad, f.grid().h());
            return Ok(SmoothReport {
                energy: energy_smoothed(&u, f, params)?,
                u_eps: u,
                residual_norm: res,
                iterations,
                converged: done && res <= params.newton_tol,
            });
        }
    }
    // Budget ran out before the final stage.
    let grad = gradient_raw(&u, f, params);
    let res = residual_norm(&grad, f.grid().h());
    Ok(SmoothReport {
        energy: energy_smoothed(&u, f, params)?,
        u_eps: u,
        residual_norm: res,
        iterations,
        converged: res <= params.newton_tol,
    })
}

/// Fixed-ε solve: lagged diffusivity with damping, interleaved with Newton
/// bursts whenever the fixed point slows down.
fn solve_stage(
    mut u: Signal,
    f: &Signal,
    params: &SmoothParams,
    budget: usize,
) -> Result<(Signal, usize, bool)> {
    let n = f.channels();
    let n_cells = f.n_cells();
    let h = f.grid().h();
    let eps = params.epsilon;

    let mut energy = energy_smoothed(&u, f, params)?;
    let mut iterations = 0usize;
    let mut res_history: Vec<f64> = Vec::new();

    let mut diag = vec![0.0; n_cells];
    let mut off = vec![0.0; n_cells.saturating_sub(1)];
    let mut rhs = vec![0.0; n_cells];

    while iterations < budget {
        let grad = gradient_raw(&u, f, params);
        let res = residual_norm(&grad, h);
        if !res.is_finite() {
            return Err(TvError::InvalidSignal(
                "non-finite residual in smoothed solve".into(),
            ));
        }
        if res <= params.newton_tol {
            return Ok((u, iterations, true));
        }
        res_history.push(res);

        // Hand over to Newton when the fixed point stops halving the
        // residual; resume the fixed point if the burst runs out.
        let len = res_history.len();
        let stalled = len >= 8 && res_history[len - 1] > 0.5 * res_history[len - 8];
        if stalled {
            let burst = budget.saturating_sub(iterations).min(25);
            let (u_new, its, done) = newton_polish(u, f, params, burst)?;
            u = u_new;
            iterations += its.max(1);
            energy = energy_smoothed(&u, f, params)?;
            res_history.clear();
            if done {
                return Ok((u, iterations, true));
            }
            continue;
        }

        // Lagged-diffusivity pass: freeze a_e = 1/|δ_e|_ε + ε², solve the
        // SPD tridiagonal system per channel.
        iterations += 1;
        let delta = derivative(&u);
        let coeff: Vec<f64> = (0..f.n_edges())
            .map(|e| {
                let v2: f64 = (0..n).map(|c| delta[e * n + c] * delta[e * n + c]).sum();
                1.0 / smoothed_norm(v2, eps) + eps * eps
            })
            .collect();
        let mut u_next = vec![0.0; n_cells * n];
        for c in 0..n {
            for k in 0..n_cells {
                let left = if k > 0 { coeff[k - 1] } else { 0.0 };
                let right = if k < f.n_edges() { coeff[k] } else { 0.0 };
                diag[k] = h / params.lambda + (left + right) / h;
                rhs[k] = h / params.lambda * f.value(k, c);
            }
            for k in 0..n_cells - 1 {
                off[k] = -coeff[k] / h;
            }
            let sol = thomas_solve(&diag, &off, &rhs);
            for k in 0..n_cells {
                u_next[k * n + c] = sol[k];
            }
        }

        // Damped update; halve the step while the energy increases.
        let mut omega = params.damping;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = u
                .values()
                .iter()
                .zip(&u_next)
                .map(|(cur, next)| cur + omega * (next - cur))
                .collect();
            let trial = Signal::new(*f.grid(), n, trial)?;
            let e_trial = energy_smoothed(&trial, f, params)?;
            if e_trial <= energy + 1e-15 * energy.abs() {
                u = trial;
                energy = e_trial;
                accepted = true;
                break;
            }
            omega *= 0.5;
        }
        if !accepted {
            // The quadratic surrogate cannot improve the energy further;
            // only Newton can make progress from here.
            let burst = budget.saturating_sub(iterations).min(25);
            let (u_new, its, done) = newton_polish(u, f, params, burst)?;
            u = u_new;
            iterations += its.max(1);
            energy = energy_smoothed(&u, f, params)?;
            res_history.clear();
            if done {
                return Ok((u, iterations, true));
            }
        }
    }
    let grad = gradient_raw(&u, f, params);
    let done = residual_norm(&grad, h) <= params.newton_tol;
    Ok((u, iterations, done))
}

/// Damped Newton on the full nonlinear residual. The Hessian is block
/// tridiagonal with n x n blocks; each edge contributes
/// `M_e = (I − z_e z_eᵀ |δ_e|²/|δ_e|_ε²)/|δ_e|_ε + ε² I` (SPD).
fn newton_polish(
    mut u: Signal,
    f: &Signal,
    params: &SmoothParams,
    budget: usize,
) -> Result<(Signal, usize, bool)> {
    let n = f.channels();
    let n_cells = f.n_cells();
    let m = f.n_edges();
    let h = f.grid().h();
    let eps = params.epsilon;
    let mut energy = energy_smoothed(&u, f, params)?;
    let mut its = 0usize;

    while its < budget {
        let grad = gradient_raw(&u, f, params);
        if residual_norm(&grad, h) <= params.newton_tol {
            return Ok((u, its, true));
        }
        its += 1;

        // Edge blocks M_e.
        let delta = derivative(&u);
        let mut blocks = vec![0.0; m * n * n];
        for e in 0..m {
            let d = &delta[e * n..(e + 1) * n];
            let v2: f64 = d.iter().map(|x| x * x).sum();
            let nrm = smoothed_norm(v2, eps);
            for i in 0..n {
                for j in 0..n {
                    let mut v = -d[i] * d[j] / (nrm * nrm * nrm);
                    if i == j {
                        v += 1.0 / nrm + eps * eps;
                    }
                    blocks[e * n * n + i * n + j] = v;
                }
            }
        }

        // Assemble block-tridiagonal Hessian: D_k = (h/λ)I + (M_{k-1}+M_k)/h,
        // O_k = −M_k/h coupling cells k and k+1.
        let mut diag_blocks = vec![0.0; n_cells * n * n];
        let mut off_blocks = vec![0.0; m * n * n];
        for k in 0..n_cells {
            for i in 0..n {
                diag_blocks[k * n * n + i * n + i] = h / params.lambda;
            }
            if k > 0 {
                for ij in 0..n * n {
                    diag_blocks[k * n * n + ij] += blocks[(k - 1) * n * n + ij] / h;
                }
            }
            if k < m {
                for ij in 0..n * n {
                    diag_blocks[k * n * n + ij] += blocks[k * n * n + ij] / h;
                }
            }
        }
        for e in 0..m {
            for ij in 0..n * n {
                off_blocks[e * n * n + ij] = -blocks[e * n * n + ij] / h;
            }
        }

        let mut step = grad.clone();
        for v in &mut step {
            *v = -*v;
        }
        if !block_tridiag_solve(&mut diag_blocks, &off_blocks, &mut step, n_cells, n) {
            break;
        }

        // Backtracking on the energy (strict convexity makes this global).
        let descent: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = u
                .values()
                .iter()
                .zip(&step)
                .map(|(cur, s)| cur + t * s)
                .collect();
            let trial = Signal::new(*f.grid(), n, trial)?;
            let e_trial = energy_smoothed(&trial, f, params)?;
            if e_trial <= energy + 1e-4 * t * descent {
                u = trial;
                energy = e_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let grad = gradient_raw(&u, f, params);
    let done = residual_norm(&grad, h) <= params.newton_tol;
    Ok((u, its, done))
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn thomas_solve(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { off[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for k in 1..n {
        let denom = diag[k] - off[k - 1] * c[k - 1];
        if k < n - 1 {
            c[k] = off[k] / denom;
        }
        d[k] = (rhs[k] - off[k - 1] * d[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    d
}

/// Solves a symmetric block-tridiagonal system in place; `rhs` receives the
/// solution. `diag` holds N n x n blocks (destroyed), `off` the N-1
/// super/sub-diagonal blocks. Returns false on breakdown.
fn block_tridiag_solve(
    diag: &mut [f64],
    off: &[f64],
    rhs: &mut [f64],
    n_cells: usize,
    n: usize,
) -> bool {
    let nn = n * n;
    // Forward elimination: D̃_k -= O_{k-1} D̃_{k-1}^{-1} O_{k-1}ᵀ.
    for k in 1..n_cells {
        // Y = D̃_{k-1}^{-1} O_{k-1}ᵀ, column by column.
        let mut y = vec![0.0; nn];
        for col in 0..n {
            let mut a = diag[(k - 1) * nn..k * nn].to_vec();
            let mut b = vec![0.0; n];
            for row in 0..n {
                // O is symmetric, so O_{k-1}ᵀ column = O_{k-1} column.
                b[row] = off[(k - 1) * nn + row * n + col];
            }
            if !solve_dense(&mut a, &mut b, n) {
                return false;
            }
            for row in 0..n {
                y[row * n + col] = b[row];
            }
        }
        // L = O_{k-1} follows from symmetry: D̃_k -= O Y, rhs_k -= Yᵀ rhs_{k-1}
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += off[(k - 1) * nn + i * n + l] * y[l * n + j];
                }
                diag[k * nn + i * n + j] -= acc;
            }
        }
        let (head, tail) = rhs.split_at_mut(k * n);
        let prev = &head[(k - 1) * n..k * n];
        for i in 0..n {
            let mut acc = 0.0;
            for l in 0..n {
                acc += y[l * n + i] * prev[l];
            }
            tail[i] -= acc;
        }
    }
    // Back substitution.
    let mut x_next = vec![0.0; n];
    for k in (0..n_cells).rev() {
        let mut b = rhs[k * n..(k + 1) * n].to_vec();
        if k < n_cells - 1 {
            for i in 0..n {
                for l in 0..n {
                    b[i] -= off[k * nn + i * n + l] * x_next[l];
                }
            }
        }
        let mut a = diag[k * nn..(k + 1) * nn].to_vec();
        if !solve_dense(&mut a, &mut b, n) {
            return false;
        }
        rhs[k * n..(k + 1) * n].copy_from_slice(&b);
        x_next.copy_from_slice(&b);
    }
    true
}

/// Relative error between the analytic directional derivative of E_ε at
/// `probe` and a central finite difference with step `1e-6 * scale`, along
/// a pseudo-random unit direction (fixed internal seed, so the check is
/// reproducible).
pub fn gradient_check(f: &Signal, params: &SmoothParams, probe: &Signal) -> Result<f64> {
    params.validate()?;
    probe.check_same_shape(f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a09_e667_f3bc_c908);
    let mut dir: Vec<f64> = (0..probe.values().len())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut dir {
        *v /= nrm;
    }

    let grad = gradient_raw(probe, f, params);
    let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();

    let scale = probe.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let t = 1e-6 * scale;
    let shifted = |sign: f64| -> Result<f64> {
        let vals: Vec<f64> = probe
            .values()
            .iter()
            .zip(&dir)
            .map(|(v, d)| v + sign * t * d)
            .collect();
        let s = Signal::new(*probe.grid(), probe.channels(), vals)?;
        energy_smoothed(&s, f, params)
    };
    let fd = (shifted(1.0)? - shifted(-1.0)?) / (2.0 * t);
    Ok((analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-12))
}

/// Both sides of the global p-energy bound: for the minimizer of E_ε,
///
///   Σ_e h |δ(u_ε)_e|_ε^p  ≤  p ε^p (b−a) + Σ_e h |δf_e|^p,  p in [1,2].
pub fn lemma_global_bound(f: &Signal, params: &SmoothParams, p: f64) -> Result<(f64, f64)> {
    if !(1.0..=2.0).contains(&p) {
        return Err(TvError::InvalidParams(format!(
            "p must lie in [1, 2], got {p}"
        )));
    }
    let report = minimize_smoothed(f, params)?;
    let lhs = p_energy_eps(&report.u_eps, params.epsilon, p, None);
    let rhs = p * params.epsilon.powf(p) * f.grid().length() + p_energy_plain(f, p, None);
    Ok((lhs, rhs))
}

/// `Σ h |δ_e|_ε^p` over a window of edges (all edges when `None`).
fn p_energy_eps(u: &Signal, eps: f64, p: f64, window: Option<&Window>) -> f64 {
    let n = u.channels();
    let h = u.grid().h();
    let delta = derivative(u);
    let (lo, hi) = match window {
        Some(w) => (w.lo, w.hi),
        None => {
            if u.n_edges() == 0 {
                return 0.0;
            }
            (0, u.n_edges() - 1)
        }
    };
    h * kahan_sum((lo..=hi).map(|e| {
        let v2: f64 = (0..n).map(|c| delta[e * n + c] * delta[e * n + c]).sum();
        smoothed_norm(v2, eps).powf(p)
    }))
}

/// `Σ h |δ_e|^p` (plain Euclidean norm) over a window of edges.
fn p_energy_plain(u: &Signal, p: f64, window: Option<&Window>) -> f64 {
    let n = u.channels();
    let h = u.grid().h();
    let delta = derivative(u);
    let (lo, hi) = match window {
        Some(w) => (w.lo, w.hi),
        None => {
            if u.n_edges() == 0 {
                return 0.0;
            }
            (0, u.n_edges() - 1)
        }
    };
    h * kahan_sum((lo..=hi).map(|e| {
        let v2: f64 = (0..n).map(|c| delta[e * n + c] * delta[e * n + c]).sum();
        v2.sqrt().powf(p)
    }))
}

/// Local p-energy table along a decreasing ε sequence: for each ε, the
/// inner-window ε-regularized p-energy of u_ε against the fixed
/// outer-window target computed from the datum. The inner window must be
/// nested in the outer one. Requires p in ]1, 2].
pub fn lemma_local_bound(
    f: &Signal,
    params: &SmoothParams,
    p: f64,
    window_inner: &Window,
    window_outer: &Window,
    eps_sequence: &[f64],
) -> Result<Vec<LocalBoundRow>> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(TvError::InvalidParams(format!(
            "local bound needs p in ]1, 2], got {p}"
        )));
    }
    window_inner.validate(f)?;
    window_outer.validate(f)?;
    if window_inner.lo < window_outer.lo || window_inner.hi > window_outer.hi {
        return Err(TvError::WindowOutOfRange(format!(
            "inner window [{}, {}] not nested in outer [{}, {}]",
            window_inner.lo, window_inner.hi, window_outer.lo, window_outer.hi
        )));
    }
    if eps_sequence.is_empty() {
        return Err(TvError::InvalidParams("empty epsilon sequence".into()));
    }
    for w in eps_sequence.windows(2) {
        if w[0] <= w[1] {
            return Err(TvError::InvalidParams(
                "epsilon sequence must be strictly decreasing".into(),
            ));
        }
    }
    if eps_sequence.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
        return Err(TvError::InvalidParams("epsilons must be positive".into()));
    }

    let target = p_energy_plain(f, p, Some(window_outer));
    let mut rows = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let params_eps = SmoothParams {
            epsilon: eps,
            ..*params
        };
        let report = minimize_smoothed(f, &params_eps)?;
        rows.push(LocalBoundRow {
            epsilon: eps,
            inner_p_energy: p_energy_eps(&report.u_eps, eps, p, Some(window_inner)),
            target,
        });
    }
    Ok(rows)
}

/// Documented slack for the p-energy bounds: first-order propagation of the
/// solver residual, `10 (1 + Σ h |δf|^p) * newton_tol`.
pub fn lemma_slack(f: &Signal, p: f64, newton_tol: f64) -> f64 {
    10.0 * (1.0 + p_energy_plain(f, p, None)) * newton_tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GenKind, GenParams};
    use crate::prox::{primal_energy, prox, ProxParams};
    use crate::signal::Grid;

    fn grid(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    fn smooth_instance(n_cells: usize, channels: usize, seed: u64) -> Signal {
        generate(
            &GenKind::Smooth {
                harmonics: 3,
                amplitude: 1.0,
            },
            &GenParams {
                grid: grid(n_cells),
                channels,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn energy_of_constant_counts_edge_epsilons() {
        let f = Signal::constant(grid(8), &[1.0, -2.0]).unwrap();
        let params = SmoothParams::new(0.05, 1.0);
        let e = energy_smoothed(&f, &f, &params).unwrap();
        let expected = 7.0 * f.grid().h() * 0.05;
        assert!((e - expected).abs() < 1e-14);
    }

    #[test]
    fn energy_approaches_rof_energy_as_epsilon_vanishes() {
        let f = smooth_instance(24, 2, 1);
        let u = smooth_instance(24, 2, 2);
        let lambda = 0.3;
        let params = SmoothParams::new(1e-12, lambda);
        let e_eps = energy_smoothed(&u, &f, &params).unwrap();
        let e = primal_energy(&u, &f, lambda);
        assert!((e_eps - e).abs() <= 1e-8, "gap {}", (e_eps - e).abs());
    }

    #[test]
    fn quadratic_term_is_degree_two() {
        // Doubling a linear ramp quadruples the (ε²/2)|δ|² contribution.
        let g = grid(10);
        let ramp = Signal::from_fn(g, 1, |k, _| k as f64 * 0.1).unwrap();
        let ramp2 = Signal::from_fn(g, 1, |k, _| k as f64 * 0.2).unwrap();
        let eps = 0.3;
        let params = SmoothParams::new(eps, 1.0);
        let quad = |s: &Signal| {
            let e = energy_smoothed(s, s, &params).unwrap();
            let delta = derivative(s);
            let abs_part = g.h()
                * kahan_sum(
                    delta
                        .iter()
                        .map(|d| smoothed_norm(d * d, eps)),
                );
            e - abs_part
        };
        assert!((quad(&ramp2) - 4.0 * quad(&ramp)).abs() < 1e-12);
    }

    #[test]
    fn constant_datum_is_exact_fixed_point() {
        let f = Signal::constant(grid(12), &[0.5, 1.5, -3.0]).unwrap();
        let report = minimize_smoothed(&f, &SmoothParams::new(1e-2, 0.8)).unwrap();
        assert!(report.converged);
        assert_eq!(report.u_eps.values(), f.values());
        assert!(report.residual_norm <= 1e-14);
    }

    #[test]
    fn matches_derivative_free_coordinate_search() {
        // Independent oracle: cyclic golden-section coordinate descent on
        // E_ε from the same starting point.
        let f = generate(
            &GenKind::Noisy {
                base: Box::new(GenKind::Smooth {
                    harmonics: 2,
                    amplitude: 1.0,
                }),
                sigma: 0.4,
            },
            &GenParams {
                grid: Grid::new(0.0, 16.0, 16).unwrap(), // h = 1
                channels: 2,
            },
            9,
        )
        .unwrap();
        let params = SmoothParams::new(1e-2, 0.2);
        let report = minimize_smoothed(&f, &params).unwrap();
        assert!(report.converged);

        let mut vals = f.values().to_vec();
        let energy_of = |vals: &[f64]| {
            let s = Signal::new(*f.grid(), 2, vals.to_vec()).unwrap();
            energy_smoothed(&s, &f, &params).unwrap()
        };
        let golden = 0.5 * (3.0 - 5.0f64.sqrt());
        let mut best = energy_of(&vals);
        for _sweep in 0..3000 {
            let before = best;
            for i in 0..vals.len() {
                let (mut lo, mut hi) = (vals[i] - 1.0, vals[i] + 1.0);
                for _ in 0..60 {
                    let a = lo + golden * (hi - lo);
                    let b = hi - golden * (hi - lo);
                    let (mut va, mut vb) = (0.0, 0.0);
                    for (x, v) in [(a, &mut va), (b, &mut vb)] {
                        let old = vals[i];
                        vals[i] = x;
                        *v = energy_of(&vals);
                        vals[i] = old;
                    }
                    if va < vb {
                        hi = b;
                    } else {
                        lo = a;
                    }
                }
                vals[i] = 0.5 * (lo + hi);
            }
            best = energy_of(&vals);
            if before - best < 1e-16 && _sweep > 10 {
                break;
            }
        }
        assert!(
            (report.energy - best).abs() <= 1e-10,
            "solver {} vs coordinate search {}",
            report.energy,
            best
        );
    }

    #[test]
    fn epsilon_sweep_converges_to_prox_solution() {
        let f = smooth_instance(48, 2, 21);
        let lambda = 0.05;
        let prox_report = prox(&f, &ProxParams::with_tol(lambda, 1e-12)).unwrap();
        assert!(prox_report.certified);
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let report = minimize_smoothed(&f, &SmoothParams::new(eps, lambda)).unwrap();
            assert!(report.converged, "eps {eps}");
            let dist = report.u_eps.l2h_distance(&prox_report.u);
            assert!(dist < last, "eps {eps}: {dist} !< {last}");
            last = dist;
        }
        assert!(last <= 1e-3, "final distance {last}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = smooth_instance(20, 3, 4);
        let probe = smooth_instance(20, 3, 5);
        for eps in [1e-1, 1e-2] {
            let params = SmoothParams::new(eps, 0.5);
            let err = gradient_check(&f, &params, &probe).unwrap();
            assert!(err <= 1e-6, "eps {eps}: relative error {err}");
        }
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        let f = smooth_instance(24, 2, 6);
        let params = SmoothParams::new(1e-2, 0.4);
        let report = minimize_smoothed(&f, &params).unwrap();
        assert!(report.converged);
        let grad = energy_smoothed_gradient(&report.u_eps, &f, &params).unwrap();
        let scale = 1.0 + report.energy.abs();
        let dd = residual_norm(&grad, f.grid().h());
        assert!(dd <= params.newton_tol * scale);
    }

    #[test]
    fn energy_descends_from_datum_and_means_conserved() {
        let f = smooth_instance(32, 2, 7);
        let params = SmoothParams::new(5e-2, 0.3);
        let report = minimize_smoothed(&f, &params).unwrap();
        assert!(report.converged);
        let e_f = energy_smoothed(&f, &f, &params).unwrap();
        assert!(report.energy <= e_f + 1e-14);
        for (a, b) in f
            .channel_means()
            .iter()
            .zip(report.u_eps.channel_means().iter())
        {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn rotation_equivariance() {
        let f = smooth_instance(24, 2, 8);
        let params = SmoothParams::new(1e-2, 0.4);
        let report = minimize_smoothed(&f, &params).unwrap();
        let (c, s) = (0.6, 0.8); // rotation by atan2(0.8, 0.6)
        let rotate = |sig: &Signal| {
            Signal::from_fn(*sig.grid(), 2, |k, ch| {
                let (x, y) = (sig.value(k, 0), sig.value(k, 1));
                if ch == 0 {
                    c * x - s * y
                } else {
                    s * x + c * y
                }
            })
            .unwrap()
        };
        let rotated_report = minimize_smoothed(&rotate(&f), &params).unwrap();
        let dist = rotated_report.u_eps.linf_distance(&rotate(&report.u_eps));
        assert!(dist <= 1e-8, "equivariance broken by {dist}");
    }

    #[test]
    fn global_bound_constant_and_smooth() {
        let params = SmoothParams::new(1e-2, 0.5);
        let f = Signal::constant(grid(10), &[2.0]).unwrap();
        let (lhs, rhs) = lemma_global_bound(&f, &params, 1.0).unwrap();
        assert!((lhs - 9.0 * 0.1 * 1e-2).abs() < 1e-14);
        assert!(lhs <= rhs);

        let f = smooth_instance(64, 2, 10);
        for p in [1.0, 1.5, 2.0] {
            for eps in [1e-1, 1e-2, 1e-3] {
                let params = SmoothParams::new(eps, 0.2);
                let (lhs, rhs) = lemma_global_bound(&f, &params, p).unwrap();
                let slack = lemma_slack(&f, p, params.newton_tol);
                assert!(lhs <= rhs + slack, "p={p} eps={eps}: {lhs} > {rhs}");
            }
        }
        assert!(lemma_global_bound(&f, &params, 2.5).is_err());
    }

    #[test]
    fn local_bound_table_and_validation() {
        let f = smooth_instance(64, 2, 11);
        let params = SmoothParams::new(1e-2, 0.2);
        let inner = Window::new(20, 40);
        let outer = Window::new(10, 50);
        let rows =
            lemma_local_bound(&f, &params, 1.5, &inner, &outer, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert_eq!(rows.len(), 3);
        let slack = lemma_slack(&f, 1.5, params.newton_tol);
        let last = rows.last().unwrap();
        assert!(last.inner_p_energy <= last.target + slack);
        // Excess decays along the sequence.
        for w in rows.windows(2) {
            assert!(
                w[1].inner_p_energy - w[1].target <= w[0].inner_p_energy - w[0].target + slack
            );
        }

        // Full-domain windows reduce to the global comparison.
        let full = Window::new(0, f.n_edges() - 1);
        let rows = lemma_local_bound(&f, &params, 1.5, &full, &full, &[1e-2]).unwrap();
        let (lhs, rhs) = lemma_global_bound(&f, &params, 1.5).unwrap();
        assert!((rows[0].inner_p_energy - lhs).abs() < 1e-12);
        assert!((rows[0].target - (rhs - 1.5 * 1e-2f64.powf(1.5) * f.grid().length())).abs() < 1e-12);

        assert!(lemma_local_bound(&f, &params, 1.0, &inner, &outer, &[1e-2]).is_err());
        assert!(lemma_local_bound(&f, &params, 1.5, &outer, &inner, &[1e-2]).is_err());
        assert!(lemma_local_bound(&f, &params, 1.5, &inner, &outer, &[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn nonconvergence_is_flagged_not_fatal() {
        let f = smooth_instance(32, 2, 12);
        let params = SmoothParams {
            epsilon: 1e-3,
            lambda: 0.5,
            newton_tol: 1e-12,
            max_newton: 1,
            damping: 1.0,
        };
        let report = minimize_smoothed(&f, &params).unwrap();
        assert!(!report.converged);
        assert!(report.iterations <= 1);
    }
}
