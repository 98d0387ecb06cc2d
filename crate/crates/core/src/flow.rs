//! Total-variation flow computed as iterated resolvents.
//!
//! The flow at time `t` is approximated by composing `n_steps` certified
//! ROF solves at λ = t / n_steps (semi-discretization in time). Because
//! each step is itself a certified minimizer, every trajectory property
//! checked here inherits a per-step certificate, and the slack for a
//! comparison across steps is the sum of the per-step edge slacks.

use serde::Serialize;

use crate::cert;
use crate::error::{Result, TvError};
use crate::prox::{prox_warm, DualField, ProxParams};
use crate::signal::{tv, Signal};
use crate::util::kahan_sum;

#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    /// Final time of the evolution.
    pub t_final: f64,
    /// Number of resolvent steps; each uses λ = t_final / n_steps.
    pub n_steps: usize,
    /// Duality-gap target per resolvent solve.
    pub tol_per_step: f64,
    /// Record every k-th state (the initial and final states are always kept).
    pub record_every: usize,
}

impl FlowParams {
    pub fn new(t_final: f64, n_steps: usize) -> FlowParams {
        FlowParams {
            t_final,
            n_steps,
            tol_per_step: 1e-11,
            record_every: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.t_final.is_finite() || self.t_final <= 0.0 {
            return Err(TvError::InvalidParams(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.n_steps == 0 {
            return Err(TvError::InvalidParams("need at least one step".into()));
        }
        if self.record_every == 0 {
            return Err(TvError::InvalidParams("record_every must be >= 1".into()));
        }
        if !self.tol_per_step.is_finite() || self.tol_per_step <= 0.0 {
            return Err(TvError::InvalidParams(
                "tol_per_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Certificate of one resolvent step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepCert {
    pub gap: f64,
    pub iterations: usize,
    pub certified: bool,
}

/// A computed flow trajectory with its per-step certificates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    lambda_step: f64,
    times: Vec<f64>,
    states: Vec<Signal>,
    /// Step index of each recorded state (0 = initial datum).
    recorded_steps: Vec<usize>,
    /// One certificate per resolvent step (indices 1..=n_steps).
    steps: Vec<StepCert>,
    certified: bool,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Signal] {
        &self.states
    }

    pub fn recorded_steps(&self) -> &[usize] {
        &self.recorded_steps
    }

    pub fn step_certificates(&self) -> &[StepCert] {
        &self.steps
    }

    pub fn lambda_step(&self) -> f64 {
        self.lambda_step
    }

    /// True when every resolvent step met its gap target.
    pub fn certified(&self) -> bool {
        self.certified
    }

    pub fn final_state(&self) -> &Signal {
        self.states.last().expect("trajectory has states")
    }

    fn h(&self) -> f64 {
        self.states[0].grid().h()
    }

    /// Sum of per-step edge slacks over steps `from+1..=to` (step indices).
    fn edge_slack_steps(&self, from: usize, to: usize) -> f64 {
        let h = self.h();
        kahan_sum(
            self.steps[from..to]
                .iter()
                .map(|s| cert::edge_slack(self.lambda_step, h, s.gap)),
        )
    }

    /// Edge slack between two recorded states (indices into `states`).
    pub fn edge_slack_between(&self, rec_a: usize, rec_b: usize) -> f64 {
        self.edge_slack_steps(self.recorded_steps[rec_a], self.recorded_steps[rec_b])
    }

    /// Edge slack accumulated from the initial datum to recorded state `j`.
    pub fn edge_slack_cumulative(&self, rec: usize) -> f64 {
        self.edge_slack_between(0, rec)
    }

    /// TV slack between two recorded states.
    pub fn tv_slack_between(&self, rec_a: usize, rec_b: usize) -> f64 {
        let h = self.h();
        let n_cells = self.states[0].n_cells();
        kahan_sum(
            self.steps[self.recorded_steps[rec_a]..self.recorded_steps[rec_b]]
                .iter()
                .map(|s| cert::tv_slack(n_cells, self.lambda_step, h, s.gap)),
        )
    }

    /// `‖·‖_{L²,h}` slack between two recorded states.
    pub fn l2h_slack_between(&self, rec_a: usize, rec_b: usize) -> f64 {
        kahan_sum(
            self.steps[self.recorded_steps[rec_a]..self.recorded_steps[rec_b]]
                .iter()
                .map(|s| cert::l2h_error_bound(self.lambda_step, s.gap)),
        )
    }
}

/// Evolves `u0` to `params.t_final` by composing certified resolvents,
/// warm-starting each dual solve from the previous step.
pub fn evolve(u0: &Signal, params: &FlowParams) -> Result<Trajectory> {
    params.validate()?;
    let lambda = params.t_final / params.n_steps as f64;
    let prox_params = ProxParams {
        lambda,
        tol: params.tol_per_step,
        ..ProxParams::default()
    };

    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut recorded_steps = vec![0usize];
    let mut steps = Vec::with_capacity(params.n_steps);
    let mut certified = true;

    let mut state = u0.clone();
    let mut warm: Option<DualField> = None;
    for step in 1..=params.n_steps {
        let report = prox_warm(&state, &prox_params, warm.as_ref())?;
        certified &= report.certified;
        steps.push(StepCert {
            gap: report.gap,
            iterations: report.iterations,
            certified: report.certified,
        });
        warm = Some(report.dual.clone());
        state = report.u;
        if step % params.record_every == 0 || step == params.n_steps {
            times.push(step as f64 * lambda);
            states.push(state.clone());
            recorded_steps.push(step);
        }
    }

    Ok(Trajectory {
        lambda_step: lambda,
        times,
        states,
        recorded_steps,
        steps,
        certified,
    })
}

/// `‖evolve with n steps − evolve with 2n steps‖_{L²,h}` at `t_final`; the
/// Cauchy-style surrogate for convergence of the exponential formula.
pub fn richardson_check(u0: &Signal, t_final: f64, n: usize, tol: f64) -> Result<f64> {
    let coarse = evolve(
        u0,
        &FlowParams {
            t_final,
            n_steps: n,
            tol_per_step: tol,
            record_every: n,
        },
    )?;
    let fine = evolve(
        u0,
        &FlowParams {
            t_final,
            n_steps: 2 * n,
            tol_per_step: tol,
            record_every: 2 * n,
        },
    )?;
    Ok(coarse.final_state().l2h_distance(fine.final_state()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JumpCheckKind {
    /// Recorded state vs the initial datum.
    Cumulative,
    /// Recorded state vs the previous recorded state.
    Stepwise,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpViolation {
    pub kind: JumpCheckKind,
    pub state_index: usize,
    pub time: f64,
    pub edge: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub checks: u64,
    pub violations: Vec<JumpViolation>,
}

impl CorollaryReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Edge-wise jump verification along a trajectory: every recorded state
/// against the initial datum, and every recorded state against its
/// predecessor, each with certificate-derived slack.
pub fn verify_corollary(traj: &Trajectory) -> CorollaryReport {
    let mut checks = 0u64;
    let mut violations = Vec::new();
    let u0 = &traj.states[0];
    let n_edges = u0.n_edges();
    for j in 1..traj.states.len() {
        let state = &traj.states[j];
        let cum_slack = traj.edge_slack_cumulative(j);
        let step_slack = traj.edge_slack_between(j - 1, j);
        let prev = &traj.states[j - 1];
        for k in 0..n_edges {
            let lhs = state.jump_magnitude(k);
            let rhs0 = u0.jump_magnitude(k);
            checks += 1;
            if lhs > rhs0 + cum_slack + cert::comparison_floor(lhs, rhs0) {
                violations.push(JumpViolation {
                    kind: JumpCheckKind::Cumulative,
                    state_index: j,
                    time: traj.times[j],
                    edge: k,
                    lhs,
                    rhs: rhs0,
                    slack: cum_slack,
                });
            }
            let rhs_prev = prev.jump_magnitude(k);
            checks += 1;
            if lhs > rhs_prev + step_slack + cert::comparison_floor(lhs, rhs_prev) {
                violations.push(JumpViolation {
                    kind: JumpCheckKind::Stepwise,
                    state_index: j,
                    time: traj.times[j],
                    edge: k,
                    lhs,
                    rhs: rhs_prev,
                    slack: step_slack,
                });
            }
        }
    }
    CorollaryReport { checks, violations }
}

/// Total variation at each recorded time.
pub fn tv_decay(traj: &Trajectory) -> Vec<f64> {
    traj.states.iter().map(tv).collect()
}

/// JSON export: times, per-step certificates, and the recorded states.
pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a> {
        lambda_step: f64,
        certified: bool,
        times: &'a [f64],
        recorded_steps: &'a [usize],
        certificates: &'a [StepCert],
        states: Vec<serde_json::Value>,
    }
    let states = traj
        .states
        .iter()
        .map(|s| {
            crate::io::signal_to_json(s)
                .and_then(|text| serde_json::from_str(&text).map_err(Into::into))
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = Doc {
        lambda_step: traj.lambda_step,
        certified: traj.certified,
        times: &traj.times,
        recorded_steps: &traj.recorded_steps,
        certificates: &traj.steps,
        states,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Long-form CSV export: one row per (time, cell, channel).
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,cell,channel,value\n");
    for (j, state) in traj.states.iter().enumerate() {
        for k in 0..state.n_cells() {
            for c in 0..state.channels() {
                out.push_str(&format!(
                    "{:.16e},{},{},{:.16e}\n",
                    traj.times[j],
                    k,
                    c,
                    state.value(k, c)
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Grid;

    fn two_cell(a: f64, b: f64) -> Signal {
        let g = Grid::new(0.0, 2.0, 2).unwrap(); // h = 1
        Signal::scalar(g, vec![a, b]).unwrap()
    }

    #[test]
    fn constant_datum_is_stationary() {
        let g = Grid::new(0.0, 1.0, 8).unwrap();
        let u0 = Signal::constant(g, &[1.0, -2.0]).unwrap();
        let traj = evolve(&u0, &FlowParams::new(0.5, 8)).unwrap();
        assert!(traj.certified());
        for state in traj.states() {
            assert_eq!(state.values(), u0.values());
        }
        assert!(tv_decay(&traj).iter().all(|&v| v == 0.0));
        assert!(verify_corollary(&traj).ok());
        assert_eq!(richardson_check(&u0, 0.3, 4, 1e-11).unwrap(), 0.0);
    }

    #[test]
    fn two_cell_jump_shrinks_linearly_in_time() {
        // Each resolvent shrinks the jump by exactly 2λ/h, so after n steps
        // at λ = t/n the jump is |Δu0| − 2t/h, independent of n. The flow
        // solution jump(t) = max(0, 1 − 2t) is reproduced exactly.
        let u0 = two_cell(0.0, 1.0);
        for n_steps in [1, 2, 4, 5, 16] {
            let traj = evolve(&u0, &FlowParams::new(0.2, n_steps)).unwrap();
            assert!(traj.certified());
            let f = traj.final_state();
            assert!((f.value(0, 0) - 0.2).abs() <= 1e-10, "n_steps {n_steps}");
            assert!((f.value(1, 0) - 0.8).abs() <= 1e-10);
        }
        // Richardson differences vanish for this datum.
        assert!(richardson_check(&u0, 0.2, 3, 1e-12).unwrap() <= 1e-9);
    }

    #[test]
    fn two_cell_extinction_at_half_jump_times_h() {
        // Extinction at t* = h |Δu0| / 2 = 0.5; beyond it the state is flat.
        let u0 = two_cell(0.0, 1.0);
        let traj = evolve(&u0, &FlowParams::new(0.6, 6)).unwrap();
        let f = traj.final_state();
        assert!((f.value(0, 0) - 0.5).abs() <= 1e-10);
        assert!((f.value(1, 0) - 0.5).abs() <= 1e-10);
        // The jump sequence decays by 2λ per step down to zero.
        let lambda = traj.lambda_step();
        for (j, state) in traj.states().iter().enumerate() {
            let expected = (1.0 - 2.0 * lambda * j as f64).max(0.0);
            assert!((state.jump_magnitude(0) - expected).abs() <= 1e-10);
        }
        let decay = tv_decay(&traj);
        assert!((decay[0] - 1.0).abs() <= 1e-12);
        assert!(decay.last().unwrap().abs() <= 1e-10);
    }

    #[test]
    fn corollary_holds_on_random_data() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let g = Grid::new(0.0, 1.0, 40).unwrap();
        let u0 = Signal::from_fn(g, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let traj = evolve(&u0, &FlowParams::new(0.01, 12)).unwrap();
        assert!(traj.certified());
        let report = verify_corollary(&traj);
        assert!(report.ok(), "violations: {:?}", report.violations);
        assert!(report.checks > 0);

        // TV decays along the trajectory, means are conserved.
        let decay = tv_decay(&traj);
        for j in 1..decay.len() {
            assert!(decay[j] <= decay[j - 1] + traj.tv_slack_between(j - 1, j));
        }
        let m0 = u0.channel_means();
        let mf = traj.final_state().channel_means();
        for (a, b) in m0.iter().zip(&mf) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn richardson_differences_shrink() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let u0 = Signal::from_fn(g, 3, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let t = 0.02;
        let d8 = richardson_check(&u0, t, 8, 1e-12).unwrap();
        let d16 = richardson_check(&u0, t, 16, 1e-12).unwrap();
        assert!(d16 <= d8 + 1e-9, "{d16} vs {d8}");
    }

    #[test]
    fn prefix_of_longer_run_matches_shorter_run_exactly() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let g = Grid::new(0.0, 1.0, 24).unwrap();
        let u0 = Signal::from_fn(g, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        // Same λ per step, so the first 4 steps are the same computation.
        let long = evolve(&u0, &FlowParams::new(0.06, 6)).unwrap();
        let short = evolve(&u0, &FlowParams::new(0.04, 4)).unwrap();
        assert_eq!(long.states()[4].values(), short.final_state().values());

        // Composition agrees with the long run within accumulated slack.
        let tail = evolve(short.final_state(), &FlowParams::new(0.02, 2)).unwrap();
        let dist = tail.final_state().l2h_distance(long.final_state());
        let slack = long.l2h_slack_between(0, long.states().len() - 1)
            + short.l2h_slack_between(0, short.states().len() - 1)
            + tail.l2h_slack_between(0, tail.states().len() - 1);
        assert!(dist <= slack + 1e-12, "{dist} vs {slack}");
    }

    #[test]
    fn l2_contraction_between_trajectories() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let g = Grid::new(0.0, 1.0, 32).unwrap();
        let u0 = Signal::from_fn(g, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let v0 = Signal::from_fn(g, 2, |_, _| rng.random_range(-1.0..1.0)).unwrap();
        let params = FlowParams::new(0.05, 10);
        let tu = evolve(&u0, &params).unwrap();
        let tvj = evolve(&v0, &params).unwrap();
        let before = u0.l2h_distance(&v0);
        let after = tu.final_state().l2h_distance(tvj.final_state());
        let slack = tu.l2h_slack_between(0, tu.states().len() - 1)
            + tvj.l2h_slack_between(0, tvj.states().len() - 1);
        assert!(after <= before + slack + 1e-12);
    }

    #[test]
    fn record_every_keeps_endpoints() {
        let u0 = two_cell(0.0, 1.0);
        let traj = evolve(
            &u0,
            &FlowParams {
                t_final: 0.3,
                n_steps: 7,
                tol_per_step: 1e-11,
                record_every: 3,
            },
        )
        .unwrap();
        assert_eq!(traj.recorded_steps(), &[0, 3, 6, 7]);
        assert_eq!(traj.times()[0], 0.0);
        assert_eq!(traj.states().len(), traj.times().len());
    }

    #[test]
    fn exports_are_well_formed() {
        let u0 = two_cell(0.0, 1.0);
        let traj = evolve(&u0, &FlowParams::new(0.2, 2)).unwrap();
        let json = trajectory_to_json(&traj).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["times"].as_array().unwrap().len(), traj.states().len());
        assert_eq!(doc["certificates"].as_array().unwrap().len(), 2);
        assert_eq!(doc["states"][0]["N"], 2);
        let csv = trajectory_to_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "time,cell,channel,value");
        assert_eq!(lines.len(), 1 + traj.states().len() * 2);
    }

    #[test]
    fn parameter_validation() {
        let u0 = two_cell(0.0, 1.0);
        assert!(evolve(&u0, &FlowParams::new(0.0, 4)).is_err());
        assert!(evolve(&u0, &FlowParams::new(0.1, 0)).is_err());
        let mut p = FlowParams::new(0.1, 4);
        p.record_every = 0;
        assert!(evolve(&u0, &p).is_err());
    }
}
