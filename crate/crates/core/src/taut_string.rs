//! Exact, non-iterative solver for the scalar (single-channel) problem.
//!
//! The running sums `W_k = Σ_{i<k} w_i` of any competitor satisfy
//! `W_k = F_k + (λ/h) p_{k-1}` with `p` the dual field, so feasibility
//! `|p| ≤ 1` confines the string `W` to a tube of radius `λ/h` around the
//! running sums of the datum, pinned at both endpoints. The minimizer is
//! the taut string through that tube, found by a greedy scan that keeps a
//! window of admissible segment slopes and fixes a touch point whenever the
//! window empties. The returned signal is the segment slope sequence.

use crate::error::{Result, TvError};
use crate::signal::Signal;

pub fn taut_string_scalar(f: &Signal, lambda: f64) -> Result<Signal> {
    if f.channels() != 1 {
        return Err(TvError::InvalidParams(format!(
            "taut string handles single-channel signals, got n = {}",
            f.channels()
        )));
    }
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(TvError::InvalidParams(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n_cells = f.n_cells();
    if n_cells == 1 {
        return Ok(f.clone());
    }
    let radius = lambda / f.grid().h();

    // Running sums of the datum; knots 0..=N.
    let mut sums = Vec::with_capacity(n_cells + 1);
    sums.push(0.0);
    let mut acc = 0.0;
    for k in 0..n_cells {
        acc += f.value(k, 0);
        sums.push(acc);
    }
    let upper = |j: usize| {
        if j == 0 || j == n_cells {
            sums[j]
        } else {
            sums[j] + radius
        }
    };
    let lower = |j: usize| {
        if j == 0 || j == n_cells {
            sums[j]
        } else {
            sums[j] - radius
        }
    };

    let mut values = vec![0.0; n_cells];
    let mut anchor = 0usize;
    let mut anchor_val = 0.0;
    while anchor < n_cells {
        let mut slope_hi = f64::INFINITY;
        let mut hi_idx = anchor + 1;
        let mut slope_lo = f64::NEG_INFINITY;
        let mut lo_idx = anchor + 1;
        let mut j = anchor + 1;
        let (next_anchor, next_val) = loop {
            let dx = (j - anchor) as f64;
            let su = (upper(j) - anchor_val) / dx;
            let sl = (lower(j) - anchor_val) / dx;
            if sl > slope_hi {
                // No straight segment clears knot j from below: the string
                // presses on the upper tube where the window was set.
                break (hi_idx, upper(hi_idx));
            }
            if su < slope_lo {
                break (lo_idx, lower(lo_idx));
            }
            if su < slope_hi {
                slope_hi = su;
                hi_idx = j;
            }
            if sl > slope_lo {
                slope_lo = sl;
                lo_idx = j;
            }
            if j == n_cells {
                // Endpoint reached with a nonempty window; its pinned value
                // is itself inside the window, so go straight to it.
                break (n_cells, sums[n_cells]);
            }
            j += 1;
        };
        let slope = (next_val - anchor_val) / (next_anchor - anchor) as f64;
        for v in values.iter_mut().take(next_anchor).skip(anchor) {
            *v = slope;
        }
        anchor = next_anchor;
        anchor_val = next_val;
    }

    Signal::new(*f.grid(), 1, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{duality_gap, DualField};
    use crate::signal::Grid;

    fn grid(n: usize) -> Grid {
        Grid::new(0.0, n as f64, n).unwrap() // h = 1
    }

    /// Exact KKT certificate: telescope the dual from the candidate solution
    /// and verify feasibility plus a rounding-level duality gap.
    fn assert_exact_optimal(u: &Signal, f: &Signal, lambda: f64) {
        let h = f.grid().h();
        let m = f.n_edges();
        let mut p = vec![0.0; m];
        for k in 0..m {
            let prev = if k > 0 { p[k - 1] } else { 0.0 };
            p[k] = prev - h / lambda * (f.value(k, 0) - u.value(k, 0));
        }
        let mut dual = DualField::new(m, 1, p).unwrap();
        assert!(
            dual.feasibility_excess() <= 1e-10,
            "telescoped dual infeasible by {}",
            dual.feasibility_excess()
        );
        dual.project();
        let gap = duality_gap(u, &dual, f, lambda).unwrap();
        let scale = 1.0 + crate::prox::primal_energy(u, f, lambda).abs();
        assert!(gap.abs() <= 1e-10 * scale, "gap {gap} at scale {scale}");
    }

    #[test]
    fn constant_is_unchanged() {
        let f = Signal::scalar(grid(5), vec![2.0; 5]).unwrap();
        let u = taut_string_scalar(&f, 0.7).unwrap();
        assert_eq!(u.values(), f.values());
    }

    #[test]
    fn two_cell_quarter_tube() {
        // N=2, h=1, λ=0.25: string from (0,0) to (2,1) bends at (1, 0.25).
        let f = Signal::scalar(grid(2), vec![0.0, 1.0]).unwrap();
        let u = taut_string_scalar(&f, 0.25).unwrap();
        assert!((u.value(0, 0) - 0.25).abs() < 1e-15);
        assert!((u.value(1, 0) - 0.75).abs() < 1e-15);
        assert_exact_optimal(&u, &f, 0.25);
    }

    #[test]
    fn monotone_data_moves_endpoints_inward() {
        // Strictly increasing data: interior dual saturates at +1, so the
        // endpoints move inward by λ/h and the middle stays.
        let f = Signal::scalar(grid(3), vec![0.0, 10.0, 20.0]).unwrap();
        let u = taut_string_scalar(&f, 1.0).unwrap();
        assert!((u.value(0, 0) - 1.0).abs() < 1e-15);
        assert!((u.value(1, 0) - 10.0).abs() < 1e-15);
        assert!((u.value(2, 0) - 19.0).abs() < 1e-15);
        // The saturated dual (+1, +1) certifies optimality with zero gap.
        let p = DualField::new(2, 1, vec![1.0, 1.0]).unwrap();
        let gap = duality_gap(&u, &p, &f, 1.0).unwrap();
        assert!(gap.abs() <= 1e-12);
    }

    #[test]
    fn random_instances_carry_exact_certificates() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let n_cells = rng.random_range(2..80);
            let g = Grid::new(0.0, rng.random_range(0.5..4.0), n_cells).unwrap();
            let f = Signal::from_fn(g, 1, |_, _| rng.random_range(-2.0..2.0)).unwrap();
            let lambda = 10f64.powf(rng.random_range(-3.0..1.0)) * g.h();
            let u = taut_string_scalar(&f, lambda).unwrap();
            assert_exact_optimal(&u, &f, lambda);
        }
    }

    #[test]
    fn rejects_multichannel_and_bad_lambda() {
        let f2 = Signal::new(grid(2), 2, vec![0.0; 4]).unwrap();
        assert!(taut_string_scalar(&f2, 1.0).is_err());
        let f = Signal::scalar(grid(2), vec![0.0, 1.0]).unwrap();
        assert!(taut_string_scalar(&f, 0.0).is_err());
    }

    #[test]
    fn single_cell_passthrough() {
        let g = Grid::new(0.0, 1.0, 1).unwrap();
        let f = Signal::scalar(g, vec![3.0]).unwrap();
        assert_eq!(taut_string_scalar(&f, 1.0).unwrap().values(), f.values());
    }
}
