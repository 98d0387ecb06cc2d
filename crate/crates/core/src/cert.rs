//! Certificate-derived tolerances.
//!
//! Every slack used by the verification suites is computed here from solve
//! certificates; no check carries a free constant. The chain is:
//!
//! The discrete energy `E(w) = tv(w) + (h/2λ) Σ|w_k − f_k|²` is strongly
//! convex with modulus `1/λ` in the weighted norm `‖v‖²_{L²,h} = h Σ|v_k|²`,
//! so a feasible pair with duality gap `g` pins the minimizer:
//!
//!   ‖w − u*‖_{L²,h} ≤ sqrt(2 λ g)
//!
//! From that single bound:
//! - per entry:            |w_k − u*_k| ≤ sqrt(2 λ g / h)
//! - per edge jump:        ||Δw_k| − |Δu*_k|| ≤ 2 sqrt(2 λ g / h)
//! - window of m edges:    |Σ_W |Δw| − Σ_W |Δu*|| ≤ 2 sqrt((m+1) · 2 λ g / h)
//!   (a window of m edges touches m + 1 cells; Cauchy-Schwarz on the cells)

/// `‖w − u*‖_{L²,h}` bound from a duality gap.
pub fn l2h_error_bound(lambda: f64, gap: f64) -> f64 {
    (2.0 * lambda * gap.max(0.0)).sqrt()
}

/// IEEE-754 representation allowance for a comparison `lhs <= rhs + slack`.
/// The compared quantities are sums of doubles, so even an exact solve
/// leaves relative rounding of this order; this is rounding headroom, not a
/// tunable tolerance.
pub fn comparison_floor(lhs: f64, rhs: f64) -> f64 {
    1e-12 * (1.0 + lhs.abs().max(rhs.abs()))
}

/// Per-edge jump-magnitude slack from a duality gap.
pub fn edge_slack(lambda: f64, h: f64, gap: f64) -> f64 {
    2.0 * (2.0 * lambda * gap.max(0.0) / h).sqrt()
}

/// Slack for a sum of jump magnitudes over a window of `m_edges` edges.
pub fn window_slack(m_edges: usize, lambda: f64, h: f64, gap: f64) -> f64 {
    2.0 * ((m_edges + 1) as f64 * 2.0 * lambda * gap.max(0.0) / h).sqrt()
}

/// Slack for the total variation (the full window of `n_cells - 1` edges).
pub fn tv_slack(n_cells: usize, lambda: f64, h: f64, gap: f64) -> f64 {
    window_slack(n_cells.saturating_sub(1), lambda, h, gap)
}

/// Slack for the sup-norm of the discrete derivative, `edge_slack / h`.
pub fn lipschitz_slack(lambda: f64, h: f64, gap: f64) -> f64 {
    edge_slack(lambda, h, gap) / h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slacks_scale_as_sqrt_of_gap() {
        let a = edge_slack(2.0, 0.5, 1e-10);
        let b = edge_slack(2.0, 0.5, 4e-10);
        assert!((b / a - 2.0).abs() < 1e-12);
        assert_eq!(edge_slack(2.0, 0.5, -1e-18), 0.0);
    }

    #[test]
    fn window_slack_dominates_edge_slack() {
        assert!(window_slack(1, 1.0, 0.1, 1e-8) >= edge_slack(1.0, 0.1, 1e-8));
        assert_eq!(
            tv_slack(64, 1.0, 0.1, 1e-8),
            window_slack(63, 1.0, 0.1, 1e-8)
        );
    }
}
