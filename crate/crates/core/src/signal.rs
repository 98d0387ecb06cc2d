//! Grids, multichannel signals, and the discrete total-variation quantities.
//!
//! A [`Signal`] is piecewise constant on the `N` equal cells of a uniform
//! [`Grid`]; its variation lives entirely on the `N - 1` interior cell
//! boundaries ("edges"). Total variation is the sum of the Euclidean jump
//! magnitudes across channels, so channels are coupled isotropically.

use crate::error::{Result, TvError};
use crate::util::{kahan_sum, Fnv1a};

/// Uniform partition of the interval `[a, b]` into `n_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    n_cells: usize,
    h: f64,
}

impl Grid {
    pub fn new(a: f64, b: f64, n_cells: usize) -> Result<Grid> {
        if !a.is_finite() || !b.is_finite() {
            return Err(TvError::InvalidGrid(format!(
                "endpoints must be finite, got [{a}, {b}]"
            )));
        }
        if a >= b {
            return Err(TvError::InvalidGrid(format!(
                "left endpoint must be below right endpoint, got [{a}, {b}]"
            )));
        }
        if n_cells == 0 {
            return Err(TvError::InvalidGrid("need at least one cell".into()));
        }
        let h = (b - a) / n_cells as f64;
        if h <= 0.0 || !h.is_finite() {
            return Err(TvError::InvalidGrid(format!("degenerate cell width {h}")));
        }
        Ok(Grid { a, b, n_cells, h })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Interval length `b - a`.
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width `(b - a) / N`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior edges, `N - 1`.
    pub fn n_edges(&self) -> usize {
        self.n_cells - 1
    }

    /// Center of cell `k`, `a + (k + 1/2) h`.
    pub fn cell_center(&self, k: usize) -> f64 {
        self.a + (k as f64 + 0.5) * self.h
    }
}

/// Multichannel piecewise-constant signal: `n_cells` rows of `channels`
/// values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    channels: usize,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(grid: Grid, channels: usize, values: Vec<f64>) -> Result<Signal> {
        if channels == 0 {
            return Err(TvError::InvalidSignal("need at least one channel".into()));
        }
        if values.len() != grid.n_cells() * channels {
            return Err(TvError::InvalidSignal(format!(
                "expected {} x {} = {} values, got {}",
                grid.n_cells(),
                channels,
                grid.n_cells() * channels,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(TvError::InvalidSignal(format!("non-finite entry {v}")));
        }
        Ok(Signal {
            grid,
            channels,
            values,
        })
    }

    /// Builds a signal by evaluating `f(cell, channel)`.
    pub fn from_fn(grid: Grid, channels: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Signal> {
        let mut values = Vec::with_capacity(grid.n_cells() * channels);
        for k in 0..grid.n_cells() {
            for c in 0..channels {
                values.push(f(k, c));
            }
        }
        Signal::new(grid, channels, values)
    }

    /// Scalar signal convenience constructor.
    pub fn scalar(grid: Grid, values: Vec<f64>) -> Result<Signal> {
        Signal::new(grid, 1, values)
    }

    pub fn constant(grid: Grid, level: &[f64]) -> Result<Signal> {
        let channels = level.len();
        Signal::from_fn(grid, channels, |_, c| level[c])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn n_edges(&self) -> usize {
        self.grid.n_edges()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize, channel: usize) -> f64 {
        self.values[cell * self.channels + channel]
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.channels..(cell + 1) * self.channels]
    }

    /// Checks that `other` lives on the same grid with the same channel count.
    pub fn check_same_shape(&self, other: &Signal) -> Result<()> {
        if self.grid != other.grid || self.channels != other.channels {
            return Err(TvError::ShapeMismatch(format!(
                "signals disagree: {} cells x {} channels on [{}, {}] vs {} cells x {} channels on [{}, {}]",
                self.n_cells(),
                self.channels,
                self.grid.a(),
                self.grid.b(),
                other.n_cells(),
                other.channels,
                other.grid.a(),
                other.grid.b()
            )));
        }
        Ok(())
    }

    /// Euclidean jump magnitude at edge `k` (between cells `k` and `k+1`).
    pub fn jump_magnitude(&self, edge: usize) -> f64 {
        let mut s = 0.0;
        for c in 0..self.channels {
            let d = self.value(edge + 1, c) - self.value(edge, c);
            s += d * d;
        }
        s.sqrt()
    }

    /// Weighted L2 distance `sqrt(h * sum |self_k - other_k|^2)`.
    pub fn l2h_distance(&self, other: &Signal) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        let s = kahan_sum(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| (x - y) * (x - y)),
        );
        (self.grid.h() * s).sqrt()
    }

    /// Max-norm distance over all entries.
    pub fn linf_distance(&self, other: &Signal) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Channel-wise weighted mean, `(1/(b-a)) * sum_k h * values[k][c]`.
    pub fn channel_means(&self) -> Vec<f64> {
        (0..self.channels)
            .map(|c| {
                kahan_sum((0..self.n_cells()).map(|k| self.value(k, c))) / self.n_cells() as f64
            })
            .collect()
    }

    /// Representation of the same function on the grid with every cell split
    /// in half (2N cells, width h/2, duplicated values).
    pub fn refine(&self) -> Signal {
        let grid = Grid::new(self.grid.a(), self.grid.b(), 2 * self.n_cells())
            .expect("refining a valid grid");
        let mut values = Vec::with_capacity(2 * self.values.len());
        for k in 0..self.n_cells() {
            values.extend_from_slice(self.row(k));
            values.extend_from_slice(self.row(k));
        }
        Signal {
            grid,
            channels: self.channels,
            values,
        }
    }

    /// Stable 64-bit digest of grid, shape, and values.
    pub fn digest(&self) -> u64 {
        let mut hasher = Fnv1a::new();
        hasher.write_f64(self.grid.a());
        hasher.write_f64(self.grid.b());
        hasher.write(&(self.n_cells() as u64).to_le_bytes());
        hasher.write(&(self.channels as u64).to_le_bytes());
        for &v in &self.values {
            hasher.write_f64(v);
        }
        hasher.finish()
    }
}

/// Per-edge Euclidean jump magnitudes; the discrete jump measure.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeJumps {
    magnitudes: Vec<f64>,
}

impl EdgeJumps {
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Total mass, equal to the signal's total variation.
    pub fn total(&self) -> f64 {
        kahan_sum(self.magnitudes.iter().copied())
    }
}

/// Inclusive range `lo..=hi` of interior edge indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl Window {
    pub fn new(lo: usize, hi: usize) -> Window {
        Window { lo, hi }
    }

    pub fn n_edges(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn validate(&self, s: &Signal) -> Result<()> {
        if s.n_edges() == 0 || self.lo > self.hi || self.hi > s.n_edges() - 1 {
            return Err(TvError::WindowOutOfRange(format!(
                "window [{}, {}] on a signal with {} edges",
                self.lo,
                self.hi,
                s.n_edges()
            )));
        }
        Ok(())
    }

    /// True if `self` is strictly inside `outer` (a gap on both sides).
    pub fn strictly_inside(&self, outer: &Window) -> bool {
        outer.lo < self.lo && self.hi < outer.hi
    }
}

/// Total variation: sum of Euclidean jump magnitudes over all interior edges.
pub fn tv(s: &Signal) -> f64 {
    kahan_sum((0..s.n_edges()).map(|k| s.jump_magnitude(k)))
}

/// Total variation restricted to the edges of `w`.
pub fn tv_window(s: &Signal, w: &Window) -> Result<f64> {
    w.validate(s)?;
    Ok(kahan_sum((w.lo..=w.hi).map(|k| s.jump_magnitude(k))))
}

/// Per-edge jump magnitudes.
pub fn edge_jumps(s: &Signal) -> EdgeJumps {
    EdgeJumps {
        magnitudes: (0..s.n_edges()).map(|k| s.jump_magnitude(k)).collect(),
    }
}

/// Discrete Lipschitz constant, `max_k |jump_k| / h`; 0 for a single cell.
pub fn lipschitz_constant(s: &Signal) -> f64 {
    (0..s.n_edges())
        .map(|k| s.jump_magnitude(k) / s.grid().h())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = Grid::new(-1.0, 3.0, 8).unwrap();
        assert_eq!(g.h(), 0.5);
        assert!((g.h() * g.n_cells() as f64 - g.length()).abs() < 1e-15);
        assert!(Grid::new(1.0, 1.0, 4).is_err());
        assert!(Grid::new(0.0, 1.0, 0).is_err());
        assert!(Grid::new(f64::NAN, 1.0, 4).is_err());
    }

    #[test]
    fn signal_rejects_bad_shapes_and_nonfinite() {
        assert!(Signal::new(grid(3), 2, vec![0.0; 5]).is_err());
        assert!(Signal::new(grid(2), 1, vec![0.0, f64::NAN]).is_err());
        assert!(Signal::new(grid(2), 0, vec![]).is_err());
    }

    #[test]
    fn tv_of_constant_is_zero() {
        let s = Signal::constant(grid(17), &[3.0, -1.0, 2.5]).unwrap();
        assert_eq!(tv(&s), 0.0);
        assert!(edge_jumps(&s).magnitudes().iter().all(|&m| m == 0.0));
        assert_eq!(lipschitz_constant(&s), 0.0);
    }

    #[test]
    fn tv_scalar_spike() {
        let s = Signal::scalar(grid(3), vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(tv(&s), 2.0);
        assert_eq!(tv_window(&s, &Window::new(0, 0)).unwrap(), 1.0);
        assert_eq!(tv_window(&s, &Window::new(1, 1)).unwrap(), 1.0);
        assert_eq!(tv_window(&s, &Window::new(0, 1)).unwrap(), tv(&s));
    }

    #[test]
    fn tv_two_channel_euclidean_jump() {
        let s = Signal::new(grid(2), 2, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(tv(&s), 5.0);
        // h = 0.5 here, so the discrete derivative is jump / h = 10.
        assert_eq!(lipschitz_constant(&s), 10.0);
    }

    #[test]
    fn edge_jumps_multichannel() {
        let s = Signal::new(grid(3), 2, vec![0.0, 0.0, 3.0, 4.0, 3.0, 4.0]).unwrap();
        assert_eq!(edge_jumps(&s).magnitudes(), &[5.0, 0.0]);
        let s = Signal::scalar(grid(3), vec![1.0, 0.0, 2.0]).unwrap();
        assert_eq!(edge_jumps(&s).magnitudes(), &[1.0, 2.0]);
        assert_eq!(edge_jumps(&s).total(), tv(&s));
    }

    #[test]
    fn lipschitz_matches_h_scaling() {
        let g = Grid::new(0.0, 1.5, 3).unwrap(); // h = 0.5
        let s = Signal::scalar(g, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(lipschitz_constant(&s), 2.0);
        let g1 = Grid::new(0.0, 1.0, 1).unwrap();
        let s1 = Signal::scalar(g1, vec![7.0]).unwrap();
        assert_eq!(lipschitz_constant(&s1), 0.0);
        assert_eq!(tv(&s1), 0.0);
    }

    #[test]
    fn window_validation() {
        let s = Signal::scalar(grid(3), vec![0.0, 1.0, 0.0]).unwrap();
        assert!(Window::new(0, 2).validate(&s).is_err());
        assert!(Window::new(1, 0).validate(&s).is_err());
        assert!(Window::new(0, 1).validate(&s).is_ok());
        let one = Signal::scalar(grid(1), vec![0.0]).unwrap();
        assert!(Window::new(0, 0).validate(&one).is_err());
    }

    #[test]
    fn refine_preserves_function_and_tv() {
        let s = Signal::new(grid(3), 2, vec![0.0, 1.0, 2.0, -1.0, 0.5, 0.5]).unwrap();
        let r = s.refine();
        assert_eq!(r.n_cells(), 6);
        assert_eq!(r.grid().h(), s.grid().h() / 2.0);
        assert!((tv(&r) - tv(&s)).abs() < 1e-15);
        assert_eq!(r.value(0, 1), s.value(0, 1));
        assert_eq!(r.value(1, 1), s.value(0, 1));
        let m0 = s.channel_means();
        let m1 = r.channel_means();
        for (a, b) in m0.iter().zip(&m1) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
