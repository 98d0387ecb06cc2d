//! Synthetic test-instance generation. Deterministic for a fixed seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, TvError};
use crate::signal::{Grid, Signal};

/// Instance family.
#[derive(Debug, Clone, PartialEq)]
pub enum GenKind {
    /// Piecewise constant: `breaks[i]` is the first cell of segment `i + 1`;
    /// `levels` has one row of channel values per segment.
    Step {
        breaks: Vec<usize>,
        levels: Vec<Vec<f64>>,
    },
    /// Random trigonometric curve per channel, sampled at cell centers.
    Smooth { harmonics: usize, amplitude: f64 },
    /// Base kind plus i.i.d. Gaussian noise of standard deviation `sigma`.
    Noisy { base: Box<GenKind>, sigma: f64 },
    /// Two-channel points on a circular arc, `radius * (cos, sin)` of a
    /// linear angle ramp covering `turns` full revolutions.
    Circle { turns: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub grid: Grid,
    pub channels: usize,
}

pub fn generate(kind: &GenKind, params: &GenParams, seed: u64) -> Result<Signal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gen_with_rng(kind, params, &mut rng)
}

fn gen_with_rng(kind: &GenKind, params: &GenParams, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let grid = params.grid;
    let n = params.channels;
    if n == 0 {
        return Err(TvError::InvalidParams("need at least one channel".into()));
    }
    match kind {
        GenKind::Step { breaks, levels } => {
            if levels.len() != breaks.len() + 1 {
                return Err(TvError::InvalidParams(format!(
                    "{} breakpoints need {} levels, got {}",
                    breaks.len(),
                    breaks.len() + 1,
                    levels.len()
                )));
            }
            if levels.iter().any(|l| l.len() != n) {
                return Err(TvError::InvalidParams(format!(
                    "every level must have {n} channels"
                )));
            }
            for w in breaks.windows(2) {
                if w[0] >= w[1] {
                    return Err(TvError::InvalidParams(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
            }
            if breaks.iter().any(|&b| b == 0 || b >= grid.n_cells()) {
                return Err(TvError::InvalidParams(format!(
                    "breakpoints must lie in 1..{}",
                    grid.n_cells()
                )));
            }
            let mut seg = 0usize;
            Signal::from_fn(grid, n, |k, c| {
                if c == 0 {
                    while seg < breaks.len() && k >= breaks[seg] {
                        seg += 1;
                    }
                }
                levels[seg][c]
            })
        }
        GenKind::Smooth {
            harmonics,
            amplitude,
        } => {
            if *harmonics == 0 {
                return Err(TvError::InvalidParams(
                    "smooth kind needs at least one harmonic".into(),
                ));
            }
            // Random cosine series with 1/j amplitude decay per channel.
            let mut coeffs = Vec::with_capacity(n * harmonics);
            let mut phases = Vec::with_capacity(n * harmonics);
            for _ in 0..n * harmonics {
                coeffs.push(rng.random_range(-1.0..1.0));
                phases.push(rng.random_range(0.0..std::f64::consts::TAU));
            }
            Signal::from_fn(grid, n, |k, c| {
                let t = (grid.cell_center(k) - grid.a()) / grid.length();
                let mut v = 0.0;
                for j in 0..*harmonics {
                    let freq = (j + 1) as f64;
                    v += amplitude * coeffs[c * harmonics + j] / freq
                        * (std::f64::consts::TAU * freq * t + phases[c * harmonics + j]).cos();
                }
                v
            })
        }
        GenKind::Noisy { base, sigma } => {
            if *sigma < 0.0 || !sigma.is_finite() {
                return Err(TvError::InvalidParams(format!(
                    "noise level must be nonnegative, got {sigma}"
                )));
            }
            let clean = gen_with_rng(base, params, rng)?;
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let values = clean
                .values()
                .iter()
                .map(|v| v + sigma * normal.sample(rng))
                .collect();
            Signal::new(grid, n, values)
        }
        GenKind::Circle { turns, radius } => {
            if n != 2 {
                return Err(TvError::InvalidParams(format!(
                    "circle kind is two-channel, got n = {n}"
                )));
            }
            if !radius.is_finite() || *radius <= 0.0 || !turns.is_finite() {
                return Err(TvError::InvalidParams(
                    "circle kind needs a positive radius and finite turns".into(),
                ));
            }
            Signal::from_fn(grid, n, |k, c| {
                let t = (grid.cell_center(k) - grid.a()) / grid.length();
                let theta = std::f64::consts::TAU * turns * t;
                if c == 0 {
                    radius * theta.cos()
                } else {
                    radius * theta.sin()
                }
            })
        }
    }
}
