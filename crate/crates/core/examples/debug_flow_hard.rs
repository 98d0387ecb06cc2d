use std::time::Instant;
use rand::Rng;
use rand::SeedableRng;
use vtv1d::flow::{evolve, FlowParams};
use vtv1d::generate::{generate, GenKind, GenParams};
use vtv1d::signal::Grid;

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let grid = Grid::new(0.0, 1.058, 510).unwrap();
    let breaks: Vec<usize> = {
        let mut b: Vec<usize> = (0..8).map(|_| rng.random_range(1..510)).collect();
        b.sort_unstable();
        b.dedup();
        b
    };
    let levels = (0..=breaks.len())
        .map(|_| (0..3).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let kind = GenKind::Noisy {
        base: Box::new(GenKind::Step { breaks, levels }),
        sigma: 1.2e-3,
    };
    let u0 = generate(&kind, &GenParams { grid, channels: 3 }, 7).unwrap();
    let start = Instant::now();
    let traj = evolve(
        &u0,
        &FlowParams {
            t_final: 2.38e-4,
            n_steps: 64,
            tol_per_step: 1e-10,
            record_every: 64,
        },
    )
    .unwrap();
    let iters: Vec<usize> = traj.step_certificates().iter().map(|s| s.iterations).collect();
    println!(
        "{:.2}s certified={} iters(total {}): {:?}",
        start.elapsed().as_secs_f64(),
        traj.certified(),
        iters.iter().sum::<usize>(),
        &iters[..8.min(iters.len())]
    );
}
