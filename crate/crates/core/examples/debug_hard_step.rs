use rand::Rng;
use rand::SeedableRng;
use vtv1d::generate::{generate, GenKind, GenParams};
use vtv1d::prox::{prox, prox_warm, ProxParams};
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
    let lambda = 2.38e-4 / 64.0;
    let params = ProxParams::with_tol(lambda, 1e-10);
    let step1 = prox(&u0, &params).unwrap();
    eprintln!("--- step 2 trace ---");
    let step2 = prox_warm(&step1.u, &params, Some(&step1.dual)).unwrap();
    println!(
        "step1 iters {}, step2 iters {} gap {:.3e}",
        step1.iterations, step2.iterations, step2.gap
    );
}
