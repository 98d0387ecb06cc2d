use std::time::Instant;
use vtv1d::flow::{evolve, FlowParams};
use vtv1d::generate::{generate, GenKind, GenParams};
use vtv1d::signal::{edge_jumps, Grid};

fn main() {
    for (n_cells, channels, n_steps) in [(512, 8, 64), (512, 1, 64), (256, 3, 32), (64, 2, 16)] {
        let grid = Grid::new(0.0, 1.0, n_cells).unwrap();
        let u0 = generate(
            &GenKind::Noisy {
                base: Box::new(GenKind::Smooth {
                    harmonics: 4,
                    amplitude: 1.0,
                }),
                sigma: 0.2,
            },
            &GenParams { grid, channels },
            3,
        )
        .unwrap();
        let max_jump = edge_jumps(&u0)
            .magnitudes()
            .iter()
            .fold(0.0f64, |a, &b| a.max(b));
        let t_final = 0.5 * grid.h() * max_jump;
        let start = Instant::now();
        let traj = evolve(
            &u0,
            &FlowParams {
                t_final,
                n_steps,
                tol_per_step: 1e-10,
                record_every: 1,
            },
        )
        .unwrap();
        let iters: usize = traj.step_certificates().iter().map(|s| s.iterations).sum();
        println!(
            "N={n_cells} n={channels} steps={n_steps}: {:.2}s certified={} total_fista_iters={}",
            start.elapsed().as_secs_f64(),
            traj.certified(),
            iters
        );
    }
}
