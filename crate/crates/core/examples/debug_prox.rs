use vtv1d::generate::{generate, GenKind, GenParams};
use vtv1d::prox::{prox, ProxParams};
use vtv1d::signal::Grid;

fn main() {
    let grid = Grid::new(0.0, 1.0, 512).unwrap();
    let u0 = generate(
        &GenKind::Noisy {
            base: Box::new(GenKind::Smooth {
                harmonics: 4,
                amplitude: 1.0,
            }),
            sigma: 0.2,
        },
        &GenParams {
            grid,
            channels: 1,
        },
        3,
    )
    .unwrap();
    // Mimic one mid-flow resolvent step: small lambda.
    let lambda = 0.5 * grid.h() * 1.0 / 64.0;
    let report = prox(&u0, &ProxParams::with_tol(lambda, 1e-10)).unwrap();
    println!(
        "lambda {lambda:.3e}: certified {} iters {} gap {:.3e}",
        report.certified, report.iterations, report.gap
    );
}
