use vtv1d::generate::{generate, GenKind, GenParams};
use vtv1d::signal::Grid;
use vtv1d::smoothed::{energy_smoothed, minimize_smoothed, SmoothParams};

fn main() {
    let grid = Grid::new(0.0, 1.0, 48).unwrap();
    let f = generate(
        &GenKind::Smooth {
            harmonics: 3,
            amplitude: 1.0,
        },
        &GenParams { grid, channels: 2 },
        21,
    )
    .unwrap();
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let params = SmoothParams::new(eps, 0.05);
        let report = minimize_smoothed(&f, &params).unwrap();
        let e_f = energy_smoothed(&f, &f, &params).unwrap();
        println!(
            "eps {eps:.0e}: converged {} iters {} residual {:.3e} energy {:.8} (datum {:.8})",
            report.converged, report.iterations, report.residual_norm, report.energy, e_f
        );
    }
}
