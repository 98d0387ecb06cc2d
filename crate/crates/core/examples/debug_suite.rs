use std::time::Instant;
use vtv1d::properties::{suite_corollary, suite_cross_solver, suite_lemma, suite_theorem, SuiteConfig};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "theorem".into());
    let cases: usize = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50);
    let config = SuiteConfig {
        cases,
        ..SuiteConfig::default()
    };
    let start = Instant::now();
    let report = match which.as_str() {
        "theorem" => suite_theorem(&config),
        "corollary" => suite_corollary(&SuiteConfig {
            cases,
            gap_tol: 1e-11,
            ..SuiteConfig::default()
        }),
        "lemma" => suite_lemma(&SuiteConfig {
            cases,
            ..SuiteConfig::default()
        }),
        "cross" => suite_cross_solver(&config),
        _ => panic!("unknown suite"),
    };
    println!(
        "{}: cases {} checks {} within_slack {} violations {} wall {:.2}s (total {:.2}s)",
        report.suite,
        report.cases_run,
        report.checks_run,
        report.within_slack,
        report.violations.len(),
        report.wall_time_seconds,
        start.elapsed().as_secs_f64()
    );
    for v in report.violations.iter().take(10) {
        println!(
            "  case {} {}: lhs {:.6e} rhs {:.6e} slack {:.3e} [{}]",
            v.case_index, v.quantity, v.lhs, v.rhs, v.slack, v.detail
        );
    }
}
