use std::time::Instant;

use num_complex::Complex64;
use zetascope::omega::TargetSpec;
use zetascope::scan::{density_estimate, scan_theorem1, scan_theorem3, zeta_derivatives, ScanWindow};
use zetascope::universality::{taylor_coeffs, universality_pipeline, builtin_target, UniversalityTarget};
use zetascope::zeta::{default_radius, log_zeta_derivs, zeta_value};

#[test]
fn self_referential_log_scan() {
    let start = Instant::now();
    let sigma0 = 0.75;
    let d = log_zeta_derivs(2, sigma0, 5000.0, default_radius(sigma0)).unwrap();
    let spec = TargetSpec::new(sigma0, d.values.clone(), 1e-3).unwrap();
    let window = ScanWindow::new(4990.0, 20.0, 1e-3).unwrap();
    let out = scan_theorem1(&spec, &window).unwrap();
    eprintln!("{} hits in {:?}: {:?}", out.hits.len(), start.elapsed(), out.hits);
    let near: Vec<_> = out.hits.iter().filter(|h| (h.tau - 5000.0).abs() < window.step).collect();
    assert_eq!(near.len(), 1);
    assert!(near[0].max_residual() < 1e-3);
    assert!(out.hits.windows(2).all(|w| w[0].tau < w[1].tau));
}

#[test]
fn self_referential_zeta_scan() {
    let start = Instant::now();
    let b = zeta_derivatives(3, Complex64::new(0.75, 777.7), 0.25).unwrap();
    let window = ScanWindow::new(770.0, 16.0, 1e-3).unwrap();
    let out = scan_theorem3(&b, 0.75, &window).unwrap();
    eprintln!("{} hits in {:?}: {:?}", out.hits.len(), start.elapsed(), out.hits);
    assert!(out.hits.iter().any(|h| (h.tau - 777.7).abs() < window.step && h.max_residual() < 1e-3));
}

#[test]
fn zeta_comes_near_one() {
    let window = ScanWindow::new(1e4, 25.0, 0.1).unwrap();
    let out = scan_theorem3(&[Complex64::new(1.0, 0.0)], 0.9, &window).unwrap();
    eprintln!("{} hits, density {}", out.hits.len(), density_estimate(&out, &window));
    assert!(!out.hits.is_empty());
    for h in &out.hits {
        let v = zeta_value(Complex64::new(0.9, h.tau)).unwrap();
        assert!((v - 1.0).norm() < 0.1);
    }
}

#[test]
fn eps_monotonicity() {
    let window_a = ScanWindow::new(1e4, 25.0, 0.1).unwrap();
    let window_b = ScanWindow::new(1e4, 25.0, 0.2).unwrap();
    let b = [Complex64::new(1.0, 0.0)];
    let a = scan_theorem3(&b, 0.9, &window_a).unwrap();
    let wide = scan_theorem3(&b, 0.9, &window_b).unwrap();
    assert!(a.grid_below <= wide.grid_below);
    assert!(density_estimate(&a, &window_a) <= density_estimate(&wide, &window_b));
    for h in &a.hits {
        assert!(wide.hits.iter().any(|w| (w.tau - h.tau).abs() < window_a.step));
    }
}

#[test]
fn scan_is_thread_count_independent() {
    let b = [Complex64::new(1.0, 0.0)];
    let window = ScanWindow::new(1e4, 25.0, 0.1).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| scan_theorem3(&b, 0.9, &window).unwrap())
    };
    let one = serde_json::to_string(&run(1)).unwrap();
    let four = serde_json::to_string(&run(4)).unwrap();
    assert_eq!(one, four);
}

#[test]
fn zeta_taylor_two_ways() {
    let tau = 300.0;
    let g = builtin_target("zeta-shift:300").unwrap();
    let s0 = Complex64::new(0.75, 0.0);
    let a = taylor_coeffs(&g, s0, 0.1, 6).unwrap();
    let b = zeta_derivatives(6, s0 + Complex64::new(0.0, tau), 0.25).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-7 * (1.0 + y.norm()), "{x} vs {y}");
    }
}

#[test]
fn self_referential_universality() {
    let start = Instant::now();
    let target = UniversalityTarget::builtin("zeta-shift:300", Complex64::new(0.75, 0.0), 0.125, 0.5, 0.05).unwrap();
    let window = ScanWindow::new(295.0, 10.0, 0.05).unwrap();
    let report = universality_pipeline(&target, &window).unwrap();
    eprintln!("{:?}\n{:?}", report, start.elapsed());
    let hit = report
        .hits
        .iter()
        .find(|h| (h.tau - 300.0).abs() < window.step)
        .expect("hit near 300");
    assert!(hit.verdict && hit.sup_diff < 0.05);
    let third = 0.05 / 3.0;
    assert!(hit.budgets.e91 < third && hit.budgets.e92 < third && hit.budgets.e93 < third);
    assert!(report.hits.iter().all(|h| h.sound && h.chain_holds));
}
