use zetascope::zeta::zeta_value;
use zetascope_demo::{omega_summary, scan_summary, zeta_summary};

#[test]
fn zeta_at_two() {
    let z = zeta_summary(2.0, 0.0, 3).unwrap();
    assert!((z.value.re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
    assert!(z.log_derivs.is_empty());
    let strip = zeta_summary(0.75, 100.0, 3).unwrap();
    assert_eq!(strip.log_derivs.len(), 3);
    assert!((strip.log_derivs[0].exp() - strip.value).norm() < 1e-9);
    assert!(zeta_summary(1.0, 0.0, 0).is_err());
}

#[test]
fn omega_from_text() {
    let o = omega_summary(0.75, "1,0.5-0.2i", 0.1).unwrap();
    assert_eq!(o.residuals.len(), 2);
    assert!(o.max_residual < 0.1);
    assert!(!o.phases.is_empty() && o.phases.len() <= 12);
    assert!(omega_summary(0.75, "1,2,3,4", 0.1).is_err());
    assert!(omega_summary(0.4, "1", 0.1).is_err());
}

#[test]
fn scan_near_one() {
    let s = scan_summary("1", 0.9, 1e4, 25.0, 0.1).unwrap();
    assert!(!s.hits.is_empty());
    for &(tau, _) in &s.hits {
        assert!((zeta_value(num_complex::Complex64::new(0.9, tau)).unwrap() - 1.0).norm() < 0.1);
    }
    let shortest = scan_summary("1", 0.9, 1e4, 0.0, 0.1).unwrap();
    assert!((shortest.h - 1e4f64.powf(27.0 / 82.0)).abs() < 1e-9);
    assert!(scan_summary("1", 0.9, 1e6, 1e6, 0.1).is_err());
}
