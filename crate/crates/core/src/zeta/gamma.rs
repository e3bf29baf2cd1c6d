use std::f64::consts::PI;

use num_complex::Complex64;

use super::b2k_over_fact;

const LN_2PI_HALF: f64 = 0.918_938_533_204_672_8;

/// log Gamma(z), continuous along paths in the right half plane and obtained
/// by reflection for Re z < 1/2. Branch agrees with the standard log-gamma
/// for Im z >= 0 away from the negative real axis.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // log Gamma(z) = log pi - log sin(pi z) - log Gamma(1 - z)
        return Complex64::new(PI.ln(), 0.0) - ln_sin(z * PI) - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let mut shift = Complex64::new(0.0, 0.0);
    let mut w = z;
    while w.norm() < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    // Stirling series
    let mut series = Complex64::new(0.0, 0.0);
    let inv = 1.0 / w;
    let inv2 = inv * inv;
    let mut p = inv;
    for k in 1..=12 {
        let kk = k as f64;
        series += p * (b2k_over_fact(k) * crate::quad::factorial(2 * k) / (2.0 * kk * (2.0 * kk - 1.0)));
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + LN_2PI_HALF + series - shift
}

/// log sin(z) modulo 2 pi i, stable for large |Im z|.
pub fn ln_sin(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.im > 10.0 {
        // sin z = e^{-iz} (e^{2iz} - 1) / (2i)
        -i * z + ((2.0 * i * z).exp() - 1.0).ln() - (2.0 * i).ln()
    } else if z.im < -10.0 {
        // sin z = e^{iz} (1 - e^{-2iz}) / (2i)
        i * z + (1.0 - (-2.0 * i * z).exp()).ln() - (2.0 * i).ln()
    } else {
        z.sin().ln()
    }
}

/// log chi(s) modulo 2 pi i, where zeta(s) = chi(s) zeta(1 - s) and
/// chi(s) = 2^s pi^(s-1) sin(pi s / 2) Gamma(1 - s).
pub fn ln_chi(s: Complex64) -> Complex64 {
    s * 2f64.ln() + (s - 1.0) * PI.ln() + ln_sin(s * (PI / 2.0)) + ln_gamma(1.0 - s)
}

/// Riemann-Siegel theta: Im log Gamma(1/4 + it/2) - (t/2) log pi.
pub fn hardy_theta(t: f64) -> f64 {
    ln_gamma(Complex64::new(0.25, 0.5 * t)).im - 0.5 * t * PI.ln()
}

/// Hardy's Z(t) = e^{i theta(t)} zeta(1/2 + it), real for real t.
pub fn hardy_z(t: f64) -> crate::error::Result<f64> {
    let z = super::zeta_value(Complex64::new(0.5, t))?;
    Ok((Complex64::from_polar(1.0, hardy_theta(t)) * z).re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_integers_and_half() {
        assert!((ln_gamma(Complex64::new(5.0, 0.0)).re - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(Complex64::new(0.5, 0.0)).re - 0.5 * PI.ln()).abs() < 1e-13);
        // Gamma(-0.5) = -2 sqrt(pi)
        let g = ln_gamma(Complex64::new(-0.5, 0.0)).exp();
        assert!((g.re + 2.0 * PI.sqrt()).abs() < 1e-12, "{g}");
    }

    #[test]
    fn gamma_recurrence_complex() {
        let z = Complex64::new(0.3, 7.5);
        let lhs = (ln_gamma(z + 1.0) - ln_gamma(z) - z.ln()).exp();
        assert!((lhs - 1.0).norm() < 1e-12);
    }

    #[test]
    fn theta_asymptotic() {
        // theta(t) ~ t/2 log(t/2pi) - t/2 - pi/8 + 1/(48t) + 7/(5760 t^3)
        let t: f64 = 100.0;
        let asym = t / 2.0 * (t / (2.0 * PI)).ln() - t / 2.0 - PI / 8.0 + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t.powi(3));
        assert!((hardy_theta(t) - asym).abs() < 1e-9);
    }

    #[test]
    fn ln_sin_far_from_axis() {
        let z = Complex64::new(0.7, 30.0);
        let direct = z.sin();
        let via = ln_sin(z).exp();
        assert!(((via - direct) / direct).norm() < 1e-12);
    }
}
