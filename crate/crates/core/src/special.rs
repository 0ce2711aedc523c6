//! Hankel functions of the first kind and the sinc function.

use num_complex::Complex64;

/// H₀⁽¹⁾(x) = J₀(x) + i Y₀(x) for x > 0.
pub fn hankel0(x: f64) -> Complex64 {
    Complex64::new(libm::j0(x), libm::y0(x))
}

/// H₁⁽¹⁾(x) = J₁(x) + i Y₁(x) for x > 0.
pub fn hankel1(x: f64) -> Complex64 {
    Complex64::new(libm::j1(x), libm::y1(x))
}

pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// sin(t)/t, with a short series near the origin.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 * (1.0 - t2 / 20.0)
    } else {
        t.sin() / t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sinc_series_matches_direct_form_at_switch() {
        let t = 1.0001e-4;
        assert_relative_eq!(sinc(t), t.sin() / t, epsilon = 1e-16);
        assert_relative_eq!(sinc(0.99e-4), (0.99e-4f64).sin() / 0.99e-4, epsilon = 1e-16);
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn hankel_reference_values() {
        // J0(1), Y0(1), J1(1), Y1(1) from standard tables
        let h0 = hankel0(1.0);
        assert_relative_eq!(h0.re, 0.765_197_686_557_966_6, epsilon = 1e-14);
        assert_relative_eq!(h0.im, 0.088_256_964_215_676_96, epsilon = 1e-14);
        let h1 = hankel1(1.0);
        assert_relative_eq!(h1.re, 0.440_050_585_744_933_5, epsilon = 1e-14);
        assert_relative_eq!(h1.im, -0.781_212_821_300_288_7, epsilon = 1e-14);
    }

    #[test]
    fn wronskian_holds() {
        for &x in &[0.1, 1.0, 3.7, 20.0, 150.0] {
            let w = libm::j1(x) * libm::y0(x) - libm::j0(x) * libm::y1(x);
            assert_relative_eq!(w, 2.0 / (std::f64::consts::PI * x), max_relative = 1e-10);
        }
    }
}
