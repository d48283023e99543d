//! Numerical building blocks shared by the operator modules.

mod fft;
mod modes;
mod pchip;
mod quadrature;
mod si;

pub use fft::{fft_forward, fft_inverse, signed_mode};
pub use modes::ModeExpansion;
pub use pchip::MonotoneCubic;
pub use quadrature::{gauss_legendre, simpson_weights};
pub use si::sine_integral;

/// `sin(x)/x`, with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_continuous_at_the_switch() {
        let a = sinc(0.999_999e-4);
        let b = sinc(1.000_001e-4);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn slope_of_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        assert!((ls_slope(&x, &y) + 0.5).abs() < 1e-14);
    }
}
