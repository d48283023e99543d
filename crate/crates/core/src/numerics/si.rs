use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`.
///
/// Power series below `|x| = 2`, otherwise the continued fraction for
/// `E₁(ix)` evaluated with the modified Lentz method.
pub fn sine_integral(x: f64) -> f64 {
    let t = x.abs();
    let value = if t < 2.0 {
        series(t)
    } else {
        continued_fraction(t)
    };
    value.copysign(x)
}

fn series(t: f64) -> f64 {
    let t2 = t * t;
    let mut term = t;
    let mut sum = t;
    let mut k = 1.0;
    loop {
        // term_k = (-1)^k t^{2k+1} / (2k+1)!
        term *= -t2 / ((2.0 * k) * (2.0 * k + 1.0));
        let add = term / (2.0 * k + 1.0);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
        k += 1.0;
    }
}

fn continued_fraction(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, t);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..100_000 {
        let a = -((i - 1) as f64).powi(2);
        b += Complex64::new(2.0, 0.0);
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    let cs = Complex64::new(t.cos(), -t.sin()) * h;
    FRAC_PI_2 + cs.im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_legendre;

    fn quad(x: f64) -> f64 {
        let (n, w) = gauss_legendre(40);
        let panels = (x.abs().ceil() as usize).max(1) * 4;
        let h = x / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let c = (p as f64 + 0.5) * h;
            for (t, wt) in n.iter().zip(&w) {
                let u = c + 0.5 * h * t;
                s += wt * 0.5 * h * crate::numerics::sinc(u);
            }
        }
        s
    }

    #[test]
    fn matches_quadrature_on_both_branches() {
        for x in [0.1, 1.0, 1.999, 2.001, 3.5, 10.0, 42.0, -7.0] {
            assert!((sine_integral(x) - quad(x)).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn large_argument_limit() {
        let x: f64 = 1e7;
        let asym = FRAC_PI_2 - x.cos() / x;
        assert!((sine_integral(x) - asym).abs() < 1e-13);
        assert_eq!(sine_integral(0.0), 0.0);
    }
}
