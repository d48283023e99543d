use super::fft::{fft_forward, fft_inverse, signed_mode};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Finite expansion `g(x) = Σ_m a_m e^{iμ_m (x - x0)}` with `μ_m = (twist + 2πm)/period`.
///
/// Samples live at `x0 + (j + offset)·period/n` for `j < n`, and `m` runs over
/// `[-n/2, n/2)`. With `twist = 0` this is ordinary periodic trigonometric
/// interpolation; a nonzero twist gives functions obeying
/// `g(x + period) = e^{i·twist} g(x)`. The modes are exactly the eigenfunctions
/// of `-i d/dx` under that twisted boundary condition.
#[derive(Debug, Clone)]
pub struct ModeExpansion {
    x0: f64,
    period: f64,
    twist: f64,
    offset: f64,
    /// Coefficients in FFT bin order.
    coeffs: Vec<Complex64>,
}

impl ModeExpansion {
    pub fn from_samples(samples: &[Complex64], x0: f64, period: f64, twist: f64, offset: f64) -> Self {
        let n = samples.len();
        let nf = n as f64;
        let mut buf: Vec<Complex64> = samples
            .iter()
            .enumerate()
            .map(|(j, g)| g * Complex64::from_polar(1.0, -twist * (j as f64 + offset) / nf))
            .collect();
        fft_forward(&mut buf);
        for (k, a) in buf.iter_mut().enumerate() {
            let m = signed_mode(k, n) as f64;
            *a *= Complex64::from_polar(1.0 / nf, -2.0 * PI * m * offset / nf);
        }
        Self { x0, period, twist, offset, coeffs: buf }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Frequency `μ_m` of FFT bin `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        let m = signed_mode(k, self.coeffs.len()) as f64;
        (self.twist + 2.0 * PI * m) / self.period
    }

    /// Multiplies each coefficient by `f(μ)`.
    pub fn apply_multiplier(&mut self, f: impl Fn(f64) -> Complex64) {
        for k in 0..self.coeffs.len() {
            let mu = self.frequency(k);
            self.coeffs[k] *= f(mu);
        }
    }

    /// Translation `g ↦ g(· + s)`.
    pub fn translate(&mut self, s: f64) {
        self.apply_multiplier(|mu| Complex64::from_polar(1.0, mu * s));
    }

    /// Values back on the sample nodes.
    pub fn to_samples(&self) -> Vec<Complex64> {
        let n = self.coeffs.len();
        let nf = n as f64;
        let mut buf: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let m = signed_mode(k, n) as f64;
                a * Complex64::from_polar(nf, 2.0 * PI * m * self.offset / nf)
            })
            .collect();
        fft_inverse(&mut buf);
        for (j, g) in buf.iter_mut().enumerate() {
            *g *= Complex64::from_polar(1.0, self.twist * (j as f64 + self.offset) / nf);
        }
        buf
    }

    /// Direct evaluation of the expansion at an arbitrary point.
    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.coeffs.len();
        let u = x - self.x0;
        let half = (n / 2) as i64;
        // Walk m = -n/2 .. n/2-1 with a rotating phasor.
        let mut phase = Complex64::from_polar(1.0, (self.twist - 2.0 * PI * half as f64) * u / self.period);
        let step = Complex64::from_polar(1.0, 2.0 * PI * u / self.period);
        let mut acc = Complex64::new(0.0, 0.0);
        for m in -half..(n as i64 - half) {
            let k = if m < 0 { (m + n as i64) as usize } else { m as usize };
            acc += self.coeffs[k] * phase;
            phase *= step;
        }
        acc
    }

    /// Fraction of the coefficient energy in the outer quarter of the band
    /// (square root of the energy ratio).
    pub fn tail_fraction(&self) -> f64 {
        let n = self.coeffs.len();
        let cut = (3 * n / 8) as i64;
        let mut total = 0.0;
        let mut tail = 0.0;
        for (k, a) in self.coeffs.iter().enumerate() {
            let e = a.norm_sqr();
            total += e;
            if signed_mode(k, n).abs() >= cut {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            (tail / total).sqrt()
        }
    }

    /// Largest `|μ|` among modes whose coefficient exceeds `rel` times the largest one.
    pub fn resolved_max_frequency(&self, rel: f64) -> f64 {
        let amax = self.coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if amax == 0.0 {
            return 0.0;
        }
        (0..self.coeffs.len())
            .filter(|&k| self.coeffs[k].norm() > rel * amax)
            .map(|k| self.frequency(k).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize, x0: f64, period: f64, offset: f64) -> Vec<f64> {
        (0..n).map(|j| x0 + (j as f64 + offset) * period / n as f64).collect()
    }

    #[test]
    fn samples_round_trip() {
        let n = 32;
        let xs = nodes(n, -1.0, 2.0, 0.5);
        let g: Vec<Complex64> = xs
            .iter()
            .map(|x| Complex64::new((-4.0 * x * x).exp(), 0.3 * x))
            .collect();
        let e = ModeExpansion::from_samples(&g, -1.0, 2.0, 0.7, 0.5);
        for (a, b) in e.to_samples().iter().zip(&g) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn eval_interpolates_the_samples() {
        let n = 16;
        let xs = nodes(n, 0.0, 3.0, 0.0);
        let g: Vec<Complex64> = xs.iter().map(|x| Complex64::new(x.cos(), x.sin() * 0.2)).collect();
        let e = ModeExpansion::from_samples(&g, 0.0, 3.0, 1.1, 0.0);
        for (x, v) in xs.iter().zip(&g) {
            assert!((e.eval(*x) - v).norm() < 1e-12);
        }
    }

    #[test]
    fn single_twisted_mode_is_reproduced_off_grid() {
        // a pure mode e^{iμ_2 (x-x0)} must be represented by one coefficient
        let (n, x0, period, twist) = (8, -0.5, 2.0, 0.9);
        let mu = (twist + 2.0 * PI * 2.0) / period;
        let xs = nodes(n, x0, period, 0.5);
        let g: Vec<Complex64> = xs.iter().map(|x| Complex64::from_polar(1.0, mu * (x - x0))).collect();
        let e = ModeExpansion::from_samples(&g, x0, period, twist, 0.5);
        assert!((e.coeffs()[2] - 1.0).norm() < 1e-14);
        let x = 0.1234;
        assert!((e.eval(x) - Complex64::from_polar(1.0, mu * (x - x0))).norm() < 1e-13);
        let y = x + period;
        assert!((e.eval(y) - Complex64::from_polar(1.0, twist) * e.eval(x)).norm() < 1e-13);
    }

    #[test]
    fn translation_matches_evaluation() {
        let n = 64;
        let xs = nodes(n, -4.0, 8.0, 0.0);
        let g: Vec<Complex64> = xs.iter().map(|x| Complex64::new((-x * x).exp(), 0.0)).collect();
        let mut e = ModeExpansion::from_samples(&g, -4.0, 8.0, 0.0, 0.0);
        let shifted_direct: Vec<Complex64> = xs.iter().map(|x| e.eval(x + 0.37)).collect();
        e.translate(0.37);
        for (a, b) in e.to_samples().iter().zip(&shifted_direct) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
