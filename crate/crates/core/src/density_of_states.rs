//! Spectral measures and densities of states.
//!
//! With `ℱ₁` the partial Fourier transform in `x₁` (unitary convention
//! `(2π)^{-1/2}∫ f e^{-ix₁ξ₁}dx₁`), `H₁` is multiplication by `ψ(x′)ξ₁`, so
//!
//! ```text
//! (E(λ)f, g) = ∫ dx′ ∫_{ψξ₁ ≤ λ} ℱ₁f · conj ℱ₁g dξ₁.
//! ```
//!
//! The density is computed twice, independently:
//!
//! * as a Richardson-extrapolated difference quotient of the cumulative
//!   measure, which is evaluated in closed form from the sample
//!   autocorrelation of the band-limited interpolant;
//! * as the surface integral over `Γ_λ = {ψξ₁ = λ}`. Parametrising `Γ_λ` by
//!   `x′ ↦ (λ/ψ(x′), x′)` gives `dS = (1 + λ²|∇ψ|²/ψ⁴)^{1/2} dx′` and
//!   `|∇(ψξ₁)| = ψ(1 + λ²|∇ψ|²/ψ⁴)^{1/2}`, so the integrand reduces to
//!   `ℱ₁f·conj ℱ₁g (λ/ψ, x′) / ψ(x′)`. The off-grid values of `ℱ₁f` come from
//!   the exact transform of the band-limited interpolant.

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::field_model::ShearProfile;
use crate::grid::{FiberSlot, GridField, Layout};
pub use crate::grid::{NormFlavor, NormSpec};
use crate::numerics::{fft_forward, fft_inverse};
use crate::spectrum_assembly::spectral_gap;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const DEFAULT_CDF_STEP: f64 = 1e-3;

fn inv_sqrt_2pi() -> f64 {
    1.0 / TAU.sqrt()
}

fn require_uniform(layout: &Layout) -> Result<()> {
    if layout.has_weighted_fibers() {
        return Err(Error::Precondition("partial Fourier transforms need a uniform x1 grid on every fiber".into()));
    }
    Ok(())
}

/// `ℱ₁f` on the DFT frequencies `ξ_m = 2πm/(Nh)`, `m = -N/2..N/2-1`, ascending.
#[derive(Debug, Clone)]
pub struct FrequencyField {
    layout: Arc<Layout>,
    pub xi: Vec<f64>,
    pub values: Vec<Vec<Complex64>>,
}

impl FrequencyField {
    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// `Σ q ∫ |ℱ₁f|² dξ` by the rectangle rule on the frequency grid.
    pub fn norm(&self) -> f64 {
        let dxi = self.xi[1] - self.xi[0];
        self.layout
            .slots
            .iter()
            .zip(&self.values)
            .map(|(s, v)| s.quad_weight * dxi * v.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

fn frequencies(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| TAU * (i as f64 - (n / 2) as f64) / (n as f64 * h)).collect()
}

pub fn partial_fourier(f: &GridField) -> Result<FrequencyField> {
    let layout = f.layout().clone();
    require_uniform(&layout)?;
    let n = layout.spec.n;
    let h = layout.spec.step();
    let x0 = layout.spec.half_width;
    let xi = frequencies(n, h);
    let values = f
        .values()
        .par_iter()
        .map(|v| {
            let mut buf = v.clone();
            fft_forward(&mut buf);
            (0..n)
                .map(|i| {
                    let k = (i + n / 2) % n;
                    buf[k] * Complex64::from_polar(h * inv_sqrt_2pi(), xi[i] * x0)
                })
                .collect()
        })
        .collect();
    Ok(FrequencyField { layout, xi, values })
}

pub fn inverse_partial_fourier(ff: &FrequencyField) -> Result<GridField> {
    let layout = ff.layout.clone();
    let n = layout.spec.n;
    let h = layout.spec.step();
    let x0 = layout.spec.half_width;
    let values = ff
        .values
        .par_iter()
        .map(|v| {
            let mut buf = vec![ZERO; n];
            for (i, (vi, xi)) in v.iter().zip(&ff.xi).enumerate() {
                buf[(i + n / 2) % n] = vi * Complex64::from_polar(TAU.sqrt() / h, -xi * x0);
            }
            fft_inverse(&mut buf);
            buf
        })
        .collect();
    GridField::from_values(&layout, values)
}

/// `(h/√2π) Σ_j f_j e^{-iξ x_j}` with `x_j = x0 + jh`.
pub fn transform_at(samples: &[Complex64], x0: f64, h: f64, xi: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -xi * h);
    let mut phase = Complex64::from_polar(1.0, -xi * x0);
    let mut acc = ZERO;
    for (j, f) in samples.iter().enumerate() {
        if j % 256 == 0 {
            phase = Complex64::from_polar(1.0, -xi * (x0 + j as f64 * h));
        }
        acc += f * phase;
        phase *= step;
    }
    acc * (h * inv_sqrt_2pi())
}

/// Surface element and `|∇(ψξ₁)|` on `Γ_λ` above `x′`, evaluated separately.
pub fn surface_factors(profile: &ShearProfile, lambda: f64, x: &[f64]) -> Result<(f64, f64)> {
    let psi = profile.evaluate(x)?;
    let grad = profile.gradient(x)?;
    let xi = lambda / psi;
    // ∇_{x′}(λ/ψ) = -λ∇ψ/ψ²
    let graph_slope2: f64 = grad.iter().map(|g| (lambda * g / (psi * psi)).powi(2)).sum();
    let surface = (1.0 + graph_slope2).sqrt();
    let normal2: f64 = psi * psi + grad.iter().map(|g| (xi * g).powi(2)).sum::<f64>();
    Ok((surface, normal2.sqrt()))
}

/// `L_Γ = |λ|L/ℓ²`.
pub fn l_gamma(profile: &ShearProfile, lambda: f64) -> f64 {
    lambda.abs() * profile.lipschitz / (profile.ell * profile.ell)
}

/// Closed-form cumulative measure of one fiber pair.
///
/// `ℱ₁f·conj ℱ₁g (ξ) = (h²/2π) Σ_m c_m e^{-iξmh}` on `|ξ| ≤ π/h` with
/// `c_m = Σ_l f_{l+m} ḡ_l`; the band-limited interpolant has no spectrum
/// outside that band.
#[derive(Debug, Clone)]
struct FiberCdf {
    psi: f64,
    q: f64,
    h: f64,
    /// `c_m` for `m = -(N-1)..=N-1`, stored at `m + N - 1`.
    corr: Vec<Complex64>,
}

impl FiberCdf {
    fn new(slot: &FiberSlot, h: f64, f: &[Complex64], g: &[Complex64]) -> Self {
        let n = f.len();
        let size = 2 * n;
        let mut a = vec![ZERO; size];
        let mut b = vec![ZERO; size];
        a[..n].copy_from_slice(f);
        b[..n].copy_from_slice(g);
        fft_forward(&mut a);
        fft_forward(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y.conj();
        }
        fft_inverse(&mut a);
        let corr = (0..2 * n - 1)
            .map(|i| {
                let m = i as i64 - (n as i64 - 1);
                a[m.rem_euclid(size as i64) as usize]
            })
            .collect();
        Self { psi: slot.op.psi(), q: slot.quad_weight, h, corr }
    }

    /// `∫_{-π/h}^{Ξ} ℱ₁f conj ℱ₁g dξ`.
    fn cumulative(&self, xi: f64) -> Complex64 {
        let band = PI / self.h;
        if xi <= -band {
            return ZERO;
        }
        let n = self.corr.len().div_ceil(2);
        let xi = xi.min(band);
        let mut acc = self.corr[n - 1] * (xi + band);
        for (i, c) in self.corr.iter().enumerate() {
            let m = i as i64 - (n as i64 - 1);
            if m == 0 {
                continue;
            }
            let mh = m as f64 * self.h;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let prim = (Complex64::from_polar(1.0, -xi * mh) - sign) / Complex64::new(0.0, -mh);
            acc += c * prim;
        }
        acc * (self.h * self.h / TAU)
    }

    fn at(&self, lambda: ExtendedReal) -> Complex64 {
        let full = self.corr[(self.corr.len() - 1) / 2] * self.h;
        let v = match lambda {
            ExtendedReal::NegInf => ZERO,
            ExtendedReal::PosInf => full,
            ExtendedReal::Finite(l) => self.cumulative(l / self.psi),
        };
        v * self.q
    }
}

/// Cumulative spectral measure `λ ↦ (E(λ)f, g)` over a chosen set of fibers.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    fibers: Vec<FiberCdf>,
}

impl SpectralMeasure {
    /// Uses every fiber for which `keep` holds.
    pub fn new(f: &GridField, g: &GridField, keep: impl Fn(&FiberSlot) -> bool + Sync) -> Result<Self> {
        let layout = f.layout();
        if !Arc::ptr_eq(layout, g.layout()) {
            return Err(Error::Precondition("fields live on different layouts".into()));
        }
        let h = layout.spec.step();
        let fibers = layout
            .slots
            .par_iter()
            .enumerate()
            .filter(|(_, s)| keep(s))
            .map(|(i, s)| {
                if s.is_weighted() {
                    return Err(Error::Precondition("the cumulative measure is taken over unweighted fibers".into()));
                }
                Ok(FiberCdf::new(s, h, f.fiber(i), g.fiber(i)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { fibers })
    }

    pub fn at(&self, lambda: ExtendedReal) -> Complex64 {
        self.fibers.iter().map(|c| c.at(lambda)).sum()
    }

    /// `(4D(h) - D(2h))/3` with `D` the central difference quotient.
    pub fn derivative(&self, lambda: f64, step: f64) -> Complex64 {
        let d = |s: f64| (self.at((lambda + s).into()) - self.at((lambda - s).into())) / (2.0 * s);
        (d(step) * 4.0 - d(2.0 * step)) / 3.0
    }
}

/// `(E(λ)f, g)` for `H₁` on an unweighted layout.
pub fn spectral_cdf(f: &GridField, g: &GridField, lambda: ExtendedReal) -> Result<Complex64> {
    require_uniform(f.layout())?;
    Ok(SpectralMeasure::new(f, g, |_| true)?.at(lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosOptions {
    /// Step of the Richardson difference quotient.
    pub cdf_step: f64,
    pub norm: NormSpec,
}

impl DosOptions {
    pub fn new(sigma: f64) -> Result<Self> {
        Ok(Self { cdf_step: DEFAULT_CDF_STEP, norm: NormSpec::trace_class(sigma, NormFlavor::XSigma)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConstants {
    pub ell: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    #[serde(rename = "L_Gamma")]
    pub l_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensityReport {
    pub lambda: f64,
    pub value_surface: Complex64,
    pub value_cdf_derivative: Complex64,
    /// `(1 + L_Γ)‖f‖_σ‖g‖_σ`.
    pub bound_rhs: f64,
    pub constants: DensityConstants,
    /// `|value_surface - value_cdf_derivative|`.
    pub discrepancy: f64,
}

fn surface_sum(f: &GridField, g: &GridField, lambda: f64, keep: &(dyn Fn(&FiberSlot) -> bool + Sync)) -> Result<Complex64> {
    let layout = f.layout();
    let h = layout.spec.step();
    let x0 = -layout.spec.half_width;
    let band = PI / h;
    let parts = layout
        .slots
        .par_iter()
        .enumerate()
        .filter(|(_, s)| keep(s))
        .map(|(i, s)| {
            let psi = s.op.psi();
            let xi = lambda / psi;
            if xi.abs() > band {
                return Err(Error::BandExceeded { xi, band });
            }
            let a = transform_at(f.fiber(i), x0, h, xi);
            let b = transform_at(g.fiber(i), x0, h, xi);
            Ok(a * b.conj() * (s.quad_weight / psi))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().sum())
}

fn report(
    f: &GridField,
    g: &GridField,
    lambda: f64,
    opts: &DosOptions,
    keep: &(dyn Fn(&FiberSlot) -> bool + Sync),
) -> Result<SpectralDensityReport> {
    let profile = &f.layout().profile;
    let value_surface = surface_sum(f, g, lambda, keep)?;
    let band = PI / f.layout().spec.step();
    let reach = lambda.abs() + 2.0 * opts.cdf_step;
    if reach / profile.ell > band {
        return Err(Error::BandExceeded { xi: reach / profile.ell, band });
    }
    let measure = SpectralMeasure::new(f, g, keep)?;
    let value_cdf_derivative = measure.derivative(lambda, opts.cdf_step);
    let lg = l_gamma(profile, lambda);
    Ok(SpectralDensityReport {
        lambda,
        value_surface,
        value_cdf_derivative,
        bound_rhs: (1.0 + lg) * f.norm(&opts.norm) * g.norm(&opts.norm),
        constants: DensityConstants { ell: profile.ell, lipschitz: profile.lipschitz, l_gamma: lg },
        discrepancy: (value_surface - value_cdf_derivative).norm(),
    })
}

/// Density of states of `H₁` at `λ₀` for the pair `(f, g)`.
pub fn dos_surface(f: &GridField, g: &GridField, lambda0: f64, opts: &DosOptions) -> Result<SpectralDensityReport> {
    require_uniform(f.layout())?;
    if !Arc::ptr_eq(f.layout(), g.layout()) {
        return Err(Error::Precondition("fields live on different layouts".into()));
    }
    report(f, g, lambda0, opts, &|_| true)
}

/// Density of states of `H_w` inside the spectral gap.
///
/// Confined fibers have pure point spectrum away from `(-δ, δ)∖{0}` and so
/// contribute nothing there; the density is the surface integral over the
/// unweighted fibers alone. `opts.norm` should be a `𝒴^σ` norm.
pub fn dos_weighted(f: &GridField, g: &GridField, lambda0: f64, opts: &DosOptions) -> Result<SpectralDensityReport> {
    let layout = f.layout();
    if !Arc::ptr_eq(layout, g.layout()) {
        return Err(Error::Precondition("fields live on different layouts".into()));
    }
    let delta = spectral_gap(&layout.profile, &layout.weight, &layout.phase)?;
    if lambda0 == 0.0 || lambda0.abs() >= delta {
        return Err(Error::OutsideGap { lambda: lambda0, delta });
    }
    if lambda0.abs() + 2.0 * opts.cdf_step >= delta {
        return Err(Error::OutsideGap { lambda: lambda0 + 2.0 * opts.cdf_step * lambda0.signum(), delta });
    }
    report(f, g, lambda0, opts, &|s| !s.is_weighted())
}

/// Evaluates `dos_surface` (or `dos_weighted`) over a λ sweep.
pub fn dos_sweep(
    f: &GridField,
    g: &GridField,
    lambdas: &[f64],
    opts: &DosOptions,
    weighted: bool,
) -> Result<Vec<SpectralDensityReport>> {
    lambdas
        .iter()
        .map(|&l| if weighted { dos_weighted(f, g, l, opts) } else { dos_surface(f, g, l, opts) })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosBoundCheck {
    pub lambdas: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs_shape: Vec<f64>,
    /// `sup lhs / rhs_shape` over the sweep.
    pub fitted_c: f64,
}

/// Compares the surface density with `(1 + L_Γ)‖f‖‖g‖` in the given norm.
pub fn verify_dos_bound(
    reports: &[SpectralDensityReport],
    f: &GridField,
    g: &GridField,
    norm: &NormSpec,
) -> Result<DosBoundCheck> {
    if norm.flavor != NormFlavor::PlainL2 && norm.flavor != NormFlavor::WeightedL2 && !(norm.sigma > 0.5) {
        return Err(Error::InvalidParameter("the density bound needs sigma > 1/2".into()));
    }
    let nf = f.norm(norm) * g.norm(norm);
    let profile = &f.layout().profile;
    let lambdas: Vec<f64> = reports.iter().map(|r| r.lambda).collect();
    let lhs: Vec<f64> = reports.iter().map(|r| r.value_surface.norm()).collect();
    let rhs_shape: Vec<f64> = lambdas.iter().map(|&l| (1.0 + l_gamma(profile, l)) * nf).collect();
    let fitted_c = lhs
        .iter()
        .zip(&rhs_shape)
        .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(DosBoundCheck { lambdas, lhs, rhs_shape, fitted_c })
}

/// `‖f‖` in the requested norm family.
pub fn norm(f: &GridField, spec: &NormSpec) -> f64 {
    f.norm(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::{BoundaryPhase, ConfinementRegion, FiberDomain, ProfileKind, WeightField, WeightKind};
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};

    fn line(n: usize) -> Arc<Layout> {
        let p = ShearProfile::constant(1.0, 0).unwrap();
        Layout::flat(&p, FiberDomain::new(0, 1.0).unwrap(), GridSpec::new(n, 12.0, 1).unwrap()).unwrap()
    }

    fn gauss(x: f64, xp: &[f64]) -> Complex64 {
        let r2: f64 = x * x + xp.iter().map(|v| v * v).sum::<f64>();
        Complex64::new((-0.5 * r2).exp(), 0.0)
    }

    #[test]
    fn gaussian_is_its_own_transform() {
        let f = GridField::from_fn(&line(1024), gauss);
        let ff = partial_fourier(&f).unwrap();
        for (xi, v) in ff.xi.iter().zip(&ff.values[0]) {
            assert!((v - Complex64::new((-0.5 * xi * xi).exp(), 0.0)).norm() < 1e-8, "{xi}");
        }
        let plain = NormSpec::new(0.0, NormFlavor::PlainL2).unwrap();
        assert!((ff.norm() - f.norm(&plain)).abs() < 1e-10);
        let back = inverse_partial_fourier(&ff).unwrap();
        assert!(back.max_abs_diff(&f).unwrap() < 1e-14);
        let z = partial_fourier(&GridField::zeros(&line(64))).unwrap();
        assert!(z.values[0].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn off_grid_transform_matches_fft_bins() {
        let f = GridField::from_fn(&line(256), |x, _| Complex64::new((-x * x).exp(), x.sin() * (-x * x).exp()));
        let ff = partial_fourier(&f).unwrap();
        for i in [0, 17, 128, 255] {
            let direct = transform_at(f.fiber(0), -12.0, 24.0 / 256.0, ff.xi[i]);
            assert!((direct - ff.values[0][i]).norm() < 1e-13);
        }
    }

    #[test]
    fn cumulative_measure_of_a_gaussian() {
        let f = GridField::from_fn(&line(1024), gauss);
        let sp = PI.sqrt();
        assert!((spectral_cdf(&f, &f, ExtendedReal::PosInf).unwrap().re - sp).abs() < 1e-12);
        assert_eq!(spectral_cdf(&f, &f, ExtendedReal::NegInf).unwrap(), ZERO);
        assert!((spectral_cdf(&f, &f, 0.0.into()).unwrap().re - 0.5 * sp).abs() < 1e-12);
        // closed form: (√π/2)(1 + erf λ)
        for l in [-2.0, -0.3, 0.7, 1.5] {
            let expect = 0.5 * sp * (1.0 + libm::erf(l));
            let got = spectral_cdf(&f, &f, l.into()).unwrap().re; assert!((got - expect).abs() < 1e-11, "{l} {got} {expect}");
        }
        let m = SpectralMeasure::new(&f, &f, |_| true).unwrap();
        let vals: Vec<f64> = (-60..=60).map(|i| m.at((i as f64 * 0.1).into()).re).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-13));
        // no atoms
        for l in [-1.0, 0.0, 2.0] {
            let jump = (m.at((l + 1e-7).into()) - m.at((l - 1e-7).into())).norm();
            assert!(jump < 1e-6);
        }
    }

    #[test]
    fn flat_density_is_gaussian() {
        let f = GridField::from_fn(&line(1024), gauss);
        let opts = DosOptions::new(1.0).unwrap();
        let r0 = dos_surface(&f, &f, 0.0, &opts).unwrap();
        assert!((r0.value_surface.re - 1.0).abs() < 1e-6);
        let r1 = dos_surface(&f, &f, 1.0, &opts).unwrap();
        assert!((r1.value_surface.re - (-1.0f64).exp()).abs() < 1e-8);
        assert!(r1.discrepancy < 1e-6);
        assert_eq!(r1.constants.l_gamma, 0.0);
        let nrm = f.norm(&opts.norm);
        assert!((r1.bound_rhs - nrm * nrm).abs() < 1e-14);
    }

    #[test]
    fn layered_density_matches_quadrature_of_the_trace() {
        let p = ShearProfile::new(ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 }, 1).unwrap();
        let l = Layout::flat(&p, FiberDomain::new(1, 6.0).unwrap(), GridSpec::new(256, 12.0, 64).unwrap()).unwrap();
        let f = GridField::from_fn(&l, gauss);
        let opts = DosOptions::new(1.0).unwrap();
        let r = dos_surface(&f, &f, 0.0, &opts).unwrap();
        let (nodes, weights) = crate::numerics::gauss_legendre(64);
        let exact: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(t, w)| {
                let x2 = 6.0 * t;
                6.0 * w * (-x2 * x2).exp() / (2.0 + x2.tanh())
            })
            .sum();
        assert!((r.value_surface.re - exact).abs() < 1e-9);
        assert!(r.discrepancy < 1e-6);
        let r2 = dos_surface(&f, &f, 1.5, &opts).unwrap();
        assert!((r2.constants.l_gamma - 1.5).abs() < 1e-15);
    }

    #[test]
    fn surface_factor_collapses_to_inverse_speed() {
        let p = ShearProfile::new(ProfileKind::BumpPlusFloor { floor: 1.0, height: 1.0, width: 1.0 }, 2).unwrap();
        let q = ShearProfile::new(ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.5 }, 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let lam = rng.random_range(-8.0..8.0);
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            for (prof, pt) in [(&p, &x[..]), (&q, &x[..1])] {
                let (ds, grad) = surface_factors(prof, lam, pt).unwrap();
                let psi = prof.evaluate(pt).unwrap();
                assert!((ds / grad * psi - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bilinearity_and_conjugate_symmetry() {
        let p = ShearProfile::new(ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 }, 1).unwrap();
        let l = Layout::flat(&p, FiberDomain::new(1, 5.0).unwrap(), GridSpec::new(128, 10.0, 16).unwrap()).unwrap();
        let f = GridField::from_fn(&l, gauss);
        let g = GridField::from_fn(&l, |x, xp| Complex64::new(0.0, x) * gauss(x - 0.5, xp));
        let opts = DosOptions::new(1.0).unwrap();
        let fg = dos_surface(&f, &g, 0.8, &opts).unwrap();
        let gf = dos_surface(&g, &f, 0.8, &opts).unwrap();
        assert!((fg.value_surface - gf.value_surface.conj()).norm() < 1e-14);
        let c = Complex64::new(-2.0, 1.0);
        let cf = dos_surface(&f.scale(c), &g, 0.8, &opts).unwrap();
        assert!((cf.value_surface - fg.value_surface * c).norm() < 1e-13);
        let ca = verify_dos_bound(&[fg], &f, &g, &opts.norm).unwrap();
        let cb = verify_dos_bound(&[cf], &f.scale(c), &g, &opts.norm).unwrap();
        assert!((cb.lhs[0] / ca.lhs[0] - c.norm()).abs() < 1e-12);
        assert!((cb.rhs_shape[0] / ca.rhs_shape[0] - c.norm()).abs() < 1e-12);
    }

    #[test]
    fn weighted_density_in_the_gap() {
        let p = ShearProfile::constant(1.0, 1).unwrap();
        let dom = FiberDomain::new(1, 4.0).unwrap();
        let spec = GridSpec::new(256, 12.0, 8).unwrap();
        let kind = WeightKind::ExponentialDecay { rate: 1.0 };
        let phase = BoundaryPhase::constant(0.0);
        let ysig = NormSpec::trace_class(1.0, NormFlavor::YSigma).unwrap();
        let opts = DosOptions { cdf_step: 1e-3, norm: ysig };

        let full = WeightField::new(kind.clone(), ConfinementRegion::Full, Some(2.0)).unwrap();
        let lf = Layout::new(&p, &full, &phase, dom, spec).unwrap();
        let f = GridField::from_fn(&lf, gauss);
        let r = dos_weighted(&f, &f, 0.5, &opts).unwrap();
        assert_eq!(r.value_surface, ZERO);
        assert_eq!(r.value_cdf_derivative, ZERO);
        assert!(matches!(dos_weighted(&f, &f, 0.0, &opts), Err(Error::OutsideGap { .. })));
        assert!(matches!(dos_weighted(&f, &f, 3.2, &opts), Err(Error::OutsideGap { .. })));

        // S = right half: equals the flat density of the data restricted to the left half
        let half = WeightField::new(kind.clone(), ConfinementRegion::intervals(vec![(0.0, 4.0)]).unwrap(), Some(2.0)).unwrap();
        let lh = Layout::new(&p, &half, &phase, dom, spec).unwrap();
        let fh = GridField::from_fn(&lh, gauss);
        let rh = dos_weighted(&fh, &fh, 1.0, &opts).unwrap();
        let flat = Layout::flat(&p, dom, spec).unwrap();
        let left = GridField::from_fn(&flat, gauss).restrict(|s| s.point[0] < 0.0);
        let rl = dos_surface(&left, &left, 1.0, &opts).unwrap();
        assert!((rh.value_surface - rl.value_surface).norm() < 1e-14);
        assert!(rh.discrepancy < 1e-6);

        // S empty
        let none = WeightField::new(kind, ConfinementRegion::Empty, Some(2.0)).unwrap();
        let ln = Layout::new(&p, &none, &phase, FiberDomain::new(1, 4.0).unwrap(), spec).unwrap();
        let fe = GridField::from_fn(&ln, gauss);
        let re = dos_weighted(&fe, &fe, 1.0, &opts).unwrap();
        let ff = GridField::from_fn(&flat, gauss);
        let rf = dos_surface(&ff, &ff, 1.0, &opts).unwrap();
        assert_eq!(re.value_surface, rf.value_surface);

        let nob = WeightField::new(WeightKind::Gaussian { width: 1.0 }, ConfinementRegion::Full, None).unwrap();
        let lnb = Layout::new(&p, &nob, &phase, dom, spec).unwrap();
        let fnb = GridField::from_fn(&lnb, gauss);
        assert!(matches!(dos_weighted(&fnb, &fnb, 0.5, &opts), Err(Error::MissingBound)));
    }

    #[test]
    fn band_edge_is_reported() {
        let f = GridField::from_fn(&line(64), gauss);
        let opts = DosOptions::new(1.0).unwrap();
        assert!(matches!(dos_surface(&f, &f, 9.0, &opts), Err(Error::BandExceeded { .. })));
        assert!(DosOptions::new(0.5).is_err());
    }
}
