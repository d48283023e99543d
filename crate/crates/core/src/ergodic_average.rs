//! Time averages `P_T = (2T)⁻¹∫_{-T}^{T} e^{itH_w}dt`, the kernel projection
//! `P_w`, and the rate at which `‖P_T - P_w‖` decays on `𝒴^σ`.
//!
//! Spectrally `P_T` is the filter `sinc(Tλ)`. On a confined fiber it acts on
//! the twisted Fourier modes in `y = Φ(x₁)`; on an unweighted fiber it is the
//! moving average of width `2Tψ`, applied to the band-limited interpolant
//! through the sine-integral kernel
//! `K(m) = (h/2πa)[Si(π(m + a/h)) - Si(π(m - a/h))]`, `a = Tψ`.

use crate::density_of_states::{dos_weighted, transform_at, DosOptions};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::fiber_ops::FiberAxis;
use crate::grid::{FiberSlot, GridField, Layout, NormFlavor, NormSpec};
use crate::numerics::{fft_forward, fft_inverse, gauss_legendre, ls_slope, simpson_weights, sinc, sine_integral, ModeExpansion};
use crate::spectrum_assembly::spectral_gap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const RATE_EXPONENT: f64 = -2.0 / 3.0;
pub const SLOPE_SLACK: f64 = 0.1;
/// `Δt·λ_max` used by the time quadrature (the admissible maximum is 0.1).
pub const DEFAULT_TIME_RESOLUTION: f64 = 0.05;
/// Proxies at or below this are roundoff.
pub const DEGENERATE_PROXY: f64 = 1e-13;
const MAX_TIME_NODES: usize = 10_000_000;
/// Modes below this fraction of the largest coefficient do not set the time step.
const RESOLVED_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageMethod {
    Spectral,
    Quadrature,
}

fn zero_phase_required(layout: &Layout) -> Result<()> {
    if layout.slots.iter().any(|s| s.is_weighted() && s.op.beta() != 0.0) {
        return Err(Error::Precondition("the kernel projection needs beta = 0".into()));
    }
    Ok(())
}

fn phi_expansion(s: &FiberSlot, v: &[Complex64]) -> ModeExpansion {
    let w = s.op.phi_map().map(|p| p.mass()).unwrap_or(f64::NAN);
    ModeExpansion::from_samples(v, -0.5 * w, w, s.op.beta(), 0.5)
}

/// `P_w f`: the fiberwise weighted mean on confined fibers, 0 elsewhere.
pub fn kernel_projection(f: &GridField) -> Result<GridField> {
    zero_phase_required(f.layout())?;
    f.map_fibers(|s, v| {
        if s.is_weighted() {
            // (1/W)∫ f w dx is the plain mean over y-midpoints
            let mean = v.iter().sum::<Complex64>() / v.len() as f64;
            Ok(vec![mean; v.len()])
        } else {
            Ok(vec![ZERO; v.len()])
        }
    })
}

/// Moving average of half width `a` of the band-limited interpolant on a uniform fiber.
fn moving_average(v: &[Complex64], h: f64, a: f64) -> Vec<Complex64> {
    let n = v.len();
    let size = 2 * n;
    let r = a / h;
    let mut kernel = vec![ZERO; size];
    let c = h / (2.0 * PI * a);
    for m in -(n as i64 - 1)..=(n as i64 - 1) {
        let mf = m as f64;
        let k = c * (sine_integral(PI * (mf + r)) - sine_integral(PI * (mf - r)));
        kernel[m.rem_euclid(size as i64) as usize] = Complex64::new(k, 0.0);
    }
    let mut data = vec![ZERO; size];
    data[..n].copy_from_slice(v);
    fft_forward(&mut kernel);
    fft_forward(&mut data);
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d *= k;
    }
    fft_inverse(&mut data);
    data.truncate(n);
    data
}

/// `Σ_i w_i e^{iλ t_i}` for composite Simpson nodes on `[a, a + len]`, per frequency.
fn simpson_phase_sums(a: f64, len: f64, dt_max: f64, freqs: &[f64]) -> Result<Vec<Complex64>> {
    if len <= 0.0 {
        return Ok(vec![ZERO; freqs.len()]);
    }
    let raw = (len / dt_max).ceil();
    if !raw.is_finite() || raw > MAX_TIME_NODES as f64 {
        return Err(Error::TimeStep(format!("{raw} time nodes needed on an interval of length {len}")));
    }
    let mut n = (raw as usize).max(2);
    n += n % 2;
    let h = len / n as f64;
    let w = simpson_weights(n, h);
    Ok(freqs
        .par_iter()
        .map(|&lam| {
            let step = Complex64::from_polar(1.0, lam * h);
            let mut phase = Complex64::new(1.0, 0.0);
            let mut acc = ZERO;
            for (i, wi) in w.iter().enumerate() {
                if i % 512 == 0 {
                    phase = Complex64::from_polar(1.0, lam * (a + i as f64 * h));
                }
                acc += phase * *wi;
                phase *= step;
            }
            acc
        })
        .collect())
}

fn time_step(lambda_max: f64, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0 && resolution <= 0.1) {
        return Err(Error::TimeStep(format!("dt*lambda_max = {resolution} exceeds 0.1")));
    }
    Ok(if lambda_max > 0.0 { resolution / lambda_max } else { f64::INFINITY })
}

fn quadrature_fiber(s: &FiberSlot, v: &[Complex64], t_half: f64, resolution: f64) -> Result<Vec<Complex64>> {
    let psi = s.op.psi();
    match s.axis {
        FiberAxis::Phi { .. } => {
            let mut e = phi_expansion(s, v);
            let lambdas: Vec<f64> = (0..e.len()).map(|k| psi * e.frequency(k)).collect();
            let dt = time_step(psi * e.resolved_max_frequency(RESOLVED_REL), resolution)?;
            let w = s.op.phi_map().map(|p| p.mass()).unwrap_or(f64::NAN);
            // G_{t+P} = α G_t with P = W/ψ: one period, then a geometric sum
            let period = w / psi;
            let q = (2.0 * t_half / period).floor();
            let rem = 2.0 * t_half - q * period;
            let dt = dt.min(period / 2.0);
            let one = simpson_phase_sums(-t_half, period.min(2.0 * t_half), dt, &lambdas)?;
            let tail = simpson_phase_sums(-t_half, rem, dt, &lambdas)?;
            let alpha = s.op.alpha();
            let alpha_q = Complex64::from_polar(1.0, s.op.beta() * q);
            let geo = if (alpha - 1.0).norm() < 1e-12 { Complex64::new(q, 0.0) } else { (1.0 - alpha_q) / (1.0 - alpha) };
            let (geo, alpha_q) = if q == 0.0 { (ZERO, Complex64::new(1.0, 0.0)) } else { (geo, alpha_q) };
            let scale = 1.0 / (2.0 * t_half);
            for (k, c) in e.coeffs_mut().iter_mut().enumerate() {
                let m = if q == 0.0 { one[k] } else { geo * one[k] + alpha_q * tail[k] };
                *c *= m * scale;
            }
            Ok(e.to_samples())
        }
        FiberAxis::Uniform { half_width, n } => {
            // zero-pad to a box of length 8X so that shifts up to 6X do not wrap
            let mut padded = vec![ZERO; 4 * n];
            padded[..n].copy_from_slice(v);
            let mut e = ModeExpansion::from_samples(&padded, -half_width, 8.0 * half_width, 0.0, 0.0);
            let lambdas: Vec<f64> = (0..e.len()).map(|k| psi * e.frequency(k)).collect();
            let dt = time_step(psi * e.resolved_max_frequency(RESOLVED_REL), resolution)?;
            // beyond |tψ| = 3X the data has left the box
            let cut = t_half.min(3.0 * half_width / psi);
            let sums = simpson_phase_sums(-cut, 2.0 * cut, dt.min(cut), &lambdas)?;
            let scale = 1.0 / (2.0 * t_half);
            for (c, m) in e.coeffs_mut().iter_mut().zip(&sums) {
                *c *= m * scale;
            }
            let mut out = e.to_samples();
            out.truncate(n);
            Ok(out)
        }
    }
}

/// `P_T f`.
pub fn time_average(f: &GridField, t_half: f64, method: AverageMethod) -> Result<GridField> {
    time_average_with(f, t_half, method, DEFAULT_TIME_RESOLUTION)
}

/// [`time_average`] with an explicit quadrature resolution `Δt·λ_max ≤ 0.1`.
pub fn time_average_with(f: &GridField, t_half: f64, method: AverageMethod, resolution: f64) -> Result<GridField> {
    if !(t_half > 0.0) || !t_half.is_finite() {
        return Err(Error::InvalidParameter(format!("T must be positive, got {t_half}")));
    }
    let h = f.layout().spec.step();
    f.map_fibers(|s, v| match method {
        AverageMethod::Spectral => match s.axis {
            FiberAxis::Phi { .. } => {
                let psi = s.op.psi();
                let mut e = phi_expansion(s, v);
                e.apply_multiplier(|mu| Complex64::new(sinc(t_half * psi * mu), 0.0));
                Ok(e.to_samples())
            }
            FiberAxis::Uniform { .. } => Ok(moving_average(v, h, t_half * s.op.psi())),
        },
        AverageMethod::Quadrature => quadrature_fiber(s, v, t_half, resolution),
    })
}

/// `(P_T - P_w) f`.
pub fn average_defect(f: &GridField, t_half: f64, method: AverageMethod) -> Result<GridField> {
    time_average(f, t_half, method)?.sub(&kernel_projection(f)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DictionaryOptions {
    pub sigma: f64,
    /// Bands along the first fiber coordinate.
    pub bands: usize,
    pub seed: u64,
}

impl DictionaryOptions {
    pub fn new(sigma: f64, seed: u64) -> Self {
        Self { sigma, bands: 2, seed }
    }
}

#[derive(Debug, Clone)]
pub struct DictionaryElement {
    pub label: String,
    pub field: GridField,
}

fn hermite_functions(u: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let h0 = PI.powf(-0.25) * (-0.5 * u * u).exp();
    out.push(h0);
    if count > 1 {
        out.push(2f64.sqrt() * u * h0);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * u * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

fn smooth_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Debug, Clone, Copy)]
enum Profile1d {
    Gauss(f64),
    Hermite(usize),
    Shift(f64),
}

impl Profile1d {
    fn eval(self, u: f64) -> f64 {
        match self {
            Profile1d::Gauss(w) => (-0.5 * (u / w).powi(2)).exp(),
            Profile1d::Hermite(k) => hermite_functions(u, k + 1)[k],
            Profile1d::Shift(c) => (-0.5 * (u - c).powi(2)).exp(),
        }
    }

    fn label(self) -> String {
        match self {
            Profile1d::Gauss(w) => format!("gauss-w{w}"),
            Profile1d::Hermite(k) => format!("hermite-{k}"),
            Profile1d::Shift(c) => format!("shift-c{c:.6}"),
        }
    }
}

/// `x₁` coordinate of the dictionary: `x₁` itself on unweighted fibers,
/// `tan(πΦ/W)` on confined ones so that the data is smooth in `y`.
fn dictionary_coordinate(s: &FiberSlot, x: f64) -> f64 {
    match s.op.phi_map() {
        Some(p) => p.stretched(x),
        None => x,
    }
}

fn band_factor(layout: &Layout, band: usize, bands: usize, point: &[f64]) -> f64 {
    let xh = layout.domain.half_width;
    match point.len() {
        0 => 1.0,
        dim => {
            let r = xh / bands as f64;
            let c = -xh + (band as f64 + 0.5) * 2.0 * r;
            let mut v = smooth_bump((point[0] - c) / r);
            if dim > 1 {
                v *= smooth_bump(point[1] / xh);
            }
            v
        }
    }
}

/// Gaussians of width 0.5, 1, 2, the first six Hermite functions and three
/// seeded unit-width translates, in each fiber band, normalised in `𝒴^σ`.
pub fn build_dictionary(layout: &Arc<Layout>, opts: &DictionaryOptions) -> Result<Vec<DictionaryElement>> {
    let norm = NormSpec::new(opts.sigma, NormFlavor::YSigma)?;
    let bands = if layout.domain.dim == 0 { 1 } else { opts.bands.max(1) };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut profiles: Vec<Profile1d> = [0.5, 1.0, 2.0].iter().map(|&w| Profile1d::Gauss(w)).collect();
    profiles.extend((0..6).map(Profile1d::Hermite));
    profiles.extend((0..3).map(|_| Profile1d::Shift(rng.random_range(-2.0..2.0))));
    let mut out = Vec::new();
    for band in 0..bands {
        for &p in &profiles {
            let field = GridField::from_slot_fn(layout, |s, x| {
                Complex64::new(p.eval(dictionary_coordinate(s, x)) * band_factor(layout, band, bands, &s.point), 0.0)
            });
            let n = field.norm(&norm);
            if n > 0.0 {
                out.push(DictionaryElement { label: format!("band{band}/{}", p.label()), field: field.scale(Complex64::new(1.0 / n, 0.0)) });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("dictionary is empty".into()));
    }
    Ok(out)
}

/// Fiber means in `S`: elements of the kernel of `H_w`.
pub fn kernel_dictionary(layout: &Arc<Layout>, sigma: f64) -> Result<Vec<DictionaryElement>> {
    let norm = NormSpec::new(sigma, NormFlavor::YSigma)?;
    let f = GridField::from_slot_fn(layout, |s, _| {
        Complex64::new(if s.is_weighted() { band_factor(layout, 0, 1, &s.point).max(1e-3) } else { 0.0 }, 0.0)
    });
    let n = f.norm(&norm);
    if n == 0.0 {
        return Err(Error::Precondition("no confined fibers".into()));
    }
    Ok(vec![DictionaryElement { label: "kernel".into(), field: f.scale(Complex64::new(1.0 / n, 0.0)) }])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyValue {
    pub value: f64,
    pub best_pair: (String, String),
}

/// `max |⟨(P_T - P_w)f, g⟩_w| / (‖f‖_{𝒴^σ}‖g‖_{𝒴^σ})` over dictionary pairs,
/// a lower bound for the operator norm on `ℬ(𝒴^σ, 𝒴^{-σ})`.
pub fn operator_norm_proxy(dict: &[DictionaryElement], t_half: f64, sigma: f64, method: AverageMethod) -> Result<ProxyValue> {
    if dict.is_empty() {
        return Err(Error::InvalidParameter("dictionary is empty".into()));
    }
    let norm = NormSpec::new(sigma, NormFlavor::YSigma)?;
    let norms: Vec<f64> = dict.iter().map(|d| d.field.norm(&norm)).collect();
    let defects = dict
        .par_iter()
        .map(|d| average_defect(&d.field, t_half, method))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (0.0, 0, 0);
    for (i, di) in defects.iter().enumerate() {
        for (j, g) in dict.iter().enumerate() {
            let v = di.inner_weighted(&g.field)?.norm() / (norms[i] * norms[j]);
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }
    Ok(ProxyValue { value: best.0, best_pair: (dict[best.1].label.clone(), dict[best.2].label.clone()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c_fit: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRun {
    pub t_values: Vec<f64>,
    pub sigma: f64,
    pub dictionary: Vec<String>,
    /// Proxy value per `T`.
    pub norms_observed: Vec<f64>,
    pub envelope: Envelope,
}

/// Proxies over an ascending `T` sweep with the squared-norm envelope fitted.
pub fn ergodic_run(dict: &[DictionaryElement], t_values: &[f64], sigma: f64, method: AverageMethod) -> Result<ErgodicRun> {
    if t_values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("T values must be strictly ascending".into()));
    }
    let norms_observed = t_values
        .iter()
        .map(|&t| operator_norm_proxy(dict, t, sigma, method).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    let c_fit = fit_envelope_constant(t_values, &norms_observed);
    Ok(ErgodicRun {
        t_values: t_values.to_vec(),
        sigma,
        dictionary: dict.iter().map(|d| d.label.clone()).collect(),
        norms_observed,
        envelope: Envelope { c_fit, exponent: RATE_EXPONENT },
    })
}

/// `C = max_j proxy_j²·T_j^{2/3}`, the smallest constant whose envelope covers every point.
pub fn fit_envelope_constant(t: &[f64], p: &[f64]) -> f64 {
    t.iter().zip(p).map(|(t, p)| p * p * t.powf(-RATE_EXPONENT)).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEnvelope {
    pub c_fit: f64,
    /// Least-squares slope of `log proxy²` against `log T`.
    pub slope_observed: ExtendedReal,
    /// Same for `log proxy`, the other reading of the rate.
    pub slope_norm: ExtendedReal,
    pub envelope_values: Vec<f64>,
    pub pass: bool,
    pub pass_norm_reading: bool,
    /// All proxies vanish: the envelope holds trivially and slopes are `-∞`.
    pub degenerate: bool,
}

pub fn rate_envelope(run: &ErgodicRun) -> Result<RateEnvelope> {
    let t = &run.t_values;
    if t.len() < 4 {
        return Err(Error::InsufficientSpan(format!("{} T values, need at least 4", t.len())));
    }
    let decades = (t[t.len() - 1] / t[0]).log10();
    if !(decades >= 2.0) {
        return Err(Error::InsufficientSpan(format!("T spans {decades:.3} decades, need 2")));
    }
    let c_fit = fit_envelope_constant(t, &run.norms_observed);
    let envelope_values: Vec<f64> = t.iter().map(|t| c_fit * t.powf(RATE_EXPONENT)).collect();
    let holds = run
        .norms_observed
        .iter()
        .zip(&envelope_values)
        .all(|(p, e)| p * p <= e * (1.0 + 1e-12) + f64::MIN_POSITIVE);
    let floor = 1e-300;
    let degenerate = run.norms_observed.iter().all(|&p| p <= DEGENERATE_PROXY);
    let (slope_sq, slope_n) = if degenerate {
        (ExtendedReal::NegInf, ExtendedReal::NegInf)
    } else {
        let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let lp: Vec<f64> = run.norms_observed.iter().map(|p| p.max(floor).ln()).collect();
        let s = ls_slope(&lt, &lp);
        (ExtendedReal::Finite(2.0 * s), ExtendedReal::Finite(s))
    };
    let bound = ExtendedReal::Finite(RATE_EXPONENT + SLOPE_SLACK);
    Ok(RateEnvelope {
        c_fit,
        slope_observed: slope_sq,
        slope_norm: slope_n,
        envelope_values,
        pass: c_fit.is_finite() && holds && slope_sq <= bound,
        pass_norm_reading: c_fit.is_finite() && holds && slope_n <= bound,
        degenerate,
    })
}

/// `⟨(P_T - P_w)f, g⟩_w` split at `|λ| = ε` into the near-zero part
/// `I₂ + I₃` and the remainder `I₁ + I₄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTerms {
    pub total: Complex64,
    pub near: Complex64,
    pub far: Complex64,
}

pub fn splitting_terms(f: &GridField, g: &GridField, t_half: f64, eps: f64) -> Result<SplitTerms> {
    let layout = f.layout().clone();
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let total = average_defect(f, t_half, AverageMethod::Spectral)?.inner_weighted(g)?;
    let h = layout.spec.step();
    let x0 = -layout.spec.half_width;
    let parts: Vec<Complex64> = layout
        .slots
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let psi = s.op.psi();
            match s.axis {
                FiberAxis::Phi { n } => {
                    let ef = phi_expansion(s, f.fiber(i));
                    let eg = phi_expansion(s, g.fiber(i));
                    let w = s.op.phi_map().map(|p| p.mass()).unwrap_or(f64::NAN);
                    let mut acc = ZERO;
                    for k in 0..n {
                        let lam = psi * ef.frequency(k);
                        if lam != 0.0 && lam.abs() < eps {
                            acc += ef.coeffs()[k] * eg.coeffs()[k].conj() * sinc(t_half * lam);
                        }
                    }
                    acc * (w * s.quad_weight)
                }
                FiberAxis::Uniform { .. } => {
                    let edge = eps / psi;
                    let panels = ((t_half * eps / PI).ceil() as usize + 4).min(4096);
                    let (nodes, weights) = gauss_legendre(16);
                    let width = 2.0 * edge / panels as f64;
                    let mut acc = ZERO;
                    for p in 0..panels {
                        let c = -edge + (p as f64 + 0.5) * width;
                        for (t, wt) in nodes.iter().zip(&weights) {
                            let xi = c + 0.5 * width * t;
                            let a = transform_at(f.fiber(i), x0, h, xi);
                            let b = transform_at(g.fiber(i), x0, h, xi);
                            acc += a * b.conj() * (sinc(t_half * psi * xi) * 0.5 * width * wt);
                        }
                    }
                    acc * s.quad_weight
                }
            }
        })
        .collect();
    // summed in slot order so the result does not depend on the thread count
    let near: Complex64 = parts.into_iter().sum();
    Ok(SplitTerms { total, near, far: total - near })
}

/// `2ε(1 + εL/ℓ²)C + 2/(T²ε²)`, the two-term bound on the squared norm.
pub fn splitting_bound(ell: f64, lipschitz: f64, t_half: f64, eps: f64, c_dos: f64) -> f64 {
    2.0 * eps * (1.0 + eps * lipschitz / (ell * ell)) * c_dos + 2.0 / (t_half * t_half * eps * eps)
}

/// Default splitting parameter `ε = T^{-2/3}`.
pub fn default_epsilon(t_half: f64) -> f64 {
    t_half.powf(RATE_EXPONENT)
}

/// `sup_λ A_λ(f,f)/(1 + |λ|L/ℓ²)` over the dictionary on a grid in `(-δ, δ)∖{0}`.
pub fn fitted_dos_constant(dict: &[DictionaryElement], sigma: f64, samples: usize) -> Result<f64> {
    let layout = dict.first().ok_or_else(|| Error::InvalidParameter("dictionary is empty".into()))?.field.layout();
    let delta = spectral_gap(&layout.profile, &layout.weight, &layout.phase)?;
    let opts = DosOptions { cdf_step: crate::density_of_states::DEFAULT_CDF_STEP, norm: NormSpec::trace_class(sigma, NormFlavor::YSigma)? };
    let reach = delta - 3.0 * opts.cdf_step;
    let lams: Vec<f64> = (1..=samples)
        .flat_map(|i| {
            let l = reach * i as f64 / samples as f64;
            [l, -l]
        })
        .collect();
    let vals = dict
        .par_iter()
        .map(|d| {
            lams.iter()
                .map(|&l| {
                    let r = dos_weighted(&d.field, &d.field, l, &opts)?;
                    Ok(r.value_surface.norm() / (1.0 + r.constants.l_gamma))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vals.into_iter().flatten().fold(0.0, f64::max))
}

/// Norm of `P_T` on `ℬ(𝒳^σ, 𝒳^{-σ})` for a constant speed in `d = 1`, from the
/// dense symmetric matrix `ρ_i⁻¹ρ_j⁻¹ k_T(x_i - x_j) h` on `[-X, X]`, where
/// `k_T = (2Tψ)⁻¹ 1_{|z| < Tψ}` and `ρ = (1+x²)^{σ/2}`.
pub fn dense_operator_norm_1d(psi: f64, t_half: f64, sigma: f64, half_width: f64, n: usize) -> f64 {
    let h = 2.0 * half_width / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| -half_width + (i as f64 + 0.5) * h).collect();
    let rho: Vec<f64> = xs.iter().map(|x| (1.0 + x * x).powf(-0.5 * sigma)).collect();
    let a = t_half * psi;
    let m = DMatrix::from_fn(n, n, |i, j| {
        if (xs[i] - xs[j]).abs() < a {
            rho[i] * rho[j] * h / (2.0 * a)
        } else {
            0.0
        }
    });
    m.symmetric_eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max)
}
