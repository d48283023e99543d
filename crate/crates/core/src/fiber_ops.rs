//! One fiber operator `H^{x′} = -i(ψ/w) d/dx` on `L²_w(ℝ)`.
//!
//! For an integrable weight the substitution `y = Φ(x) = ∫₀ˣ w` turns the
//! operator into `-iψ d/dy` on `(-W/2, W/2)` with the twisted boundary
//! condition `g(y + W) = α g(y)`. Everything here works in that coordinate:
//! grids are uniform in `y`, eigenfunctions are plane waves in `y`, and the
//! evolution is a twisted translation. A fiber with `w ≡ 1` is plain transport
//! on `L²(ℝ)`.
//!
//! All built-in weight shapes are even, so `W₋ = W₊ = W/2`.

use crate::error::{Error, Result};
use crate::field_model::{AxisShape, BoundaryPhase, FiberMass, ShearProfile, WeightField, WeightSlice};
use crate::numerics::{gauss_legendre, signed_mode, fft_forward, ModeExpansion, MonotoneCubic};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

pub const DEFAULT_TABLE_SIZE: usize = 1 << 14;
/// Weight mass allowed beyond `±X_max`.
pub const TRUNCATION_MASS: f64 = 1e-10;
/// Largest admissible spectral tail fraction before a grid counts as under-resolved.
pub const RESOLUTION_LIMIT: f64 = 1e-6;
const DENSE_LIMIT: usize = 1024;

/// Tabulated inverse of the unit-scale primitive of an [`AxisShape`].
///
/// A monotone cubic on a uniform `x` table gives the starting guess; a
/// bracketed Newton iteration then solves `Φ(x) = y` to rounding level.
#[derive(Debug)]
pub struct ShapeInverse {
    shape: AxisShape,
    table: MonotoneCubic,
}

impl ShapeInverse {
    pub fn new(shape: AxisShape, size: usize) -> Self {
        let size = size.max(16);
        let x_end = shape.truncation(1e-14);
        let xs: Vec<f64> = (0..size).map(|i| -x_end + 2.0 * x_end * i as f64 / (size - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| shape.primitive(x)).collect();
        Self { shape, table: MonotoneCubic::new(ys, xs) }
    }

    pub fn shape(&self) -> AxisShape {
        self.shape
    }

    /// Solves `primitive(x) = y` for `|y| < mass/2`.
    pub fn inverse(&self, y: f64) -> f64 {
        let s = &self.shape;
        let f = |x: f64| s.primitive(x) - y;
        let mut x = self.table.eval(y);
        // bracket the root
        let mut step = 1e-3_f64.max(x.abs() * 1e-3);
        let (mut a, mut b);
        if f(x) <= 0.0 {
            a = x;
            b = x + step;
            while f(b) < 0.0 {
                a = b;
                step *= 2.0;
                b += step;
            }
        } else {
            b = x;
            a = x - step;
            while f(a) > 0.0 {
                b = a;
                step *= 2.0;
                a -= step;
            }
        }
        for _ in 0..100 {
            let fx = f(x);
            if fx == 0.0 {
                return x;
            }
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let w = s.value(x);
            let mut next = x - fx / w;
            if !(next > a && next < b) || !next.is_finite() {
                next = 0.5 * (a + b);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || b - a <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// `Φ` and its inverse for one weight slice.
#[derive(Debug, Clone)]
pub struct PhiMap {
    slice: WeightSlice,
    inverse: Arc<ShapeInverse>,
    x_max: f64,
}

impl PhiMap {
    pub fn new(slice: WeightSlice, inverse: Arc<ShapeInverse>) -> Result<Self> {
        if inverse.shape() != slice.shape {
            return Err(Error::Precondition("inverse table built for a different weight shape".into()));
        }
        if !(slice.scale > 0.0) {
            return Err(Error::InvalidParameter("weight slice must be positive".into()));
        }
        let x_max = slice.shape.truncation(TRUNCATION_MASS / slice.scale);
        Ok(Self { slice, inverse, x_max })
    }

    pub fn slice(&self) -> WeightSlice {
        self.slice
    }

    pub fn mass(&self) -> f64 {
        self.slice.mass()
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.slice.primitive(x)
    }

    pub fn phi_inverse(&self, y: f64) -> f64 {
        self.inverse.inverse(y / self.slice.scale)
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// `s = tan(πΦ(x)/W)`, a coordinate on `ℝ` in which functions decaying in
    /// `s` are smooth and vanish to all orders at `y = ±W/2`.
    pub fn stretched(&self, x: f64) -> f64 {
        (PI * self.phi(x) / self.mass()).tan()
    }
}

/// Spectrum of one fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum FiberSpectrum {
    /// `λ_k = scale·(base + k·step)` with `base = β/W`, `step = 2π/W`.
    PointLadder { base: f64, step: f64, scale: f64 },
    FullLine { scale: f64 },
}

impl FiberSpectrum {
    pub fn eigenvalue(&self, k: i64) -> Option<f64> {
        match *self {
            FiberSpectrum::PointLadder { base, step, scale } => Some(scale * (base + k as f64 * step)),
            FiberSpectrum::FullLine { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FiberOperator {
    psi: f64,
    beta: f64,
    phi: Option<PhiMap>,
}

impl FiberOperator {
    /// `slice = None` is the unweighted fiber `w ≡ 1`.
    pub fn new(psi: f64, slice: Option<WeightSlice>, beta: f64) -> Result<Self> {
        let inv = slice.map(|s| Arc::new(ShapeInverse::new(s.shape, DEFAULT_TABLE_SIZE)));
        Self::with_inverse(psi, slice, beta, inv)
    }

    /// Like [`FiberOperator::new`], reusing a shared inverse table.
    pub fn with_inverse(psi: f64, slice: Option<WeightSlice>, beta: f64, inverse: Option<Arc<ShapeInverse>>) -> Result<Self> {
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(Error::InvalidParameter(format!("psi must be positive, got {psi}")));
        }
        let phi = match (slice, inverse) {
            (Some(s), Some(inv)) => Some(PhiMap::new(s, inv)?),
            (Some(s), None) => Some(PhiMap::new(s, Arc::new(ShapeInverse::new(s.shape, DEFAULT_TABLE_SIZE)))?),
            (None, _) => None,
        };
        Ok(Self { psi, beta: beta.rem_euclid(TAU), phi })
    }

    pub fn from_fields(profile: &ShearProfile, weight: &WeightField, phase: &BoundaryPhase, x: &[f64]) -> Result<Self> {
        Self::new(profile.evaluate(x)?, weight.slice(x), phase.beta_at(x))
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.beta)
    }

    pub fn phi_map(&self) -> Option<&PhiMap> {
        self.phi.as_ref()
    }

    pub fn mass(&self) -> FiberMass {
        match &self.phi {
            Some(p) => FiberMass::Finite(p.mass()),
            None => FiberMass::Infinite,
        }
    }

    fn finite_phi(&self) -> Result<&PhiMap> {
        self.phi.as_ref().ok_or(Error::InfiniteMass)
    }

    pub fn weight(&self, x: f64) -> f64 {
        self.phi.as_ref().map_or(1.0, |p| p.slice.value(x))
    }

    pub fn spectrum(&self) -> FiberSpectrum {
        match &self.phi {
            Some(p) => FiberSpectrum::PointLadder { base: self.beta / p.mass(), step: TAU / p.mass(), scale: self.psi },
            None => FiberSpectrum::FullLine { scale: self.psi },
        }
    }

    /// `μ_k = (β + 2πk)/W`, so that `λ_k = ψ μ_k`.
    pub fn wavenumber(&self, k: i64) -> Result<f64> {
        Ok((self.beta + TAU * k as f64) / self.finite_phi()?.mass())
    }

    /// Midpoints of a uniform `y` partition of `(-W/2, W/2)` and their preimages.
    pub fn phi_nodes(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = self.finite_phi()?;
        let w = p.mass();
        let ys: Vec<f64> = (0..n).map(|j| -0.5 * w + (j as f64 + 0.5) * w / n as f64).collect();
        let xs = ys.iter().map(|&y| p.phi_inverse(y)).collect();
        Ok((ys, xs))
    }
}

/// Sampling of a single fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FiberAxis {
    /// `n` midpoints uniform in `y = Φ(x)`; quadrature step `W/n` in the `L²_w` norm.
    Phi { n: usize },
    /// `x_j = -X + j·2X/n`, periodic box.
    Uniform { half_width: f64, n: usize },
}

impl FiberAxis {
    pub fn len(&self) -> usize {
        match *self {
            FiberAxis::Phi { n } | FiberAxis::Uniform { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn uniform_nodes(half_width: f64, n: usize) -> Vec<f64> {
        let h = 2.0 * half_width / n as f64;
        (0..n).map(|j| -half_width + j as f64 * h).collect()
    }

    /// Sample locations in `x`.
    pub fn nodes(&self, op: &FiberOperator) -> Result<Vec<f64>> {
        match *self {
            FiberAxis::Phi { n } => Ok(op.phi_nodes(n)?.1),
            FiberAxis::Uniform { half_width, n } => Ok(Self::uniform_nodes(half_width, n)),
        }
    }

    /// Quadrature step: `dy` for the `L²_w` sum on `Φ` grids, `dx` otherwise.
    pub fn step(&self, op: &FiberOperator) -> f64 {
        match *self {
            FiberAxis::Phi { n } => op.phi.as_ref().map_or(f64::NAN, |p| p.mass() / n as f64),
            FiberAxis::Uniform { half_width, n } => 2.0 * half_width / n as f64,
        }
    }

    fn check(&self, op: &FiberOperator) -> Result<()> {
        match (self, &op.phi) {
            (FiberAxis::Phi { .. }, Some(_)) | (FiberAxis::Uniform { .. }, None) => Ok(()),
            (FiberAxis::Phi { .. }, None) => Err(Error::InfiniteMass),
            (FiberAxis::Uniform { .. }, Some(_)) => {
                Err(Error::Precondition("weighted fibers are sampled on a Phi grid".into()))
            }
        }
    }
}

/// Eigenvalues `ψ(β+2πk)/W` for `k ∈ [k_lo, k_hi]`, ascending.
pub fn fiber_eigenvalues(op: &FiberOperator, k_lo: i64, k_hi: i64) -> Result<Vec<f64>> {
    op.finite_phi()?;
    (k_lo..=k_hi).map(|k| Ok(op.psi * op.wavenumber(k)?)).collect()
}

/// `e^{iμ_k Φ(x)}/√W` at the points `xs`.
pub fn fiber_eigenfunction(op: &FiberOperator, k: i64, xs: &[f64]) -> Result<Vec<Complex64>> {
    let p = op.finite_phi()?;
    let mu = op.wavenumber(k)?;
    let norm = 1.0 / p.mass().sqrt();
    Ok(xs.iter().map(|&x| Complex64::from_polar(norm, mu * p.phi(x))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficiencyReport {
    pub sign: Sign,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `‖g‖²_{L²_w}`.
    pub norm_sq: f64,
    /// `‖w⁻¹g′‖²_{L²_w}`.
    pub derivative_norm_sq: f64,
    /// `max |w⁻¹g′ ∓ g| / max |g|` over the nodes.
    pub residual: f64,
    pub limit_minus: f64,
    pub limit_plus: f64,
    pub in_adjoint_domain: bool,
    pub limits_nonzero: bool,
}

/// Builds `g_± = e^{±Φ}` and checks that it lies in the adjoint domain but has
/// nonzero limits at `±∞`.
///
/// The derivative is a Richardson-extrapolated central difference in `x`,
/// independent of the closed-form identity `w⁻¹g′ = ±g`.
pub fn deficiency_witness(op: &FiberOperator, sign: Sign) -> Result<DeficiencyReport> {
    const N: usize = 1024;
    const H: f64 = 1e-3;
    let p = op.finite_phi()?;
    let s = sign.value();
    let g = |x: f64| (s * p.phi(x)).exp();
    let (_, xs) = op.phi_nodes(N)?;
    let dy = p.mass() / N as f64;
    let values: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let kinks = p.slice.shape.kinks();
    let deriv: Vec<f64> = xs
        .iter()
        .map(|&x| {
            // keep the stencil on one side of any kink of w
            let d = kinks.iter().map(|k| (x - k).abs()).fold(f64::INFINITY, f64::min);
            let h = H.min(d / 2.5);
            let d1 = (g(x + h) - g(x - h)) / (2.0 * h);
            let d2 = (g(x + 2.0 * h) - g(x - 2.0 * h)) / (4.0 * h);
            (4.0 * d1 - d2) / 3.0 / p.slice.value(x)
        })
        .collect();
    let gmax = values.iter().copied().fold(0.0, f64::max);
    let residual = deriv.iter().zip(&values).map(|(d, v)| (d - s * v).abs()).fold(0.0, f64::max) / gmax;
    let norm_sq = dy * values.iter().map(|v| v * v).sum::<f64>();
    let derivative_norm_sq = dy * deriv.iter().map(|v| v * v).sum::<f64>();
    let limit_minus = g(-p.x_max);
    let limit_plus = g(p.x_max);
    let in_adjoint_domain = norm_sq.is_finite() && derivative_norm_sq.is_finite() && residual <= 1e-8;
    let limits_nonzero = limit_minus.abs() > 1e-8 && limit_plus.abs() > 1e-8;
    Ok(DeficiencyReport {
        sign,
        nodes: xs,
        values,
        norm_sq,
        derivative_norm_sq,
        residual,
        limit_minus,
        limit_plus,
        in_adjoint_domain,
        limits_nonzero,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolveMethod {
    /// Multiply the (twisted) Fourier coefficients by `e^{itλ}`.
    Spectral,
    /// Follow characteristics back to a foot point and apply the wrap phase `αⁿ`.
    Characteristics,
}

fn expansion(op: &FiberOperator, axis: &FiberAxis, f: &[Complex64]) -> Result<ModeExpansion> {
    let e = match (*axis, &op.phi) {
        (FiberAxis::Phi { .. }, Some(p)) => ModeExpansion::from_samples(f, -0.5 * p.mass(), p.mass(), op.beta, 0.5),
        (FiberAxis::Uniform { half_width, .. }, None) => ModeExpansion::from_samples(f, -half_width, 2.0 * half_width, 0.0, 0.0),
        _ => unreachable!("axis checked"),
    };
    let tail = e.tail_fraction();
    if tail > RESOLUTION_LIMIT {
        return Err(Error::UnderResolved { tail, limit: RESOLUTION_LIMIT });
    }
    Ok(e)
}

/// `e^{itH}` on one fiber for samples on `axis`.
///
/// On a `Φ` grid this is `g(y) ↦ αⁿ g(ȳ)` with `y + tψ = ȳ + nW`. On a
/// uniform grid it is `f ↦ f(· + tψ)`: the spectral path treats the box as
/// periodic, the characteristics path as zero outside.
pub fn fiber_evolve(op: &FiberOperator, axis: &FiberAxis, t: f64, f: &[Complex64], method: EvolveMethod) -> Result<Vec<Complex64>> {
    axis.check(op)?;
    if f.len() != axis.len() {
        return Err(Error::InvalidParameter("sample count does not match the fiber axis".into()));
    }
    if f.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Precondition("fiber samples must be finite".into()));
    }
    if t == 0.0 {
        return Ok(f.to_vec());
    }
    let shift = t * op.psi;
    let mut e = expansion(op, axis, f)?;
    match method {
        EvolveMethod::Spectral => {
            e.translate(shift);
            Ok(e.to_samples())
        }
        EvolveMethod::Characteristics => match (*axis, &op.phi) {
            (FiberAxis::Phi { n }, Some(p)) => {
                let w = p.mass();
                let alpha = op.alpha();
                Ok((0..n)
                    .map(|j| {
                        let y = -0.5 * w + (j as f64 + 0.5) * w / n as f64 + shift;
                        let wraps = ((y + 0.5 * w) / w).floor();
                        let foot = y - wraps * w;
                        alpha.powi(wraps as i32) * e.eval(foot)
                    })
                    .collect())
            }
            (FiberAxis::Uniform { half_width, n }, None) => Ok(FiberAxis::uniform_nodes(half_width, n)
                .iter()
                .map(|&x| {
                    let z = x + shift;
                    if z < -half_width || z >= half_width {
                        Complex64::new(0.0, 0.0)
                    } else {
                        e.eval(z)
                    }
                })
                .collect()),
            _ => unreachable!("axis checked"),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discretization {
    /// Twisted Fourier differentiation, dense Hermitian eigensolve.
    Spectral,
    /// Fourth-order central differences with the twisted wrap.
    FiniteDifference4,
}

/// Length of the `Φ` interval by composite Gauss–Legendre quadrature of `w`
/// (independent of the closed-form mass).
pub fn quadrature_mass(op: &FiberOperator) -> Result<f64> {
    let p = op.finite_phi()?;
    let (nodes, weights) = gauss_legendre(16);
    let a = p.x_max;
    let mut breaks = vec![-a, a];
    if let AxisShape::CompactBump { radius, .. } = p.slice.shape {
        if radius < a {
            breaks.extend([-radius, radius]);
        }
    }
    breaks.push(0.0);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let panels = 200;
        let h = (seg[1] - seg[0]) / panels as f64;
        for i in 0..panels {
            let c = seg[0] + (i as f64 + 0.5) * h;
            total += nodes.iter().zip(&weights).map(|(t, wt)| wt * p.slice.value(c + 0.5 * h * t)).sum::<f64>() * 0.5 * h;
        }
    }
    Ok(total)
}

/// Eigenvalues of a discretization of `-iψ d/dy` with `g(y+W) = αg(y)`.
///
/// The finite-difference symbol `(8 sin θ − sin 2θ)/6` also has spurious
/// small values near `θ = ±π`; only the resolved branch `|θ| < π/2` is returned.
pub fn fiber_matrix_oracle(op: &FiberOperator, n: usize, disc: Discretization) -> Result<Vec<f64>> {
    if n < 64 {
        return Err(Error::Precondition("matrix oracle needs n >= 64".into()));
    }
    let w = quadrature_mass(op)?;
    let mut ev = match disc {
        Discretization::Spectral => {
            if n > DENSE_LIMIT {
                return Err(Error::Precondition(format!("dense spectral oracle limited to n <= {DENSE_LIMIT}")));
            }
            let a = spectral_matrix(op.psi, op.beta, w, n);
            hermitian_eigenvalues(a)
        }
        Discretization::FiniteDifference4 => fd4_circulant(op.psi, op.beta, w, n)
            .into_iter()
            .filter(|(theta, _)| theta.abs() < 0.5 * PI)
            .map(|(_, l)| l)
            .collect(),
    };
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

fn spectral_matrix(psi: f64, beta: f64, w: f64, n: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        unit[j] = Complex64::new(1.0, 0.0);
        let mut e = ModeExpansion::from_samples(&unit, 0.0, w, beta, 0.0);
        e.apply_multiplier(|mu| Complex64::new(psi * mu, 0.0));
        for (i, v) in e.to_samples().into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    a
}

fn fd4_matrix(psi: f64, beta: f64, w: f64, n: usize) -> DMatrix<Complex64> {
    let h = w / n as f64;
    let alpha = Complex64::from_polar(1.0, beta);
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let stencil = [(-2i64, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
    for j in 0..n as i64 {
        for &(s, c) in &stencil {
            let idx = j + s;
            let (col, phase) = if idx >= n as i64 {
                (idx - n as i64, alpha)
            } else if idx < 0 {
                (idx + n as i64, alpha.conj())
            } else {
                (idx, Complex64::new(1.0, 0.0))
            };
            a[(j as usize, col as usize)] += Complex64::new(0.0, -psi * c / (12.0 * h)) * phase;
        }
    }
    a
}

fn hermitian_eigenvalues(a: DMatrix<Complex64>) -> Vec<f64> {
    let sym = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

/// Dense eigenvalues of the fourth-order matrix (all branches), for cross-checks.
pub fn fd4_dense_eigenvalues(psi: f64, beta: f64, w: f64, n: usize) -> Vec<f64> {
    let mut ev = hermitian_eigenvalues(fd4_matrix(psi, beta, w, n));
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// `(θ_m, λ_m)` for the gauge-transformed circulant, via an FFT of its stencil.
pub fn fd4_circulant(psi: f64, beta: f64, w: f64, n: usize) -> Vec<(f64, f64)> {
    let h = w / n as f64;
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for &(s, c) in &[(-2i64, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)] {
        let a = Complex64::new(0.0, -psi * c / (12.0 * h)) * Complex64::from_polar(1.0, beta * s as f64 / n as f64);
        col[(-s).rem_euclid(n as i64) as usize] += a;
    }
    fft_forward(&mut col);
    col.iter()
        .enumerate()
        .map(|(k, v)| {
            let m = signed_mode(k, n) as f64;
            let mut theta = (beta + TAU * m) / n as f64;
            if theta >= PI {
                theta -= TAU;
            }
            (theta, v.re)
        })
        .collect()
}
