//! Shear profiles `ψ(x′)`, weights `w(x₁, x′)` and their metadata.
//!
//! The fiber variable `x′` has `dim_fiber ∈ {0, 1, 2}` components and lives in
//! the box `[-X′, X′]^{dim_fiber}` described by [`FiberDomain`]. With
//! `dim_fiber = 0` there is a single fiber and `ψ` is a constant.
//!
//! Weights are built from an x₁-shape ([`AxisShape`]) and, for the
//! product-separable family, a piecewise-linear modulation in the first fiber
//! coordinate. The confinement region `S` is a union of open intervals in that
//! first coordinate (times the remaining coordinates), or all/none of the
//! fiber space.

use crate::error::{Error, Result};
use crate::spectrum_assembly::cantor::CantorSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use libm::{erf, erfc};
use std::f64::consts::{PI, TAU};

const SLACK: f64 = 1e-12;

/// The truncated fiber box `[-half_width, half_width]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberDomain {
    pub dim: usize,
    pub half_width: f64,
}

/// Sample points in the fiber box with midpoint-rule quadrature weights.
#[derive(Debug, Clone)]
pub struct FiberGrid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl FiberDomain {
    pub fn new(dim: usize, half_width: f64) -> Result<Self> {
        if dim > 2 {
            return Err(Error::InvalidParameter(format!("dim_fiber {dim} not supported (0, 1 or 2)")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter("fiber half width must be positive".into()));
        }
        Ok(Self { dim, half_width })
    }

    /// A single point for `dim = 0`, otherwise a tensor midpoint grid with
    /// `n_per_dim` cells per axis.
    pub fn midpoint_grid(&self, n_per_dim: usize) -> FiberGrid {
        let n = n_per_dim.max(1);
        let h = 2.0 * self.half_width / n as f64;
        let axis: Vec<f64> = (0..n).map(|i| -self.half_width + (i as f64 + 0.5) * h).collect();
        match self.dim {
            0 => FiberGrid { points: vec![vec![]], weights: vec![1.0] },
            1 => FiberGrid {
                points: axis.iter().map(|&a| vec![a]).collect(),
                weights: vec![h; n],
            },
            _ => {
                let mut points = Vec::with_capacity(n * n);
                for &a in &axis {
                    for &b in &axis {
                        points.push(vec![a, b]);
                    }
                }
                FiberGrid { points, weights: vec![h * h; n * n] }
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.abs() <= self.half_width)
    }
}

/// Parametric families for the shear profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `ψ ≡ value`.
    Constant { value: f64 },
    /// `ψ(x′) = offset + amplitude·tanh(rate·x′₀)`.
    AffineSaturating { offset: f64, amplitude: f64, rate: f64 },
    /// `ψ(x′) = floor + height·exp(-|x′|²/width²)`.
    BumpPlusFloor { floor: f64, height: f64, width: f64 },
    /// Piecewise-linear interpolation of samples along `x′₀` (`dim_fiber = 1`).
    UserSampled { nodes: Vec<f64>, values: Vec<f64> },
}

/// The speed field `ψ(x′)` with declared regularity constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearProfile {
    pub kind: ProfileKind,
    /// Declared uniform lower bound `ℓ`.
    pub ell: f64,
    /// Declared global Lipschitz constant `L`.
    pub lipschitz: f64,
    pub dim_fiber: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub ell_observed: f64,
    pub lipschitz_observed: f64,
    pub pass: bool,
}

impl ShearProfile {
    /// Builds a profile with the family's exact `ℓ` and `L`.
    pub fn new(kind: ProfileKind, dim_fiber: usize) -> Result<Self> {
        if dim_fiber > 2 {
            return Err(Error::InvalidParameter(format!("dim_fiber {dim_fiber} not supported")));
        }
        let (ell, lipschitz) = match &kind {
            ProfileKind::Constant { value } => (*value, 0.0),
            ProfileKind::AffineSaturating { offset, amplitude, rate } => {
                (offset - amplitude.abs(), (amplitude * rate).abs())
            }
            ProfileKind::BumpPlusFloor { floor, height, width } => {
                if *height < 0.0 || !(*width > 0.0) {
                    return Err(Error::InvalidParameter(
                        "bump-plus-floor needs height >= 0 and width > 0".into(),
                    ));
                }
                // max of |d/dr h e^{-r²/s²}| is at r = s/√2
                (*floor, height * 2f64.sqrt() * (-0.5f64).exp() / width)
            }
            ProfileKind::UserSampled { nodes, values } => {
                if dim_fiber != 1 {
                    return Err(Error::InvalidParameter("user-sampled profiles need dim_fiber = 1".into()));
                }
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::InvalidParameter("user-sampled profile needs >= 2 matching nodes/values".into()));
                }
                if nodes.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidParameter("user-sampled nodes must be strictly increasing".into()));
                }
                let ell = values.iter().copied().fold(f64::INFINITY, f64::min);
                let lip = nodes
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
                    .fold(0.0, f64::max);
                (ell, lip)
            }
        };
        if dim_fiber == 0 && !matches!(kind, ProfileKind::Constant { .. }) {
            return Err(Error::InvalidParameter("with dim_fiber = 0 the profile must be constant".into()));
        }
        Self::with_declared(kind, dim_fiber, ell, lipschitz)
    }

    /// Builds a profile with explicitly declared constants (checked later by
    /// [`ShearProfile::validate_regularity`]).
    pub fn with_declared(kind: ProfileKind, dim_fiber: usize, ell: f64, lipschitz: f64) -> Result<Self> {
        if !(ell > 0.0) {
            return Err(Error::InvalidParameter(format!("lower bound ell must be positive, got {ell}")));
        }
        if !(lipschitz >= 0.0) {
            return Err(Error::InvalidParameter("Lipschitz constant must be nonnegative".into()));
        }
        Ok(Self { kind, ell, lipschitz, dim_fiber })
    }

    pub fn constant(value: f64, dim_fiber: usize) -> Result<Self> {
        Self::new(ProfileKind::Constant { value }, dim_fiber)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ProfileKind::Constant { .. })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim_fiber {
            return Err(Error::InvalidParameter(format!(
                "fiber point has {} coordinates, profile expects {}",
                x.len(),
                self.dim_fiber
            )));
        }
        Ok(match &self.kind {
            ProfileKind::Constant { value } => *value,
            ProfileKind::AffineSaturating { offset, amplitude, rate } => offset + amplitude * (rate * x[0]).tanh(),
            ProfileKind::BumpPlusFloor { floor, height, width } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                floor + height * (-r2 / (width * width)).exp()
            }
            ProfileKind::UserSampled { nodes, values } => {
                let (lo, hi) = (nodes[0], *nodes.last().unwrap());
                let t = x[0];
                if t < lo || t > hi {
                    return Err(Error::OutOfDomain { point: x.to_vec(), lo, hi });
                }
                let i = nodes.partition_point(|&n| n <= t).clamp(1, nodes.len() - 1);
                let s = (t - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
                values[i - 1] + s * (values[i] - values[i - 1])
            }
        })
    }

    /// Gradient in `x′` (one-sided at user-sampled nodes).
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(x)?;
        let mut g = vec![0.0; x.len()];
        match &self.kind {
            ProfileKind::Constant { .. } => {}
            ProfileKind::AffineSaturating { amplitude, rate, .. } => {
                let c = (rate * x[0]).cosh();
                g[0] = amplitude * rate / (c * c);
            }
            ProfileKind::BumpPlusFloor { height, width, .. } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let e = height * (-r2 / (width * width)).exp();
                for (gi, xi) in g.iter_mut().zip(x) {
                    *gi = -2.0 * xi / (width * width) * e;
                }
            }
            ProfileKind::UserSampled { nodes, values } => {
                let i = nodes.partition_point(|&n| n <= x[0]).clamp(1, nodes.len() - 1);
                g[0] = (values[i] - values[i - 1]) / (nodes[i] - nodes[i - 1]);
            }
        }
        Ok(g)
    }

    /// Samples ψ over the fiber box and checks it against the declared `ℓ`, `L`.
    ///
    /// In one dimension the maximal difference quotient over all pairs of a
    /// uniform sample is attained by adjacent pairs, so only those are scanned.
    /// In two dimensions axis and diagonal neighbours of an `m×m` grid are used.
    pub fn validate_regularity(&self, domain: &FiberDomain, sample_count: usize) -> Result<RegularityReport> {
        if sample_count < 2 {
            return Err(Error::Precondition("validate_regularity needs sample_count >= 2".into()));
        }
        let (ell_obs, lip_obs) = match self.dim_fiber {
            0 => (self.evaluate(&[])?, 0.0),
            1 => {
                let (lo, hi) = match &self.kind {
                    ProfileKind::UserSampled { nodes, .. } => (nodes[0], *nodes.last().unwrap()),
                    _ => (-domain.half_width, domain.half_width),
                };
                let xs: Vec<f64> = (0..sample_count)
                    .map(|i| lo + (hi - lo) * i as f64 / (sample_count - 1) as f64)
                    .collect();
                let vals = xs.iter().map(|&x| self.evaluate(&[x])).collect::<Result<Vec<_>>>()?;
                let ell = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let lip = xs
                    .windows(2)
                    .zip(vals.windows(2))
                    .map(|(x, v)| ((v[1] - v[0]) / (x[1] - x[0])).abs())
                    .fold(0.0, f64::max);
                (ell, lip)
            }
            _ => {
                let m = ((sample_count as f64).sqrt().ceil() as usize).max(2);
                let a = domain.half_width;
                let coord = |i: usize| -a + 2.0 * a * i as f64 / (m - 1) as f64;
                let mut vals = vec![0.0; m * m];
                for i in 0..m {
                    for j in 0..m {
                        vals[i * m + j] = self.evaluate(&[coord(i), coord(j)])?;
                    }
                }
                let ell = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let h = 2.0 * a / (m - 1) as f64;
                let mut lip: f64 = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        let v = vals[i * m + j];
                        if i + 1 < m {
                            lip = lip.max((vals[(i + 1) * m + j] - v).abs() / h);
                        }
                        if j + 1 < m {
                            lip = lip.max((vals[i * m + j + 1] - v).abs() / h);
                        }
                        if i + 1 < m && j + 1 < m {
                            let d = h * 2f64.sqrt();
                            lip = lip.max((vals[(i + 1) * m + j + 1] - v).abs() / d);
                        }
                        if i + 1 < m && j > 0 {
                            let d = h * 2f64.sqrt();
                            lip = lip.max((vals[(i + 1) * m + j - 1] - v).abs() / d);
                        }
                    }
                }
                (ell, lip)
            }
        };
        let pass = ell_obs >= self.ell - SLACK && lip_obs <= self.lipschitz + SLACK;
        Ok(RegularityReport { ell_observed: ell_obs, lipschitz_observed: lip_obs, pass })
    }
}

/// Integrable x₁-shapes of a weight fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AxisShape {
    /// `e^{-rate·|x|}`.
    ExponentialDecay { rate: f64 },
    /// `e^{-(x/width)²}`.
    Gaussian { width: f64 },
    /// `floor·e^{-x²} + cos⁴(πx/(2·radius))` on `|x| < radius`; the Gaussian
    /// floor keeps the weight strictly positive.
    CompactBump { radius: f64, floor: f64 },
}

impl AxisShape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            AxisShape::ExponentialDecay { rate } => rate > 0.0,
            AxisShape::Gaussian { width } => width > 0.0,
            AxisShape::CompactBump { radius, floor } => radius > 0.0 && floor > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid weight shape parameters {self:?}")))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            AxisShape::ExponentialDecay { rate } => (-rate * x.abs()).exp(),
            AxisShape::Gaussian { width } => (-(x / width).powi(2)).exp(),
            AxisShape::CompactBump { radius, floor } => {
                let bump = if x.abs() < radius { (PI * x / (2.0 * radius)).cos().powi(4) } else { 0.0 };
                floor * (-x * x).exp() + bump
            }
        }
    }

    /// `∫_ℝ` of the shape.
    pub fn mass(&self) -> f64 {
        match *self {
            AxisShape::ExponentialDecay { rate } => 2.0 / rate,
            AxisShape::Gaussian { width } => width * PI.sqrt(),
            AxisShape::CompactBump { radius, floor } => floor * PI.sqrt() + 0.75 * radius,
        }
    }

    /// `∫₀ˣ` of the shape.
    pub fn primitive(&self, x: f64) -> f64 {
        match *self {
            AxisShape::ExponentialDecay { rate } => x.signum() * (1.0 - (-rate * x.abs()).exp()) / rate,
            AxisShape::Gaussian { width } => 0.5 * width * PI.sqrt() * erf(x / width),
            AxisShape::CompactBump { radius, floor } => {
                let xc = x.clamp(-radius, radius);
                let u = PI * xc / (2.0 * radius);
                let bump = (2.0 * radius / PI) * (0.375 * u + (2.0 * u).sin() / 4.0 + (4.0 * u).sin() / 32.0);
                0.5 * floor * PI.sqrt() * erf(x) + bump
            }
        }
    }

    /// Mass outside `[-x, x]`.
    pub fn tail(&self, x: f64) -> f64 {
        match *self {
            AxisShape::ExponentialDecay { rate } => 2.0 * (-rate * x).exp() / rate,
            AxisShape::Gaussian { width } => width * PI.sqrt() * erfc(x / width),
            AxisShape::CompactBump { radius, floor } => {
                let gauss = floor * PI.sqrt() * erfc(x);
                if x >= radius {
                    gauss
                } else {
                    gauss + 0.75 * radius - 2.0 * (self.primitive(x) - 0.5 * floor * PI.sqrt() * erf(x))
                }
            }
        }
    }

    /// Points where the shape fails to be smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            AxisShape::ExponentialDecay { .. } => vec![0.0],
            AxisShape::Gaussian { .. } => vec![],
            AxisShape::CompactBump { radius, .. } => vec![-radius, radius],
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            AxisShape::CompactBump { floor, .. } => floor + 1.0,
            _ => 1.0,
        }
    }

    /// Smallest half-width (to ~1%) beyond which the mass is below `tol`.
    pub fn truncation(&self, tol: f64) -> f64 {
        let mut hi = 1.0;
        while self.tail(hi) >= tol {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        while hi - lo > 0.01 * hi {
            let mid = 0.5 * (lo + hi);
            if self.tail(mid) < tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// Piecewise-linear modulation in the first fiber coordinate, clamped
/// outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Modulation {
    pub knots: Vec<(f64, f64)>,
}

impl Modulation {
    pub fn constant(c: f64) -> Self {
        Self { knots: vec![(0.0, c)] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 <= t).clamp(1, k.len() - 1);
        let (x0, v0) = k[i - 1];
        let (x1, v1) = k[i];
        v0 + (t - x0) / (x1 - x0) * (v1 - v0)
    }

    fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::InvalidParameter("modulation needs at least one knot".into()));
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("modulation knots must be strictly increasing".into()));
        }
        if self.knots.iter().any(|k| !(k.1 >= 0.0) || !k.1.is_finite()) {
            return Err(Error::InvalidParameter("modulation values must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Whether the modulation vanishes somewhere in the open interval `(a, b)`.
    fn vanishes_in(&self, a: f64, b: f64) -> bool {
        let k = &self.knots;
        if k.iter().any(|&(x, v)| v == 0.0 && x > a && x < b) {
            return true;
        }
        (k[0].1 == 0.0 && a < k[0].0) || (k[k.len() - 1].1 == 0.0 && b > k[k.len() - 1].0)
    }

    /// Range over the closed interval `[a, b]` (infinite ends allowed).
    fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let mut vals = vec![self.eval(a.max(self.knots[0].0 - 1.0)), self.eval(b.min(self.knots.last().unwrap().0 + 1.0))];
        vals.extend(self.knots.iter().filter(|k| k.0 > a && k.0 < b).map(|k| k.1));
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Weight families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WeightKind {
    /// `w ≡ 1`.
    Unit,
    ExponentialDecay { rate: f64 },
    Gaussian { width: f64 },
    CompactBump { radius: f64, floor: f64 },
    /// `w(x₁, x′) = modulation(x′₀)·shape(x₁)` on `S`.
    ProductSeparable { shape: AxisShape, modulation: Modulation },
}

impl WeightKind {
    pub fn shape(&self) -> Option<AxisShape> {
        match self {
            WeightKind::Unit => None,
            WeightKind::ExponentialDecay { rate } => Some(AxisShape::ExponentialDecay { rate: *rate }),
            WeightKind::Gaussian { width } => Some(AxisShape::Gaussian { width: *width }),
            WeightKind::CompactBump { radius, floor } => Some(AxisShape::CompactBump { radius: *radius, floor: *floor }),
            WeightKind::ProductSeparable { shape, .. } => Some(*shape),
        }
    }
}

/// The confinement region `S`, as a subset of the first fiber coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfinementRegion {
    Full,
    Empty,
    /// Sorted, disjoint open intervals `(a, b)` in `x′₀`.
    Intervals(Vec<(f64, f64)>),
}

impl ConfinementRegion {
    /// Sorts the intervals and rejects overlaps or empty pieces.
    pub fn intervals(mut iv: Vec<(f64, f64)>) -> Result<Self> {
        if iv.iter().any(|(a, b)| !(b > a)) {
            return Err(Error::InvalidParameter("confinement intervals need a < b".into()));
        }
        iv.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        if iv.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::InvalidParameter("confinement intervals overlap".into()));
        }
        if iv.is_empty() {
            return Ok(ConfinementRegion::Empty);
        }
        Ok(ConfinementRegion::Intervals(iv))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ConfinementRegion::Full => true,
            ConfinementRegion::Empty => false,
            ConfinementRegion::Intervals(iv) => {
                let t = x.first().copied().unwrap_or(0.0);
                iv.iter().any(|&(a, b)| t > a && t < b)
            }
        }
    }

    /// Whether the complement of `S` inside the box has positive measure.
    pub fn measure_positive_complement(&self, domain: &FiberDomain) -> bool {
        match self {
            ConfinementRegion::Full => false,
            ConfinementRegion::Empty => true,
            ConfinementRegion::Intervals(iv) => {
                let a = domain.half_width;
                let covered: f64 = iv.iter().map(|&(lo, hi)| (hi.min(a) - lo.max(-a)).max(0.0)).sum();
                covered < 2.0 * a
            }
        }
    }

    /// The intervals as closed pieces of the real line (`Full` is `(-∞, ∞)`).
    fn pieces(&self) -> Vec<(f64, f64)> {
        match self {
            ConfinementRegion::Full => vec![(f64::NEG_INFINITY, f64::INFINITY)],
            ConfinementRegion::Empty => vec![],
            ConfinementRegion::Intervals(iv) => iv.clone(),
        }
    }
}

impl Serialize for ConfinementRegion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ConfinementRegion::Full => s.serialize_str("full"),
            ConfinementRegion::Empty => s.serialize_str("empty"),
            ConfinementRegion::Intervals(iv) => iv.iter().map(|&(a, b)| [a, b]).collect::<Vec<_>>().serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ConfinementRegion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tag(String),
            Iv(Vec<[f64; 2]>),
        }
        match Repr::deserialize(d)? {
            Repr::Tag(t) if t == "full" => Ok(ConfinementRegion::Full),
            Repr::Tag(t) if t == "empty" => Ok(ConfinementRegion::Empty),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!("unknown confinement {t:?}"))),
            Repr::Iv(v) => ConfinementRegion::intervals(v.into_iter().map(|[a, b]| (a, b)).collect())
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Fiber mass `W(x′) = ‖w(·, x′)‖_{L¹}`; the infinite case is a tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FiberMass {
    Finite(f64),
    Infinite,
}

impl FiberMass {
    pub fn finite(self) -> Option<f64> {
        match self {
            FiberMass::Finite(w) => Some(w),
            FiberMass::Infinite => None,
        }
    }
}

/// The restriction `w(·, x′)` of a weight to one fiber in `S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSlice {
    pub shape: AxisShape,
    pub scale: f64,
}

impl WeightSlice {
    pub fn value(&self, x: f64) -> f64 {
        self.scale * self.shape.value(x)
    }

    pub fn mass(&self) -> f64 {
        self.scale * self.shape.mass()
    }

    pub fn primitive(&self, x: f64) -> f64 {
        self.scale * self.shape.primitive(x)
    }

    pub fn tail(&self, x: f64) -> f64 {
        self.scale * self.shape.tail(x)
    }
}

/// A confined weight `w(x₁, x′)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightField {
    pub kind: WeightKind,
    pub confinement: ConfinementRegion,
    /// Optional confinement bound `M` with `W ≤ M` on `S`.
    pub m_bound: Option<f64>,
}

impl WeightField {
    pub fn new(kind: WeightKind, confinement: ConfinementRegion, m_bound: Option<f64>) -> Result<Self> {
        if let Some(shape) = kind.shape() {
            shape.validate()?;
        }
        if kind == WeightKind::Unit && confinement != ConfinementRegion::Empty {
            return Err(Error::InvalidParameter("the unit weight has an empty confinement region".into()));
        }
        if let WeightKind::ProductSeparable { modulation, .. } = &kind {
            modulation.validate()?;
            if confinement.pieces().iter().any(|&(a, b)| modulation.vanishes_in(a, b)) {
                return Err(Error::InvalidParameter("modulation vanishes inside the confinement region".into()));
            }
        }
        if let Some(m) = m_bound {
            if !(m > 0.0) {
                return Err(Error::InvalidParameter("M must be positive".into()));
            }
        }
        let w = Self { kind, confinement, m_bound };
        if let (Some(m), Some((_, sup))) = (m_bound, w.mass_range()) {
            if sup > m * (1.0 + SLACK) {
                return Err(Error::InvalidParameter(format!("fiber mass reaches {sup} > M = {m}")));
            }
        }
        Ok(w)
    }

    pub fn unit() -> Self {
        Self { kind: WeightKind::Unit, confinement: ConfinementRegion::Empty, m_bound: None }
    }

    /// `x′ ↦ w` depends on `x₁` only, with `S` the whole fiber space.
    pub fn axis_only(kind: WeightKind) -> Result<Self> {
        let w = Self::new(kind, ConfinementRegion::Full, None)?;
        let m = w.mass_range().map(|r| r.1);
        Ok(Self { m_bound: m, ..w })
    }

    fn modulation_at(&self, x: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::ProductSeparable { modulation, .. } => modulation.eval(x.first().copied().unwrap_or(0.0)),
            _ => 1.0,
        }
    }

    pub fn in_confinement(&self, x: &[f64]) -> bool {
        self.kind != WeightKind::Unit && self.confinement.contains(x)
    }

    pub fn value(&self, x1: f64, x: &[f64]) -> f64 {
        match self.slice(x) {
            Some(s) => s.value(x1),
            None => 1.0,
        }
    }

    /// The weight on fiber `x′`, or `None` when `w(·, x′) ≡ 1`.
    pub fn slice(&self, x: &[f64]) -> Option<WeightSlice> {
        if !self.in_confinement(x) {
            return None;
        }
        self.kind.shape().map(|shape| WeightSlice { shape, scale: self.modulation_at(x) })
    }

    /// `W(x′)`, infinite off `S`.
    pub fn fiber_mass(&self, x: &[f64]) -> FiberMass {
        match self.slice(x) {
            Some(s) => FiberMass::Finite(s.mass()),
            None => FiberMass::Infinite,
        }
    }

    /// Continuous extension of `W` from `S` to its closure (may be 0 on `∂S`).
    pub fn mass_closure(&self, x: &[f64]) -> Option<f64> {
        self.kind.shape().map(|s| self.modulation_at(x) * s.mass())
    }

    /// `(inf, sup)` of `W` over `S`, or `None` when `S` is empty.
    pub fn mass_range(&self) -> Option<(f64, f64)> {
        let shape = self.kind.shape()?;
        let pieces = self.confinement.pieces();
        if pieces.is_empty() {
            return None;
        }
        let (lo, hi) = match &self.kind {
            WeightKind::ProductSeparable { modulation, .. } => pieces
                .iter()
                .map(|&(a, b)| modulation.range_on(a, b))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| (acc.0.min(r.0), acc.1.max(r.1))),
            _ => (1.0, 1.0),
        };
        Some((lo * shape.mass(), hi * shape.mass()))
    }

    pub fn sup_norm(&self) -> f64 {
        match (&self.kind, self.kind.shape()) {
            (WeightKind::ProductSeparable { modulation, .. }, Some(s)) => {
                let m = modulation.knots.iter().map(|k| k.1).fold(0.0, f64::max);
                (m * s.sup()).max(1.0)
            }
            (_, Some(s)) => s.sup().max(1.0),
            _ => 1.0,
        }
    }
}

/// Boundary phase `α = e^{iβ}` selecting the self-adjoint extension on each fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BoundaryPhase {
    Constant { beta: f64 },
    /// Fiber-dependent phase whose range is a Cantor set (see [`CantorSpec`]).
    Cantor { spec: CantorSpec, half_width: f64 },
}

impl BoundaryPhase {
    pub fn constant(beta: f64) -> Self {
        BoundaryPhase::Constant { beta: beta.rem_euclid(TAU) }
    }

    pub fn constant_beta(&self) -> Option<f64> {
        match self {
            BoundaryPhase::Constant { beta } => Some(beta.rem_euclid(TAU)),
            BoundaryPhase::Cantor { .. } => None,
        }
    }

    pub fn beta_at(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryPhase::Constant { beta } => beta.rem_euclid(TAU),
            BoundaryPhase::Cantor { spec, half_width } => {
                let t = x.first().copied().unwrap_or(0.0);
                spec.phase_at(((t + half_width) / (2.0 * half_width)).clamp(0.0, 1.0))
            }
        }
    }

    pub fn alpha_at(&self, x: &[f64]) -> Complex64 {
        Complex64::from_polar(1.0, self.beta_at(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine() -> ShearProfile {
        ShearProfile::new(ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 }, 1).unwrap()
    }

    #[test]
    fn evaluate_profile_examples() {
        let c = ShearProfile::constant(1.0, 1).unwrap();
        assert_eq!(c.evaluate(&[3.7]).unwrap(), 1.0);
        assert_eq!(affine().evaluate(&[0.0]).unwrap(), 2.0);
        let bump = ShearProfile::new(ProfileKind::BumpPlusFloor { floor: 1.0, height: 1.0, width: 1.0 }, 1).unwrap();
        assert!((bump.evaluate(&[1.0]).unwrap() - (1.0 + (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn user_sampled_rejects_points_outside_nodes() {
        let p = ShearProfile::new(ProfileKind::UserSampled { nodes: vec![0.0, 1.0], values: vec![1.0, 2.0] }, 1).unwrap();
        assert!((p.evaluate(&[0.25]).unwrap() - 1.25).abs() < 1e-15);
        assert!(matches!(p.evaluate(&[1.5]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn regularity_reports() {
        let dom = FiberDomain::new(1, 6.0).unwrap();
        let r = ShearProfile::constant(1.0, 1).unwrap().validate_regularity(&dom, 100).unwrap();
        assert_eq!((r.ell_observed, r.lipschitz_observed, r.pass), (1.0, 0.0, true));

        let r = affine().validate_regularity(&dom, 1000).unwrap();
        assert!(r.pass);
        assert!(r.ell_observed >= 1.0 && r.lipschitz_observed <= 1.0);
        assert!(r.lipschitz_observed > 0.99);

        let bad = ShearProfile::with_declared(affine().kind, 1, 1.0, 0.0).unwrap();
        assert!(!bad.validate_regularity(&dom, 1000).unwrap().pass);
    }

    #[test]
    fn declared_constants_pass_at_ten_thousand_samples() {
        let dom1 = FiberDomain::new(1, 5.0).unwrap();
        let dom2 = FiberDomain::new(2, 3.0).unwrap();
        let fams = [
            ProfileKind::Constant { value: 1.5 },
            ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 },
            ProfileKind::AffineSaturating { offset: 3.0, amplitude: -0.5, rate: 2.0 },
            ProfileKind::BumpPlusFloor { floor: 1.0, height: 1.0, width: 1.0 },
            ProfileKind::BumpPlusFloor { floor: 0.5, height: 2.0, width: 0.7 },
        ];
        for kind in fams {
            for (dim, dom) in [(1, dom1), (2, dom2)] {
                let p = ShearProfile::new(kind.clone(), dim).unwrap();
                let r = p.validate_regularity(&dom, 10_000).unwrap();
                assert!(r.pass, "{kind:?} dim {dim}: {r:?}");
            }
        }
        let us = ShearProfile::new(ProfileKind::UserSampled { nodes: vec![-5.0, 0.0, 5.0], values: vec![1.0, 3.0, 2.0] }, 1).unwrap();
        assert!(us.validate_regularity(&dom1, 10_000).unwrap().pass);
    }

    #[test]
    fn fiber_mass_closed_forms() {
        let e = WeightField::axis_only(WeightKind::ExponentialDecay { rate: 1.0 }).unwrap();
        assert_eq!(e.fiber_mass(&[]), FiberMass::Finite(2.0));
        let g = WeightField::axis_only(WeightKind::Gaussian { width: 1.0 }).unwrap();
        assert!((g.fiber_mass(&[]).finite().unwrap() - PI.sqrt()).abs() < 1e-15);
        let u = WeightField::unit();
        assert_eq!(u.fiber_mass(&[0.3]), FiberMass::Infinite);
        assert_eq!(u.confinement, ConfinementRegion::Empty);
    }

    #[test]
    fn weight_is_one_off_confinement() {
        let w = WeightField::new(
            WeightKind::Gaussian { width: 1.0 },
            ConfinementRegion::intervals(vec![(0.0, 1.0)]).unwrap(),
            Some(2.0),
        )
        .unwrap();
        assert_eq!(w.value(0.3, &[-0.5]), 1.0);
        assert!(w.value(3.0, &[0.5]) < 1e-3);
        assert_eq!(w.fiber_mass(&[1.0]), FiberMass::Infinite);
    }

    #[test]
    fn bound_violation_is_rejected() {
        let r = WeightField::new(
            WeightKind::ExponentialDecay { rate: 1.0 },
            ConfinementRegion::Full,
            Some(1.5),
        );
        assert!(r.is_err());
    }

    #[test]
    fn mass_range_follows_modulation() {
        let w = WeightField::new(
            WeightKind::ProductSeparable {
                shape: AxisShape::ExponentialDecay { rate: 2.0 },
                modulation: Modulation { knots: vec![(0.0, 1.0), (1.0, 2.0)] },
            },
            ConfinementRegion::intervals(vec![(0.0, 1.0)]).unwrap(),
            Some(2.0),
        )
        .unwrap();
        assert_eq!(w.mass_range(), Some((1.0, 2.0)));
        assert!((w.fiber_mass(&[0.5]).finite().unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn vanishing_modulation_inside_s_is_rejected() {
        let r = WeightField::new(
            WeightKind::ProductSeparable {
                shape: AxisShape::Gaussian { width: 1.0 },
                modulation: Modulation { knots: vec![(0.5, 0.0), (1.0, 1.0)] },
            },
            ConfinementRegion::intervals(vec![(0.0, 1.0)]).unwrap(),
            None,
        );
        assert!(r.is_err());
        // zero only on the boundary of the open interval is fine
        let ok = WeightField::new(
            WeightKind::ProductSeparable {
                shape: AxisShape::Gaussian { width: 1.0 },
                modulation: Modulation { knots: vec![(0.0, 0.0), (1.0, 1.0)] },
            },
            ConfinementRegion::intervals(vec![(0.0, 1.0)]).unwrap(),
            None,
        );
        assert!(ok.is_ok());
    }

    #[test]
    fn confinement_intervals_are_sorted_and_disjoint() {
        let c = ConfinementRegion::intervals(vec![(2.0, 3.0), (-1.0, 0.0)]).unwrap();
        assert_eq!(c, ConfinementRegion::Intervals(vec![(-1.0, 0.0), (2.0, 3.0)]));
        assert!(ConfinementRegion::intervals(vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        let dom = FiberDomain::new(1, 1.0).unwrap();
        assert!(ConfinementRegion::intervals(vec![(0.0, 5.0)]).unwrap().measure_positive_complement(&dom));
        assert!(!ConfinementRegion::Full.measure_positive_complement(&dom));
    }

    #[test]
    fn primitive_matches_mass_at_infinity() {
        for s in [
            AxisShape::ExponentialDecay { rate: 1.3 },
            AxisShape::Gaussian { width: 0.8 },
            AxisShape::CompactBump { radius: 1.5, floor: 0.1 },
        ] {
            let x = s.truncation(1e-14);
            assert!((s.primitive(x) - s.primitive(-x) - s.mass()).abs() < 1e-12, "{s:?}");
            assert!(s.primitive(0.0).abs() < 1e-16);
            assert!(s.tail(x) < 1e-14);
        }
    }

    #[test]
    fn phase_has_unit_modulus() {
        let p = BoundaryPhase::constant(7.0);
        assert!(p.constant_beta().unwrap() < TAU);
        assert!((p.alpha_at(&[]).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn config_shapes_deserialize() {
        let k: WeightKind = serde_json::from_str(
            r#"{"family":"product-separable","shape":{"family":"gaussian","width":1.0},"modulation":[[0.0,1.0],[1.0,2.0]]}"#,
        )
        .unwrap();
        assert!(matches!(k, WeightKind::ProductSeparable { .. }));
        let c: ConfinementRegion = serde_json::from_str("[[1.0,2.0],[-1.0,0.0]]").unwrap();
        assert_eq!(c, ConfinementRegion::Intervals(vec![(-1.0, 0.0), (1.0, 2.0)]));
        let f: ConfinementRegion = serde_json::from_str("\"full\"").unwrap();
        assert_eq!(f, ConfinementRegion::Full);
    }
}
