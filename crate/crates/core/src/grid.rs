//! Tensor grids `x₁ × x′` and sampled fields on them.
//!
//! The fiber box is sampled by a midpoint grid. Each fiber point carries its
//! own one-dimensional axis: fibers inside the confinement region are sampled
//! uniformly in `y = Φ(x₁)` (so their dynamics is an exact twisted periodic
//! translation), all other fibers on the uniform grid `x_j = -X + j·2X/N`.

use crate::error::{Error, Result};
use crate::fiber_ops::{FiberAxis, FiberOperator, ShapeInverse, DEFAULT_TABLE_SIZE};
use crate::field_model::{BoundaryPhase, FiberDomain, ShearProfile, WeightField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Resolution of a tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Samples per fiber, a power of two.
    pub n: usize,
    /// Half width `X` of the uniform `x₁` box.
    pub half_width: f64,
    /// Midpoint cells per fiber-box axis.
    pub fiber_cells: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, fiber_cells: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("N must be a power of two >= 8, got {n}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter("X must be positive".into()));
        }
        if fiber_cells == 0 {
            return Err(Error::InvalidParameter("fiber grid needs at least one cell".into()));
        }
        Ok(Self { n, half_width, fiber_cells })
    }

    /// Uniform-axis step `h = 2X/N`.
    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn with_n(self, n: usize) -> Result<Self> {
        Self::new(n, self.half_width, self.fiber_cells)
    }
}

/// One fiber `x′` of a layout.
#[derive(Debug, Clone)]
pub struct FiberSlot {
    pub point: Vec<f64>,
    /// Midpoint-rule weight of the fiber in `dx′`.
    pub quad_weight: f64,
    pub op: FiberOperator,
    pub axis: FiberAxis,
    /// Sample locations in `x₁`.
    pub nodes: Vec<f64>,
    /// `w(x_j, x′)` at the nodes.
    pub node_weight: Vec<f64>,
}

impl FiberSlot {
    pub fn is_weighted(&self) -> bool {
        matches!(self.axis, FiberAxis::Phi { .. })
    }

    /// `dy` on weighted fibers, `dx` otherwise.
    pub fn step(&self) -> f64 {
        self.axis.step(&self.op)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The operator data together with its sampling.
#[derive(Debug)]
pub struct Layout {
    pub domain: FiberDomain,
    pub spec: GridSpec,
    pub profile: ShearProfile,
    pub weight: WeightField,
    pub phase: BoundaryPhase,
    pub slots: Vec<FiberSlot>,
}

impl Layout {
    pub fn new(
        profile: &ShearProfile,
        weight: &WeightField,
        phase: &BoundaryPhase,
        domain: FiberDomain,
        spec: GridSpec,
    ) -> Result<Arc<Self>> {
        if profile.dim_fiber != domain.dim {
            return Err(Error::InvalidParameter(format!(
                "profile has dim_fiber {} but the fiber box has dimension {}",
                profile.dim_fiber, domain.dim
            )));
        }
        let inverse = weight.kind.shape().map(|s| Arc::new(ShapeInverse::new(s, DEFAULT_TABLE_SIZE)));
        let fg = domain.midpoint_grid(spec.fiber_cells);
        let slots = fg
            .points
            .into_par_iter()
            .zip(fg.weights.into_par_iter())
            .map(|(point, quad_weight)| {
                let psi = profile.evaluate(&point)?;
                let slice = weight.slice(&point);
                let inv = slice.and(inverse.clone());
                let op = FiberOperator::with_inverse(psi, slice, phase.beta_at(&point), inv)?;
                let axis = match slice {
                    Some(_) => FiberAxis::Phi { n: spec.n },
                    None => FiberAxis::Uniform { half_width: spec.half_width, n: spec.n },
                };
                let nodes = axis.nodes(&op)?;
                let node_weight = nodes.iter().map(|&x| op.weight(x)).collect();
                Ok(FiberSlot { point, quad_weight, op, axis, nodes, node_weight })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(Self {
            domain,
            spec,
            profile: profile.clone(),
            weight: weight.clone(),
            phase: *phase,
            slots,
        }))
    }

    /// Unweighted layout for `H₁`.
    pub fn flat(profile: &ShearProfile, domain: FiberDomain, spec: GridSpec) -> Result<Arc<Self>> {
        Self::new(profile, &WeightField::unit(), &BoundaryPhase::constant(0.0), domain, spec)
    }

    /// The same operator data resampled at a different resolution.
    pub fn refined(&self, spec: GridSpec) -> Result<Arc<Self>> {
        Self::new(&self.profile, &self.weight, &self.phase, self.domain, spec)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn has_weighted_fibers(&self) -> bool {
        self.slots.iter().any(FiberSlot::is_weighted)
    }
}

/// Which norm family a quadrature uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormFlavor {
    /// `∫ (1+x₁²)^σ |f|² dx`.
    XSigma,
    /// Weighted `L²_w` on confined fibers, `(1+x₁²)^σ` elsewhere.
    YSigma,
    PlainL2,
    WeightedL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub sigma: f64,
    pub flavor: NormFlavor,
}

impl NormSpec {
    pub fn new(sigma: f64, flavor: NormFlavor) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter("sigma must be a nonnegative real".into()));
        }
        Ok(Self { sigma, flavor })
    }

    /// Requires `σ > 1/2`, as the density bounds do.
    pub fn trace_class(sigma: f64, flavor: NormFlavor) -> Result<Self> {
        if !(sigma > 0.5) {
            return Err(Error::InvalidParameter(format!("sigma must exceed 1/2, got {sigma}")));
        }
        Self::new(sigma, flavor)
    }
}

/// Complex samples on every fiber of a layout.
#[derive(Debug, Clone)]
pub struct GridField {
    layout: Arc<Layout>,
    values: Vec<Vec<Complex64>>,
}

impl GridField {
    pub fn zeros(layout: &Arc<Layout>) -> Self {
        let values = layout.slots.iter().map(|s| vec![Complex64::new(0.0, 0.0); s.len()]).collect();
        Self { layout: layout.clone(), values }
    }

    pub fn from_fn<F>(layout: &Arc<Layout>, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Complex64 + Sync,
    {
        let values = layout
            .slots
            .par_iter()
            .map(|s| s.nodes.iter().map(|&x| f(x, &s.point)).collect())
            .collect();
        Self { layout: layout.clone(), values }
    }

    /// Like [`GridField::from_fn`] with access to the whole fiber slot.
    pub fn from_slot_fn<F>(layout: &Arc<Layout>, f: F) -> Self
    where
        F: Fn(&FiberSlot, f64) -> Complex64 + Sync,
    {
        let values = layout.slots.par_iter().map(|s| s.nodes.iter().map(|&x| f(s, x)).collect()).collect();
        Self { layout: layout.clone(), values }
    }

    pub fn from_values(layout: &Arc<Layout>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if values.len() != layout.len() || values.iter().zip(&layout.slots).any(|(v, s)| v.len() != s.len()) {
            return Err(Error::InvalidParameter("sample shape does not match the layout".into()));
        }
        Ok(Self { layout: layout.clone(), values })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn fiber(&self, i: usize) -> &[Complex64] {
        &self.values[i]
    }

    pub fn into_values(self) -> Vec<Vec<Complex64>> {
        self.values
    }

    /// Applies `f` fiber by fiber, in parallel.
    pub fn map_fibers<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&FiberSlot, &[Complex64]) -> Result<Vec<Complex64>> + Sync,
    {
        let values = self
            .layout
            .slots
            .par_iter()
            .zip(self.values.par_iter())
            .map(|(s, v)| f(s, v))
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(&self.layout, values)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.layout, &other.layout) {
            Ok(())
        } else {
            Err(Error::Precondition("fields live on different layouts".into()))
        }
    }

    fn zip_with(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect())
            .collect();
        Ok(Self { layout: self.layout.clone(), values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(|x| x * c).collect()).collect();
        Self { layout: self.layout.clone(), values }
    }

    /// Zeroes every fiber for which `keep` is false.
    pub fn restrict(&self, keep: impl Fn(&FiberSlot) -> bool) -> Self {
        let values = self
            .layout
            .slots
            .iter()
            .zip(&self.values)
            .map(|(s, v)| if keep(s) { v.clone() } else { vec![Complex64::new(0.0, 0.0); v.len()] })
            .collect();
        Self { layout: self.layout.clone(), values }
    }

    /// `⟨f, g⟩_{L²_w} = ∫ f ḡ w dx`.
    pub fn inner_weighted(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .layout
            .slots
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(s, (a, b))| {
                let sum: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
                sum * (s.quad_weight * s.step())
            })
            .sum())
    }

    /// `⟨f, g⟩_{L²} = ∫ f ḡ dx`.
    pub fn inner_plain(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(self
            .layout
            .slots
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(s, (a, b))| {
                let sum: Complex64 = a
                    .iter()
                    .zip(b)
                    .zip(&s.node_weight)
                    .map(|((x, y), w)| x * y.conj() / *w)
                    .sum();
                sum * (s.quad_weight * s.step())
            })
            .sum())
    }

    pub fn norm(&self, spec: &NormSpec) -> f64 {
        let sigma = spec.sigma;
        self.layout
            .slots
            .iter()
            .zip(&self.values)
            .map(|(s, v)| {
                let weighted_l2 = spec.flavor == NormFlavor::WeightedL2
                    || (spec.flavor == NormFlavor::YSigma && s.is_weighted());
                let poly = matches!(spec.flavor, NormFlavor::XSigma | NormFlavor::YSigma) && !weighted_l2;
                let sum: f64 = v
                    .iter()
                    .zip(&s.nodes)
                    .zip(&s.node_weight)
                    .map(|((g, &x), &w)| {
                        let rho = if poly { (1.0 + x * x).powf(sigma) } else { 1.0 };
                        let dens = if weighted_l2 { 1.0 } else { 1.0 / w };
                        rho * dens * g.norm_sqr()
                    })
                    .sum();
                s.quad_weight * s.step() * sum
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_model::{ConfinementRegion, WeightKind};
    use std::f64::consts::PI;

    fn gauss(x: f64, _: &[f64]) -> Complex64 {
        Complex64::new((-0.5 * x * x).exp(), 0.0)
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(100, 1.0, 1).is_err());
        assert!(GridSpec::new(64, 0.0, 1).is_err());
        assert!(GridSpec::new(64, 1.0, 0).is_err());
        assert!((GridSpec::new(64, 8.0, 1).unwrap().step() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gaussian_norms_on_a_flat_line() {
        let p = ShearProfile::constant(1.0, 0).unwrap();
        let l = Layout::flat(&p, FiberDomain::new(0, 1.0).unwrap(), GridSpec::new(256, 12.0, 1).unwrap()).unwrap();
        let f = GridField::from_fn(&l, gauss);
        let plain = f.norm(&NormSpec::new(0.0, NormFlavor::PlainL2).unwrap());
        assert!((plain * plain - PI.sqrt()).abs() < 1e-12);
        let x1 = f.norm(&NormSpec::new(1.0, NormFlavor::XSigma).unwrap());
        assert!((x1 * x1 - 1.5 * PI.sqrt()).abs() < 1e-12);
        let y1 = f.norm(&NormSpec::new(1.0, NormFlavor::YSigma).unwrap());
        assert_eq!(x1, y1);
    }

    #[test]
    fn weighted_fibers_use_phi_quadrature() {
        let p = ShearProfile::constant(1.0, 0).unwrap();
        let w = WeightField::axis_only(WeightKind::ExponentialDecay { rate: 1.0 }).unwrap();
        let l = Layout::new(&p, &w, &BoundaryPhase::constant(0.0), FiberDomain::new(0, 1.0).unwrap(), GridSpec::new(512, 12.0, 1).unwrap())
            .unwrap();
        assert!(l.has_weighted_fibers());
        // ‖1‖²_w = W = 2
        let one = GridField::from_fn(&l, |_, _| Complex64::new(1.0, 0.0));
        let n = one.norm(&NormSpec::new(0.0, NormFlavor::WeightedL2).unwrap());
        assert!((n * n - 2.0).abs() < 1e-12);
        // plain ∫ e^{-x²} dx through the 1/w correction
        let f = GridField::from_fn(&l, gauss);
        let plain = f.norm(&NormSpec::new(0.0, NormFlavor::PlainL2).unwrap());
        assert!((plain * plain - PI.sqrt()).abs() < 1e-4);
        let ip = f.inner_plain(&f).unwrap();
        assert!((ip.re - plain * plain).abs() < 1e-14);
    }

    #[test]
    fn layouts_in_two_dimensions_split_by_confinement() {
        let p = ShearProfile::new(crate::field_model::ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 }, 1)
            .unwrap();
        let w = WeightField::new(
            WeightKind::Gaussian { width: 1.0 },
            ConfinementRegion::intervals(vec![(0.0, 10.0)]).unwrap(),
            Some(2.0),
        )
        .unwrap();
        let l = Layout::new(&p, &w, &BoundaryPhase::constant(0.0), FiberDomain::new(1, 4.0).unwrap(), GridSpec::new(64, 10.0, 8).unwrap())
            .unwrap();
        let weighted = l.slots.iter().filter(|s| s.is_weighted()).count();
        assert_eq!(weighted, 4);
        assert!(l.slots.iter().all(|s| s.is_weighted() == (s.point[0] > 0.0)));
        let f = GridField::from_fn(&l, gauss);
        let g = f.restrict(|s| !s.is_weighted());
        assert!(g.fiber(7).iter().all(|v| v.norm() == 0.0));
        assert!(g.fiber(0)[32].norm() > 0.5);
    }

    #[test]
    fn arithmetic_requires_a_shared_layout() {
        let p = ShearProfile::constant(1.0, 0).unwrap();
        let d = FiberDomain::new(0, 1.0).unwrap();
        let s = GridSpec::new(16, 1.0, 1).unwrap();
        let a = GridField::zeros(&Layout::flat(&p, d, s).unwrap());
        let b = GridField::zeros(&Layout::flat(&p, d, s).unwrap());
        assert!(a.add(&b).is_err());
        assert!(a.add(&a).is_ok());
    }
}
