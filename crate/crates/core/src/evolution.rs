//! The unitary groups `e^{itH₁}`, `e^{itH_w}` and the dilation `𝒰`.
//!
//! `(𝒰f)(x₁, x′) = √ψ(x′) f(ψ(x′)x₁, x′)` is unitary on `L²(ℝᵈ)` and
//! satisfies `𝒰⁻¹(-i∂₁)𝒰 = H₁`.

use crate::density_of_states::{inverse_partial_fourier, partial_fourier};
use crate::error::{Error, Result};
use crate::fiber_ops::{fiber_evolve, EvolveMethod, FiberAxis};
use crate::grid::{FiberSlot, GridField, Layout, NormFlavor, NormSpec};
use crate::numerics::ModeExpansion;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Relative amplitude allowed in the part of a fiber that a dilation pushes off the grid.
pub const DILATION_EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorId {
    H1,
    Hw,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub field: GridField,
    pub time: f64,
    pub operator: OperatorId,
}

impl FlowState {
    pub fn new(field: GridField) -> Self {
        let operator = if field.layout().has_weighted_fibers() { OperatorId::Hw } else { OperatorId::H1 };
        Self { field, time: 0.0, operator }
    }
}

/// `G_t = e^{itH}` fiber by fiber.
pub fn evolve(state: &FlowState, t: f64, method: EvolveMethod) -> Result<FlowState> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter("evolution time must be finite".into()));
    }
    let field = state.field.map_fibers(|s, v| fiber_evolve(&s.op, &s.axis, t, v, method))?;
    Ok(FlowState { field, time: state.time + t, operator: state.operator })
}

/// Samples `G_t f` from an analytic `f`.
///
/// Unweighted fibers get `f(x₁ + tψ, x′)`. On weighted fibers the shift is
/// taken in `y = Φ(x₁)` and wrapped into `(-W/2, W/2]`, each wrap
/// contributing a factor `α`.
pub fn evolve_closed_form<F>(layout: &Arc<Layout>, f: F, t: f64) -> Result<GridField>
where
    F: Fn(f64, &[f64]) -> Complex64 + Sync,
{
    let values = layout
        .slots
        .par_iter()
        .map(|s| {
            let shift = t * s.op.psi();
            match (s.axis, s.op.phi_map()) {
                (FiberAxis::Phi { n }, Some(p)) => {
                    let w = p.mass();
                    (0..n)
                        .map(|j| {
                            let y = -0.5 * w + (j as f64 + 0.5) * w / n as f64 + shift;
                            let wraps = ((y + 0.5 * w) / w).floor();
                            let foot = y - wraps * w;
                            s.op.alpha().powi(wraps as i32) * f(p.phi_inverse(foot), &s.point)
                        })
                        .collect()
                }
                _ => s.nodes.iter().map(|&x| f(x + shift, &s.point)).collect(),
            }
        })
        .collect();
    GridField::from_values(layout, values)
}

/// `ℱ₁⁻¹ e^{itψξ₁} ℱ₁ f` for `H₁`.
pub fn evolve_fourier(f: &GridField, t: f64) -> Result<GridField> {
    let mut ff = partial_fourier(f)?;
    let layout = f.layout().clone();
    let xi = ff.xi.clone();
    for (s, v) in layout.slots.iter().zip(ff.values.iter_mut()) {
        let psi = s.op.psi();
        for (c, k) in v.iter_mut().zip(&xi) {
            *c *= Complex64::from_polar(1.0, t * psi * k);
        }
    }
    inverse_partial_fourier(&ff)
}

fn expansion(s: &FiberSlot, v: &[Complex64]) -> ModeExpansion {
    match (s.axis, s.op.phi_map()) {
        (FiberAxis::Phi { .. }, Some(p)) => ModeExpansion::from_samples(v, -0.5 * p.mass(), p.mass(), s.op.beta(), 0.5),
        (FiberAxis::Uniform { half_width, .. }, _) => ModeExpansion::from_samples(v, -half_width, 2.0 * half_width, 0.0, 0.0),
        _ => unreachable!("weighted fibers always carry a Phi axis"),
    }
}

/// `Hf` by spectral differentiation: the multiplier `ψξ₁` on unweighted
/// fibers and `ψμ` in the twisted `y` expansion on weighted ones.
pub fn apply_generator(f: &GridField) -> Result<GridField> {
    f.map_fibers(|s, v| {
        let psi = s.op.psi();
        let mut e = expansion(s, v);
        e.apply_multiplier(|mu| Complex64::new(psi * mu, 0.0));
        Ok(e.to_samples())
    })
}

/// `-i d/dx₁` on an unweighted fiber.
fn transport_derivative(s: &FiberSlot, v: &[Complex64]) -> Vec<Complex64> {
    let mut e = expansion(s, v);
    e.apply_multiplier(|mu| Complex64::new(mu, 0.0));
    e.to_samples()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Inverse,
}

/// `𝒰f` or `𝒰⁻¹f`, resampled by band-limited interpolation.
///
/// Samples that move outside `[-X, X)` are set to 0; this is refused unless
/// the data they come from is negligible.
pub fn dilation(f: &GridField, direction: Direction) -> Result<GridField> {
    dilation_with_tolerance(f, direction, DILATION_EDGE_TOL)
}

/// [`dilation`] with an explicit bound on the relative amplitude discarded at the edge.
pub fn dilation_with_tolerance(f: &GridField, direction: Direction, edge_tol: f64) -> Result<GridField> {
    let layout = f.layout();
    if layout.has_weighted_fibers() {
        return Err(Error::Precondition("the dilation acts on unweighted fibers".into()));
    }
    let x_half = layout.spec.half_width;
    f.map_fibers(|s, v| {
        let psi = s.op.psi();
        let scale = match direction {
            Direction::Forward => psi,
            Direction::Inverse => 1.0 / psi,
        };
        if scale == 1.0 {
            return Ok(v.to_vec());
        }
        let peak = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(v.to_vec());
        }
        let keep = 0.98 * scale.min(1.0) * x_half;
        let edge = s
            .nodes
            .iter()
            .zip(v)
            .filter(|(x, _)| x.abs() >= keep)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
            / peak;
        if edge > edge_tol {
            return Err(Error::OutsideSupport { edge });
        }
        let e = expansion(s, v);
        let root = scale.sqrt();
        Ok(s.nodes
            .iter()
            .map(|&x| {
                let z = scale * x;
                if z < -x_half || z >= x_half {
                    Complex64::new(0.0, 0.0)
                } else {
                    e.eval(z) * root
                }
            })
            .collect())
    })
}

/// `‖𝒰⁻¹(-i∂₁)𝒰f - H₁f‖ / ‖f‖` in `L²`.
///
/// Only `f` itself must be negligible near the edge; whatever the
/// intermediate derivative loses there shows up in the residual.
pub fn verify_conjugation(f: &GridField) -> Result<f64> {
    let layout = f.layout();
    if layout.profile.is_constant() && layout.slots.iter().all(|s| s.op.psi() == 1.0) {
        return Ok(0.0);
    }
    let lifted = dilation(f, Direction::Forward)?;
    let moved = lifted.map_fibers(|s, v| Ok(transport_derivative(s, v)))?;
    let lhs = dilation_with_tolerance(&moved, Direction::Inverse, f64::INFINITY)?;
    let rhs = apply_generator(f)?;
    let l2 = NormSpec::new(0.0, NormFlavor::PlainL2)?;
    Ok(lhs.sub(&rhs)?.norm(&l2) / f.norm(&l2))
}
