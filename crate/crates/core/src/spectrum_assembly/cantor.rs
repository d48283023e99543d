//! Middle-thirds Cantor spectra `C + (2π/W)ℤ` with `C ⊂ (0, π/W)`.

use super::{SpectralInterval, SpectralTag, SpectrumSet};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MAX_DEPTH: u32 = 30;
const MAX_COMPONENTS: u64 = 1 << 20;

/// Depth-`n` middle-thirds construction on the base interval `(0, π/W)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub depth: u32,
    /// Fiber mass `W`, shared by all fibers of the construction.
    pub total_mass: f64,
}

impl CantorSpec {
    pub fn new(depth: u32, total_mass: f64) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!("Cantor depth must be in 1..={MAX_DEPTH}, got {depth}")));
        }
        if !(total_mass > 0.0) || !total_mass.is_finite() {
            return Err(Error::InvalidParameter("Cantor total mass must be positive".into()));
        }
        if PI / total_mass > 2.0 * PI {
            return Err(Error::InvalidParameter("Cantor base interval needs pi/W <= 2 pi (W >= 1/2)".into()));
        }
        Ok(Self { depth, total_mass })
    }

    /// Length `π/W` of the base interval.
    pub fn base_length(&self) -> f64 {
        PI / self.total_mass
    }

    /// Spectral period `2π/W`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.total_mass
    }

    pub fn components_per_period(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn component_length(&self) -> f64 {
        self.base_length() / 3f64.powi(self.depth as i32)
    }

    /// Left end of component `j` (binary digits of `j` pick left/right thirds,
    /// most significant first).
    pub fn component_start(&self, j: u64) -> f64 {
        let mut acc = 0.0;
        let mut scale = 1.0;
        for i in (0..self.depth).rev() {
            scale /= 3.0;
            if (j >> i) & 1 == 1 {
                acc += 2.0 * scale;
            }
        }
        acc * self.base_length()
    }

    /// Boundary phase `β = W·c(s)` for a fiber parameter `s ∈ [0, 1]`.
    ///
    /// `s` is spread linearly across the `2ⁿ` components, so the phase range is
    /// the depth-`n` set scaled by `W`.
    pub fn phase_at(&self, s: f64) -> f64 {
        let count = self.components_per_period();
        let pos = s.clamp(0.0, 1.0) * count as f64;
        let j = (pos.floor() as u64).min(count - 1);
        let frac = pos - j as f64;
        self.total_mass * (self.component_start(j) + frac * self.component_length())
    }

    /// Membership of `λ` in the depth-`n` approximation of `C + (2π/W)ℤ`.
    ///
    /// The query is reduced to `u = λ/(π/W)`, then to one period `u - 2k`
    /// in `(0, 1)`, and the ternary test on that float is carried out in exact
    /// integer arithmetic.
    pub fn contains(&self, lambda: f64) -> bool {
        if !lambda.is_finite() {
            return false;
        }
        let units = lambda / self.base_length();
        let k = (units / 2.0).floor();
        let u = units - 2.0 * k;
        self.contains_unit(u)
    }

    /// Ternary membership of `u` in the depth-`n` set on `(0, 1)`.
    pub fn contains_unit(&self, u: f64) -> bool {
        if !(u > 0.0 && u < 1.0) {
            return false;
        }
        // u < 3^{-n} lies in the first component
        if u <= 3f64.powi(-(self.depth as i32)) {
            return true;
        }
        let (mant, exp) = dyadic(u);
        // u = mant / 2^exp with exp <= 53 + 48 here, so 3^30·mant fits in u128
        let denom: u128 = 1u128 << exp;
        let mut num: u128 = mant as u128;
        for _ in 0..self.depth {
            let t = 3 * num;
            if t > denom && t < 2 * denom {
                return false;
            }
            num = if t <= denom { t } else { t - 2 * denom };
        }
        true
    }

    /// The depth-`n` components for each `k` in the window, tagged singular continuous.
    pub fn spectrum(&self, k_lo: i64, k_hi: i64) -> Result<SpectrumSet> {
        if k_hi < k_lo {
            return Err(Error::InvalidParameter("empty k window".into()));
        }
        let periods = (k_hi - k_lo + 1) as u64;
        let total = periods.saturating_mul(self.components_per_period());
        if total > MAX_COMPONENTS {
            return Err(Error::TooLarge(total));
        }
        let len = self.component_length();
        let starts: Vec<f64> = (0..self.components_per_period()).map(|j| self.component_start(j)).collect();
        let mut intervals = Vec::with_capacity(total as usize);
        for k in k_lo..=k_hi {
            let shift = k as f64 * self.period();
            for &s in &starts {
                intervals.push(SpectralInterval {
                    lo: ExtendedReal::Finite(shift + s),
                    hi: ExtendedReal::Finite(shift + s + len),
                    tag: SpectralTag::Sc,
                });
            }
        }
        let resolved = (
            ExtendedReal::Finite(k_lo as f64 * self.period()),
            ExtendedReal::Finite((k_hi + 1) as f64 * self.period()),
        );
        Ok(SpectrumSet { intervals, points: vec![], resolved })
    }
}

/// Splits a positive float into `mant / 2^exp` exactly.
fn dyadic(u: f64) -> (u64, u32) {
    let bits = u.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut e) = if raw_exp == 0 { (frac, 1074i64) } else { (frac | (1u64 << 52), 1075 - raw_exp) };
    while e > 0 && mant & 1 == 0 {
        mant >>= 1;
        e -= 1;
    }
    (mant, e as u32)
}
