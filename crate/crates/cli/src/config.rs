//! TOML experiment configuration.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shearspec::ergodic_average::AverageMethod;
use shearspec::fiber_ops::{Discretization, EvolveMethod};
use shearspec::field_model::{BoundaryPhase, ConfinementRegion, FiberDomain, ProfileKind, ShearProfile, WeightField, WeightKind};
use shearspec::grid::GridSpec;
use shearspec::spectrum_assembly::FiberSubset;
use std::path::{Path, PathBuf};

/// Samples used when checking the declared profile constants.
pub const REGULARITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for the dictionary translates.
    #[serde(default)]
    pub seed: u64,
    pub operator: OperatorBlock,
    pub grid: GridBlock,
    pub task: TaskBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub profile: ProfileBlock,
    #[serde(default)]
    pub weight: Option<WeightBlock>,
    #[serde(default)]
    pub phase: Option<BoundaryPhase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBlock {
    #[serde(flatten)]
    pub kind: ProfileKind,
    /// Declared `ℓ`; derived from the family when absent.
    #[serde(default)]
    pub ell: Option<f64>,
    /// Declared `L`; derived from the family when absent.
    #[serde(default)]
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightBlock {
    #[serde(flatten)]
    pub kind: WeightKind,
    /// `"full"`, `"empty"` or a list of `[a, b]` intervals in `x′₀`; full by default.
    #[serde(default)]
    pub confinement: Option<ConfinementRegion>,
    #[serde(default)]
    pub m_bound: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    /// Samples per fiber along `x₁` (power of two).
    pub n: usize,
    /// `X`: the `x₁` box is `[-X, X]`.
    pub half_width: f64,
    #[serde(default)]
    pub dim_fiber: usize,
    /// `X′`: the fiber box is `[-X′, X′]^{dim_fiber}`.
    #[serde(default = "one")]
    pub fiber_half_width: f64,
    /// Midpoint cells per fiber dimension.
    #[serde(default = "eight")]
    pub fiber_cells: usize,
}

fn one() -> f64 {
    1.0
}

fn eight() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskBlock {
    Spectrum {
        #[serde(default)]
        k_window: Option<(i64, i64)>,
        #[serde(default)]
        lambda_range: Option<(f64, f64)>,
        #[serde(default)]
        fiber_samples: Option<usize>,
        #[serde(default)]
        subset: Option<FiberSubset>,
    },
    Dos {
        lambdas: LambdaSweep,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default)]
        weighted: bool,
        #[serde(default)]
        cdf_step: Option<f64>,
        #[serde(default)]
        f: DataSpec,
        #[serde(default)]
        g: Option<DataSpec>,
    },
    Evolve {
        times: Vec<f64>,
        #[serde(default = "default_evolve")]
        method: EvolveMethod,
        #[serde(default)]
        data: DataSpec,
        #[serde(default = "yes")]
        snapshot: bool,
    },
    Ergodic {
        t_values: Vec<f64>,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_average")]
        method: AverageMethod,
        #[serde(default = "two")]
        bands: usize,
        /// Fixed splitting parameter; `T^{-2/3}` per `T` when absent.
        #[serde(default)]
        epsilon: Option<f64>,
        /// λ samples per side for the fitted density constant.
        #[serde(default = "eight")]
        dos_samples: usize,
        #[serde(default)]
        dense_check: Option<DenseCheck>,
    },
    Fiber {
        #[serde(default)]
        point: Option<Vec<f64>>,
        #[serde(default = "default_k_window")]
        k_window: (i64, i64),
        #[serde(default = "default_oracle_n")]
        oracle_n: usize,
        #[serde(default = "default_disc")]
        discretization: Discretization,
    },
}

fn default_sigma() -> f64 {
    1.0
}

fn default_evolve() -> EvolveMethod {
    EvolveMethod::Spectral
}

fn default_average() -> AverageMethod {
    AverageMethod::Spectral
}

fn default_k_window() -> (i64, i64) {
    (-5, 5)
}

fn default_oracle_n() -> usize {
    4096
}

fn default_disc() -> Discretization {
    Discretization::FiniteDifference4
}

fn yes() -> bool {
    true
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSweep {
    List(Vec<f64>),
    Range { min: f64, max: f64, count: usize },
}

impl LambdaSweep {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        match self {
            LambdaSweep::List(v) if !v.is_empty() => Ok(v.clone()),
            LambdaSweep::Range { min, max, count } if *count >= 2 && max > min => {
                Ok((0..*count).map(|i| min + (max - min) * i as f64 / (*count - 1) as f64).collect())
            }
            LambdaSweep::Range { min, count: 1, .. } => Ok(vec![*min]),
            _ => Err(CliError::Config("lambda sweep is empty or inverted".into())),
        }
    }
}

/// Test data `e^{-(u-c)²/2w²}·e^{-|x′|²/2w′²}·e^{iκu}`.
///
/// `u = x₁` on unweighted fibers and `tan(πΦ(x₁)/W)` on confined ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default)]
    pub center: f64,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub fiber_width: f64,
    #[serde(default)]
    pub chirp: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self { center: 0.0, width: 1.0, fiber_width: 1.0, chirp: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseCheck {
    pub half_width: f64,
    pub n: usize,
    pub t_values: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Subset of `csv`, `json`, `gnuplot`; all when empty.
    #[serde(default)]
    pub formats: Vec<String>,
}

impl OutputBlock {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.is_empty() || self.formats.iter().any(|f| f == format)
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub sigma: Option<f64>,
}

/// The validated model objects built from a config.
#[derive(Debug, Clone)]
pub struct Model {
    pub profile: ShearProfile,
    pub weight: WeightField,
    pub phase: BoundaryPhase,
    pub domain: FiberDomain,
    pub spec: GridSpec,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.apply(overrides);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.grid_n {
            self.grid.n = n;
        }
        if let Some(s) = o.sigma {
            match &mut self.task {
                TaskBlock::Dos { sigma, .. } | TaskBlock::Ergodic { sigma, .. } => *sigma = s,
                _ => {}
            }
        }
    }

    pub fn task_name(&self) -> &'static str {
        match self.task {
            TaskBlock::Spectrum { .. } => "spectrum",
            TaskBlock::Dos { .. } => "dos",
            TaskBlock::Evolve { .. } => "evolve",
            TaskBlock::Ergodic { .. } => "ergodic",
            TaskBlock::Fiber { .. } => "fiber",
        }
    }

    /// SHA-256 of the effective configuration (after overrides), as JSON.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        // the output location does not change any result
        canon.output = OutputBlock::default();
        let text = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from("shearspec-out"))
    }

    pub fn model(&self) -> CliResult<Model> {
        let g = &self.grid;
        let domain = FiberDomain::new(g.dim_fiber, g.fiber_half_width)?;
        let spec = GridSpec::new(g.n, g.half_width, g.fiber_cells)?;
        let p = &self.operator.profile;
        let base = ShearProfile::new(p.kind.clone(), g.dim_fiber)?;
        let profile = ShearProfile::with_declared(
            p.kind.clone(),
            g.dim_fiber,
            p.ell.unwrap_or(base.ell),
            p.lipschitz.unwrap_or(base.lipschitz),
        )?;
        let reg = profile.validate_regularity(&domain, REGULARITY_SAMPLES)?;
        if !reg.pass {
            return Err(CliError::Config(format!(
                "declared constants fail on the fiber box: observed ell {} and L {}",
                reg.ell_observed, reg.lipschitz_observed
            )));
        }
        let weight = match &self.operator.weight {
            None => WeightField::unit(),
            Some(w) if w.kind == WeightKind::Unit => {
                if w.confinement.as_ref().is_some_and(|c| *c != ConfinementRegion::Empty) {
                    return Err(CliError::Config("the unit weight has an empty confinement region".into()));
                }
                WeightField::unit()
            }
            Some(w) => {
                let conf = w.confinement.clone().unwrap_or(ConfinementRegion::Full);
                let field = WeightField::new(w.kind.clone(), conf, w.m_bound)?;
                if field.m_bound.is_none() && field.confinement == ConfinementRegion::Full {
                    let m = field.mass_range().map(|r| r.1);
                    WeightField { m_bound: m, ..field }
                } else {
                    field
                }
            }
        };
        let phase = self.operator.phase.unwrap_or(BoundaryPhase::constant(0.0));
        self.validate_task()?;
        Ok(Model { profile, weight, phase, domain, spec })
    }

    fn validate_task(&self) -> CliResult<()> {
        match &self.task {
            TaskBlock::Dos { sigma, .. } | TaskBlock::Ergodic { sigma, .. } if !(*sigma > 0.5) => {
                Err(CliError::Config(format!("sigma must exceed 1/2 for this task, got {sigma}")))
            }
            TaskBlock::Evolve { times, .. } if times.is_empty() || times.iter().any(|t| !t.is_finite()) => {
                Err(CliError::Config("evolve needs a nonempty list of finite times".into()))
            }
            TaskBlock::Ergodic { t_values, .. } if t_values.iter().any(|t| !(*t > 0.0) || !t.is_finite()) => {
                Err(CliError::Config("T values must be positive and finite".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
        seed = 3
        [operator.profile]
        family = "affine-saturating"
        offset = 2.0
        amplitude = 1.0
        rate = 1.0
        [operator.weight]
        family = "gaussian"
        width = 1.5
        confinement = [[0.0, 1.0]]
        [grid]
        n = 64
        half_width = 10.0
        dim_fiber = 1
        [task]
        kind = "dos"
        lambdas = [0.0, 1.0]
        [output]
        dir = "a"
    "#;

    #[test]
    fn families_parse_through_flatten() {
        let cfg: ExperimentConfig = toml::from_str(TEXT).unwrap();
        assert!(matches!(cfg.operator.profile.kind, ProfileKind::AffineSaturating { .. }));
        let w = cfg.operator.weight.as_ref().unwrap();
        assert_eq!(w.kind, WeightKind::Gaussian { width: 1.5 });
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(cfg.model().is_ok());
    }

    #[test]
    fn hash_ignores_output_but_not_overrides() {
        let cfg: ExperimentConfig = toml::from_str(TEXT).unwrap();
        let mut moved = cfg.clone();
        moved.apply(&Overrides { out: Some("elsewhere".into()), ..Default::default() });
        assert_eq!(cfg.hash(), moved.hash());
        let mut reseeded = cfg.clone();
        reseeded.apply(&Overrides { sigma: Some(2.0), ..Default::default() });
        assert_ne!(cfg.hash(), reseeded.hash());
    }
}
