//! One runner per task. Each writes its files and reports whether the
//! tolerance diagnostics passed.

use crate::config::{DataSpec, DenseCheck, ExperimentConfig, LambdaSweep, Model, TaskBlock};
use crate::error::{CliError, CliResult};
use crate::output::{ext, num, Emitter, Table};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use shearspec::density_of_states::{
    dos_sweep, verify_dos_bound, DosBoundCheck, DosOptions, NormFlavor, NormSpec, SpectralDensityReport, DEFAULT_CDF_STEP,
};
use shearspec::ergodic_average::{
    build_dictionary, default_epsilon, dense_operator_norm_1d, fit_envelope_constant, fitted_dos_constant, operator_norm_proxy,
    rate_envelope, splitting_bound, AverageMethod, DictionaryOptions, Envelope, ErgodicRun, RateEnvelope, RATE_EXPONENT,
};
use shearspec::evolution::{evolve, verify_conjugation, FlowState, OperatorId};
use shearspec::extended::ExtendedReal;
use shearspec::fiber_ops::{
    deficiency_witness, fiber_eigenvalues, fiber_matrix_oracle, Discretization, EvolveMethod, FiberOperator, FiberSpectrum, Sign,
};
use shearspec::field_model::{BoundaryPhase, ShearProfile};
use shearspec::grid::{GridField, GridSpec, Layout};
use shearspec::spectrum_assembly::cantor::CantorSpec;
use shearspec::spectrum_assembly::{assemble_spectrum, branch_table, spectral_gap, AssemblyOptions, FiberSubset, SpectrumSet};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Tolerance on `|surface - cdf'|` in density reports.
pub const DOS_TOLERANCE: f64 = 1e-3;
/// Norm drift and group-law tolerance for grid evolution.
pub const EVOLVE_TOLERANCE: f64 = 1e-6;
/// Relative tolerance of the fiber matrix oracle.
pub const FIBER_TOLERANCE: f64 = 1e-3;
const DEFAULT_BRANCH_WINDOW: (i64, i64) = (-5, 5);

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub message: String,
}

fn x_prime_columns(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x_prime_{i}")).collect()
}

fn data_field(layout: &Arc<Layout>, d: &DataSpec) -> GridField {
    GridField::from_slot_fn(layout, |s, x| {
        let u = s.op.phi_map().map_or(x, |p| p.stretched(x));
        let r2: f64 = s.point.iter().map(|v| v * v).sum();
        let amp = (-0.5 * ((u - d.center) / d.width).powi(2) - 0.5 * r2 / (d.fiber_width * d.fiber_width)).exp();
        Complex64::from_polar(amp, d.chirp * u)
    })
}

fn layout_of(m: &Model) -> CliResult<Arc<Layout>> {
    Ok(Layout::new(&m.profile, &m.weight, &m.phase, m.domain, m.spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub task: String,
    pub config_hash: String,
    pub spectrum: SpectrumSet,
    pub cantor: Option<CantorSpec>,
    pub embedded: Vec<f64>,
}

pub fn run_spectrum(cfg: &ExperimentConfig, m: &Model, em: &mut Emitter) -> CliResult<Outcome> {
    let TaskBlock::Spectrum { k_window, lambda_range, fiber_samples, subset } = &cfg.task else {
        unreachable!()
    };
    let mut components = Table::new(["kind", "lo", "hi", "tag", "multiplicity", "embedded"]);
    let (spectrum, cantor) = match m.phase {
        BoundaryPhase::Cantor { spec, .. } => {
            let (lo, hi) = m
                .weight
                .mass_range()
                .ok_or_else(|| CliError::Config("the Cantor phase needs confined fibers".into()))?;
            if m.profile.evaluate(&vec![0.0; m.domain.dim])? != 1.0 || !m.profile.is_constant() {
                return Err(CliError::Config("the Cantor phase needs the constant profile psi = 1".into()));
            }
            let w = spec.total_mass;
            if (lo - w).abs() > 1e-12 * w || (hi - w).abs() > 1e-12 * w {
                return Err(CliError::Config(format!("the Cantor phase needs W = {w} on every confined fiber, found [{lo}, {hi}]")));
            }
            let (a, b) = k_window.unwrap_or((0, 0));
            (spec.spectrum(a, b)?, Some(spec))
        }
        BoundaryPhase::Constant { .. } => {
            let opts = AssemblyOptions {
                k_window: *k_window,
                lambda_range: *lambda_range,
                fiber_samples: fiber_samples.unwrap_or(AssemblyOptions::default().fiber_samples),
                subset: subset.unwrap_or(FiberSubset::All),
                ..Default::default()
            };
            let set = assemble_spectrum(&m.profile, &m.weight, &m.phase, &m.domain, &opts)?;
            if m.weight.mass_range().is_some() {
                let window = k_window.unwrap_or(DEFAULT_BRANCH_WINDOW);
                let table = branch_table(&m.profile, &m.weight, &m.phase, &m.domain, window, opts.fiber_samples)?;
                let mut header = x_prime_columns(m.domain.dim);
                header.extend(["psi".to_string(), "mass".to_string()]);
                header.extend(table.ks.iter().map(|k| format!("lambda_k{k}")));
                let mut branches = Table::new(header);
                for r in &table.rows {
                    let mut row: Vec<String> = r.point.iter().map(|&v| num(v)).collect();
                    row.push(num(r.psi));
                    row.push(num(r.mass));
                    row.extend(r.lambdas.iter().map(|l| l.map(num).unwrap_or_default()));
                    branches.push(row);
                }
                em.csv("branches.csv", &branches)?;
                if m.domain.dim == 1 {
                    let plots: Vec<(usize, usize, String)> =
                        table.ks.iter().enumerate().map(|(i, k)| (1, 4 + i, format!("k = {k}"))).collect();
                    let refs: Vec<(usize, usize, &str)> = plots.iter().map(|(a, b, c)| (*a, *b, c.as_str())).collect();
                    em.gnuplot("branches.gp", "branches.csv", &["set xlabel 'x_prime_0'", "set ylabel 'lambda'"], &refs)?;
                }
            }
            (set, None)
        }
    };
    for iv in &spectrum.intervals {
        let tag = serde_json::to_value(iv.tag).map_err(std::io::Error::other)?;
        components.push(vec!["interval".into(), ext(iv.lo), ext(iv.hi), tag.as_str().unwrap_or("").into(), String::new(), String::new()]);
    }
    for p in &spectrum.points {
        let mult = serde_json::to_value(p.multiplicity).map_err(std::io::Error::other)?;
        components.push(vec![
            "point".into(),
            num(p.lambda),
            num(p.lambda),
            "pp".into(),
            mult.to_string().trim_matches('"').to_string(),
            p.embedded.to_string(),
        ]);
    }
    em.csv("spectrum.csv", &components)?;
    let embedded = spectrum.points.iter().filter(|p| p.embedded).map(|p| p.lambda).collect();
    let report = SpectrumReport { task: "spectrum".into(), config_hash: cfg.hash(), spectrum, cantor, embedded };
    em.json("spectrum.json", &report)?;
    Ok(Outcome {
        pass: true,
        message: format!("{} intervals, {} points", report.spectrum.intervals.len(), report.spectrum.points.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    pub ell: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosReport {
    pub task: String,
    pub config_hash: String,
    pub sigma: f64,
    pub weighted: bool,
    pub cdf_step: f64,
    pub constants: ProfileConstants,
    pub reports: Vec<SpectralDensityReport>,
    pub bound: DosBoundCheck,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn run_dos(cfg: &ExperimentConfig, m: &Model, em: &mut Emitter) -> CliResult<Outcome> {
    let TaskBlock::Dos { lambdas, sigma, weighted, cdf_step, f, g } = &cfg.task else {
        unreachable!()
    };
    let layout = layout_of(m)?;
    let flavor = if layout.has_weighted_fibers() { NormFlavor::YSigma } else { NormFlavor::XSigma };
    let opts = DosOptions { cdf_step: cdf_step.unwrap_or(DEFAULT_CDF_STEP), norm: NormSpec::trace_class(*sigma, flavor)? };
    let ff = data_field(&layout, f);
    let gg = data_field(&layout, g.as_ref().unwrap_or(f));
    let lams = LambdaSweep::values(lambdas)?;
    let reports = dos_sweep(&ff, &gg, &lams, &opts, *weighted)?;
    let bound = verify_dos_bound(&reports, &ff, &gg, &opts.norm)?;
    let mut t = Table::new(["lambda", "density_surface_re", "density_surface_im", "density_cdf_re", "density_cdf_im", "bound_rhs"]);
    for r in &reports {
        t.push(vec![
            num(r.lambda),
            num(r.value_surface.re),
            num(r.value_surface.im),
            num(r.value_cdf_derivative.re),
            num(r.value_cdf_derivative.im),
            num(r.bound_rhs),
        ]);
    }
    em.csv("dos.csv", &t)?;
    em.gnuplot(
        "dos.gp",
        "dos.csv",
        &["set xlabel 'lambda'", "set ylabel 'density'"],
        &[(1, 2, "surface"), (1, 4, "cdf derivative")],
    )?;
    let max_discrepancy = reports.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let pass = max_discrepancy <= DOS_TOLERANCE;
    let report = DosReport {
        task: "dos".into(),
        config_hash: cfg.hash(),
        sigma: *sigma,
        weighted: *weighted,
        cdf_step: opts.cdf_step,
        constants: ProfileConstants { ell: m.profile.ell, lipschitz: m.profile.lipschitz },
        reports,
        bound,
        max_discrepancy,
        tolerance: DOS_TOLERANCE,
        pass,
    };
    em.json("dos.json", &report)?;
    Ok(Outcome { pass, message: format!("max |surface - cdf'| = {max_discrepancy:.3e} (tol {DOS_TOLERANCE:e})") })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveRow {
    pub t: f64,
    pub norm: f64,
    pub norm_drift: f64,
    /// Max difference to the other evolution path.
    pub path_difference: f64,
    /// `‖G_{t/2}G_{t/2}f - G_t f‖_∞`.
    pub group_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub task: String,
    pub config_hash: String,
    pub operator: OperatorId,
    pub method: EvolveMethod,
    pub initial_norm: f64,
    pub rows: Vec<EvolveRow>,
    pub conjugation_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn run_evolve(cfg: &ExperimentConfig, m: &Model, em: &mut Emitter) -> CliResult<Outcome> {
    let TaskBlock::Evolve { times, method, data, snapshot } = &cfg.task else {
        unreachable!()
    };
    let layout = layout_of(m)?;
    let f = data_field(&layout, data);
    let s0 = FlowState::new(f.clone());
    let other = match method {
        EvolveMethod::Spectral => EvolveMethod::Characteristics,
        EvolveMethod::Characteristics => EvolveMethod::Spectral,
    };
    let ws = NormSpec::new(0.0, NormFlavor::WeightedL2)?;
    let initial_norm = f.norm(&ws);
    let mut header = vec!["t".to_string(), "fiber".to_string()];
    header.extend(x_prime_columns(m.domain.dim));
    header.extend(["x1".to_string(), "re".to_string(), "im".to_string()]);
    let mut snap = Table::new(header);
    let dump = |snap: &mut Table, t: f64, field: &GridField| {
        for (i, (slot, vals)) in layout.slots.iter().zip(field.values()).enumerate() {
            for (x, v) in slot.nodes.iter().zip(vals) {
                let mut row = vec![num(t), i.to_string()];
                row.extend(slot.point.iter().map(|&p| num(p)));
                row.extend([num(*x), num(v.re), num(v.im)]);
                snap.push(row);
            }
        }
    };
    if *snapshot {
        dump(&mut snap, 0.0, &f);
    }
    let mut rows = vec![];
    for &t in times {
        let a = evolve(&s0, t, *method)?;
        let b = evolve(&s0, t, other)?;
        let half = evolve(&evolve(&s0, 0.5 * t, *method)?, 0.5 * t, *method)?;
        let norm = a.field.norm(&ws);
        rows.push(EvolveRow {
            t,
            norm,
            norm_drift: (norm - initial_norm).abs(),
            path_difference: a.field.max_abs_diff(&b.field)?,
            group_residual: half.field.max_abs_diff(&a.field)?,
        });
        if *snapshot {
            dump(&mut snap, t, &a.field);
        }
    }
    let conjugation_residual = if layout.has_weighted_fibers() { None } else { verify_conjugation(&f).ok() };
    let pass = rows.iter().all(|r| r.norm_drift <= EVOLVE_TOLERANCE * initial_norm.max(1.0) && r.group_residual <= EVOLVE_TOLERANCE);
    let mut t = Table::new(["t", "norm", "norm_drift", "path_difference", "group_residual"]);
    for r in &rows {
        t.push(vec![num(r.t), num(r.norm), num(r.norm_drift), num(r.path_difference), num(r.group_residual)]);
    }
    em.csv("evolve.csv", &t)?;
    if *snapshot {
        em.csv("evolve_snapshot.csv", &snap)?;
    }
    em.gnuplot("evolve.gp", "evolve.csv", &["set xlabel 't'", "set logscale y"], &[(1, 3, "norm drift"), (1, 5, "group residual")])?;
    let report = EvolveReport {
        task: "evolve".into(),
        config_hash: cfg.hash(),
        operator: s0.operator,
        method: *method,
        initial_norm,
        rows,
        conjugation_residual,
        tolerance: EVOLVE_TOLERANCE,
        pass,
    };
    em.json("evolve.json", &report)?;
    let worst = report.rows.iter().map(|r| r.norm_drift.max(r.group_residual)).fold(0.0, f64::max);
    Ok(Outcome { pass, message: format!("worst drift/group residual {worst:.3e} (tol {EVOLVE_TOLERANCE:e})") })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub t: f64,
    pub epsilon: f64,
    pub bound: f64,
    pub proxy_sq: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    /// Fitted density constant `sup A_λ(f,f)/(1 + L_Γ)` over the dictionary.
    pub c_dos: f64,
    pub rows: Vec<SplitRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseRow {
    pub t: f64,
    pub proxy: f64,
    pub dense: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub task: String,
    pub config_hash: String,
    pub seed: u64,
    pub method: AverageMethod,
    pub run: ErgodicRun,
    pub best_pairs: Vec<(String, String)>,
    pub epsilon_used: Vec<f64>,
    #[serde(rename = "C_fit")]
    pub c_fit: f64,
    pub slope: ExtendedReal,
    pub rate: RateEnvelope,
    pub splitting: Option<Splitting>,
    pub dense_check: Option<Vec<DenseRow>>,
    pub pass: bool,
}

fn dense_rows(profile: &ShearProfile, dim: usize, check: &DenseCheck, sigma: f64, seed: u64, method: AverageMethod) -> CliResult<Vec<DenseRow>> {
    let psi = profile.evaluate(&vec![0.0; dim])?;
    let line = Layout::flat(
        &ShearProfile::constant(psi, 0)?,
        shearspec::field_model::FiberDomain::new(0, 1.0)?,
        GridSpec::new(check.n, check.half_width, 1)?,
    )?;
    let dict = build_dictionary(&line, &DictionaryOptions::new(sigma, seed))?;
    check
        .t_values
        .unwrap_or([1.0, 10.0, 100.0])
        .iter()
        .map(|&t| {
            let proxy = operator_norm_proxy(&dict, t, sigma, method)?.value;
            let dense = dense_operator_norm_1d(psi, t, sigma, check.half_width, check.n);
            Ok(DenseRow { t, proxy, dense, ratio: proxy / dense })
        })
        .collect()
}

pub fn run_ergodic(cfg: &ExperimentConfig, m: &Model, em: &mut Emitter) -> CliResult<Outcome> {
    let TaskBlock::Ergodic { t_values, sigma, method, bands, epsilon, dos_samples, dense_check } = &cfg.task else {
        unreachable!()
    };
    let layout = layout_of(m)?;
    let dict = build_dictionary(&layout, &DictionaryOptions { sigma: *sigma, bands: *bands, seed: cfg.seed })?;
    let proxies = t_values
        .iter()
        .map(|&t| operator_norm_proxy(&dict, t, *sigma, *method))
        .collect::<shearspec::error::Result<Vec<_>>>()?;
    let norms: Vec<f64> = proxies.iter().map(|p| p.value).collect();
    let run = ErgodicRun {
        t_values: t_values.clone(),
        sigma: *sigma,
        dictionary: dict.iter().map(|d| d.label.clone()).collect(),
        norms_observed: norms.clone(),
        envelope: Envelope { c_fit: fit_envelope_constant(t_values, &norms), exponent: RATE_EXPONENT },
    };
    let rate = rate_envelope(&run)?;
    let eps: Vec<f64> = t_values.iter().map(|&t| epsilon.unwrap_or_else(|| default_epsilon(t))).collect();
    let splitting = match spectral_gap(&m.profile, &m.weight, &m.phase) {
        Ok(_) if layout.has_weighted_fibers() => {
            let c_dos = fitted_dos_constant(&dict, *sigma, *dos_samples)?;
            let rows = t_values
                .iter()
                .zip(&eps)
                .zip(&norms)
                .map(|((&t, &e), &p)| {
                    let bound = splitting_bound(m.profile.ell, m.profile.lipschitz, t, e, c_dos);
                    SplitRow { t, epsilon: e, bound, proxy_sq: p * p, holds: p * p <= bound }
                })
                .collect();
            Some(Splitting { c_dos, rows })
        }
        _ => None,
    };
    let dense = match dense_check {
        Some(c) => Some(dense_rows(&m.profile, m.domain.dim, c, *sigma, cfg.seed, *method)?),
        None => None,
    };
    let mut t = Table::new(["T", "proxy", "proxy_sq", "envelope_value", "epsilon_used"]);
    for (i, &tv) in t_values.iter().enumerate() {
        t.push(vec![num(tv), num(norms[i]), num(norms[i] * norms[i]), num(rate.envelope_values[i]), num(eps[i])]);
    }
    em.csv("ergodic.csv", &t)?;
    em.gnuplot(
        "ergodic.gp",
        "ergodic.csv",
        &["set logscale xy", "set xlabel 'T'", "set ylabel 'squared proxy'"],
        &[(1, 3, "proxy^2"), (1, 4, "C T^(-2/3)")],
    )?;
    let split_ok = splitting.as_ref().is_none_or(|s| s.rows.iter().all(|r| r.holds));
    let dense_ok = dense.as_ref().is_none_or(|d| d.iter().all(|r| (0.5..=2.0).contains(&r.ratio)));
    let pass = rate.pass && split_ok && dense_ok;
    let report = ErgodicReport {
        task: "ergodic".into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        method: *method,
        c_fit: rate.c_fit,
        slope: rate.slope_observed,
        run,
        best_pairs: proxies.into_iter().map(|p| p.best_pair).collect(),
        epsilon_used: eps,
        rate,
        splitting,
        dense_check: dense,
        pass,
    };
    em.json("ergodic.json", &report)?;
    Ok(Outcome {
        pass,
        message: format!(
            "C_fit {:.3e}, slope {} (squared), envelope {}, splitting {}, dense check {}",
            report.c_fit,
            report.slope,
            if report.rate.pass { "holds" } else { "violated" },
            if split_ok { "ok" } else { "violated" },
            if dense_ok { "ok" } else { "outside x2" }
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub k: i64,
    pub exact: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficiencySummary {
    pub sign: Sign,
    pub residual: f64,
    pub limit_minus: f64,
    pub limit_plus: f64,
    pub in_adjoint_domain: bool,
    pub limits_nonzero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    pub task: String,
    pub config_hash: String,
    pub point: Vec<f64>,
    pub psi: f64,
    /// `None` for an infinite-mass fiber.
    pub mass: Option<f64>,
    pub beta: f64,
    pub spectrum: FiberSpectrum,
    pub discretization: Discretization,
    pub eigenvalues: Vec<EigenRow>,
    pub deficiency: Vec<DeficiencySummary>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn run_fiber(cfg: &ExperimentConfig, m: &Model, em: &mut Emitter) -> CliResult<Outcome> {
    let TaskBlock::Fiber { point, k_window, oracle_n, discretization } = &cfg.task else {
        unreachable!()
    };
    let point = point.clone().unwrap_or_else(|| vec![0.0; m.domain.dim]);
    if point.len() != m.domain.dim || !m.domain.contains(&point) {
        return Err(CliError::Config(format!("fiber point {point:?} is not in the fiber box")));
    }
    let op = FiberOperator::from_fields(&m.profile, &m.weight, &m.phase, &point)?;
    let mass = op.mass().finite();
    let mut eigenvalues = vec![];
    let mut deficiency = vec![];
    if let Some(w) = mass {
        let exact = fiber_eigenvalues(&op, k_window.0, k_window.1)?;
        let oracle = fiber_matrix_oracle(&op, *oracle_n, *discretization)?;
        let spacing = TAU * op.psi() / w;
        for (k, e) in (k_window.0..=k_window.1).zip(exact) {
            let o = oracle.iter().copied().min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs())).unwrap_or(f64::NAN);
            eigenvalues.push(EigenRow { k, exact: e, oracle: o, rel_err: (o - e).abs() / e.abs().max(spacing) });
        }
        for sign in [Sign::Plus, Sign::Minus] {
            let r = deficiency_witness(&op, sign)?;
            deficiency.push(DeficiencySummary {
                sign,
                residual: r.residual,
                limit_minus: r.limit_minus,
                limit_plus: r.limit_plus,
                in_adjoint_domain: r.in_adjoint_domain,
                limits_nonzero: r.limits_nonzero,
            });
        }
    }
    let mut t = Table::new(["k", "lambda_exact", "lambda_oracle", "rel_err"]);
    for r in &eigenvalues {
        t.push(vec![r.k.to_string(), num(r.exact), num(r.oracle), num(r.rel_err)]);
    }
    em.csv("fiber.csv", &t)?;
    em.gnuplot("fiber.gp", "fiber.csv", &["set xlabel 'k'", "set ylabel 'lambda'"], &[(1, 2, "exact"), (1, 3, "oracle")])?;
    let pass = eigenvalues.iter().all(|r| r.rel_err <= FIBER_TOLERANCE)
        && deficiency.iter().all(|d| d.in_adjoint_domain && d.limits_nonzero);
    let report = FiberReport {
        task: "fiber".into(),
        config_hash: cfg.hash(),
        point,
        psi: op.psi(),
        mass,
        beta: op.beta(),
        spectrum: op.spectrum(),
        discretization: *discretization,
        eigenvalues,
        deficiency,
        tolerance: FIBER_TOLERANCE,
        pass,
    };
    em.json("fiber.json", &report)?;
    let worst = report.eigenvalues.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(Outcome {
        pass,
        message: match mass {
            Some(w) => format!("W = {w}, max oracle rel err {worst:.3e} (tol {FIBER_TOLERANCE:e})"),
            None => "infinite-mass fiber: spectrum is the whole line".into(),
        },
    })
}
