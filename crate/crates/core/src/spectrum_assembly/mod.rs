//! Assembly of `Σ(H_w)` from fiber spectra.
//!
//! Fibers off the confinement region carry the whole real line. A fiber in
//! `S` has the ladder `ψ(x′)(β+2πk)/W(x′)`, so each branch `k` sweeps
//! `(β+2πk)·r` where `r = ψ/W` ranges over its values on the closure of each
//! connected piece of `S`. A piece whose `r` is constant gives a point; a
//! positive-measure plateau of `r` inside a varying piece gives an embedded
//! eigenvalue ladder.

pub mod cantor;

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::field_model::{BoundaryPhase, ConfinementRegion, FiberDomain, ShearProfile, WeightField};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
const PLATEAU_RUN: usize = 3;
const PLATEAU_REL: f64 = 1e-12;
const WINDOW_SEARCH_CAP: i64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralTag {
    Pp,
    AcCandidate,
    Sc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInterval {
    pub lo: ExtendedReal,
    pub hi: ExtendedReal,
    pub tag: SpectralTag,
}

impl SpectralInterval {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        let x = ExtendedReal::Finite(x);
        self.lo.shift(-tol) <= x && x <= self.hi.shift(tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u64),
    Infinite,
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(n) => s.serialize_u64(*n),
            Multiplicity::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            N(u64),
            S(String),
        }
        match Repr::deserialize(d)? {
            Repr::N(n) => Ok(Multiplicity::Finite(n)),
            Repr::S(s) if s == "infinite" => Ok(Multiplicity::Infinite),
            Repr::S(s) => Err(serde::de::Error::custom(format!("bad multiplicity {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub multiplicity: Multiplicity,
    pub embedded: bool,
}

/// A union of closed intervals and points, with the λ range that the chosen
/// `k` window fully resolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpectrumJson", try_from = "SpectrumJson")]
pub struct SpectrumSet {
    pub intervals: Vec<SpectralInterval>,
    pub points: Vec<SpectralPoint>,
    pub resolved: (ExtendedReal, ExtendedReal),
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    intervals: Vec<[ExtendedReal; 2]>,
    points: Vec<SpectralPoint>,
    tags: Vec<SpectralTag>,
    resolved: [ExtendedReal; 2],
}

impl From<SpectrumSet> for SpectrumJson {
    fn from(s: SpectrumSet) -> Self {
        let tags = s.intervals.iter().map(|i| i.tag).chain(s.points.iter().map(|_| SpectralTag::Pp)).collect();
        SpectrumJson {
            intervals: s.intervals.iter().map(|i| [i.lo, i.hi]).collect(),
            points: s.points,
            tags,
            resolved: [s.resolved.0, s.resolved.1],
        }
    }
}

impl TryFrom<SpectrumJson> for SpectrumSet {
    type Error = String;
    fn try_from(j: SpectrumJson) -> std::result::Result<Self, String> {
        if j.tags.len() != j.intervals.len() + j.points.len() {
            return Err("tags must list one entry per interval and point".into());
        }
        let intervals = j
            .intervals
            .iter()
            .zip(&j.tags)
            .map(|(iv, &tag)| SpectralInterval { lo: iv[0], hi: iv[1], tag })
            .collect();
        Ok(SpectrumSet { intervals, points: j.points, resolved: (j.resolved[0], j.resolved[1]) })
    }
}

impl SpectrumSet {
    pub fn empty() -> Self {
        Self { intervals: vec![], points: vec![], resolved: (ExtendedReal::NegInf, ExtendedReal::PosInf) }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty()
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.intervals.iter().any(|i| i.contains(x, tol)) || self.points.iter().any(|p| (p.lambda - x).abs() <= tol)
    }

    /// Sorts and merges overlapping intervals, deduplicates points and flags
    /// points lying in an interval as embedded.
    pub fn normalize(&mut self, tol: f64) {
        let mut iv = std::mem::take(&mut self.intervals);
        iv.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap().then(a.hi.partial_cmp(&b.hi).unwrap()));
        let mut merged: Vec<SpectralInterval> = Vec::with_capacity(iv.len());
        for i in iv {
            match merged.last_mut() {
                Some(last) if i.lo <= last.hi.shift(tol) && (i.tag == last.tag || i.tag != SpectralTag::Sc && last.tag != SpectralTag::Sc) => {
                    last.hi = last.hi.max(i.hi);
                    if i.tag == SpectralTag::AcCandidate {
                        last.tag = SpectralTag::AcCandidate;
                    }
                }
                _ => merged.push(i),
            }
        }
        self.intervals = merged;

        let mut pts = std::mem::take(&mut self.points);
        pts.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        let mut out: Vec<SpectralPoint> = Vec::with_capacity(pts.len());
        for p in pts {
            match out.last_mut() {
                Some(last) if (p.lambda - last.lambda).abs() <= tol => {
                    last.embedded |= p.embedded;
                    if p.multiplicity == Multiplicity::Infinite {
                        last.multiplicity = Multiplicity::Infinite;
                    }
                }
                _ => out.push(p),
            }
        }
        for p in &mut out {
            if self.intervals.iter().any(|i| i.contains(p.lambda, tol)) {
                p.embedded = true;
            }
        }
        self.points = out;
    }

    /// Union of two sets; the resolved range is the intersection.
    pub fn union(&self, other: &SpectrumSet, tol: f64) -> SpectrumSet {
        let mut s = SpectrumSet {
            intervals: self.intervals.iter().chain(&other.intervals).copied().collect(),
            points: self.points.iter().chain(&other.points).copied().collect(),
            resolved: (self.resolved.0.max(other.resolved.0), self.resolved.1.min(other.resolved.1)),
        };
        s.normalize(tol);
        s
    }
}

/// Which fibers enter an assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberSubset {
    All,
    Confined,
    Complement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Explicit branch window; derived from `lambda_range` when absent.
    pub k_window: Option<(i64, i64)>,
    /// λ range that must be resolved by the window.
    pub lambda_range: Option<(f64, f64)>,
    /// Samples per fiber axis (per connected piece of `S` in `x′₀`).
    pub fiber_samples: usize,
    pub merge_tol: f64,
    pub subset: FiberSubset,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { k_window: None, lambda_range: None, fiber_samples: 257, merge_tol: DEFAULT_MERGE_TOL, subset: FiberSubset::All }
    }
}

/// `r = ψ/W` sampled over one connected piece of `closure(S)`.
struct Piece {
    /// Lines of samples ordered along `x′₀`; one line for `dim_fiber ≤ 1`.
    lines: Vec<Vec<ExtendedReal>>,
    /// `(x′, ψ, W)` for every sample, in line order.
    samples: Vec<(Vec<f64>, f64, f64)>,
}

impl Piece {
    fn range(&self) -> (ExtendedReal, ExtendedReal) {
        let all = self.lines.iter().flatten();
        let lo = all.clone().copied().fold(ExtendedReal::PosInf, ExtendedReal::min);
        let hi = all.copied().fold(ExtendedReal::NegInf, ExtendedReal::max);
        (lo, hi)
    }

    fn plateaus(&self) -> Vec<f64> {
        let mut found: Vec<(f64, usize)> = vec![];
        for line in &self.lines {
            let mut line_vals: Vec<f64> = vec![];
            let mut i = 0;
            while i < line.len() {
                let ExtendedReal::Finite(r0) = line[i] else {
                    i += 1;
                    continue;
                };
                let mut j = i + 1;
                while j < line.len() && matches!(line[j], ExtendedReal::Finite(r) if (r - r0).abs() <= PLATEAU_REL * r0.abs()) {
                    j += 1;
                }
                if j - i >= PLATEAU_RUN && !line_vals.iter().any(|v| same(*v, r0)) {
                    line_vals.push(r0);
                }
                i = j;
            }
            for v in line_vals {
                match found.iter_mut().find(|(u, _)| same(*u, v)) {
                    Some(e) => e.1 += 1,
                    None => found.push((v, 1)),
                }
            }
        }
        let need = if self.lines.len() >= PLATEAU_RUN { PLATEAU_RUN } else { 1 };
        found.into_iter().filter(|(_, c)| *c >= need).map(|(v, _)| v).collect()
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= PLATEAU_REL * a.abs().max(b.abs())
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn ratio(psi: f64, mass: f64) -> ExtendedReal {
    if mass > 0.0 {
        ExtendedReal::Finite(psi / mass)
    } else {
        ExtendedReal::PosInf
    }
}

/// First-coordinate ranges of the connected pieces of `closure(S) ∩ box`.
fn piece_ranges(weight: &WeightField, domain: &FiberDomain) -> Vec<(f64, f64)> {
    if weight.mass_closure(&vec![0.0; domain.dim]).is_none() {
        return vec![];
    }
    let a = domain.half_width;
    match &weight.confinement {
        ConfinementRegion::Empty => vec![],
        ConfinementRegion::Full => vec![(-a, a)],
        ConfinementRegion::Intervals(iv) => {
            iv.iter().map(|&(lo, hi)| (lo.max(-a), hi.min(a))).filter(|(lo, hi)| hi > lo).collect()
        }
    }
}

fn sample_pieces(profile: &ShearProfile, weight: &WeightField, domain: &FiberDomain, n: usize) -> Result<Vec<Piece>> {
    if domain.dim == 0 {
        if weight.confinement == ConfinementRegion::Empty || weight.kind == crate::field_model::WeightKind::Unit {
            return Ok(vec![]);
        }
        let psi = profile.evaluate(&[])?;
        let w = weight.mass_closure(&[]).unwrap_or(0.0);
        return Ok(vec![Piece { lines: vec![vec![ratio(psi, w)]], samples: vec![(vec![], psi, w)] }]);
    }
    let mut pieces = vec![];
    for (lo, hi) in piece_ranges(weight, domain) {
        let first = linspace(lo, hi, n);
        let others: Vec<Option<f64>> = if domain.dim == 2 {
            linspace(-domain.half_width, domain.half_width, n).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        let mut lines = vec![];
        let mut samples = vec![];
        for second in &others {
            let mut line = vec![];
            for &x0 in &first {
                let x: Vec<f64> = std::iter::once(x0).chain(*second).collect();
                let psi = profile.evaluate(&x)?;
                let w = weight.mass_closure(&x).unwrap_or(0.0);
                line.push(ratio(psi, w));
                samples.push((x, psi, w));
            }
            lines.push(line);
        }
        pieces.push(Piece { lines, samples });
    }
    Ok(pieces)
}

/// Image of `[rmin, rmax]` under multiplication by `c`.
fn branch(c: f64, rmin: ExtendedReal, rmax: ExtendedReal) -> (ExtendedReal, ExtendedReal) {
    if c >= 0.0 {
        (rmin.scale(c), rmax.scale(c))
    } else {
        (rmax.scale(c), rmin.scale(c))
    }
}

fn derive_window(beta: f64, rmin: ExtendedReal, rmax: ExtendedReal, lo: f64, hi: f64) -> Result<(i64, i64)> {
    let c = |k: i64| beta + TAU * k as f64;
    let b = |k: i64| branch(c(k), rmin, rmax);
    let (elo, ehi) = (ExtendedReal::Finite(lo), ExtendedReal::Finite(hi));
    let overflow = || Error::InvalidParameter("k window search did not terminate".into());

    let mut k_hi: i64 = 0;
    if b(1).0 > ehi {
        while b(k_hi).0 > ehi {
            k_hi -= 1;
            if k_hi < -WINDOW_SEARCH_CAP {
                return Err(overflow());
            }
        }
    } else {
        while b(k_hi + 1).0 <= ehi {
            k_hi += 1;
            if k_hi > WINDOW_SEARCH_CAP {
                return Err(overflow());
            }
        }
    }
    let mut k_lo: i64 = 0;
    if b(-1).1 < elo {
        while b(k_lo).1 < elo {
            k_lo += 1;
            if k_lo > WINDOW_SEARCH_CAP {
                return Err(overflow());
            }
        }
    } else {
        while b(k_lo - 1).1 >= elo {
            k_lo -= 1;
            if k_lo < -WINDOW_SEARCH_CAP {
                return Err(overflow());
            }
        }
    }
    Ok((k_lo, k_hi))
}

/// Assembles the spectrum for a constant boundary phase.
pub fn assemble_spectrum(
    profile: &ShearProfile,
    weight: &WeightField,
    phase: &BoundaryPhase,
    domain: &FiberDomain,
    opts: &AssemblyOptions,
) -> Result<SpectrumSet> {
    let beta = phase
        .constant_beta()
        .ok_or_else(|| Error::Precondition("assemble_spectrum needs a constant boundary phase".into()))?;
    if opts.fiber_samples < 2 {
        return Err(Error::Precondition("fiber_samples must be >= 2".into()));
    }
    let full_line = opts.subset != FiberSubset::Confined && weight_complement_positive(weight, domain);
    let pieces = if opts.subset == FiberSubset::Complement {
        vec![]
    } else {
        sample_pieces(profile, weight, domain, opts.fiber_samples)?
    };
    let mut set = SpectrumSet::empty();
    if full_line {
        set.intervals.push(SpectralInterval { lo: ExtendedReal::NegInf, hi: ExtendedReal::PosInf, tag: SpectralTag::AcCandidate });
    }
    if pieces.is_empty() {
        return Ok(set);
    }

    let ranges: Vec<(ExtendedReal, ExtendedReal)> = pieces.iter().map(Piece::range).collect();
    let rmin = ranges.iter().map(|r| r.0).fold(ExtendedReal::PosInf, ExtendedReal::min);
    let rmax = ranges.iter().map(|r| r.1).fold(ExtendedReal::NegInf, ExtendedReal::max);

    let (k_lo, k_hi) = match (opts.k_window, opts.lambda_range) {
        (Some(w), _) => w,
        (None, Some((lo, hi))) => derive_window(beta, rmin, rmax, lo, hi)?,
        (None, None) => (-5, 5),
    };
    let c = |k: i64| beta + TAU * k as f64;
    let resolved = if full_line {
        (ExtendedReal::NegInf, ExtendedReal::PosInf)
    } else {
        (branch(c(k_lo - 1), rmin, rmax).1, branch(c(k_hi + 1), rmin, rmax).0)
    };
    if let Some((lo, hi)) = opts.lambda_range {
        if !(resolved.0 < ExtendedReal::Finite(lo) && ExtendedReal::Finite(hi) < resolved.1) {
            return Err(Error::WindowTooSmall { k_lo, k_hi, lo, hi });
        }
    }
    set.resolved = resolved;

    let multiplicity = if domain.dim == 0 { Multiplicity::Finite(1) } else { Multiplicity::Infinite };
    let mut plateau_points = vec![];
    for (piece, &(lo, hi)) in pieces.iter().zip(&ranges) {
        let constant = match (lo, hi) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => b - a <= PLATEAU_REL * b.abs(),
            _ => false,
        };
        for k in k_lo..=k_hi {
            let ck = c(k);
            let (a, b) = branch(ck, lo, hi);
            if constant || ck == 0.0 {
                set.points.push(SpectralPoint { lambda: a.finite().unwrap_or(0.0), multiplicity, embedded: false });
            } else {
                set.intervals.push(SpectralInterval { lo: a, hi: b, tag: SpectralTag::AcCandidate });
            }
        }
        if !constant {
            for r in piece.plateaus() {
                for k in k_lo..=k_hi {
                    plateau_points.push(SpectralPoint { lambda: c(k) * r, multiplicity, embedded: false });
                }
            }
        }
    }
    let has_continuum = !set.intervals.is_empty();
    set.points.extend(plateau_points.into_iter().map(|p| SpectralPoint { embedded: has_continuum, ..p }));
    set.normalize(opts.merge_tol);
    Ok(set)
}

fn weight_complement_positive(weight: &WeightField, domain: &FiberDomain) -> bool {
    weight.kind == crate::field_model::WeightKind::Unit || weight.confinement.measure_positive_complement(domain)
}

/// Eigenvalue ladders carried by positive-measure plateaus of `ψ/W` that sit
/// inside continuous spectrum.
pub fn detect_embedded_eigenvalues(
    profile: &ShearProfile,
    weight: &WeightField,
    phase: &BoundaryPhase,
    domain: &FiberDomain,
    opts: &AssemblyOptions,
) -> Result<Vec<f64>> {
    let set = assemble_spectrum(profile, weight, phase, domain, opts)?;
    Ok(set.points.iter().filter(|p| p.embedded).map(|p| p.lambda).collect())
}

/// `δ = 2π·ℓ/M`: nonzero eigenvalues of confined fibers avoid `(-δ, δ)`.
pub fn spectral_gap(profile: &ShearProfile, weight: &WeightField, phase: &BoundaryPhase) -> Result<f64> {
    let m = weight.m_bound.ok_or(Error::MissingBound)?;
    match phase.constant_beta() {
        Some(0.0) => Ok(TAU * profile.ell / m),
        _ => Err(Error::Precondition("the spectral gap needs beta = 0".into())),
    }
}

/// Branch functions `λ_k(x′)` over the sampled confined fibers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTable {
    pub ks: Vec<i64>,
    pub rows: Vec<BranchRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub point: Vec<f64>,
    pub psi: f64,
    /// `W` on the closure of `S` (0 on its boundary when the mass degenerates there).
    pub mass: f64,
    /// `λ_k`, `None` where `W = 0` and `β + 2πk ≠ 0`.
    pub lambdas: Vec<Option<f64>>,
}

pub fn branch_table(
    profile: &ShearProfile,
    weight: &WeightField,
    phase: &BoundaryPhase,
    domain: &FiberDomain,
    k_window: (i64, i64),
    fiber_samples: usize,
) -> Result<BranchTable> {
    let beta = phase
        .constant_beta()
        .ok_or_else(|| Error::Precondition("branch_table needs a constant boundary phase".into()))?;
    let ks: Vec<i64> = (k_window.0..=k_window.1).collect();
    let mut rows = vec![];
    for piece in sample_pieces(profile, weight, domain, fiber_samples)? {
        for (point, psi, mass) in piece.samples {
            let lambdas = ks
                .iter()
                .map(|&k| ratio(psi, mass).scale(beta + TAU * k as f64).finite())
                .collect();
            rows.push(BranchRow { point, psi, mass, lambdas });
        }
    }
    Ok(BranchTable { ks, rows })
}
