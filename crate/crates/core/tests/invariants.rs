use num_complex::Complex64;
use proptest::prelude::*;
use shearspec::density_of_states::{dos_surface, spectral_cdf, DosOptions, NormFlavor, NormSpec};
use shearspec::ergodic_average::{build_dictionary, kernel_projection, time_average, AverageMethod, DictionaryOptions};
use shearspec::evolution::{evolve, FlowState};
use shearspec::extended::ExtendedReal;
use shearspec::fiber_ops::{
    fiber_eigenfunction, fiber_eigenvalues, fiber_evolve, fiber_matrix_oracle, quadrature_mass, Discretization, EvolveMethod,
    FiberAxis, FiberOperator,
};
use shearspec::field_model::{
    AxisShape, BoundaryPhase, ConfinementRegion, FiberDomain, FiberMass, Modulation, ProfileKind, ShearProfile, WeightField, WeightKind,
};
use shearspec::grid::{GridField, GridSpec, Layout};
use shearspec::spectrum_assembly::cantor::CantorSpec;
use shearspec::spectrum_assembly::{assemble_spectrum, AssemblyOptions, FiberSubset};
use std::f64::consts::PI;
use std::sync::Arc;

fn shape_strategy() -> impl Strategy<Value = AxisShape> {
    prop_oneof![
        (0.3f64..4.0).prop_map(|rate| AxisShape::ExponentialDecay { rate }),
        (0.3f64..3.0).prop_map(|width| AxisShape::Gaussian { width }),
        (0.3f64..3.0, 0.2f64..2.0).prop_map(|(radius, floor)| AxisShape::CompactBump { radius, floor }),
    ]
}

fn kind_of(shape: AxisShape) -> WeightKind {
    match shape {
        AxisShape::ExponentialDecay { rate } => WeightKind::ExponentialDecay { rate },
        AxisShape::Gaussian { width } => WeightKind::Gaussian { width },
        AxisShape::CompactBump { radius, floor } => WeightKind::CompactBump { radius, floor },
    }
}

fn fiber_op(shape: AxisShape, psi: f64, beta: f64) -> FiberOperator {
    let w = WeightField::axis_only(kind_of(shape)).unwrap();
    FiberOperator::new(psi, w.slice(&[]), beta).unwrap()
}

fn gauss(x: f64, xp: &[f64]) -> Complex64 {
    let r2: f64 = x * x + xp.iter().map(|v| v * v).sum::<f64>();
    Complex64::new((-0.5 * r2).exp(), 0.0)
}

fn tanh_profile() -> ShearProfile {
    ShearProfile::new(ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 }, 1).unwrap()
}

fn mixed_layout(n: usize) -> Arc<Layout> {
    let w = WeightField::new(
        WeightKind::ExponentialDecay { rate: 1.0 },
        ConfinementRegion::intervals(vec![(0.0, 3.0)]).unwrap(),
        Some(2.0),
    )
    .unwrap();
    Layout::new(&tanh_profile(), &w, &BoundaryPhase::constant(0.0), FiberDomain::new(1, 3.0).unwrap(), GridSpec::new(n, 16.0, 4).unwrap())
        .unwrap()
}

#[test]
fn built_in_profiles_pass_their_declared_constants() {
    let kinds = [
        ProfileKind::Constant { value: 1.7 },
        ProfileKind::AffineSaturating { offset: 2.0, amplitude: 1.0, rate: 1.0 },
        ProfileKind::AffineSaturating { offset: 3.0, amplitude: -1.5, rate: 2.0 },
        ProfileKind::BumpPlusFloor { floor: 0.5, height: 2.0, width: 1.5 },
        ProfileKind::UserSampled { nodes: vec![-2.0, 0.0, 1.0, 3.0], values: vec![1.0, 2.0, 1.5, 1.5] },
    ];
    for dim in [1usize, 2] {
        let dom = FiberDomain::new(dim, 4.0).unwrap();
        for k in &kinds {
            if matches!(k, ProfileKind::UserSampled { .. }) && dim == 2 {
                continue;
            }
            let p = ShearProfile::new(k.clone(), dim).unwrap();
            let r = p.validate_regularity(&dom, 10_000).unwrap();
            assert!(r.pass, "{k:?} in dim {dim}: {r:?}");
        }
    }
}

#[test]
fn unit_weight_has_infinite_mass() {
    let w = WeightField::unit();
    assert_eq!(w.confinement, ConfinementRegion::Empty);
    for x in [-3.0, 0.0, 2.5] {
        assert_eq!(w.fiber_mass(&[x]), FiberMass::Infinite);
    }
    assert!(WeightField::new(WeightKind::Unit, ConfinementRegion::Full, None).is_err());
}

#[test]
fn union_of_confined_and_complement_is_the_full_assembly() {
    let w = WeightField::new(
        WeightKind::ProductSeparable {
            shape: AxisShape::ExponentialDecay { rate: 2.0 },
            modulation: Modulation { knots: vec![(0.0, 1.0), (2.0, 2.0)] },
        },
        ConfinementRegion::intervals(vec![(0.0, 2.0)]).unwrap(),
        Some(2.0),
    )
    .unwrap();
    let p = ShearProfile::constant(1.0, 1).unwrap();
    let dom = FiberDomain::new(1, 2.0).unwrap();
    let zero = BoundaryPhase::constant(0.0);
    let opts = |subset| AssemblyOptions { k_window: Some((-5, 5)), subset, ..Default::default() };
    let all = assemble_spectrum(&p, &w, &zero, &dom, &opts(FiberSubset::All)).unwrap();
    let s = assemble_spectrum(&p, &w, &zero, &dom, &opts(FiberSubset::Confined)).unwrap();
    let c = assemble_spectrum(&p, &w, &zero, &dom, &opts(FiberSubset::Complement)).unwrap();
    let u = s.union(&c, 1e-9);
    for i in -400..=400 {
        let x = i as f64 * 0.1;
        assert_eq!(u.contains(x, 0.0), all.contains(x, 0.0), "{x}");
    }
}

#[test]
fn constant_mass_degenerates_to_the_ladder() {
    let p = ShearProfile::constant(1.0, 1).unwrap();
    let dom = FiberDomain::new(1, 1.0).unwrap();
    let w = WeightField::new(
        WeightKind::ProductSeparable { shape: AxisShape::ExponentialDecay { rate: 2.0 }, modulation: Modulation::constant(1.5) },
        ConfinementRegion::Full,
        Some(1.5),
    )
    .unwrap();
    let s = assemble_spectrum(&p, &w, &BoundaryPhase::constant(0.0), &dom, &AssemblyOptions { k_window: Some((-4, 4)), ..Default::default() })
        .unwrap();
    assert!(s.intervals.is_empty());
    for (pt, k) in s.points.iter().zip(-4..=4) {
        assert!((pt.lambda - 2.0 * PI * k as f64 / 1.5).abs() < 1e-12);
    }
}

#[test]
fn refinement_never_shrinks_intervals() {
    let p = tanh_profile();
    let w = WeightField::new(
        WeightKind::ProductSeparable {
            shape: AxisShape::Gaussian { width: 1.0 },
            modulation: Modulation { knots: vec![(-2.0, 0.5), (2.0, 1.0)] },
        },
        ConfinementRegion::Full,
        None,
    )
    .unwrap();
    let dom = FiberDomain::new(1, 2.0).unwrap();
    let zero = BoundaryPhase::constant(0.0);
    let coarse = assemble_spectrum(&p, &w, &zero, &dom, &AssemblyOptions { k_window: Some((-3, 3)), fiber_samples: 65, ..Default::default() }).unwrap();
    let fine = assemble_spectrum(&p, &w, &zero, &dom, &AssemblyOptions { k_window: Some((-3, 3)), fiber_samples: 129, ..Default::default() }).unwrap();
    for iv in &coarse.intervals {
        let (lo, hi) = (iv.lo.finite().unwrap(), iv.hi.finite().unwrap());
        for t in 0..=20 {
            let x = lo + (hi - lo) * t as f64 / 20.0;
            assert!(fine.contains(x, 1e-9), "{x}");
        }
    }
}

#[test]
fn cantor_total_length() {
    for w in [0.5, 1.0, 3.0] {
        for n in 1..=10 {
            let c = CantorSpec::new(n, w).unwrap();
            let total = c.components_per_period() as f64 * c.component_length();
            let expect = (2.0f64 / 3.0).powi(n as i32) * PI / w;
            assert!((total - expect).abs() < 1e-13 * expect);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fiber_mass_matches_quadrature(shape in shape_strategy(), scale in 0.2f64..3.0) {
        let kind = WeightKind::ProductSeparable { shape, modulation: Modulation::constant(scale) };
        let w = WeightField::axis_only(kind).unwrap();
        let op = FiberOperator::new(1.0, w.slice(&[]), 0.0).unwrap();
        let exact = w.fiber_mass(&[]).finite().unwrap();
        let quad = quadrature_mass(&op).unwrap();
        prop_assert!((quad - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn ladder_matches_oracle(shape in shape_strategy(), psi in 0.5f64..3.0, bi in 0usize..3) {
        let beta = [0.0, PI / 3.0, PI][bi];
        let op = fiber_op(shape, psi, beta);
        let exact = fiber_eigenvalues(&op, -3, 3).unwrap();
        prop_assert!(exact.windows(2).all(|w| w[1] > w[0]));
        let ev = fiber_matrix_oracle(&op, 4096, Discretization::FiniteDifference4).unwrap();
        let mut sorted = exact.clone();
        sorted.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        for e in sorted.iter().filter(|e| **e != 0.0).take(5) {
            let near = ev.iter().map(|v| (v - e).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(near <= 1e-3 * e.abs(), "{} vs {}", near, e);
        }
    }

    #[test]
    fn wraps_multiply_by_powers_of_alpha(shape in shape_strategy(), psi in 0.5f64..2.0, beta in 0.0f64..6.0, t in -30.0f64..30.0, k in -3i64..=3) {
        let op = fiber_op(shape, psi, beta);
        let axis = FiberAxis::Phi { n: 64 };
        let nodes = axis.nodes(&op).unwrap();
        let f = fiber_eigenfunction(&op, k, &nodes).unwrap();
        let lam = psi * op.wavenumber(k).unwrap();
        let phase = Complex64::from_polar(1.0, lam * t);
        for m in [EvolveMethod::Spectral, EvolveMethod::Characteristics] {
            let g = fiber_evolve(&op, &axis, t, &f, m).unwrap();
            for (a, b) in g.iter().zip(&f) {
                prop_assert!((a - b * phase).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn evolution_group_and_unitarity(s in -3.0f64..3.0, t in -3.0f64..3.0) {
        let l = Layout::flat(&tanh_profile(), FiberDomain::new(1, 3.0).unwrap(), GridSpec::new(256, 14.0, 6).unwrap()).unwrap();
        let f = GridField::from_fn(&l, gauss);
        let s0 = FlowState::new(f.clone());
        let l2 = NormSpec::new(0.0, NormFlavor::PlainL2).unwrap();
        let st = evolve(&evolve(&s0, s, EvolveMethod::Spectral).unwrap(), t, EvolveMethod::Spectral).unwrap();
        let direct = evolve(&s0, s + t, EvolveMethod::Spectral).unwrap();
        prop_assert!(st.field.max_abs_diff(&direct.field).unwrap() < 1e-6);
        prop_assert!((direct.field.norm(&l2) - f.norm(&l2)).abs() < 1e-6);
    }

    #[test]
    fn density_is_conjugate_symmetric(a in -1.0f64..1.0, b in -1.0f64..1.0, lam in -3.0f64..3.0) {
        let l = Layout::flat(&tanh_profile(), FiberDomain::new(1, 3.0).unwrap(), GridSpec::new(256, 12.0, 6).unwrap()).unwrap();
        let f = GridField::from_fn(&l, |x, xp| gauss(x - a, xp) * Complex64::new(1.0, x));
        let g = GridField::from_fn(&l, |x, xp| gauss(x + b, xp));
        let opts = DosOptions::new(1.0).unwrap();
        let fg = dos_surface(&f, &g, lam, &opts).unwrap().value_surface;
        let gf = dos_surface(&g, &f, lam, &opts).unwrap().value_surface;
        prop_assert!((fg - gf.conj()).norm() < 1e-12);
    }

    #[test]
    fn spectral_cdf_is_monotone(a in -2.0f64..2.0, lo in -4.0f64..4.0, gap in 0.0f64..2.0) {
        let l = Layout::flat(&tanh_profile(), FiberDomain::new(1, 3.0).unwrap(), GridSpec::new(128, 12.0, 4).unwrap()).unwrap();
        let f = GridField::from_fn(&l, |x, xp| gauss(x - a, xp));
        let c0 = spectral_cdf(&f, &f, ExtendedReal::Finite(lo)).unwrap();
        let c1 = spectral_cdf(&f, &f, ExtendedReal::Finite(lo + gap)).unwrap();
        prop_assert!(c1.re >= c0.re - 1e-13);
        prop_assert!(c0.im.abs() < 1e-12);
    }

    #[test]
    fn kernel_projection_is_an_orthogonal_projection(c in -2.0f64..2.0, d in 0.3f64..3.0) {
        let l = mixed_layout(64);
        let f = GridField::from_slot_fn(&l, |s, x| {
            let u = s.op.phi_map().map_or(x, |p| p.stretched(x));
            Complex64::new((-(u - c).powi(2) / d).exp(), u.sin())
        });
        let g = GridField::from_fn(&l, |x, xp| gauss(x + c, xp));
        let p = kernel_projection(&f).unwrap();
        prop_assert!(kernel_projection(&p).unwrap().max_abs_diff(&p).unwrap() < 1e-12);
        let lhs = p.inner_weighted(&g).unwrap();
        let rhs = f.inner_weighted(&kernel_projection(&g).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn time_average_methods_agree(t in 0.1f64..1000.0, idx in 0usize..24) {
        let l = mixed_layout(128);
        let dict = build_dictionary(&l, &DictionaryOptions::new(1.0, 5)).unwrap();
        let f = &dict[idx % dict.len()].field;
        let a = time_average(f, t, AverageMethod::Spectral).unwrap();
        let b = time_average(f, t, AverageMethod::Quadrature).unwrap();
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-4);
        let ws = NormSpec::new(0.0, NormFlavor::WeightedL2).unwrap();
        prop_assert!(a.norm(&ws) <= f.norm(&ws) * (1.0 + 1e-9));
    }

    #[test]
    fn cantor_nesting_and_translation(depth in 1u32..12, u in 0.0f64..1.0, k in -5i64..5) {
        let c = CantorSpec::new(depth, 1.0).unwrap();
        let deeper = CantorSpec::new(depth + 1, 1.0).unwrap();
        let lam = u * c.base_length();
        if deeper.contains(lam) {
            prop_assert!(c.contains(lam));
        }
        prop_assert_eq!(c.contains(lam + k as f64 * c.period()), c.contains(lam + k as f64 * c.period() + c.period()));
    }

    #[test]
    fn extended_reals_round_trip(x in prop::num::f64::ANY) {
        if let Some(e) = ExtendedReal::from_f64(x) {
            let text = serde_json::to_string(&e).unwrap();
            let back: ExtendedReal = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, e);
        } else {
            prop_assert!(x.is_nan());
        }
    }
}

#[test]
fn strong_convergence_along_decades() {
    let l = mixed_layout(256);
    let dict = build_dictionary(&l, &DictionaryOptions::new(1.0, 9)).unwrap();
    let ws = NormSpec::new(0.0, NormFlavor::WeightedL2).unwrap();
    for d in &dict {
        let p = kernel_projection(&d.field).unwrap();
        let norms: Vec<f64> = (0..=4)
            .map(|j| time_average(&d.field, 10f64.powi(j), AverageMethod::Spectral).unwrap().sub(&p).unwrap().norm(&ws))
            .collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12), "{}: {norms:?}", d.label);
        assert!(norms[4] < 0.05 * norms[0].max(1e-300) || norms[0] < 1e-12, "{}: {norms:?}", d.label);
    }
}
