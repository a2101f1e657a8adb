//! Cross-module consistency checks: the direct-sum representation
//! against per-block reductions, measurement routes against each other,
//! and the Bell machinery against random inputs.

use bellmode::chsh::{
    bell_schmidt_density, beta_optimal, chsh_value, optimize_settings, settings_value,
    CHSHSettings, ChshTarget,
};
use bellmode::modes::{cap_grid, Direction, LocalFrame, ModeSet};
use bellmode::onephoton::{
    block_density, coherence_block, density_from_stokes, effective_density,
    naive_average_expectation, polarizer_projector, projector_expectation, scatter_single,
    stokes_parameters, Basis, OnePhotonState,
};
use bellmode::pauli::{c, max_abs_diff2, max_abs_diff4, C64};
use bellmode::polarizer::polarizer_frame;
use bellmode::scatter::{ModelKind, ScatterModel};
use bellmode::twophoton::{
    effective_density_2, scatter_pair, BellInitial, MixtureTerm, MomentumMixture,
};

use nalgebra::{DMatrix, Matrix4, Vector2, Vector3};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

const ROOT8: f64 = 2.828427124746190097603377448419396157;

fn thirteen_mode_fixture() -> (ModeSet, OnePhotonState) {
    let reference = Direction::new(0.15, 0.7).unwrap();
    let modes = cap_grid(&reference, 0.25, 2, 6).unwrap();
    assert_eq!(modes.len(), 13);
    let model = ScatterModel::build(ModelKind::RandomUnitary { seed: 1234 }, &modes).unwrap();
    let input = Vector2::new(c(0.6), Complex::new(0.0, 0.8));
    let state = scatter_single(&input, &model, &modes).unwrap();
    (modes, state)
}

#[test]
fn per_block_traces_match_the_full_direct_sum() {
    let (modes, state) = thirteen_mode_fixture();
    let bd = block_density(&state).unwrap();
    let proj = polarizer_projector(0.4, &modes, &LocalFrame::identity()).unwrap();
    let faithful = projector_expectation(&bd, &proj).unwrap();

    // full 2N x 2N representation, off-diagonal mode coherences included
    let n = modes.len();
    let mut full = DMatrix::<C64>::zeros(2 * n, 2 * n);
    let mut observable = DMatrix::<C64>::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let block = coherence_block(&state, a, b).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    full[(2 * a + i, 2 * b + j)] = block[(i, j)];
                }
            }
        }
        let p = proj.block(a);
        for i in 0..2 {
            for j in 0..2 {
                observable[(2 * a + i, 2 * a + j)] = p[(i, j)];
            }
        }
    }
    assert!((full.trace().re - 1.0).abs() < 1e-12);
    let reference = (&full * &observable).trace().re;
    assert!(
        (faithful - reference).abs() < 1e-12,
        "block route {faithful} vs direct sum {reference}"
    );
}

#[test]
fn naive_average_drifts_once_blocks_differ() {
    let (modes, state) = thirteen_mode_fixture();
    let bd = block_density(&state).unwrap();
    let proj = polarizer_projector(0.4, &modes, &LocalFrame::identity()).unwrap();
    let faithful = projector_expectation(&bd, &proj).unwrap();
    let naive = naive_average_expectation(&bd, &proj).unwrap();
    assert!(
        (faithful - naive).abs() > 1e-6,
        "expected a visible gap, got {faithful} vs {naive}"
    );
}

#[test]
fn random_densities_respect_the_quantum_ceiling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    for _ in 0..500 {
        let g = Matrix4::from_fn(|_, _| {
            Complex::new(normal(&mut rng), normal(&mut rng))
        });
        let mut rho = g * g.adjoint();
        let tr = rho.trace().re;
        rho.iter_mut().for_each(|z| *z /= Complex::new(tr, 0.0));
        let unit = |rng: &mut ChaCha8Rng| -> Vector3<f64> {
            loop {
                let v = Vector3::new(
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                    rng.random::<f64>() * 2.0 - 1.0,
                );
                if v.norm() > 1e-3 {
                    return v / v.norm();
                }
            }
        };
        let s = CHSHSettings::new(
            unit(&mut rng),
            unit(&mut rng),
            unit(&mut rng),
            unit(&mut rng),
        )
        .unwrap();
        let v = chsh_value(&rho, &s).unwrap();
        assert!(v.abs() <= ROOT8 + 1e-9, "ceiling broken: {v}");
    }
}

#[test]
fn measured_pair_state_argmax_follows_the_tilt() {
    // single modes, arm B tilted with zero azimuth: the polarizer-frame
    // map is the identity there, so the measured matrix equals the
    // source state exactly while the optimum still moves with the tilt
    let theta = 0.8;
    let da = Direction::new(0.0, 0.0).unwrap();
    let db = Direction::new(theta, 0.0).unwrap();
    let ma = ModeSet::new(da, 0.0, vec![da]).unwrap();
    let mb = ModeSet::new(db, 0.0, vec![db]).unwrap();
    let ia = ScatterModel::build(ModelKind::Identity, &ma).unwrap();
    let ib = ScatterModel::build(ModelKind::Identity, &mb).unwrap();
    let ps = scatter_pair(&BellInitial::singlet(), &ia, &ib, &ma, &mb).unwrap();
    let eff = effective_density_2(&ps, &LocalFrame::identity(), &LocalFrame::identity()).unwrap();
    let source = bell_schmidt_density(4).unwrap();
    assert!(max_abs_diff4(eff.matrix(), &source) < 1e-14);

    let target = ChshTarget::state(*eff.matrix(), theta).unwrap();
    let points = optimize_settings(&target, 0.0, PI / 360.0, 1e-8).unwrap();
    let upper = points.iter().find(|p| p.value > 0.0).unwrap();
    assert!((upper.value - ROOT8).abs() < 1e-8);
    assert!((upper.beta - beta_optimal(theta, 4).unwrap()).abs() < 1e-6);

    // a nonzero azimuth deforms the measured pure state away from the
    // source while keeping it pure
    let db2 = Direction::new(theta, 1.0).unwrap();
    let mb2 = ModeSet::new(db2, 0.0, vec![db2]).unwrap();
    let ib2 = ScatterModel::build(ModelKind::Identity, &mb2).unwrap();
    let ps2 = scatter_pair(&BellInitial::singlet(), &ia, &ib2, &ma, &mb2).unwrap();
    let eff2 =
        effective_density_2(&ps2, &LocalFrame::identity(), &LocalFrame::identity()).unwrap();
    assert!((eff2.purity() - 1.0).abs() < 1e-12);
    assert!(max_abs_diff4(eff2.matrix(), &source) > 1e-2);
}

#[test]
fn every_pure_state_reoptimizes_to_the_bound_at_any_single_tilt() {
    for which in 1..=4 {
        let rho = bell_schmidt_density(which).unwrap();
        for &theta in &[0.5, 1.0, 1.4] {
            let target = ChshTarget::state(rho, theta).unwrap();
            let points = optimize_settings(&target, 0.0, PI / 360.0, 1e-8).unwrap();
            let best = points
                .iter()
                .map(|p| p.value.abs())
                .fold(0.0f64, f64::max);
            assert!(
                (best - ROOT8).abs() <= 1e-6,
                "state {which} stuck at {best} for tilt {theta}"
            );
        }
    }
}

#[test]
fn equal_tilt_mixture_collapses_to_its_average_density() {
    let tilt = 0.3;
    let mixture = MomentumMixture::new(vec![
        MixtureTerm::new(0.4, bell_schmidt_density(4).unwrap(), 0.0, tilt),
        MixtureTerm::new(0.6, bell_schmidt_density(2).unwrap(), 0.0, tilt),
    ])
    .unwrap();
    let averaged = mixture.average_density();
    let (beta, delta) = (2.1, 0.9);
    let via_mixture =
        settings_value(&ChshTarget::mixture(mixture), beta, delta, 0.0).unwrap();
    let via_average =
        settings_value(&ChshTarget::state(averaged, tilt).unwrap(), beta, delta, 0.0).unwrap();
    assert!((via_mixture - via_average).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stokes_and_gram_routes_agree_under_any_axis(
        ref_theta in 0.0..1.2f64,
        ref_phi in 0.0..(2.0 * PI),
        pol_beta in 0.0..PI,
        seed in 0u64..1000,
    ) {
        let reference = Direction::new(ref_theta, ref_phi).unwrap();
        let modes = cap_grid(&reference, 0.2, 1, 3).unwrap();
        let model = ScatterModel::build(ModelKind::RandomUnitary { seed }, &modes).unwrap();
        let input = Vector2::new(c(0.28), Complex::new(0.0, 0.96));
        let state = scatter_single(&input, &model, &modes).unwrap();
        // measure along the cap's own axis so every mode stays in front
        let frame = polarizer_frame(&reference);
        let eff = effective_density(&state, &frame).unwrap();
        let s = stokes_parameters(&state, &frame).unwrap();
        let rebuilt = density_from_stokes(&s).unwrap();
        prop_assert!(max_abs_diff2(eff.matrix(), &rebuilt) < 1e-10);
        prop_assert!(s[0] >= (s[1]*s[1] + s[2]*s[2] + s[3]*s[3]).sqrt() - 1e-12);
        prop_assert!(eff.purity() <= 1.0 + 1e-12);
        // the tilt-aware projector expectation at the same angle stays in [0, 1]
        let proj = polarizer_projector(pol_beta, &modes, &frame).unwrap();
        let bd = block_density(&state).unwrap();
        let p = projector_expectation(&bd, &proj).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn helicity_and_linear_inputs_agree(
        h_re in -1.0..1.0f64,
        h_im in -1.0..1.0f64,
        g_re in -1.0..1.0f64,
        g_im in -1.0..1.0f64,
    ) {
        let h = Vector2::new(Complex::new(h_re, h_im), Complex::new(g_re, g_im));
        prop_assume!(h.norm() > 1e-3);
        let d = Direction::new(0.3, 0.4).unwrap();
        let modes = ModeSet::new(d, 0.0, vec![d]).unwrap();
        let hel = OnePhotonState::new(modes.clone(), vec![h], Basis::Helicity).unwrap();
        let lin = hel.to_linear();
        prop_assert_eq!(lin.basis(), Basis::Linear);
        prop_assert!((hel.zeta(0) - lin.zeta(0)).abs() < 1e-12);
        let frame = polarizer_frame(&d);
        let via_hel = effective_density(&hel, &frame).unwrap();
        let via_lin = effective_density(&lin, &frame).unwrap();
        prop_assert!(max_abs_diff2(via_hel.matrix(), via_lin.matrix()) < 1e-12);
    }
}
