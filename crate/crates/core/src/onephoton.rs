//! Single-photon states spread over a mode set, their block density
//! matrices, and what a momentum-blind polarization measurement sees.
//!
//! The polarization state of a multimode photon is not a single 2x2
//! matrix. It is a direct sum of per-mode 2x2 blocks: expectation
//! values of mode-diagonal observables contract block against block.
//! Averaging the blocks first and then taking one trace gives a
//! different (wrong) number unless every mode carries the same
//! observable block. The functions here expose both routes so the gap
//! is testable, plus the effective 2x2 matrix a Stokes measurement
//! behind a shared polarizer actually reconstructs.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::modes::{direction_in_frame, helicity_to_linear, LocalFrame, ModeSet};
use crate::pauli::{hermitian_eigenvalues2, hermiticity_defect2, max_abs_diff2, sigma, C64, Mat2};
use crate::polarizer::{jones_matrix, w_matrix, Polarizer};

/// Which per-mode 2-component basis the amplitudes are stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Local linear components (x', y') of the mode's frame.
    Linear,
    /// Helicity components (+, -).
    Helicity,
}

/// A one-photon state: one complex 2-vector of polarization amplitudes
/// per detection mode.
#[derive(Debug, Clone)]
pub struct OnePhotonState {
    modes: ModeSet,
    amplitudes: Vec<Vector2<C64>>,
    basis: Basis,
}

impl OnePhotonState {
    pub fn new(modes: ModeSet, amplitudes: Vec<Vector2<C64>>, basis: Basis) -> Result<Self> {
        if amplitudes.len() != modes.len() {
            return Err(Error::config(format!(
                "amplitude list length {} does not match mode count {}",
                amplitudes.len(),
                modes.len()
            )));
        }
        let state = OnePhotonState {
            modes,
            amplitudes,
            basis,
        };
        let total = state.total_weight_raw();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::normalization(format!(
                "total squared amplitude must be positive and finite, got {total}"
            )));
        }
        Ok(state)
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn amplitude(&self, k: usize) -> &Vector2<C64> {
        &self.amplitudes[k]
    }

    /// Squared amplitude of mode k, before any global normalization.
    pub fn zeta(&self, k: usize) -> f64 {
        self.amplitudes[k].iter().map(|z| z.norm_sqr()).sum()
    }

    fn total_weight_raw(&self) -> f64 {
        (0..self.amplitudes.len()).map(|k| self.zeta(k)).sum()
    }

    /// Same state with every amplitude pair expressed in the local
    /// linear basis.
    pub fn to_linear(&self) -> OnePhotonState {
        match self.basis {
            Basis::Linear => self.clone(),
            Basis::Helicity => OnePhotonState {
                modes: self.modes.clone(),
                amplitudes: self.amplitudes.iter().map(helicity_to_linear).collect(),
                basis: Basis::Linear,
            },
        }
    }
}

/// Sends a normalized input polarization through a scattering model:
/// the resulting amplitude on mode k is the model's block into k
/// applied to the input pair. Amplitudes come out in the linear basis,
/// unnormalized; weights are fixed downstream.
pub fn scatter_single(
    input_polarization: &Vector2<C64>,
    model: &crate::scatter::ScatterModel,
    modes: &ModeSet,
) -> Result<OnePhotonState> {
    let norm: f64 = input_polarization.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::normalization(format!(
            "input polarization must be normalized, got squared norm {norm}"
        )));
    }
    let reference = *modes.reference();
    let amplitudes = modes
        .iter()
        .map(|k| {
            model
                .amplitude_block(&reference, k)
                .map(|s| s * input_polarization)
        })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = amplitudes
        .iter()
        .map(|a| a.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    if total <= 0.0 {
        return Err(Error::normalization(
            "scattering model annihilates the input polarization",
        ));
    }
    OnePhotonState::new(modes.clone(), amplitudes, Basis::Linear)
}

/// The diagonal blocks R(n) of the photon's density matrix over
/// mode (+) polarization, one Hermitian rank-1 2x2 block per mode,
/// together with the mode weights. Blocks are stored in the local
/// linear basis and satisfy Tr R(n) = w(n), sum of weights 1.
#[derive(Debug, Clone)]
pub struct BlockDensity {
    modes: ModeSet,
    blocks: Vec<Mat2>,
    weights: Vec<f64>,
}

impl BlockDensity {
    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, n: usize) -> &Mat2 {
        &self.blocks[n]
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Builds the per-mode blocks R(n) from a state: with Z fixed so the
/// weights sum to one, R(n) is Z times the outer product of mode n's
/// linear amplitude pair.
pub fn block_density(state: &OnePhotonState) -> Result<BlockDensity> {
    let linear = state.to_linear();
    let total = linear.total_weight_raw();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::normalization(
            "cannot normalize a zero-weight state",
        ));
    }
    let z1 = 1.0 / total;
    let mut blocks = Vec::with_capacity(linear.modes.len());
    let mut weights = Vec::with_capacity(linear.modes.len());
    for k in 0..linear.modes.len() {
        let psi = linear.amplitude(k);
        let mut r = psi * psi.adjoint();
        r.iter_mut().for_each(|z| *z *= z1);
        blocks.push(r);
        weights.push(z1 * linear.zeta(k));
    }
    Ok(BlockDensity {
        modes: linear.modes.clone(),
        blocks,
        weights,
    })
}

/// Off-diagonal block R(n, m) coupling modes n and m, normalized the
/// same way as the diagonal blocks. Not stored anywhere: no
/// mode-diagonal observable ever contracts with it, so it exists only
/// for consistency checks against the full direct-sum representation.
pub fn coherence_block(state: &OnePhotonState, n: usize, m: usize) -> Result<Mat2> {
    if n >= state.modes.len() || m >= state.modes.len() {
        return Err(Error::domain("mode index out of range"));
    }
    let linear = state.to_linear();
    let z1 = 1.0 / linear.total_weight_raw();
    let mut r = linear.amplitude(n) * linear.amplitude(m).adjoint();
    r.iter_mut().for_each(|z| *z *= z1);
    Ok(r)
}

/// Sums the diagonal blocks into a single 2x2 matrix: the average
/// polarization matrix left after forgetting which mode fired.
/// Hermitian, PSD, trace 1; legitimate only for observables that look
/// the same on every mode.
pub fn trace_out_momenta(bd: &BlockDensity) -> Mat2 {
    let mut rho = Matrix2::zeros();
    for b in &bd.blocks {
        rho += b;
    }
    rho
}

/// A mode-diagonal polarization observable: one Hermitian idempotent
/// 2x2 block per mode, in that mode's local linear basis.
#[derive(Debug, Clone)]
pub struct PolarizationProjector {
    modes: ModeSet,
    blocks: Vec<Mat2>,
}

impl PolarizationProjector {
    pub fn new(modes: ModeSet, blocks: Vec<Mat2>) -> Result<Self> {
        if blocks.len() != modes.len() {
            return Err(Error::config(format!(
                "projector block count {} does not match mode count {}",
                blocks.len(),
                modes.len()
            )));
        }
        for (i, p) in blocks.iter().enumerate() {
            if hermiticity_defect2(p) > 1e-12 {
                return Err(Error::domain(format!(
                    "projector block {i} is not Hermitian"
                )));
            }
            if max_abs_diff2(&(p * p), p) > 1e-12 {
                return Err(Error::domain(format!(
                    "projector block {i} is not idempotent"
                )));
            }
        }
        Ok(PolarizationProjector { modes, blocks })
    }

    /// Same block on every mode.
    pub fn uniform(modes: ModeSet, block: Mat2) -> Result<Self> {
        let blocks = vec![block; modes.len()];
        PolarizationProjector::new(modes, blocks)
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn block(&self, n: usize) -> &Mat2 {
        &self.blocks[n]
    }
}

fn require_same_modes(a: &ModeSet, b: &ModeSet) -> Result<()> {
    if a != b {
        return Err(Error::domain(
            "state and observable are defined on different mode sets",
        ));
    }
    Ok(())
}

/// Expectation of a mode-diagonal projector: block-by-block traces,
/// summed in mode order. This is the faithful value.
pub fn projector_expectation(bd: &BlockDensity, proj: &PolarizationProjector) -> Result<f64> {
    require_same_modes(&bd.modes, &proj.modes)?;
    let mut total = 0.0;
    for (r, p) in bd.blocks.iter().zip(&proj.blocks) {
        total += (r * p).trace().re;
    }
    Ok(total)
}

/// The shortcut value Tr(rho_bar p_bar): momentum traced out of the
/// state, blocks of the observable arithmetically averaged. Equals
/// projector_expectation only when all observable blocks coincide;
/// kept callable so the gap can be measured.
pub fn naive_average_expectation(bd: &BlockDensity, proj: &PolarizationProjector) -> Result<f64> {
    require_same_modes(&bd.modes, &proj.modes)?;
    let rho_bar = trace_out_momenta(bd);
    let mut p_bar = Matrix2::zeros();
    for p in &proj.blocks {
        p_bar += p;
    }
    let n = proj.blocks.len() as f64;
    p_bar.iter_mut().for_each(|z| *z /= Complex::new(n, 0.0));
    Ok((rho_bar * p_bar).trace().re)
}

/// Mode-dependent projector blocks of one shared polarizer: for each
/// mode, the polarizer's Jones projector at that mode's incidence,
/// rotated into the mode's own linear basis. The blocks differ mode to
/// mode whenever the modes are tilted, which is exactly why no single
/// 2x2 matrix can represent the measurement.
pub fn polarizer_projector(
    pol_beta: f64,
    modes: &ModeSet,
    polarizer_axis_frame: &LocalFrame,
) -> Result<PolarizationProjector> {
    let pol = Polarizer::new(pol_beta)?;
    let mut blocks = Vec::with_capacity(modes.len());
    for mode in modes.iter() {
        let (local, r2) = direction_in_frame(mode, polarizer_axis_frame)?;
        let t = jones_matrix(&pol, &local)?;
        // conjugate the real Jones block by the basis change, then lift
        // to complex storage
        let p = r2.transpose() * t.matrix() * r2;
        blocks.push(p.map(|x| Complex::new(x, 0.0)));
    }
    PolarizationProjector::new(modes.clone(), blocks)
}

/// Amplitude pair of mode k as the polarizer frame sees it: the mode's
/// linear amplitudes rotated into the polarizer-frame connection basis,
/// then mapped through the frame's W matrix onto the two polarizer
/// analyzer states.
fn polarizer_frame_amplitude(
    state: &OnePhotonState,
    k: usize,
    polarizer_axis_frame: &LocalFrame,
) -> Result<Vector2<C64>> {
    let (local, r2) = direction_in_frame(state.modes.mode(k), polarizer_axis_frame)?;
    let w = w_matrix(&local)?;
    let map = (w.matrix() * r2).map(|x| Complex::new(x, 0.0));
    Ok(map * state.amplitude(k))
}

/// Stokes parameters (s0, s1, s2, s3) of the photon as measured behind
/// one shared polarizer axis. Convention: s1 balances the 45-degree
/// linear pair, s2 the circular pair, s3 the (x, y) pair, so s3 sits on
/// the diagonal of the reconstructed matrix.
pub fn stokes_parameters(
    state: &OnePhotonState,
    polarizer_axis_frame: &LocalFrame,
) -> Result<[f64; 4]> {
    let linear = state.to_linear();
    let mut s = [0.0; 4];
    for k in 0..linear.modes.len() {
        let c = polarizer_frame_amplitude(&linear, k, polarizer_axis_frame)?;
        for (i, si) in s.iter_mut().enumerate() {
            *si += (c.adjoint() * sigma(i) * c)[(0, 0)].re;
        }
    }
    Ok(s)
}

/// The 2x2 density matrix a polarization measurement reconstructs.
/// Always a valid density matrix even though the polarizer-frame
/// states it refers to are non-orthogonal at oblique incidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDensity {
    rho: Mat2,
}

impl EffectiveDensity {
    pub fn new(rho: Mat2) -> Result<Self> {
        if hermiticity_defect2(&rho) > 1e-12 {
            return Err(Error::domain("effective density is not Hermitian"));
        }
        if (rho.trace().re - 1.0).abs() > 1e-12 || rho.trace().im.abs() > 1e-12 {
            return Err(Error::domain("effective density trace is not 1"));
        }
        let eig = hermitian_eigenvalues2(&rho);
        if eig[0] < -1e-12 {
            return Err(Error::domain(format!(
                "effective density has negative eigenvalue {}",
                eig[0]
            )));
        }
        Ok(EffectiveDensity { rho })
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }
}

/// Builds the effective density as the normalized Gram accumulation of
/// the per-mode polarizer-frame amplitude pairs. PSD by construction;
/// agrees with the Stokes reconstruction entrywise.
pub fn effective_density(
    state: &OnePhotonState,
    polarizer_axis_frame: &LocalFrame,
) -> Result<EffectiveDensity> {
    let linear = state.to_linear();
    let mut gram: Mat2 = Matrix2::zeros();
    for k in 0..linear.modes.len() {
        let c = polarizer_frame_amplitude(&linear, k, polarizer_axis_frame)?;
        gram += c * c.adjoint();
    }
    let total = gram.trace().re;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::normalization(
            "no transmitted amplitude behind the polarizer axis",
        ));
    }
    gram.iter_mut().for_each(|z| *z /= Complex::new(total, 0.0));
    EffectiveDensity::new(gram)
}

/// Rebuilds the 2x2 density matrix from normalized Stokes parameters.
pub fn density_from_stokes(s: &[f64; 4]) -> Result<Mat2> {
    if !(s[0].is_finite() && s[0] > 0.0) {
        return Err(Error::normalization(format!(
            "total Stokes intensity must be positive, got {}",
            s[0]
        )));
    }
    let mut rho: Mat2 = Matrix2::zeros();
    for (i, si) in s.iter().enumerate() {
        let mut term = sigma(i);
        let scale = Complex::new(0.5 * si / s[0], 0.0);
        term.iter_mut().for_each(|z| *z *= scale);
        rho += term;
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{cap_grid, Direction};
    use crate::pauli::c;
    use crate::scatter::{ModelKind, ScatterModel};
    use approx::assert_abs_diff_eq;

    fn single_mode() -> ModeSet {
        let d = Direction::new(0.0, 0.0).unwrap();
        ModeSet::new(d, 0.0, vec![d]).unwrap()
    }

    fn x_state(modes: &ModeSet) -> OnePhotonState {
        let amps = vec![Vector2::new(c(1.0), c(0.0)); modes.len()];
        OnePhotonState::new(modes.clone(), amps, Basis::Linear).unwrap()
    }

    #[test]
    fn identity_scatter_keeps_the_input() {
        let modes = single_mode();
        let model = ScatterModel::build(ModelKind::Identity, &modes).unwrap();
        let st = scatter_single(&Vector2::new(c(1.0), c(0.0)), &model, &modes).unwrap();
        assert_eq!(st.amplitude(0), &Vector2::new(c(1.0), c(0.0)));
        assert_eq!(st.basis(), Basis::Linear);
    }

    #[test]
    fn zero_output_is_a_normalization_error() {
        let modes = single_mode();
        let model = ScatterModel::build(
            ModelKind::FixedJones(Matrix2::zeros()),
            &modes,
        )
        .unwrap();
        assert!(matches!(
            scatter_single(&Vector2::new(c(1.0), c(0.0)), &model, &modes),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn weights_follow_squared_amplitudes() {
        let d0 = Direction::new(0.0, 0.0).unwrap();
        let d1 = Direction::new(0.1, 0.0).unwrap();
        let modes = ModeSet::new(d0, 0.2, vec![d0, d1]).unwrap();
        // zeta = (3, 1)
        let amps = vec![
            Vector2::new(Complex::new(1.0, 1.0), Complex::new(0.0, -1.0)),
            Vector2::new(c(0.0), Complex::new(0.0, 1.0)),
        ];
        let st = OnePhotonState::new(modes, amps, Basis::Linear).unwrap();
        let bd = block_density(&st).unwrap();
        assert_abs_diff_eq!(bd.weight(0), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(bd.weight(1), 0.25, epsilon = 1e-15);
        for n in 0..2 {
            assert_abs_diff_eq!(bd.block(n).trace().re, bd.weight(n), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            trace_out_momenta(&bd).trace().re,
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn helicity_amplitudes_convert_before_blocks() {
        let modes = single_mode();
        // h = (1, 1)/sqrt(2) is pure x
        let amps = vec![Vector2::new(
            Complex::new(1.0 / 2f64.sqrt(), 0.0),
            Complex::new(1.0 / 2f64.sqrt(), 0.0),
        )];
        let st = OnePhotonState::new(modes, amps, Basis::Helicity).unwrap();
        let bd = block_density(&st).unwrap();
        assert!(max_abs_diff2(bd.block(0), &(Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0)))) < 1e-15);
    }

    #[test]
    fn opposite_projectors_on_opposite_blocks_expose_the_naive_gap() {
        let d0 = Direction::new(0.0, 0.0).unwrap();
        let d1 = Direction::new(0.1, 0.0).unwrap();
        let modes = ModeSet::new(d0, 0.2, vec![d0, d1]).unwrap();
        let amps = vec![
            Vector2::new(c(1.0), c(0.0)),
            Vector2::new(c(0.0), c(1.0)),
        ];
        let st = OnePhotonState::new(modes.clone(), amps, Basis::Linear).unwrap();
        let bd = block_density(&st).unwrap();
        let px = Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0));
        let py = Matrix2::new(c(0.0), c(0.0), c(0.0), c(1.0));
        let proj = PolarizationProjector::new(modes, vec![px, py]).unwrap();
        let faithful = projector_expectation(&bd, &proj).unwrap();
        let naive = naive_average_expectation(&bd, &proj).unwrap();
        assert_abs_diff_eq!(faithful, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(naive, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn uniform_projector_closes_the_gap() {
        let modes = cap_grid(&Direction::new(0.0, 0.0).unwrap(), 0.3, 2, 3).unwrap();
        let model = ScatterModel::build(ModelKind::RandomUnitary { seed: 11 }, &modes).unwrap();
        let st = scatter_single(
            &Vector2::new(c(0.6), Complex::new(0.0, 0.8)),
            &model,
            &modes,
        )
        .unwrap();
        let bd = block_density(&st).unwrap();
        let px = Matrix2::new(c(1.0), c(0.0), c(0.0), c(0.0));
        let proj = PolarizationProjector::uniform(modes, px).unwrap();
        let faithful = projector_expectation(&bd, &proj).unwrap();
        let naive = naive_average_expectation(&bd, &proj).unwrap();
        assert_abs_diff_eq!(faithful, naive, epsilon = 1e-13);
        assert!((0.0..=1.0 + 1e-12).contains(&faithful));
    }

    #[test]
    fn mismatched_mode_sets_are_rejected() {
        let modes_a = single_mode();
        let d = Direction::new(0.2, 0.0).unwrap();
        let modes_b = ModeSet::new(d, 0.0, vec![d]).unwrap();
        let bd = block_density(&x_state(&modes_a)).unwrap();
        let proj =
            PolarizationProjector::uniform(modes_b, Matrix2::identity()).unwrap();
        assert!(matches!(
            projector_expectation(&bd, &proj),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn polarizer_projector_blocks_vary_with_tilt() {
        let modes = cap_grid(&Direction::new(0.4, 0.0).unwrap(), 0.2, 1, 4).unwrap();
        let proj =
            polarizer_projector(0.3, &modes, &LocalFrame::identity()).unwrap();
        let mut spread: f64 = 0.0;
        for n in 1..modes.len() {
            spread = spread.max(max_abs_diff2(proj.block(n), proj.block(0)));
        }
        assert!(spread > 1e-3, "tilted modes must see different blocks");
    }

    #[test]
    fn normal_incidence_stokes_of_x_is_unit_s3() {
        let modes = single_mode();
        let s = stokes_parameters(&x_state(&modes), &LocalFrame::identity()).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[2], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[3], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn circular_light_lands_on_s2() {
        let modes = single_mode();
        let amps = vec![Vector2::new(
            Complex::new(1.0 / 2f64.sqrt(), 0.0),
            Complex::new(0.0, 1.0 / 2f64.sqrt()),
        )];
        let st = OnePhotonState::new(modes, amps, Basis::Linear).unwrap();
        let s = stokes_parameters(&st, &LocalFrame::identity()).unwrap();
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[2].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[3], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_density_recovers_a_pure_input() {
        let modes = single_mode();
        let amps = vec![Vector2::new(c(0.6), Complex::new(0.0, 0.8))];
        let st = OnePhotonState::new(modes, amps.clone(), Basis::Linear).unwrap();
        let eff = effective_density(&st, &LocalFrame::identity()).unwrap();
        let expect = amps[0] * amps[0].adjoint();
        assert!(max_abs_diff2(eff.matrix(), &expect) < 1e-15);
        assert_abs_diff_eq!(eff.purity(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn stokes_route_matches_gram_route() {
        let modes = cap_grid(&Direction::new(0.2, 0.5).unwrap(), 0.25, 2, 3).unwrap();
        let model =
            ScatterModel::build(ModelKind::RandomUnitary { seed: 3 }, &modes).unwrap();
        let st = scatter_single(
            &Vector2::new(c(0.8), Complex::new(0.36, 0.48)),
            &model,
            &modes,
        )
        .unwrap();
        let eff = effective_density(&st, &LocalFrame::identity()).unwrap();
        let s = stokes_parameters(&st, &LocalFrame::identity()).unwrap();
        let rebuilt = density_from_stokes(&s).unwrap();
        assert!(max_abs_diff2(eff.matrix(), &rebuilt) < 1e-13);
        assert!(s[0] >= (s[1] * s[1] + s[2] * s[2] + s[3] * s[3]).sqrt() - 1e-12);
        assert!(eff.purity() < 1.0 - 1e-9, "multimode state must mix");
    }
}
