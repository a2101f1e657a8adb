//! Polarization-entangled photon pairs sent through two independent
//! scatterers and detected by two momentum-blind polarizers.
//!
//! Amplitudes are per mode-pair 2x2 blocks; the pair's polarization
//! sector is a weighted ensemble of pure 4x4 blocks, one per detected
//! mode pair. The 4x4 basis ordering is fixed throughout as
//! (x_A x_B, x_A y_B, y_A x_B, y_A y_B).

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::modes::{direction_in_frame, LocalFrame, ModeSet};
use crate::pauli::{
    hermitian_eigenvalues4, hermiticity_defect4, sigma, C64, Mat2, Mat4,
};
use crate::polarizer::w_matrix;

/// Source coefficients of the entangled pair: C+ multiplies the
/// (x_A, y_B) branch, C- the (y_A, x_B) branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellInitial {
    c_plus: C64,
    c_minus: C64,
}

impl BellInitial {
    pub fn new(c_plus: C64, c_minus: C64) -> Result<Self> {
        let norm = c_plus.norm_sqr() + c_minus.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::normalization(format!(
                "|C+|^2 + |C-|^2 must be 1, got {norm}"
            )));
        }
        Ok(BellInitial { c_plus, c_minus })
    }

    /// The antisymmetric combination (|xy> - |yx>)/sqrt(2).
    pub fn singlet() -> Self {
        let r = 1.0 / 2f64.sqrt();
        BellInitial {
            c_plus: Complex::new(r, 0.0),
            c_minus: Complex::new(-r, 0.0),
        }
    }

    /// The symmetric combination (|xy> + |yx>)/sqrt(2).
    pub fn triplet() -> Self {
        let r = 1.0 / 2f64.sqrt();
        BellInitial {
            c_plus: Complex::new(r, 0.0),
            c_minus: Complex::new(r, 0.0),
        }
    }

    pub fn c_plus(&self) -> C64 {
        self.c_plus
    }

    pub fn c_minus(&self) -> C64 {
        self.c_minus
    }
}

/// Scattered two-photon state over a pair of mode sets. Pair (k, q) is
/// stored at flat index k * len_b + q; the 2x2 block entry (alpha,
/// beta) is the amplitude for polarization alpha on arm A and beta on
/// arm B.
#[derive(Debug, Clone)]
pub struct PairState {
    modes_a: ModeSet,
    modes_b: ModeSet,
    amplitudes: Vec<Mat2>,
    zeta: Vec<f64>,
    weights: Vec<f64>,
}

impl PairState {
    pub fn modes_a(&self) -> &ModeSet {
        &self.modes_a
    }

    pub fn modes_b(&self) -> &ModeSet {
        &self.modes_b
    }

    fn flat(&self, k: usize, q: usize) -> usize {
        k * self.modes_b.len() + q
    }

    pub fn amplitude(&self, k: usize, q: usize) -> &Mat2 {
        &self.amplitudes[self.flat(k, q)]
    }

    /// Squared amplitude collected by the pair (k, q).
    pub fn zeta(&self, k: usize, q: usize) -> f64 {
        self.zeta[self.flat(k, q)]
    }

    /// Normalized ensemble weight of the pair (k, q); weights sum to 1.
    pub fn weight(&self, k: usize, q: usize) -> f64 {
        self.weights[self.flat(k, q)]
    }
}

/// Propagates the source state through one scatterer per arm. The block
/// on pair (k, q) combines arm A's response to an x (resp. y) input
/// with arm B's response to the partner polarization, weighted by the
/// source coefficients.
pub fn scatter_pair(
    init: &BellInitial,
    model_a: &crate::scatter::ScatterModel,
    model_b: &crate::scatter::ScatterModel,
    modes_a: &ModeSet,
    modes_b: &ModeSet,
) -> Result<PairState> {
    let ref_a = *modes_a.reference();
    let ref_b = *modes_b.reference();
    let blocks_a = modes_a
        .iter()
        .map(|k| model_a.amplitude_block(&ref_a, k))
        .collect::<Result<Vec<_>>>()?;
    let blocks_b = modes_b
        .iter()
        .map(|q| model_b.amplitude_block(&ref_b, q))
        .collect::<Result<Vec<_>>>()?;

    let n = modes_a.len() * modes_b.len();
    let mut amplitudes = Vec::with_capacity(n);
    let mut zeta = Vec::with_capacity(n);
    let mut total = 0.0;
    for sa in &blocks_a {
        let ax = sa.column(0);
        let ay = sa.column(1);
        for sb in &blocks_b {
            let bx = sb.column(0);
            let by = sb.column(1);
            let mut psi: Mat2 = Matrix2::zeros();
            for alpha in 0..2 {
                for beta in 0..2 {
                    psi[(alpha, beta)] =
                        init.c_plus * ax[alpha] * by[beta] + init.c_minus * ay[alpha] * bx[beta];
                }
            }
            let z: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
            total += z;
            amplitudes.push(psi);
            zeta.push(z);
        }
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::normalization(
            "scattering models annihilate the pair state",
        ));
    }
    let weights = zeta.iter().map(|z| z / total).collect();
    Ok(PairState {
        modes_a: modes_a.clone(),
        modes_b: modes_b.clone(),
        amplitudes,
        zeta,
        weights,
    })
}

/// Flattens a 2x2 amplitude block into the fixed 4-component ordering.
pub fn vectorize(psi: &Mat2) -> Vector4<C64> {
    Vector4::new(psi[(0, 0)], psi[(0, 1)], psi[(1, 0)], psi[(1, 1)])
}

/// Pure 4x4 polarization density matrix of one detected mode pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairBlock {
    rho: Mat4,
}

impl PairBlock {
    pub fn matrix(&self) -> &Mat4 {
        &self.rho
    }
}

/// Normalizes the (k, q) amplitude block into the pure density matrix
/// it collapses to once the pair of modes has been detected.
pub fn pair_block(ps: &PairState, k_index: usize, q_index: usize) -> Result<PairBlock> {
    if k_index >= ps.modes_a.len() || q_index >= ps.modes_b.len() {
        return Err(Error::domain("mode-pair index out of range"));
    }
    let z = ps.zeta(k_index, q_index);
    if z < f64::MIN_POSITIVE {
        return Err(Error::domain(format!(
            "degenerate pair ({k_index}, {q_index}) carries no amplitude"
        )));
    }
    let v = vectorize(ps.amplitude(k_index, q_index));
    let mut rho = v * v.adjoint();
    let scale = Complex::new(1.0 / z, 0.0);
    rho.iter_mut().for_each(|x| *x *= scale);
    Ok(PairBlock { rho })
}

/// The 4x4 density matrix joint Stokes tomography reconstructs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonEffectiveDensity {
    rho: Mat4,
}

impl TwoPhotonEffectiveDensity {
    pub fn new(rho: Mat4) -> Result<Self> {
        if hermiticity_defect4(&rho) > 1e-10 {
            return Err(Error::domain("two-photon effective density is not Hermitian"));
        }
        if (rho.trace().re - 1.0).abs() > 1e-10 || rho.trace().im.abs() > 1e-10 {
            return Err(Error::domain("two-photon effective density trace is not 1"));
        }
        let eig = hermitian_eigenvalues4(&rho);
        if eig[0] < -1e-10 {
            return Err(Error::domain(format!(
                "two-photon effective density has negative eigenvalue {}",
                eig[0]
            )));
        }
        Ok(TwoPhotonEffectiveDensity { rho })
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }
}

/// Map from a mode's linear amplitudes to the pair of analyzer states
/// of the polarizer whose axis frame is given.
fn polarizer_frame_map(
    mode: &crate::modes::Direction,
    axis_frame: &LocalFrame,
) -> Result<Mat2> {
    let (local, r2) = direction_in_frame(mode, axis_frame)?;
    let w = w_matrix(&local)?;
    Ok((w.matrix() * r2).map(|x| Complex::new(x, 0.0)))
}

/// Builds the measured 4x4 density matrix: each pair's amplitude block
/// is pushed through both polarizers' frame maps, vectorized, and
/// accumulated as a Gram sum in (k, q) order. PSD by construction.
pub fn effective_density_2(
    ps: &PairState,
    axis_a: &LocalFrame,
    axis_b: &LocalFrame,
) -> Result<TwoPhotonEffectiveDensity> {
    let maps_a = ps
        .modes_a
        .iter()
        .map(|k| polarizer_frame_map(k, axis_a))
        .collect::<Result<Vec<_>>>()?;
    let maps_b = ps
        .modes_b
        .iter()
        .map(|q| polarizer_frame_map(q, axis_b))
        .collect::<Result<Vec<_>>>()?;
    let mut gram: Mat4 = Matrix4::zeros();
    for (k, va) in maps_a.iter().enumerate() {
        for (q, vb) in maps_b.iter().enumerate() {
            let c = va * ps.amplitude(k, q) * vb.transpose();
            let v = vectorize(&c);
            gram += v * v.adjoint();
        }
    }
    let total = gram.trace().re;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::normalization(
            "no transmitted amplitude behind the polarizer pair",
        ));
    }
    let scale = Complex::new(1.0 / total, 0.0);
    gram.iter_mut().for_each(|x| *x *= scale);
    TwoPhotonEffectiveDensity::new(gram)
}

/// Joint Stokes parameters s_ij = Tr(rho (sigma_i x sigma_j)).
pub fn two_photon_stokes(rho: &Mat4) -> [[f64; 4]; 4] {
    let mut s = [[0.0; 4]; 4];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, sij) in row.iter_mut().enumerate() {
            let op = sigma(i).kronecker(&sigma(j));
            *sij = (rho * op).trace().re;
        }
    }
    s
}

/// Rebuilds the 4x4 density matrix from joint Stokes parameters,
/// normalized so the total-intensity component is 1.
pub fn density_from_stokes_2(s: &[[f64; 4]; 4]) -> Result<Mat4> {
    if !(s[0][0].is_finite() && s[0][0] > 0.0) {
        return Err(Error::normalization(format!(
            "total coincidence intensity must be positive, got {}",
            s[0][0]
        )));
    }
    let mut rho: Mat4 = Matrix4::zeros();
    for (i, row) in s.iter().enumerate() {
        for (j, sij) in row.iter().enumerate() {
            let mut op = sigma(i).kronecker(&sigma(j));
            let scale = Complex::new(0.25 * sij / s[0][0], 0.0);
            op.iter_mut().for_each(|x| *x *= scale);
            rho += op;
        }
    }
    Ok(rho)
}

/// One component of a momentum mixture: a 4x4 polarization density
/// matrix tagged with the tilt each arm's detection direction makes
/// with its polarizer axis.
#[derive(Debug, Clone)]
pub struct MixtureTerm {
    pub weight: f64,
    pub rho: Mat4,
    pub tilt_a: f64,
    pub tilt_b: f64,
}

impl MixtureTerm {
    pub fn new(weight: f64, rho: Mat4, tilt_a: f64, tilt_b: f64) -> Self {
        MixtureTerm {
            weight,
            rho,
            tilt_a,
            tilt_b,
        }
    }

    pub fn from_block(weight: f64, block: &PairBlock, tilt_a: f64, tilt_b: f64) -> Self {
        MixtureTerm::new(weight, *block.matrix(), tilt_a, tilt_b)
    }
}

/// A statistical ensemble over detected momenta: pure (or premixed)
/// polarization blocks with weights and per-term arm tilts. The Bell
/// test machinery evaluates settings against every term and averages.
#[derive(Debug, Clone)]
pub struct MomentumMixture {
    terms: Vec<MixtureTerm>,
}

impl MomentumMixture {
    pub fn new(terms: Vec<MixtureTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::domain("a mixture needs at least one term"));
        }
        let mut total = 0.0;
        for (i, t) in terms.iter().enumerate() {
            if !(t.weight.is_finite() && t.weight >= 0.0) {
                return Err(Error::domain(format!(
                    "mixture weight {i} must be nonnegative, got {}",
                    t.weight
                )));
            }
            for tilt in [t.tilt_a, t.tilt_b] {
                if !(tilt.is_finite() && (0.0..=std::f64::consts::FRAC_PI_2).contains(&tilt)) {
                    return Err(Error::domain(format!(
                        "mixture tilt must lie in [0, pi/2], got {tilt}"
                    )));
                }
            }
            if hermiticity_defect4(&t.rho) > 1e-9 || (t.rho.trace().re - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!(
                    "mixture term {i} is not a unit-trace Hermitian matrix"
                )));
            }
            total += t.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "mixture weights must sum to 1, got {total}"
            )));
        }
        Ok(MomentumMixture { terms })
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    /// The weighted average density matrix, with the tilt tags dropped.
    pub fn average_density(&self) -> Mat4 {
        let mut rho: Mat4 = Matrix4::zeros();
        for t in &self.terms {
            let mut part = t.rho;
            let w = Complex::new(t.weight, 0.0);
            part.iter_mut().for_each(|x| *x *= w);
            rho += part;
        }
        rho
    }

    /// Parses a fixture: a JSON array of
    /// `{"weight": w, "theta_a": ta, "theta_b": tb, "state": "Phi1".."Phi4"}`.
    /// Omitted tilts default to 0; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("mixture fixture is not valid JSON: {e}")))?;
        let list = value
            .as_array()
            .ok_or_else(|| Error::config("mixture fixture must be a JSON array"))?;
        let mut terms = Vec::with_capacity(list.len());
        for (i, item) in list.iter().enumerate() {
            let obj = item
                .as_object()
                .ok_or_else(|| Error::config(format!("mixture term {i} must be an object")))?;
            for key in obj.keys() {
                if !matches!(key.as_str(), "weight" | "theta_a" | "theta_b" | "state") {
                    return Err(Error::config(format!(
                        "unknown mixture key in term {i}: {key}"
                    )));
                }
            }
            let weight = obj
                .get("weight")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::config(format!("mixture term {i} needs a numeric weight")))?;
            let tilt = |key: &str| -> Result<f64> {
                match obj.get(key) {
                    None => Ok(0.0),
                    Some(v) => v.as_f64().ok_or_else(|| {
                        Error::config(format!("mixture term {i} has a non-numeric {key}"))
                    }),
                }
            };
            let state = obj
                .get("state")
                .and_then(|v| v.as_str())
                .ok_or_else(|| Error::config(format!("mixture term {i} needs a state label")))?;
            let index = match state {
                "Phi1" => 1,
                "Phi2" => 2,
                "Phi3" => 3,
                "Phi4" => 4,
                other => {
                    return Err(Error::config(format!(
                        "mixture term {i} has unknown state {other:?} (expected Phi1..Phi4)"
                    )))
                }
            };
            terms.push(MixtureTerm::new(
                weight,
                crate::chsh::bell_schmidt_density(index)?,
                tilt("theta_a")?,
                tilt("theta_b")?,
            ));
        }
        MomentumMixture::new(terms)
    }
}
