//! Mode-coupling models: how an incident polarization spreads over a
//! detection mode set.
//!
//! A model assigns each output mode a 2x2 complex block mapping the
//! incident mode's linear amplitudes to the output mode's linear
//! amplitudes. Blocks for the seeded kinds are drawn with a
//! counter-based generator keyed by (seed, mode index), so a block
//! depends only on the seed and the mode's position in the set: equal
//! calls give bit-identical blocks, and reordering a mode set visibly
//! changes the state it produces.

use nalgebra::Matrix2;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::modes::{Direction, ModeSet};
use crate::pauli::Mat2;

/// What kind of medium sits between the source and the detector.
#[derive(Debug, Clone)]
pub enum ModelKind {
    /// Free propagation: the block is the identity on the incident mode
    /// and zero on every other mode.
    Identity,
    /// A fixed deterministic Jones block applied on every output mode.
    FixedJones(Mat2),
    /// An independent Haar-random 2x2 unitary per mode.
    RandomUnitary { seed: u64 },
    /// Haar-random unitaries scaled by a Gaussian angular envelope
    /// exp(-t^2 / (2 sigma^2)) in the offset t from the set's reference.
    GaussianEnvelopeRandom { seed: u64, sigma: f64 },
}

/// A scattering model bound to a mode set, with every per-mode block
/// drawn eagerly at construction.
#[derive(Debug, Clone)]
pub struct ScatterModel {
    kind: ModelKind,
    modes: ModeSet,
    blocks: Vec<Mat2>,
}

/// Haar-random 2x2 unitary: Gram-Schmidt on a complex Gaussian matrix.
/// Plain Gram-Schmidt already leaves the triangular factor with a
/// positive real diagonal, which is what makes the draw Haar.
fn haar_unitary(rng: &mut ChaCha8Rng) -> Mat2 {
    let mut g = [Complex::new(0.0, 0.0); 4];
    for slot in g.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *slot = Complex::new(re, im);
    }
    // columns a = (g0, g2), b = (g1, g3)
    let a = nalgebra::Vector2::new(g[0], g[2]);
    let na = a.norm();
    let q1 = a / Complex::new(na, 0.0);
    let b = nalgebra::Vector2::new(g[1], g[3]);
    let proj = q1.x.conj() * b.x + q1.y.conj() * b.y;
    let r = nalgebra::Vector2::new(b.x - proj * q1.x, b.y - proj * q1.y);
    let q2 = r / Complex::new(r.norm(), 0.0);
    Matrix2::new(q1.x, q2.x, q1.y, q2.y)
}

fn mode_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl ScatterModel {
    /// Binds a model kind to a mode set and populates the per-mode
    /// block cache.
    pub fn build(kind: ModelKind, modes: &ModeSet) -> Result<Self> {
        if let ModelKind::GaussianEnvelopeRandom { sigma, .. } = kind {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::config(format!(
                    "gaussian envelope width must be positive, got {sigma}"
                )));
            }
        }
        if let ModelKind::FixedJones(j) = &kind {
            if j.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::config("fixed Jones block must be finite"));
            }
        }
        let blocks = match &kind {
            ModelKind::Identity | ModelKind::FixedJones(_) => Vec::new(),
            ModelKind::RandomUnitary { seed } => (0..modes.len())
                .map(|i| haar_unitary(&mut mode_rng(*seed, i)))
                .collect(),
            ModelKind::GaussianEnvelopeRandom { seed, sigma } => {
                let k0 = modes.reference().unit_vector();
                (0..modes.len())
                    .map(|i| {
                        let u = haar_unitary(&mut mode_rng(*seed, i));
                        let offset = modes.mode(i).unit_vector().dot(&k0).clamp(-1.0, 1.0).acos();
                        let scale = (-offset * offset / (2.0 * sigma * sigma)).exp();
                        u.map(|z| z * Complex::new(scale, 0.0))
                    })
                    .collect()
            }
        };
        Ok(ScatterModel {
            kind,
            modes: modes.clone(),
            blocks,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    /// Amplitude block from `input` into `output`. The output mode must
    /// belong to the bound mode set.
    pub fn amplitude_block(&self, input: &Direction, output: &Direction) -> Result<Mat2> {
        let idx = self
            .modes
            .index_of(output)
            .ok_or_else(|| Error::config("output mode is not in the model's mode set"))?;
        Ok(match &self.kind {
            ModelKind::Identity => {
                if output == input {
                    Matrix2::identity()
                } else {
                    Matrix2::zeros()
                }
            }
            ModelKind::FixedJones(j) => *j,
            ModelKind::RandomUnitary { .. } | ModelKind::GaussianEnvelopeRandom { .. } => {
                self.blocks[idx]
            }
        })
    }

    /// Block for the mode at position `idx` of the bound set, taking the
    /// set's reference as the incident mode.
    pub fn block_for_index(&self, idx: usize) -> Result<Mat2> {
        if idx >= self.modes.len() {
            return Err(Error::config("mode index out of range"));
        }
        let output = *self.modes.mode(idx);
        self.amplitude_block(&self.modes.reference().clone(), &output)
    }

    /// Parses a model spec of the form
    /// `{"kind": "...", "seed": ..., "sigma": ..., "jones": [[..]]}`.
    /// `jones` entries may be numbers or [re, im] pairs. Unknown keys
    /// are rejected.
    pub fn kind_from_json(value: &serde_json::Value) -> Result<ModelKind> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::config("model spec must be an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "kind" | "seed" | "sigma" | "jones") {
                return Err(Error::config(format!("unknown model key: {key}")));
            }
        }
        let kind = obj
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::config("model spec needs a string kind"))?;
        let seed = || -> Result<u64> {
            obj.get("seed")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::config("model spec needs an unsigned integer seed"))
        };
        match kind {
            "identity" => Ok(ModelKind::Identity),
            "fixed_jones" => {
                let rows = obj
                    .get("jones")
                    .and_then(|v| v.as_array())
                    .ok_or_else(|| Error::config("fixed_jones needs a 2x2 jones array"))?;
                if rows.len() != 2 {
                    return Err(Error::config("jones must have 2 rows"));
                }
                let mut m = Matrix2::zeros();
                for (i, row) in rows.iter().enumerate() {
                    let cols = row
                        .as_array()
                        .filter(|c| c.len() == 2)
                        .ok_or_else(|| Error::config("jones rows must have 2 entries"))?;
                    for (j, cell) in cols.iter().enumerate() {
                        m[(i, j)] = parse_complex(cell)?;
                    }
                }
                Ok(ModelKind::FixedJones(m))
            }
            "random_unitary" => Ok(ModelKind::RandomUnitary { seed: seed()? }),
            "gaussian_envelope_random" => {
                let sigma = obj
                    .get("sigma")
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| Error::config("gaussian envelope needs a numeric sigma"))?;
                Ok(ModelKind::GaussianEnvelopeRandom {
                    seed: seed()?,
                    sigma,
                })
            }
            other => Err(Error::config(format!("unknown model kind: {other}"))),
        }
    }
}

fn parse_complex(v: &serde_json::Value) -> Result<Complex<f64>> {
    if let Some(x) = v.as_f64() {
        return Ok(Complex::new(x, 0.0));
    }
    if let Some(pair) = v.as_array() {
        if pair.len() == 2 {
            if let (Some(re), Some(im)) = (pair[0].as_f64(), pair[1].as_f64()) {
                return Ok(Complex::new(re, im));
            }
        }
    }
    Err(Error::config(
        "complex entries must be numbers or [re, im] pairs",
    ))
}
