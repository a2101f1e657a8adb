//! Polarization optics of tilted polarizers and multimode photon
//! states, with the Bell-CHSH machinery that shows how momentum-blind
//! detection degrades measured entanglement.
//!
//! The crate is organized bottom-up:
//!
//! * [`modes`]: directions, local transverse frames, helicity bases,
//!   and finite detection mode sets.
//! * [`polarizer`]: the tilted-polarizer Jones projector, transmitted
//!   states, their overlaps, and the W matrix connecting polarizer-frame
//!   states to a mode's own basis.
//! * [`scatter`]: per-mode scattering amplitude models, deterministic
//!   and seeded-random.
//! * [`onephoton`]: multimode one-photon states, block density
//!   matrices, momentum-blind expectations, Stokes parameters, and the
//!   effective 2x2 density matrix.
//! * [`twophoton`]: entangled pairs through two scatterers, pair
//!   blocks, the 4x4 effective density matrix, and momentum mixtures.
//! * [`chsh`]: Bell-Schmidt states, analyzer vectors, closed-form
//!   violation curves, and the settings optimizer.
//!
//! All numerics are deterministic: random models are seeded and
//! counter-keyed, reductions run in mode-list order, and formatted
//! output uses a fixed float representation.

pub mod chsh;
pub mod error;
pub mod floatfmt;
pub mod modes;
pub mod onephoton;
pub mod pauli;
pub mod polarizer;
pub mod scatter;
pub mod twophoton;

pub use error::{Error, Result};
