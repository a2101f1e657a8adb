//! Config-file schemas for the state-building commands. Unknown keys
//! are rejected so typos fail loudly instead of silently using defaults.

use bellmode::modes::{cap_grid, Direction, LocalFrame, ModeSet};
use bellmode::polarizer::polarizer_frame;
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSpec {
    pub theta: f64,
    pub phi: f64,
}

impl DirectionSpec {
    pub fn build(&self) -> Result<Direction, CliError> {
        Ok(Direction::new(self.theta, self.phi)?)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

/// Either a regular polar grid over the cap ("grid") or an explicit
/// direction list ("modes"), never both.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSpec {
    pub reference: DirectionSpec,
    pub aperture: f64,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub modes: Option<Vec<DirectionSpec>>,
}

impl ModesSpec {
    pub fn build(&self) -> Result<ModeSet, CliError> {
        let reference = self.reference.build()?;
        match (&self.grid, &self.modes) {
            (Some(g), None) => {
                Ok(cap_grid(&reference, self.aperture, g.n_theta, g.n_phi)?)
            }
            (None, Some(list)) => {
                let dirs = list
                    .iter()
                    .map(|d| d.build())
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ModeSet::new(reference, self.aperture, dirs)?)
            }
            _ => Err(CliError::config(
                "mode spec needs exactly one of \"grid\" or \"modes\"",
            )),
        }
    }
}

pub fn frame_for(axis: &Option<DirectionSpec>) -> Result<LocalFrame, CliError> {
    match axis {
        None => Ok(LocalFrame::identity()),
        Some(spec) => Ok(polarizer_frame(&spec.build()?)),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnePhotonConfig {
    /// [[re, im], [re, im]], unit norm
    pub input: [[f64; 2]; 2],
    /// "linear" (default) or "helicity"
    #[serde(default)]
    pub basis: Option<String>,
    pub model: serde_json::Value,
    pub modes: ModesSpec,
    #[serde(default)]
    pub polarizer_axis: Option<DirectionSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPhotonConfig {
    pub c_plus: [f64; 2],
    pub c_minus: [f64; 2],
    pub model_a: serde_json::Value,
    pub model_b: serde_json::Value,
    pub modes_a: ModesSpec,
    pub modes_b: ModesSpec,
    #[serde(default)]
    pub axis_a: Option<DirectionSpec>,
    #[serde(default)]
    pub axis_b: Option<DirectionSpec>,
}
