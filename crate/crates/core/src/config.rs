//! TOML run configurations for the multi-bump and particle subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semiclassical::PotentialSpec;
use crate::soliton::{ForceField, NewtonState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpConfig {
    pub center: [f64; 3],
    #[serde(default)]
    pub phase: f64,
}

fn default_relax_steps() -> usize {
    50
}

/// `[grid]`, `[potential]` (with `[potential.v]`, `[potential.a]`,
/// `[[potential.wells]]`) and `[[bumps]]`. `eps` lists the sweep; the
/// command line may override it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultibumpConfig {
    pub grid: GridConfig,
    pub potential: PotentialSpec,
    pub bumps: Vec<BumpConfig>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default = "default_relax_steps")]
    pub relax_steps: usize,
}

fn one() -> usize {
    1
}

fn unit_mass() -> f64 {
    1.0
}

fn default_min_distance() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    pub x: [f64; 3],
    #[serde(default)]
    pub xi: [f64; 3],
    #[serde(default = "unit_mass")]
    pub m: f64,
}

/// `[field]` and `[[particles]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    pub field: ForceField,
    pub particles: Vec<ParticleConfig>,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
}

impl OdeConfig {
    pub fn initial_state(&self) -> Result<NewtonState> {
        NewtonState::new(
            self.particles.iter().map(|p| p.x).collect(),
            self.particles.iter().map(|p| p.xi).collect(),
            self.particles.iter().map(|p| p.m).collect(),
        )
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse_multibump(text: &str) -> Result<MultibumpConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_ode(text: &str) -> Result<OdeConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_multibump(path: impl AsRef<Path>) -> Result<MultibumpConfig> {
    parse_multibump(&read(path.as_ref())?)
}

pub fn load_ode(path: impl AsRef<Path>) -> Result<OdeConfig> {
    parse_ode(&read(path.as_ref())?)
}
