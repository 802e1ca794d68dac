//! The JSON configuration file shared by the CLI and the live service.
//!
//! Every section is optional; missing keys take the library defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{DragModel, VerticalParams, DEFAULT_FLOOR_DEPTH};
use crate::energy::{BatterySpec, PowerModel};
use crate::error::{Error, Result};
use crate::hydrostatics::{FixedSubmersion, FluidParams};
use crate::locomotion::GaitConfig;
use crate::mission::{EnvGeometry, MissionParams};
use crate::morphology::{Morphology, VolumeModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BodyConfig {
    pub mass_kg: f64,
    pub submersion: FixedSubmersion,
}

impl Default for BodyConfig {
    fn default() -> Self {
        Self {
            mass_kg: 0.330,
            submersion: FixedSubmersion::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub geometry: Morphology,
    pub volume_model: VolumeModel,
    pub drag: DragModel,
    pub gait: GaitConfig,
    pub power: PowerModel,
    pub battery: BatterySpec,
    pub environment: EnvGeometry,
    pub body: BodyConfig,
    pub fluid: FluidParams,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        c.mission_params().validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration always serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// Vertical parameters with the floor at the configured water depth.
    pub fn vertical_params(&self) -> VerticalParams {
        VerticalParams {
            mass: self.body.mass_kg,
            fluid: self.fluid,
            volume: self.volume_model,
            drag: self.drag,
            morphology: self.geometry,
            floor_depth: if self.environment.water_depth > 0.0 {
                -self.environment.water_depth
            } else {
                DEFAULT_FLOOR_DEPTH
            },
            submersion: self.body.submersion,
        }
    }

    pub fn mission_params(&self) -> MissionParams {
        MissionParams {
            vertical: self.vertical_params(),
            gait: self.gait,
            power: self.power,
            battery: self.battery,
            environment: self.environment,
        }
    }
}
