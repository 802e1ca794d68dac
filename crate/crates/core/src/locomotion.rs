//! Fin gaits and kinematic terrain speeds.
//!
//! Speed is cadence x advance per cycle x terrain slip. The defaults are the
//! measured average speeds divided out into a cadence and a stride.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitConfig {
    /// Full fin rotations per second.
    pub crawl_cadence: f64,
    /// cm advanced per rotation on firm ground.
    pub crawl_advance: f64,
    /// Swim strokes per second.
    pub swim_cadence: f64,
    /// cm advanced per stroke.
    pub swim_advance: f64,
    /// Recovery-stroke duration over power-stroke duration.
    pub power_recovery_ratio: f64,
    /// Fraction of the land stride kept on the pebble floor.
    pub underwater_slip: f64,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            crawl_cadence: 0.5,
            crawl_advance: 1.4,
            swim_cadence: 1.0,
            swim_advance: 0.75,
            power_recovery_ratio: 2.0,
            underwater_slip: 0.24 / 0.70,
        }
    }
}

impl GaitConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.crawl_cadence,
            self.crawl_advance,
            self.swim_cadence,
            self.swim_advance,
            self.power_recovery_ratio,
            self.underwater_slip,
        ];
        if positive.iter().all(|v| *v > 0.0 && v.is_finite()) && self.underwater_slip <= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid gait configuration {self:?}")))
        }
    }

    pub fn period(&self, mode: GaitMode) -> Option<f64> {
        match mode {
            GaitMode::Crawl => Some(1.0 / self.crawl_cadence),
            GaitMode::Swim => Some(1.0 / self.swim_cadence),
            GaitMode::Halt => None,
        }
    }

    /// Share of each swim period spent in the power stroke.
    pub fn power_fraction(&self) -> f64 {
        1.0 / (1.0 + self.power_recovery_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitMode {
    Crawl,
    Swim,
    #[default]
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heading {
    #[default]
    Forward,
    Backward,
}

impl Heading {
    pub fn sign(self) -> f64 {
        match self {
            Heading::Forward => 1.0,
            Heading::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terrain {
    Land,
    UnderwaterFloor,
    WaterSurface,
    Ramp { angle_deg: f64 },
}

/// Ideal fin angles at an instant, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinCommand {
    pub left_angle: f64,
    pub right_angle: f64,
    pub mode: GaitMode,
}

fn cycle_phase(t: f64, cadence: f64) -> f64 {
    (t * cadence).rem_euclid(1.0)
}

pub fn gait_phase(t: f64, mode: GaitMode, config: &GaitConfig) -> FinCommand {
    let t = t.max(0.0);
    match mode {
        GaitMode::Crawl => {
            let phase = cycle_phase(t, config.crawl_cadence);
            let left = 360.0 * phase;
            FinCommand {
                left_angle: left,
                right_angle: (left + 180.0).rem_euclid(360.0),
                mode,
            }
        }
        GaitMode::Swim => {
            let phase = cycle_phase(t, config.swim_cadence);
            let p = config.power_fraction();
            let angle = if phase < p {
                180.0 * phase / p
            } else {
                180.0 * (1.0 - (phase - p) / (1.0 - p))
            };
            FinCommand {
                left_angle: angle,
                right_angle: angle,
                mode,
            }
        }
        GaitMode::Halt => FinCommand {
            left_angle: 0.0,
            right_angle: 0.0,
            mode,
        },
    }
}

fn terrain_name(t: &Terrain) -> String {
    match t {
        Terrain::Land => "land".into(),
        Terrain::UnderwaterFloor => "the underwater floor".into(),
        Terrain::WaterSurface => "the water surface".into(),
        Terrain::Ramp { angle_deg } => format!("a {angle_deg} degree ramp"),
    }
}

/// Horizontal speed, cm/s, unsigned.
pub fn terrain_speed(mode: GaitMode, terrain: Terrain, config: &GaitConfig) -> Result<f64> {
    let crawl = config.crawl_cadence * config.crawl_advance;
    match (mode, terrain) {
        (GaitMode::Halt, _) => Ok(0.0),
        (GaitMode::Crawl, Terrain::Land) => Ok(crawl),
        (GaitMode::Crawl, Terrain::UnderwaterFloor) => Ok(crawl * config.underwater_slip),
        (GaitMode::Crawl, Terrain::Ramp { angle_deg }) => Ok(crawl * angle_deg.to_radians().cos()),
        (GaitMode::Swim, Terrain::WaterSurface) => Ok(config.swim_cadence * config.swim_advance),
        (mode, terrain) => Err(Error::Mode {
            mode: format!("{mode:?}").to_lowercase(),
            terrain: terrain_name(&terrain),
        }),
    }
}

pub fn advance(
    position: f64,
    mode: GaitMode,
    heading: Heading,
    terrain: Terrain,
    dt: f64,
    config: &GaitConfig,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::domain("time step (s)", dt, f64::MIN_POSITIVE, f64::MAX));
    }
    Ok(position + heading.sign() * terrain_speed(mode, terrain, config)? * dt)
}
