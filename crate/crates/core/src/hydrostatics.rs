//! Weight/buoyancy balance of the morphing body.
//!
//! Units: mass in kg, volume in cm^3, height in cm, force in N. Buoyancy is a
//! function of displaced volume only; the sealed body is treated as
//! quasi-isobaric, so internal air pressure does not enter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::bisect;
use crate::error::{check_range, Error, Result};
use crate::fmt::f9;
use crate::morphology::VolumeModel;

/// Net-force band inside which a configuration is reported as neutral, N.
pub const NEUTRAL_REPORT_TOL_N: f64 = 1e-3;

/// Convergence target of the numeric neutral solve, N.
pub const NEUTRAL_SOLVE_TOL_N: f64 = 1e-9;

const CM3_TO_M3: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluidParams {
    /// kg/m^3
    pub density: f64,
    /// m/s^2
    pub gravity: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            density: 1000.0,
            gravity: 9.81,
        }
    }
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        if self.density > 0.0 && self.gravity > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "fluid density and gravity must be positive, got {} and {}",
                self.density, self.gravity
            )))
        }
    }

    /// Volume of fluid whose weight equals `mass`, cm^3.
    pub fn equivalent_volume(&self, mass: f64) -> f64 {
        mass / self.density / CM3_TO_M3
    }
}

/// Vertical forces on the body at one instant. Positive is upward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForceBreakdown {
    pub weight: f64,
    pub buoyancy: f64,
    pub drag: f64,
    pub contact_normal: f64,
    pub net: f64,
}

impl ForceBreakdown {
    pub fn new(weight: f64, buoyancy: f64, drag: f64, contact_normal: f64) -> Self {
        Self {
            weight,
            buoyancy,
            drag,
            contact_normal,
            net: buoyancy - weight + drag + contact_normal,
        }
    }

    /// Buoyancy minus weight, ignoring drag and contact.
    pub fn hydrostatic(&self) -> f64 {
        self.buoyancy - self.weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuoyancyState {
    Negative,
    Neutral,
    Positive,
}

impl BuoyancyState {
    pub fn classify(net: f64) -> Self {
        if net.abs() < NEUTRAL_REPORT_TOL_N {
            BuoyancyState::Neutral
        } else if net > 0.0 {
            BuoyancyState::Positive
        } else {
            BuoyancyState::Negative
        }
    }
}

pub fn weight_force(mass: f64, fluid: &FluidParams) -> Result<f64> {
    check_range("mass (kg)", mass, 0.0, f64::MAX)?;
    Ok(mass * fluid.gravity)
}

pub fn buoyant_force(displaced_volume: f64, fluid: &FluidParams) -> Result<f64> {
    check_range("displaced volume (cm^3)", displaced_volume, 0.0, f64::MAX)?;
    Ok(fluid.density * displaced_volume * CM3_TO_M3 * fluid.gravity)
}

/// Buoyancy of the fully submerged body minus its weight.
///
/// `height` is only required to be non-negative, so the same law can be
/// evaluated outside the robot's own stroke (design-space sweeps).
pub fn net_hydrostatic_force(
    mass: f64,
    height: f64,
    model: &VolumeModel,
    fluid: &FluidParams,
) -> Result<f64> {
    check_range("body height (cm)", height, 0.0, f64::MAX)?;
    let volume = model.total_at(height);
    Ok(buoyant_force(volume, fluid)? - weight_force(mass, fluid)?)
}

/// Outcome of a neutral-height search restricted to a height interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum NeutralOutcome {
    Neutral { height: f64 },
    /// Positively buoyant even at the lowest admissible height.
    AlwaysFloats,
    /// Negatively buoyant even at the tallest admissible height.
    AlwaysSinks,
}

/// Closed-form height at which buoyancy equals weight.
///
/// Returns 0 when the fixed volume alone balances the mass. Errors with
/// [`Error::Domain`] when the fixed volume alone already floats the robot.
pub fn neutral_height(mass: f64, model: &VolumeModel, fluid: &FluidParams) -> Result<f64> {
    check_range("mass (kg)", mass, 0.0, f64::MAX)?;
    let required_body = fluid.equivalent_volume(mass) - model.fixed_volume;
    if required_body < 0.0 {
        return Err(Error::domain(
            "mass-equivalent volume (cm^3)",
            fluid.equivalent_volume(mass),
            model.fixed_volume,
            f64::INFINITY,
        ));
    }
    if required_body == 0.0 {
        return Ok(0.0);
    }
    Ok(model.height_for_body(required_body))
}

/// Neutral height, classified against `[h_min, h_max]`.
pub fn neutral_outcome(
    mass: f64,
    model: &VolumeModel,
    fluid: &FluidParams,
    h_min: f64,
    h_max: f64,
) -> Result<NeutralOutcome> {
    check_range("mass (kg)", mass, 0.0, f64::MAX)?;
    if fluid.equivalent_volume(mass) < model.fixed_volume {
        return Ok(NeutralOutcome::AlwaysFloats);
    }
    let h = neutral_height(mass, model, fluid)?;
    Ok(if h < h_min {
        NeutralOutcome::AlwaysFloats
    } else if h > h_max {
        NeutralOutcome::AlwaysSinks
    } else {
        NeutralOutcome::Neutral { height: h }
    })
}

/// Numeric neutral solve for an arbitrary monotone height-to-volume law.
pub fn neutral_height_numeric<V>(
    mass: f64,
    total_volume: V,
    fluid: &FluidParams,
    h_min: f64,
    h_max: f64,
) -> Result<NeutralOutcome>
where
    V: Fn(f64) -> f64,
{
    let weight = weight_force(mass, fluid)?;
    let net = |h: f64| fluid.density * total_volume(h) * CM3_TO_M3 * fluid.gravity - weight;
    let (lo, hi) = (net(h_min), net(h_max));
    if lo > 0.0 {
        return Ok(NeutralOutcome::AlwaysFloats);
    }
    if hi < 0.0 {
        return Ok(NeutralOutcome::AlwaysSinks);
    }
    let root = bisect(net, h_min, h_max, 0.0, 200, |f| f.abs() < NEUTRAL_SOLVE_TOL_N)?;
    Ok(NeutralOutcome::Neutral { height: root.x })
}

/// How much of the fixed volume is wetted while floating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedSubmersion {
    /// Servos and pouch hang below the body and are always under water.
    #[default]
    Full,
    /// Fixed volume is wetted in proportion to draft / height.
    Proportional,
}

/// Submerged depth of the body floating at the surface, cm.
pub fn floating_draft(
    mass: f64,
    height: f64,
    model: &VolumeModel,
    fluid: &FluidParams,
    submersion: FixedSubmersion,
) -> Result<Draft> {
    check_range("body height (cm)", height, 0.0, f64::MAX)?;
    if net_hydrostatic_force(mass, height, model, fluid)? <= 0.0 {
        return Ok(Draft::CannotFloat);
    }
    let target = fluid.equivalent_volume(mass);
    match submersion {
        FixedSubmersion::Full => {
            let required_body = target - model.fixed_volume;
            if required_body <= 0.0 {
                return Ok(Draft::Floating { depth: 0.0 });
            }
            let d = model.height_for_body(required_body);
            Ok(Draft::Floating {
                depth: d.clamp(0.0, height),
            })
        }
        FixedSubmersion::Proportional => {
            let displaced =
                |d: f64| model.body_at(d).max(0.0) + model.fixed_volume * d / height - target;
            let root = bisect(displaced, 0.0, height, 1e-12, 200, |f| f.abs() < 1e-9)?;
            Ok(Draft::Floating { depth: root.x })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Draft {
    Floating { depth: f64 },
    CannotFloat,
}

impl Draft {
    pub fn depth(&self) -> Option<f64> {
        match self {
            Draft::Floating { depth } => Some(*depth),
            Draft::CannotFloat => None,
        }
    }
}

/// Closed interval with a sample count, e.g. `0.2:0.5:61`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(Error::Config(format!("degenerate axis [{start}, {end}]")));
        }
        if count < 2 {
            return Err(Error::Config(format!("axis needs at least 2 samples, got {count}")));
        }
        Ok(Self { start, end, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.end
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

/// Net force over a mass x height rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpaceGrid {
    /// kg
    pub mass_axis: Vec<f64>,
    /// cm
    pub height_axis: Vec<f64>,
    /// `net_force[row][col]` at `height_axis[row]`, `mass_axis[col]`, N.
    pub net_force: Vec<Vec<f64>>,
    /// (kg, cm) neutral points for the masses whose neutral height lies on the height axis.
    pub neutral_curve: Vec<(f64, f64)>,
}

pub const DEFAULT_GRID_RESOLUTION: usize = 61;

pub fn default_mass_axis() -> Axis {
    Axis::new(0.200, 0.500, DEFAULT_GRID_RESOLUTION).expect("static axis")
}

pub fn default_height_axis() -> Axis {
    Axis::new(4.0, 10.0, DEFAULT_GRID_RESOLUTION).expect("static axis")
}

pub fn design_space(
    mass: Axis,
    height: Axis,
    model: &VolumeModel,
    fluid: &FluidParams,
) -> Result<DesignSpaceGrid> {
    let mass_axis = mass.values();
    let height_axis = height.values();
    if mass_axis[0] < 0.0 || height_axis[0] < 0.0 {
        return Err(Error::Config("design-space axes must be non-negative".into()));
    }

    let columns: Vec<Vec<f64>> = mass_axis
        .par_iter()
        .map(|&m| {
            height_axis
                .iter()
                .map(|&h| net_hydrostatic_force(m, h, model, fluid))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let net_force = (0..height_axis.len())
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();

    let (h_lo, h_hi) = (height.start, height.end);
    let neutral_curve = mass_axis
        .iter()
        .filter_map(|&m| match neutral_height(m, model, fluid) {
            Ok(h) if h >= h_lo && h <= h_hi => Some((m, h)),
            _ => None,
        })
        .collect();

    Ok(DesignSpaceGrid {
        mass_axis,
        height_axis,
        net_force,
        neutral_curve,
    })
}

/// A labelled configuration overlaid on the design space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub label: &'static str,
    pub mass: f64,
    pub height: f64,
    pub total_volume: f64,
    pub net_force: f64,
    pub state: BuoyancyState,
}

/// The robot's compressed and expanded configurations.
pub fn robot_markers(
    mass: f64,
    h_min: f64,
    h_max: f64,
    model: &VolumeModel,
    fluid: &FluidParams,
) -> Result<[Marker; 2]> {
    let mk = |label, h: f64| -> Result<Marker> {
        let net = net_hydrostatic_force(mass, h, model, fluid)?;
        Ok(Marker {
            label,
            mass,
            height: h,
            total_volume: model.total_at(h),
            net_force: net,
            state: BuoyancyState::classify(net),
        })
    };
    Ok([mk("compressed", h_min)?, mk("expanded", h_max)?])
}

impl DesignSpaceGrid {
    /// Grid as CSV: `mass_g,height_cm,net_force_n`, one row per cell.
    pub fn grid_csv(&self) -> String {
        let mut out = String::from("mass_g,height_cm,net_force_n\n");
        for (r, &h) in self.height_axis.iter().enumerate() {
            for (c, &m) in self.mass_axis.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", f9(m * 1000.0), f9(h), f9(self.net_force[r][c])));
            }
        }
        out
    }

    /// Neutral curve as CSV: `mass_g,height_cm`.
    pub fn neutral_csv(&self) -> String {
        let mut out = String::from("mass_g,height_cm\n");
        for &(m, h) in &self.neutral_curve {
            out.push_str(&format!("{},{}\n", f9(m * 1000.0), f9(h)));
        }
        out
    }

    /// Net force at the grid cell nearest to (mass, height).
    pub fn nearest(&self, mass: f64, height: f64) -> f64 {
        let idx = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        self.net_force[idx(&self.height_axis, height)][idx(&self.mass_axis, mass)]
    }
}
