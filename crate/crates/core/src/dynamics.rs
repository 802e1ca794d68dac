//! One-dimensional vertical motion in the water column.
//!
//! Depth is measured in cm with the water surface at 0 and the floor at a
//! negative `floor_depth`; velocity is in cm/s, positive upward. The robot
//! is a point in depth: floating at the surface is depth 0 with the draft
//! reported separately.
//!
//! Each step first moves the actuator, then updates velocity with the drag
//! term treated implicitly in |v| (which keeps the velocity below the
//! terminal value on the way up to it), then depth with the new velocity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::f9;
use crate::hydrostatics::{
    buoyant_force, floating_draft, weight_force, FixedSubmersion, FluidParams,
    ForceBreakdown,
};
use crate::morphology::{actuator_travel, MorphState, Morphology, Travel, VolumeModel};

// ---- calibrated drag (generated by `morphbot calibrate drag`) ----
// descend: target 7 s over 30 cm, bracket [1, 1000], dt 1/240 s,
//          20 iterations, achieved 7.000003515 s
// ascend:  target 2 s over 30 cm, bracket [0.01, 1000], dt 1/240 s,
//          20 iterations, achieved 2.000011090 s
pub const CALIBRATED_CD_DESCEND: f64 = 197.186_616_420_745_85;
pub const CALIBRATED_CD_ASCEND: f64 = 19.468_099_331_855_775;
// ---- end calibrated drag ----

pub const DEFAULT_DT: f64 = 1.0 / 240.0;
pub const DEFAULT_FLOOR_DEPTH: f64 = -30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DragModel {
    /// Coefficient at morph fraction 0 (crawl configuration).
    pub cd_descend: f64,
    /// Coefficient at morph fraction 1 (swim configuration).
    pub cd_ascend: f64,
    /// m^2
    pub reference_area: f64,
    pub added_mass_coeff: f64,
}

impl Default for DragModel {
    fn default() -> Self {
        Self {
            cd_descend: CALIBRATED_CD_DESCEND,
            cd_ascend: CALIBRATED_CD_ASCEND,
            reference_area: 40.5e-4,
            added_mass_coeff: 0.0,
        }
    }
}

impl DragModel {
    pub fn validate(&self) -> Result<()> {
        if self.cd_descend > 0.0
            && self.cd_ascend > 0.0
            && self.reference_area > 0.0
            && self.added_mass_coeff >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid drag model {self:?}")))
        }
    }

    pub fn coefficient(&self, morph_fraction: f64) -> f64 {
        let f = morph_fraction.clamp(0.0, 1.0);
        self.cd_descend + (self.cd_ascend - self.cd_descend) * f
    }

    /// Quadratic drag constant `0.5 rho Cd A`, N s^2/m^2.
    fn quadratic_constant(&self, morph_fraction: f64, fluid: &FluidParams) -> f64 {
        0.5 * fluid.density * self.coefficient(morph_fraction) * self.reference_area
    }
}

/// Drag opposing `velocity` (cm/s), N.
pub fn drag_force(velocity: f64, morph_fraction: f64, model: &DragModel, fluid: &FluidParams) -> f64 {
    let v = velocity * 0.01;
    -model.quadratic_constant(morph_fraction, fluid) * v * v.abs()
}

/// Terminal speed for a hydrostatic force magnitude, cm/s.
pub fn terminal_speed(net: f64, morph_fraction: f64, model: &DragModel, fluid: &FluidParams) -> f64 {
    (net.abs() / model.quadratic_constant(morph_fraction, fluid)).sqrt() * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contact {
    FreeColumn,
    OnFloor,
    AtSurface,
}

impl Contact {
    pub fn as_str(&self) -> &'static str {
        match self {
            Contact::FreeColumn => "free_column",
            Contact::OnFloor => "on_floor",
            Contact::AtSurface => "at_surface",
        }
    }
}

/// What the actuator is being asked to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphDrive {
    #[default]
    Hold,
    Expand,
    Compress,
}

impl MorphDrive {
    pub fn travel(self) -> Option<Travel> {
        match self {
            MorphDrive::Hold => None,
            MorphDrive::Expand => Some(Travel::Retract),
            MorphDrive::Compress => Some(Travel::Extend),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerticalParams {
    /// kg
    pub mass: f64,
    pub fluid: FluidParams,
    pub volume: VolumeModel,
    pub drag: DragModel,
    pub morphology: Morphology,
    /// cm, negative
    pub floor_depth: f64,
    pub submersion: FixedSubmersion,
}

impl Default for VerticalParams {
    fn default() -> Self {
        Self {
            mass: 0.330,
            fluid: FluidParams::default(),
            volume: VolumeModel::default(),
            drag: DragModel::default(),
            morphology: Morphology::default(),
            floor_depth: DEFAULT_FLOOR_DEPTH,
            submersion: FixedSubmersion::Full,
        }
    }
}

impl VerticalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::Config(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.floor_depth < 0.0) {
            return Err(Error::Config(format!(
                "floor depth must be negative, got {}",
                self.floor_depth
            )));
        }
        self.fluid.validate()?;
        self.drag.validate()?;
        self.morphology.validate()
    }

    /// Fully submerged buoyancy minus weight for a body height, N.
    pub fn hydrostatic_net(&self, height: f64) -> Result<f64> {
        Ok(buoyant_force(self.volume.total_at(height).max(0.0), &self.fluid)?
            - weight_force(self.mass, &self.fluid)?)
    }

    fn effective_mass(&self) -> f64 {
        self.mass * (1.0 + self.drag.added_mass_coeff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalState {
    pub step: u64,
    /// s
    pub time: f64,
    /// cm, in `[floor_depth, 0]`
    pub depth: f64,
    /// cm/s, positive upward
    pub velocity: f64,
    pub morph: MorphState,
    pub drive: MorphDrive,
    pub contact: Contact,
    /// Interpolated instant the current contact began, s.
    pub contact_since: f64,
    pub forces: ForceBreakdown,
    /// Submerged depth while floating, cm.
    pub draft: Option<f64>,
    /// Whether the slider moved during the last step.
    pub morphing: bool,
}

impl VerticalState {
    fn resting(params: &VerticalParams, morph: MorphState, depth: f64, contact: Contact) -> Result<Self> {
        let mut s = Self {
            step: 0,
            time: 0.0,
            depth,
            velocity: 0.0,
            morph,
            drive: MorphDrive::Hold,
            contact,
            contact_since: 0.0,
            forces: ForceBreakdown::default(),
            draft: None,
            morphing: false,
        };
        s.settle(params)?;
        Ok(s)
    }

    /// At rest on the floor.
    pub fn on_floor(params: &VerticalParams, morph: MorphState) -> Result<Self> {
        Self::resting(params, morph, params.floor_depth, Contact::OnFloor)
    }

    /// Floating at the surface, or just submerged at depth 0 when the body
    /// cannot float in this configuration.
    pub fn at_surface(params: &VerticalParams, morph: MorphState) -> Result<Self> {
        Self::resting(params, morph, 0.0, Contact::AtSurface)
    }

    /// At rest at `depth` in the water column.
    pub fn in_column(params: &VerticalParams, morph: MorphState, depth: f64) -> Result<Self> {
        Self::resting(params, morph, depth, Contact::FreeColumn)
    }

    /// Buoyancy minus weight for the current configuration, N.
    pub fn hydrostatic_net(&self) -> f64 {
        self.forces.hydrostatic()
    }

    /// Reconciles contact and forces for a body at rest at the current depth.
    fn settle(&mut self, params: &VerticalParams) -> Result<()> {
        let weight = weight_force(params.mass, &params.fluid)?;
        let net = params.hydrostatic_net(self.morph.height)?;
        let full = net + weight;
        match self.contact {
            Contact::OnFloor if net <= 0.0 => {
                self.forces = ForceBreakdown::new(weight, full, 0.0, -net);
                self.draft = None;
            }
            Contact::AtSurface if net > 0.0 => {
                self.set_floating(params, weight)?;
            }
            _ => {
                self.contact = Contact::FreeColumn;
                self.forces = ForceBreakdown::new(weight, full, 0.0, 0.0);
                self.draft = None;
            }
        }
        Ok(())
    }

    fn set_floating(&mut self, params: &VerticalParams, weight: f64) -> Result<()> {
        let draft = floating_draft(
            params.mass,
            self.morph.height,
            &params.volume,
            &params.fluid,
            params.submersion,
        )?;
        self.draft = draft.depth();
        // partially submerged: displaced weight balances gravity
        self.forces = ForceBreakdown::new(weight, weight, 0.0, 0.0);
        Ok(())
    }
}

/// Advances `state` by `dt` seconds.
pub fn step(state: &VerticalState, params: &VerticalParams, dt: f64) -> Result<VerticalState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Integration {
            time: state.time,
            reason: format!("time step must be positive, got {dt}"),
        });
    }
    let mut next = *state;
    next.step = state.step + 1;
    next.time = next.step as f64 * dt;

    // actuator
    next.morphing = false;
    if let Some(dir) = state.drive.travel() {
        let x = actuator_travel(dt, dir, &params.morphology.geometry, state.morph.slider_x);
        if x != state.morph.slider_x {
            next.morph = params.morphology.state_at_slider(x)?;
            next.morphing = true;
        }
    }

    let weight = weight_force(params.mass, &params.fluid)?;
    let net = params.hydrostatic_net(next.morph.height)?;
    let full_buoyancy = net + weight;
    let holds = match state.contact {
        Contact::OnFloor => net <= 0.0,
        Contact::AtSurface => net > 0.0,
        Contact::FreeColumn => false,
    };

    if holds {
        next.velocity = 0.0;
        if state.contact == Contact::AtSurface {
            next.depth = 0.0;
            next.set_floating(params, weight)?;
        } else {
            next.depth = params.floor_depth;
            next.forces = ForceBreakdown::new(weight, full_buoyancy, 0.0, -net);
            next.draft = None;
        }
        return check_finite(next);
    }

    if state.contact != Contact::FreeColumn {
        next.contact = Contact::FreeColumn;
        next.contact_since = state.time;
    }
    next.draft = None;

    let m = params.effective_mass();
    let k = params.drag.quadratic_constant(next.morph.morph_fraction, &params.fluid);
    let v0 = state.velocity * 0.01;
    let v1 = (v0 + dt * net / m) / (1.0 + dt * k * v0.abs() / m);
    let v1_cm = v1 * 100.0;
    let unclamped = state.depth + v1_cm * dt;

    let crossing = |boundary: f64| {
        let span = unclamped - state.depth;
        let frac = if span.abs() > 0.0 {
            ((boundary - state.depth) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        state.time + frac * dt
    };

    if unclamped <= params.floor_depth {
        next.depth = params.floor_depth;
        next.velocity = 0.0;
        if net <= 0.0 {
            next.contact = Contact::OnFloor;
            next.contact_since = crossing(params.floor_depth);
            next.forces = ForceBreakdown::new(weight, full_buoyancy, 0.0, -net);
        } else {
            next.forces = ForceBreakdown::new(weight, full_buoyancy, 0.0, 0.0);
        }
    } else if unclamped >= 0.0 && v1_cm > 0.0 {
        next.depth = 0.0;
        next.velocity = 0.0;
        if net > 0.0 {
            next.contact = Contact::AtSurface;
            next.contact_since = crossing(0.0);
            next.set_floating(params, weight)?;
        } else {
            next.forces = ForceBreakdown::new(weight, full_buoyancy, 0.0, 0.0);
        }
    } else {
        next.depth = unclamped.min(0.0);
        next.velocity = v1_cm;
        let drag = drag_force(v1_cm, next.morph.morph_fraction, &params.drag, &params.fluid);
        next.forces = ForceBreakdown::new(weight, full_buoyancy, drag, 0.0);
    }
    check_finite(next)
}

fn check_finite(s: VerticalState) -> Result<VerticalState> {
    let fields = [s.depth, s.velocity, s.morph.height, s.forces.net, s.time];
    if fields.iter().all(|v| v.is_finite()) {
        Ok(s)
    } else {
        Err(Error::Integration {
            time: s.time,
            reason: format!("non-finite state: depth {}, velocity {}", s.depth, s.velocity),
        })
    }
}

/// A morph command taking effect at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedMorph {
    pub time: f64,
    pub drive: MorphDrive,
}

/// First step index at or after `time`.
pub fn step_index(time: f64, dt: f64) -> u64 {
    (time / dt - 1e-9).ceil().max(0.0) as u64
}

/// Fixed-step trajectory including the initial state.
pub fn simulate_depth(
    initial: VerticalState,
    commands: &[TimedMorph],
    params: &VerticalParams,
    duration: f64,
    dt: f64,
) -> Result<Vec<VerticalState>> {
    params.validate()?;
    if commands.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::Config("morph commands must be sorted by time".into()));
    }
    let steps = (duration / dt).round() as u64;
    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut state = initial;
    let mut pending = commands.iter().peekable();
    out.push(state);
    for _ in 0..steps {
        while let Some(c) = pending.peek() {
            if step_index(c.time, dt) <= state.step {
                state.drive = c.drive;
                pending.next();
            } else {
                break;
            }
        }
        state = step(&state, params, dt)?;
        out.push(state);
    }
    Ok(out)
}

/// Depth trace as CSV: `t_s,depth_cm,velocity_cm_s,height_cm,net_force_n,contact`.
///
/// `net_force_n` is buoyancy of the fully submerged body minus weight.
pub fn depth_csv(series: &[VerticalState]) -> String {
    let mut out = String::from("t_s,depth_cm,velocity_cm_s,height_cm,net_force_n,contact\n");
    for s in series {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            f9(s.time),
            f9(s.depth),
            f9(s.velocity),
            f9(s.morph.height),
            f9(s.hydrostatic_net()),
            s.contact.as_str()
        ));
    }
    out
}

/// Timing of one floor-to-surface or surface-to-floor transit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitReport {
    /// When the operator issued the morph command, s.
    pub command_time: f64,
    /// When the actuator started moving, s.
    pub effect_time: f64,
    /// When the body left its starting contact, s.
    pub departure_time: Option<f64>,
    /// When the body reached the opposite boundary, s.
    pub arrival_time: Option<f64>,
}

impl TransitReport {
    /// Departure to arrival, s.
    pub fn transit(&self) -> Option<f64> {
        Some(self.arrival_time? - self.departure_time?)
    }

    /// Command to arrival, s.
    pub fn total(&self) -> Option<f64> {
        Some(self.arrival_time? - self.command_time)
    }
}

fn transit_report(
    series: &[VerticalState],
    start: Contact,
    goal: Contact,
    command_time: f64,
    effect_time: f64,
) -> TransitReport {
    let departure_time = series
        .windows(2)
        .find(|w| w[0].contact == start && w[1].contact != start)
        .map(|w| w[1].contact_since);
    let arrival_time = series
        .iter()
        .find(|s| s.contact == goal && s.time > effect_time)
        .map(|s| s.contact_since);
    TransitReport {
        command_time,
        effect_time,
        departure_time,
        arrival_time,
    }
}

/// Starts expanded at the surface and compresses at `latency` seconds after t = 0.
pub fn sink_from_surface(
    params: &VerticalParams,
    latency: f64,
    duration: f64,
    dt: f64,
) -> Result<(Vec<VerticalState>, TransitReport)> {
    let start = VerticalState::at_surface(params, params.morphology.expanded())?;
    let cmds = [TimedMorph {
        time: latency,
        drive: MorphDrive::Compress,
    }];
    let series = simulate_depth(start, &cmds, params, duration, dt)?;
    let report = transit_report(&series, Contact::AtSurface, Contact::OnFloor, 0.0, latency);
    Ok((series, report))
}

/// Starts compressed on the floor and expands at `latency` seconds after t = 0.
pub fn resurface_from_floor(
    params: &VerticalParams,
    latency: f64,
    duration: f64,
    dt: f64,
) -> Result<(Vec<VerticalState>, TransitReport)> {
    let start = VerticalState::on_floor(params, params.morphology.compressed())?;
    let cmds = [TimedMorph {
        time: latency,
        drive: MorphDrive::Expand,
    }];
    let series = simulate_depth(start, &cmds, params, duration, dt)?;
    let report = transit_report(&series, Contact::OnFloor, Contact::AtSurface, 0.0, latency);
    Ok((series, report))
}
