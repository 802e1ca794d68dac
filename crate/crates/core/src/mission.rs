//! Scripted multi-environment runs.
//!
//! A [`World`] couples the horizontal gait model with the vertical water
//! column. It starts on a dry shelf, crawls down a ramp, drops into the tank
//! at the ramp's lower edge, and from then on follows the vertical dynamics.
//! Batch runs ([`run_mission`]) and live sessions drive the same stepper, so
//! a recorded command transcript replays exactly.
//!
//! Horizontal position `x` is measured from the back of the shelf. The
//! `depth` coordinate is the vertical dynamics depth in water and the
//! elevation above the waterline on dry ground.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::{step, step_index, Contact, MorphDrive, VerticalParams, VerticalState, DEFAULT_DT};
use crate::energy::{BatterySpec, EnergyBreakdown, LoadState, PowerModel};
use crate::error::{check_range, Error, Result};
use crate::fmt::f9;
use crate::hydrostatics::{weight_force, ForceBreakdown};
use crate::locomotion::{terrain_speed, GaitConfig, GaitMode, Heading, Terrain};
use crate::morphology::{actuator_travel, MorphState};
use crate::telemetry::TimeSeries;

/// Test-tank layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvGeometry {
    /// deg
    pub ramp_angle: f64,
    /// Along the slope, cm.
    pub ramp_length: f64,
    /// Flat shelf before the ramp, cm.
    pub land_length: f64,
    /// cm
    pub water_depth: f64,
    /// cm
    pub tank_length: f64,
}

impl Default for EnvGeometry {
    fn default() -> Self {
        Self {
            ramp_angle: 20.0,
            ramp_length: 5.25,
            land_length: 1.75,
            water_depth: 30.0,
            tank_length: 90.0,
        }
    }
}

impl EnvGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ramp_angle > 0.0
            && self.ramp_angle < 90.0
            && self.ramp_length > 0.0
            && self.land_length >= 0.0
            && self.water_depth > 0.0
            && self.tank_length > 0.0;
        if ok && [self.ramp_length, self.land_length, self.water_depth, self.tank_length]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid environment geometry {self:?}")))
        }
    }

    /// Horizontal position of the ramp's lower edge, where the robot drops in.
    pub fn water_entry_x(&self) -> f64 {
        self.land_length + self.ramp_length * self.ramp_angle.to_radians().cos()
    }

    pub fn shelf_elevation(&self) -> f64 {
        self.ramp_length * self.ramp_angle.to_radians().sin()
    }

    /// Elevation above the waterline at a dry position, cm.
    pub fn elevation(&self, x: f64) -> f64 {
        if x <= self.land_length {
            self.shelf_elevation()
        } else {
            (self.shelf_elevation() - (x - self.land_length) * self.ramp_angle.to_radians().tan()).max(0.0)
        }
    }

    fn dry_terrain(&self, x: f64) -> Terrain {
        if x < self.land_length {
            Terrain::Land
        } else {
            Terrain::Ramp {
                angle_deg: self.ramp_angle,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionCommand {
    #[serde(rename = "crawl_fwd", alias = "crawl_forward")]
    CrawlForward,
    #[serde(rename = "crawl_back", alias = "crawl_backward")]
    CrawlBackward,
    #[serde(rename = "swim_fwd", alias = "swim_forward")]
    SwimForward,
    #[serde(rename = "swim_back", alias = "swim_backward")]
    SwimBackward,
    Expand,
    Compress,
    StopMorph,
    Halt,
}

impl MissionCommand {
    pub const ALL: [MissionCommand; 8] = [
        MissionCommand::CrawlForward,
        MissionCommand::CrawlBackward,
        MissionCommand::SwimForward,
        MissionCommand::SwimBackward,
        MissionCommand::Expand,
        MissionCommand::Compress,
        MissionCommand::StopMorph,
        MissionCommand::Halt,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MissionCommand::CrawlForward => "crawl_fwd",
            MissionCommand::CrawlBackward => "crawl_back",
            MissionCommand::SwimForward => "swim_fwd",
            MissionCommand::SwimBackward => "swim_back",
            MissionCommand::Expand => "expand",
            MissionCommand::Compress => "compress",
            MissionCommand::StopMorph => "stop_morph",
            MissionCommand::Halt => "halt",
        }
    }

    /// The actuator request for morph commands.
    pub fn morph_drive(&self) -> Option<MorphDrive> {
        match self {
            MissionCommand::Expand => Some(MorphDrive::Expand),
            MissionCommand::Compress => Some(MorphDrive::Compress),
            MissionCommand::StopMorph => Some(MorphDrive::Hold),
            _ => None,
        }
    }

    fn gait(&self) -> Option<(GaitMode, Heading)> {
        match self {
            MissionCommand::CrawlForward => Some((GaitMode::Crawl, Heading::Forward)),
            MissionCommand::CrawlBackward => Some((GaitMode::Crawl, Heading::Backward)),
            MissionCommand::SwimForward => Some((GaitMode::Swim, Heading::Forward)),
            MissionCommand::SwimBackward => Some((GaitMode::Swim, Heading::Backward)),
            MissionCommand::Halt => Some((GaitMode::Halt, Heading::Forward)),
            _ => None,
        }
    }
}

impl std::str::FromStr for MissionCommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Environment {
    OnLand,
    OnRamp,
    Sinking,
    OnFloor,
    Ascending,
    AtSurface,
}

impl Environment {
    pub const ALL: [Environment; 6] = [
        Environment::OnLand,
        Environment::OnRamp,
        Environment::Sinking,
        Environment::OnFloor,
        Environment::Ascending,
        Environment::AtSurface,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Environment::OnLand => "OnLand",
            Environment::OnRamp => "OnRamp",
            Environment::Sinking => "Sinking",
            Environment::OnFloor => "OnFloor",
            Environment::Ascending => "Ascending",
            Environment::AtSurface => "AtSurface",
        }
    }

    pub fn is_wet(&self) -> bool {
        !matches!(self, Environment::OnLand | Environment::OnRamp)
    }
}

/// Where the robot is: on dry ground (by `x`) or in the water column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    Dry { x: f64 },
    Wet { contact: Contact },
}

/// Environment for a placement. `net` is fully submerged buoyancy minus
/// weight, N; it separates sinking from ascending in the free column.
pub fn classify_environment(placement: Placement, net: f64, geometry: &EnvGeometry) -> Environment {
    match placement {
        Placement::Dry { x } if x < geometry.land_length => Environment::OnLand,
        Placement::Dry { .. } => Environment::OnRamp,
        Placement::Wet { contact: Contact::OnFloor } => Environment::OnFloor,
        Placement::Wet { contact: Contact::AtSurface } => Environment::AtSurface,
        Placement::Wet { contact: Contact::FreeColumn } if net > 0.0 => Environment::Ascending,
        Placement::Wet { .. } => Environment::Sinking,
    }
}

/// Edges of the environment graph.
pub fn is_legal_transition(from: Environment, to: Environment) -> bool {
    use Environment::*;
    matches!(
        (from, to),
        (OnLand, OnRamp)
            | (OnRamp, OnLand)
            | (OnRamp, Sinking)
            | (OnRamp, AtSurface)
            | (Sinking, OnFloor)
            | (Sinking, Ascending)
            | (Sinking, AtSurface)
            | (OnFloor, Ascending)
            | (Ascending, OnFloor)
            | (Ascending, Sinking)
            | (Ascending, AtSurface)
            | (AtSurface, Sinking)
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPlace {
    #[default]
    OnLand,
    OnFloor,
    AtSurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionStart {
    pub place: StartPlace,
    /// Start fully expanded instead of fully compressed.
    pub expanded: bool,
    /// Horizontal position; defaults to the back of the shelf on land and
    /// the water entry point in the tank.
    pub x_cm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    pub t: f64,
    pub cmd: MissionCommand,
}

pub const DEFAULT_LATENCY_S: f64 = 10.0;

fn default_latency() -> f64 {
    DEFAULT_LATENCY_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionScript {
    pub events: Vec<ScriptEvent>,
    /// Overrides the configured tank layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<EnvGeometry>,
    /// Delay between an operator's morph command and actuator motion, s.
    #[serde(default = "default_latency")]
    pub latency_s: f64,
    #[serde(default)]
    pub start: MissionStart,
    /// Run length; defaults to the last event time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl Default for MissionScript {
    fn default() -> Self {
        Self {
            events: Vec::new(),
            geometry: None,
            latency_s: DEFAULT_LATENCY_S,
            start: MissionStart::default(),
            duration_s: None,
        }
    }
}

impl MissionScript {
    pub fn validate(&self) -> Result<()> {
        check_range("command latency (s)", self.latency_s, 0.0, f64::MAX)?;
        for (i, e) in self.events.iter().enumerate() {
            check_range("event time (s)", e.t, 0.0, f64::MAX)?;
            if i > 0 && e.t < self.events[i - 1].t {
                return Err(Error::Config(format!(
                    "event {i} at {} s precedes the previous event at {} s",
                    e.t,
                    self.events[i - 1].t
                )));
            }
        }
        if let Some(d) = self.duration_s {
            check_range("mission duration (s)", d, 0.0, f64::MAX)?;
        }
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.duration_s
            .unwrap_or_else(|| self.events.last().map_or(0.0, |e| e.t))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mission scripts always serialize")
    }
}

/// The ramp-to-surface demonstration: crawl down the ramp into the tank,
/// crawl along the floor, expand to surface, swim back, stop.
pub fn transition_demo_script() -> MissionScript {
    use MissionCommand::*;
    let events = [
        (0.0, CrawlForward),
        (35.0, Expand),
        (45.0, Halt),
        (90.0, StopMorph),
        (90.0, SwimBackward),
        (105.0, Halt),
    ];
    MissionScript {
        events: events.iter().map(|&(t, cmd)| ScriptEvent { t, cmd }).collect(),
        ..MissionScript::default()
    }
}

/// Everything a mission run needs besides the script.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionParams {
    pub vertical: VerticalParams,
    pub gait: GaitConfig,
    pub power: PowerModel,
    pub battery: BatterySpec,
    pub environment: EnvGeometry,
}

impl MissionParams {
    pub fn validate(&self) -> Result<()> {
        self.vertical.validate()?;
        self.gait.validate()?;
        self.power.validate()?;
        self.battery.validate()?;
        self.environment.validate()
    }
}

/// State of the world at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSnapshot {
    pub time: f64,
    pub horizontal: f64,
    pub depth: f64,
    /// Submerged depth while floating, cm.
    pub draft: Option<f64>,
    pub morph: MorphState,
    pub environment: Environment,
    pub forces: ForceBreakdown,
    /// Fully submerged buoyancy minus weight, N.
    pub net_force: f64,
    pub gait: GaitMode,
    pub heading: Heading,
    /// Loads in effect until the next change.
    pub load: LoadState,
    pub energy_used: f64,
    /// Baseline, crawl, swim, actuator, J.
    pub energy_loads: [f64; 4],
    pub battery_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CommandOutcome {
    Applied,
    Scheduled { effect_time: f64 },
    /// Incompatible with the environment; logged as a warning.
    Ignored { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryKind {
    Start,
    Command { cmd: MissionCommand, result: CommandOutcome },
    /// A delayed morph command reached the actuator.
    MorphEffect { cmd: MissionCommand },
    MorphComplete,
    Transition { from: Environment, to: Environment },
    LoadChange,
    End,
}

impl EntryKind {
    pub fn label(&self) -> String {
        match self {
            EntryKind::Start => "start".into(),
            EntryKind::Command { cmd, result } => match result {
                CommandOutcome::Applied => format!("command {}", cmd.as_str()),
                CommandOutcome::Scheduled { effect_time } => {
                    format!("command {} (effect at {} s)", cmd.as_str(), f9(*effect_time))
                }
                CommandOutcome::Ignored { reason } => format!("warning: {} ignored, {reason}", cmd.as_str()),
            },
            EntryKind::MorphEffect { cmd } => format!("actuator {}", cmd.as_str()),
            EntryKind::MorphComplete => "actuator end of stroke".into(),
            EntryKind::Transition { from, to } => format!("{} -> {}", from.as_str(), to.as_str()),
            EntryKind::LoadChange => "load change".into(),
            EntryKind::End => "end".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time: f64,
    pub kind: EntryKind,
    pub snapshot: SimSnapshot,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn transitions(&self) -> Vec<(f64, Environment, Environment)> {
        self.entries
            .iter()
            .filter_map(|e| match e.kind {
                EntryKind::Transition { from, to } => Some((e.time, from, to)),
                _ => None,
            })
            .collect()
    }

    /// Visited environments in order, starting with the initial one.
    pub fn environment_sequence(&self) -> Vec<Environment> {
        let mut out: Vec<Environment> = self.entries.first().map(|e| e.snapshot.environment).into_iter().collect();
        out.extend(self.transitions().into_iter().map(|t| t.2));
        out
    }

    pub fn first_arrival(&self, env: Environment) -> Option<f64> {
        self.transitions().into_iter().find(|t| t.2 == env).map(|t| t.0)
    }

    pub fn warnings(&self) -> Vec<&LogEntry> {
        self.entries
            .iter()
            .filter(|e| {
                matches!(
                    e.kind,
                    EntryKind::Command {
                        result: CommandOutcome::Ignored { .. },
                        ..
                    }
                )
            })
            .collect()
    }

    pub fn commands(&self, cmd: MissionCommand) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| matches!(&e.kind, EntryKind::Command { cmd: c, .. } if *c == cmd))
            .map(|e| e.time)
            .collect()
    }

    /// `t_s,event,env,x_cm,depth_cm,height_cm,energy_j`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,event,env,x_cm,depth_cm,height_cm,energy_j\n");
        for e in &self.entries {
            let s = &e.snapshot;
            out.push_str(&format!(
                "{},\"{}\",{},{},{},{},{}\n",
                f9(e.time),
                e.kind.label().replace('"', "'"),
                s.environment.as_str(),
                f9(s.horizontal),
                f9(s.depth),
                f9(s.morph.height),
                f9(s.energy_used)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Dry { morph: MorphState, drive: MorphDrive },
    Wet(VerticalState),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingMorph {
    effect_step: u64,
    cmd: MissionCommand,
}

/// Fixed-step coupled simulator shared by batch and live runs.
#[derive(Debug, Clone)]
pub struct World {
    params: MissionParams,
    geometry: EnvGeometry,
    latency: f64,
    dt: f64,
    step: u64,
    x: f64,
    phase: Phase,
    gait: GaitMode,
    heading: Heading,
    pending: VecDeque<PendingMorph>,
    environment: Environment,
    energy: EnergyBreakdown,
    logged_load: Option<LoadState>,
}

impl World {
    pub fn new(params: &MissionParams, script: &MissionScript) -> Result<Self> {
        Self::with_dt(params, script, DEFAULT_DT)
    }

    pub fn with_dt(params: &MissionParams, script: &MissionScript, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("time step (s)", dt, f64::MIN_POSITIVE, f64::MAX));
        }
        script.validate()?;
        let geometry = script.geometry.unwrap_or(params.environment);
        let mut params = *params;
        params.environment = geometry;
        params.vertical.floor_depth = -geometry.water_depth;
        params.validate()?;

        let v = &params.vertical;
        let morph = if script.start.expanded {
            v.morphology.expanded()
        } else {
            v.morphology.compressed()
        };
        let entry = geometry.water_entry_x();
        let (x, phase) = match script.start.place {
            StartPlace::OnLand => {
                let x = script.start.x_cm.unwrap_or(0.0);
                if !(0.0..entry).contains(&x) {
                    return Err(Error::domain("start position (cm)", x, 0.0, entry));
                }
                (
                    x,
                    Phase::Dry {
                        morph,
                        drive: MorphDrive::Hold,
                    },
                )
            }
            place => {
                let x = script.start.x_cm.unwrap_or(entry);
                check_range("start position (cm)", x, entry, entry + geometry.tank_length)?;
                let s = if place == StartPlace::OnFloor {
                    VerticalState::on_floor(v, morph)?
                } else {
                    VerticalState::at_surface(v, morph)?
                };
                (x, Phase::Wet(s))
            }
        };
        let mut w = Self {
            params,
            geometry,
            latency: script.latency_s,
            dt,
            step: 0,
            x,
            phase,
            gait: GaitMode::Halt,
            heading: Heading::Forward,
            pending: VecDeque::new(),
            environment: Environment::OnLand,
            energy: EnergyBreakdown::default(),
            logged_load: None,
        };
        w.environment = w.classify();
        Ok(w)
    }

    pub fn params(&self) -> &MissionParams {
        &self.params
    }

    pub fn geometry(&self) -> &EnvGeometry {
        &self.geometry
    }

    pub fn latency(&self) -> f64 {
        self.latency
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn environment(&self) -> Environment {
        self.environment
    }

    pub fn energy(&self) -> &EnergyBreakdown {
        &self.energy
    }

    fn morph(&self) -> MorphState {
        match &self.phase {
            Phase::Dry { morph, .. } => *morph,
            Phase::Wet(s) => s.morph,
        }
    }

    fn drive(&self) -> MorphDrive {
        match &self.phase {
            Phase::Dry { drive, .. } => *drive,
            Phase::Wet(s) => s.drive,
        }
    }

    fn set_drive(&mut self, d: MorphDrive) {
        match &mut self.phase {
            Phase::Dry { drive, .. } => *drive = d,
            Phase::Wet(s) => s.drive = d,
        }
    }

    fn net_force(&self) -> f64 {
        self.params
            .vertical
            .hydrostatic_net(self.morph().height)
            .unwrap_or(f64::NAN)
    }

    fn classify(&self) -> Environment {
        let placement = match &self.phase {
            Phase::Dry { .. } => Placement::Dry { x: self.x },
            Phase::Wet(s) => Placement::Wet { contact: s.contact },
        };
        classify_environment(placement, self.net_force(), &self.geometry)
    }

    fn actuator_will_move(&self) -> bool {
        let x = self.morph().slider_x;
        self.drive()
            .travel()
            .is_some_and(|dir| actuator_travel(self.dt, dir, &self.params.vertical.morphology.geometry, x) != x)
    }

    fn load(&self) -> LoadState {
        LoadState {
            environment: self.environment,
            gait: self.gait,
            actuator_on: self.actuator_will_move(),
        }
    }

    pub fn snapshot(&self) -> SimSnapshot {
        let morph = self.morph();
        let (depth, draft, forces) = match &self.phase {
            Phase::Dry { .. } => {
                let w = weight_force(self.params.vertical.mass, &self.params.vertical.fluid).unwrap_or(f64::NAN);
                (self.geometry.elevation(self.x), None, ForceBreakdown::new(w, 0.0, 0.0, w))
            }
            Phase::Wet(s) => (s.depth, s.draft, s.forces),
        };
        let e = &self.energy;
        SimSnapshot {
            time: self.time(),
            horizontal: self.x,
            depth,
            draft,
            morph,
            environment: self.environment,
            forces,
            net_force: self.net_force(),
            gait: self.gait,
            heading: self.heading,
            load: self.load(),
            energy_used: e.total,
            energy_loads: [e.baseline, e.crawl, e.swim, e.actuator],
            battery_pct: 100.0 * (1.0 - e.total / self.params.battery.energy_capacity()).max(0.0),
        }
    }

    fn entry(&mut self, kind: EntryKind) -> LogEntry {
        let snapshot = self.snapshot();
        self.logged_load = Some(snapshot.load);
        LogEntry {
            time: snapshot.time,
            kind,
            snapshot,
        }
    }

    /// Entry for the initial state.
    pub fn start_entry(&mut self) -> LogEntry {
        self.entry(EntryKind::Start)
    }

    pub fn end_entry(&mut self) -> LogEntry {
        self.entry(EntryKind::End)
    }

    fn sync_load(&mut self, out: &mut Vec<LogEntry>) {
        if self.logged_load != Some(self.load()) {
            out.push(self.entry(EntryKind::LoadChange));
        }
    }

    fn gait_rejection(&self, mode: GaitMode) -> Option<String> {
        use Environment::*;
        let ok = match mode {
            GaitMode::Halt => true,
            GaitMode::Crawl => matches!(self.environment, OnLand | OnRamp | OnFloor),
            GaitMode::Swim => self.environment == AtSurface,
        };
        (!ok).then(|| {
            format!(
                "{} gait has no effect while {}",
                match mode {
                    GaitMode::Crawl => "crawl",
                    GaitMode::Swim => "swim",
                    GaitMode::Halt => "halt",
                },
                self.environment.as_str()
            )
        })
    }

    /// Operator intent at the current time.
    pub fn issue(&mut self, cmd: MissionCommand) -> Vec<LogEntry> {
        let mut out = Vec::new();
        let result = if let Some((mode, heading)) = cmd.gait() {
            match self.gait_rejection(mode) {
                Some(reason) => CommandOutcome::Ignored { reason },
                None => {
                    self.gait = mode;
                    self.heading = heading;
                    CommandOutcome::Applied
                }
            }
        } else {
            let effect_step = step_index(self.time() + self.latency, self.dt);
            if effect_step <= self.step {
                self.set_drive(cmd.morph_drive().expect("non-gait commands are morph commands"));
                CommandOutcome::Applied
            } else {
                self.pending.push_back(PendingMorph { effect_step, cmd });
                CommandOutcome::Scheduled {
                    effect_time: effect_step as f64 * self.dt,
                }
            }
        };
        out.push(self.entry(EntryKind::Command { cmd, result }));
        out
    }

    /// Advances one fixed step.
    pub fn advance(&mut self) -> Result<Vec<LogEntry>> {
        let mut out = Vec::new();
        while self.pending.front().is_some_and(|p| p.effect_step <= self.step) {
            let p = self.pending.pop_front().expect("front checked");
            self.set_drive(p.cmd.morph_drive().expect("only morph commands are queued"));
            out.push(self.entry(EntryKind::MorphEffect { cmd: p.cmd }));
        }
        self.sync_load(&mut out);

        let load = self.load();
        self.energy.accumulate(&self.params.power, &load, self.dt);

        let dt = self.dt;
        let next_step = self.step + 1;
        let pre_env = self.environment;
        let speed = |terrain| terrain_speed(self.gait, terrain, &self.params.gait).unwrap_or(0.0);
        match self.phase {
            Phase::Dry { morph, drive } => {
                let v = &self.params.vertical;
                let morph = match drive.travel() {
                    Some(dir) => {
                        let x = actuator_travel(dt, dir, &v.morphology.geometry, morph.slider_x);
                        if x != morph.slider_x {
                            v.morphology.state_at_slider(x)?
                        } else {
                            morph
                        }
                    }
                    None => morph,
                };
                let dx = self.heading.sign() * speed(self.geometry.dry_terrain(self.x)) * dt;
                let x = (self.x + dx).max(0.0);
                let entry = self.geometry.water_entry_x();
                if x >= entry {
                    // drops in at the edge with no horizontal carry
                    self.x = entry;
                    let mut s = VerticalState::at_surface(v, morph)?;
                    s.step = next_step;
                    s.time = next_step as f64 * dt;
                    s.contact_since = s.time;
                    s.drive = drive;
                    self.phase = Phase::Wet(s);
                } else {
                    self.x = x;
                    self.phase = Phase::Dry { morph, drive };
                }
            }
            Phase::Wet(s) => {
                let terrain = match pre_env {
                    Environment::OnFloor => Some(Terrain::UnderwaterFloor),
                    Environment::AtSurface => Some(Terrain::WaterSurface),
                    _ => None,
                };
                if let Some(t) = terrain {
                    let entry = self.geometry.water_entry_x();
                    self.x = (self.x + self.heading.sign() * speed(t) * dt)
                        .clamp(entry, entry + self.geometry.tank_length);
                }
                let mut next = step(&s, &self.params.vertical, dt)?;
                next.step = next_step;
                self.phase = Phase::Wet(next);
            }
        }
        self.step = next_step;

        let env = self.classify();
        if env != pre_env {
            if !is_legal_transition(pre_env, env) {
                return Err(Error::Integration {
                    time: self.time(),
                    reason: format!("illegal transition {} -> {}", pre_env.as_str(), env.as_str()),
                });
            }
            self.environment = env;
            out.push(self.entry(EntryKind::Transition { from: pre_env, to: env }));
        }
        if load.actuator_on && !self.actuator_will_move() && self.drive() != MorphDrive::Hold {
            self.set_drive(MorphDrive::Hold);
            out.push(self.entry(EntryKind::MorphComplete));
        }
        self.sync_load(&mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionRun {
    pub log: EventLog,
    /// One snapshot per step, including the initial state.
    pub trajectory: Vec<SimSnapshot>,
}

pub fn run_mission(script: &MissionScript, params: &MissionParams) -> Result<MissionRun> {
    run_mission_with_dt(script, params, DEFAULT_DT)
}

pub fn run_mission_with_dt(script: &MissionScript, params: &MissionParams, dt: f64) -> Result<MissionRun> {
    let mut world = World::with_dt(params, script, dt)?;
    let steps = step_index(script.duration(), dt);
    let mut log = vec![world.start_entry()];
    let mut trajectory = Vec::with_capacity(steps as usize + 1);
    trajectory.push(world.snapshot());
    let mut events = script.events.iter().peekable();
    loop {
        while let Some(e) = events.next_if(|e| step_index(e.t, dt) <= world.step_count()) {
            log.extend(world.issue(e.cmd));
        }
        if world.step_count() >= steps {
            break;
        }
        log.extend(world.advance()?);
        trajectory.push(world.snapshot());
    }
    log.push(world.end_entry());
    Ok(MissionRun {
        log: EventLog { entries: log },
        trajectory,
    })
}

/// Straight-line gait runs used to measure terrain speeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedTrial {
    LandCrawl,
    FloorCrawl,
    SurfaceSwim,
}

impl SpeedTrial {
    pub const ALL: [SpeedTrial; 3] = [SpeedTrial::LandCrawl, SpeedTrial::FloorCrawl, SpeedTrial::SurfaceSwim];

    pub fn label(&self) -> &'static str {
        match self {
            SpeedTrial::LandCrawl => "crawl on land",
            SpeedTrial::FloorCrawl => "crawl on underwater floor",
            SpeedTrial::SurfaceSwim => "swim at surface",
        }
    }

    fn script(&self, duration: f64, params: &MissionParams) -> MissionScript {
        let (place, expanded, cmd) = match self {
            SpeedTrial::LandCrawl => (StartPlace::OnLand, false, MissionCommand::CrawlForward),
            SpeedTrial::FloorCrawl => (StartPlace::OnFloor, false, MissionCommand::CrawlForward),
            SpeedTrial::SurfaceSwim => (StartPlace::AtSurface, true, MissionCommand::SwimForward),
        };
        let mut geometry = params.environment;
        // long enough that no run reaches an edge
        let reach = duration * 2.0 + 1.0;
        if place == StartPlace::OnLand {
            geometry.land_length = geometry.land_length.max(reach);
        } else {
            geometry.tank_length = geometry.tank_length.max(reach);
        }
        MissionScript {
            events: vec![ScriptEvent { t: 0.0, cmd }],
            geometry: Some(geometry),
            latency_s: 0.0,
            start: MissionStart {
                place,
                expanded,
                x_cm: None,
            },
            duration_s: Some(duration),
        }
    }
}

/// Horizontal position sampled at `rate` Hz over a `duration` s trial.
pub fn speed_trial(trial: SpeedTrial, duration: f64, rate: f64, params: &MissionParams) -> Result<TimeSeries> {
    let run = run_mission(&trial.script(duration, params), params)?;
    let x0 = run.trajectory[0].horizontal;
    let samples = run
        .trajectory
        .iter()
        .filter(|s| {
            let k = s.time * rate;
            (k - k.round()).abs() < 1e-6
        })
        .map(|s| (s.time, s.horizontal - x0))
        .collect();
    let mut series = TimeSeries::new(samples)?;
    series.rate = rate;
    Ok(series)
}

/// `t_s,x_cm,depth_cm,height_cm,env,energy_j` followed by the per-load energy columns.
pub fn trajectory_csv(trajectory: &[SimSnapshot]) -> String {
    let mut out = String::from("t_s,x_cm,depth_cm,height_cm,env,energy_j,baseline_j,crawl_j,swim_j,actuator_j\n");
    for s in trajectory {
        let [b, c, w, a] = s.energy_loads;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            f9(s.time),
            f9(s.horizontal),
            f9(s.depth),
            f9(s.morph.height),
            s.environment.as_str(),
            f9(s.energy_used),
            f9(b),
            f9(c),
            f9(w),
            f9(a)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::mission_energy;
    use approx::assert_abs_diff_eq;

    fn params() -> MissionParams {
        MissionParams::default()
    }

    #[test]
    fn classify_examples() {
        let g = EnvGeometry::default();
        let wet = |c| Placement::Wet { contact: c };
        assert_eq!(classify_environment(wet(Contact::OnFloor), -0.73575, &g), Environment::OnFloor);
        assert_eq!(classify_environment(wet(Contact::AtSurface), 0.92, &g), Environment::AtSurface);
        assert_eq!(classify_environment(wet(Contact::FreeColumn), 0.92, &g), Environment::Ascending);
        assert_eq!(classify_environment(wet(Contact::FreeColumn), -0.7, &g), Environment::Sinking);
        assert_eq!(classify_environment(Placement::Dry { x: 0.0 }, -0.7, &g), Environment::OnLand);
        assert_eq!(classify_environment(Placement::Dry { x: 2.0 }, -0.7, &g), Environment::OnRamp);
    }

    #[test]
    fn geometry_timings() {
        let g = EnvGeometry::default();
        let gait = GaitConfig::default();
        let land = gait.crawl_cadence * gait.crawl_advance;
        let ramp = land * g.ramp_angle.to_radians().cos();
        assert_abs_diff_eq!(g.land_length / land, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!((g.water_entry_x() - g.land_length) / ramp, 7.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.elevation(g.water_entry_x()), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn command_names_round_trip() {
        for c in MissionCommand::ALL {
            assert_eq!(c.as_str().parse::<MissionCommand>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.as_str()));
        }
        assert_eq!("crawl_forward".parse::<MissionCommand>().unwrap(), MissionCommand::CrawlForward);
        assert!("jump".parse::<MissionCommand>().is_err());
    }

    #[test]
    fn empty_script_stays_on_land() {
        let run = run_mission(&MissionScript::default(), &params()).unwrap();
        assert_eq!(run.trajectory.len(), 1);
        assert_eq!(run.trajectory[0].environment, Environment::OnLand);
        assert!(run.log.transitions().is_empty());
    }

    #[test]
    fn expand_from_floor_surfaces() {
        let script = MissionScript {
            events: vec![ScriptEvent { t: 0.0, cmd: MissionCommand::Expand }],
            latency_s: 0.0,
            start: MissionStart {
                place: StartPlace::OnFloor,
                ..MissionStart::default()
            },
            duration_s: Some(60.0),
            ..MissionScript::default()
        };
        let run = run_mission(&script, &params()).unwrap();
        assert_eq!(
            run.log.environment_sequence(),
            vec![Environment::OnFloor, Environment::Ascending, Environment::AtSurface]
        );
    }

    #[test]
    fn incompatible_commands_warn() {
        let script = MissionScript {
            events: vec![
                ScriptEvent { t: 0.0, cmd: MissionCommand::SwimForward },
                ScriptEvent { t: 1.0, cmd: MissionCommand::Halt },
                ScriptEvent { t: 1.0, cmd: MissionCommand::Halt },
            ],
            start: MissionStart {
                place: StartPlace::OnFloor,
                ..MissionStart::default()
            },
            ..MissionScript::default()
        };
        let run = run_mission(&script, &params()).unwrap();
        assert_eq!(run.log.warnings().len(), 1);
        assert!(run.trajectory.iter().all(|s| s.gait == GaitMode::Halt));
    }

    #[test]
    fn demo_script_energy_is_consistent() {
        let run = run_mission(&transition_demo_script(), &params()).unwrap();
        let last = run.trajectory.last().unwrap();
        let e = mission_energy(&run.log, &params().power);
        assert_abs_diff_eq!(e.total, last.energy_used, epsilon = 1e-9);
        assert_abs_diff_eq!(e.load_sum(), e.total, epsilon = 1e-9);
        assert_abs_diff_eq!(e.environment_sum(), e.total, epsilon = 1e-9);
        assert!(e.actuator <= 7.0);
        assert!(run.trajectory.windows(2).all(|w| w[1].energy_used >= w[0].energy_used));
    }

    #[test]
    fn script_json_defaults() {
        let s = MissionScript::from_json(r#"{"events":[{"t":0,"cmd":"halt"}]}"#).unwrap();
        assert_eq!(s.latency_s, 10.0);
        assert_eq!(s.start, MissionStart::default());
        let bad = MissionScript::from_json(r#"{"events":[{"t":5,"cmd":"halt"},{"t":1,"cmd":"halt"}]}"#);
        assert!(bad.is_err());
        let back = MissionScript::from_json(&transition_demo_script().to_json()).unwrap();
        assert_eq!(back, transition_demo_script());
    }

    #[test]
    fn speed_trials_sample_at_rate() {
        let s = speed_trial(SpeedTrial::SurfaceSwim, 10.0, 30.0, &params()).unwrap();
        assert_eq!(s.len(), 301);
        assert_abs_diff_eq!(s.samples()[300].1, 7.5, epsilon = 1e-9);
    }

    #[test]
    fn all_pairs_outside_graph_are_illegal() {
        let legal = Environment::ALL
            .iter()
            .flat_map(|a| Environment::ALL.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| is_legal_transition(*a, *b))
            .count();
        assert_eq!(legal, 12);
        assert!(!is_legal_transition(Environment::OnLand, Environment::OnFloor));
        assert!(!is_legal_transition(Environment::OnFloor, Environment::AtSurface));
    }
}
