//! Live teleoperation session and its newline-delimited JSON protocol.
//!
//! The session is transport-agnostic: the caller feeds it client messages
//! in arrival order together with the simulated time that has elapsed. Each
//! call to [`Session::tick`] applies the queued messages first, then steps
//! until the session clock is caught up.
//! Every command applied is recorded with the step time it landed on, so
//! [`Session::transcript`] replays through [`run_mission`] to the same
//! trajectory.
//!
//! [`run_mission`]: crate::mission::run_mission

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::step_index;
use crate::error::Result;
use crate::mission::{
    EntryKind, LogEntry, MissionCommand, MissionParams, MissionScript, MissionStart, ScriptEvent, SimSnapshot,
    StartPlace, World,
};

/// Inbound messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Cmd { action: MissionCommand },
    LoadMission(MissionScript),
}

/// Outbound messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(StateMessage),
    Event { t: f64, event: String, env: String },
    Error { reason: String },
}

impl ServerMessage {
    /// One NDJSON line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub t: f64,
    pub x_cm: f64,
    pub depth_cm: f64,
    pub height_cm: f64,
    pub fin_deg: f64,
    pub env: String,
    pub net_force_n: f64,
    pub energy_j: f64,
    pub battery_pct: f64,
    pub gait: String,
    pub draft_cm: Option<f64>,
}

impl From<&SimSnapshot> for StateMessage {
    fn from(s: &SimSnapshot) -> Self {
        Self {
            t: s.time,
            x_cm: s.horizontal,
            depth_cm: s.depth,
            height_cm: s.morph.height,
            fin_deg: s.morph.fin_pitch,
            env: s.environment.as_str().to_string(),
            net_force_n: s.net_force,
            energy_j: s.energy_used,
            battery_pct: s.battery_pct,
            gait: serde_json::to_value(s.gait)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            draft_cm: s.draft,
        }
    }
}

/// Parses one inbound line; the error string is sent back as the reason.
pub fn parse_client_line(line: &str) -> std::result::Result<ClientMessage, String> {
    let msg: ClientMessage = serde_json::from_str(line.trim()).map_err(|e| format!("malformed message: {e}"))?;
    if let ClientMessage::LoadMission(script) = &msg {
        script.validate().map_err(|e| format!("invalid mission: {e}"))?;
    }
    Ok(msg)
}

/// Scenario a new session starts with: compressed on the floor, no latency.
pub fn default_live_script() -> MissionScript {
    MissionScript {
        latency_s: 0.0,
        start: MissionStart {
            place: StartPlace::OnFloor,
            ..MissionStart::default()
        },
        ..MissionScript::default()
    }
}

/// Output of one tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TickOutput {
    /// Error replies and log events, in order.
    pub messages: Vec<ServerMessage>,
    pub state: Option<StateMessage>,
}

pub struct Session {
    params: MissionParams,
    world: World,
    base: MissionScript,
    scripted: VecDeque<ScriptEvent>,
    transcript: Vec<ScriptEvent>,
    history: Option<Vec<SimSnapshot>>,
    /// Simulated time the caller has granted so far, s.
    clock: f64,
}

impl Session {
    pub fn new(params: &MissionParams, script: &MissionScript) -> Result<Self> {
        let world = World::new(params, script)?;
        Ok(Self {
            params: *params,
            world,
            base: MissionScript {
                events: Vec::new(),
                duration_s: None,
                ..script.clone()
            },
            scripted: script.events.iter().copied().collect(),
            transcript: Vec::new(),
            history: None,
            clock: 0.0,
        })
    }

    /// Keeps every stepped snapshot, for replay checks.
    pub fn record_history(&mut self) {
        self.history = Some(vec![self.world.snapshot()]);
    }

    pub fn history(&self) -> Option<&[SimSnapshot]> {
        self.history.as_deref()
    }

    pub fn time(&self) -> f64 {
        self.world.time()
    }

    pub fn state(&self) -> StateMessage {
        StateMessage::from(&self.world.snapshot())
    }

    fn issue(&mut self, cmd: MissionCommand, out: &mut Vec<ServerMessage>) {
        self.transcript.push(ScriptEvent { t: self.world.time(), cmd });
        for e in self.world.issue(cmd) {
            out.push(event_message(&e));
        }
    }

    fn apply(&mut self, msg: ClientMessage, out: &mut Vec<ServerMessage>) {
        match msg {
            ClientMessage::Cmd { action } => self.issue(action, out),
            ClientMessage::LoadMission(script) => match Session::new(&self.params, &script) {
                Ok(fresh) => {
                    let keep = self.history.is_some();
                    *self = fresh;
                    if keep {
                        self.record_history();
                    }
                    out.push(ServerMessage::Event {
                        t: 0.0,
                        event: "mission loaded".into(),
                        env: self.world.environment().as_str().into(),
                    });
                }
                Err(e) => out.push(ServerMessage::Error {
                    reason: format!("invalid mission: {e}"),
                }),
            },
        }
    }

    /// Applies `inbox` in order, then advances the clock by `elapsed` seconds
    /// and steps to it. Loading a mission restarts the clock at zero.
    pub fn tick<I>(&mut self, inbox: I, elapsed: f64) -> Result<TickOutput>
    where
        I: IntoIterator<Item = ClientMessage>,
    {
        let mut messages = Vec::new();
        for msg in inbox {
            self.apply(msg, &mut messages);
        }
        self.clock += elapsed.max(0.0);
        let dt = self.world.dt();
        let target = step_index(self.clock, dt);
        loop {
            while let Some(e) = self.scripted.front().copied() {
                if step_index(e.t, dt) > self.world.step_count() {
                    break;
                }
                self.scripted.pop_front();
                self.issue(e.cmd, &mut messages);
            }
            if self.world.step_count() >= target {
                break;
            }
            for e in self.world.advance()? {
                if !matches!(e.kind, EntryKind::LoadChange) {
                    messages.push(event_message(&e));
                }
            }
            if let Some(h) = &mut self.history {
                h.push(self.world.snapshot());
            }
        }
        Ok(TickOutput {
            messages,
            state: Some(self.state()),
        })
    }

    /// The commands applied so far as a batch script over the elapsed time.
    pub fn transcript(&self) -> MissionScript {
        MissionScript {
            events: self.transcript.clone(),
            duration_s: Some(self.world.time()),
            ..self.base.clone()
        }
    }
}

fn event_message(e: &LogEntry) -> ServerMessage {
    ServerMessage::Event {
        t: e.time,
        event: e.kind.label(),
        env: e.snapshot.environment.as_str().into(),
    }
}
