//! Simulation and design toolkit for a shape-morphing amphibious robot.
//!
//! A single linear actuator drives a scissor-lift body. Body height sets the
//! displaced volume (and therefore the buoyancy state) and, through a
//! bell-crank, the fin pitch that selects between crawling and swimming.
//!
//! Module map:
//! - [`morphology`]: actuator travel, scissor height, fin pitch, volumes
//! - [`hydrostatics`]: weight/buoyancy balance, neutral height, draft, design space
//! - [`dynamics`]: vertical motion with quadratic drag and floor/surface contact
//! - [`locomotion`]: crawl and swim gaits and terrain speeds
//! - [`mission`]: scripted multi-environment runs and event logs
//! - [`energy`]: battery runtime and per-phase energy accounting
//! - [`calibration`]: bracketed fits of drag and gait parameters
//! - [`telemetry`]: trajectory filtering, speed estimation and CSV I/O
//! - [`session`]: live teleoperation session and its wire protocol
//! - [`config`]: the shared JSON configuration file

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod hydrostatics;
pub mod locomotion;
pub mod mission;
pub mod morphology;
pub mod session;
pub mod telemetry;

mod fmt;

pub use error::{Error, Result};
