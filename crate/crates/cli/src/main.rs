use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod serve;

#[derive(Parser)]
#[command(name = "morphbot", version, about = "Shape-morphing amphibious robot simulator")]
struct Cli {
    /// JSON configuration file; defaults are used for missing sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Prism,
    Affine,
}

#[derive(Subcommand)]
enum Command {
    /// Body height at which buoyancy balances weight.
    Neutral {
        #[arg(long)]
        mass_g: f64,
        /// Volume model; the configured one when omitted.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Net-force grid over mass and height.
    DesignSpace {
        /// Mass axis as START:END:COUNT, grams.
        #[arg(long, default_value = "200:500:61", value_parser = commands::parse_axis)]
        mass_g: (f64, f64, usize),
        /// Height axis as START:END:COUNT, cm.
        #[arg(long, default_value = "4:10:61", value_parser = commands::parse_axis)]
        height_cm: (f64, f64, usize),
        #[arg(long)]
        out: PathBuf,
        /// Also write the neutral curve here.
        #[arg(long)]
        neutral_out: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Compress at the surface and fall to the floor.
    Sink {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Delay before the compress command takes effect, s.
        #[arg(long, default_value_t = 0.0)]
        latency_s: f64,
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
    },
    /// Expand on the floor and rise to the surface.
    Resurface {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        latency_s: f64,
        #[arg(long, default_value_t = 90.0)]
        duration_s: f64,
    },
    /// Run a mission script.
    Mission {
        script: PathBuf,
        /// Trajectory CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Event log CSV.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Fit free parameters to measured targets.
    Calibrate {
        #[command(subcommand)]
        what: CalibrateCommand,
    },
    /// Terrain speeds and their simulated distance-time slopes.
    Speeds {
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
    },
    /// Live teleoperation service over WebSocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
}

#[derive(Subcommand)]
enum CalibrateCommand {
    /// Drag coefficient for a vertical transit time.
    Drag {
        #[arg(long)]
        target_s: f64,
        #[arg(long, default_value_t = 30.0)]
        depth_cm: f64,
        /// Fit the expanded-body rise instead of the compressed-body fall.
        #[arg(long)]
        ascend: bool,
        /// Coefficient bracket as LO:HI.
        #[arg(long, value_parser = commands::parse_bracket)]
        bracket: Option<(f64, f64)>,
        /// Store the result in the --config file.
        #[arg(long)]
        write: bool,
    },
    /// Stride per cycle for a target speed.
    Gait {
        #[arg(long)]
        speed: f64,
        #[arg(long)]
        cadence: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
