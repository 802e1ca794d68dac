use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use morphbot_core::calibration::{calibrate_drag, calibrate_gait, TransitDirection};
use morphbot_core::config::Config;
use morphbot_core::dynamics::{depth_csv, resurface_from_floor, sink_from_surface, TransitReport, DEFAULT_DT};
use morphbot_core::energy::mission_energy;
use morphbot_core::hydrostatics::{design_space, neutral_height, neutral_outcome, robot_markers, Axis, NeutralOutcome};
use morphbot_core::locomotion::{terrain_speed, GaitMode, Terrain};
use morphbot_core::mission::{run_mission, speed_trial, trajectory_csv, EntryKind, MissionScript, SpeedTrial};
use morphbot_core::morphology::VolumeModel;
use morphbot_core::telemetry::{average_speed, DEFAULT_RATE_HZ};

use crate::{CalibrateCommand, Cli, Command, ModelArg};

pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

pub fn parse_axis(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("expected START:END:COUNT, got {s:?}"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number"));
    let count = n.trim().parse::<usize>().map_err(|_| format!("{n:?} is not a count"))?;
    Ok((num(a)?, num(b)?, count))
}

pub fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("{v:?} is not a number"));
    Ok((num(a)?, num(b)?))
}

fn volume_model(config: &Config, model: Option<ModelArg>) -> VolumeModel {
    match model {
        Some(ModelArg::Prism) => VolumeModel::prism(),
        Some(ModelArg::Affine) => VolumeModel::affine(),
        None => config.volume_model,
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_transit(label: &str, r: &TransitReport) {
    let show = |v: Option<f64>| v.map_or_else(|| "not reached".to_string(), |t| format!("{t:.3} s"));
    println!("{label}");
    println!("  command      {:.3} s", r.command_time);
    println!("  effect       {:.3} s", r.effect_time);
    println!("  departure    {}", show(r.departure_time));
    println!("  arrival      {}", show(r.arrival_time));
    println!("  transit      {}", show(r.transit()));
    println!("  from command {}", show(r.total()));
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = match &cli.config {
        Some(path) if path.exists() => {
            Config::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        Some(path) if !matches!(cli.command, Command::Calibrate { .. }) => {
            return Err(Failure::Usage(format!("config file {} does not exist", path.display())));
        }
        _ => Config::default(),
    };

    match cli.command {
        Command::Neutral { mass_g, model } => {
            let model = volume_model(&config, model);
            let mass = mass_g / 1000.0;
            let h = neutral_height(mass, &model, &config.fluid)?;
            println!("{h:.3} cm");
            let range = config.geometry.range;
            match neutral_outcome(mass, &model, &config.fluid, range.h_min, range.h_max)? {
                NeutralOutcome::Neutral { .. } => {}
                NeutralOutcome::AlwaysFloats => {
                    println!("below the {} cm minimum height: floats in every configuration", range.h_min)
                }
                NeutralOutcome::AlwaysSinks => {
                    println!("above the {} cm maximum height: sinks in every configuration", range.h_max)
                }
            }
        }
        Command::DesignSpace {
            mass_g,
            height_cm,
            out,
            neutral_out,
            model,
        } => {
            let start = Instant::now();
            let model = volume_model(&config, model);
            let mass_axis = Axis::new(mass_g.0 / 1000.0, mass_g.1 / 1000.0, mass_g.2)
                .map_err(|e| Failure::Usage(format!("--mass-g: {e}")))?;
            let height_axis = Axis::new(height_cm.0, height_cm.1, height_cm.2)
                .map_err(|e| Failure::Usage(format!("--height-cm: {e}")))?;
            let grid = design_space(mass_axis, height_axis, &model, &config.fluid)?;
            write_file(&out, &grid.grid_csv())?;
            if let Some(path) = neutral_out {
                write_file(&path, &grid.neutral_csv())?;
            }
            println!(
                "{} x {} grid ({} model) written to {} in {:.3} s",
                grid.height_axis.len(),
                grid.mass_axis.len(),
                model.name(),
                out.display(),
                start.elapsed().as_secs_f64()
            );
            let range = config.geometry.range;
            for m in robot_markers(config.body.mass_kg, range.h_min, range.h_max, &model, &config.fluid)? {
                println!(
                    "  {:<10} {:.0} g, {:.2} cm: net {:+.4} N ({:?})",
                    m.label,
                    m.mass * 1000.0,
                    m.height,
                    m.net_force,
                    m.state
                );
            }
        }
        Command::Sink {
            out,
            latency_s,
            duration_s,
        } => {
            let params = config.vertical_params();
            let (series, report) = sink_from_surface(&params, latency_s, duration_s, DEFAULT_DT)?;
            print_transit("sink from surface", &report);
            if let Some(path) = out {
                write_file(&path, &depth_csv(&series))?;
            }
        }
        Command::Resurface {
            out,
            latency_s,
            duration_s,
        } => {
            let params = config.vertical_params();
            let (series, report) = resurface_from_floor(&params, latency_s, duration_s, DEFAULT_DT)?;
            print_transit("resurface from floor", &report);
            if let Some(flip) = series.iter().find(|s| s.hydrostatic_net() > 0.0) {
                println!("  buoyancy flip {:.3} s", flip.time);
            }
            if let Some(path) = out {
                write_file(&path, &depth_csv(&series))?;
            }
        }
        Command::Mission { script, out, events } => {
            let text = std::fs::read_to_string(&script).with_context(|| format!("reading {}", script.display()))?;
            let script = MissionScript::from_json(&text).with_context(|| format!("parsing {}", script.display()))?;
            let params = config.mission_params();
            let run = run_mission(&script, &params)?;
            for e in &run.log.entries {
                if matches!(e.kind, EntryKind::Transition { .. } | EntryKind::Command { .. } | EntryKind::End) {
                    println!("{:>9.3} s  {}", e.time, e.kind.label());
                }
            }
            let energy = mission_energy(&run.log, &params.power);
            println!(
                "energy {:.3} J (baseline {:.3}, crawl {:.3}, swim {:.3}, actuator {:.3})",
                energy.total, energy.baseline, energy.crawl, energy.swim, energy.actuator
            );
            if let Some(path) = out {
                write_file(&path, &trajectory_csv(&run.trajectory))?;
            }
            if let Some(path) = events {
                write_file(&path, &run.log.to_csv())?;
            }
        }
        Command::Calibrate { what } => calibrate(what, config, cli.config.as_deref())?,
        Command::Speeds { duration_s } => {
            let params = config.mission_params();
            let terrains = [
                (SpeedTrial::LandCrawl, GaitMode::Crawl, Terrain::Land),
                (SpeedTrial::FloorCrawl, GaitMode::Crawl, Terrain::UnderwaterFloor),
                (SpeedTrial::SurfaceSwim, GaitMode::Swim, Terrain::WaterSurface),
            ];
            for (trial, mode, terrain) in terrains {
                let model = terrain_speed(mode, terrain, &params.gait)?;
                let trace = speed_trial(trial, duration_s, DEFAULT_RATE_HZ, &params)?;
                let measured = average_speed(&trace, 0.0, duration_s)?;
                println!(
                    "{:<26} {:.6} cm/s   simulated {:.1} s: {:.6} cm/s",
                    trial.label(),
                    model,
                    duration_s,
                    measured
                );
            }
        }
        Command::Serve {
            port,
            host,
            time_scale,
        } => {
            if !(time_scale > 0.0 && time_scale.is_finite()) {
                return Err(Failure::Usage(format!("--time-scale must be positive, got {time_scale}")));
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::serve::serve(config, &host, port, time_scale))?;
        }
    }
    Ok(())
}

fn calibrate(what: CalibrateCommand, mut config: Config, path: Option<&Path>) -> Result<(), Failure> {
    match what {
        CalibrateCommand::Drag {
            target_s,
            depth_cm,
            ascend,
            bracket,
            write,
        } => {
            let path = match (write, path) {
                (true, None) => return Err(Failure::Usage("--write needs --config <path>".into())),
                (true, Some(p)) => Some(p),
                (false, _) => None,
            };
            let direction = if ascend {
                TransitDirection::Ascend
            } else {
                TransitDirection::Descend
            };
            let bracket = bracket.unwrap_or(if ascend { (0.01, 1000.0) } else { (1.0, 1000.0) });
            let params = config.vertical_params();
            let fit = calibrate_drag(direction, target_s, depth_cm, bracket, &params, DEFAULT_DT)?;
            let name = if ascend { "ascend" } else { "descend" };
            println!("// {name}: target {target_s} s over {depth_cm} cm, bracket [{}, {}], dt 1/240 s,", bracket.0, bracket.1);
            println!("//          {} iterations, achieved {:.9} s", fit.iterations, fit.achieved_time);
            println!("cd_{name} = {:.17}", fit.coefficient);
            if let Some(path) = path {
                if ascend {
                    config.drag.cd_ascend = fit.coefficient;
                } else {
                    config.drag.cd_descend = fit.coefficient;
                }
                config.save(path)?;
                println!("written to {}", path.display());
            }
        }
        CalibrateCommand::Gait { speed, cadence } => {
            println!("{:.9} cm per cycle", calibrate_gait(speed, cadence)?);
        }
    }
    Ok(())
}
