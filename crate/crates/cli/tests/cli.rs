use std::process::{Command, Output};

fn morphbot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphbot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn neutral_prints_the_balance_height() {
    let o = morphbot(&["neutral", "--mass-g", "330", "--model", "prism"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("5.185 cm\n"), "{}", stdout(&o));
    let o = morphbot(&["neutral", "--mass-g", "330"]);
    assert!(stdout(&o).starts_with("6.500 cm\n"));
}

#[test]
fn neutral_outside_the_stroke_says_so() {
    let o = morphbot(&["neutral", "--mass-g", "200", "--model", "prism"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("floats in every configuration"));
    let o = morphbot(&["neutral", "--mass-g", "500", "--model", "prism"]);
    assert!(stdout(&o).contains("sinks in every configuration"));
}

#[test]
fn exit_codes() {
    assert_eq!(morphbot(&["neutral"]).status.code(), Some(2));
    assert_eq!(morphbot(&["neutral", "--mass-g", "abc"]).status.code(), Some(2));
    assert_eq!(morphbot(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        morphbot(&["design-space", "--out", "/dev/null", "--mass-g", "1:2"]).status.code(),
        Some(2)
    );
    assert_eq!(morphbot(&["serve", "--time-scale", "0"]).status.code(), Some(2));
    assert_eq!(morphbot(&["--config", "/no/such/file.json", "sink"]).status.code(), Some(2));
    // physically impossible mass
    let o = morphbot(&["neutral", "--mass-g=-10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert_eq!(morphbot(&["mission", "/no/such/script.json"]).status.code(), Some(1));
}

#[test]
fn design_space_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let curve = dir.path().join("curve.csv");
    let o = morphbot(&[
        "design-space",
        "--model",
        "prism",
        "--out",
        grid.to_str().unwrap(),
        "--neutral-out",
        curve.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&grid).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "mass_g,height_cm,net_force_n");
    assert_eq!(lines.len(), 61 * 61 + 1);
    let curve = std::fs::read_to_string(&curve).unwrap();
    for line in curve.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((v[1] - (v[0] - 120.0) / 40.5).abs() < 1e-6, "{line}");
    }
}

#[test]
fn sink_and_resurface_report_and_write_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sink.csv");
    let o = morphbot(&["sink", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("transit      7.531 s"), "{text}");
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t_s,depth_cm,velocity_cm_s,height_cm,net_force_n,contact\n"));
    assert_eq!(csv.lines().count(), 60 * 240 + 2);

    let o = morphbot(&["resurface"]);
    let text = stdout(&o);
    assert!(text.contains("buoyancy flip"), "{text}");
    assert!(text.contains("from command"), "{text}");
}

#[test]
fn mission_runs_the_shipped_demo() {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/missions/ramp_to_surface.json");
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let events = dir.path().join("events.csv");
    let o = morphbot(&[
        "mission",
        script,
        "--out",
        traj.to_str().unwrap(),
        "--events",
        events.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    for stage in ["OnLand -> OnRamp", "OnRamp -> Sinking", "Sinking -> OnFloor", "OnFloor -> Ascending", "Ascending -> AtSurface"] {
        assert!(text.contains(stage), "missing {stage}:\n{text}");
    }
    assert!(text.contains("energy "));
    assert!(std::fs::read_to_string(&traj).unwrap().starts_with("t_s,x_cm,depth_cm"));
    assert!(std::fs::read_to_string(&events).unwrap().starts_with("t_s,event,env"));
}

#[test]
fn calibrate_drag_reproduces_and_writes_the_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let o = morphbot(&["--config", cfg.to_str().unwrap(), "calibrate", "drag", "--target-s", "7", "--write"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("cd_descend = 197.18661642"), "{}", stdout(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    let cd = saved["drag"]["cd_descend"].as_f64().unwrap();
    assert!((cd - 197.186_616_420_745_85).abs() < 1e-9);
    // the written file loads back
    assert_eq!(morphbot(&["--config", cfg.to_str().unwrap(), "sink"]).status.code(), Some(0));

    assert_eq!(morphbot(&["calibrate", "drag", "--target-s", "7", "--write"]).status.code(), Some(2));
}

#[test]
fn calibrate_gait_and_speeds() {
    let o = morphbot(&["calibrate", "gait", "--speed", "0.7", "--cadence", "1.4"]);
    assert_eq!(stdout(&o).trim(), "0.500000000 cm per cycle");
    let o = morphbot(&["speeds", "--duration-s", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("0.700000 cm/s"));
    assert!(text.contains("0.240000 cm/s"));
    assert!(text.contains("0.750000 cm/s"));
}
