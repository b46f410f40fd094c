use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const CONFIG: &str = r#"{
    "ensemble": {"od_resonant": 150.0, "length_m": 0.005, "sigma_x_m": 0.0003,
                 "sigma_y_m": 0.0003, "sigma_z_m": 0.0025, "temperature_k": 0.0002,
                 "atom_number": 4e9},
    "coupling": {"rabi_frequency_hz": 2e6, "one_photon_detuning_hz": 250e6, "two_photon_detuning_hz": 0.0},
    "gradient": {"eta_write_hz_per_m": 2e7, "eta_read_hz_per_m": -2e7, "switch_time_s": 10e-6},
    "pulse": {"shape": {"kind": "gaussian"}, "fwhm_s": 2e-6, "peak_amplitude": 1.0},
    "seed": 7
}"#;

fn gemsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gemsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("gemsim runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_traces_and_report() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "run.json", CONFIG);
    let o = gemsim(dir.path(), &["--config", "run.json", "--out-dir", "out", "simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traces = std::fs::read_to_string(dir.path().join("out/traces.csv")).unwrap();
    assert!(traces.starts_with("time_s,input_intensity,re_field,im_field,intensity"));
    let report = json(dir.path().join("out/report.json"));
    assert_eq!(report["seed"], 7);
    let total = report["efficiency"]["total_efficiency"].as_f64().unwrap();
    assert!(total > 0.0 && total < 1.0);
}

#[test]
fn zero_coupling_leaks_everything() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "run.json", &CONFIG.replace("\"rabi_frequency_hz\": 2e6", "\"rabi_frequency_hz\": 0.0"));
    let o = gemsim(dir.path(), &["--config", "run.json", "simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let leak = json(dir.path().join("report.json"))["efficiency"]["leakage_fraction"]
        .as_f64()
        .unwrap();
    assert!((leak - 1.0).abs() < 1e-6, "{leak}");
}

#[test]
fn missing_sign_flip_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "run.json", &CONFIG.replace("-2e7", "2e7"));
    let o = gemsim(dir.path(), &["--config", "run.json", "--out-dir", "out", "simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eta_read_hz_per_m"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let o = gemsim(dir.path(), &["--config", "absent.json", "simulate"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn single_point_sweep_has_one_row_and_no_fit() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "run.json", CONFIG);
    let o = gemsim(dir.path(), &["--config", "run.json", "sweep", "--ts-list", "1e-5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    let report = json(dir.path().join("decay_fit.json"));
    assert!(report["curves"][0]["tau_s"].is_null());
}

#[test]
fn identical_frames_give_zero_optical_depth() {
    let dir = TempDir::new().unwrap();
    let frame = "100,200,300\n400,500,600\n";
    write(dir.path(), "t.csv", frame);
    write(dir.path(), "r.csv", frame);
    write(dir.path(), "meta.json", r#"{"detuning_hz": 0.0, "pixel_pitch_m": 1e-5}"#);
    let o = gemsim(
        dir.path(),
        &["odmap", "--transmitted", "t.csv", "--reference", "r.csv", "--meta", "meta.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let od = std::fs::read_to_string(dir.path().join("od.csv")).unwrap();
    let values: Vec<f64> = od
        .split([',', '\n'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 6);
    assert!(values.iter().all(|v| *v == 0.0), "{od}");
}

#[test]
fn calibrate_reports_center_and_width() {
    let dir = TempDir::new().unwrap();
    let mut scan = String::from("detuning_hz,signal\n");
    for i in 0..81 {
        let d = -20e6 + 0.5e6 * i as f64;
        let s = 1.0 / (1.0 + (2.0 * (d + 0.8e6) / 6e6).powi(2));
        scan.push_str(&format!("{d},{s}\n"));
    }
    write(dir.path(), "scan.csv", &scan);
    let o = gemsim(dir.path(), &["calibrate", "scan.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let get = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((get("center_offset_hz=") + 0.8e6).abs() < 1e4, "{text}");
    assert!((get("fwhm_hz=") - 6e6).abs() < 6e4, "{text}");
    assert!(dir.path().join("calibration.json").exists());
}

#[test]
fn temperature_from_width_table() {
    let dir = TempDir::new().unwrap();
    let (kb, m, t, s0): (f64, f64, f64, f64) = (1.380649e-23, 1.443160648e-25, 150e-6, 0.4e-3);
    let mut table = String::from("time_s,sigma_m\n");
    for tof in [4e-3, 8e-3, 12e-3] {
        let s = (s0 * s0 + kb * t / m * tof * tof).sqrt();
        table.push_str(&format!("{tof},{s}\n"));
    }
    write(dir.path(), "widths.csv", &table);
    let o = gemsim(dir.path(), &["temperature", "--widths", "widths.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("temperature_k="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - t).abs() < 1e-3 * t, "{text}");
}

#[test]
fn decay_fit_prints_key_values() {
    let dir = TempDir::new().unwrap();
    let mut data = String::from("storage_time_s,efficiency\n");
    for i in 1..=8 {
        let t = 20e-6 * i as f64;
        data.push_str(&format!("{t},{}\n", 0.7 * (-t / 117e-6).exp()));
    }
    write(dir.path(), "decay.csv", &data);
    let o = gemsim(dir.path(), &["decay-fit", "decay.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let tau: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("tau="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((tau - 117e-6).abs() < 1e-9, "{text}");
    assert!(text.contains("converged=true"));
}

#[test]
fn malformed_table_names_the_line() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.csv", "t,e\n1e-5,0.5\n2e-5,abc\n");
    let o = gemsim(dir.path(), &["decay-fit", "bad.csv"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));
    assert!(!dir.path().join("decay_fit.json").exists());
}

#[test]
fn plot_renders_loglog_svg() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "decay.csv",
        "storage_time_s,efficiency_a,log10_efficiency_a\n2e-5,0.8,-0.1\n4e-5,0.6,-0.2\n8e-5,0.4,-0.4\n",
    );
    let o = gemsim(dir.path(), &["plot", "decay.csv", "--loglog", "--title", "decay"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("decay.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(">decay<"));
    assert_eq!(svg.matches("<polyline").count(), 1);
}

#[test]
fn help_lists_subcommands() {
    let dir = TempDir::new().unwrap();
    let o = gemsim(dir.path(), &["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for sub in ["simulate", "sweep", "raman-scan", "odmap", "calibrate", "temperature", "decay-fit", "demod", "plot"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}
