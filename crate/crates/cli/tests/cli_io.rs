//! Command and file-format behavior: round-trips, spec'd examples, exit
//! codes.

use std::path::Path;
use std::process::Command;

use sepsim::commands::{self, StartupMode};
use sepsim::{exit_code, formats, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sepsim"))
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn small_config() -> RunConfig {
    RunConfig { rows: 4, cols: 8, n_trials: 20, seed: 3, ..RunConfig::default() }
}

#[test]
fn zero_sigma_population_has_all_zero_sd() {
    let dir = tempdir();
    let mut config = small_config();
    config.mismatch.sigma_vth_n = 0.0;
    config.mismatch.sigma_vth_p = 0.0;
    commands::cmd_population(&config, dir.path(), Some(8), 0).unwrap();
    let records = formats::read_sd_csv(&dir.path().join("sd.csv")).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records.iter().all(|r| r.sd == 0.0));
    // the JSON sibling carries the same records
    let json = formats::read_sd_json(&dir.path().join("sd.json")).unwrap();
    assert_eq!(json, records);
}

#[test]
fn noiseless_startup_is_binary() {
    let dir = tempdir();
    let mut config = small_config();
    config.noise.sigma_init = 0.0;
    commands::cmd_startup(&config, dir.path(), StartupMode::Simulate { cells: None }, 0).unwrap();
    let ds = formats::ingest_dataset(&dir.path().join("counts.csv")).unwrap();
    assert!(ds.records.iter().all(|r| r.sup1() == 0.0 || r.sup1() == 1.0));
}

#[test]
fn startup_report_has_regions_and_ber() {
    let dir = tempdir();
    let config = small_config();
    commands::cmd_startup(&config, dir.path(), StartupMode::Simulate { cells: None }, 0).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("startup_report.json")).unwrap())
            .unwrap();
    for key in ["mean_ber", "a0_fraction", "b_fraction", "a1_fraction"] {
        assert!(report[key].is_number(), "missing {key}");
    }
    let sum = report["a0_fraction"].as_f64().unwrap()
        + report["b_fraction"].as_f64().unwrap()
        + report["a1_fraction"].as_f64().unwrap();
    assert!((sum - 1.0).abs() < 1e-12);
    // emitted artifacts round-trip through their readers
    formats::read_spatial_map(&dir.path().join("spatial_map.csv")).unwrap();
    formats::read_histogram_csv(&dir.path().join("sup_histogram.csv")).unwrap();
    formats::read_mask_csv(&dir.path().join("mask.csv")).unwrap();
    formats::read_responses_csv(&dir.path().join("response.csv")).unwrap();
}

#[test]
fn ingest_reexport_is_identity() {
    let dir = tempdir();
    let config = small_config();
    let sim_dir = dir.path().join("sim");
    commands::cmd_startup(&config, &sim_dir, StartupMode::Simulate { cells: None }, 0).unwrap();
    let counts = sim_dir.join("counts.csv");

    let ingest_dir = dir.path().join("ingest");
    commands::cmd_startup(&config, &ingest_dir, StartupMode::Ingest { path: counts.clone() }, 0)
        .unwrap();
    let original = std::fs::read(&counts).unwrap();
    let reexported = std::fs::read(ingest_dir.join("counts.csv")).unwrap();
    assert_eq!(original, reexported);

    // simulate -> export -> ingest preserves every record field
    let a = formats::ingest_dataset(&counts).unwrap();
    let b = formats::ingest_dataset(&ingest_dir.join("counts.csv")).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn population_dump_and_exceedance_roundtrip() {
    let dir = tempdir();
    let config = small_config();
    commands::cmd_population(&config, dir.path(), Some(16), 0).unwrap();
    let exceedance = formats::read_exceedance_csv(&dir.path().join("exceedance.csv")).unwrap();
    assert_eq!(exceedance.first().unwrap().1, 1.0); // threshold 0 keeps all cells
    let mut prev = 1.0;
    for &(_, f) in &exceedance {
        assert!(f <= prev);
        prev = f;
    }
    formats::read_histogram_csv(&dir.path().join("sd_histogram.csv")).unwrap();
}

#[test]
fn thresholds_sorted_descending_and_near_half_keeps_everything() {
    let dir = tempdir();
    let config = small_config();
    commands::cmd_population(&config, dir.path(), Some(24), 0).unwrap();
    let fit = sepsim_core::transfer::FitResult {
        model: sepsim_core::transfer::TransferModel::Double(sepsim_core::transfer::DoubleLogistic {
            m: 0.158,
            k1: 101.2,
            k2: 2348.0,
        }),
        residual: 0.0,
        iterations: 0,
        converged: true,
    };
    let model_path = dir.path().join("model.json");
    formats::write_model_json(&model_path, &fit).unwrap();
    commands::cmd_thresholds(
        &config,
        dir.path(),
        &model_path,
        &[0.95, 0.501, 0.99],
        &dir.path().join("sd.csv"),
    )
    .unwrap();
    let rows = formats::read_thresholds_csv(&dir.path().join("thresholds.csv")).unwrap();
    let ps: Vec<f64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(ps, vec![0.99, 0.95, 0.501]);
    let near_half = rows.last().unwrap();
    assert!(near_half.2 > 0.9, "p -> 0.5+ should keep nearly all cells, kept {}", near_half.2);
}

#[test]
fn fit_command_end_to_end() {
    let dir = tempdir();
    let mut config = small_config();
    config.rows = 8;
    config.cols = 8;
    config.n_trials = 60;
    commands::cmd_population(&config, dir.path(), None, 0).unwrap();
    commands::cmd_startup(&config, dir.path(), StartupMode::Simulate { cells: None }, 0).unwrap();
    commands::cmd_fit(
        &config,
        dir.path(),
        &dir.path().join("sd.csv"),
        &dir.path().join("counts.csv"),
        None,
    )
    .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit_report.json")).unwrap())
            .unwrap();
    assert!(report["double_improves_on_single"].as_bool().unwrap());
    formats::read_model_json(&dir.path().join("model_single.json")).unwrap();
    formats::read_model_json(&dir.path().join("model_double.json")).unwrap();

    // the histogram objective is available behind a flag
    commands::cmd_fit(
        &config,
        &dir.path().join("hist"),
        &dir.path().join("sd.csv"),
        &dir.path().join("counts.csv"),
        Some("histogram".into()),
    )
    .unwrap();
}

#[test]
fn malformed_inputs_exit_with_documented_codes() {
    let dir = tempdir();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "cell_id,n_ones,n_trials\n0,50,40\n").unwrap();
    let sd = dir.path().join("sd.csv");
    std::fs::write(&sd, "cell_id,sd_volts,bias,converged,iterations\n0,0.01,S1,true,5\n").unwrap();

    let out = bin()
        .args(["--out", dir.path().join("out").to_str().unwrap(), "fit"])
        .args(["--sd", sd.to_str().unwrap(), "--sup", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::MALFORMED));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("malformed"), "stderr: {stderr}");
    assert!(stderr.contains(":2:"), "stderr should carry the line number: {stderr}");

    // missing file surfaces as an I/O failure
    let out = bin()
        .args(["--out", dir.path().join("out2").to_str().unwrap(), "metrics", "nope.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::IO));

    // unknown config keys are rejected
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, r#"{"sigma": 1}"#).unwrap();
    let out = bin()
        .args(["--config", config_path.to_str().unwrap()])
        .args(["--out", dir.path().join("out3").to_str().unwrap(), "population", "--cells", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit_code::MALFORMED));
}

#[test]
fn metrics_command_single_and_pair() {
    let dir = tempdir();
    let r0 = dir.path().join("r0.csv");
    let r1 = dir.path().join("r1.csv");
    std::fs::write(&r0, "chip_id,bits\nc0,0110\n").unwrap();
    std::fs::write(&r1, "chip_id,bits\nc1,1001\n").unwrap();

    commands::cmd_metrics(&dir.path().join("single"), std::slice::from_ref(&r0), None).unwrap();
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("single/metrics_report.json")).unwrap(),
    )
    .unwrap();
    assert!(report["uniqueness"]["value_percent"].is_null());
    assert!(report["reliability"]["value_percent"].is_null());
    assert_eq!(report["uniformity"]["value_percent"].as_f64().unwrap(), 50.0);

    commands::cmd_metrics(&dir.path().join("pair"), &[r0.clone(), r1], None).unwrap();
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("pair/metrics_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["uniqueness"]["value_percent"].as_f64().unwrap(), 100.0);

    // reliability against repeats of the first chip
    let reps = dir.path().join("reps.csv");
    std::fs::write(&reps, "chip_id,bits\nc0,0110\nc0,0111\n").unwrap();
    commands::cmd_metrics(&dir.path().join("rel"), &[r0], Some(Path::new(&reps))).unwrap();
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("rel/metrics_report.json")).unwrap(),
    )
    .unwrap();
    let rel = report["reliability"]["value_percent"].as_f64().unwrap();
    assert!((rel - 87.5).abs() < 1e-9, "reliability {rel}");
}

#[test]
fn env_var_supplies_the_config() {
    let dir = tempdir();
    let config_path = dir.path().join("env_config.json");
    std::fs::write(&config_path, r#"{"seed": 5, "rows": 1, "cols": 4, "mismatch": {"sigma_vth_n": 0.0, "sigma_vth_p": 0.0}}"#)
        .unwrap();
    let out_dir = dir.path().join("out");
    let status = bin()
        .env("SEPSIM_CONFIG", config_path.to_str().unwrap())
        .args(["--out", out_dir.to_str().unwrap(), "population"])
        .status()
        .unwrap();
    assert!(status.success());
    let records = formats::read_sd_csv(&out_dir.join("sd.csv")).unwrap();
    assert_eq!(records.len(), 4);
    assert!(records.iter().all(|r| r.sd == 0.0));
}
