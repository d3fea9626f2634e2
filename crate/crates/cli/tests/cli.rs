use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slelab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slelab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("SLELAB_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_rejected_with_suggestion() {
    let t = tempfile::tempdir().unwrap();
    let o = slelab(t.path(), &["sle-sample", "kapa=4"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("did you mean \"kappa\""), "{}", stderr(&o));
}

#[test]
fn sle_sample_writes_ensemble_and_swallow_events() {
    let t = tempfile::tempdir().unwrap();
    let o = slelab(t.path(), &["sle-sample", "force_x=0.05", "force_rho=-1.5", "n_paths=20", "n_steps=200", "seed=3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(t.path());
    assert_eq!(m["command"], "sle-sample");
    assert_eq!(m["params"]["force_x"], "0.05");
    assert!(m["summary"]["swallow_events"].is_array());
    let completed = m["summary"]["n_completed"].as_u64().unwrap() as usize;
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2 * completed);
    assert!(t.path().join("paths/path_00000.csv").exists());
}

#[test]
fn trace_of_zero_driving_is_vertical_and_zips_back() {
    let t = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,W\n");
    for k in 0..=400 {
        csv.push_str(&format!("{},0\n", k as f64 / 400.0));
    }
    let input = t.path().join("zero.csv");
    fs::write(&input, csv).unwrap();
    let tdir = t.path().join("trace");
    let o = slelab(&tdir, &["trace", &format!("input_driving={}", input.display()), "formats=csv,json,svg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&tdir);
    let tip = &m["summary"]["tip"];
    assert!(tip[0].as_f64().unwrap().abs() < 1e-9);
    assert!((tip[1].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!(m["summary"]["round_trip_sup_error"].as_f64().unwrap() < 1e-9);
    assert!(fs::read_to_string(tdir.join("trace.svg")).unwrap().starts_with("<svg"));

    let zdir = t.path().join("zip");
    let o = slelab(
        &zdir,
        &[
            "zip",
            &format!("input_curve={}", tdir.join("trace.csv").display()),
            &format!("reference_driving={}", input.display()),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(manifest(&zdir)["summary"]["sup_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn malformed_csv_names_the_row() {
    let t = tempfile::tempdir().unwrap();
    let input = t.path().join("bad.csv");
    fs::write(&input, "t,W\n0,0\n0.5,0.1\n0.7,abc\n").unwrap();
    let o = slelab(t.path(), &["trace", &format!("input_driving={}", input.display())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn cft_check_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(&slelab(t.path(), &["cft-check", "identity=m2", "q=1"])), 0);
    assert_eq!(code(&slelab(t.path(), &["cft-check", "identity=m2", "q=1/2", "alpha=0"])), 4);
    let o = slelab(t.path(), &["cft-check", "identity=deformed-null", "q_i=1/2", "spectators=2:1,-1/3:3/2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = slelab(t.path(), &["cft-check", "identity=deformed-null", "q_i=1/2", "spectators=2:1", "rho=1"]);
    assert_eq!(code(&o), 4);
    assert_eq!(code(&slelab(t.path(), &["cft-check", "identity=perturbed", "q=2/3", "s=9/4"])), 0);
    assert_eq!(code(&slelab(t.path(), &["cft-check", "identity=m2", "q=1/0"])), 2);
    let o = slelab(t.path(), &["cft-check", "identity=all"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(t.path().join("verification.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn radius_below_minimum_is_a_validation_error() {
    let t = tempfile::tempdir().unwrap();
    let o = slelab(t.path(), &["experiment", "experiment=levelline-kappa", "radius_sites=32"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = slelab(t.path(), &["experiment", "experiment=nope"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn levelline_outputs_are_byte_identical_on_rerun() {
    let t = tempfile::tempdir().unwrap();
    let args = ["levelline", "radius_sites=64", "n_samples=50", "seed=9", "formats=csv,svg"];
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert_eq!(code(&slelab(&a, &args)), 0);
    assert_eq!(code(&slelab(&b, &args)), 0);
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
    assert_eq!(fs::read(a.join("line_0007.csv")).unwrap(), fs::read(b.join("line_0007.csv")).unwrap());
    assert!(manifest(&a)["summary"]["n_failed"].as_u64().unwrap() <= 2);
}

#[test]
fn config_file_and_replay() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("gff.conf");
    fs::write(&cfg, "# small field\nradius_sites = 16\nkappa_lat = 10\nn_samples = 2\nseed = 4\n").unwrap();
    let run = t.path().join("run");
    let o = slelab(&run, &["gff", "--config", cfg.to_str().unwrap(), "n_samples=3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = manifest(&run);
    assert_eq!(m["params"]["n_samples"], "3");
    assert_eq!(m["params"]["radius_sites"], "16");
    let o = slelab(&t.path().join("again"), &["replay", run.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("6 files identical"));
}

#[test]
fn replay_detects_tampering() {
    let t = tempfile::tempdir().unwrap();
    let run = t.path().join("run");
    assert_eq!(code(&slelab(&run, &["cft-check", "identity=m2", "q=3/2"])), 0);
    let text = fs::read_to_string(run.join("manifest.json")).unwrap();
    let mut m: serde_json::Value = serde_json::from_str(&text).unwrap();
    m["outputs"][0]["sha256"] = serde_json::json!("00");
    fs::write(run.join("manifest.json"), serde_json::to_string(&m).unwrap()).unwrap();
    let o = slelab(&t.path().join("again"), &["replay", run.join("manifest.json").to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn output_directory_from_environment() {
    let t = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_slelab"))
        .args(["--workers", "1", "cft-check", "identity=perturbed", "q=1/2", "s=4"])
        .env("SLELAB_OUT", t.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(t.path().join("verification.json").exists());
}

#[test]
fn experiment_report_and_plots() {
    let t = tempfile::tempdir().unwrap();
    let o = slelab(
        t.path(),
        &["experiment", "experiment=levelline-kappa", "radius_sites=64", "n_samples=40", "n_boot=20", "formats=json,csv,svg"],
    );
    // A 40-sample run may land outside the κ̂ band; both outcomes are legitimate here.
    assert!(matches!(code(&o), 0 | 4), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "levelline-kappa");
    assert_eq!(report["provenance"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(t.path().join("variance.svg").exists());
    assert!(fs::read_to_string(t.path().join("series.csv")).unwrap().starts_with("series,x,y,yerr"));
}
