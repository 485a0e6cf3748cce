use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mismatch_lab::experiment::{ExperimentConfig, ExperimentKind, ExperimentSpec, LearnParams, StrategicParams};
use mismatch_lab::models::{save_model, ModelDoc, ModelFile};
use mismatch_lab::rng::Stream;
use mismatch_lab::TabularMdp;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mismatch-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> String {
    let path = dir.join("config.json");
    fs::write(&path, cfg.to_json().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn gallery_list_names_every_entry() {
    let o = lab(&["gallery", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["weak_pomdp", "weak_fully", "robust_weak", "setwise_cont", "setwise_robust"] {
        assert!(text.contains(name), "{name} missing from {text}");
    }
}

#[test]
fn gallery_dump_is_json() {
    let o = lab(&["gallery", "dump", "setwise_robust", "--n", "4", "--beta", "0.3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["kind"], "setwise_robust");
    assert_eq!(v["design"]["discount"], 0.3);
    assert!(!lab(&["gallery", "dump", "nonsense"]).status.success());
}

#[test]
fn gallery_run_with_check_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = lab(&["gallery", "run", "--out", out.to_str().unwrap(), "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("gallery.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 15);
    assert!(out.join("gallery.jsonl").exists() && out.join("manifest.json").exists());
}

#[test]
fn config_run_seed_override_and_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::Learn(LearnParams {
        sample_sizes: vec![100, 1000],
        seeds: vec![0, 1],
        ..LearnParams::default()
    });
    let cfg = ExperimentConfig::new(5, dir.path().join("from-config"), spec);
    let path = write_config(dir.path(), &cfg);
    let out = dir.path().join("learn");
    let o = lab(&["learn", "--config", &path, "--out", out.to_str().unwrap(), "--seed", "9", "--jobs", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("from-config").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 9);
    let header = fs::read_to_string(out.join("learning.csv")).unwrap();
    assert!(header.starts_with(
        "N,seed,estimator,sup_tv,sup_w1,j_opt_true,j_cross,loss,robustness_bound,bound_holds,unvisited_cells\n"
    ));

    let plots = dir.path().join("plots");
    let o = lab(&["plotdata", out.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert!(o.status.success());
    let dat = fs::read_to_string(plots.join("learning_loss.dat")).unwrap();
    assert_eq!(dat.lines().next().unwrap(), "# N median_loss q25_loss q75_loss median_nonincreasing");
    assert_eq!(dat.lines().count(), 3);
}

#[test]
fn kind_mismatch_and_bad_config_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(1, dir.path().join("o"), ExperimentSpec::Strategic(StrategicParams::default()));
    let path = write_config(dir.path(), &cfg);
    let o = lab(&["bounds", "--config", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment.kind"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, cfg.to_json().unwrap().replace("\"tol\": 1e-9", "\"tol\": -1.0")).unwrap();
    let o = lab(&["strategic", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`tol`"));
}

#[test]
fn validate_accepts_configs_and_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(1, "o", ExperimentSpec::default_for(ExperimentKind::SupGap));
    let path = write_config(dir.path(), &cfg);
    let o = lab(&["validate", &path]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("sup-gap"));

    let model = TabularMdp::random(&mut Stream::new(1), 3, 2, 0.9);
    let mpath = dir.path().join("model.json");
    save_model(&mpath, &ModelFile::new(ModelDoc::TabularMdp(model.clone()))).unwrap();
    let o = lab(&["validate", mpath.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut broken = model;
    broken.kernel[0][0][0] += 0.5;
    fs::write(&mpath, ModelFile::new(ModelDoc::TabularMdp(broken)).to_json().unwrap()).unwrap();
    assert_eq!(lab(&["validate", mpath.to_str().unwrap()]).status.code(), Some(1));
}
