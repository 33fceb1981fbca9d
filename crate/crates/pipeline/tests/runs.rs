use std::fs;
use std::path::Path;
use std::process::Command;

use crashlab_pipeline::stages::{
    model_file, DATASET_FILE, DOE_FILE, IMPORTANCE_FILE, PREDICTIONS_FILE, SIMULATIONS_FILE,
};
use crashlab_pipeline::{emit_report, run_pipeline, with_workers, Pipeline, PipelineError, RunConfig, Stage, Target};

fn small(out: &Path, source: &str) -> RunConfig {
    let mut cfg = RunConfig::parse(&format!(
        "doe.n_samples = 10\ndata.source = {source}\nsymreg.targets = none\n\
         ml.grid.max_depth = 2,3\nml.grid.learning_rate = 0.1\nml.grid.n_rounds = 50\nml.grid.lambda = 1\n"
    ))
    .unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ten_sample_oracle_run_accounts_for_every_row() {
    let dir = tempfile::tempdir().unwrap();
    let art = run_pipeline(&small(dir.path(), "oracle")).unwrap();
    let sims = data_rows(&art.simulations);
    let dataset = data_rows(&art.dataset);
    assert_eq!(sims.len(), 10);
    let formed = sims.iter().filter(|r| r[8] == "1").count();
    let unformed = sims.iter().filter(|r| r[8] == "0").count();
    assert_eq!(formed + unformed, 10);
    assert_eq!(dataset.len(), formed);
    assert!(dataset.len() <= 10 && dataset.len() >= 3);
    for row in &dataset {
        assert_eq!(row.len(), 15);
        assert!(row[11..].iter().all(|v| v.parse::<f64>().is_ok()), "{row:?}");
    }
    for row in sims.iter().filter(|r| r[8] == "0") {
        assert!(row[11..].iter().all(String::is_empty));
    }
    assert!(art.models.iter().all(|m| m.is_file()));
    assert!(art.report.iter().any(|p| p.ends_with("importance.svg")));
    let manifest = fs::read_to_string(&art.manifest).unwrap();
    for f in [
        "doe.csv",
        "dataset.csv",
        "models/cle.json",
        "report/parity_ea.svg",
        "config.txt",
    ] {
        assert!(manifest.contains(&format!("\"{f}\"")), "{f} missing from manifest");
    }
}

#[test]
fn rerun_reproduces_manifest_and_skips_stages() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small(a.path(), "oracle_noisy");
    run_pipeline(&cfg).unwrap();
    let first = fs::read(a.path().join("manifest.json")).unwrap();
    let p = Pipeline::new(cfg.clone()).unwrap();
    for stage in p.plan() {
        assert!(p.run_stage(stage).unwrap().skipped, "{}", stage.name());
    }
    p.write_manifest().unwrap();
    assert_eq!(first, fs::read(a.path().join("manifest.json")).unwrap());

    // Fresh directory, one worker instead of the default pool.
    let mut cfg_b = cfg.clone();
    cfg_b.out = b.path().to_path_buf();
    cfg_b.workers = 1;
    run_pipeline(&cfg_b).unwrap();
    assert_eq!(first, fs::read(b.path().join("manifest.json")).unwrap());
}

#[test]
fn edited_input_reruns_downstream_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "oracle");
    let p = Pipeline::new(cfg).unwrap();
    for s in [Stage::Sample, Stage::Simulate, Stage::Extract] {
        p.run_stage(s).unwrap();
    }
    let sims = dir.path().join(SIMULATIONS_FILE);
    let text = fs::read_to_string(&sims).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    fs::write(&sims, lines.join("\n") + "\n").unwrap();
    let again = p.run_stage(Stage::Extract).unwrap();
    assert!(!again.skipped);
    // The stamp notices an output edited behind its back, too.
    fs::write(dir.path().join(DATASET_FILE), "tampered").unwrap();
    assert!(!p.run_stage(Stage::Extract).unwrap().skipped);
}

#[test]
fn importance_sums_to_one_and_perfect_fit_reads_unity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "oracle");
    run_pipeline(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join(IMPORTANCE_FILE)).unwrap();
    for t in Target::ALL {
        let sum: f64 = text
            .lines()
            .skip(1)
            .filter(|l| l.starts_with(&format!("{},", t.name())))
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((sum - 1.0).abs() <= 1e-9, "{}: {sum}", t.name());
    }

    // Replace every prediction with its true value and re-render.
    let pred = dir.path().join(PREDICTIONS_FILE);
    let perfect: String = fs::read_to_string(&pred)
        .unwrap()
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                format!("{l}\n")
            } else {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{},{}\n", f[0], f[1], f[2], f[2])
            }
        })
        .collect();
    fs::write(&pred, perfect).unwrap();
    let files = emit_report(&cfg).unwrap();
    let parity = files.iter().find(|p| p.ends_with("parity_ea.svg")).unwrap();
    assert!(fs::read_to_string(parity).unwrap().contains("R² = 1.000"));
}

#[test]
fn empty_or_absent_model_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path(), "oracle");
    run_pipeline(&cfg).unwrap();
    let model = dir.path().join(model_file(Target::Ea));
    fs::write(&model, "").unwrap();
    match emit_report(&cfg) {
        Err(PipelineError::MissingArtifact(p)) => assert_eq!(p, model),
        other => panic!("expected missing artifact, got {other:?}"),
    }
    fs::remove_file(&model).unwrap();
    let err = emit_report(&cfg).unwrap_err();
    assert!(err.to_string().contains("ea.json"), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn stage_errors_name_stage_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path(), "surrogate");
    cfg.forming_gate = false;
    let p = Pipeline::new(cfg.clone()).unwrap();
    p.run_stage(Stage::Sample).unwrap();
    // A zero-velocity impact never loads the wall, so CLE is undefined.
    cfg.solver.impact_velocity = 0.0;
    let p = Pipeline::new(cfg).unwrap();
    let err = p.run_stage(Stage::Simulate).unwrap_err();
    match &err {
        PipelineError::Stage { stage, sample, .. } => {
            assert_eq!(*stage, "simulate");
            assert!(sample.is_some());
        }
        other => panic!("{other:?}"),
    }
    assert!(err.to_string().contains("(sample "), "{err}");
}

#[test]
fn worker_count_does_not_change_surrogate_dataset() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (dir, workers) in [(&a, 1), (&b, 3)] {
        let mut cfg = small(dir.path(), "surrogate");
        cfg.n_samples = 40;
        let p = Pipeline::new(cfg).unwrap();
        with_workers(workers, || {
            for s in [Stage::Sample, Stage::Simulate, Stage::Extract] {
                p.run_stage(s).unwrap();
            }
        })
        .unwrap();
        bytes.push((
            fs::read(dir.path().join(DOE_FILE)).unwrap(),
            fs::read(dir.path().join(DATASET_FILE)).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_crashlab");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");

    fs::write(&cfg, "doe.n_sample = 10\n").unwrap();
    let out = Command::new(bin)
        .args(["sample", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("doe.n_sample"));

    fs::write(&cfg, "doe.n_samples = 0\n").unwrap();
    let out = Command::new(bin)
        .args(["sample", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let empty = dir.path().join("empty");
    let out = Command::new(bin)
        .arg("report")
        .arg("--out")
        .arg(&empty)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact"));

    fs::write(&cfg, "doe.n_samples = 6\n").unwrap();
    let run = dir.path().join("run");
    let out = Command::new(bin)
        .args(["sample", "--seed", "7", "--workers", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doe = fs::read_to_string(run.join(DOE_FILE)).unwrap();
    assert!(doe.starts_with("# seed=7 generator=chacha8\n"));
    assert_eq!(doe.lines().count(), 8);
    assert!(fs::read_to_string(run.join("config.txt"))
        .unwrap()
        .contains("run.seed = 7\n"));
}
