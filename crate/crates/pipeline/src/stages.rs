//! The chain of stages, each reading its predecessors' files from the output
//! directory and skipped when a stamp shows its inputs and outputs unchanged.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crashlab_core::doe::FEATURE_NAMES;
use crashlab_core::fmt::sig;
use crashlab_core::{lhs_sample, read_doe, write_doe};
use crashlab_ml::persist::{load_model, save_model};
use crashlab_ml::{
    eval_metrics, feature_importance, grid_search, kfold_cv, split_indices, BoostLearner, Dataset, Ensemble,
    EvalReport, ForestLearner, GridResult, Learner, Params,
};
use crashlab_symreg::evolve;
use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, RunConfig};
use crate::data::{
    ml_dataset, read_records, simulate_sample, surrogate_trace, write_records, SimRecord, Target, CSV_DIGITS,
};
use crate::error::{PipelineError, Result};
use crate::manifest::{write_manifest, Stamp};
use crate::plot;

pub const CONFIG_FILE: &str = "config.txt";
pub const DOE_FILE: &str = "doe.csv";
pub const SIMULATIONS_FILE: &str = "simulations.csv";
pub const DATASET_FILE: &str = "dataset.csv";
pub const TUNING_FILE: &str = "tuning.json";
pub const EVAL_FILE: &str = "eval.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const TRACES_DIR: &str = "traces";
pub const REPORT_DIR: &str = "report";

pub fn model_file(t: Target) -> PathBuf {
    Path::new("models").join(format!("{}.json", t.name()))
}

pub fn pareto_file(t: Target) -> PathBuf {
    PathBuf::from(format!("pareto_{}.csv", t.name()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sample,
    Simulate,
    Extract,
    Tune,
    Train,
    Symreg,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Sample,
        Stage::Simulate,
        Stage::Extract,
        Stage::Tune,
        Stage::Train,
        Stage::Symreg,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sample => "sample",
            Self::Simulate => "simulate",
            Self::Extract => "extract",
            Self::Tune => "tune",
            Self::Train => "train",
            Self::Symreg => "symreg",
            Self::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub stage: Stage,
    /// Relative to the output directory.
    pub outputs: Vec<PathBuf>,
    /// Outputs were already current.
    pub skipped: bool,
}

/// Files of a run, as absolute paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub out: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    pub config: PathBuf,
    pub doe: PathBuf,
    pub simulations: PathBuf,
    pub dataset: PathBuf,
    pub tuning: Option<PathBuf>,
    pub models: Vec<PathBuf>,
    pub eval: PathBuf,
    pub predictions: PathBuf,
    pub importance: PathBuf,
    pub pareto: Vec<PathBuf>,
    /// Report SVGs and the CSV behind the trace plot.
    pub report: Vec<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub params: Params,
    pub cv_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningEntry {
    pub best: Params,
    /// Fold-averaged scores of `best`.
    pub cv: EvalReport,
    pub table: Vec<GridRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningFile {
    pub model: String,
    pub cv_folds: usize,
    pub n_train: usize,
    pub targets: BTreeMap<String, TuningEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEval {
    pub hyperparameters: BTreeMap<String, f64>,
    /// k-fold scores on the training rows.
    pub cv: EvalReport,
    /// Scores on the held-out rows.
    pub test: EvalReport,
    pub importance: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFile {
    pub model: String,
    pub n_train: usize,
    pub n_test: usize,
    pub cv_folds: usize,
    pub targets: BTreeMap<String, TargetEval>,
}

/// One row of `predictions.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sample_id: usize,
    pub target: Target,
    pub y_true: f64,
    pub y_pred: f64,
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Runs `f` on a pool of `workers` threads, or on the global pool for 0.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Dataset, sample ids, train rows, test rows.
type LearningData = (Dataset, Vec<usize>, Vec<usize>, Vec<usize>);

/// A configured output directory.
pub struct Pipeline {
    cfg: RunConfig,
    out: PathBuf,
    hash: String,
}

impl Pipeline {
    /// Validates `cfg`, creates its output directory and records the
    /// resolved config there.
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let out = cfg.out.clone();
        fs::create_dir_all(&out).map_err(|e| PipelineError::io(&out, e))?;
        let p = Self {
            hash: cfg.hash(),
            cfg,
            out,
        };
        p.write(Path::new(CONFIG_FILE), p.cfg.canonical().as_bytes())?;
        Ok(p)
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn out(&self) -> &Path {
        &self.out
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    fn write(&self, rel: &Path, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))
    }

    fn open(&self, rel: &Path) -> Result<BufReader<fs::File>> {
        let path = self.out.join(rel);
        let f = fs::File::open(&path).map_err(|_| PipelineError::MissingArtifact(path.clone()))?;
        Ok(BufReader::new(f))
    }

    fn read_string(&self, rel: &Path) -> Result<String> {
        let path = self.out.join(rel);
        fs::read_to_string(&path).map_err(|_| PipelineError::MissingArtifact(path))
    }

    /// Stages that `run` executes, in order.
    pub fn plan(&self) -> Vec<Stage> {
        Stage::ALL
            .into_iter()
            .filter(|s| *s != Stage::Tune || self.cfg.ml.tune)
            .filter(|s| *s != Stage::Symreg || !self.cfg.symreg_targets.is_empty())
            .collect()
    }

    fn inputs(&self, stage: Stage) -> Vec<PathBuf> {
        let p = PathBuf::from;
        match stage {
            Stage::Sample => vec![],
            Stage::Simulate => vec![p(DOE_FILE)],
            Stage::Extract => vec![p(SIMULATIONS_FILE)],
            Stage::Tune | Stage::Symreg => vec![p(DATASET_FILE)],
            Stage::Train => {
                let mut v = vec![p(DATASET_FILE)];
                if self.cfg.ml.tune {
                    v.push(p(TUNING_FILE));
                }
                v
            }
            Stage::Report => {
                let mut v = vec![p(SIMULATIONS_FILE), p(PREDICTIONS_FILE), p(IMPORTANCE_FILE)];
                v.extend(Target::ALL.map(model_file));
                v.extend(self.cfg.symreg_targets.iter().map(|&t| pareto_file(t)));
                v
            }
        }
    }

    /// Runs one stage unless its stamp shows it is current.
    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        let key = Stamp::key(stage.name(), &self.hash, &self.out, &self.inputs(stage))?;
        if let Some(stamp) = Stamp::load(&self.out, stage.name()) {
            if stamp.key == key {
                if let Some(outputs) = stamp.intact_outputs(&self.out) {
                    return Ok(StageOutcome {
                        stage,
                        outputs,
                        skipped: true,
                    });
                }
            }
        }
        let outputs = match stage {
            Stage::Sample => self.sample()?,
            Stage::Simulate => self.simulate()?,
            Stage::Extract => self.extract()?,
            Stage::Tune => self.tune()?,
            Stage::Train => self.train()?,
            Stage::Symreg => self.symreg()?,
            Stage::Report => self.report()?,
        };
        Stamp::capture(key, &self.out, &outputs)?.save(&self.out, stage.name())?;
        Ok(StageOutcome {
            stage,
            outputs,
            skipped: false,
        })
    }

    /// Every planned stage, then the manifest.
    pub fn run_all(&self) -> Result<RunArtifacts> {
        for stage in self.plan() {
            self.run_stage(stage)?;
        }
        self.write_manifest()?;
        self.artifacts()
    }

    pub fn write_manifest(&self) -> Result<PathBuf> {
        write_manifest(&self.out, &self.hash, self.cfg.seed)
    }

    /// Paths of the files a complete run leaves behind.
    pub fn artifacts(&self) -> Result<RunArtifacts> {
        let abs = |rel: &Path| self.out.join(rel);
        let mut report = Vec::new();
        if let Ok(dir) = fs::read_dir(self.out.join(REPORT_DIR)) {
            for e in dir {
                let e = e.map_err(|e| PipelineError::io(self.out.join(REPORT_DIR), e))?;
                report.push(e.path());
            }
        }
        report.sort();
        Ok(RunArtifacts {
            out: self.out.clone(),
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
            config: abs(Path::new(CONFIG_FILE)),
            doe: abs(Path::new(DOE_FILE)),
            simulations: abs(Path::new(SIMULATIONS_FILE)),
            dataset: abs(Path::new(DATASET_FILE)),
            tuning: self.cfg.ml.tune.then(|| abs(Path::new(TUNING_FILE))),
            models: Target::ALL.iter().map(|&t| abs(&model_file(t))).collect(),
            eval: abs(Path::new(EVAL_FILE)),
            predictions: abs(Path::new(PREDICTIONS_FILE)),
            importance: abs(Path::new(IMPORTANCE_FILE)),
            pareto: self.cfg.symreg_targets.iter().map(|&t| abs(&pareto_file(t))).collect(),
            report,
            manifest: abs(Path::new(crate::manifest::MANIFEST_FILE)),
        })
    }

    fn sample(&self) -> Result<Vec<PathBuf>> {
        let doe = lhs_sample(&self.cfg.space, self.cfg.n_samples, self.cfg.seed)
            .and_then(|m| m.canonical())
            .map_err(|e| PipelineError::stage("sample", e))?;
        let mut buf = Vec::new();
        write_doe(&doe, &mut buf).map_err(|e| PipelineError::stage("sample", e))?;
        self.write(Path::new(DOE_FILE), &buf)?;
        Ok(vec![PathBuf::from(DOE_FILE)])
    }

    fn simulate(&self) -> Result<Vec<PathBuf>> {
        let doe = read_doe(self.open(Path::new(DOE_FILE))?, &self.cfg.space)
            .map_err(|e| PipelineError::stage("simulate", format!("{DOE_FILE}: {e}")))?;
        let keep_traces = self.cfg.write_traces;
        let results: Vec<_> = doe
            .points
            .par_iter()
            .enumerate()
            .map(|(i, p)| simulate_sample(&self.cfg, i, p).map(|(r, tr)| (r, if keep_traces { tr } else { None })))
            .collect::<Result<_>>()?;
        let mut outputs = vec![PathBuf::from(SIMULATIONS_FILE)];
        let traces_dir = self.out.join(TRACES_DIR);
        if traces_dir.exists() {
            fs::remove_dir_all(&traces_dir).map_err(|e| PipelineError::io(&traces_dir, e))?;
        }
        for (r, tr) in &results {
            if let Some(tr) = tr {
                let rel = Path::new(TRACES_DIR).join(format!("sample_{:05}.csv", r.sample_id));
                let mut buf = Vec::new();
                tr.write_csv(&mut buf)
                    .map_err(|e| PipelineError::sample("simulate", r.sample_id, e))?;
                self.write(&rel, &buf)?;
                outputs.push(rel);
            }
        }
        let mut buf = Vec::new();
        write_records(&mut buf, results.iter().map(|(r, _)| r)).map_err(|e| PipelineError::io(SIMULATIONS_FILE, e))?;
        self.write(Path::new(SIMULATIONS_FILE), &buf)?;
        Ok(outputs)
    }

    fn records(&self, rel: &str) -> Result<Vec<SimRecord>> {
        read_records(self.open(Path::new(rel))?, rel)
    }

    fn extract(&self) -> Result<Vec<PathBuf>> {
        let records = self.records(SIMULATIONS_FILE)?;
        let mut buf = Vec::new();
        write_records(&mut buf, records.iter().filter(|r| r.formed)).map_err(|e| PipelineError::io(DATASET_FILE, e))?;
        self.write(Path::new(DATASET_FILE), &buf)?;
        Ok(vec![PathBuf::from(DATASET_FILE)])
    }

    /// Dataset rows, their sample ids and the (train, test) row split.
    fn learning_data(&self, stage: &'static str) -> Result<LearningData> {
        let (ds, ids) = ml_dataset(&self.records(DATASET_FILE)?)?;
        let (train, test) = split_indices(ds.n_rows(), self.cfg.ml.test_fraction, self.cfg.seed)
            .map_err(|e| PipelineError::stage(stage, e))?;
        Ok((ds, ids, train, test))
    }

    /// Folds for `n` training rows: the configured count, capped so every
    /// fold keeps two rows (fold R² is undefined on one).
    fn folds(&self, stage: &'static str, n: usize) -> Result<usize> {
        if n < 4 {
            return Err(PipelineError::stage(
                stage,
                format!("{n} training rows; cross-validation needs at least 4"),
            ));
        }
        Ok(self.cfg.ml.cv_folds.min(n / 2))
    }

    fn tune(&self) -> Result<Vec<PathBuf>> {
        let (ds, _, train, _) = self.learning_data("tune")?;
        let x = ds.x.select(Axis(0), &train);
        let k = self.folds("tune", train.len())?;
        let grid = self.cfg.ml.grid.grid(self.cfg.ml.model);
        let mut targets = BTreeMap::new();
        for t in Target::ALL {
            let y: Vec<f64> = train.iter().map(|&i| ds.target(t.name()).expect("target")[i]).collect();
            let result = match self.cfg.ml.model {
                ModelKind::RandomForest => grid_search(x.view(), &y, &grid, k, &self.forest(), self.cfg.seed),
                _ => grid_search(x.view(), &y, &grid, k, &self.booster(), self.cfg.seed),
            };
            let GridResult { best, report, table } =
                result.map_err(|e| PipelineError::stage("tune", format!("{}: {e}", t.name())))?;
            targets.insert(
                t.name().to_string(),
                TuningEntry {
                    best,
                    cv: report.mean,
                    table: table
                        .into_iter()
                        .map(|(params, cv_mae)| GridRow { params, cv_mae })
                        .collect(),
                },
            );
        }
        let file = TuningFile {
            model: self.cfg.ml.model.name().to_string(),
            cv_folds: k,
            n_train: train.len(),
            targets,
        };
        self.write(Path::new(TUNING_FILE), &to_json(&file))?;
        Ok(vec![PathBuf::from(TUNING_FILE)])
    }

    fn booster(&self) -> BoostLearner {
        BoostLearner {
            base: self.cfg.boost_params(),
        }
    }

    fn forest(&self) -> ForestLearner {
        ForestLearner {
            base: self.cfg.forest_params(),
        }
    }

    fn fit(&self, params: &Params, x: ArrayView2<f64>, y: &[f64]) -> crashlab_ml::Result<Ensemble> {
        match self.cfg.ml.model {
            ModelKind::RandomForest => self.forest().fit(params, x, y),
            _ => self.booster().fit(params, x, y),
        }
    }

    fn cv(&self, params: &Params, x: ArrayView2<f64>, y: &[f64], k: usize) -> crashlab_ml::Result<EvalReport> {
        let r = match self.cfg.ml.model {
            ModelKind::RandomForest => kfold_cv(x, y, k, params, &self.forest(), self.cfg.seed),
            _ => kfold_cv(x, y, k, params, &self.booster(), self.cfg.seed),
        };
        r.map(|r| r.mean)
    }

    pub fn read_tuning(&self) -> Result<TuningFile> {
        let text = self.read_string(Path::new(TUNING_FILE))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::stage("train", format!("{TUNING_FILE}: {e}")))
    }

    pub fn read_eval(&self) -> Result<EvalFile> {
        let text = self.read_string(Path::new(EVAL_FILE))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::stage("report", format!("{EVAL_FILE}: {e}")))
    }

    fn train(&self) -> Result<Vec<PathBuf>> {
        let (ds, ids, train, test) = self.learning_data("train")?;
        let tuning = if self.cfg.ml.tune {
            Some(self.read_tuning()?)
        } else {
            None
        };
        let k = self.folds("train", train.len())?;
        let x_train = ds.x.select(Axis(0), &train);
        let x_test = ds.x.select(Axis(0), &test);
        let mut evals = BTreeMap::new();
        let mut predictions = String::from("sample_id,target,y_true,y_pred\n");
        let mut importance = String::from("target,feature,importance\n");
        let mut outputs = Vec::new();
        for t in Target::ALL {
            let fail = |e: &dyn std::fmt::Display| PipelineError::stage("train", format!("{}: {e}", t.name()));
            let y = ds.target(t.name()).expect("target");
            let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            let tuned = tuning.as_ref().map(|f| {
                f.targets
                    .get(t.name())
                    .ok_or_else(|| fail(&format!("no entry in {TUNING_FILE}")))
            });
            let (params, cv) = match tuned {
                Some(entry) => {
                    let entry = entry?;
                    (entry.best.clone(), entry.cv)
                }
                None => {
                    let params = Params::new();
                    let cv = self.cv(&params, x_train.view(), &y_train, k).map_err(|e| fail(&e))?;
                    (params, cv)
                }
            };
            let model = self.fit(&params, x_train.view(), &y_train).map_err(|e| fail(&e))?;
            let pred = model.predict(x_test.view());
            let report = eval_metrics(&y_test, &pred).map_err(|e| fail(&e))?;
            for ((&i, yt), yp) in test.iter().zip(&y_test).zip(&pred) {
                predictions.push_str(&format!(
                    "{},{},{},{}\n",
                    ids[i],
                    t.name(),
                    sig(*yt, CSV_DIGITS),
                    sig(*yp, CSV_DIGITS)
                ));
            }
            let imp = feature_importance(&model);
            for (name, v) in FEATURE_NAMES.iter().zip(&imp) {
                importance.push_str(&format!("{},{name},{v}\n", t.name()));
            }
            let mut buf = Vec::new();
            save_model(&model, &ds.feature_names, &mut buf).map_err(|e| fail(&e))?;
            self.write(&model_file(t), &buf)?;
            outputs.push(model_file(t));
            evals.insert(
                t.name().to_string(),
                TargetEval {
                    hyperparameters: model.hyperparameters.clone(),
                    cv,
                    test: report,
                    importance: FEATURE_NAMES.iter().map(|s| s.to_string()).zip(imp).collect(),
                },
            );
        }
        let file = EvalFile {
            model: self.cfg.ml.model.name().to_string(),
            n_train: train.len(),
            n_test: test.len(),
            cv_folds: k,
            targets: evals,
        };
        self.write(Path::new(EVAL_FILE), &to_json(&file))?;
        self.write(Path::new(PREDICTIONS_FILE), predictions.as_bytes())?;
        self.write(Path::new(IMPORTANCE_FILE), importance.as_bytes())?;
        outputs.extend([EVAL_FILE, PREDICTIONS_FILE, IMPORTANCE_FILE].map(PathBuf::from));
        Ok(outputs)
    }

    fn symreg(&self) -> Result<Vec<PathBuf>> {
        let records = self.records(DATASET_FILE)?;
        let rows: Vec<&SimRecord> = records
            .iter()
            .filter(|r| self.cfg.symreg_orientation.is_none_or(|o| r.point.orientation == o))
            .collect();
        let x: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                vec![
                    f64::from(r.point.n_layers),
                    r.point.thickness,
                    r.point.layer_temp,
                    r.point.tool_temp,
                ]
            })
            .collect();
        let cfg = self.cfg.symreg_config();
        let mut outputs = Vec::new();
        for &t in &self.cfg.symreg_targets {
            let y: Vec<f64> = rows.iter().map(|r| t.of(r.metrics.as_ref().expect("formed"))).collect();
            let front =
                evolve(&x, &y, &cfg).map_err(|e| PipelineError::stage("symreg", format!("{}: {e}", t.name())))?;
            let mut buf = Vec::new();
            front
                .write_csv(&mut buf)
                .map_err(|e| PipelineError::io(pareto_file(t), e))?;
            self.write(&pareto_file(t), &buf)?;
            outputs.push(pareto_file(t));
        }
        Ok(outputs)
    }

    pub fn read_predictions(&self) -> Result<Vec<Prediction>> {
        let text = self.read_string(Path::new(PREDICTIONS_FILE))?;
        let bad = |n: usize| PipelineError::stage("report", format!("{PREDICTIONS_FILE} line {n} is malformed"));
        text.lines()
            .enumerate()
            .skip(1)
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() != 4 {
                    return Err(bad(i + 1));
                }
                Ok(Prediction {
                    sample_id: f[0].parse().map_err(|_| bad(i + 1))?,
                    target: Target::from_name(f[1]).ok_or_else(|| bad(i + 1))?,
                    y_true: f[2].parse().map_err(|_| bad(i + 1))?,
                    y_pred: f[3].parse().map_err(|_| bad(i + 1))?,
                })
            })
            .collect()
    }

    /// `(target, feature, importance)` rows of `importance.csv`.
    pub fn read_importance(&self) -> Result<Vec<(Target, String, f64)>> {
        let text = self.read_string(Path::new(IMPORTANCE_FILE))?;
        let bad = |n: usize| PipelineError::stage("report", format!("{IMPORTANCE_FILE} line {n} is malformed"));
        text.lines()
            .enumerate()
            .skip(1)
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let f: Vec<&str> = l.split(',').collect();
                if f.len() != 3 {
                    return Err(bad(i + 1));
                }
                Ok((
                    Target::from_name(f[0]).ok_or_else(|| bad(i + 1))?,
                    f[1].to_string(),
                    f[2].parse().map_err(|_| bad(i + 1))?,
                ))
            })
            .collect()
    }

    fn report(&self) -> Result<Vec<PathBuf>> {
        let fail = |e: &dyn std::fmt::Display| PipelineError::stage("report", e);
        for t in Target::ALL {
            let path = self.out.join(model_file(t));
            let bytes = fs::read(&path).map_err(|_| PipelineError::MissingArtifact(path.clone()))?;
            if bytes.iter().all(u8::is_ascii_whitespace) {
                return Err(PipelineError::MissingArtifact(path));
            }
            load_model(&bytes[..]).map_err(|e| fail(&format!("{}: {e}", path.display())))?;
        }
        let dir = Path::new(REPORT_DIR);
        let report_dir = self.out.join(dir);
        if report_dir.exists() {
            fs::remove_dir_all(&report_dir).map_err(|e| PipelineError::io(&report_dir, e))?;
        }
        let mut outputs = Vec::new();
        let mut emit = |rel: PathBuf, body: String| -> Result<()> {
            self.write(&rel, body.as_bytes())?;
            outputs.push(rel);
            Ok(())
        };

        let predictions = self.read_predictions()?;
        for t in Target::ALL {
            let (yt, yp): (Vec<f64>, Vec<f64>) = predictions
                .iter()
                .filter(|p| p.target == t)
                .map(|p| (p.y_true, p.y_pred))
                .unzip();
            if yt.is_empty() {
                return Err(fail(&format!("no predictions for `{}`", t.name())));
            }
            let r2 = eval_metrics(&yt, &yp).map(|r| r.r2).unwrap_or(f64::NAN);
            let unit = t.column().split_once('_').map_or("", |(_, u)| u);
            let unit = if unit.is_empty() {
                String::new()
            } else {
                format!("({unit})")
            };
            emit(
                dir.join(format!("parity_{}.svg", t.name())),
                plot::parity(&format!("{} holdout", t.name()), &unit, &yt, &yp, r2),
            )?;
        }

        let importance = self.read_importance()?;
        let groups: Vec<(String, Vec<(String, f64)>)> = Target::ALL
            .iter()
            .map(|&t| {
                let items = importance
                    .iter()
                    .filter(|(tt, _, _)| *tt == t)
                    .map(|(_, f, v)| (f.clone(), *v))
                    .collect();
                (t.name().to_string(), items)
            })
            .collect();
        emit(
            dir.join("importance.svg"),
            plot::bars("feature importance (normalized gain)", &groups),
        )?;

        let records = self.records(SIMULATIONS_FILE)?;
        let chosen = records
            .iter()
            .find(|r| r.sample_id == self.cfg.trace_sample && r.formed)
            .or_else(|| records.iter().find(|r| r.formed));
        if let Some(r) = chosen {
            let tr = surrogate_trace(&self.cfg, r.sample_id, &r.point)?;
            let mut csv = Vec::new();
            tr.write_csv(&mut csv).map_err(|e| fail(&e))?;
            emit(
                dir.join(format!("trace_{:05}.csv", r.sample_id)),
                String::from_utf8(csv).expect("ascii"),
            )?;
            let t_ms: Vec<f64> = (0..tr.len()).map(|i| tr.time(i) * 1e3).collect();
            let force_kn: Vec<f64> = tr.force.iter().map(|f| f / 1e3).collect();
            let total: Vec<f64> = (0..tr.len())
                .map(|i| tr.kinetic_energy[i] + tr.internal_energy[i] + tr.dissipated_energy[i])
                .collect();
            let svg = plot::lines(
                &format!("sample {} impact", r.sample_id),
                "time (ms)",
                &t_ms,
                &[
                    ("contact force (kN)", vec![("force", &force_kn[..])]),
                    (
                        "energy (J)",
                        vec![
                            ("kinetic", &tr.kinetic_energy[..]),
                            ("internal", &tr.internal_energy[..]),
                            ("dissipated", &tr.dissipated_energy[..]),
                            ("total", &total[..]),
                        ],
                    ),
                ],
            );
            emit(dir.join(format!("trace_{:05}.svg", r.sample_id)), svg)?;
        }

        for &t in &self.cfg.symreg_targets {
            let text = self.read_string(&pareto_file(t))?;
            let (c, m): (Vec<f64>, Vec<f64>) = text
                .lines()
                .skip(1)
                .filter_map(|l| {
                    let mut f = l.splitn(3, ',');
                    Some((f.next()?.parse::<f64>().ok()?, f.next()?.parse::<f64>().ok()?))
                })
                .unzip();
            emit(
                dir.join(format!("pareto_{}.svg", t.name())),
                plot::pareto(&format!("{} Pareto front", t.name()), &c, &m),
            )?;
        }
        Ok(outputs)
    }
}
