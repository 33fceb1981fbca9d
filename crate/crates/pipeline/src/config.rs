//! Flat `key = value` run configuration.
//!
//! Lines are `namespace.key = value`; `#` starts a comment. Every key has a
//! default, unknown keys are rejected, and [`RunConfig::canonical`] prints
//! the full resolved set, which is what the config hash covers. The worker
//! count and output directory do not affect results and are left out.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crashlab_core::{
    Damping, FormingModel, MaterialCard, Orientation, ParameterSpace, RomConstants, SolverSettings, ToolGeometry,
};
use crashlab_ml::{BoostParams, BoostVariant, ForestParams, Grid};
use crashlab_symreg::SymregConfig;
use sha2::{Digest, Sha256};

use crate::data::Target;
use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataSource {
    /// Forming gate plus the reduced-order crash model.
    Surrogate,
    /// Reference equations evaluated at each formed design.
    Oracle,
    /// Reference equations times `1 + σ·N(0, 1)` with `σ = data.noise_rel`.
    OracleNoisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gbt,
    GbtRegularized,
    RandomForest,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gbt => "gbt",
            Self::GbtRegularized => "gbt_regularized",
            Self::RandomForest => "random_forest",
        }
    }
}

/// Candidate lists for grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub max_depth: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub n_rounds: Vec<f64>,
    pub lambda: Vec<f64>,
    pub n_trees: Vec<f64>,
    /// Forest depths; negative means unlimited.
    pub rf_max_depth: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            max_depth: vec![2.0, 3.0, 4.0],
            learning_rate: vec![0.05, 0.1, 0.3],
            n_rounds: vec![100.0, 300.0],
            lambda: vec![0.0, 1.0],
            n_trees: vec![100.0, 300.0],
            rf_max_depth: vec![-1.0],
        }
    }
}

impl GridConfig {
    pub fn grid(&self, kind: ModelKind) -> Grid {
        let mut g = Grid::new();
        match kind {
            ModelKind::Gbt | ModelKind::GbtRegularized => {
                g.insert("max_depth".into(), self.max_depth.clone());
                g.insert("learning_rate".into(), self.learning_rate.clone());
                g.insert("n_rounds".into(), self.n_rounds.clone());
                if kind == ModelKind::GbtRegularized {
                    g.insert("lambda".into(), self.lambda.clone());
                }
            }
            ModelKind::RandomForest => {
                g.insert("n_trees".into(), self.n_trees.clone());
                g.insert("max_depth".into(), self.rf_max_depth.clone());
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlConfig {
    pub model: ModelKind,
    pub test_fraction: f64,
    pub cv_folds: usize,
    /// Grid-search hyperparameters before training.
    pub tune: bool,
    pub boost: BoostParams,
    pub forest: ForestParams,
    pub grid: GridConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub space: ParameterSpace,
    pub data_source: DataSource,
    pub noise_rel: f64,
    /// Drop designs that fail forming. Off, every sampled design is kept.
    pub forming_gate: bool,
    pub forming: FormingModel,
    pub geometry: ToolGeometry,
    pub material: MaterialCard<f64>,
    pub rom: RomConstants<f64>,
    pub solver: SolverSettings<f64>,
    pub ml: MlConfig,
    pub symreg: SymregConfig,
    /// Rows used for symbolic regression; `None` keeps all.
    pub symreg_orientation: Option<Orientation>,
    /// Targets searched; `none` in the config file skips the stage.
    pub symreg_targets: Vec<Target>,
    /// Sample whose force and energy history the report plots.
    pub trace_sample: usize,
    /// Write every surrogate trace under `traces/`.
    pub write_traces: bool,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_samples: 400,
            space: ParameterSpace::default(),
            data_source: DataSource::Surrogate,
            noise_rel: 0.01,
            forming_gate: true,
            forming: FormingModel::default(),
            geometry: ToolGeometry::default(),
            material: MaterialCard::default(),
            rom: RomConstants::default(),
            solver: SolverSettings::default(),
            ml: MlConfig {
                model: ModelKind::GbtRegularized,
                test_fraction: 0.2,
                cv_folds: 5,
                tune: true,
                boost: BoostParams::default(),
                forest: ForestParams::default(),
                grid: GridConfig::default(),
            },
            symreg: SymregConfig::default(),
            symreg_orientation: Some(Orientation::B),
            symreg_targets: vec![Target::Intrusion, Target::Decel, Target::Ea],
            trace_sample: 0,
            write_traces: false,
            workers: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// Text form of a config value.
trait Value: Sized {
    fn parse(raw: &str) -> std::result::Result<Self, String>;
    fn show(&self) -> String;
}

fn parse_num<T: std::str::FromStr>(raw: &str) -> std::result::Result<T, String> {
    raw.parse().map_err(|_| format!("cannot parse `{raw}` as a number"))
}

impl Value for f64 {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        let v: f64 = parse_num(raw)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("`{raw}` is not finite"))
        }
    }
    fn show(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! integer_value {
    ($($t:ty),*) => {$(
        impl Value for $t {
            fn parse(raw: &str) -> std::result::Result<Self, String> {
                parse_num(raw)
            }
            fn show(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
integer_value!(u32, u64, usize);

impl Value for bool {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        match raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(format!("`{raw}` is not a boolean")),
        }
    }
    fn show(&self) -> String {
        self.to_string()
    }
}

impl Value for Option<usize> {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        if raw == "none" {
            Ok(None)
        } else {
            parse_num(raw).map(Some)
        }
    }
    fn show(&self) -> String {
        self.map_or_else(|| "none".into(), |v| v.to_string())
    }
}

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl Value for Vec<f64> {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        split_list(raw).map(<f64 as Value>::parse).collect()
    }
    fn show(&self) -> String {
        self.iter().map(Value::show).collect::<Vec<_>>().join(",")
    }
}

impl Value for Vec<Orientation> {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        split_list(raw)
            .map(|s| Orientation::from_label(s).ok_or_else(|| format!("unknown orientation set `{s}`")))
            .collect()
    }
    fn show(&self) -> String {
        self.iter().map(|o| o.label()).collect::<Vec<_>>().join(",")
    }
}

impl Value for Option<Orientation> {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        if raw == "all" {
            Ok(None)
        } else {
            Orientation::from_label(raw)
                .map(Some)
                .ok_or_else(|| format!("unknown orientation set `{raw}`"))
        }
    }
    fn show(&self) -> String {
        self.map_or_else(|| "all".into(), |o| o.label().to_string())
    }
}

impl Value for Vec<Target> {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        if raw == "none" {
            return Ok(Vec::new());
        }
        split_list(raw)
            .map(|s| Target::from_name(s).ok_or_else(|| format!("unknown target `{s}`")))
            .collect()
    }
    fn show(&self) -> String {
        if self.is_empty() {
            return "none".into();
        }
        self.iter().map(|t| t.name()).collect::<Vec<_>>().join(",")
    }
}

impl Value for DataSource {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        match raw {
            "surrogate" => Ok(Self::Surrogate),
            "oracle" => Ok(Self::Oracle),
            "oracle_noisy" => Ok(Self::OracleNoisy),
            _ => Err(format!("unknown data source `{raw}` (surrogate, oracle, oracle_noisy)")),
        }
    }
    fn show(&self) -> String {
        match self {
            Self::Surrogate => "surrogate",
            Self::Oracle => "oracle",
            Self::OracleNoisy => "oracle_noisy",
        }
        .into()
    }
}

impl Value for ModelKind {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        match raw {
            "gbt" => Ok(Self::Gbt),
            "gbt_regularized" => Ok(Self::GbtRegularized),
            "random_forest" => Ok(Self::RandomForest),
            _ => Err(format!("unknown model `{raw}` (gbt, gbt_regularized, random_forest)")),
        }
    }
    fn show(&self) -> String {
        self.name().into()
    }
}

/// `ratio:<ζ>` (fraction of critical) or `beta:<s>` (stiffness-proportional).
impl Value for Damping<f64> {
    fn parse(raw: &str) -> std::result::Result<Self, String> {
        let (kind, v) = raw
            .split_once(':')
            .ok_or_else(|| format!("damping `{raw}` must be ratio:<value> or beta:<value>"))?;
        let v = <f64 as Value>::parse(v.trim())?;
        match kind.trim() {
            "ratio" => Ok(Damping::Ratio(v)),
            "beta" => Ok(Damping::Beta(v)),
            _ => Err(format!("unknown damping kind `{kind}`")),
        }
    }
    fn show(&self) -> String {
        match self {
            Damping::Ratio(v) => format!("ratio:{v:?}"),
            Damping::Beta(v) => format!("beta:{v:?}"),
        }
    }
}

macro_rules! config_keys {
    ($($key:literal => $($field:tt).+ : $t:ty;)*) => {
        impl RunConfig {
            /// Every recognized key.
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            /// Sets one key from its text value.
            pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
                match key {
                    $($key => {
                        self.$($field).+ = <$t as Value>::parse(raw.trim())
                            .map_err(|e| PipelineError::Config(format!("`{key}`: {e}")))?;
                    })*
                    _ => return Err(PipelineError::Config(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$(($key, <$t as Value>::show(&self.$($field).+))),*]
            }
        }
    };
}

config_keys! {
    "run.seed" => seed: u64;
    "doe.n_samples" => n_samples: usize;
    "doe.n_layers_min" => space.n_layers.0: u32;
    "doe.n_layers_max" => space.n_layers.1: u32;
    "doe.thickness_min" => space.thickness.lo: f64;
    "doe.thickness_max" => space.thickness.hi: f64;
    "doe.orientation_sets" => space.orientation_sets: Vec<Orientation>;
    "doe.punch_velocity_min" => space.punch_velocity.lo: f64;
    "doe.punch_velocity_max" => space.punch_velocity.hi: f64;
    "doe.layer_temp_min" => space.layer_temp.lo: f64;
    "doe.layer_temp_max" => space.layer_temp.hi: f64;
    "doe.tool_temp_min" => space.tool_temp.lo: f64;
    "doe.tool_temp_max" => space.tool_temp.hi: f64;
    "doe.air_temp_min" => space.air_temp.lo: f64;
    "doe.air_temp_max" => space.air_temp.hi: f64;
    "data.source" => data_source: DataSource;
    "data.noise_rel" => noise_rel: f64;
    "forming.gate" => forming_gate: bool;
    "forming.w_temp" => forming.w_temp: f64;
    "forming.w_velocity" => forming.w_velocity: f64;
    "forming.w_stack" => forming.w_stack: f64;
    "forming.w_gap" => forming.w_gap: f64;
    "forming.temp_ref" => forming.temp_ref: f64;
    "forming.velocity_ref" => forming.velocity_ref: f64;
    "forming.stack_ref" => forming.stack_ref: f64;
    "forming.gap_ref" => forming.gap_ref: f64;
    "forming.max_shear_deg" => forming.max_shear_deg: f64;
    "forming.shear_velocity_min" => forming.shear_velocity.lo: f64;
    "forming.shear_velocity_max" => forming.shear_velocity.hi: f64;
    "forming.shear_temp_min" => forming.shear_temp.lo: f64;
    "forming.shear_temp_max" => forming.shear_temp.hi: f64;
    "forming.punch_outer_area" => geometry.punch_outer_area: f64;
    "forming.sheet_length" => geometry.sheet_length: f64;
    "forming.sheet_width" => geometry.sheet_width: f64;
    "material.density" => material.density: f64;
    "material.e1" => material.e1: f64;
    "material.e2" => material.e2: f64;
    "material.g12" => material.g12: f64;
    "material.nu12" => material.nu12: f64;
    "material.yield_stress" => material.yield_stress: f64;
    "material.hardening_multiplier" => material.hardening_multiplier: f64;
    "material.hardening_exponent" => material.hardening_exponent: f64;
    "material.tensile_initial_strain" => material.tensile_initial_strain: f64;
    "material.tensile_ultimate_strain" => material.tensile_ultimate_strain: f64;
    "material.ultimate_damage" => material.ultimate_damage: f64;
    "solver.characteristic_length" => rom.characteristic_length: f64;
    "solver.load_path_width" => rom.load_path_width: f64;
    "solver.payload_mass" => rom.payload_mass: f64;
    "solver.damping" => rom.damping: Damping<f64>;
    "solver.friction" => rom.friction: f64;
    "solver.impact_velocity" => solver.impact_velocity: f64;
    "solver.duration" => solver.duration: f64;
    "solver.dt_out" => solver.dt_out: f64;
    "solver.step_fraction" => solver.step_fraction: f64;
    "ml.model" => ml.model: ModelKind;
    "ml.test_fraction" => ml.test_fraction: f64;
    "ml.cv_folds" => ml.cv_folds: usize;
    "ml.tune" => ml.tune: bool;
    "ml.gbt.n_rounds" => ml.boost.n_rounds: usize;
    "ml.gbt.learning_rate" => ml.boost.learning_rate: f64;
    "ml.gbt.max_depth" => ml.boost.max_depth: Option<usize>;
    "ml.gbt.min_samples_leaf" => ml.boost.min_samples_leaf: usize;
    "ml.gbt.lambda" => ml.boost.lambda: f64;
    "ml.gbt.gamma" => ml.boost.gamma: f64;
    "ml.rf.n_trees" => ml.forest.n_trees: usize;
    "ml.rf.max_depth" => ml.forest.max_depth: Option<usize>;
    "ml.rf.min_samples_leaf" => ml.forest.min_samples_leaf: usize;
    "ml.rf.feature_subsample" => ml.forest.feature_subsample: f64;
    "ml.rf.bootstrap" => ml.forest.bootstrap: bool;
    "ml.grid.max_depth" => ml.grid.max_depth: Vec<f64>;
    "ml.grid.learning_rate" => ml.grid.learning_rate: Vec<f64>;
    "ml.grid.n_rounds" => ml.grid.n_rounds: Vec<f64>;
    "ml.grid.lambda" => ml.grid.lambda: Vec<f64>;
    "ml.grid.n_trees" => ml.grid.n_trees: Vec<f64>;
    "ml.grid.rf_max_depth" => ml.grid.rf_max_depth: Vec<f64>;
    "symreg.orientation" => symreg_orientation: Option<Orientation>;
    "symreg.targets" => symreg_targets: Vec<Target>;
    "symreg.population" => symreg.population: usize;
    "symreg.generations" => symreg.generations: usize;
    "symreg.tournament" => symreg.tournament: usize;
    "symreg.crossover_rate" => symreg.crossover_rate: f64;
    "symreg.mutation_rate" => symreg.mutation_rate: f64;
    "symreg.max_complexity" => symreg.max_complexity: usize;
    "symreg.parsimony" => symreg.parsimony: f64;
    "symreg.elite" => symreg.elite: usize;
    "symreg.constant_evals" => symreg.constant_evals: usize;
    "symreg.polish_evals" => symreg.polish_evals: usize;
    "symreg.holdout_fraction" => symreg.holdout_fraction: f64;
    "symreg.time_budget_s" => symreg.time_budget_s: f64;
    "report.trace_sample" => trace_sample: usize;
    "report.write_traces" => write_traces: bool;
}

impl RunConfig {
    /// Defaults overridden by the lines of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(PipelineError::Config(format!("line {}: `{key}` set twice", i + 1)));
            }
            cfg.set(key, value).map_err(|e| {
                PipelineError::Config(format!(
                    "line {}: {}",
                    i + 1,
                    e.to_string().trim_start_matches("config: ")
                ))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.n_samples == 0 {
            return bad("doe.n_samples must be at least 1".into());
        }
        self.space
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.noise_rel >= 0.0) {
            return bad(format!("data.noise_rel = {} must be nonnegative", self.noise_rel));
        }
        self.material
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        crashlab_core::cutout_size(&self.geometry).map_err(|e| PipelineError::Config(e.to_string()))?;
        let s = &self.solver;
        if !(s.duration > 0.0
            && s.dt_out > 0.0
            && s.step_fraction > 0.0
            && s.step_fraction <= 0.5
            && s.impact_velocity >= 0.0)
        {
            return bad(
                "solver duration, dt_out and impact velocity must be positive and step_fraction in (0, 0.5]".into(),
            );
        }
        let r = &self.rom;
        if !(r.characteristic_length > 0.0 && r.load_path_width > 0.0 && r.payload_mass >= 0.0) {
            return bad("solver lengths must be positive and payload nonnegative".into());
        }
        match r.damping {
            Damping::Ratio(v) | Damping::Beta(v) if !(v >= 0.0) => return bad("damping must be nonnegative".into()),
            _ => {}
        }
        if !(self.ml.test_fraction > 0.0 && self.ml.test_fraction < 1.0) {
            return bad("ml.test_fraction must lie in (0, 1)".into());
        }
        if self.ml.cv_folds < 2 {
            return bad("ml.cv_folds must be at least 2".into());
        }
        if self.ml.boost.n_rounds == 0 || !(self.ml.boost.learning_rate > 0.0 && self.ml.boost.learning_rate <= 1.0) {
            return bad("ml.gbt.n_rounds must be positive and learning_rate in (0, 1]".into());
        }
        if self.ml.forest.n_trees == 0
            || !(self.ml.forest.feature_subsample > 0.0 && self.ml.forest.feature_subsample <= 1.0)
        {
            return bad("ml.rf.n_trees must be positive and feature_subsample in (0, 1]".into());
        }
        if self.ml.tune {
            crashlab_ml::grid_combinations(&self.ml.grid.grid(self.ml.model))
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        self.symreg
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.symreg.generations == 0 || !(self.symreg.time_budget_s > 0.0) {
            return bad("symreg generation and time budgets must be positive".into());
        }
        Ok(())
    }

    /// Boosting parameters with the variant implied by `ml.model`.
    pub fn boost_params(&self) -> BoostParams {
        BoostParams {
            variant: if self.ml.model == ModelKind::Gbt {
                BoostVariant::Plain
            } else {
                BoostVariant::Regularized
            },
            ..self.ml.boost
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            seed: self.seed,
            ..self.ml.forest
        }
    }

    pub fn symreg_config(&self) -> SymregConfig {
        SymregConfig {
            seed: self.seed,
            ..self.symreg.clone()
        }
    }

    /// Every key with its resolved value, one `key = value` per line in
    /// key order.
    pub fn canonical(&self) -> String {
        let mut entries = self.entries();
        entries.sort();
        let mut s = String::new();
        for (k, v) in entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let cfg = RunConfig::default();
        let back = RunConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(RunConfig::KEYS.len(), cfg.entries().len());
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = RunConfig::parse(
            "# demo\ndoe.n_samples = 10   # small\ndata.source=oracle_noisy\nsolver.damping = beta:0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.n_samples, 10);
        assert_eq!(cfg.data_source, DataSource::OracleNoisy);
        assert_eq!(cfg.rom.damping, Damping::Beta(0.01));
        assert_ne!(cfg.hash(), RunConfig::default().hash());
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "doe.nsamples = 3",
            "doe.n_samples = 0",
            "doe.n_samples = three",
            "data.source = fea",
            "no equals sign",
            "run.seed = 1\nrun.seed = 2",
            "data.noise_rel = -0.1",
            "ml.grid.max_depth = ",
            "doe.thickness_min = 0.7",
        ] {
            assert!(
                matches!(RunConfig::parse(text), Err(PipelineError::Config(_))),
                "{text}"
            );
        }
    }
}
