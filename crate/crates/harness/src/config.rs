//! Experiment configuration, read from a single TOML file. Every key has a
//! default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use greenhouse_core::{State, WeatherProfile};
use mpc::{MpcConfig, SolverConfig};
use seqnet::CellKind;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scenario: ScenarioConfig,
    pub datagen: DataGenConfig,
    pub training: TrainingGrid,
    pub evaluation: EvaluationConfig,
}

/// Where the weather comes from and how long the runs are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Training-data episodes; each gets its own weather.
    pub episodes: usize,
    pub episode_days: usize,
    /// Length of the held-out evaluation run.
    pub eval_days: usize,
    /// Initial state `[dry weight kg·m⁻², CO₂ kg·m⁻³, °C, kg·m⁻³]`.
    pub x0: [f64; 4],
    /// Synthetic weather for the training episodes. Episode `i` uses seed
    /// `profile.seed + i` offset by the experiment seed.
    pub profile: WeatherProfile,
    /// Synthetic weather for the evaluation run, seeded apart from training.
    pub eval_profile: WeatherProfile,
    /// Recorded weather to cut the training episodes from instead of the
    /// synthetic profile, in consecutive slices.
    pub weather_csv: Option<PathBuf>,
    /// Recorded weather for the evaluation run.
    pub eval_weather_csv: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let profile = WeatherProfile { temp_mean: 16.0, ..WeatherProfile::default() };
        Self {
            episodes: 6,
            episode_days: 40,
            eval_days: 10,
            x0: State::seedling().to_array(),
            eval_profile: WeatherProfile { seed: 1_000_003, ..profile.clone() },
            profile,
            weather_csv: None,
            eval_weather_csv: None,
        }
    }
}

/// The controller that generates training trajectories: MPC over the
/// physical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataGenConfig {
    pub mpc: MpcConfig,
}

impl Default for DataGenConfig {
    fn default() -> Self {
        Self { mpc: MpcConfig { solver: SolverConfig { iterations: 60, restarts: 1, ..SolverConfig::default() }, ..MpcConfig::default() } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingGrid {
    pub kinds: Vec<CellKind>,
    pub windows: Vec<usize>,
    pub batch_sizes: Vec<usize>,
    /// Fraction of episodes used for training; the rest are the test split.
    pub split: f64,
    pub hidden: usize,
    pub head_hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub step_size: usize,
    pub gamma: f64,
    pub dropout: f64,
}

impl Default for TrainingGrid {
    fn default() -> Self {
        let t = seqnet::TrainConfig::default();
        Self {
            kinds: vec![CellKind::Lstm, CellKind::Gru],
            windows: vec![6, 12, 18, 24],
            batch_sizes: vec![8, 16, 32],
            split: 0.8,
            hidden: 16,
            head_hidden: 16,
            epochs: t.epochs,
            lr: t.lr,
            step_size: t.step_size,
            gamma: t.gamma,
            dropout: t.dropout,
        }
    }
}

impl TrainingGrid {
    pub fn train_config(&self, window: usize, batch_size: usize, seed: u64) -> seqnet::TrainConfig {
        seqnet::TrainConfig {
            window,
            batch_size,
            epochs: self.epochs,
            lr: self.lr,
            step_size: self.step_size,
            gamma: self.gamma,
            dropout: self.dropout,
            seed,
        }
    }

    pub fn dims(&self) -> seqnet::Dims {
        seqnet::Dims { hidden: self.hidden, head_hidden: self.head_hidden, ..seqnet::Dims::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub horizons: Vec<usize>,
    /// Also run MPC over the physical model as a reference.
    pub oracle_baseline: bool,
    /// Also run the all-off policy.
    pub zero_baseline: bool,
    /// Controller settings; the horizon is overridden per run.
    pub mpc: MpcConfig,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            horizons: vec![6, 12, 18, 24, 30],
            oracle_baseline: true,
            zero_baseline: true,
            mpc: MpcConfig { solver: SolverConfig { iterations: 30, restarts: 1, ..SolverConfig::default() }, ..MpcConfig::default() },
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("runs/default"),
            scenario: ScenarioConfig::default(),
            datagen: DataGenConfig::default(),
            training: TrainingGrid::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Parse and validate a config file. Relative weather paths resolve
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.scenario.weather_csv, &mut cfg.scenario.eval_weather_csv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Shrink to a quick run: 2-day episodes, 2 epochs, a 1-day evaluation
    /// and small solver budgets.
    pub fn smoke(mut self) -> Self {
        self.scenario.episode_days = 2;
        self.scenario.eval_days = 1;
        self.training.epochs = 2;
        self.datagen.mpc.solver.iterations = self.datagen.mpc.solver.iterations.min(20);
        self.evaluation.mpc.solver.iterations = self.evaluation.mpc.solver.iterations.min(10);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        let bad = |m: String| Err(Error::Config(m));
        if s.episodes < 2 {
            return bad(format!("need at least two episodes for a train/test split, got {}", s.episodes));
        }
        if s.episode_days == 0 || s.eval_days == 0 {
            return bad("episode and evaluation lengths must be at least one day".into());
        }
        State::from_array(s.x0).validate().map_err(|e| Error::Config(format!("x0: {e}")))?;
        s.profile.validate().map_err(|e| Error::Config(e.to_string()))?;
        s.eval_profile.validate().map_err(|e| Error::Config(e.to_string()))?;
        for p in [&s.weather_csv, &s.eval_weather_csv].into_iter().flatten() {
            if !p.is_file() {
                return bad(format!("weather file {} does not exist", p.display()));
            }
        }
        let t = &self.training;
        if t.kinds.is_empty() || t.windows.is_empty() || t.batch_sizes.is_empty() {
            return bad("training grid must have at least one cell kind, window and batch size".into());
        }
        if !(t.split > 0.0 && t.split < 1.0) {
            return bad(format!("split must lie in (0, 1), got {}", t.split));
        }
        if t.hidden == 0 || t.head_hidden == 0 {
            return bad("network widths must be positive".into());
        }
        for &w in &t.windows {
            for &b in &t.batch_sizes {
                t.train_config(w, b, 0).validate().map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        let e = &self.evaluation;
        if e.horizons.is_empty() || e.horizons.contains(&0) {
            return bad("evaluation horizons must be non-empty and positive".into());
        }
        // Synthetic weather carries one extra day beyond the run.
        if e.horizons.iter().chain([&self.datagen.mpc.horizon]).any(|&h| h > 96) {
            return bad("horizons longer than one day are not supported".into());
        }
        self.datagen.mpc.validate().map_err(|e| Error::Config(format!("datagen: {e}")))?;
        e.mpc.validate().map_err(|e| Error::Config(format!("evaluation: {e}")))?;
        Ok(())
    }
}

/// Seed for a named sub-task, so that adding a task never shifts another's
/// random stream.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    // FNV-1a over the tag, mixed with the experiment seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
