//! The experiment steps. Each `cmd_*` function reads its inputs from and
//! writes its outputs to the configured output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use greenhouse_core::episode::{simulate_episode, EpisodeMeta, StepView};
use greenhouse_core::metrics::{report, report_csv, timing_csv, ControlStats};
use greenhouse_core::weather::{split_train_test, synth_weather, DisturbanceSeries};
use greenhouse_core::{ControlInput, EpisodeLog, State};
use mpc::{receding_horizon_control, MpcConfig, OraclePredictor, Plant, Predictor, SurrogatePredictor};
use seqnet::{checkpoint, evaluate, make_windows, CellKind, NetworkWeights, Scaler};

use crate::config::{derive_seed, ExperimentConfig};
use crate::manifest::RunManifest;
use crate::svg::{default_bounds, emit_svg, Channel};
use crate::{Error, Result};

const STEPS_PER_DAY: usize = 96;

/// File names under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { out: out.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.out.join("config.toml")
    }
    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }
    pub fn episode(&self, i: usize) -> PathBuf {
        self.data_dir().join(format!("episode_{i:03}.csv"))
    }
    pub fn models_dir(&self) -> PathBuf {
        self.out.join("models")
    }
    pub fn checkpoint(&self, kind: CellKind, window: usize, batch: usize) -> PathBuf {
        self.models_dir().join(format!("{kind}_w{window}_b{batch}.ckpt"))
    }
    pub fn train_metrics(&self) -> PathBuf {
        self.out.join("train_metrics.csv")
    }
    pub fn train_timing(&self) -> PathBuf {
        self.out.join("train_timing.csv")
    }
    pub fn eval_dir(&self) -> PathBuf {
        self.out.join("eval")
    }
    pub fn sim_dir(&self) -> PathBuf {
        self.out.join("sim")
    }
    pub fn report(&self) -> PathBuf {
        self.out.join("report.csv")
    }
    pub fn timing(&self) -> PathBuf {
        self.out.join("timing.csv")
    }
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(Error::io(p))
}

fn write_file(p: &Path, contents: &str) -> Result<()> {
    fs::write(p, contents).map_err(Error::io(p))
}

/// Consecutive `days`-day slices of a recorded series, with one extra day
/// for the controller's look-ahead.
fn recorded_slice(path: &Path, index: usize, days: usize) -> Result<DisturbanceSeries> {
    let series = DisturbanceSeries::load_csv(path)?.to_model_grid()?;
    let len = STEPS_PER_DAY * (days + 1) + 1;
    let from = index * STEPS_PER_DAY * days;
    series.slice(from, len).map_err(|_| {
        Error::Data(format!("{} has {} samples on the 15-minute grid, slice {index} needs {}", path.display(), series.len(), from + len))
    })
}

/// Weather of training episode `i`, one day longer than the episode.
pub fn training_weather(cfg: &ExperimentConfig, i: usize) -> Result<DisturbanceSeries> {
    let s = &cfg.scenario;
    match &s.weather_csv {
        Some(p) => recorded_slice(p, i, s.episode_days),
        None => {
            let seed = derive_seed(cfg.seed, &format!("train-weather-{}", s.profile.seed.wrapping_add(i as u64)));
            Ok(synth_weather(&greenhouse_core::WeatherProfile { seed, ..s.profile.clone() }, s.episode_days + 1)?)
        }
    }
}

/// Weather of the held-out evaluation run, one day longer than the run.
pub fn eval_weather(cfg: &ExperimentConfig) -> Result<DisturbanceSeries> {
    let s = &cfg.scenario;
    match &s.eval_weather_csv {
        Some(p) => recorded_slice(p, 0, s.eval_days),
        None => {
            let seed = derive_seed(cfg.seed, &format!("eval-weather-{}", s.eval_profile.seed));
            Ok(synth_weather(&greenhouse_core::WeatherProfile { seed, ..s.eval_profile.clone() }, s.eval_days + 1)?)
        }
    }
}

fn with_solver_seed(mpc: &MpcConfig, seed: u64) -> MpcConfig {
    let mut m = mpc.clone();
    m.solver.seed = seed;
    m
}

/// One training trajectory: MPC over the physical model.
pub fn generate_episode(cfg: &ExperimentConfig, i: usize) -> Result<EpisodeLog> {
    let weather = training_weather(cfg, i)?;
    let seed = derive_seed(cfg.seed, &format!("datagen-{i}"));
    let mpc_cfg = with_solver_seed(&cfg.datagen.mpc, seed);
    let meta = EpisodeMeta { seed, scenario: format!("train-{i}"), controller: "oracle-mpc".into() };
    let steps = STEPS_PER_DAY * cfg.scenario.episode_days;
    let (log, _) = receding_horizon_control(
        &OraclePredictor::default(),
        &Plant::default(),
        &weather.samples,
        State::from_array(cfg.scenario.x0),
        steps,
        &mpc_cfg,
        meta,
    )
    .map_err(|e| Error::Control { label: format!("episode {i}"), source: e })?;
    Ok(log)
}

/// Generate and write every training episode.
pub fn cmd_generate_data(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    create_dir(&layout.data_dir())?;
    let mut paths = Vec::with_capacity(cfg.scenario.episodes);
    for i in 0..cfg.scenario.episodes {
        let log = generate_episode(cfg, i)?;
        log.validate(&Default::default(), greenhouse_core::SAMPLE_INTERVAL_S)?;
        let p = layout.episode(i);
        log.write_csv(&p)?;
        paths.push(p);
    }
    finish(cfg, "generate-data", paths)
}

/// Write the effective config and record the command in the manifest.
fn finish(cfg: &ExperimentConfig, command: &str, mut paths: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    create_dir(&layout.out)?;
    write_file(&layout.config(), &cfg.to_toml())?;
    paths.push(layout.config());
    let mut m = RunManifest::open(&layout.out, cfg)?;
    m.record(&layout.out, command, paths.clone())?;
    m.save(&layout.out)?;
    Ok(paths)
}

/// The generated episodes, in index order.
pub fn load_episodes(cfg: &ExperimentConfig) -> Result<Vec<EpisodeLog>> {
    let layout = Layout::new(&cfg.out_dir);
    (0..cfg.scenario.episodes)
        .map(|i| {
            let p = layout.episode(i);
            if !p.is_file() {
                return Err(Error::MissingInput(format!("{} not found; run generate-data first", p.display())));
            }
            Ok(EpisodeLog::load_csv(&p)?)
        })
        .collect()
}

/// Episodes split into training and test parts, with the scaler fitted on
/// the training part.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<EpisodeLog>,
    pub test: Vec<EpisodeLog>,
    pub scaler: Scaler,
}

impl Dataset {
    pub fn new(episodes: &[EpisodeLog], split: f64) -> Result<Self> {
        let (train, test) = split_train_test(episodes, split)?;
        let scaler = Scaler::fit(&train)?;
        Ok(Self { train, test, scaler })
    }
}

/// Outcome of one training-grid cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub kind: CellKind,
    pub window: usize,
    pub batch_size: usize,
    /// Test-split error in normalized units.
    pub test_mse: f64,
    pub test_rmse: f64,
    pub loss_history: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    pub weights: NetworkWeights,
}

impl CellResult {
    pub fn mean_epoch_seconds(&self) -> f64 {
        self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len().max(1) as f64
    }
}

pub fn train_cell(cfg: &ExperimentConfig, ds: &Dataset, kind: CellKind, window: usize, batch_size: usize) -> Result<CellResult> {
    let grid = &cfg.training;
    let seed = derive_seed(cfg.seed, &format!("train-{kind}-w{window}-b{batch_size}"));
    let tc = grid.train_config(window, batch_size, seed);
    let train_set = make_windows(&ds.train, window, &ds.scaler)?;
    let test_set = make_windows(&ds.test, window, &ds.scaler)?;
    let outcome = seqnet::train(kind, grid.dims(), &train_set.samples, ds.scaler.clone(), &tc)?;
    let (test_mse, test_rmse) = evaluate(&outcome.weights, &test_set.samples)?;
    Ok(CellResult {
        kind,
        window,
        batch_size,
        test_mse,
        test_rmse,
        loss_history: outcome.loss_history,
        epoch_seconds: outcome.epoch_seconds,
        weights: outcome.weights,
    })
}

pub const TRAIN_METRICS_HEADER: &str = "kind,window,batch_size,test_mse,test_rmse,final_train_loss,best,checkpoint";

/// Per-cell test error; `best` marks the lowest test MSE of each cell kind.
pub fn train_metrics_csv(results: &[CellResult], layout: &Layout) -> String {
    let mut out = format!("{TRAIN_METRICS_HEADER}\n");
    for r in results {
        let best = best_cell(results, r.kind).is_some_and(|b| std::ptr::eq(b, r));
        let rel = layout.checkpoint(r.kind, r.window, r.batch_size);
        let rel = rel.strip_prefix(&layout.out).unwrap_or(&rel);
        let _ = writeln!(
            out,
            "{},{},{},{:.6e},{:.6e},{:.6e},{},{}",
            r.kind,
            r.window,
            r.batch_size,
            r.test_mse,
            r.test_rmse,
            r.loss_history.last().copied().unwrap_or(f64::NAN),
            u8::from(best),
            rel.display()
        );
    }
    out
}

fn best_cell(results: &[CellResult], kind: CellKind) -> Option<&CellResult> {
    results.iter().filter(|r| r.kind == kind).min_by(|a, b| a.test_mse.total_cmp(&b.test_mse))
}

/// Train every grid cell, write checkpoints and the metrics tables.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<CellResult>> {
    let layout = Layout::new(&cfg.out_dir);
    let episodes = load_episodes(cfg)?;
    let ds = Dataset::new(&episodes, cfg.training.split)?;
    create_dir(&layout.models_dir())?;
    let mut results = Vec::new();
    let mut paths = Vec::new();
    for &kind in &cfg.training.kinds {
        for &w in &cfg.training.windows {
            for &b in &cfg.training.batch_sizes {
                let r = train_cell(cfg, &ds, kind, w, b)?;
                let p = layout.checkpoint(kind, w, b);
                checkpoint::save(&r.weights, &p).map_err(|e| Error::Io { path: p.clone(), source: io_of(e) })?;
                paths.push(p);
                results.push(r);
            }
        }
    }
    write_file(&layout.train_metrics(), &train_metrics_csv(&results, &layout))?;
    let mut timing = String::from("kind,window,batch_size,mean_epoch_s\n");
    for r in &results {
        let _ = writeln!(timing, "{},{},{},{:.4}", r.kind, r.window, r.batch_size, r.mean_epoch_seconds());
    }
    write_file(&layout.train_timing(), &timing)?;
    paths.extend([layout.train_metrics(), layout.train_timing()]);
    finish(cfg, "train", paths)?;
    Ok(results)
}

fn io_of(e: seqnet::Error) -> std::io::Error {
    match e {
        seqnet::Error::Io(e) => e,
        other => std::io::Error::other(other.to_string()),
    }
}

/// The best checkpoint of a cell kind according to the training metrics,
/// with its window length.
pub fn best_checkpoint(cfg: &ExperimentConfig, kind: CellKind) -> Result<(PathBuf, usize)> {
    let layout = Layout::new(&cfg.out_dir);
    let p = layout.train_metrics();
    let text = fs::read_to_string(&p).map_err(|_| Error::MissingInput(format!("{} not found; run train first", p.display())))?;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() == 8 && f[0] == kind.name() && f[6] == "1" {
            let window = f[1].parse().map_err(|_| Error::Data(format!("{}: bad window in {line:?}", p.display())))?;
            return Ok((layout.out.join(f[7]), window));
        }
    }
    Err(Error::MissingInput(format!("no trained {kind} model listed in {}; include it in the training grid", p.display())))
}

pub fn load_surrogate(path: &Path, window: usize) -> Result<SurrogatePredictor> {
    if !path.is_file() {
        return Err(Error::MissingInput(format!("checkpoint {} not found; run train first", path.display())));
    }
    let w = checkpoint::load(path)?;
    SurrogatePredictor::new(w, window).map_err(|e| Error::Control { label: path.display().to_string(), source: e })
}

/// A closed-loop policy for one run.
pub enum Policy<'a> {
    Zero,
    Constant(ControlInput),
    Mpc { predictor: &'a dyn Predictor, mpc: MpcConfig },
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub label: String,
    pub log: EpisodeLog,
    pub stats: ControlStats,
}

/// Run a policy on a weather series for `steps` steps.
pub fn run_policy(cfg: &ExperimentConfig, policy: &Policy<'_>, label: &str, weather: &DisturbanceSeries, steps: usize) -> Result<RunResult> {
    let plant = Plant::default();
    let x0 = State::from_array(cfg.scenario.x0);
    let seed = derive_seed(cfg.seed, &format!("run-{label}"));
    let meta = |controller: &str| EpisodeMeta { seed, scenario: label.to_string(), controller: controller.into() };
    let (log, stats) = match policy {
        Policy::Zero | Policy::Constant(_) => {
            let u = match policy {
                Policy::Constant(u) => *u,
                _ => ControlInput::zero(),
            };
            let mut times = Vec::with_capacity(steps);
            let log = simulate_episode(
                x0,
                |_: &StepView<'_>| {
                    times.push(0.0);
                    Ok::<_, greenhouse_core::Error>(u)
                },
                &weather.samples,
                steps,
                &plant.params,
                plant.h,
                meta(if matches!(policy, Policy::Zero) { "zero" } else { "constant" }),
            )?;
            let stats = ControlStats::from_log(&log, times, &plant.prices)?;
            (log, stats)
        }
        Policy::Mpc { predictor, mpc } => {
            let m = with_solver_seed(mpc, seed);
            let name = format!("{}-mpc", predictor.name());
            receding_horizon_control(*predictor, &plant, &weather.samples, x0, steps, &m, meta(&name))
                .map_err(|e| Error::Control { label: label.to_string(), source: e })?
        }
    };
    Ok(RunResult { label: label.to_string(), log, stats })
}

/// Run label of a surrogate controller, e.g. `GRU24`.
pub fn surrogate_label(kind: CellKind, horizon: usize) -> String {
    format!("{}{horizon}", kind.name().to_uppercase())
}

/// Surrogate MPC for every (cell kind, horizon) plus the baselines on the
/// held-out scenario; writes logs, plots and the report.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    let layout = Layout::new(&cfg.out_dir);
    let weather = eval_weather(cfg)?;
    let steps = STEPS_PER_DAY * cfg.scenario.eval_days;
    let ev = &cfg.evaluation;
    let mut runs = Vec::new();
    if ev.zero_baseline {
        runs.push(run_policy(cfg, &Policy::Zero, "ZERO", &weather, steps)?);
    }
    if ev.oracle_baseline {
        let oracle = OraclePredictor::default();
        let label = format!("ORACLE{}", cfg.datagen.mpc.horizon);
        runs.push(run_policy(cfg, &Policy::Mpc { predictor: &oracle, mpc: cfg.datagen.mpc.clone() }, &label, &weather, steps)?);
    }
    for &kind in &cfg.training.kinds {
        let (path, window) = best_checkpoint(cfg, kind)?;
        let sur = load_surrogate(&path, window)?;
        for &h in &ev.horizons {
            let mpc = MpcConfig { horizon: h, ..ev.mpc.clone() };
            runs.push(run_policy(cfg, &Policy::Mpc { predictor: &sur, mpc }, &surrogate_label(kind, h), &weather, steps)?);
        }
    }
    create_dir(&layout.eval_dir())?;
    let mut paths = Vec::new();
    for r in &runs {
        let p = layout.eval_dir().join(format!("{}.csv", r.label));
        r.log.write_csv(&p)?;
        paths.push(p);
    }
    let rows = report(&runs.iter().map(|r| (r.label.clone(), &r.log, &r.stats)).collect::<Vec<_>>(), &Plant::default().prices)?;
    write_file(&layout.timing(), &timing_csv(&rows))?;
    paths.push(layout.timing());
    paths.extend(write_report(cfg, &runs.iter().map(|r| (r.label.clone(), r.log.clone())).collect::<Vec<_>>())?);
    finish(cfg, "evaluate", paths)?;
    Ok(runs)
}

/// Report CSV and one SVG per run.
fn write_report(cfg: &ExperimentConfig, runs: &[(String, EpisodeLog)]) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    let prices = Plant::default().prices;
    let stats: Vec<ControlStats> = runs.iter().map(|(_, log)| ControlStats::from_log(log, Vec::new(), &prices)).collect::<Result<_, _>>()?;
    let rows = report(&runs.iter().zip(&stats).map(|((l, log), s)| (l.clone(), log, s)).collect::<Vec<_>>(), &prices)?;
    write_file(&layout.report(), &report_csv(&rows))?;
    let mut paths = vec![layout.report()];
    for (label, log) in runs {
        let p = layout.eval_dir().join(format!("{label}.svg"));
        write_file(&p, &emit_svg(log, &Channel::ALL, &default_bounds())?)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Rebuild the report and plots from the evaluation logs on disk, in the
/// order of the evaluation grid.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    let mut labels = Vec::new();
    if cfg.evaluation.zero_baseline {
        labels.push("ZERO".to_string());
    }
    if cfg.evaluation.oracle_baseline {
        labels.push(format!("ORACLE{}", cfg.datagen.mpc.horizon));
    }
    for &kind in &cfg.training.kinds {
        labels.extend(cfg.evaluation.horizons.iter().map(|&h| surrogate_label(kind, h)));
    }
    let runs = labels
        .into_iter()
        .map(|l| {
            let p = layout.eval_dir().join(format!("{l}.csv"));
            if !p.is_file() {
                return Err(Error::MissingInput(format!("{} not found; run evaluate first", p.display())));
            }
            Ok((l, EpisodeLog::load_csv(&p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let paths = write_report(cfg, &runs)?;
    finish(cfg, "report", paths)
}

/// Single run on the evaluation scenario, written to `sim/<label>.csv`.
pub fn cmd_simulate(cfg: &ExperimentConfig, policy: &Policy<'_>, label: &str) -> Result<Vec<PathBuf>> {
    let layout = Layout::new(&cfg.out_dir);
    let weather = eval_weather(cfg)?;
    let run = run_policy(cfg, policy, label, &weather, STEPS_PER_DAY * cfg.scenario.eval_days)?;
    create_dir(&layout.sim_dir())?;
    let csv = layout.sim_dir().join(format!("{label}.csv"));
    run.log.write_csv(&csv)?;
    let svg = layout.sim_dir().join(format!("{label}.svg"));
    write_file(&svg, &emit_svg(&run.log, &Channel::ALL, &default_bounds())?)?;
    finish(cfg, &format!("simulate-{label}"), vec![csv, svg])
}
