//! Experiment orchestration: seeded independent trials, checkpointed metrics
//! and result files.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{
    fictitious_play, horizon_for, is_checkpoint, solve_game, DenseGame, EquilibriumReport,
    ZeroSumGame,
};
use crate::instances::{Family, Instance, InstanceSpec};
use crate::leaders::Leaders;
use crate::learner::{FollowTheLeader, OnlineLearner};
use crate::model::{
    ActionId, CompensatedSum, ExpertId, LeaderFeed, LossModel, OracleCounters, OraclePair,
};
use crate::mw::{Mw1, Mw2, Mw3};
use crate::optimizable::{MainLearner, SelfOblivious};
use crate::seed;

pub const EXPERT_ALGORITHMS: [&str; 6] = ["mw1", "mw2", "mw3", "leaders", "main", "ftl"];
pub const GAME_ALGORITHMS: [&str; 2] = ["main", "fp"];
pub const CSV_HEADER: &str = "trial,seed,round,metric,value";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ExpertsRun,
    GameSolve,
    InstanceGen,
    Verify,
}

/// Everything needed to reproduce a run. `horizon = 0` in game mode means
/// the horizon is derived from `eps` and `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub algorithm: String,
    pub instance: Option<InstanceSpec>,
    pub n: usize,
    pub horizon: usize,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn experts(
        algorithm: &str,
        instance: InstanceSpec,
        horizon: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        ExperimentSpec {
            mode: Mode::ExpertsRun,
            algorithm: algorithm.into(),
            n: instance.size(),
            instance: Some(instance),
            horizon,
            eps: 0.25,
            delta: 0.1,
            trials,
            seed,
            out: None,
        }
    }

    /// Random dense `n x n` games.
    pub fn game(algorithm: &str, n: usize, horizon: usize, trials: usize, seed: u64) -> Self {
        ExperimentSpec {
            mode: Mode::GameSolve,
            algorithm: algorithm.into(),
            instance: None,
            n,
            horizon,
            eps: 0.25,
            delta: 0.1,
            trials,
            seed,
            out: None,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    fn check(&self, mode: Mode, algorithms: &[&str]) -> Result<()> {
        if self.mode != mode {
            return Err(Error::Spec(format!(
                "expected mode {mode:?}, got {:?}",
                self.mode
            )));
        }
        if !algorithms.contains(&self.algorithm.as_str()) {
            return Err(Error::Spec(format!(
                "unknown algorithm {:?}; expected one of {}",
                self.algorithm,
                algorithms.join(", ")
            )));
        }
        Ok(())
    }
}

/// Seed of the stream `label` in trial `trial`; a pure function of its inputs.
pub fn stream_seed(base: u64, trial: usize, label: &str) -> u64 {
    seed::derive(base, &[trial as u64, seed::label(label)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub metric: String,
    /// `(round, value)` at powers of two and at the horizon.
    pub checkpoints: Vec<(usize, f64)>,
    pub oracle: OracleCounters,
    pub br_calls: u64,
    pub work: u64,
    pub setup_seconds: f64,
    pub run_seconds: f64,
}

impl TrialRecord {
    pub fn final_value(&self) -> Option<f64> {
        self.checkpoints.last().map(|&(_, v)| v)
    }
}

pub fn build_learner(
    name: &str,
    num_experts: usize,
    horizon: usize,
    seed: u64,
) -> Result<Box<dyn OnlineLearner + Send>> {
    let budget = ((num_experts as f64).sqrt().floor() as usize).max(1);
    Ok(match name {
        "mw1" => Box::new(Mw1::tuned(num_experts, horizon)?),
        "mw2" => Box::new(Mw2::tuned(num_experts, horizon)?),
        "mw3" => Box::new(Mw3::tuned(num_experts, budget, horizon)?),
        "leaders" => Box::new(Leaders::new(num_experts, budget, horizon)?),
        "main" => Box::new(MainLearner::new(
            num_experts,
            horizon,
            &mut seed::rng(seed),
        )?),
        "ftl" => Box::new(FollowTheLeader::new(num_experts)?),
        other => return Err(Error::Spec(format!("unknown algorithm {other:?}"))),
    })
}

fn trial_instance(instance: &InstanceSpec, trial: usize) -> Result<Instance> {
    InstanceSpec {
        seed: seed::derive(instance.seed, &[trial as u64]),
        ..instance.clone()
    }
    .generate()
}

/// Runs `spec.algorithm` against the canonical adversary of the instance;
/// records the average regret. Trial `i` uses instance seed
/// `derive(instance.seed, [i])` and learner streams from `spec.seed`.
pub fn run_experts(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    spec.check(Mode::ExpertsRun, &EXPERT_ALGORITHMS)?;
    let instance = spec
        .instance
        .as_ref()
        .ok_or_else(|| Error::Spec("experts run needs an instance".into()))?;
    if instance.family == Family::Aldous {
        return Err(Error::Spec(
            "aldous is a game instance, not an experts instance".into(),
        ));
    }
    if spec.horizon == 0 {
        return Err(Error::Spec(
            "experts run needs a horizon of at least 1".into(),
        ));
    }
    (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let start = Instant::now();
            match trial_instance(instance, trial)? {
                Instance::HardExperts(m) => {
                    let actions = |t| m.canonical_action(t);
                    experts_trial(spec, trial, OraclePair::new(m.clone()), actions, start)
                }
                Instance::BinaryCls(m) => {
                    let actions = |t| m.canonical_action(t);
                    experts_trial(spec, trial, OraclePair::new(m.clone()), actions, start)
                }
                Instance::Aldous(_) => unreachable!("rejected above"),
            }
        })
        .collect()
}

fn experts_trial<M: LossModel>(
    spec: &ExperimentSpec,
    trial: usize,
    oracle: OraclePair<M>,
    action: impl Fn(usize) -> ActionId,
    start: Instant,
) -> Result<TrialRecord> {
    let n = oracle.num_experts();
    let horizon = spec.horizon;
    let learner = build_learner(
        &spec.algorithm,
        n,
        horizon,
        stream_seed(spec.seed, trial, "learner"),
    )?;
    let mut learner = SelfOblivious::new(
        learner,
        stream_seed(spec.seed, trial, "play"),
        stream_seed(spec.seed, trial, "update"),
    );
    let setup_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let mut feed = LeaderFeed::new();
    let mut player = CompensatedSum::default();
    let mut checkpoints = Vec::new();
    for t in 0..horizon {
        let x = learner.play()?;
        let y = action(t);
        player.add(oracle.model().loss(x, y));
        let leader = feed.push(y, &oracle)?;
        learner.observe(&mut |e: ExpertId| oracle.value(e, y), leader)?;
        let rounds = t + 1;
        if is_checkpoint(rounds, horizon) {
            let history = feed.history_dist()?;
            let best = oracle.model().best_expert(&history);
            let comparator = rounds as f64 * history.expect(|a| oracle.model().loss(best, a));
            checkpoints.push((rounds, (player.value() - comparator) / rounds as f64));
        }
    }
    Ok(TrialRecord {
        trial,
        seed: spec.seed,
        metric: "avg_regret".into(),
        checkpoints,
        oracle: oracle.counters(),
        br_calls: 0,
        work: learner.inner().work(),
        setup_seconds,
        run_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves one game per trial: a random dense `n x n` game, or the game of an
/// `aldous` instance. Records the duality gap of the empirical strategies.
pub fn run_game(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    spec.check(Mode::GameSolve, &GAME_ALGORITHMS)?;
    if let Some(instance) = &spec.instance {
        if instance.family != Family::Aldous {
            return Err(Error::Spec(format!(
                "{} is not a game instance",
                instance.family
            )));
        }
    } else if spec.n == 0 {
        return Err(Error::Spec("game size must be at least 1".into()));
    }
    (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let start = Instant::now();
            match &spec.instance {
                Some(instance) => match trial_instance(instance, trial)? {
                    Instance::Aldous(game) => game_trial(spec, trial, &game, start),
                    _ => unreachable!("rejected above"),
                },
                None => {
                    let mut rng = seed::rng(stream_seed(spec.seed, trial, "game"));
                    let game = DenseGame::random(spec.n, &mut rng)?;
                    game_trial(spec, trial, &game, start)
                }
            }
        })
        .collect()
}

pub fn game_horizon(spec: &ExperimentSpec, size: usize) -> Result<usize> {
    if spec.horizon > 0 {
        return Ok(spec.horizon);
    }
    let t = horizon_for(size, spec.eps, spec.delta)?;
    usize::try_from(t).map_err(|_| Error::ParamDomain(format!("horizon {t} too large")))
}

fn game_trial<G: ZeroSumGame + ?Sized>(
    spec: &ExperimentSpec,
    trial: usize,
    game: &G,
    start: Instant,
) -> Result<TrialRecord> {
    let horizon = game_horizon(spec, game.size())?;
    let solver_seed = stream_seed(spec.seed, trial, "solver");
    let setup_seconds = start.elapsed().as_secs_f64();
    let report: EquilibriumReport = match spec.algorithm.as_str() {
        "main" => solve_game(game, horizon, solver_seed)?,
        _ => fictitious_play(game, horizon, solver_seed)?,
    };
    Ok(TrialRecord {
        trial,
        seed: spec.seed,
        metric: "duality_gap".into(),
        checkpoints: report.checkpoints.clone(),
        oracle: OracleCounters {
            value_calls: report.value_calls,
            ..OracleCounters::default()
        },
        br_calls: report.br_calls,
        work: 0,
        setup_seconds,
        run_seconds: report.wall_seconds,
    })
}

/// `<path>.json`, next to the CSV.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a ExperimentSpec,
    versions: Versions,
    trials: Vec<TrialCost>,
}

#[derive(Serialize)]
struct Versions {
    optexp: &'static str,
    format: u32,
}

#[derive(Serialize)]
struct TrialCost {
    trial: usize,
    seed: u64,
    value_calls: u64,
    opt_calls: u64,
    br_calls: u64,
    work: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub seed: u64,
    pub round: usize,
    pub metric: String,
    pub value: f64,
}

/// Writes one CSV row per checkpoint and a JSON sidecar with the spec and
/// the model cost of every trial. Wall-clock times are left out so that the
/// files depend only on the inputs.
pub fn emit_results(records: &[TrialRecord], spec: &ExperimentSpec, path: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::io(path, e);
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| io(e.into()))?;
    writer
        .write_record(CSV_HEADER.split(','))
        .map_err(|e| io(e.into()))?;
    for record in records {
        for &(round, value) in &record.checkpoints {
            writer
                .serialize(ResultRow {
                    trial: record.trial,
                    seed: record.seed,
                    round,
                    metric: record.metric.clone(),
                    value,
                })
                .map_err(|e| io(e.into()))?;
        }
    }
    writer.flush().map_err(io)?;
    let sidecar = Sidecar {
        spec,
        versions: Versions {
            optexp: env!("CARGO_PKG_VERSION"),
            format: 1,
        },
        trials: records
            .iter()
            .map(|r| TrialCost {
                trial: r.trial,
                seed: r.seed,
                value_calls: r.oracle.value_calls,
                opt_calls: r.oracle.opt_calls,
                br_calls: r.br_calls,
                work: r.work,
            })
            .collect(),
    };
    let side = sidecar_path(path);
    let mut file = File::create(&side).map_err(|e| Error::io(&side, e))?;
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    writeln!(file, "{text}").map_err(|e| Error::io(&side, e))?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let io = |e: csv::Error| Error::io(path, e.into());
    let mut reader = csv::Reader::from_path(path).map_err(io)?;
    reader.deserialize().map(|row| row.map_err(io)).collect()
}

/// Cumulative regret bound of dense weights with mixing `1/T`: `2 ln(NT)/eta + eta T`.
pub fn mw1_bound(num_experts: usize, horizon: usize, eta: f64) -> f64 {
    let (n, t) = (num_experts as f64, horizon as f64);
    2.0 * (n * t).ln() / eta + eta * t
}

/// Average regret bound of the main learner: `40 N^(1/4) ln(NT) / sqrt T`.
pub fn main_bound(num_experts: usize, horizon: usize) -> f64 {
    let (n, t) = (num_experts as f64, horizon as f64);
    40.0 * n.powf(0.25) * (n * t).ln() / t.sqrt()
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
    pub seconds: f64,
}

/// Quick regression checks: dense weights and the main learner on the hard
/// instance against their regret bounds, and the game solver on small
/// random games.
pub fn bench(trials: usize, seed: u64) -> Result<Vec<BenchCheck>> {
    let trials = trials.max(1);
    let mut checks = Vec::new();
    let mut check = |name, value: f64, bound: f64, start: Instant| {
        checks.push(BenchCheck {
            name,
            value,
            bound,
            passed: value <= bound,
            seconds: start.elapsed().as_secs_f64(),
        })
    };

    let start = Instant::now();
    let (n, t) = (16, 1024);
    let spec = ExperimentSpec::experts("mw1", InstanceSpec::hard_experts(4, seed), t, trials, seed);
    let regrets: Vec<f64> = run_experts(&spec)?
        .iter()
        .map(|r| r.final_value().unwrap_or(0.0) * t as f64)
        .collect();
    let eta = Mw1::tuned(n, t)?.eta();
    check(
        "mw1-hard-regret",
        mean(&regrets),
        mw1_bound(n, t, eta),
        start,
    );

    let start = Instant::now();
    let (n, t) = (64, 4096);
    let spec =
        ExperimentSpec::experts("main", InstanceSpec::hard_experts(8, seed), t, trials, seed);
    let regrets: Vec<f64> = run_experts(&spec)?
        .iter()
        .map(|r| r.final_value().unwrap_or(0.0))
        .collect();
    check(
        "main-hard-avg-regret",
        mean(&regrets),
        main_bound(n, t),
        start,
    );

    let start = Instant::now();
    let spec = ExperimentSpec::game("main", 16, 20_000, trials, seed);
    let gaps: Vec<f64> = run_game(&spec)?
        .iter()
        .map(|r| r.final_value().unwrap_or(f64::INFINITY))
        .collect();
    check("game-16-median-gap", median(&gaps), 0.1, start);
    Ok(checks)
}
