use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optexp::harness::{self, ExperimentSpec, Mode, TrialRecord};
use optexp::instances::{AldousGame, Instance, InstanceSpec};
use optexp::{
    fictitious_play, solve_game, verify_equilibrium, DenseGame, Error, Result, ZeroSumGame,
};

#[derive(Parser)]
#[command(
    name = "optexp",
    version,
    about = "Online learning with optimizable experts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a learner against the canonical adversary of an experts instance.
    RunExperts(Opts),
    /// Solve random dense games (or an aldous instance) by self-play.
    RunGame(Opts),
    /// Write an instance: a text description, or a ZSG1 game file.
    GenInstance(Opts),
    /// Solve a game and check the result is an eps-equilibrium.
    VerifyEq(Opts),
    /// Quick regression checks; exits with 3 if any fails.
    Bench(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// mw1, mw2, mw3, leaders, main, ftl (experts); main, fp (games)
    #[arg(long, default_value = "main")]
    alg: String,
    /// Instance spec such as "family=hard_experts n=8 d=0 seed=1", or a ZSG1 file
    #[arg(long)]
    instance: Option<String>,
    /// Game size for random dense games
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Horizon; 0 in game modes derives it from --eps and --delta
    #[arg(long, default_value_t = 0)]
    t: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; a JSON sidecar is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Opts {
    fn spec(&self, mode: Mode) -> Result<ExperimentSpec> {
        let instance = match &self.instance {
            Some(text) => Some(text.parse::<InstanceSpec>()?),
            None => None,
        };
        let n = match &instance {
            Some(i) if mode == Mode::ExpertsRun => i.size(),
            _ => self.n,
        };
        Ok(ExperimentSpec {
            mode,
            algorithm: self.alg.clone(),
            instance,
            n,
            horizon: self.t,
            eps: self.eps,
            delta: self.delta,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::RunExperts(o) => run(&o, Mode::ExpertsRun),
        Command::RunGame(o) => run(&o, Mode::GameSolve),
        Command::GenInstance(o) => gen_instance(&o),
        Command::VerifyEq(o) => verify(&o),
        Command::Bench(o) => bench(&o),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Spec(_)) { 2 } else { 1 })
        }
    }
}

fn run(opts: &Opts, mode: Mode) -> Result<ExitCode> {
    let spec = opts.spec(mode)?;
    let records = match mode {
        Mode::ExpertsRun => harness::run_experts(&spec)?,
        _ => harness::run_game(&spec)?,
    };
    for r in &records {
        summarize(r);
    }
    if let Some(path) = &spec.out {
        harness::emit_results(&records, &spec, path)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn summarize(r: &TrialRecord) {
    let (round, value) = r.checkpoints.last().copied().unwrap_or((0, f64::NAN));
    println!(
        "trial {} round {} {} {} value_calls {} opt_calls {} br_calls {} work {} seconds {:.3}",
        r.trial,
        round,
        r.metric,
        value,
        r.oracle.value_calls,
        r.oracle.opt_calls,
        r.br_calls,
        r.work,
        r.setup_seconds + r.run_seconds
    );
}

const MAX_DENSE_DIMENSION: u32 = 12;

fn gen_instance(opts: &Opts) -> Result<ExitCode> {
    let Some(text) = &opts.instance else {
        let out = opts
            .out
            .as_ref()
            .ok_or_else(|| Error::Spec("--out is required".into()))?;
        if opts.n == 0 {
            return Err(Error::Spec("need --instance or --n".into()));
        }
        let game = DenseGame::random(opts.n, &mut optexp::seed::rng(opts.seed))?;
        game.write(out)?;
        return Ok(ExitCode::SUCCESS);
    };
    let spec: InstanceSpec = text.parse()?;
    let listing = |s: String| match &opts.out {
        Some(path) => fs::write(path, s).map_err(|e| Error::io(path, e)),
        None => {
            print!("{s}");
            Ok(())
        }
    };
    match spec.generate()? {
        Instance::HardExperts(m) => listing(format!("{spec}\ngood={}\n", join(m.good_experts())))?,
        Instance::BinaryCls(m) => {
            let n = m.base().block_size();
            let labels: String = (0..n * n).map(|x| char::from(b'0' + m.label(x))).collect();
            listing(format!(
                "{spec}\ngood={}\nlabels={labels}\n",
                join(m.base().good_experts())
            ))?
        }
        Instance::Aldous(game) => {
            if spec.d > MAX_DENSE_DIMENSION {
                return Err(Error::Spec(format!(
                    "dense game files need d <= {MAX_DENSE_DIMENSION}"
                )));
            }
            let out = opts
                .out
                .as_ref()
                .ok_or_else(|| Error::Spec("--out is required".into()))?;
            dense(&game)?.write(out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn dense(game: &AldousGame) -> Result<DenseGame> {
    let n = game.size();
    DenseGame::from_fn(n, |i, j| game.payoff(i, j))
}

fn verify(opts: &Opts) -> Result<ExitCode> {
    let text = opts
        .instance
        .as_ref()
        .ok_or_else(|| Error::Spec("--instance is required".into()))?;
    let game: Box<dyn ZeroSumGame> = if text.contains("family=") {
        match text.parse::<InstanceSpec>()?.generate()? {
            Instance::Aldous(game) => Box::new(game),
            _ => return Err(Error::Spec("verify-eq needs a game instance".into())),
        }
    } else {
        Box::new(DenseGame::read(text)?)
    };
    let spec = Opts {
        instance: None,
        ..opts.clone()
    }
    .spec(Mode::Verify)?;
    let horizon = harness::game_horizon(&spec, game.size())?;
    let report = match opts.alg.as_str() {
        "main" => solve_game(game.as_ref(), horizon, opts.seed)?,
        "fp" => fictitious_play(game.as_ref(), horizon, opts.seed)?,
        other => return Err(Error::Spec(format!("unknown game algorithm {other:?}"))),
    };
    let (ok, report) = verify_equilibrium(game.as_ref(), &report.p, &report.q, opts.eps);
    println!(
        "rounds {horizon} value {} gap {} row_exploitability {} col_exploitability {} eps {} {}",
        report.value,
        report.duality_gap,
        report.row_exploitability,
        report.col_exploitability,
        opts.eps,
        if ok { "pass" } else { "fail" }
    );
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn bench(opts: &Opts) -> Result<ExitCode> {
    let checks = harness::bench(opts.trials, opts.seed)?;
    for c in &checks {
        println!(
            "{} {} value {} bound {} seconds {:.2}",
            if c.passed { "pass" } else { "fail" },
            c.name,
            c.value,
            c.bound,
            c.seconds
        );
    }
    Ok(if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}
