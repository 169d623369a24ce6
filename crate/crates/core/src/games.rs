//! Zero-sum games accessed through value and best-response oracles.
//!
//! The row player minimizes `p^T G q`, the column player maximizes it. Both run
//! the self-oblivious main learner; the row player is fed `G(., y_t)` and the
//! leader `BR1(q_bar)`, the column player `1 - G(x_t, .)` and `BR2(p_bar)`.

use std::cell::Cell;
use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::learner::check_horizon;
use crate::model::{ExpertId, SparseDist};
use crate::optimizable::{MainLearner, SelfOblivious};
use crate::seed;

pub type MixedStrategy = SparseDist;

pub trait ZeroSumGame {
    fn size(&self) -> usize;

    fn payoff(&self, row: usize, col: usize) -> f64;

    /// Row minimizing `e_i^T G q`, lowest index among ties.
    fn best_row(&self, q: &MixedStrategy) -> usize {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.size() {
            let v = q.expect(|j| self.payoff(i, j));
            if v < best.1 {
                best = (i, v);
            }
        }
        best.0
    }

    /// Column maximizing `p^T G e_j`, lowest index among ties.
    fn best_col(&self, p: &MixedStrategy) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for j in 0..self.size() {
            let v = p.expect(|i| self.payoff(i, j));
            if v > best.1 {
                best = (j, v);
            }
        }
        best.0
    }

    fn as_dense(&self) -> Option<&DenseGame> {
        None
    }
}

/// Explicit `N x N` payoff table, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGame {
    n: usize,
    payoffs: Vec<f64>,
}

const MAGIC: &[u8; 4] = b"ZSG1";

impl DenseGame {
    pub fn new(n: usize, payoffs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParamDomain(
                "game needs at least one strategy".into(),
            ));
        }
        if payoffs.len() != n * n {
            return Err(Error::Domain(format!(
                "expected {} payoffs, got {}",
                n * n,
                payoffs.len()
            )));
        }
        if let Some(k) = payoffs.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::PayoffRange {
                row: k / n,
                col: k % n,
                value: payoffs[k],
            });
        }
        Ok(DenseGame { n, payoffs })
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(n, vec![value; n * n])
    }

    /// Independent uniform payoffs.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        Self::new(n, (0..n * n).map(|_| rng.gen::<f64>()).collect())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(n, (0..n * n).map(|k| f(k / n, k % n)).collect())
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.payoffs[i * self.n..(i + 1) * self.n]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.payoffs.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for v in &self.payoffs {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != MAGIC {
            return Err(Error::Spec("missing ZSG1 header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let body = &bytes[8..];
        if body.len() != 8 * n * n {
            return Err(Error::Spec(format!(
                "ZSG1 body has {} bytes, expected {}",
                body.len(),
                8 * n * n
            )));
        }
        let payoffs = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::new(n, payoffs)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

impl ZeroSumGame for DenseGame {
    fn size(&self) -> usize {
        self.n
    }

    fn payoff(&self, row: usize, col: usize) -> f64 {
        self.payoffs[row * self.n + col]
    }

    fn as_dense(&self) -> Option<&DenseGame> {
        Some(self)
    }
}

/// Exploitability of a strategy profile.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub p: MixedStrategy,
    pub q: MixedStrategy,
    pub value: f64,
    /// `p^T G q - min_i e_i^T G q`
    pub row_exploitability: f64,
    /// `max_j p^T G e_j - p^T G q`
    pub col_exploitability: f64,
    pub duality_gap: f64,
    pub rounds: usize,
    pub value_calls: u64,
    pub br_calls: u64,
    /// `(round, duality gap)` at powers of two and at the final round.
    pub checkpoints: Vec<(usize, f64)>,
    pub wall_seconds: f64,
}

/// Exhaustive evaluation over all pure deviations.
pub fn evaluate<G: ZeroSumGame + ?Sized>(
    game: &G,
    p: &MixedStrategy,
    q: &MixedStrategy,
) -> EquilibriumReport {
    let n = game.size();
    let row_values: Vec<f64> = (0..n).map(|i| q.expect(|j| game.payoff(i, j))).collect();
    let col_values: Vec<f64> = (0..n).map(|j| p.expect(|i| game.payoff(i, j))).collect();
    let value = p.expect(|i| row_values[i]);
    let min_row = row_values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_col = col_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    EquilibriumReport {
        p: p.clone(),
        q: q.clone(),
        value,
        row_exploitability: value - min_row,
        col_exploitability: max_col - value,
        duality_gap: max_col - min_row,
        rounds: 0,
        value_calls: (n * (p.len() + q.len())) as u64,
        br_calls: 0,
        checkpoints: Vec::new(),
        wall_seconds: 0.0,
    }
}

/// Checks `p^T G e_j - eps <= p^T G q <= e_i^T G q + eps` for every `i, j`.
pub fn verify_equilibrium<G: ZeroSumGame + ?Sized>(
    game: &G,
    p: &MixedStrategy,
    q: &MixedStrategy,
    eps: f64,
) -> (bool, EquilibriumReport) {
    let report = evaluate(game, p, q);
    let slack = eps + 1e-12;
    let ok = report.row_exploitability <= slack && report.col_exploitability <= slack;
    (ok, report)
}

/// `ceil(240^2 sqrt(N) / eps^2 * ln^2(240 N / (eps delta)))`.
pub fn horizon_for(n: usize, eps: f64, delta: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::ParamDomain("game size must be at least 1".into()));
    }
    for (name, v) in [("eps", eps), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::ParamDomain(format!("{name} = {v} outside (0, 1)")));
        }
    }
    let n = n as f64;
    let log = (240.0 * n / (eps * delta)).ln();
    Ok((240.0 * 240.0 * n.sqrt() / (eps * eps) * log * log).ceil() as u64)
}

/// Running empirical distribution with incremental best responses.
struct Empirical {
    counts: Vec<u64>,
    support: Vec<usize>,
    total: u64,
    /// For dense games, `sums[k]` is the payoff total against this side's plays.
    sums: Option<Vec<f64>>,
}

impl Empirical {
    fn new(n: usize, dense: bool) -> Self {
        Empirical {
            counts: vec![0; n],
            support: Vec::new(),
            total: 0,
            sums: dense.then(|| vec![0.0; n]),
        }
    }

    fn push(&mut self, index: usize, column_of_payoffs: impl Fn(usize) -> f64) {
        if self.counts[index] == 0 {
            let at = self.support.partition_point(|&s| s < index);
            self.support.insert(at, index);
        }
        self.counts[index] += 1;
        self.total += 1;
        if let Some(sums) = &mut self.sums {
            for (k, s) in sums.iter_mut().enumerate() {
                *s += column_of_payoffs(k);
            }
        }
    }

    fn dist(&self) -> MixedStrategy {
        let t = self.total as f64;
        let atoms = self
            .support
            .iter()
            .map(|&i| (i, self.counts[i] as f64 / t))
            .collect();
        SparseDist::new(atoms).expect("counts form a distribution")
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

struct Profile<'g, G: ?Sized> {
    game: &'g G,
    dense: Option<&'g DenseGame>,
    rows: Empirical,
    cols: Empirical,
    br_calls: u64,
}

impl<'g, G: ZeroSumGame + ?Sized> Profile<'g, G> {
    fn new(game: &'g G) -> Self {
        let dense = game.as_dense();
        let n = game.size();
        Profile {
            game,
            dense,
            rows: Empirical::new(n, dense.is_some()),
            cols: Empirical::new(n, dense.is_some()),
            br_calls: 0,
        }
    }

    fn push(&mut self, x: usize, y: usize) {
        match self.dense {
            Some(d) => {
                let n = d.size();
                // row sums: (G q_counts)_i; column sums: (p_counts^T G)_j
                self.cols.push(y, |i| d.payoffs[i * n + y]);
                self.rows.push(x, |j| d.payoffs[x * n + j]);
            }
            None => {
                self.cols.push(y, |_| 0.0);
                self.rows.push(x, |_| 0.0);
            }
        }
    }

    /// `BR1(q_bar)`.
    fn best_row(&mut self) -> usize {
        self.br_calls += 1;
        match &self.cols.sums {
            Some(sums) => argmin(sums),
            None => self.game.best_row(&self.cols.dist()),
        }
    }

    /// `BR2(p_bar)`.
    fn best_col(&mut self) -> usize {
        self.br_calls += 1;
        match &self.rows.sums {
            Some(sums) => argmax(sums),
            None => self.game.best_col(&self.rows.dist()),
        }
    }

    fn gap(&self) -> f64 {
        match (&self.cols.sums, &self.rows.sums) {
            (Some(row_values), Some(col_values)) => {
                let t = self.rows.total as f64;
                let min_row = row_values.iter().copied().fold(f64::INFINITY, f64::min);
                let max_col = col_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (max_col - min_row) / t
            }
            _ => evaluate(self.game, &self.rows.dist(), &self.cols.dist()).duality_gap,
        }
    }

    fn report(
        &self,
        value_calls: u64,
        checkpoints: Vec<(usize, f64)>,
        start: Instant,
    ) -> EquilibriumReport {
        let mut report = evaluate(self.game, &self.rows.dist(), &self.cols.dist());
        report.rounds = self.rows.total as usize;
        report.value_calls = value_calls;
        report.br_calls = self.br_calls;
        report.checkpoints = checkpoints;
        report.wall_seconds = start.elapsed().as_secs_f64();
        report
    }
}

pub(crate) fn is_checkpoint(t: usize, horizon: usize) -> bool {
    t.is_power_of_two() || t == horizon
}

fn checked_payoff<G: ZeroSumGame + ?Sized>(game: &G, row: usize, col: usize) -> Result<f64> {
    if let Some(dense) = game.as_dense() {
        // validated at construction
        return Ok(dense.payoffs[row * dense.n + col]);
    }
    let value = game.payoff(row, col);
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::PayoffRange { row, col, value })
    }
}

fn player(n: usize, horizon: usize, base: u64, side: &str) -> Result<SelfOblivious<MainLearner>> {
    let tag = seed::label(side);
    let learner = MainLearner::new(n, horizon, &mut seed::substream(base, &[tag, 0]))?;
    Ok(SelfOblivious::new(
        learner,
        seed::derive(base, &[tag, 1]),
        seed::derive(base, &[tag, 2]),
    ))
}

/// Both players run the self-oblivious main learner for `horizon` rounds;
/// returns the report for the empirical strategies.
pub fn solve_game<G: ZeroSumGame + ?Sized>(
    game: &G,
    horizon: usize,
    seed: u64,
) -> Result<EquilibriumReport> {
    check_horizon(horizon)?;
    let n = game.size();
    if let Some(dense) = game.as_dense() {
        return self_play(
            game,
            horizon,
            seed,
            |row, col| dense.payoffs[row * n + col],
            || None,
        );
    }
    let failure = Cell::new(None);
    let lookup = |row, col| {
        checked_payoff(game, row, col).unwrap_or_else(|e| {
            let first = failure.take();
            failure.set(first.or(Some(e)));
            0.0
        })
    };
    self_play(game, horizon, seed, lookup, || failure.take())
}

fn self_play<G: ZeroSumGame + ?Sized>(
    game: &G,
    horizon: usize,
    seed: u64,
    lookup: impl Fn(usize, usize) -> f64,
    failure: impl Fn() -> Option<Error>,
) -> Result<EquilibriumReport> {
    let start = Instant::now();
    let n = game.size();
    let mut row = player(n, horizon, seed, "row")?;
    let mut col = player(n, horizon, seed, "col")?;
    let mut profile = Profile::new(game);
    let mut value_calls = 0u64;
    let mut checkpoints = Vec::new();
    for t in 1..=horizon {
        let x = row.play()?.index();
        let y = col.play()?.index();
        profile.push(x, y);
        let row_leader = ExpertId(profile.best_row());
        let col_leader = ExpertId(profile.best_col());
        let mut row_loss = |i: ExpertId| {
            value_calls += 1;
            lookup(i.index(), y)
        };
        row.observe(&mut row_loss, row_leader)?;
        let mut col_loss = |j: ExpertId| {
            value_calls += 1;
            1.0 - lookup(x, j.index())
        };
        col.observe(&mut col_loss, col_leader)?;
        if let Some(e) = failure() {
            return Err(e);
        }
        if is_checkpoint(t, horizon) {
            checkpoints.push((t, profile.gap()));
        }
    }
    Ok(profile.report(value_calls, checkpoints, start))
}

/// Row player runs the main learner; the column player best-responds to the
/// row player's empirical strategy so far (column 0 on the first round).
pub fn fictitious_play<G: ZeroSumGame + ?Sized>(
    game: &G,
    horizon: usize,
    seed: u64,
) -> Result<EquilibriumReport> {
    check_horizon(horizon)?;
    let start = Instant::now();
    let mut row = player(game.size(), horizon, seed, "row")?;
    let mut profile = Profile::new(game);
    let mut value_calls = 0u64;
    let mut failure = None;
    let mut checkpoints = Vec::new();
    let mut y = 0;
    for t in 1..=horizon {
        let x = row.play()?.index();
        profile.push(x, y);
        let row_leader = ExpertId(profile.best_row());
        let mut row_loss = |i: ExpertId| {
            value_calls += 1;
            checked_payoff(game, i.index(), y).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            })
        };
        row.observe(&mut row_loss, row_leader)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        y = profile.best_col();
        if is_checkpoint(t, horizon) {
            checkpoints.push((t, profile.gap()));
        }
    }
    Ok(profile.report(value_calls, checkpoints, start))
}
