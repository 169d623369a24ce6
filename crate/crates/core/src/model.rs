//! The optimizable-experts model: expert and action handles, sparse
//! distributions, value/optimization oracles with call metering, leader
//! tracking and regret accounting.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an expert in `[0, N)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExpertId(pub usize);

impl ExpertId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }

    pub fn checked(index: usize, num_experts: usize) -> Result<Self> {
        if index < num_experts {
            Ok(ExpertId(index))
        } else {
            Err(Error::IndexRange {
                index,
                bound: num_experts,
            })
        }
    }
}

impl fmt::Display for ExpertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Handle of an adversary action (a column of the loss table).
pub type ActionId = usize;

/// A loss in `[0, 1]`.
#[derive(Copy, Clone, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LossValue(f64);

impl LossValue {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(LossValue(value))
        } else {
            Err(Error::LossRange {
                value,
                expected: "[0, 1]",
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Finitely supported probability distribution, stored as `(index, mass)`
/// atoms sorted by index. Masses are strictly positive and sum to one within
/// [`SparseDist::MASS_TOLERANCE`]; inputs that violate this are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseDist {
    atoms: Vec<(usize, f64)>,
}

impl SparseDist {
    pub const MASS_TOLERANCE: f64 = 1e-9;

    pub fn new(atoms: Vec<(usize, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Distribution("no atoms".into()));
        }
        let mut total = 0.0;
        for (pos, &(index, mass)) in atoms.iter().enumerate() {
            if !(mass.is_finite() && mass > 0.0) {
                return Err(Error::Distribution(format!(
                    "atom {index} has non-positive mass {mass}"
                )));
            }
            if pos > 0 && atoms[pos - 1].0 >= index {
                return Err(Error::Distribution(
                    "atom indices must be strictly increasing".into(),
                ));
            }
            total += mass;
        }
        if (total - 1.0).abs() > Self::MASS_TOLERANCE {
            return Err(Error::Distribution(format!("masses sum to {total}")));
        }
        Ok(SparseDist { atoms })
    }

    pub fn point(index: usize) -> Self {
        SparseDist {
            atoms: vec![(index, 1.0)],
        }
    }

    /// Empirical distribution from occurrence counts. Zero counts are skipped.
    pub fn from_counts<I>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, u64)>,
    {
        let counts: Vec<(usize, u64)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let total: u64 = counts.iter().map(|&(_, c)| c).sum();
        if total == 0 {
            return Err(Error::Distribution("all counts are zero".into()));
        }
        let denom = total as f64;
        Self::new(
            counts
                .into_iter()
                .map(|(i, c)| (i, c as f64 / denom))
                .collect(),
        )
    }

    /// Dense probability vector to sparse form; entries `<= 0` are dropped.
    pub fn from_dense(probs: &[f64]) -> Result<Self> {
        Self::new(
            probs
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0)
                .map(|(i, &p)| (i, p))
                .collect(),
        )
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Distribution("empty support".into()));
        }
        let mass = 1.0 / len as f64;
        Self::new((0..len).map(|i| (i, mass)).collect())
    }

    pub fn atoms(&self) -> &[(usize, f64)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.atoms.iter().map(|&(i, _)| i)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn max_index(&self) -> usize {
        self.atoms.last().map(|&(i, _)| i).unwrap_or(0)
    }

    pub fn mass(&self, index: usize) -> f64 {
        self.atoms
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.atoms[pos].1)
            .unwrap_or(0.0)
    }

    /// Expectation of `f` under the distribution.
    pub fn expect(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.atoms.iter().map(|&(i, m)| m * f(i)).sum()
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(i, m) in &self.atoms {
            out[i] = m;
        }
        out
    }
}

/// A loss landscape over `N` experts, accessed through a value oracle and an
/// optimization oracle.
pub trait LossModel {
    fn num_experts(&self) -> usize;

    /// Value oracle: the loss of `expert` against `action`.
    fn loss(&self, expert: ExpertId, action: ActionId) -> f64;

    /// Optimization oracle: an expert minimizing the `dist`-expected loss.
    fn best_expert(&self, dist: &SparseDist) -> ExpertId {
        scan_best_expert(self, dist)
    }
}

/// Reference optimization oracle: exhaustive scan, lowest index among minimizers.
pub fn scan_best_expert<M: LossModel + ?Sized>(model: &M, dist: &SparseDist) -> ExpertId {
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for x in 0..model.num_experts() {
        let value = dist.expect(|a| model.loss(ExpertId(x), a));
        if value < best_value {
            best_value = value;
            best = x;
        }
    }
    ExpertId(best)
}

/// Explicit loss table; actions can be appended, which is how adaptive
/// adversaries publish their loss vectors.
#[derive(Clone, Debug)]
pub struct TableModel {
    num_experts: usize,
    // action-major: row `a` holds the losses of all experts against action `a`
    table: Vec<f64>,
}

impl TableModel {
    pub fn new(num_experts: usize) -> Self {
        TableModel {
            num_experts,
            table: Vec::new(),
        }
    }

    pub fn from_rows(num_experts: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut model = Self::new(num_experts);
        for row in rows {
            model.push_action(row)?;
        }
        Ok(model)
    }

    pub fn push_action(&mut self, losses: &[f64]) -> Result<ActionId> {
        if losses.len() != self.num_experts {
            return Err(Error::Domain(format!(
                "loss vector has {} entries, expected {}",
                losses.len(),
                self.num_experts
            )));
        }
        for &l in losses {
            LossValue::new(l)?;
        }
        self.table.extend_from_slice(losses);
        Ok(self.num_actions() - 1)
    }

    pub fn num_actions(&self) -> usize {
        if self.num_experts == 0 {
            0
        } else {
            self.table.len() / self.num_experts
        }
    }

    pub fn row(&self, action: ActionId) -> &[f64] {
        &self.table[action * self.num_experts..(action + 1) * self.num_experts]
    }
}

impl LossModel for TableModel {
    fn num_experts(&self) -> usize {
        self.num_experts
    }

    #[inline]
    fn loss(&self, expert: ExpertId, action: ActionId) -> f64 {
        self.table[action * self.num_experts + expert.0]
    }
}

/// Snapshot of oracle usage.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounters {
    pub value_calls: u64,
    pub opt_calls: u64,
    /// Distinct experts passed to the value oracle.
    pub experts_touched: u64,
    /// Distinct actions appearing in the support of an optimization query.
    pub actions_touched: u64,
}

impl OracleCounters {
    pub fn total_calls(&self) -> u64 {
        self.value_calls + self.opt_calls
    }
}

/// Value and optimization oracles over a [`LossModel`], with every call metered.
///
/// Counters use interior mutability so that learners can hold a shared
/// reference while querying; an `OraclePair` belongs to a single trial.
pub struct OraclePair<M> {
    model: M,
    value_calls: Cell<u64>,
    opt_calls: Cell<u64>,
    touched_experts: RefCell<Vec<u64>>,
    experts_touched: Cell<u64>,
    touched_actions: RefCell<FxHashSet<ActionId>>,
}

impl<M: LossModel> OraclePair<M> {
    pub fn new(model: M) -> Self {
        let words = model.num_experts().div_ceil(64);
        OraclePair {
            model,
            value_calls: Cell::new(0),
            opt_calls: Cell::new(0),
            touched_experts: RefCell::new(vec![0; words]),
            experts_touched: Cell::new(0),
            touched_actions: RefCell::new(FxHashSet::default()),
        }
    }

    pub fn num_experts(&self) -> usize {
        self.model.num_experts()
    }

    /// Unmetered access, for evaluation code that is not part of the learner.
    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut M {
        &mut self.model
    }

    pub fn into_model(self) -> M {
        self.model
    }

    #[inline]
    pub fn value(&self, expert: ExpertId, action: ActionId) -> f64 {
        self.value_calls.set(self.value_calls.get() + 1);
        let (word, bit) = (expert.0 >> 6, 1u64 << (expert.0 & 63));
        let mut touched = self.touched_experts.borrow_mut();
        if touched[word] & bit == 0 {
            touched[word] |= bit;
            self.experts_touched.set(self.experts_touched.get() + 1);
        }
        self.model.loss(expert, action)
    }

    pub fn opt(&self, dist: &SparseDist) -> ExpertId {
        self.opt_calls.set(self.opt_calls.get() + 1);
        self.touched_actions.borrow_mut().extend(dist.support());
        self.model.best_expert(dist)
    }

    /// Records an optimization call whose answer was obtained out of band
    /// (e.g. an incrementally maintained leader).
    pub fn charge_opt(&self) {
        self.opt_calls.set(self.opt_calls.get() + 1);
    }

    pub fn counters(&self) -> OracleCounters {
        OracleCounters {
            value_calls: self.value_calls.get(),
            opt_calls: self.opt_calls.get(),
            experts_touched: self.experts_touched.get(),
            actions_touched: self.touched_actions.borrow().len() as u64,
        }
    }
}

/// The leader `argmin_x sum_{s<=t} loss(x, y_s)` of a nonempty history,
/// obtained with a single optimization-oracle call on the empirical
/// distribution of the history.
pub fn compute_leader<M: LossModel>(
    history: &[ActionId],
    oracle: &OraclePair<M>,
) -> Result<ExpertId> {
    if history.is_empty() {
        return Err(Error::NoRounds);
    }
    let mut counts: BTreeMap<ActionId, u64> = BTreeMap::new();
    for &a in history {
        *counts.entry(a).or_default() += 1;
    }
    let dist = SparseDist::from_counts(counts)?;
    Ok(oracle.opt(&dist))
}

/// Append-only adversary history with the leader recomputed after every round
/// through the optimization oracle.
#[derive(Clone, Debug, Default)]
pub struct LeaderFeed {
    counts: BTreeMap<ActionId, u64>,
    rounds: u64,
    current: Option<ExpertId>,
}

impl LeaderFeed {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn current_leader(&self) -> Option<ExpertId> {
        self.current
    }

    pub fn history_dist(&self) -> Result<SparseDist> {
        if self.rounds == 0 {
            return Err(Error::NoRounds);
        }
        SparseDist::from_counts(self.counts.iter().map(|(&a, &c)| (a, c)))
    }

    /// Appends `action` and returns the leader over the extended history.
    pub fn push<M: LossModel>(
        &mut self,
        action: ActionId,
        oracle: &OraclePair<M>,
    ) -> Result<ExpertId> {
        *self.counts.entry(action).or_default() += 1;
        self.rounds += 1;
        let leader = oracle.opt(&self.history_dist()?);
        self.current = Some(leader);
        Ok(leader)
    }
}

/// Leader tracking from explicitly maintained cumulative losses, for loss
/// tables whose optimization oracle has no closed form. Same tie-break as
/// [`scan_best_expert`].
#[derive(Clone, Debug)]
pub struct CumulativeLeader {
    sums: Vec<CompensatedSum>,
}

impl CumulativeLeader {
    pub fn new(num_experts: usize) -> Self {
        CumulativeLeader {
            sums: vec![CompensatedSum::default(); num_experts],
        }
    }

    pub fn push(&mut self, losses: &[f64]) -> ExpertId {
        for (s, &l) in self.sums.iter_mut().zip(losses) {
            s.add(l);
        }
        self.leader()
    }

    pub fn leader(&self) -> ExpertId {
        let mut best = 0;
        let mut best_value = f64::INFINITY;
        for (x, s) in self.sums.iter().enumerate() {
            let v = s.value();
            if v < best_value {
                best_value = v;
                best = x;
            }
        }
        ExpertId(best)
    }
}

/// Neumaier-compensated running sum.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Cumulative player loss against every fixed expert.
#[derive(Clone, Debug)]
pub struct RegretLedger {
    round: u64,
    player: CompensatedSum,
    comparators: Vec<CompensatedSum>,
    oracle_calls: OracleCounters,
}

impl RegretLedger {
    pub fn new(num_experts: usize) -> Self {
        RegretLedger {
            round: 0,
            player: CompensatedSum::default(),
            comparators: vec![CompensatedSum::default(); num_experts],
            oracle_calls: OracleCounters::default(),
        }
    }

    /// Adds one round: the played expert and the loss of every expert.
    pub fn record(&mut self, played: ExpertId, losses: &[f64]) -> Result<()> {
        if losses.len() != self.comparators.len() {
            return Err(Error::Domain(format!(
                "loss vector has {} entries, expected {}",
                losses.len(),
                self.comparators.len()
            )));
        }
        if let Some(&bad) = losses.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::LossRange {
                value: bad,
                expected: "[0, 1]",
            });
        }
        let played_loss = *losses.get(played.0).ok_or(Error::IndexRange {
            index: played.0,
            bound: losses.len(),
        })?;
        self.player.add(played_loss);
        for (c, &l) in self.comparators.iter_mut().zip(losses) {
            c.add(l);
        }
        self.round += 1;
        Ok(())
    }

    pub fn set_oracle_calls(&mut self, counters: OracleCounters) {
        self.oracle_calls = counters;
    }

    pub fn oracle_calls(&self) -> OracleCounters {
        self.oracle_calls
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn player_loss(&self) -> f64 {
        self.player.value()
    }

    pub fn comparator_loss(&self, expert: ExpertId) -> f64 {
        self.comparators[expert.0].value()
    }

    /// Best expert in hindsight (lowest index among ties) and its loss.
    pub fn best_comparator(&self) -> (ExpertId, f64) {
        let mut best = (ExpertId(0), f64::INFINITY);
        for (x, c) in self.comparators.iter().enumerate() {
            if c.value() < best.1 {
                best = (ExpertId(x), c.value());
            }
        }
        best
    }

    pub fn cumulative_regret(&self) -> f64 {
        if self.comparators.is_empty() {
            return 0.0;
        }
        self.player.value() - self.best_comparator().1
    }

    /// Average regret so far; zero before the first round.
    pub fn average_regret(&self) -> f64 {
        if self.round == 0 {
            0.0
        } else {
            self.cumulative_regret() / self.round as f64
        }
    }
}
