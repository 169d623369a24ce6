use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::learner::{check_eta, check_gamma, check_loss, OnlineLearner};
use crate::model::ExpertId;
use crate::mw::ExpCache;
use crate::sampling::MixedWeights;

/// Amortized multiplicative weights: one uniformly chosen coordinate of the loss
/// is revealed per round and scaled into an unbiased estimate
/// `f^(x) = N f(y) 1{x = y}`. State lives in [`MixedWeights`], so each round
/// costs `O(log N)` and exactly one value query.
///
/// The learner runs over a list of slots; each slot names an expert and the
/// same expert may occupy several slots.
#[derive(Clone, Debug)]
pub struct Mw2 {
    slots: Vec<ExpertId>,
    num_experts: usize,
    eta: f64,
    gamma: f64,
    weights: MixedWeights,
    round: usize,
    multipliers: ExpCache,
}

impl Mw2 {
    /// One slot per expert.
    pub fn new(num_experts: usize, eta: f64, gamma: f64) -> Result<Self> {
        Self::over(
            (0..num_experts).map(ExpertId).collect(),
            num_experts,
            eta,
            gamma,
        )
    }

    /// `eta = 2 sqrt(ln(NT) / (NT))`, `gamma = 1 / T`.
    pub fn tuned(num_experts: usize, horizon: usize) -> Result<Self> {
        let nt = (num_experts * horizon.max(1)) as f64;
        let eta = 2.0 * (nt.ln().max(f64::MIN_POSITIVE) / nt).sqrt();
        Self::new(num_experts, eta, 1.0 / horizon.max(1) as f64)
    }

    /// Runs over an explicit slot list drawn from `num_experts` experts.
    pub fn over(slots: Vec<ExpertId>, num_experts: usize, eta: f64, gamma: f64) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::ParamDomain("need at least one slot".into()));
        }
        if let Some(bad) = slots.iter().find(|x| x.index() >= num_experts) {
            return Err(Error::IndexRange {
                index: bad.index(),
                bound: num_experts,
            });
        }
        check_eta(eta)?;
        check_gamma(gamma)?;
        let weights = MixedWeights::new(slots.len())?;
        Ok(Mw2 {
            slots,
            num_experts,
            eta,
            gamma,
            weights,
            round: 0,
            multipliers: ExpCache::new(-eta),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn slots(&self) -> &[ExpertId] {
        &self.slots
    }

    pub fn weights(&self) -> &MixedWeights {
        &self.weights
    }

    /// Draws a slot from the implied weight distribution.
    pub fn sample_slot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.weights.sample(rng)
    }

    /// Update with the estimator placed on `slot` with observed loss `loss`.
    pub fn update_at(&mut self, slot: usize, loss: f64) -> Result<()> {
        if slot >= self.slots.len() {
            return Err(Error::IndexRange {
                index: slot,
                bound: self.slots.len(),
            });
        }
        let loss = check_loss(loss)?;
        let estimate = self.slots.len() as f64 * loss;
        let multiplier = self.multipliers.get(estimate);
        self.weights.decay_checked(slot, multiplier, self.gamma)?;
        self.round += 1;
        Ok(())
    }
}

impl OnlineLearner for Mw2 {
    fn num_experts(&self) -> usize {
        self.num_experts
    }

    fn round(&self) -> usize {
        self.round
    }

    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId> {
        Ok(self.slots[self.sample_slot(rng)?])
    }

    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        _leader: ExpertId,
        rng: &mut dyn RngCore,
    ) -> Result<()> {
        let slot = rng.gen_range(0..self.slots.len());
        let loss = loss_of(self.slots[slot]);
        self.update_at(slot, loss)
    }

    fn work(&self) -> u64 {
        self.weights.nodes_touched()
    }

    fn snapshot(&self, out: &mut Vec<f64>) {
        out.extend(self.weights.probabilities());
    }
}
