//! The round interface shared by every learner.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::model::ExpertId;

/// A full-information learner that only reaches losses through an accessor.
///
/// `play` borrows the learner immutably, so a realized play can never feed back
/// into the learner's state: whatever `observe` does depends only on the loss
/// accessor, the leader and the generator passed to it.
pub trait OnlineLearner {
    fn num_experts(&self) -> usize;

    /// Rounds observed so far.
    fn round(&self) -> usize;

    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId>;

    /// Consumes the feedback of one round. `loss_of` is a metered value oracle
    /// for the current round's loss function; `leader` is the leader of the
    /// history including this round.
    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        rng: &mut dyn RngCore,
    ) -> Result<()>;

    /// Instrumented work counter (tree nodes and dense entries touched).
    fn work(&self) -> u64 {
        0
    }

    /// Appends the learner's complete mutable state as numbers.
    fn snapshot(&self, out: &mut Vec<f64>);
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn num_experts(&self) -> usize {
        (**self).num_experts()
    }
    fn round(&self) -> usize {
        (**self).round()
    }
    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId> {
        (**self).play(rng)
    }
    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        rng: &mut dyn RngCore,
    ) -> Result<()> {
        (**self).observe(loss_of, leader, rng)
    }
    fn work(&self) -> u64 {
        (**self).work()
    }
    fn snapshot(&self, out: &mut Vec<f64>) {
        (**self).snapshot(out)
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::ParamDomain(format!(
            "step size {eta} must be positive"
        )))
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::ParamDomain(format!(
            "mixing rate {gamma} outside [0, 1]"
        )))
    }
}

pub(crate) fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        Err(Error::Horizon)
    } else {
        Ok(())
    }
}

pub(crate) fn check_loss(value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::LossRange {
            value,
            expected: "[0, 1]",
        })
    }
}

/// Plays the leader handed over on the previous round (expert 0 first).
#[derive(Clone, Debug)]
pub struct FollowTheLeader {
    num_experts: usize,
    leader: ExpertId,
    round: usize,
}

impl FollowTheLeader {
    pub fn new(num_experts: usize) -> Result<Self> {
        if num_experts == 0 {
            return Err(Error::ParamDomain("need at least one expert".into()));
        }
        Ok(FollowTheLeader {
            num_experts,
            leader: ExpertId(0),
            round: 0,
        })
    }
}

impl OnlineLearner for FollowTheLeader {
    fn num_experts(&self) -> usize {
        self.num_experts
    }

    fn round(&self) -> usize {
        self.round
    }

    fn play(&self, _rng: &mut dyn RngCore) -> Result<ExpertId> {
        Ok(self.leader)
    }

    fn observe(
        &mut self,
        _loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        _rng: &mut dyn RngCore,
    ) -> Result<()> {
        self.leader = ExpertId::checked(leader.index(), self.num_experts)?;
        self.round += 1;
        Ok(())
    }

    fn snapshot(&self, out: &mut Vec<f64>) {
        out.push(self.leader.index() as f64);
    }
}
