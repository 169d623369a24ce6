//! The main optimizable-experts learner and its self-oblivious wrapper.
//!
//! A random candidate multiset `R` is handled by amortized weights [`Mw2`];
//! Leaders with budget `floor(sqrt N)` tracks recent leaders; a two-way
//! [`Mw1`] picks between them. Per-round cost is polylogarithmic in `N` and `T`.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::leaders::Leaders;
use crate::learner::{check_horizon, OnlineLearner};
use crate::model::ExpertId;
use crate::mw::{Mw1, Mw2};
use crate::seed;

/// Closed-form parameters for `N` experts and horizon `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct MainParams {
    pub num_experts: usize,
    pub horizon: usize,
    /// `2 / (N^(1/4) sqrt T)`
    pub eta: f64,
    /// `2 sqrt(ln(2T) / T)`
    pub nu: f64,
    pub gamma: f64,
    /// `floor(2 sqrt(N) ln T)`, at least 1
    pub candidates: usize,
    /// `floor(sqrt N)`, at least 1
    pub budget: usize,
}

impl MainParams {
    pub fn new(num_experts: usize, horizon: usize) -> Result<Self> {
        if num_experts == 0 {
            return Err(Error::ParamDomain("need at least one expert".into()));
        }
        check_horizon(horizon)?;
        let (n, t) = (num_experts as f64, horizon as f64);
        Ok(MainParams {
            num_experts,
            horizon,
            eta: 2.0 / (n.powf(0.25) * t.sqrt()),
            nu: 2.0 * ((2.0 * t).ln() / t).sqrt(),
            gamma: 1.0 / t,
            candidates: ((2.0 * n.sqrt() * t.ln()).floor() as usize).max(1),
            budget: (n.sqrt().floor() as usize).max(1),
        })
    }
}

#[derive(Clone, Debug)]
pub struct MainLearner {
    params: MainParams,
    candidates: Mw2,
    leaders: Leaders,
    combiner: Mw1,
    round: usize,
}

impl MainLearner {
    /// `rng` draws the candidate multiset.
    pub fn new<R: Rng + ?Sized>(num_experts: usize, horizon: usize, rng: &mut R) -> Result<Self> {
        let params = MainParams::new(num_experts, horizon)?;
        let slots = (0..params.candidates)
            .map(|_| ExpertId(rng.gen_range(0..num_experts)))
            .collect();
        let candidates = Mw2::over(slots, num_experts, params.eta, params.gamma)?;
        let leaders = Leaders::new(num_experts, params.budget, horizon)?;
        let combiner = Mw1::new(2, params.nu, params.gamma)?;
        Ok(MainLearner {
            params,
            candidates,
            leaders,
            combiner,
            round: 0,
        })
    }

    pub fn params(&self) -> &MainParams {
        &self.params
    }

    pub fn candidates(&self) -> &Mw2 {
        &self.candidates
    }

    pub fn leaders(&self) -> &Leaders {
        &self.leaders
    }

    pub fn combiner(&self) -> &Mw1 {
        &self.combiner
    }
}

impl OnlineLearner for MainLearner {
    fn num_experts(&self) -> usize {
        self.params.num_experts
    }

    fn round(&self) -> usize {
        self.round
    }

    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId> {
        if self.round >= self.params.horizon {
            return Err(Error::HorizonExceeded {
                round: self.round + 1,
                horizon: self.params.horizon,
            });
        }
        match self.combiner.sample(rng)? {
            0 => self.candidates.play(rng),
            _ => self.leaders.play(rng),
        }
    }

    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        rng: &mut dyn RngCore,
    ) -> Result<()> {
        let base = rng.next_u64();
        let round = self.round as u64;
        let mut fresh = seed::fork(base, &[round, 0]);
        let meta = [
            loss_of(self.candidates.play(&mut fresh)?),
            loss_of(self.leaders.play(&mut fresh)?),
        ];
        self.candidates
            .observe(loss_of, leader, &mut seed::fork(base, &[round, 1]))?;
        self.leaders
            .observe(loss_of, leader, &mut seed::fork(base, &[round, 2]))?;
        self.combiner.update(&meta)?;
        self.round += 1;
        Ok(())
    }

    fn work(&self) -> u64 {
        self.candidates.work() + self.leaders.work() + self.combiner.work()
    }

    fn snapshot(&self, out: &mut Vec<f64>) {
        self.combiner.snapshot(out);
        self.candidates.snapshot(out);
        self.leaders.snapshot(out);
    }
}

/// Runs a learner with one generator for plays and an independent one for
/// updates, so realized plays never influence the learner's future
/// distributions. Safe against adversaries that react to past plays.
#[derive(Clone, Debug)]
pub struct SelfOblivious<L> {
    inner: L,
    play_rng: seed::Rng,
    update_rng: seed::Rng,
}

impl<L: OnlineLearner> SelfOblivious<L> {
    pub fn new(inner: L, play_seed: u64, update_seed: u64) -> Self {
        SelfOblivious {
            inner,
            play_rng: seed::rng(play_seed),
            update_rng: seed::rng(update_seed),
        }
    }

    pub fn inner(&self) -> &L {
        &self.inner
    }

    pub fn into_inner(self) -> L {
        self.inner
    }

    pub fn play(&mut self) -> Result<ExpertId> {
        self.inner.play(&mut self.play_rng)
    }

    pub fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
    ) -> Result<()> {
        self.inner.observe(loss_of, leader, &mut self.update_rng)
    }

    pub fn snapshot(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.inner.snapshot(&mut out);
        out
    }
}
