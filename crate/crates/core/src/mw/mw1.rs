use std::cell::Cell;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::learner::{check_eta, check_gamma, OnlineLearner};
use crate::model::ExpertId;
use crate::mw::ExpCache;

/// Dense multiplicative weights with uniform mixing:
/// `w'(x) = w(x) exp(-eta f(x)) + (gamma / N) W`.
#[derive(Clone, Debug)]
pub struct Mw1 {
    eta: f64,
    gamma: f64,
    weights: Vec<f64>,
    total: f64,
    log_scale: f64,
    round: usize,
    work: Cell<u64>,
    multipliers: ExpCache,
}

impl Mw1 {
    pub fn new(num_experts: usize, eta: f64, gamma: f64) -> Result<Self> {
        if num_experts == 0 {
            return Err(Error::ParamDomain("need at least one expert".into()));
        }
        check_eta(eta)?;
        check_gamma(gamma)?;
        Ok(Mw1 {
            eta,
            gamma,
            weights: vec![1.0; num_experts],
            total: num_experts as f64,
            log_scale: 0.0,
            round: 0,
            work: Cell::new(0),
            multipliers: ExpCache::new(-eta),
        })
    }

    /// `eta = sqrt(2 ln(NT) / T)`, `gamma = 1 / T`.
    pub fn tuned(num_experts: usize, horizon: usize) -> Result<Self> {
        let (n, t) = (num_experts as f64, horizon.max(1) as f64);
        let eta = (2.0 * (n * t).ln().max(f64::MIN_POSITIVE) / t).sqrt();
        Self::new(num_experts, eta.max(f64::MIN_POSITIVE), 1.0 / t)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weights in original units.
    pub fn weights(&self) -> Vec<f64> {
        let scale = self.log_scale.exp();
        self.weights.iter().map(|w| w * scale).collect()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.weights[index] / self.total
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.total).collect()
    }

    /// Draws an index from `w / W` by a linear scan.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if !(self.total > 0.0) {
            return Err(Error::EmptySupport);
        }
        let mut u = rng.gen::<f64>() * self.total;
        let mut last = None;
        for (i, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if u < w {
                self.work.set(self.work.get() + i as u64 + 1);
                return Ok(i);
            }
            u -= w;
            last = Some(i);
        }
        self.work.set(self.work.get() + self.weights.len() as u64);
        last.ok_or(Error::EmptySupport)
    }

    /// Applies one round of nonnegative losses.
    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.weights.len() {
            return Err(Error::Domain(format!(
                "expected {} losses, got {}",
                self.weights.len(),
                losses.len()
            )));
        }
        let valid = losses
            .iter()
            .fold(true, |ok, &l| ok & (l >= 0.0) & (l < f64::INFINITY));
        if !valid {
            let bad = losses.iter().find(|l| !(0.0..f64::INFINITY).contains(*l));
            return Err(Error::LossRange {
                value: *bad.expect("an invalid loss"),
                expected: "[0, inf)",
            });
        }
        let floor = self.gamma / self.weights.len() as f64 * self.total;
        let mut total = 0.0;
        for (w, &f) in self.weights.iter_mut().zip(losses) {
            *w = *w * self.multipliers.get(f) + floor;
            total += *w;
        }
        self.total = total;
        self.round += 1;
        self.work.set(self.work.get() + self.weights.len() as u64);
        if !(1e-12..=1e12).contains(&self.total) {
            self.renormalize();
        }
        Ok(())
    }

    fn renormalize(&mut self) {
        let n = self.weights.len() as f64;
        if !(self.total > 0.0) {
            // every weight underflowed: restart from uniform in a fresh scale
            self.weights.iter_mut().for_each(|w| *w = 1.0);
            self.total = n;
            return;
        }
        let factor = n / self.total;
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.total = self.weights.iter().sum();
        self.log_scale -= factor.ln();
    }
}

impl OnlineLearner for Mw1 {
    fn num_experts(&self) -> usize {
        self.weights.len()
    }

    fn round(&self) -> usize {
        self.round
    }

    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId> {
        self.sample(rng).map(ExpertId)
    }

    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        _leader: ExpertId,
        _rng: &mut dyn RngCore,
    ) -> Result<()> {
        let losses: Vec<f64> = (0..self.weights.len())
            .map(|x| loss_of(ExpertId(x)))
            .collect();
        self.update(&losses)
    }

    fn work(&self) -> u64 {
        self.work.get()
    }

    fn snapshot(&self, out: &mut Vec<f64>) {
        out.extend(self.probabilities());
    }
}
