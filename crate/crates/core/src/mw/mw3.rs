use rand::{Rng, RngCore};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::learner::{check_eta, check_gamma, check_loss, OnlineLearner};
use crate::model::ExpertId;
use crate::mw::ExpCache;
use crate::sampling::MixedWeights;

const NIL: usize = usize::MAX;

/// Multiplier applied to the single revealed slot loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EstimatorScale {
    /// Scale by the buffer size `k`.
    #[default]
    Buffer,
    /// Scale by the total number of experts `N`.
    Experts,
}

/// What [`SlidingBuffer::activate`] did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Refreshed { slot: usize },
    Replaced { slot: usize, evicted: ExpertId },
}

/// `k` slots holding the most recently activated distinct experts, with an
/// intrusive recency list so activation and eviction are `O(1)`.
#[derive(Clone, Debug)]
pub struct SlidingBuffer {
    experts: Vec<ExpertId>,
    stamps: Vec<i64>,
    prev: Vec<usize>,
    next: Vec<usize>,
    oldest: usize,
    newest: usize,
    slot_of: FxHashMap<ExpertId, usize>,
}

impl SlidingBuffer {
    /// Slot `i` holds expert `i`; slot 0 is the oldest.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ParamDomain("buffer needs at least one slot".into()));
        }
        let experts: Vec<ExpertId> = (0..k).map(ExpertId).collect();
        let stamps = (0..k).map(|i| i as i64 - k as i64).collect();
        let prev = (0..k).map(|i| if i == 0 { NIL } else { i - 1 }).collect();
        let next = (0..k)
            .map(|i| if i + 1 == k { NIL } else { i + 1 })
            .collect();
        let slot_of = experts.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        Ok(SlidingBuffer {
            experts,
            stamps,
            prev,
            next,
            oldest: 0,
            newest: k - 1,
            slot_of,
        })
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn expert(&self, slot: usize) -> ExpertId {
        self.experts[slot]
    }

    pub fn experts(&self) -> &[ExpertId] {
        &self.experts
    }

    pub fn stamp(&self, slot: usize) -> i64 {
        self.stamps[slot]
    }

    pub fn slot_of(&self, expert: ExpertId) -> Option<usize> {
        self.slot_of.get(&expert).copied()
    }

    pub fn contains(&self, expert: ExpertId) -> bool {
        self.slot_of.contains_key(&expert)
    }

    /// Slot with the smallest activation stamp.
    pub fn oldest_slot(&self) -> usize {
        self.oldest
    }

    /// Experts from least to most recently activated.
    pub fn recency_order(&self) -> Vec<ExpertId> {
        let mut out = Vec::with_capacity(self.len());
        let mut slot = self.oldest;
        while slot != NIL {
            out.push(self.experts[slot]);
            slot = self.next[slot];
        }
        out
    }

    /// Marks `expert` as activated at `stamp`, evicting the oldest slot when
    /// the expert is not already buffered. Stamps must increase across calls.
    #[inline]
    pub fn activate(&mut self, expert: ExpertId, stamp: i64) -> Activation {
        if self.experts[self.newest] == expert {
            self.stamps[self.newest] = stamp;
            return Activation::Refreshed { slot: self.newest };
        }
        let outcome = match self.slot_of.get(&expert) {
            Some(&slot) => Activation::Refreshed { slot },
            None => {
                let slot = self.oldest;
                let evicted = self.experts[slot];
                self.slot_of.remove(&evicted);
                self.slot_of.insert(expert, slot);
                self.experts[slot] = expert;
                Activation::Replaced { slot, evicted }
            }
        };
        let slot = match outcome {
            Activation::Refreshed { slot } | Activation::Replaced { slot, .. } => slot,
        };
        self.stamps[slot] = stamp;
        if slot != self.newest {
            self.unlink(slot);
            self.prev[slot] = self.newest;
            self.next[slot] = NIL;
            self.next[self.newest] = slot;
            self.newest = slot;
        }
        outcome
    }

    fn unlink(&mut self, slot: usize) {
        let (p, n) = (self.prev[slot], self.next[slot]);
        if p == NIL {
            self.oldest = n;
        } else {
            self.next[p] = n;
        }
        if n == NIL {
            self.newest = p;
        } else {
            self.prev[n] = p;
        }
    }
}

/// Multiplicative weights over a sliding buffer of `k` recently activated
/// experts. Each slot keeps its weight when its expert is replaced.
#[derive(Clone, Debug)]
pub struct Mw3 {
    num_experts: usize,
    eta: f64,
    gamma: f64,
    scale: EstimatorScale,
    weights: MixedWeights,
    buffer: SlidingBuffer,
    round: usize,
    multipliers: ExpCache,
}

impl Mw3 {
    /// `k` is clamped to `num_experts`.
    pub fn new(num_experts: usize, k: usize, eta: f64, gamma: f64) -> Result<Self> {
        if num_experts == 0 {
            return Err(Error::ParamDomain("need at least one expert".into()));
        }
        check_eta(eta)?;
        check_gamma(gamma)?;
        let k = k.clamp(1, num_experts);
        Ok(Mw3 {
            num_experts,
            eta,
            gamma,
            scale: EstimatorScale::Buffer,
            weights: MixedWeights::new(k)?,
            buffer: SlidingBuffer::new(k)?,
            round: 0,
            multipliers: ExpCache::new(-eta * k as f64),
        })
    }

    /// `eta = 2 sqrt(ln(kT) / (kT))`, `gamma = 1 / T`.
    pub fn tuned(num_experts: usize, k: usize, horizon: usize) -> Result<Self> {
        let kt = (k.clamp(1, num_experts.max(1)) * horizon.max(1)) as f64;
        let eta = 2.0 * (kt.ln().max(f64::MIN_POSITIVE) / kt).sqrt();
        Self::new(num_experts, k, eta, 1.0 / horizon.max(1) as f64)
    }

    pub fn with_scale(mut self, scale: EstimatorScale) -> Self {
        self.scale = scale;
        self.multipliers = ExpCache::new(-self.eta * self.estimator_scale());
        self
    }

    pub fn k(&self) -> usize {
        self.buffer.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn buffer(&self) -> &SlidingBuffer {
        &self.buffer
    }

    pub fn weights(&self) -> &MixedWeights {
        &self.weights
    }

    fn estimator_scale(&self) -> f64 {
        match self.scale {
            EstimatorScale::Buffer => self.buffer.len() as f64,
            EstimatorScale::Experts => self.num_experts as f64,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ExpertId> {
        Ok(self.buffer.expert(self.weights.sample(rng)?))
    }

    /// One round: charges a uniformly chosen slot, then activates `leader`.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        rng: &mut R,
    ) -> Result<()> {
        let slot = rng.gen_range(0..self.buffer.len());
        let loss = loss_of(self.buffer.expert(slot));
        self.update_at(slot, loss, leader)
    }

    /// Weight update on `slot` with observed loss, followed by activation.
    pub fn update_at(&mut self, slot: usize, loss: f64, activated: ExpertId) -> Result<()> {
        if slot >= self.buffer.len() {
            return Err(Error::IndexRange {
                index: slot,
                bound: self.buffer.len(),
            });
        }
        let loss = check_loss(loss)?;
        if activated.index() >= self.num_experts {
            return Err(Error::IndexRange {
                index: activated.index(),
                bound: self.num_experts,
            });
        }
        let multiplier = self.multipliers.get(loss);
        self.weights.decay_checked(slot, multiplier, self.gamma)?;
        self.buffer.activate(activated, self.round as i64);
        self.round += 1;
        Ok(())
    }
}

impl OnlineLearner for Mw3 {
    fn num_experts(&self) -> usize {
        self.num_experts
    }

    fn round(&self) -> usize {
        self.round
    }

    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId> {
        self.sample(rng)
    }

    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        rng: &mut dyn RngCore,
    ) -> Result<()> {
        self.step(loss_of, leader, rng)
    }

    fn work(&self) -> u64 {
        self.weights.nodes_touched()
    }

    fn snapshot(&self, out: &mut Vec<f64>) {
        out.extend(self.weights.probabilities());
        out.extend(self.buffer.experts().iter().map(|x| x.index() as f64));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    /// Buffer oracle straight from the rule: keep a recency list of all
    /// activations and read off the last `k` distinct experts.
    fn most_recent_distinct(k: usize, activations: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..k).collect();
        for &a in activations {
            if let Some(pos) = order.iter().position(|&x| x == a) {
                order.remove(pos);
            } else {
                order.remove(0);
            }
            order.push(a);
        }
        order.sort_unstable();
        order
    }

    #[test]
    fn refresh_keeps_contents() {
        let mut buffer = SlidingBuffer::new(3).unwrap();
        assert_eq!(
            buffer.activate(ExpertId(1), 0),
            Activation::Refreshed { slot: 1 }
        );
        assert_eq!(buffer.experts(), &[ExpertId(0), ExpertId(1), ExpertId(2)]);
        assert_eq!(buffer.stamp(1), 0);
    }

    #[test]
    fn eviction_replaces_oldest_and_keeps_weight() {
        let mut mw = Mw3::new(10, 2, 0.3, 0.0).unwrap();
        // make B (slot 1) newer than A (slot 0), then give slot 0 a distinct weight
        mw.update_at(0, 1.0, ExpertId(1)).unwrap();
        let w0 = mw.weights().weight(0);
        mw.update_at(1, 0.0, ExpertId(7)).unwrap();
        assert_eq!(mw.buffer().experts(), &[ExpertId(7), ExpertId(1)]);
        assert_eq!(mw.weights().weight(0), w0);
    }

    #[test]
    fn first_evictions_follow_slot_order() {
        let mut buffer = SlidingBuffer::new(4).unwrap();
        for (t, x) in [10, 11, 12].into_iter().enumerate() {
            let outcome = buffer.activate(ExpertId(x), t as i64);
            assert_eq!(
                outcome,
                Activation::Replaced {
                    slot: t,
                    evicted: ExpertId(t)
                }
            );
        }
    }

    #[test]
    fn scripted_pattern_matches_oracle() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(30);
        let activations: Vec<usize> = (0..30).map(|_| rng.gen_range(0..9)).collect();
        let mut buffer = SlidingBuffer::new(4).unwrap();
        for (t, &a) in activations.iter().enumerate() {
            buffer.activate(ExpertId(a), t as i64);
            let mut got: Vec<usize> = buffer.experts().iter().map(|x| x.index()).collect();
            got.sort_unstable();
            assert_eq!(got, most_recent_distinct(4, &activations[..=t]));
        }
    }

    #[test]
    fn evicted_expert_is_never_played() {
        let mut mw = Mw3::new(10, 3, 0.1, 0.01).unwrap();
        mw.update_at(0, 0.0, ExpertId(9)).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(31);
        for _ in 0..2000 {
            assert_ne!(mw.play(&mut rng).unwrap(), ExpertId(0));
        }
    }

    #[test]
    fn fresh_buffer_plays_uniformly() {
        let mw = Mw3::new(10, 4, 0.1, 0.01).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(32);
        let mut counts = [0usize; 10];
        for _ in 0..40_000 {
            counts[mw.play(&mut rng).unwrap().index()] += 1;
        }
        for &c in &counts[..4] {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.01);
        }
        assert!(counts[4..].iter().all(|&c| c == 0));
    }

    #[test]
    fn k_is_clamped_to_experts() {
        let mw = Mw3::new(3, 8, 0.1, 0.01).unwrap();
        assert_eq!(mw.k(), 3);
    }

    #[test]
    fn scale_switch_changes_decay() {
        let mut a = Mw3::new(100, 4, 0.1, 0.0).unwrap();
        let mut b = Mw3::new(100, 4, 0.1, 0.0)
            .unwrap()
            .with_scale(EstimatorScale::Experts);
        a.update_at(0, 1.0, ExpertId(0)).unwrap();
        b.update_at(0, 1.0, ExpertId(0)).unwrap();
        assert!((a.weights().weight(0) - (-0.4f64).exp()).abs() < 1e-12);
        assert!((b.weights().weight(0) - (-10f64).exp()).abs() < 1e-12);
    }
}
