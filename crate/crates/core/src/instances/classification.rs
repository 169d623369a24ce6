use rand::Rng;

use crate::error::Result;
use crate::instances::HardExperts;
use crate::model::{ActionId, ExpertId, LossModel, SparseDist};

/// Binary classification over `N = n^2` features and hypotheses built on
/// [`HardExperts`]. Example `(x, y)` is action `2x + y`; its loss is the hard
/// loss of `(h, x)` when `y` is the good label of `x`, and one minus it otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryClassification {
    base: HardExperts,
    labels: Vec<u8>,
}

impl BinaryClassification {
    pub fn generate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let base = HardExperts::generate(n, rng)?;
        let labels = (0..n * n).map(|_| rng.gen_range(0..=1)).collect();
        Ok(BinaryClassification { base, labels })
    }

    pub fn base(&self) -> &HardExperts {
        &self.base
    }

    pub fn label(&self, x: usize) -> u8 {
        self.labels[x]
    }

    pub fn num_actions(&self) -> usize {
        2 * self.labels.len()
    }

    pub fn example(x: usize, y: u8) -> ActionId {
        2 * x + y as usize
    }

    pub fn split(action: ActionId) -> (usize, u8) {
        (action / 2, (action % 2) as u8)
    }

    /// Round `t` (0-based) shows the good feature of block `t mod n` with its
    /// good label.
    pub fn canonical_action(&self, t: usize) -> ActionId {
        let x = self.base.canonical_action(t);
        Self::example(x, self.labels[x])
    }

    /// With `p_i` and `p'_i` the masses of the good feature of block `i`
    /// under its good and flipped label, picks the smallest `i` minimizing
    /// `p'_1 + ... + p'_i + p_(i+1) + ... + p_n`. Returns the good hypothesis
    /// of block `i`, or for `i = 0` the lowest non-good hypothesis.
    pub fn erm(&self, dist: &SparseDist) -> ExpertId {
        let n = self.base.block_size();
        let good = self.base.good_experts();
        let masses = |x: usize| {
            let y = self.labels[x];
            (
                dist.mass(Self::example(x, y)),
                dist.mass(Self::example(x, 1 - y)),
            )
        };
        let mut objective: f64 = good.iter().map(|&x| masses(x).0).sum();
        let mut best = (0, objective);
        for (i, &x) in good.iter().enumerate() {
            let (kept, flipped) = masses(x);
            objective += flipped - kept;
            if objective < best.1 {
                best = (i + 1, objective);
            }
        }
        match best.0 {
            0 => ExpertId((0..n * n).find(|&h| !self.base.is_good(h)).unwrap_or(0)),
            i => ExpertId(good[i - 1]),
        }
    }
}

impl LossModel for BinaryClassification {
    fn num_experts(&self) -> usize {
        self.base.num_experts()
    }

    #[inline]
    fn loss(&self, expert: ExpertId, action: ActionId) -> f64 {
        let (x, y) = Self::split(action);
        let hard = self.base.loss(expert, x);
        if y == self.labels[x] {
            hard
        } else {
            1.0 - hard
        }
    }

    fn best_expert(&self, dist: &SparseDist) -> ExpertId {
        self.erm(dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::scan_best_expert;
    use crate::seed;

    #[test]
    fn labels_flip_losses() {
        let inst = BinaryClassification::generate(3, &mut seed::rng(1)).unwrap();
        for h in 0..9 {
            for x in 0..9 {
                let sum = inst.loss(ExpertId(h), 2 * x) + inst.loss(ExpertId(h), 2 * x + 1);
                assert_eq!(sum, 1.0);
            }
        }
    }

    #[test]
    fn erm_is_a_minimizer() {
        let inst = BinaryClassification::generate(3, &mut seed::rng(2)).unwrap();
        let mut rng = seed::rng(3);
        for _ in 0..300 {
            let probs: Vec<f64> = (0..18)
                .map(|_| if rng.gen_bool(0.3) { rng.gen() } else { 0.0 })
                .collect();
            let total: f64 = probs.iter().sum();
            if total == 0.0 {
                continue;
            }
            let dist = SparseDist::from_dense(&probs.iter().map(|p| p / total).collect::<Vec<_>>())
                .unwrap();
            let value = |h: ExpertId| dist.expect(|a| inst.loss(h, a));
            let erm = inst.erm(&dist);
            assert!(value(erm) <= value(scan_best_expert(&inst, &dist)) + 1e-12);
        }
    }

    #[test]
    fn single_hypothesis() {
        let inst = BinaryClassification::generate(1, &mut seed::rng(4)).unwrap();
        assert_eq!(inst.erm(&SparseDist::point(1)), ExpertId(0));
        assert_eq!(inst.erm(&SparseDist::point(0)), ExpertId(0));
    }
}
