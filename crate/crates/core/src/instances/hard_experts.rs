use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ActionId, ExpertId, LossModel, SparseDist};

/// `N = n^2` experts in `n` blocks of `n`; one hidden good expert per block.
/// `loss(x, y) = 0` iff `x` and `y` are both good and `x >= y`, else 1.
/// Actions are expert indices as well.
#[derive(Clone, Debug, PartialEq)]
pub struct HardExperts {
    n: usize,
    good: Vec<usize>,
    is_good: Vec<bool>,
}

impl HardExperts {
    pub fn generate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::ParamDomain("block size must be at least 1".into()));
        }
        let good = (0..n).map(|b| n * b + rng.gen_range(0..n)).collect();
        Self::with_good(n, good)
    }

    /// `good[b]` must lie in block `b`, i.e. in `[n b, n (b + 1))`.
    pub fn with_good(n: usize, good: Vec<usize>) -> Result<Self> {
        if n == 0 || good.len() != n {
            return Err(Error::ParamDomain(format!(
                "need one good expert for each of {n} blocks, got {}",
                good.len()
            )));
        }
        let mut is_good = vec![false; n * n];
        for (b, &x) in good.iter().enumerate() {
            if x / n != b {
                return Err(Error::ParamDomain(format!(
                    "good expert {x} is not in block {b}"
                )));
            }
            is_good[x] = true;
        }
        Ok(HardExperts { n, good, is_good })
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    /// Good experts in block order (hence increasing).
    pub fn good_experts(&self) -> &[usize] {
        &self.good
    }

    pub fn is_good(&self, x: usize) -> bool {
        self.is_good.get(x).copied().unwrap_or(false)
    }

    /// The adversary's action on round `t` (0-based): the good expert of
    /// block `t mod n`.
    pub fn canonical_action(&self, t: usize) -> ActionId {
        self.good[t % self.n]
    }

    pub fn canonical_sequence(&self, rounds: usize) -> Vec<ActionId> {
        (0..rounds).map(|t| self.canonical_action(t)).collect()
    }

    /// Largest good expert in the support, else the largest support element.
    /// Always a minimizer, and always inside the support.
    pub fn opt(&self, dist: &SparseDist) -> ExpertId {
        let best = dist
            .support()
            .filter(|&y| self.is_good(y))
            .last()
            .unwrap_or_else(|| dist.max_index());
        ExpertId(best)
    }
}

impl LossModel for HardExperts {
    fn num_experts(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    fn loss(&self, expert: ExpertId, action: ActionId) -> f64 {
        let x = expert.index();
        if self.is_good(x) && self.is_good(action) && x >= action {
            0.0
        } else {
            1.0
        }
    }

    fn best_expert(&self, dist: &SparseDist) -> ExpertId {
        self.opt(dist)
    }
}
