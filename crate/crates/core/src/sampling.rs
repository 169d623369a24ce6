//! Logarithmic-time weighted sampling.
//!
//! [`SumTree`] is a plain binary sum tree over nonnegative leaves.
//! [`MixedWeights`] stores multiplicative-weights state implicitly as
//! `w(x) = alpha(x) + beta`, where the shared scalar `beta` carries the uniform
//! mixing mass. A decay touches one leaf and the scalar, so both updates and
//! draws cost `O(log N)`.

use std::cell::Cell;

use rand::Rng;

use crate::error::{Error, Result};

#[inline]
fn tree_size(capacity: usize) -> usize {
    capacity.next_power_of_two()
}

#[inline]
fn real_leaves(lo: usize, len: usize, capacity: usize) -> usize {
    (lo + len).min(capacity).saturating_sub(lo)
}

/// `x > 0` and finite.
#[inline(always)]
#[allow(clippy::eq_op)]
fn positive_finite(x: f64) -> bool {
    x > 0.0 && x - x == 0.0
}

fn check_capacity(capacity: usize) -> Result<()> {
    if capacity == 0 {
        Err(Error::Domain("capacity must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Binary tree over `capacity` nonnegative leaves with cached subtree totals.
#[derive(Clone, Debug)]
pub struct SumTree {
    capacity: usize,
    size: usize,
    nodes: Vec<f64>,
    touched: Cell<u64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Result<Self> {
        check_capacity(capacity)?;
        let size = tree_size(capacity);
        Ok(SumTree {
            capacity,
            size,
            nodes: vec![0.0; 2 * size],
            touched: Cell::new(0),
        })
    }

    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let mut tree = Self::new(weights.len())?;
        for (i, &w) in weights.iter().enumerate() {
            check_weight(w)?;
            tree.nodes[tree.size + i] = w;
        }
        for node in (1..tree.size).rev() {
            tree.nodes[node] = tree.nodes[2 * node] + tree.nodes[2 * node + 1];
        }
        Ok(tree)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.nodes[self.size + index]
    }

    /// Sets leaf `index` and refreshes its ancestors.
    pub fn update(&mut self, index: usize, weight: f64) -> Result<()> {
        if index >= self.capacity {
            return Err(Error::IndexRange {
                index,
                bound: self.capacity,
            });
        }
        check_weight(weight)?;
        let mut node = self.size + index;
        self.nodes[node] = weight;
        let mut touched = 1;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
            touched += 1;
        }
        self.touched.set(self.touched.get() + touched);
        Ok(())
    }

    /// Draws `i` with probability `leaf(i) / total()`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let mut u = rng.gen::<f64>() * total;
        let mut node = 1;
        let mut touched = 1;
        while node < self.size {
            let left = self.nodes[2 * node];
            let right = self.nodes[2 * node + 1];
            let go_left = if right <= 0.0 {
                true
            } else if left <= 0.0 {
                false
            } else {
                u < left
            };
            if go_left {
                node *= 2;
            } else {
                u -= left;
                node = 2 * node + 1;
            }
            touched += 1;
        }
        self.touched.set(self.touched.get() + touched);
        Ok(node - self.size)
    }

    /// Number of tree nodes read or written so far by `update` and `sample`.
    pub fn nodes_touched(&self) -> u64 {
        self.touched.get()
    }

    /// Tree height plus one: the node count of a root-to-leaf path.
    pub fn path_len(&self) -> u64 {
        self.size.trailing_zeros() as u64 + 1
    }
}

fn check_weight(weight: f64) -> Result<()> {
    if weight.is_finite() && weight >= 0.0 {
        Ok(())
    } else {
        Err(Error::WeightDomain(weight))
    }
}

/// Implicit multiplicative weights `w(x) = alpha(x) + beta` over `n` entries.
///
/// `alpha` leaves may go negative; only the implied weights are required to
/// stay nonnegative. Draws descend the tree using the implied subtree mass
/// `sum(alpha) + beta * leaves`, so they are exact regardless of the sign of
/// individual `alpha` entries.
#[derive(Clone, Debug)]
pub struct MixedWeights {
    n: usize,
    width: f64,
    size: usize,
    alpha: Vec<f64>,
    beta: f64,
    log_scale: f64,
    touched: Cell<u64>,
}

impl MixedWeights {
    const UPPER: f64 = 1e12;
    const LOWER: f64 = 1e-12;
    // rebase once beta dominates the average weight by this factor
    const CANCELLATION: f64 = 1e4;

    /// All implied weights start at 1.
    pub fn new(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let size = tree_size(n);
        let mut alpha = vec![0.0; 2 * size];
        alpha[size..size + n].iter_mut().for_each(|a| *a = 1.0);
        let mut weights = MixedWeights {
            n,
            width: n as f64,
            size,
            alpha,
            beta: 0.0,
            log_scale: 0.0,
            touched: Cell::new(0),
        };
        weights.rebuild();
        Ok(weights)
    }

    /// Builds the state from explicit components (used by tests and replay).
    pub fn from_parts(alpha: &[f64], beta: f64) -> Result<Self> {
        let mut weights = Self::new(alpha.len())?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::WeightDomain(beta));
        }
        for (i, &a) in alpha.iter().enumerate() {
            if !a.is_finite() || a + beta < 0.0 {
                return Err(Error::WeightDomain(a + beta));
            }
            weights.alpha[weights.size + i] = a;
        }
        weights.beta = beta;
        weights.rebuild();
        Ok(weights)
    }

    fn rebuild(&mut self) {
        for node in (1..self.size).rev() {
            self.alpha[node] = self.alpha[2 * node] + self.alpha[2 * node + 1];
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn alpha(&self, index: usize) -> f64 {
        self.alpha[self.size + index]
    }

    pub fn alpha_total(&self) -> f64 {
        self.alpha[1]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Sum of the stored implied weights, `sum(alpha) + n * beta`.
    pub fn total(&self) -> f64 {
        self.alpha[1] + self.width * self.beta
    }

    /// Probability of the uniform stage, `beta / (beta + alpha_total / n)`.
    pub fn mixing_mass(&self) -> f64 {
        self.width * self.beta / self.total()
    }

    /// Implied weight in the original (unrescaled) units.
    pub fn weight(&self, index: usize) -> f64 {
        (self.alpha(index) + self.beta) * self.log_scale.exp()
    }

    /// Natural log of the factor between original and stored units.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn probability(&self, index: usize) -> f64 {
        (self.alpha(index) + self.beta) / self.total()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total();
        (0..self.n)
            .map(|i| (self.alpha(i) + self.beta) / total)
            .collect()
    }

    /// Draws `x` with probability `w(x) / sum(w)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let total = self.total();
        if !positive_finite(total) {
            return Err(Error::EmptySupport);
        }
        let mut u = rng.gen::<f64>() * total;
        let (mut node, mut lo, mut span) = (1, 0, self.size);
        let mut here = total;
        let full = self.n == self.size;
        // beta * span, halved exactly at each level of a full tree
        let mut mixed = self.beta * self.size as f64;
        while node < self.size {
            span /= 2;
            mixed *= 0.5;
            let left = if full {
                self.alpha[2 * node] + mixed
            } else {
                self.alpha[2 * node] + self.beta * real_leaves(lo, span, self.n) as f64
            };
            let right = here - left;
            let go_right = !(right <= 0.0 || (left > 0.0 && u < left));
            let step = if go_right { left } else { 0.0 };
            u -= step;
            here = if go_right { right } else { left };
            node = 2 * node + go_right as usize;
            lo += span * go_right as usize;
        }
        self.touched.set(self.touched.get() + self.path_len());
        Ok(node - self.size)
    }

    /// One mixed multiplicative step:
    /// `alpha(index) <- (alpha(index) + beta) * multiplier - beta` and
    /// `beta <- beta + (gamma / n) * (sum(alpha) + n * beta)`, both using the
    /// pre-update state. Every implied weight becomes
    /// `w(x) * m(x) + (gamma / n) * W` with `m(index) = multiplier` and 1 elsewhere.
    pub fn decay(&mut self, index: usize, multiplier: f64, gamma: f64) -> Result<()> {
        if index >= self.n {
            return Err(Error::IndexRange {
                index,
                bound: self.n,
            });
        }
        if !((0.0..=1.0).contains(&multiplier) && (0.0..=1.0).contains(&gamma)) {
            return Err(Error::Domain(format!(
                "multiplier {multiplier} or gamma {gamma} outside [0, 1]"
            )));
        }
        self.decay_checked(index, multiplier, gamma)
    }

    /// [`Self::decay`] for arguments already known to be in range.
    #[inline(always)]
    pub(crate) fn decay_checked(
        &mut self,
        index: usize,
        multiplier: f64,
        gamma: f64,
    ) -> Result<()> {
        let alpha = &mut self.alpha[..2 * self.size];
        let total = alpha[1] + self.width * self.beta;
        let old_beta = self.beta;
        let mut node = self.size + index;
        let implied = alpha[node] + old_beta;
        let new_alpha = implied * multiplier - old_beta;
        let new_beta = old_beta + gamma / self.width * total;
        let new_implied = new_alpha + new_beta;
        if new_implied < -1e-12 * total.max(f64::MIN_POSITIVE) {
            return Err(Error::WeightUnderflow(new_implied));
        }
        self.beta = new_beta;
        if multiplier != 1.0 {
            alpha[node] = new_alpha;
            while node > 1 {
                let sum = alpha[node] + alpha[node ^ 1];
                node /= 2;
                alpha[node] = sum;
            }
            self.touched.set(self.touched.get() + self.path_len());
        }
        self.maybe_rebase(total * (1.0 + gamma) - implied * (1.0 - multiplier));
        Ok(())
    }

    #[inline(always)]
    fn maybe_rebase(&mut self, estimate: f64) {
        // cheap screen on the predicted total; exact check only near a bound
        if estimate < 0.5 * Self::UPPER
            && estimate > 2.0 * Self::LOWER
            && self.beta * self.width <= 0.5 * Self::CANCELLATION * estimate
        {
            return;
        }
        self.check_rebase();
    }

    #[cold]
    fn check_rebase(&mut self) {
        let total = self.total();
        if total > Self::UPPER
            || total < Self::LOWER
            || self.beta * self.width > Self::CANCELLATION * total
        {
            self.rebase(self.width / total);
        }
    }

    /// Folds `beta` into the leaves and multiplies every weight by `factor`.
    fn rebase(&mut self, factor: f64) {
        let beta = self.beta;
        for leaf in &mut self.alpha[self.size..self.size + self.n] {
            *leaf = ((*leaf + beta) * factor).max(0.0);
        }
        self.beta = 0.0;
        self.log_scale -= factor.ln();
        self.rebuild();
    }

    pub fn nodes_touched(&self) -> u64 {
        self.touched.get()
    }

    pub fn path_len(&self) -> u64 {
        self.size.trailing_zeros() as u64 + 1
    }
}
