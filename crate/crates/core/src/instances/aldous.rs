use std::iter;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::games::{MixedStrategy, ZeroSumGame};
use crate::instances::HypercubeFunction;

/// The game `G^f` over the `2^d` vertices of a globally consistent `f`:
/// `lambda(f(i))` when `i` and `j` are both local maxima, else 0 when
/// `f(i) >= f(j)`, else 1. Both best responses return the maximizer of `f`
/// over the support and its Hamming neighbors, so they read `f` only there.
#[derive(Debug)]
pub struct AldousGame {
    f: HypercubeFunction,
    local_max: Vec<bool>,
    reads: AtomicU64,
    trace: Mutex<Vec<usize>>,
}

/// `1/4` for even `k`, `3/4` for odd `k`.
pub fn lambda(k: u32) -> f64 {
    if k % 2 == 0 {
        0.25
    } else {
        0.75
    }
}

impl AldousGame {
    pub fn new(f: HypercubeFunction) -> Result<Self> {
        if !f.is_globally_consistent() {
            return Err(Error::NotGloballyConsistent(f.count_local_maxima()));
        }
        let local_max = (0..f.len()).map(|v| f.is_local_max(v)).collect();
        Ok(AldousGame {
            f,
            local_max,
            reads: AtomicU64::new(0),
            trace: Mutex::new(Vec::new()),
        })
    }

    pub fn function(&self) -> &HypercubeFunction {
        &self.f
    }

    /// The global maximum of `f`; `(i*, i*)` is a pure equilibrium.
    pub fn peak(&self) -> usize {
        self.f.global_max()
    }

    pub fn value(&self) -> f64 {
        lambda(self.f.value(self.peak()))
    }

    /// Metered reads of `f` so far, by payoffs and best responses.
    pub fn f_reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    /// Vertices read by the most recent best-response call, in read order.
    pub fn last_br_reads(&self) -> Vec<usize> {
        self.trace.lock().expect("trace lock").clone()
    }

    /// `Gamma(supp)`: the support and all its Hamming neighbors, sorted.
    pub fn neighborhood(&self, dist: &MixedStrategy) -> Vec<usize> {
        let mut out: Vec<usize> = dist
            .support()
            .flat_map(|i| iter::once(i).chain(self.f.neighbors(i)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    #[inline]
    fn read(&self, v: usize) -> u32 {
        self.reads.fetch_add(1, Ordering::Relaxed);
        self.f.value(v)
    }

    fn best_response(&self, dist: &MixedStrategy) -> usize {
        let mut trace = self.trace.lock().expect("trace lock");
        trace.clear();
        let mut best = (usize::MAX, 0);
        for i in dist.support() {
            for u in iter::once(i).chain(self.f.neighbors(i)) {
                let value = self.read(u);
                trace.push(u);
                if best.0 == usize::MAX || value > best.1 || (value == best.1 && u < best.0) {
                    best = (u, value);
                }
            }
        }
        best.0
    }
}

impl ZeroSumGame for AldousGame {
    fn size(&self) -> usize {
        self.f.len()
    }

    fn payoff(&self, row: usize, col: usize) -> f64 {
        if self.local_max[row] && self.local_max[col] {
            lambda(self.read(row))
        } else if self.read(row) >= self.read(col) {
            0.0
        } else {
            1.0
        }
    }

    fn best_row(&self, q: &MixedStrategy) -> usize {
        self.best_response(q)
    }

    fn best_col(&self, p: &MixedStrategy) -> usize {
        self.best_response(p)
    }
}
