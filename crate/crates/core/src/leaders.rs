//! Leaders: a grid of sliding-buffer learners combined by dense weights.
//!
//! Cell `(r, s)` runs [`Mw3`] with buffer `k = 2^r`, step
//! `eta0 / sqrt(2^(r + s))` and mixing `1 / T`. A top-level [`Mw1`] with step
//! `nu = 2 eta0 sqrt(L / T)` treats the cells as meta-experts; each round every
//! cell is charged the loss of one fresh prediction drawn from it. Cells draw
//! in grid order from one stream seeded per round.

use std::cell::Cell;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::error::Result;
use crate::learner::OnlineLearner;
use crate::model::ExpertId;
use crate::mw::{EstimatorScale, Mw1, Mw3};

/// Parameters of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellParams {
    pub r: u32,
    pub s: u32,
    pub k: usize,
    pub eta: f64,
    pub gamma: f64,
}

#[inline]
fn ceil_log2(x: usize) -> u32 {
    x.max(1).next_power_of_two().trailing_zeros()
}

/// Grid layout and step sizes for leader budget `L` and horizon `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadersParams {
    pub budget: usize,
    pub horizon: usize,
    pub eta0: f64,
    pub nu: f64,
    pub rows: u32,
    pub cols: u32,
}

impl LeadersParams {
    pub fn new(budget: usize, horizon: usize) -> Self {
        let (l, t) = (budget.max(1) as f64, horizon.max(1) as f64);
        let eta0 = (2.0 * l * t).ln().sqrt();
        LeadersParams {
            budget,
            horizon,
            eta0,
            nu: 2.0 * eta0 * (l / t).sqrt(),
            rows: ceil_log2(budget).max(1),
            cols: ceil_log2(horizon).max(1),
        }
    }

    pub fn cell(&self, r: u32, s: u32) -> CellParams {
        CellParams {
            r,
            s,
            k: 1usize << r,
            eta: self.eta0 / ((1u64 << (r + s)) as f64).sqrt(),
            gamma: 1.0 / self.horizon.max(1) as f64,
        }
    }

    /// Cells in row-major order over `r` then `s`, both starting at 1.
    pub fn cells(&self) -> Vec<CellParams> {
        (1..=self.rows)
            .flat_map(|r| (1..=self.cols).map(move |s| (r, s)))
            .map(|(r, s)| self.cell(r, s))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Leaders {
    params: LeadersParams,
    num_experts: usize,
    cells: Vec<Mw3>,
    combiner: Mw1,
    round: usize,
    last_cell: Cell<Option<usize>>,
    meta_losses: Vec<f64>,
}

impl Leaders {
    pub fn new(num_experts: usize, budget: usize, horizon: usize) -> Result<Self> {
        Self::with_scale(num_experts, budget, horizon, EstimatorScale::Buffer)
    }

    pub fn with_scale(
        num_experts: usize,
        budget: usize,
        horizon: usize,
        scale: EstimatorScale,
    ) -> Result<Self> {
        let params = LeadersParams::new(budget, horizon);
        let cells = params
            .cells()
            .iter()
            .map(|c| Ok(Mw3::new(num_experts, c.k, c.eta, c.gamma)?.with_scale(scale)))
            .collect::<Result<Vec<_>>>()?;
        let gamma = 1.0 / horizon.max(1) as f64;
        let combiner = Mw1::new(cells.len(), params.nu, gamma)?;
        Ok(Leaders {
            params,
            num_experts,
            meta_losses: vec![0.0; cells.len()],
            cells,
            combiner,
            round: 0,
            last_cell: Cell::new(None),
        })
    }

    pub fn params(&self) -> &LeadersParams {
        &self.params
    }

    pub fn cells(&self) -> &[Mw3] {
        &self.cells
    }

    pub fn combiner(&self) -> &Mw1 {
        &self.combiner
    }

    /// Grid cell behind the most recent play (diagnostic only).
    pub fn last_cell(&self) -> Option<usize> {
        self.last_cell.get()
    }
}

impl OnlineLearner for Leaders {
    fn num_experts(&self) -> usize {
        self.num_experts
    }

    fn round(&self) -> usize {
        self.round
    }

    fn play(&self, rng: &mut dyn RngCore) -> Result<ExpertId> {
        let cell = self.combiner.sample(rng)?;
        self.last_cell.set(Some(cell));
        self.cells[cell].play(rng)
    }

    fn observe(
        &mut self,
        loss_of: &mut dyn FnMut(ExpertId) -> f64,
        leader: ExpertId,
        rng: &mut dyn RngCore,
    ) -> Result<()> {
        let mut stream = SplitMix64::seed_from_u64(rng.next_u64());
        for (cell, meta) in self.cells.iter_mut().zip(self.meta_losses.iter_mut()) {
            *meta = loss_of(cell.sample(&mut stream)?);
            cell.step(loss_of, leader, &mut stream)?;
        }
        self.combiner.update(&self.meta_losses)?;
        self.round += 1;
        Ok(())
    }

    fn work(&self) -> u64 {
        self.combiner.work() + self.cells.iter().map(|c| c.work()).sum::<u64>()
    }

    fn snapshot(&self, out: &mut Vec<f64>) {
        self.combiner.snapshot(out);
        for cell in &self.cells {
            cell.snapshot(out);
        }
    }
}
