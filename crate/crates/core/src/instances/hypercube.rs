use rand::Rng;

use crate::error::{Error, Result};

pub const MAX_DIMENSION: u32 = 24;
/// Dimensions up to this are checked exhaustively on construction.
pub const CHECKED_DIMENSION: u32 = 16;

/// A natural-valued function on the vertices of `{0,1}^d`; vertex `v` has
/// coordinate `i` equal to bit `i` of `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypercubeFunction {
    d: u32,
    values: Vec<u32>,
    consistent: bool,
}

impl HypercubeFunction {
    /// Checks global consistency exhaustively when `d <= 16`; larger inputs
    /// are flagged inconsistent.
    pub fn new(d: u32, values: Vec<u32>) -> Result<Self> {
        check_dimension(d)?;
        if values.len() != 1 << d {
            return Err(Error::Domain(format!(
                "dimension {d} needs {} values, got {}",
                1usize << d,
                values.len()
            )));
        }
        let mut f = HypercubeFunction {
            d,
            values,
            consistent: false,
        };
        f.consistent = d <= CHECKED_DIMENSION && f.count_local_maxima() == 1;
        Ok(f)
    }

    pub fn from_fn(d: u32, f: impl Fn(usize) -> u32) -> Result<Self> {
        check_dimension(d)?;
        Self::new(d, (0..1usize << d).map(f).collect())
    }

    pub fn popcount(d: u32) -> Result<Self> {
        Self::from_fn(d, |v| v.count_ones())
    }

    /// Popcount with a random self-avoiding ascending path from the all-ones
    /// vertex laid on top, shifted by a random offset. Every vertex off the
    /// path has a higher neighbor, and so does every path vertex but the
    /// last, which is therefore the unique local maximum.
    pub fn staircase<R: Rng + ?Sized>(d: u32, rng: &mut R) -> Result<Self> {
        check_dimension(d)?;
        let top = d + 1;
        let mut values: Vec<u32> = (0..1usize << d).map(|v| v.count_ones()).collect();
        let mut at = (1usize << d) - 1;
        values[at] = top;
        let steps = rng.gen_range(0..=4 * d);
        let mut open = Vec::with_capacity(d as usize);
        for i in 1..=steps {
            open.clear();
            open.extend((0..d).map(|b| at ^ (1 << b)).filter(|&u| values[u] < top));
            if open.is_empty() {
                break;
            }
            at = open[rng.gen_range(0..open.len())];
            values[at] = top + i;
        }
        let offset = rng.gen_range(0..=1);
        values.iter_mut().for_each(|v| *v += offset);
        let mut f = HypercubeFunction {
            d,
            values,
            consistent: true,
        };
        if d <= CHECKED_DIMENSION {
            f.consistent = f.count_local_maxima() == 1;
            debug_assert!(f.consistent);
        }
        Ok(f)
    }

    pub fn dimension(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, v: usize) -> u32 {
        self.values[v]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> {
        (0..self.d).map(move |b| v ^ (1 << b))
    }

    pub fn is_local_max(&self, v: usize) -> bool {
        self.neighbors(v).all(|u| self.values[v] >= self.values[u])
    }

    pub fn local_maxima(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_local_max(v)).collect()
    }

    pub fn count_local_maxima(&self) -> usize {
        (0..self.len()).filter(|&v| self.is_local_max(v)).count()
    }

    pub fn is_globally_consistent(&self) -> bool {
        self.consistent
    }

    /// Vertex of largest value, lowest index among ties.
    pub fn global_max(&self) -> usize {
        let mut best = 0;
        for (v, &x) in self.values.iter().enumerate() {
            if x > self.values[best] {
                best = v;
            }
        }
        best
    }
}

fn check_dimension(d: u32) -> Result<()> {
    if (1..=MAX_DIMENSION).contains(&d) {
        Ok(())
    } else {
        Err(Error::ParamDomain(format!(
            "dimension {d} outside [1, {MAX_DIMENSION}]"
        )))
    }
}
