use rand::Rng;

use crate::error::{Error, Result};

/// `f~(x) = (1/sqrt d) sum_v f(v) prod_{v_i = 1} x_i prod_{v_i = 0} (1 - x_i)`
/// for a base `f: {0,1}^d -> [0, 1]`; coordinate `i` of vertex `v` is bit `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultilinearExtension {
    d: usize,
    values: Vec<f64>,
    scale: f64,
}

pub const MULTISTARTS: usize = 32;

impl MultilinearExtension {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=24).contains(&d) {
            return Err(Error::ParamDomain(format!("dimension {d} outside [1, 24]")));
        }
        if values.len() != 1 << d {
            return Err(Error::Domain(format!(
                "dimension {d} needs {} values, got {}",
                1usize << d,
                values.len()
            )));
        }
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("base value {bad} outside [0, 1]")));
        }
        Ok(MultilinearExtension {
            d,
            values,
            scale: 1.0 / (d as f64).sqrt(),
        })
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        Self::new(d, (0..1usize << d.min(24)).map(|_| rng.gen()).collect())
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn base(&self) -> &[f64] {
        &self.values
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Domain(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.d
            )));
        }
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("coordinate {bad} outside [0, 1]")));
        }
        Ok(())
    }

    /// `f~(x)` by contracting one coordinate at a time, `O(2^d)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.scale * contract(&self.values, x))
    }

    /// `d f~ / d x_i`, exact since `f~` is affine in each coordinate.
    pub fn partial(&self, x: &[f64], i: usize) -> Result<f64> {
        self.check_point(x)?;
        if i >= self.d {
            return Err(Error::IndexRange {
                index: i,
                bound: self.d,
            });
        }
        let mut at = x.to_vec();
        at[i] = 1.0;
        let high = contract(&self.values, &at);
        at[i] = 0.0;
        let low = contract(&self.values, &at);
        Ok(self.scale * (high - low))
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.d).map(|i| self.partial(x, i)).collect()
    }

    /// `(1/sqrt d) min_v f(v)` by exhaustive scan.
    pub fn vertex_min(&self) -> f64 {
        self.scale * self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Minimum over the cube found by coordinate descent from the center and
    /// `starts - 1` random points. Each step minimizes exactly along the
    /// coordinate with the largest decrease, moving it to its lower endpoint.
    pub fn cube_min<R: Rng + ?Sized>(&self, starts: usize, rng: &mut R) -> f64 {
        let mut best = f64::INFINITY;
        for start in 0..starts {
            let mut x: Vec<f64> = if start == 0 {
                vec![0.5; self.d]
            } else {
                (0..self.d).map(|_| rng.gen()).collect()
            };
            let mut current = contract(&self.values, &x);
            loop {
                let mut step = None;
                for i in 0..self.d {
                    let keep = x[i];
                    for at in [0.0, 1.0] {
                        x[i] = at;
                        let value = contract(&self.values, &x);
                        if value < step.map_or(current, |(_, _, v)| v) {
                            step = Some((i, at, value));
                        }
                    }
                    x[i] = keep;
                }
                match step {
                    Some((i, at, value)) => {
                        x[i] = at;
                        current = value;
                    }
                    None => break,
                }
            }
            best = best.min(current);
        }
        self.scale * best
    }

    /// `(cube_min, vertex_min)` with the default number of starts.
    pub fn min_check<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        (self.cube_min(MULTISTARTS, rng), self.vertex_min())
    }
}

fn contract(values: &[f64], x: &[f64]) -> f64 {
    let mut buf = values.to_vec();
    let mut len = buf.len();
    for &xi in x {
        len /= 2;
        for k in 0..len {
            buf[k] = (1.0 - xi) * buf[2 * k] + xi * buf[2 * k + 1];
        }
    }
    buf[0]
}

/// `f~(x)` for base values `f` over `{0,1}^d`, `d = x.len()`.
pub fn extend_multilinear(values: &[f64], x: &[f64]) -> Result<f64> {
    MultilinearExtension::new(x.len(), values.to_vec())?.eval(x)
}

/// Rounds each coordinate to 1 with probability `x_i`, independently.
/// Returns the vertex index.
pub fn randomized_round<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Result<usize> {
    if x.len() > 24 {
        return Err(Error::Domain(format!("dimension {} above 24", x.len())));
    }
    let mut v = 0;
    for (i, &xi) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::Domain(format!("coordinate {xi} outside [0, 1]")));
        }
        if rng.gen::<f64>() < xi {
            v |= 1 << i;
        }
    }
    Ok(v)
}
