use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instances::{AldousGame, BinaryClassification, HardExperts, HypercubeFunction};
use crate::seed;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    HardExperts,
    Aldous,
    BinaryCls,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::HardExperts => "hard_experts",
            Family::Aldous => "aldous",
            Family::BinaryCls => "binary_cls",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard_experts" => Ok(Family::HardExperts),
            "aldous" => Ok(Family::Aldous),
            "binary_cls" => Ok(Family::BinaryCls),
            other => Err(Error::Spec(format!("unknown instance family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `family=<hard_experts|aldous|binary_cls> n=<int> d=<int> seed=<u64>`.
/// `n` is the block size for the experts families; `d` the cube dimension
/// for `aldous`. The unused field is carried along unchanged.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub d: u32,
    pub seed: u64,
}

pub enum Instance {
    HardExperts(HardExperts),
    Aldous(AldousGame),
    BinaryCls(BinaryClassification),
}

impl InstanceSpec {
    pub fn new(family: Family, n: usize, d: u32, seed: u64) -> Self {
        InstanceSpec { family, n, d, seed }
    }

    pub fn hard_experts(n: usize, seed: u64) -> Self {
        Self::new(Family::HardExperts, n, 0, seed)
    }

    pub fn aldous(d: u32, seed: u64) -> Self {
        Self::new(Family::Aldous, 0, d, seed)
    }

    pub fn binary_cls(n: usize, seed: u64) -> Self {
        Self::new(Family::BinaryCls, n, 0, seed)
    }

    /// Number of experts (or game rows) of the generated instance.
    pub fn size(&self) -> usize {
        match self.family {
            Family::HardExperts | Family::BinaryCls => self.n * self.n,
            Family::Aldous => 1usize.checked_shl(self.d).unwrap_or(0),
        }
    }

    pub fn generate(&self) -> Result<Instance> {
        let mut rng = seed::substream(self.seed, &[seed::label(self.family.name())]);
        let instance = match self.family {
            Family::HardExperts => Instance::HardExperts(HardExperts::generate(self.n, &mut rng)?),
            Family::BinaryCls => {
                Instance::BinaryCls(BinaryClassification::generate(self.n, &mut rng)?)
            }
            Family::Aldous => Instance::Aldous(AldousGame::new(HypercubeFunction::staircase(
                self.d, &mut rng,
            )?)?),
        };
        Ok(instance)
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "family={} n={} d={} seed={}",
            self.family, self.n, self.d, self.seed
        )
    }
}

impl FromStr for InstanceSpec {
    type Err = Error;

    /// Fields may come in any order; `n`, `d` and `seed` default to 0.
    fn from_str(s: &str) -> Result<Self> {
        let (mut family, mut n, mut d, mut seed) = (None, None, None, None);
        for token in s.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("expected key=value, got {token:?}")))?;
            let bad = |_| Error::Spec(format!("bad value for {key}: {value:?}"));
            let slot_taken = match key {
                "family" => family.replace(value.parse::<Family>()?).is_some(),
                "n" => n.replace(value.parse::<usize>().map_err(bad)?).is_some(),
                "d" => d.replace(value.parse::<u32>().map_err(bad)?).is_some(),
                "seed" => seed.replace(value.parse::<u64>().map_err(bad)?).is_some(),
                other => return Err(Error::Spec(format!("unknown instance field {other:?}"))),
            };
            if slot_taken {
                return Err(Error::Spec(format!("field {key} given twice")));
            }
        }
        let family = family.ok_or_else(|| Error::Spec("missing family".into()))?;
        Ok(InstanceSpec {
            family,
            n: n.unwrap_or(0),
            d: d.unwrap_or(0),
            seed: seed.unwrap_or(0),
        })
    }
}

impl Serialize for InstanceSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InstanceSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(de::Error::custom)
    }
}
