//! Instance generators: the hard experts instance, its binary-classification
//! variant, hypercube functions with the game built on them, and the
//! multilinear extension with randomized rounding.

mod aldous;
mod classification;
mod hard_experts;
mod hypercube;
mod multilinear;
mod spec;

pub use aldous::{lambda, AldousGame};
pub use classification::BinaryClassification;
pub use hard_experts::HardExperts;
pub use hypercube::{HypercubeFunction, CHECKED_DIMENSION, MAX_DIMENSION};
pub use multilinear::{extend_multilinear, randomized_round, MultilinearExtension, MULTISTARTS};
pub use spec::{Family, Instance, InstanceSpec};
