//! Online learning with optimizable experts.
//!
//! Learners see the full loss vector only through a metered value oracle and
//! the leader of the history through an optimization oracle. The crate provides
//! the multiplicative-weights building blocks, the Leaders algorithm, the
//! `O~(sqrt N)` main learner, a best-response zero-sum game solver and the
//! instance families used to exercise them.

pub mod error;
pub mod games;
pub mod harness;
pub mod instances;
pub mod leaders;
pub mod learner;
pub mod model;
pub mod mw;
pub mod optimizable;
pub mod sampling;
pub mod seed;

pub use error::{Error, Result};
pub use games::{
    evaluate, fictitious_play, horizon_for, solve_game, verify_equilibrium, DenseGame,
    EquilibriumReport, MixedStrategy, ZeroSumGame,
};
pub use harness::{
    emit_results, read_results, run_experts, run_game, ExperimentSpec, Mode, TrialRecord,
};
pub use instances::{
    AldousGame, BinaryClassification, Family, HardExperts, HypercubeFunction, Instance,
    InstanceSpec, MultilinearExtension,
};
pub use leaders::Leaders;
pub use learner::{FollowTheLeader, OnlineLearner};
pub use model::{
    compute_leader, ActionId, CompensatedSum, CumulativeLeader, ExpertId, LeaderFeed, LossModel,
    LossValue, OracleCounters, OraclePair, RegretLedger, SparseDist, TableModel,
};
pub use mw::{EstimatorScale, Mw1, Mw2, Mw3, SlidingBuffer};
pub use optimizable::{MainLearner, MainParams, SelfOblivious};
pub use sampling::{MixedWeights, SumTree};
