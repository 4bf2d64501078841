//! Simulation of self-similar ranked fragmentations built from Poisson
//! point processes of dislocations, together with the partition-valued
//! counterpart (paintboxes) and the small-time limit laws of the largest
//! fragments.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common double-precision instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod measure;
pub mod partition;
mod quad;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod state;
pub mod trace_csv;

pub use asymptotics::{
    extreme_cdf, frechet_k_cdf, kth_record_cdf, normalize_lambda2, record_cdf, run_subordinator, AsymptoticsError,
    JumpLaw, SubordinatorPath, SubordinatorSpec,
};
pub use measure::{DislocationLaw, ErosionAndIndex, LawKind, MeasureError, Truncated};
pub use partition::{paintbox, paintbox_over, partition_step, FinitePartition, PartitionError};
pub use rng::replica_rng;
pub use scalar::Scalar;
pub use sim::{
    next_event, ranked_kernel, run, run_observed, run_replica, run_with_rng, EventAtom, SimConfig, SimError, Snapshot,
    Trajectory,
};
pub use state::{uniform_dist, MassState, StateError};

pub type MassStateF64 = MassState<f64>;
pub type MassStateF32 = MassState<f32>;
pub type DislocationLawF64 = DislocationLaw<f64>;
pub type DislocationLawF32 = DislocationLaw<f32>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimConfigF32 = SimConfig<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type SubordinatorSpecF64 = SubordinatorSpec<f64>;
