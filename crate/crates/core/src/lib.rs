//! Logic-synthesis operator sequence optimization over and-inverter graphs.

pub mod aig;
pub mod analysis;
pub mod designer;
pub mod env;
pub mod manifest;
pub mod ops;
pub mod policy;
pub mod seed;

pub use aig::{Aig, AigBuilder, AigError, CircuitStats, EquivVerdict, Literal};
pub use env::{EnvConfig, FeatureKind, RewardScheme, SynthEnv};
pub use ops::{OperatorId, Registry};
pub use policy::{PolicyParams, TrainConfig};
pub use seed::SeedTree;
