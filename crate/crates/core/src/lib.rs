//! Real-time monitoring of a driven, noisy qubit by sequential unsharp
//! measurements, with a drive-only estimator replaying the outcome record.

pub mod cli;
pub mod dynamics;
pub mod experiment;
pub mod monitor;
pub mod noise;
pub mod povm;
pub mod qubit;
