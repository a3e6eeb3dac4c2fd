//! Numerical core for ESPRIT-oriented phase-only precoder design.
//!
//! A base station with a uniform linear array sends `M` precoded pilot beams;
//! a single-antenna receiver estimates the angles of departure with beamspace
//! ESPRIT. This crate provides the array algebra, the sum/difference
//! codebook baseline, the shift-invariance machinery (`Λ`, deflation
//! projector), the alternating-minimization precoder design, the snapshot
//! simulator, the estimator, and the Monte Carlo RMSE / CRB evaluation.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod array;
pub mod channel;
pub mod codebook;
pub mod design;
pub mod error;
pub mod esprit;
pub mod evaluation;
pub mod linalg;
pub mod precoder;
pub mod sip;

pub use array::{AngleGrid, ArrayConfig};
pub use channel::{PathSpec, Scenario, SnapshotBatch, TrialSeed};
pub use codebook::{CodebookSpec, UncertaintyInterval};
pub use design::{DesignConfig, DesignOutput, DesignTrace, InnerSolverConfig, StepRule};
pub use error::{Error, Result};
pub use esprit::{AoDEstimate, BeamspaceEsprit};
pub use evaluation::{BenchmarkPoint, BenchmarkSettings, PrecoderEntry, PrecoderStats, TrialResult};
pub use linalg::{CMatrix, CVector, C64};
pub use precoder::Precoder;
pub use sip::{Deflation, LambdaFit, SipSolution};
