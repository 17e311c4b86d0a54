//! Reproducible experiment families and their report files.
//!
//! Each runner validates its config, computes family members (in parallel,
//! with per-member derived seeds so output is independent of scheduling),
//! aborts on any certificate that fails re-verification, and emits reports.
//! JSON is the source of truth; CSV and SVG are derived views. Certificates
//! are always written as self-contained JSON documents that can be
//! re-checked later.

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::free::FreeError;
use crate::lip::LipError;
use crate::metric::MetricError;
use crate::porosity::{CertificateDocument, PorosityError};

mod barrier;
mod dual_thinness;
mod output;
mod snowflake;

pub use barrier::{run_barrier, BarrierConfig, BarrierPreset, BarrierReport};
pub use dual_thinness::{run_dual_thinness, DualThinnessConfig, DualThinnessReport, ThinnessRow};
pub use output::Formats;
pub use snowflake::{run_snowflake, SnowflakeConfig, SnowflakeReport, SnowflakeRow};

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Bad configuration or unreadable input; maps to exit code 1.
    #[error("config error: {0}")]
    Config(String),
    /// A soundness check failed while running; maps to exit code 2.
    #[error("internal invariant failure: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Process exit code the error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Io(_) | ExperimentError::Json(_) => 1,
            ExperimentError::Invariant(_) => 2,
        }
    }
}

// Library-level failures inside a runner mean the experiment constructed
// something unsound, not that the user misconfigured it.
impl From<MetricError> for ExperimentError {
    fn from(e: MetricError) -> Self {
        ExperimentError::Invariant(e.to_string())
    }
}

impl From<LipError> for ExperimentError {
    fn from(e: LipError) -> Self {
        ExperimentError::Invariant(e.to_string())
    }
}

impl From<PorosityError> for ExperimentError {
    fn from(e: PorosityError) -> Self {
        ExperimentError::Invariant(e.to_string())
    }
}

impl From<FreeError> for ExperimentError {
    fn from(e: FreeError) -> Self {
        ExperimentError::Invariant(e.to_string())
    }
}

/// Loads a certificate document; the space and gauge re-validate during
/// deserialization.
pub fn load_certificate_document(path: &Path) -> Result<CertificateDocument, ExperimentError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Stable per-member seed derivation, so family members can run in any
/// order (or in parallel) without changing their draws.
pub(crate) fn derive_seed(base: u64, lane: u64, member: u64) -> u64 {
    mix(base
        .wrapping_add(mix(lane.wrapping_mul(0x9e3779b97f4a7c15)))
        .wrapping_add(mix(member | 0x8000_0000_0000_0000)))
}
