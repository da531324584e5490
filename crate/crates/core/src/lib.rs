//! Monotone Glauber dynamics and bootstrap-type dynamics of the Ising model on
//! ℤ², simulated exactly from their graphical construction, together with the
//! percolation geometry of the resulting spin fields and Monte Carlo
//! estimators for crossing probabilities, sharp-threshold audits and
//! correlation decay.
//!
//! All randomness is a deterministic function of a master seed and of the
//! space-time labels of the variables (see [`rng`]), so results do not depend
//! on the number of threads or on the size of the simulated window.

pub mod bootstrap;
pub mod encoding;
pub mod estimators;
pub mod exec;
pub mod geometry;
pub mod glauber;
pub mod lattice;
pub mod osss;
pub mod randomness;
pub mod rng;

pub use lattice::{BoxRegion, ScalarField, Site, Spin, SpinField};
pub use randomness::{sample_marks, sample_seed_field, Mark, MarkSet, SeedField};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("window is not contained in the sampled region")]
    WindowOutsideRegion,
    #[error("support escaped the simulated region at {site}")]
    SupportEscaped { site: Site },
    #[error("support escaped after {attempts} margin doublings (last margin {margin})")]
    MarginExhausted { attempts: u32, margin: u32 },
    #[error("invalid rate table: {0}")]
    InvalidRateTable(String),
    #[error("instance has {variables} variables, at most {limit} allowed")]
    InstanceTooLarge { variables: usize, limit: usize },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
