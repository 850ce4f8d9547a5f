//! Remove-and-retrain (ROAR) and remove-and-debias (ROAD) benchmarking of
//! feature-attribution methods on small synthetic image tasks.

pub mod attributors;
pub mod cli;
pub mod data;
pub mod diffcore;
pub mod error;
pub mod masking;
pub mod mioracle;
pub mod pipeline;
pub mod postproc;
pub mod report;
pub mod seed;

pub use error::{Error, Result};
