#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod framerec;
mod krylov;
pub mod liecore;
pub mod par;
pub mod poly;
pub mod quad;
pub mod report;
pub mod spectral;
pub mod speccurve;
pub mod tzsolve;

pub use error::{Error, Result};
pub use par::Execution;
pub use report::{ReportEntry, VerificationReport};
