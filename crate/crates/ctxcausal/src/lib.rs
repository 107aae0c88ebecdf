//! File formats, thread pools and the command-line frontend around
//! [`ctxcausal_core`].

pub mod bench;
pub mod cli;
pub mod error;
pub mod exec;
pub mod format;
pub mod io;

pub use ctxcausal_core as core;
pub use error::{AppError, Result};
