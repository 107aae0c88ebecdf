//! Context-specific causal rule discovery.
//!
//! Decision trees propose candidate treatments and contexts; a
//! potential-outcome estimator (propensity-score subclassification) decides
//! which of them carry a causal effect on a binary target. The crate is
//! `no_std` and only needs an allocator; file formats, the command line and
//! thread pools live in the `ctxcausal` companion crate.

#![no_std]
#![deny(missing_docs)]
// Negated comparisons are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod causal;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod stats;
pub mod synth;
pub mod tcc;
pub mod tree;

mod linalg;

pub use dataset::{
    Assignment, Column, Condition, ContingencyTable, DataView, Dataset, DatasetBuilder, LoadReport,
    VarId, VariableKind, VariableMeta,
};
pub use error::{Error, Result};
pub use tcc::{discover, CausalRule, Discovery, Executor, Sequential, TccParams};
