//! Disclosure-first transformation engine for tabular data.
//!
//! Pipelines of disclosure tactics are parsed into a [`pipeline::PipelineGraph`],
//! kind-checked, executed deterministically under a [`Seed`], analysed for
//! vulnerability findings, and scored by how much each declared signal is
//! revealed, distorted, or hidden.

pub mod analysis;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod signals;
pub mod tactics;

pub use error::{Error, Result};
pub use model::{
    infer_column_kind, representation_family, Axis, Cell, Column, ColumnKind, Evaluator, Family,
    Group, GroupKey, Interval, LineageEntry, ModelRep, RepKind, Representation, SummaryRep, Table,
};
pub use rng::{rng_next, Seed, SplitMix64};
