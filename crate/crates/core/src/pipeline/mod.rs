//! Pipeline IR, document parser, representation-kind checker and executor.

mod execute;
mod ir;
mod parse;
mod random;
mod validate;

pub use execute::{combine, execute, execute_all, rep_kind_name, Output};
pub use ir::{
    AdjustParams, AggregateParams, BandParams, CategorizeParams, ClassifyParams, ColumnDecl,
    CombineSpec, DeriveParams, Edge, Emit, KdeParams, Node, OlsParams, Op, PcaParams,
    PermuteParams, PipelineGraph, SelectParams, SourceParams, SubsampleParams, OP_NAMES,
};
pub use parse::{check_graph, parse_pipeline};
pub use random::{kind_mismatch, random_pipeline, random_table};
pub use validate::{
    infer_types, output_kind, signature, signature_table, validate_pipeline, NodeType, StaticKind,
    TypeError,
};
