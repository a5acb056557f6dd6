use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::model::{Evaluator, RepKind, Representation};

use super::execute::Output;
use super::ir::{BandParams, CombineSpec, Emit, Op, PipelineGraph};

/// Representation kind as tracked by static propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticKind {
    Sample,
    Summary,
    Model(Evaluator),
    /// Layered output of `combine(layer)`.
    Bundle,
}

impl fmt::Display for StaticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StaticKind::Sample => f.write_str("sample"),
            StaticKind::Summary => f.write_str("summary"),
            StaticKind::Model(e) => write!(f, "model({})", evaluator_name(*e)),
            StaticKind::Bundle => f.write_str("bundle"),
        }
    }
}

pub(crate) fn evaluator_name(e: Evaluator) -> &'static str {
    match e {
        Evaluator::DensityGrid => "density_grid",
        Evaluator::OlsLine => "ols_line",
        Evaluator::PcaLoadings => "pca_loadings",
        Evaluator::AdjustmentFn => "adjustment_fn",
    }
}

impl StaticKind {
    pub fn of(rep: &Representation) -> Self {
        match &rep.kind {
            RepKind::Sample(_) => StaticKind::Sample,
            RepKind::Summary(_) => StaticKind::Summary,
            RepKind::Model(m) => StaticKind::Model(m.evaluator),
        }
    }
}

/// Statically inferred type of a node's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeType {
    pub kind: StaticKind,
    /// Terminal outputs (layer bundles, nested mass bands) feed no further tactics.
    pub terminal: bool,
}

impl NodeType {
    fn plain(kind: StaticKind) -> Self {
        NodeType {
            kind,
            terminal: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeError {
    pub node: String,
    pub expected: String,
    pub actual: String,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node `{}`: expected {}, got {}: {}",
            self.node, self.expected, self.actual, self.message
        )
    }
}

/// Admissible input kinds and resulting output kind, per op, as documented
/// text. Covers every op accepted in a pipeline document.
pub fn signature_table() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("source", "(none)", "sample"),
        ("full_disclosure", "sample", "sample"),
        ("classify", "sample", "sample"),
        ("categorize", "sample", "sample"),
        ("aggregate", "sample", "summary"),
        (
            "band",
            "sample | model(density_grid)",
            "summary (mass levels: model(density_grid) only)",
        ),
        ("derive", "sample", "sample"),
        (
            "encode_select",
            "sample | summary | model(density_grid)",
            "same kind",
        ),
        ("subsample", "sample", "sample"),
        ("noise", "sample", "sample"),
        ("permute", "sample", "sample"),
        ("smooth_kde", "sample", "model(density_grid)"),
        ("magnitude_adjust", "sample | summary", "same kind"),
        (
            "predict_ols",
            "sample",
            "model(ols_line), or sample with emit = sample",
        ),
        (
            "project_pca",
            "sample",
            "model(pca_loadings), or sample with emit = sample",
        ),
        (
            "combine",
            "join_on_keys, concat_rows: sample each; layer: any",
            "sample; layer: bundle",
        ),
    ]
}

/// Output type of `op` given the types of its inputs (slot order).
pub fn signature(op: &Op, inputs: &[NodeType]) -> Result<NodeType, (String, String, String)> {
    use StaticKind::*;
    let want = |expected: &str, got: StaticKind, why: &str| {
        Err((expected.to_string(), got.to_string(), why.to_string()))
    };
    if let Some(t) = inputs.iter().find(|t| t.terminal) {
        return want(
            "a non-terminal input",
            t.kind,
            "layer bundles and nested bands cannot feed further tactics",
        );
    }
    if let Op::Combine(spec) = op {
        return match spec {
            CombineSpec::Layer => Ok(NodeType {
                kind: Bundle,
                terminal: true,
            }),
            _ => match inputs.iter().find(|t| t.kind != Sample) {
                Some(t) => want("sample", t.kind, "join and concat combine tables only"),
                None => Ok(NodeType::plain(Sample)),
            },
        };
    }
    let input = match (op, inputs) {
        (Op::Source(_), []) => return Ok(NodeType::plain(Sample)),
        (_, [t]) => t.kind,
        _ => return want("exactly one input", Sample, "wrong input arity"),
    };
    match op {
        Op::Source(_) | Op::Combine(_) => unreachable!(),
        Op::FullDisclosure {}
        | Op::Classify(_)
        | Op::Categorize(_)
        | Op::Derive(_)
        | Op::Subsample(_)
        | Op::Noise(_)
        | Op::Permute(_) => match input {
            Sample => Ok(NodeType::plain(Sample)),
            k => want("sample", k, "row-level tactic"),
        },
        Op::Aggregate(_) => match input {
            Sample => Ok(NodeType::plain(Summary)),
            k => want("sample", k, "aggregate groups rows of a table"),
        },
        Op::SmoothKde(_) => match input {
            Sample => Ok(NodeType::plain(Model(Evaluator::DensityGrid))),
            k => want("sample", k, "density estimation needs rows"),
        },
        Op::PredictOls(p) => match input {
            Sample if p.emit == Emit::Sample => Ok(NodeType::plain(Sample)),
            Sample => Ok(NodeType::plain(Model(Evaluator::OlsLine))),
            k => want("sample", k, "regression needs rows"),
        },
        Op::ProjectPca(p) => match input {
            Sample if p.emit == Emit::Sample => Ok(NodeType::plain(Sample)),
            Sample => Ok(NodeType::plain(Model(Evaluator::PcaLoadings))),
            k => want("sample", k, "projection needs rows"),
        },
        Op::Band(BandParams { levels, .. }) => match input {
            Model(Evaluator::DensityGrid) => Ok(NodeType {
                kind: Summary,
                terminal: levels.is_nested(),
            }),
            k if levels.is_mass() => {
                want("model(density_grid)", k, "mass levels band a density grid")
            }
            Sample => Ok(NodeType::plain(Summary)),
            k => want(
                "sample | model(density_grid)",
                k,
                "band needs values or a density",
            ),
        },
        Op::EncodeSelect(_) => match input {
            Sample | Summary | Model(Evaluator::DensityGrid) => Ok(NodeType::plain(input)),
            k => want(
                "sample | summary | model(density_grid)",
                k,
                "only density grids can be marginalized",
            ),
        },
        Op::MagnitudeAdjust(_) => match input {
            Sample | Summary => Ok(NodeType::plain(input)),
            k => want(
                "sample | summary",
                k,
                "adjustment rewrites values or statistics",
            ),
        },
    }
}

/// Static kind of every node whose inputs type-check, plus the errors found.
/// Nodes downstream of an error are left untyped rather than reported again.
pub fn infer_types(g: &PipelineGraph) -> (BTreeMap<String, NodeType>, Vec<TypeError>) {
    let mut types = BTreeMap::new();
    let mut errors = Vec::new();
    let Some(order) = g.topo_order() else {
        errors.push(TypeError {
            node: String::new(),
            expected: "acyclic graph".into(),
            actual: "cycle".into(),
            message: "graph has a cycle".into(),
        });
        return (types, errors);
    };
    for id in order {
        let node = g.node(&id).expect("ordered ids exist");
        let inputs: Option<Vec<NodeType>> = g
            .inputs_of(&id)
            .iter()
            .map(|p| types.get(*p).copied())
            .collect();
        let Some(inputs) = inputs else { continue };
        match signature(&node.op, &inputs) {
            Ok(t) => {
                types.insert(id, t);
            }
            Err((expected, actual, message)) => errors.push(TypeError {
                node: id,
                expected,
                actual,
                message: format!("{}: {message}", node.op.name()),
            }),
        }
    }
    (types, errors)
}

/// Kind-checks every node by propagation from the sources. Empty means valid.
pub fn validate_pipeline(g: &PipelineGraph) -> Vec<TypeError> {
    infer_types(g).1
}

/// Static kind of an executed output.
pub fn output_kind(out: &Output) -> StaticKind {
    match out {
        Output::Rep(r) => StaticKind::of(r),
        Output::Bundle(_) => StaticKind::Bundle,
    }
}
