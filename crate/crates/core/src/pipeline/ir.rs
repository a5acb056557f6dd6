use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::ColumnKind;
use crate::signals::{SignalDecl, SweepSpec};
use crate::tactics::{
    AdjustmentSpec, BandLevels, Bandwidth, BinSpec, GridSpec, NoiseModel, StatSpec,
};

/// Declared column of a source table, used for static analysis without data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ColumnKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Name of the bound input table.
    pub table: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<ColumnDecl>>,
    /// Known row count, for occupancy heuristics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustParams {
    pub value: String,
    #[serde(flatten)]
    pub spec: AdjustmentSpec,
}

/// Which of a two-output modelling tactic's results flows downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    #[default]
    Model,
    Sample,
}

fn default_ols_grid() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CombineSpec {
    JoinOnKeys { keys: Vec<String> },
    ConcatRows,
    Layer,
}

macro_rules! params {
    ($(#[$doc:meta])* $name:ident { $($body:tt)* }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name { $($body)* }
    };
}

params!(ClassifyParams {
    pub column: String,
    pub bins: BinSpec,
});

params!(CategorizeParams {
    pub column: String,
    pub mapping: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_group: Option<String>,
});

params!(AggregateParams {
    #[serde(default)]
    pub group_by: Vec<String>,
    pub stats: Vec<StatSpec>,
});

params!(BandParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub levels: BandLevels,
});

params!(DeriveParams {
    pub expr: String,
    pub out: String,
});

params!(SelectParams {
    pub columns: Vec<String>,
});

params!(SubsampleParams {
    pub n: usize,
    #[serde(default)]
    pub replacement: bool,
});

params!(PermuteParams {
    pub column: String,
});

params!(KdeParams {
    pub columns: Vec<String>,
    pub bandwidth: Vec<Bandwidth>,
    pub grid: Vec<GridSpec>,
});

params!(OlsParams {
    pub y: String,
    pub xs: Vec<String>,
    #[serde(default = "default_ols_grid")]
    pub grid_n: usize,
    #[serde(default)]
    pub emit: Emit,
});

params!(PcaParams {
    pub columns: Vec<String>,
    pub k: usize,
    #[serde(default)]
    pub emit: Emit,
});

/// A pipeline operation with typed parameters. Serialized as
/// `{"op": "<name>", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "params", rename_all = "snake_case")]
pub enum Op {
    Source(SourceParams),
    FullDisclosure {},
    Classify(ClassifyParams),
    Categorize(CategorizeParams),
    Aggregate(AggregateParams),
    Band(BandParams),
    Derive(DeriveParams),
    EncodeSelect(SelectParams),
    Subsample(SubsampleParams),
    Noise(NoiseModel),
    Permute(PermuteParams),
    SmoothKde(KdeParams),
    MagnitudeAdjust(AdjustParams),
    PredictOls(OlsParams),
    ProjectPca(PcaParams),
    Combine(CombineSpec),
}

/// Every op name accepted in a pipeline document.
pub const OP_NAMES: [&str; 16] = [
    "source",
    "full_disclosure",
    "classify",
    "categorize",
    "aggregate",
    "band",
    "derive",
    "encode_select",
    "subsample",
    "noise",
    "permute",
    "smooth_kde",
    "magnitude_adjust",
    "predict_ols",
    "project_pca",
    "combine",
];

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Source(_) => "source",
            Op::FullDisclosure {} => "full_disclosure",
            Op::Classify(_) => "classify",
            Op::Categorize(_) => "categorize",
            Op::Aggregate(_) => "aggregate",
            Op::Band(_) => "band",
            Op::Derive(_) => "derive",
            Op::EncodeSelect(_) => "encode_select",
            Op::Subsample(_) => "subsample",
            Op::Noise(_) => "noise",
            Op::Permute(_) => "permute",
            Op::SmoothKde(_) => "smooth_kde",
            Op::MagnitudeAdjust(_) => "magnitude_adjust",
            Op::PredictOls(_) => "predict_ols",
            Op::ProjectPca(_) => "project_pca",
            Op::Combine(_) => "combine",
        }
    }

    /// True for ops that draw from the node's sub-seed.
    pub fn is_randomized(&self) -> bool {
        matches!(self, Op::Subsample(_) | Op::Noise(_) | Op::Permute(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(flatten)]
    pub op: Op,
}

/// `(from, to, input slot)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge(pub String, pub String, pub usize);

impl Edge {
    pub fn new(from: &str, to: &str, slot: usize) -> Self {
        Edge(from.to_string(), to.to_string(), slot)
    }

    pub fn from(&self) -> &str {
        &self.0
    }

    pub fn to(&self) -> &str {
        &self.1
    }

    pub fn slot(&self) -> usize {
        self.2
    }
}

/// A DAG of tactic nodes plus the signals and sweep declared alongside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signals: Vec<SignalDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl PipelineGraph {
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Input node ids of `id`, ordered by slot.
    pub fn inputs_of(&self, id: &str) -> Vec<&str> {
        let mut e: Vec<&Edge> = self.edges.iter().filter(|e| e.to() == id).collect();
        e.sort_by_key(|e| e.slot());
        e.iter().map(|e| e.from()).collect()
    }

    pub fn successors_of(&self, id: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|e| e.from() == id)
            .map(|e| e.to())
            .collect()
    }

    pub fn sources(&self) -> impl Iterator<Item = (&str, &SourceParams)> {
        self.nodes.iter().filter_map(|n| match &n.op {
            Op::Source(p) => Some((n.id.as_str(), p)),
            _ => None,
        })
    }

    /// Node ids in a topological order; ties broken by id so the order is
    /// independent of declaration order. `None` if the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.iter().map(|n| (n.id.as_str(), 0)).collect();
        for e in &self.edges {
            if let Some(d) = indegree.get_mut(e.to()) {
                *d += 1;
            }
        }
        let mut ready: std::collections::BTreeSet<&str> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_first() {
            order.push(id.to_string());
            for e in self.edges.iter().filter(|e| e.from() == id) {
                let d = indegree.get_mut(e.to())?;
                *d -= 1;
                if *d == 0 {
                    ready.insert(e.to());
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// Length of the longest path from a source to each node.
    pub fn depths(&self) -> Option<BTreeMap<String, usize>> {
        let order = self.topo_order()?;
        let mut depth: BTreeMap<String, usize> = BTreeMap::new();
        for id in &order {
            let d = self
                .inputs_of(id)
                .iter()
                .map(|p| depth.get(*p).copied().unwrap_or(0) + 1)
                .max()
                .unwrap_or(0);
            depth.insert(id.clone(), d);
        }
        Some(depth)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_names_cover_tactics() {
        for t in crate::tactics::TACTICS {
            assert!(OP_NAMES.contains(&t), "{t}");
        }
    }

    #[test]
    fn node_json_shape() {
        let n: Node = serde_json::from_str(
            r#"{"id":"c","op":"classify","params":{"column":"x","bins":{"equal_width":4}}}"#,
        )
        .unwrap();
        assert_eq!(n.op.name(), "classify");
        let back = serde_json::to_value(&n).unwrap();
        assert_eq!(back["params"]["bins"]["equal_width"], 4);
        let fd: Node =
            serde_json::from_str(r#"{"id":"f","op":"full_disclosure","params":{}}"#).unwrap();
        assert_eq!(fd.op, Op::FullDisclosure {});
        let adj: Node = serde_json::from_str(
            r#"{"id":"m","op":"magnitude_adjust","params":{"value":"v","pivot":0,"u_max":1,"uncertainty":"u"}}"#,
        )
        .unwrap();
        assert_eq!(adj.op.name(), "magnitude_adjust");
        let comb: Node =
            serde_json::from_str(r#"{"id":"j","op":"combine","params":{"mode":"layer"}}"#).unwrap();
        assert_eq!(comb.op, Op::Combine(CombineSpec::Layer));
    }

    #[test]
    fn topo_order_ignores_declaration_order() {
        let g = |nodes: Vec<&str>| PipelineGraph {
            nodes: nodes
                .into_iter()
                .map(|id| Node {
                    id: id.into(),
                    op: Op::FullDisclosure {},
                })
                .collect(),
            edges: vec![Edge::new("a", "c", 0), Edge::new("b", "d", 0)],
            outputs: vec!["c".into()],
            signals: vec![],
            sweep: None,
        };
        assert_eq!(
            g(vec!["a", "b", "c", "d"]).topo_order(),
            g(vec!["d", "c", "b", "a"]).topo_order()
        );
    }
}
