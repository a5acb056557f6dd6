use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Family, Table};
use crate::pipeline::{infer_types, NodeType, Op, Output, PipelineGraph, StaticKind};
use crate::signals::{distortion_of_output, original_for, Distortion};

use super::flow::{column_flows, ColumnFlow, Schema};
use super::rules::{detect_vulnerabilities_with, AnalysisConfig, Finding};

pub const PERCEPTUAL_CAVEAT: &str =
    "Perceptual confusers are not assessed: scales, mark sizes and \
colour choices can still hide differences the disclosed data contains.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Revealed,
    Distorted,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStatus {
    pub column: String,
    pub status: Status,
    /// Nodes that transformed (distorted) or dropped (hidden) the column.
    pub causes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub node: String,
    pub kind: String,
    /// One per representation; several for a layer bundle.
    pub families: Vec<Family>,
    pub level_of_detail: Vec<String>,
    pub columns: Vec<ColumnStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureReport {
    pub original_columns: Vec<String>,
    pub outputs: Vec<OutputReport>,
    pub findings: Vec<Finding>,
    pub distortions: Vec<Distortion>,
    pub caveats: Vec<String>,
}

pub fn level_of_detail(f: Family) -> &'static str {
    match f {
        Family::Full => "every record at exact values",
        Family::Sampling => "individual points with high specificity",
        Family::Summarizing => "groups or partitions, one statistic each",
        Family::Modeling => "computed values across the data domain",
    }
}

fn ancestors(g: &PipelineGraph, id: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![id.to_string()];
    while let Some(n) = stack.pop() {
        if seen.insert(n.clone()) {
            stack.extend(g.inputs_of(&n).into_iter().map(String::from));
        }
    }
    seen
}

fn static_families(g: &PipelineGraph, types: &BTreeMap<String, NodeType>, id: &str) -> Vec<Family> {
    match types.get(id).map(|t| t.kind) {
        Some(StaticKind::Bundle) => g
            .inputs_of(id)
            .into_iter()
            .flat_map(|m| static_families(g, types, m))
            .collect(),
        Some(StaticKind::Sample) => {
            let untouched = ancestors(g, id).iter().all(|a| {
                matches!(
                    g.node(a).map(|n| &n.op),
                    Some(Op::Source(_)) | Some(Op::FullDisclosure {})
                )
            });
            vec![if untouched {
                Family::Full
            } else {
                Family::Sampling
            }]
        }
        Some(StaticKind::Summary) => vec![Family::Summarizing],
        Some(StaticKind::Model(_)) => vec![Family::Modeling],
        None => Vec::new(),
    }
}

fn carries(f: &ColumnFlow, col: &str) -> bool {
    f.as_ref()
        .is_some_and(|m| m.values().any(|o| o.contains_key(col)))
}

fn column_statuses(
    g: &PipelineGraph,
    flows: &BTreeMap<String, ColumnFlow>,
    originals: &[String],
    id: &str,
) -> Vec<ColumnStatus> {
    let Some(Some(out)) = flows.get(id) else {
        return Vec::new();
    };
    let anc = ancestors(g, id);
    originals
        .iter()
        .map(|c| {
            let copies: Vec<&BTreeSet<String>> = out.values().filter_map(|o| o.get(c)).collect();
            if copies.is_empty() {
                let causes = anc
                    .iter()
                    .filter(|a| {
                        !carries(&flows[*a], c)
                            && g.inputs_of(a).iter().any(|p| carries(&flows[*p], c))
                    })
                    .cloned()
                    .collect();
                ColumnStatus {
                    column: c.clone(),
                    status: Status::Hidden,
                    causes,
                }
            } else if copies.iter().any(|s| s.is_empty()) {
                ColumnStatus {
                    column: c.clone(),
                    status: Status::Revealed,
                    causes: Vec::new(),
                }
            } else {
                let causes: BTreeSet<String> = copies.into_iter().flatten().cloned().collect();
                ColumnStatus {
                    column: c.clone(),
                    status: Status::Distorted,
                    causes: causes.into_iter().collect(),
                }
            }
        })
        .collect()
}

/// Static report: statuses, families and findings from the graph and the
/// source schemas alone.
pub fn static_report(g: &PipelineGraph, schema: &Schema, cfg: &AnalysisConfig) -> DisclosureReport {
    let flows = column_flows(g, schema);
    let (types, _) = infer_types(g);
    let originals = schema.original_columns(g);
    let outputs = g
        .outputs
        .iter()
        .map(|o| {
            let families = static_families(g, &types, o);
            OutputReport {
                node: o.clone(),
                kind: types
                    .get(o)
                    .map_or("unknown".to_string(), |t| t.kind.to_string()),
                level_of_detail: families
                    .iter()
                    .map(|f| level_of_detail(*f).to_string())
                    .collect(),
                families,
                columns: column_statuses(g, &flows, &originals, o),
            }
        })
        .collect();
    DisclosureReport {
        original_columns: originals,
        outputs,
        findings: detect_vulnerabilities_with(g, schema, cfg),
        distortions: Vec::new(),
        caveats: vec![PERCEPTUAL_CAVEAT.to_string()],
    }
}

/// Report for `g` over `original`; with executed `outputs`, each declared
/// signal's distortion is measured too.
pub fn disclosure_report(
    g: &PipelineGraph,
    original: &Table,
    outputs: Option<&BTreeMap<String, Output>>,
) -> Result<DisclosureReport> {
    let schema = Schema::declared(g).bind_all(g, original);
    let mut r = static_report(g, &schema, &AnalysisConfig::default());
    if let Some(outs) = outputs {
        let inputs = g
            .sources()
            .map(|(_, p)| (p.table.clone(), original.clone()))
            .collect();
        r.distortions = signal_distortions(g, &inputs, outs)?;
    }
    Ok(r)
}

/// Distortion of every declared signal. The original side comes from the
/// input named by the signal's `source`, else from the first source's table.
pub fn signal_distortions(
    g: &PipelineGraph,
    inputs: &BTreeMap<String, Table>,
    outputs: &BTreeMap<String, Output>,
) -> Result<Vec<Distortion>> {
    let mut out = Vec::new();
    for decl in &g.signals {
        let Some(o) = outputs.get(&decl.output) else {
            continue;
        };
        let t = original_for(decl, g, inputs)?;
        out.push(distortion_of_output(&decl.id, &decl.spec, t, o)?);
    }
    Ok(out)
}

impl DisclosureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "columns: {}", self.original_columns.join(", "));
        for o in &self.outputs {
            let fams: Vec<&str> = o.families.iter().map(|f| f.as_str()).collect();
            let _ = writeln!(s, "\noutput {} ({}; {})", o.node, o.kind, fams.join(" + "));
            for l in &o.level_of_detail {
                let _ = writeln!(s, "  detail: {l}");
            }
            for c in &o.columns {
                let status = match c.status {
                    Status::Revealed => "revealed",
                    Status::Distorted => "distorted",
                    Status::Hidden => "hidden",
                };
                if c.causes.is_empty() {
                    let _ = writeln!(s, "  {:<16} {status}", c.column);
                } else {
                    let _ = writeln!(s, "  {:<16} {status} by {}", c.column, c.causes.join(", "));
                }
            }
        }
        let _ = writeln!(s, "\nfindings ({}):", self.findings.len());
        for f in &self.findings {
            let _ = writeln!(
                s,
                "  {} {} at {}: {}",
                f.rule_id, f.category, f.node_id, f.justification
            );
        }
        if !self.distortions.is_empty() {
            let _ = writeln!(s, "\nsignals:");
            for d in &self.distortions {
                let val = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
                if d.hidden {
                    let _ = writeln!(
                        s,
                        "  {:<16} hidden (original {})",
                        d.signal,
                        val(d.original.value())
                    );
                } else {
                    let _ = writeln!(
                        s,
                        "  {:<16} original {} disclosed {} abs error {}",
                        d.signal,
                        val(d.original.value()),
                        val(d.disclosed.value()),
                        val(d.abs_error)
                    );
                }
            }
        }
        for c in &self.caveats {
            let _ = writeln!(s, "\nnote: {c}");
        }
        s
    }
}
