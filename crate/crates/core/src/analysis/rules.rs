use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pipeline::{infer_types, NodeType, Op, PipelineGraph, StaticKind};
use crate::tactics::Expr;

use super::flow::{column_flows, row_counts, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Confuser,
    Jumbler,
    HallucinatorRisk,
    MisleaderRisk,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Confuser => "Confuser",
            Category::Jumbler => "Jumbler",
            Category::HallucinatorRisk => "HallucinatorRisk",
            Category::MisleaderRisk => "MisleaderRisk",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub id: &'static str,
    pub category: Category,
    pub trigger: &'static str,
    /// Wording the rule rests on.
    pub basis: &'static str,
}

pub const RULEBOOK: [Rule; 8] = [
    Rule {
        id: "R1",
        category: Category::Confuser,
        trigger: "encode_select drops a column",
        basis: "omission of variables due to the use of the encoded values tactic",
    },
    Rule {
        id: "R2",
        category: Category::Confuser,
        trigger: "aggregate, classify or band partitions the data",
        basis: "individual values contained within each partition indistinguishable",
    },
    Rule {
        id: "R3",
        category: Category::Confuser,
        trigger: "smooth_kde replaces points with a density",
        basis: "obscuring fine-grained details",
    },
    Rule {
        id: "R4",
        category: Category::Jumbler,
        trigger: "magnitude_adjust anywhere in the graph",
        basis: "the adjustment function is opaque and may be hard to decode",
    },
    Rule {
        id: "R5",
        category: Category::Jumbler,
        trigger: "derive combines two or more columns",
        basis: "changes in the derived values cannot be traced back to changes in the source columns",
    },
    Rule {
        id: "R6",
        category: Category::HallucinatorRisk,
        trigger: "an output is a sample",
        basis: "encode a sample-based data representation",
    },
    Rule {
        id: "R7",
        category: Category::MisleaderRisk,
        trigger: "classify with fewer expected rows per bin than the threshold",
        basis: "a histogram with too many bins can highlight artifacts or patterns that are not truly significant",
    },
    Rule {
        id: "R8",
        category: Category::Confuser,
        trigger: "subsample, noise or permute",
        basis: "imprecise or unrepresentative values for individual points",
    },
];

pub fn rule(id: &str) -> Option<&'static Rule> {
    RULEBOOK.iter().find(|r| r.id == id)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub category: Category,
    pub rule_id: String,
    pub node_id: String,
    pub subject: Vec<String>,
    pub justification: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// R7 fires when expected rows per bin fall below this.
    pub min_bin_occupancy: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            min_bin_occupancy: 5.0,
        }
    }
}

fn list(cols: &[String]) -> String {
    if cols.is_empty() {
        "its columns".to_string()
    } else {
        cols.iter()
            .map(|c| format!("`{c}`"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn finding(rule_id: &str, node: &str, subject: Vec<String>, detail: String) -> Finding {
    let r = rule(rule_id).expect("rule in rulebook");
    Finding {
        category: r.category,
        rule_id: rule_id.to_string(),
        node_id: node.to_string(),
        subject,
        justification: format!("{detail} [{}: \"{}\"]", r.id, r.basis),
    }
}

/// Findings for `g` using the source schemas declared in the graph.
pub fn detect_vulnerabilities(g: &PipelineGraph) -> Vec<Finding> {
    detect_vulnerabilities_with(g, &Schema::declared(g), &AnalysisConfig::default())
}

/// Findings for `g`, ordered by node position then rule.
pub fn detect_vulnerabilities_with(
    g: &PipelineGraph,
    schema: &Schema,
    cfg: &AnalysisConfig,
) -> Vec<Finding> {
    let Some(order) = g.topo_order() else {
        return Vec::new();
    };
    let flows = column_flows(g, schema);
    let rows = row_counts(g, schema);
    let (types, _) = infer_types(g);
    let mut out: Vec<(usize, Finding)> = Vec::new();

    let input_cols = |id: &str| -> Option<Vec<String>> {
        let ins = g.inputs_of(id);
        let f = flows.get(*ins.first()?)?.as_ref()?;
        Some(f.keys().cloned().collect())
    };

    for (pos, id) in order.iter().enumerate() {
        let node = g.node(id).expect("known id");
        let mut push = |f: Finding| out.push((pos, f));
        match &node.op {
            Op::EncodeSelect(p) => match input_cols(id) {
                Some(cols) => {
                    for c in cols.iter().filter(|c| !p.columns.contains(c)) {
                        push(finding(
                            "R1",
                            id,
                            vec![c.clone()],
                            format!("`{id}` omits `{c}`; patterns involving it cannot be seen."),
                        ));
                    }
                }
                None => push(finding(
                    "R1",
                    id,
                    Vec::new(),
                    format!("`{id}` keeps only {}; any other column is omitted.", list(&p.columns)),
                )),
            },
            Op::Classify(p) => {
                let subj = vec![p.column.clone()];
                push(finding(
                    "R2",
                    id,
                    subj.clone(),
                    format!("`{id}` bins `{}`; values within a bin are indistinguishable.", p.column),
                ));
                let b = p.bins.bin_count();
                if let (Some(n), true) = (rows.get(id).copied().flatten(), b > 0) {
                    let per_bin = n as f64 / b as f64;
                    if per_bin < cfg.min_bin_occupancy {
                        push(finding(
                            "R7",
                            id,
                            subj,
                            format!(
                                "`{id}` spreads {n} rows over {b} bins ({per_bin:.2} per bin, below {}); \
                                 bin-to-bin variation may be noise.",
                                cfg.min_bin_occupancy
                            ),
                        ));
                    }
                }
            }
            Op::Aggregate(p) => push(finding(
                "R2",
                id,
                p.group_by.clone(),
                format!(
                    "`{id}` reduces each group of {} to summary statistics; individual values are indistinguishable.",
                    list(&p.group_by)
                ),
            )),
            Op::Band(p) => {
                let subj = match &p.source {
                    Some(s) => vec![s.clone()],
                    None => input_cols(id).unwrap_or_default(),
                };
                push(finding(
                    "R2",
                    id,
                    subj.clone(),
                    format!("`{id}` collapses {} into bands; values within a band are indistinguishable.", list(&subj)),
                ));
            }
            Op::SmoothKde(p) => push(finding(
                "R3",
                id,
                p.columns.clone(),
                format!("`{id}` smooths {} into a density; fine-grained detail is lost.", list(&p.columns)),
            )),
            Op::MagnitudeAdjust(p) => push(finding(
                "R4",
                id,
                vec![p.value.clone(), p.spec.uncertainty.clone()],
                format!(
                    "`{id}` blends `{}` toward {} by `{}`; the two cannot be read apart.",
                    p.value, p.spec.pivot, p.spec.uncertainty
                ),
            )),
            Op::Derive(p) => {
                let refs: BTreeSet<String> = Expr::parse(&p.expr).map(|e| e.columns()).unwrap_or_default();
                if refs.len() >= 2 {
                    let subj: Vec<String> = refs.into_iter().collect();
                    push(finding(
                        "R5",
                        id,
                        subj.clone(),
                        format!("`{id}` derives `{}` from {}; a change in it has no unique cause.", p.out, list(&subj)),
                    ));
                }
            }
            Op::Subsample(p) => {
                let subj = input_cols(id).unwrap_or_default();
                push(finding(
                    "R8",
                    id,
                    subj,
                    format!("`{id}` keeps {} rows; the subsample may not represent the data.", p.n),
                ));
            }
            Op::Noise(m) => push(finding(
                "R8",
                id,
                m.columns.clone(),
                format!("`{id}` perturbs {}; individual values are imprecise.", list(&m.columns)),
            )),
            Op::Permute(p) => push(finding(
                "R8",
                id,
                vec![p.column.clone()],
                format!("`{id}` shuffles `{}`; its values no longer belong to their rows.", p.column),
            )),
            _ => {}
        }
    }

    let pos: BTreeMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    for o in &g.outputs {
        let members = sample_members(g, &types, o);
        if !members.is_empty() {
            let subj: BTreeSet<String> = members
                .iter()
                .filter_map(|m| flows.get(*m).and_then(|f| f.as_ref()))
                .flat_map(|f| f.keys().cloned())
                .collect();
            let subj: Vec<String> = subj.into_iter().collect();
            out.push((
                pos[o.as_str()],
                finding(
                    "R6",
                    o,
                    subj,
                    format!("output `{o}` shows individual points; viewers may read structure into the sample."),
                ),
            ));
        }
    }
    out.sort_by(|a, b| (a.0, &a.1.rule_id, &a.1.subject).cmp(&(b.0, &b.1.rule_id, &b.1.subject)));
    out.into_iter().map(|(_, f)| f).collect()
}

/// Nodes whose sample output `id` shows: itself, or the sample members of
/// a layer bundle.
pub fn sample_members<'a>(
    g: &'a PipelineGraph,
    types: &BTreeMap<String, NodeType>,
    id: &'a str,
) -> Vec<&'a str> {
    match types.get(id).map(|t| t.kind) {
        Some(StaticKind::Sample) => vec![id],
        Some(StaticKind::Bundle) => g
            .inputs_of(id)
            .into_iter()
            .flat_map(|m| sample_members(g, types, m))
            .collect(),
        _ => Vec::new(),
    }
}
