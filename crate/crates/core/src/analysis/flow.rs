//! Static column provenance: which original columns each node's output
//! carries, and which nodes transformed them on the way.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::Table;
use crate::pipeline::{CombineSpec, Emit, Op, PipelineGraph};
use crate::tactics::{BandLevels, Expr};

/// Original column → ids of the nodes that transformed it.
pub type Origins = BTreeMap<String, BTreeSet<String>>;

/// Output column → its origins. `None` when the input schema is unknown.
pub type ColumnFlow = Option<BTreeMap<String, Origins>>;

/// Column names (and optionally row counts) of the source tables, keyed by
/// the `table` parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    pub columns: BTreeMap<String, Vec<String>>,
    pub rows: BTreeMap<String, usize>,
}

impl Schema {
    /// Schemas declared in the source nodes' parameters.
    pub fn declared(g: &PipelineGraph) -> Self {
        let mut s = Schema::default();
        for (_, p) in g.sources() {
            if let Some(cols) = &p.columns {
                s.columns.insert(
                    p.table.clone(),
                    cols.iter().map(|c| c.name.clone()).collect(),
                );
            }
            if let Some(n) = p.rows {
                s.rows.insert(p.table.clone(), n);
            }
        }
        s
    }

    /// Binds a concrete table; its columns and row count replace any declaration.
    pub fn bind(mut self, name: &str, t: &Table) -> Self {
        self.columns.insert(name.to_string(), t.column_names());
        self.rows.insert(name.to_string(), t.n_rows());
        self
    }

    /// Binds `t` to every source table of `g`.
    pub fn bind_all(mut self, g: &PipelineGraph, t: &Table) -> Self {
        for (_, p) in g.sources() {
            self = self.bind(&p.table, t);
        }
        self
    }

    /// All original column names, in source order, without repeats.
    pub fn original_columns(&self, g: &PipelineGraph) -> Vec<String> {
        let mut tables: Vec<(&str, &str)> =
            g.sources().map(|(id, p)| (id, p.table.as_str())).collect();
        tables.sort();
        let mut out: Vec<String> = Vec::new();
        for (_, t) in tables {
            for c in self.columns.get(t).into_iter().flatten() {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }
}

fn touched(o: &Origins, node: &str) -> Origins {
    o.iter()
        .map(|(k, v)| {
            let mut v = v.clone();
            v.insert(node.to_string());
            (k.clone(), v)
        })
        .collect()
}

fn merge(into: &mut Origins, from: &Origins) {
    for (k, v) in from {
        into.entry(k.clone()).or_default().extend(v.iter().cloned());
    }
}

fn union_touched(cols: &BTreeMap<String, Origins>, names: &[&str], node: &str) -> Origins {
    let mut o = Origins::new();
    for n in names {
        if let Some(x) = cols.get(*n) {
            merge(&mut o, x);
        }
    }
    touched(&o, node)
}

/// Column flow of one node given its inputs' flows.
pub fn node_flow(id: &str, op: &Op, inputs: &[&ColumnFlow], schema: &Schema) -> ColumnFlow {
    if let Op::Source(p) = op {
        let cols = schema.columns.get(&p.table)?;
        return Some(
            cols.iter()
                .map(|c| (c.clone(), Origins::from([(c.clone(), BTreeSet::new())])))
                .collect(),
        );
    }
    if let Op::Combine(spec) = op {
        let mut out: BTreeMap<String, Origins> = BTreeMap::new();
        for (i, f) in inputs.iter().enumerate() {
            for (c, o) in f.as_ref()? {
                // layer members stay separate representations
                let key = match spec {
                    CombineSpec::Layer => format!("{i}:{c}"),
                    _ => c.clone(),
                };
                merge(out.entry(key).or_default(), o);
            }
        }
        return Some(out);
    }
    let input = inputs.first()?.as_ref()?;
    let mut out = input.clone();
    let all: Vec<&str> = input.keys().map(String::as_str).collect();
    match op {
        Op::Source(_) | Op::Combine(_) | Op::FullDisclosure {} => {}
        Op::EncodeSelect(p) => out.retain(|c, _| p.columns.contains(c)),
        Op::Classify(p) => {
            out.insert(
                format!("{}__bin", p.column),
                union_touched(input, &[&p.column], id),
            );
        }
        Op::Categorize(p) => {
            out.insert(p.column.clone(), union_touched(input, &[&p.column], id));
        }
        Op::Derive(p) => {
            let refs: Vec<String> = Expr::parse(&p.expr)
                .map(|e| e.columns().into_iter().collect())
                .unwrap_or_default();
            let refs: Vec<&str> = refs.iter().map(String::as_str).collect();
            out.insert(p.out.clone(), union_touched(input, &refs, id));
        }
        Op::Subsample(_) => {
            for v in out.values_mut() {
                *v = touched(v, id);
            }
        }
        Op::Noise(m) => {
            for c in &m.columns {
                if let Some(v) = out.get_mut(c) {
                    *v = touched(v, id);
                }
            }
        }
        Op::Permute(p) => {
            if let Some(v) = out.get_mut(&p.column) {
                *v = touched(v, id);
            }
        }
        Op::MagnitudeAdjust(p) => {
            let o = union_touched(input, &[&p.value, &p.spec.uncertainty], id);
            out.insert(p.value.clone(), o);
        }
        Op::Aggregate(p) => {
            out = BTreeMap::new();
            for k in &p.group_by {
                out.insert(k.clone(), union_touched(input, &[k], id));
            }
            for s in &p.stats {
                let o = match &s.column {
                    Some(c) => union_touched(input, &[c], id),
                    None => Origins::new(),
                };
                out.insert(s.name(), o);
            }
        }
        Op::Band(p) => {
            let src: Vec<&str> = match &p.source {
                Some(s) => vec![s.as_str()],
                None => all.clone(),
            };
            let o = union_touched(input, &src, id);
            let (key, stats): (String, &[&str]) = match &p.levels {
                BandLevels::Mass(_) => (
                    "region".into(),
                    &["level", "mass", "density_threshold", "cells"],
                ),
                BandLevels::Quantiles(_) => (
                    src.first().map_or("value".into(), |s| s.to_string()),
                    &["p_lo", "p_hi", "mass"],
                ),
                BandLevels::Cuts(_) => (
                    src.first().map_or("value".into(), |s| s.to_string()),
                    &["count", "mass"],
                ),
            };
            out = BTreeMap::new();
            out.insert(key, o.clone());
            for s in stats {
                out.insert(s.to_string(), o.clone());
            }
        }
        Op::SmoothKde(p) => {
            out = p
                .columns
                .iter()
                .map(|c| (c.clone(), union_touched(input, &[c], id)))
                .collect();
        }
        Op::PredictOls(p) => {
            let mut used: Vec<&str> = vec![&p.y];
            used.extend(p.xs.iter().map(String::as_str));
            let fitted = union_touched(input, &used, id);
            match p.emit {
                Emit::Sample => {
                    out.insert(format!("{}__fitted", p.y), fitted);
                }
                Emit::Model => {
                    out =
                        p.xs.iter()
                            .map(|x| (x.clone(), union_touched(input, &[x], id)))
                            .collect();
                    out.insert(p.y.clone(), fitted);
                }
            }
        }
        Op::ProjectPca(p) => {
            let used: Vec<&str> = p.columns.iter().map(String::as_str).collect();
            let o = union_touched(input, &used, id);
            match p.emit {
                Emit::Sample => {
                    out.retain(|c, _| !p.columns.contains(c));
                    for j in 1..=p.k {
                        out.insert(format!("pc{j}"), o.clone());
                    }
                }
                Emit::Model => {
                    out = BTreeMap::from([("component".to_string(), o)]);
                }
            }
        }
    }
    Some(out)
}

/// Column flow of every node, in topological order.
pub fn column_flows(g: &PipelineGraph, schema: &Schema) -> BTreeMap<String, ColumnFlow> {
    let mut flows: BTreeMap<String, ColumnFlow> = BTreeMap::new();
    for id in g.topo_order().unwrap_or_default() {
        let node = g.node(&id).expect("known id");
        let ins: Vec<&ColumnFlow> = g.inputs_of(&id).iter().map(|p| &flows[*p]).collect();
        let f = node_flow(&id, &node.op, &ins, schema);
        flows.insert(id, f);
    }
    flows
}

/// Row count reaching each node when the sources' counts are known.
pub fn row_counts(g: &PipelineGraph, schema: &Schema) -> BTreeMap<String, Option<usize>> {
    let mut rows: BTreeMap<String, Option<usize>> = BTreeMap::new();
    for id in g.topo_order().unwrap_or_default() {
        let node = g.node(&id).expect("known id");
        let ins: Vec<Option<usize>> = g.inputs_of(&id).iter().map(|p| rows[*p]).collect();
        let n = match &node.op {
            Op::Source(p) => schema.rows.get(&p.table).copied(),
            Op::Subsample(p) => Some(p.n),
            Op::Combine(CombineSpec::ConcatRows) => ins.iter().copied().sum(),
            Op::Combine(_) => None,
            _ => ins.first().copied().flatten(),
        };
        rows.insert(id, n);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::parse_pipeline;

    #[test]
    fn classify_then_aggregate() {
        let g = parse_pipeline(
            r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t","columns":[{"name":"x"},{"name":"y"}],"rows":40}},
            {"id":"c","op":"classify","params":{"column":"x","bins":{"equal_width":4}}},
            {"id":"a","op":"aggregate","params":{"group_by":["x__bin"],"stats":[{"stat":"count"}]}}],
            "edges":[["s","c",0],["c","a",0]],"outputs":["a"]}"#,
        )
        .unwrap();
        let schema = Schema::declared(&g);
        let flows = column_flows(&g, &schema);
        let a = flows["a"].as_ref().unwrap();
        assert_eq!(a.keys().collect::<Vec<_>>(), vec!["count", "x__bin"]);
        assert_eq!(
            a["x__bin"]["x"],
            BTreeSet::from(["a".to_string(), "c".to_string()])
        );
        assert!(a["count"].is_empty());
        let c = flows["c"].as_ref().unwrap();
        assert!(c["x"]["x"].is_empty());
        assert_eq!(row_counts(&g, &schema)["c"], Some(40));
    }
}
