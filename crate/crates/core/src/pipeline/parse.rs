use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::signals::{SignalDecl, SweepSpec};

use super::ir::{Edge, Node, Op, PipelineGraph, OP_NAMES};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    nodes: Vec<RawNode>,
    edges: Vec<Edge>,
    outputs: Vec<String>,
    #[serde(default)]
    signals: Vec<SignalDecl>,
    #[serde(default)]
    sweep: Option<SweepSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    op: String,
    #[serde(default)]
    params: Option<Value>,
}

fn syntax(e: serde_json::Error) -> Error {
    Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Position of the first `"id": "<id>"` in the document, for error messages.
fn locate(text: &str, id: &str) -> Option<(usize, usize)> {
    let quoted = serde_json::to_string(id).ok()?;
    let mut from = 0;
    while let Some(off) = text[from..].find("\"id\"") {
        let at = from + off;
        let rest = text[at + 4..].trim_start();
        if let Some(rest) = rest.strip_prefix(':') {
            if rest.trim_start().starts_with(&quoted) {
                let line = text[..at].matches('\n').count() + 1;
                let col = at - text[..at].rfind('\n').map_or(0, |p| p + 1) + 1;
                return Some((line, col));
            }
        }
        from = at + 4;
    }
    None
}

fn at_id(text: &str, id: &str, e: Error) -> Error {
    match locate(text, id) {
        Some((line, column)) => Error::Syntax {
            line,
            column,
            message: e.to_string(),
        },
        None => e,
    }
}

/// Parses a pipeline document and checks the graph invariants: unique ids,
/// known ops, edges between declared nodes, fully connected input slots,
/// acyclicity and at least one output. Kind checking is separate.
pub fn parse_pipeline(text: &str) -> Result<PipelineGraph> {
    let raw: RawDoc = serde_json::from_str(text).map_err(syntax)?;
    let mut seen = BTreeSet::new();
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for n in raw.nodes {
        if !seen.insert(n.id.clone()) {
            return Err(at_id(text, &n.id, Error::DuplicateId(n.id.clone())));
        }
        if !OP_NAMES.contains(&n.op.as_str()) {
            let e = Error::UnknownOp {
                node: n.id.clone(),
                op: n.op,
            };
            return Err(at_id(text, &n.id, e));
        }
        let tagged = serde_json::json!({
            "op": n.op,
            "params": n.params.unwrap_or_else(|| Value::Object(Default::default())),
        });
        let op: Op = serde_json::from_value(tagged)
            .map_err(|e| at_id(text, &n.id, Error::param(e.to_string()).at_node(&n.id)))?;
        nodes.push(Node { id: n.id, op });
    }
    let g = PipelineGraph {
        nodes,
        edges: raw.edges,
        outputs: raw.outputs,
        signals: raw.signals,
        sweep: raw.sweep,
    };
    check_graph(&g)?;
    Ok(g)
}

/// Graph invariants independent of representation kinds.
pub fn check_graph(g: &PipelineGraph) -> Result<()> {
    let ids: BTreeSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
    if ids.len() != g.nodes.len() {
        let mut seen = BTreeSet::new();
        let dup = g.nodes.iter().find(|n| !seen.insert(&n.id)).unwrap();
        return Err(Error::DuplicateId(dup.id.clone()));
    }
    for e in &g.edges {
        for end in [e.from(), e.to()] {
            if !ids.contains(end) {
                return Err(Error::UnknownNode(end.to_string()));
            }
        }
    }
    let mut slots: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for e in &g.edges {
        slots.entry(e.to()).or_default().push(e.slot());
    }
    for n in &g.nodes {
        let mut s = slots.remove(n.id.as_str()).unwrap_or_default();
        s.sort_unstable();
        let ok = match n.op {
            Op::Source(_) => s.is_empty(),
            Op::Combine(_) => !s.is_empty() && s.iter().enumerate().all(|(i, &x)| i == x),
            _ => s == [0],
        };
        if !ok {
            let want = match n.op {
                Op::Source(_) => "no inputs".to_string(),
                Op::Combine(_) => "slots 0..m-1, each connected once".to_string(),
                _ => "exactly one input on slot 0".to_string(),
            };
            return Err(Error::Pipeline(format!(
                "node `{}` ({}) needs {want}, has slots {s:?}",
                n.id,
                n.op.name()
            )));
        }
    }
    if g.outputs.is_empty() {
        return Err(Error::Pipeline("at least one output is required".into()));
    }
    let mut outs = BTreeSet::new();
    for o in &g.outputs {
        if !ids.contains(o.as_str()) {
            return Err(Error::UnknownNode(o.clone()));
        }
        if !outs.insert(o) {
            return Err(Error::Pipeline(format!("output `{o}` listed twice")));
        }
    }
    if g.topo_order().is_none() {
        return Err(Error::Cycle(cycle_members(g)));
    }
    let mut signal_ids = BTreeSet::new();
    for s in &g.signals {
        if !signal_ids.insert(s.id.as_str()) {
            return Err(Error::Pipeline(format!("duplicate signal id `{}`", s.id)));
        }
        if !ids.contains(s.output.as_str()) {
            return Err(Error::UnknownNode(s.output.clone()));
        }
        s.spec
            .validate()
            .map_err(|e| Error::Pipeline(format!("signal `{}`: {e}", s.id)))?;
    }
    if let Some(sw) = &g.sweep {
        sw.check(g)?;
    }
    Ok(())
}

/// Nodes left with unresolved inputs after peeling off every acyclic prefix.
fn cycle_members(g: &PipelineGraph) -> Vec<String> {
    let mut live: BTreeSet<&str> = g.nodes.iter().map(|n| n.id.as_str()).collect();
    loop {
        let removable: Vec<&str> = live
            .iter()
            .copied()
            .filter(|id| {
                !g.edges
                    .iter()
                    .any(|e| e.to() == *id && live.contains(e.from()))
            })
            .collect();
        if removable.is_empty() {
            break;
        }
        for r in removable {
            live.remove(r);
        }
    }
    live.into_iter().map(String::from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = r#"{
  "nodes": [
    {"id": "src", "op": "source", "params": {"table": "t"}},
    {"id": "cls", "op": "classify", "params": {"column": "x", "bins": {"equal_width": 2}}},
    {"id": "agg", "op": "aggregate", "params": {"group_by": ["x__bin"], "stats": [{"stat": "count"}]}}
  ],
  "edges": [["src", "cls", 0], ["cls", "agg", 0]],
  "outputs": ["agg"]
}"#;

    #[test]
    fn chain_parses_verbatim() {
        let g = parse_pipeline(CHAIN).unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(
            g.edges,
            vec![Edge::new("src", "cls", 0), Edge::new("cls", "agg", 0)]
        );
        assert_eq!(g.outputs, vec!["agg"]);
        assert_eq!(g.topo_order().unwrap(), vec!["src", "cls", "agg"]);
        let again = parse_pipeline(&g.to_json()).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn fan_out() {
        let g = parse_pipeline(
            r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},
            {"id":"n","op":"noise","params":{"family":"laplace","scale":1,"columns":["x"]}},
            {"id":"k","op":"smooth_kde","params":{"columns":["x"],"bandwidth":["auto"],"grid":[{"n":32}]}}],
            "edges":[["s","n",0],["s","k",0]],"outputs":["n","k"]}"#,
        )
        .unwrap();
        let mut succ = g.successors_of("s");
        succ.sort();
        assert_eq!(succ, vec!["k", "n"]);
    }

    #[test]
    fn missing_edge_target_named() {
        let err = parse_pipeline(
            r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}}],"edges":[["s","ghost",0]],"outputs":["s"]}"#,
        )
        .unwrap_err();
        assert_eq!(err, Error::UnknownNode("ghost".into()));
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_pipeline("{\n  \"nodes\": [,]\n}").unwrap_err();
        match err {
            Error::Syntax { line, column, .. } => assert_eq!((line, column), (2, 13)),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn duplicate_and_unknown() {
        let dup = r#"{"nodes":[{"id":"a","op":"source","params":{"table":"t"}},{"id":"a","op":"source","params":{"table":"t"}}],"edges":[],"outputs":["a"]}"#;
        assert!(matches!(
            parse_pipeline(dup).unwrap_err(),
            Error::Syntax { line: 1, .. }
        ));
        let unknown = r#"{"nodes":[{"id":"a","op":"explode"}],"edges":[],"outputs":["a"]}"#;
        let e = parse_pipeline(unknown).unwrap_err();
        assert!(e.to_string().contains("unknown op `explode`"), "{e}");
    }

    #[test]
    fn cycle_rejected() {
        let doc = r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},
            {"id":"c","op":"combine","params":{"mode":"concat_rows"}},
            {"id":"p","op":"permute","params":{"column":"x"}}],
            "edges":[["s","c",0],["p","c",1],["c","p",0]],"outputs":["c"]}"#;
        assert_eq!(
            parse_pipeline(doc).unwrap_err(),
            Error::Cycle(vec!["c".into(), "p".into()])
        );
    }

    #[test]
    fn unconnected_slot_rejected() {
        let doc = r#"{"nodes":[{"id":"p","op":"permute","params":{"column":"x"}}],"edges":[],"outputs":["p"]}"#;
        assert!(matches!(
            parse_pipeline(doc).unwrap_err(),
            Error::Pipeline(_)
        ));
        let no_out = r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}}],"edges":[],"outputs":[]}"#;
        assert!(parse_pipeline(no_out).is_err());
    }

    #[test]
    fn bad_params_reported_at_node() {
        let doc = r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},
{"id":"c","op":"classify","params":{"column":"x"}}],"edges":[["s","c",0]],"outputs":["c"]}"#;
        let e = parse_pipeline(doc).unwrap_err();
        match e {
            Error::Syntax { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("node `c`"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }
}
