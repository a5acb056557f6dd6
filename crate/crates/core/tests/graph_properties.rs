use std::collections::{BTreeMap, BTreeSet};

use disclosure_core::analysis::{detect_vulnerabilities, disclosure_report, Category, Finding};
use disclosure_core::pipeline::{
    execute, execute_all, infer_types, kind_mismatch, output_kind, parse_pipeline, random_pipeline,
    random_table, CombineSpec, Op, Output, PipelineGraph, StaticKind,
};
use disclosure_core::{Error, RepKind, Representation, Seed, Table};
use proptest::prelude::*;
use serde_json::Value;

const ROWS: usize = 80;

fn inputs(seed: u64) -> BTreeMap<String, Table> {
    BTreeMap::from([("t".to_string(), random_table(Seed(seed), ROWS))])
}

fn columns_of(out: &Output) -> Vec<String> {
    match out.as_rep().map(|r| &r.kind) {
        Some(RepKind::Sample(t)) => t.column_names(),
        Some(RepKind::Summary(s)) => s.key_columns.iter().chain(&s.stat_names).cloned().collect(),
        Some(RepKind::Model(m)) => m.axes.iter().map(|a| a.name.clone()).collect(),
        None => Vec::new(),
    }
}

type Trace = Vec<(String, Option<String>)>;

/// Lineages a node's output may carry: its op appended to one input's
/// lineage, or for join/concat the inputs' lineages in slot order.
fn possible_lineages(g: &PipelineGraph, id: &str) -> BTreeSet<Trace> {
    let node = g.node(id).unwrap();
    let ins = g.inputs_of(id);
    match &node.op {
        Op::Source(_) => BTreeSet::from([Vec::new()]),
        Op::FullDisclosure {} => possible_lineages(g, ins[0]),
        Op::Combine(CombineSpec::Layer) => ins.iter().flat_map(|i| possible_lineages(g, i)).collect(),
        Op::Combine(_) => {
            let mut acc: BTreeSet<Trace> = BTreeSet::from([Vec::new()]);
            for i in ins {
                let next = possible_lineages(g, i);
                acc = acc
                    .iter()
                    .flat_map(|a| next.iter().map(move |n| a.iter().chain(n).cloned().collect()))
                    .collect();
            }
            acc.into_iter()
                .map(|mut l| {
                    l.push(("combine".to_string(), Some(id.to_string())));
                    l
                })
                .collect()
        }
        op => possible_lineages(g, ins[0])
            .into_iter()
            .map(|mut l| {
                l.push((op.name().to_string(), Some(id.to_string())));
                l
            })
            .collect(),
    }
}

fn trace(r: &Representation) -> Trace {
    r.lineage.iter().map(|e| (e.op.clone(), e.node.clone())).collect()
}

/// `g` with its nodes declared in reverse and its edges rotated.
fn reordered(g: &PipelineGraph) -> PipelineGraph {
    let mut doc: Value = serde_json::from_str(&g.to_json()).unwrap();
    doc["nodes"].as_array_mut().unwrap().reverse();
    let edges = doc["edges"].as_array_mut().unwrap();
    let k = edges.len() / 2;
    edges.rotate_left(k);
    parse_pipeline(&doc.to_string()).unwrap()
}

/// `g` plus one extra output node hanging off `parent`.
fn with_extra_node(g: &PipelineGraph, parent: &str, kind: StaticKind) -> Option<PipelineGraph> {
    let (op, params) = match kind {
        StaticKind::Sample => ("noise", serde_json::json!({"family": "gaussian", "sigma": 1.0, "columns": []})),
        StaticKind::Model(disclosure_core::Evaluator::DensityGrid) => {
            ("band", serde_json::json!({"levels": {"mass": [0.5]}}))
        }
        _ => return None,
    };
    let mut doc: Value = serde_json::from_str(&g.to_json()).unwrap();
    doc["nodes"].as_array_mut().unwrap().push(serde_json::json!({"id": "extra", "op": op, "params": params}));
    doc["edges"].as_array_mut().unwrap().push(serde_json::json!([parent, "extra", 0]));
    doc["outputs"].as_array_mut().unwrap().push(serde_json::json!("extra"));
    Some(parse_pipeline(&doc.to_string()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn static_kinds_match_execution(seed in any::<u64>()) {
        let g = random_pipeline(Seed(seed), ROWS, 7);
        let (types, errors) = infer_types(&g);
        prop_assert!(errors.is_empty());
        let all = execute_all(&g, &inputs(seed), Seed(seed)).unwrap();
        for (id, out) in &all {
            prop_assert_eq!(output_kind(out), types[id].kind, "node {}", id);
            for m in out.members() {
                prop_assert!(m.check().is_ok());
            }
        }
    }

    #[test]
    fn execution_is_deterministic_and_order_free(seed in any::<u64>()) {
        let g = random_pipeline(Seed(seed), ROWS, 7);
        let a = serde_json::to_string(&execute(&g, &inputs(seed), Seed(seed)).unwrap()).unwrap();
        let b = serde_json::to_string(&execute(&g, &inputs(seed), Seed(seed)).unwrap()).unwrap();
        let c = serde_json::to_string(&execute(&reordered(&g), &inputs(seed), Seed(seed)).unwrap()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
    }

    #[test]
    fn lineage_follows_a_path(seed in any::<u64>()) {
        let g = random_pipeline(Seed(seed), ROWS, 7);
        let all = execute_all(&g, &inputs(seed), Seed(seed)).unwrap();
        for (id, out) in &all {
            let allowed = possible_lineages(&g, id);
            for m in out.members() {
                prop_assert!(allowed.contains(&trace(m)), "node {}: {:?} not in {:?}", id, trace(m), allowed);
            }
        }
    }

    #[test]
    fn kind_mismatches_never_execute(seed in any::<u64>()) {
        let g = kind_mismatch(&random_pipeline(Seed(seed), ROWS, 7), Seed(seed));
        let r = execute(&g, &inputs(seed), Seed(seed));
        prop_assert!(matches!(r, Err(Error::Invalid(_))));
    }

    #[test]
    fn rulebook_exactness(seed in any::<u64>()) {
        let g = random_pipeline(Seed(seed), ROWS, 7);
        let findings = detect_vulnerabilities(&g);
        let has_adjust = g.nodes.iter().any(|n| matches!(n.op, Op::MagnitudeAdjust(_)));
        let r4 = findings.iter().any(|f| f.rule_id == "R4" && f.category == Category::Jumbler);
        prop_assert_eq!(r4, has_adjust);

        let all = execute_all(&g, &inputs(seed), Seed(seed)).unwrap();
        let shows_sample = g.outputs.iter().any(|o| {
            all[o].members().iter().any(|m| matches!(m.kind, RepKind::Sample(_)))
        });
        let r6 = findings.iter().any(|f| f.rule_id == "R6" && f.category == Category::HallucinatorRisk);
        prop_assert_eq!(r6, shows_sample);

        for n in &g.nodes {
            if let Op::EncodeSelect(p) = &n.op {
                let input = &all[g.inputs_of(&n.id)[0]];
                let dropped: BTreeSet<String> = columns_of(input).into_iter().filter(|c| !p.columns.contains(c)).collect();
                let named: BTreeSet<String> = findings
                    .iter()
                    .filter(|f| f.rule_id == "R1" && f.node_id == n.id)
                    .flat_map(|f| f.subject.clone())
                    .collect();
                prop_assert_eq!(named, dropped, "node {}", n.id);
            }
        }
    }

    #[test]
    fn findings_survive_additions(seed in any::<u64>()) {
        let g = random_pipeline(Seed(seed), ROWS, 7);
        let (types, _) = infer_types(&g);
        let before: BTreeSet<Finding> = detect_vulnerabilities(&g).into_iter().collect();
        for (id, t) in &types {
            if t.terminal { continue; }
            if let Some(bigger) = with_extra_node(&g, id, t.kind) {
                let after: BTreeSet<Finding> = detect_vulnerabilities(&bigger).into_iter().collect();
                prop_assert!(before.is_subset(&after), "adding under {}", id);
            }
        }
    }

    #[test]
    fn statuses_ignore_data(seed in any::<u64>()) {
        let g = random_pipeline(Seed(seed), ROWS, 7);
        let a = disclosure_report(&g, &random_table(Seed(seed), 30), None).unwrap();
        let b = disclosure_report(&g, &random_table(Seed(seed ^ 1), 500), None).unwrap();
        prop_assert_eq!(a.outputs, b.outputs);
    }
}
