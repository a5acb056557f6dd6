use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Cell, Column, LineageEntry, RepKind, Representation, Table};
use crate::rng::Seed;
use crate::tactics::{self, Expr};

use super::ir::{CombineSpec, Emit, Op, PipelineGraph};
use super::validate::validate_pipeline;

/// Result of one node: a representation, or a layered bundle from `combine`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Output {
    Rep(Representation),
    Bundle(Vec<Representation>),
}

impl Output {
    pub fn as_rep(&self) -> Option<&Representation> {
        match self {
            Output::Rep(r) => Some(r),
            Output::Bundle(_) => None,
        }
    }

    /// The representation itself, or every bundle member.
    pub fn members(&self) -> Vec<&Representation> {
        match self {
            Output::Rep(r) => vec![r],
            Output::Bundle(b) => b.iter().collect(),
        }
    }
}

/// Runs the graph and returns the declared outputs.
pub fn execute(
    g: &PipelineGraph,
    inputs: &BTreeMap<String, Table>,
    seed: Seed,
) -> Result<BTreeMap<String, Output>> {
    let mut all = execute_all(g, inputs, seed)?;
    Ok(g.outputs
        .iter()
        .map(|id| (id.clone(), all.remove(id).expect("output executed")))
        .collect())
}

/// Runs the graph and returns the result of every node.
///
/// Sources bind to `inputs` by their `table` parameter, falling back to the
/// node id. Randomized nodes draw from `seed.for_node(id)`. Nodes at the same
/// depth run in parallel; results do not depend on the schedule.
pub fn execute_all(
    g: &PipelineGraph,
    inputs: &BTreeMap<String, Table>,
    seed: Seed,
) -> Result<BTreeMap<String, Output>> {
    let errors = validate_pipeline(g);
    if !errors.is_empty() {
        return Err(Error::Invalid(
            errors.iter().map(ToString::to_string).collect(),
        ));
    }
    let depths = g.depths().ok_or_else(|| Error::Cycle(vec![]))?;
    let max_depth = depths.values().copied().max().unwrap_or(0);
    let mut done: BTreeMap<String, Output> = BTreeMap::new();
    for level in 0..=max_depth {
        let ready: Vec<&String> = depths
            .iter()
            .filter(|(_, &d)| d == level)
            .map(|(id, _)| id)
            .collect();
        let results: Vec<(String, Result<Output>)> = ready
            .par_iter()
            .map(|id| {
                let node = g.node(id).expect("known id");
                let ins: Vec<&Output> = g.inputs_of(id).iter().map(|p| &done[*p]).collect();
                let out = run_node(id, &node.op, &ins, inputs, seed).map_err(|e| e.at_node(id));
                ((*id).clone(), out)
            })
            .collect();
        for (id, r) in results {
            done.insert(id, r?);
        }
    }
    Ok(done)
}

fn single<'a>(ins: &[&'a Output]) -> &'a Representation {
    ins[0].as_rep().expect("kind-checked input")
}

fn run_node(
    id: &str,
    op: &Op,
    ins: &[&Output],
    tables: &BTreeMap<String, Table>,
    seed: Seed,
) -> Result<Output> {
    let node_seed = seed.for_node(id);
    let rep = match op {
        Op::Source(p) => {
            let t = tables
                .get(&p.table)
                .or_else(|| tables.get(id))
                .ok_or_else(|| Error::Unbound(p.table.clone()))?;
            if let Some(decl) = &p.columns {
                for c in decl {
                    let col = t.column(&c.name)?;
                    if let Some(k) = c.kind {
                        if col.kind != k {
                            return Err(Error::Schema(format!(
                                "column `{}` declared {k:?}, found {:?}",
                                c.name, col.kind
                            )));
                        }
                    }
                }
            }
            Representation::sample(t.clone())
        }
        Op::Combine(spec) => {
            let reps: Vec<Representation> = ins
                .iter()
                .map(|o| o.as_rep().expect("kind-checked").clone())
                .collect();
            return combine(&reps, spec).map(|o| tag_combine(o, id));
        }
        Op::FullDisclosure {} => single(ins).clone(),
        Op::Classify(p) => tactics::classify(single(ins), &p.column, &p.bins)?,
        Op::Categorize(p) => tactics::categorize(
            single(ins),
            &p.column,
            &p.mapping,
            p.default_group.as_deref(),
        )?,
        Op::Aggregate(p) => tactics::aggregate(single(ins), &p.group_by, &p.stats)?,
        Op::Band(p) => tactics::band(single(ins), p.source.as_deref(), &p.levels)?,
        Op::Derive(p) => tactics::derive(single(ins), &Expr::parse(&p.expr)?, &p.out)?,
        Op::EncodeSelect(p) => tactics::encode_select(single(ins), &p.columns)?,
        Op::Subsample(p) => tactics::subsample(single(ins), p.n, p.replacement, node_seed)?,
        Op::Noise(model) => tactics::noise(single(ins), model, node_seed)?,
        Op::Permute(p) => tactics::permute(single(ins), &p.column, node_seed)?,
        Op::SmoothKde(p) => tactics::smooth_kde(single(ins), &p.columns, &p.bandwidth, &p.grid)?,
        Op::MagnitudeAdjust(p) => tactics::magnitude_adjust(single(ins), &p.spec, &p.value)?,
        Op::PredictOls(p) => {
            let fit = tactics::predict_ols(single(ins), &p.y, &p.xs, p.grid_n)?;
            match p.emit {
                Emit::Model => fit.model,
                Emit::Sample => fit.fitted,
            }
        }
        Op::ProjectPca(p) => {
            let fit = tactics::project_pca(single(ins), &p.columns, p.k)?;
            match p.emit {
                Emit::Model => fit.model,
                Emit::Sample => fit.embedding,
            }
        }
    };
    Ok(Output::Rep(tag_last(rep, ins, id)))
}

/// Marks the entry this node appended (if any) with the node id.
fn tag_last(mut rep: Representation, ins: &[&Output], id: &str) -> Representation {
    let before = ins
        .first()
        .and_then(|o| o.as_rep())
        .map_or(0, |r| r.lineage.len());
    if rep.lineage.len() > before {
        if let Some(last) = rep.lineage.last_mut() {
            last.node = Some(id.to_string());
        }
    }
    rep
}

fn tag_combine(out: Output, id: &str) -> Output {
    match out {
        Output::Rep(mut r) => {
            if let Some(last) = r.lineage.last_mut() {
                last.node = Some(id.to_string());
            }
            Output::Rep(r)
        }
        b => b,
    }
}

/// Joins, concatenates or layers representations. Join and concat take
/// samples and concatenate their lineages, followed by a `combine` entry;
/// layer bundles keep each member as is.
pub fn combine(reps: &[Representation], spec: &CombineSpec) -> Result<Output> {
    if reps.is_empty() {
        return Err(Error::param("combine needs at least one input"));
    }
    if let CombineSpec::Layer = spec {
        return Ok(Output::Bundle(reps.to_vec()));
    }
    let tables: Vec<&Table> = reps.iter().map(|r| r.as_table()).collect::<Result<_>>()?;
    let mut acc = tables[0].clone();
    for t in &tables[1..] {
        acc = match spec {
            CombineSpec::JoinOnKeys { keys } => join(&acc, t, keys)?,
            CombineSpec::ConcatRows => concat(&acc, t)?,
            CombineSpec::Layer => unreachable!(),
        };
    }
    let mut lineage: Vec<LineageEntry> = reps
        .iter()
        .flat_map(|r| r.lineage.iter().cloned())
        .collect();
    lineage.push(LineageEntry::new("combine"));
    Ok(Output::Rep(
        Representation::sample(acc).with_lineage(lineage),
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum KeyAtom {
    Num(u64),
    Text(String),
}

fn key_of(t: &Table, idx: &[usize], r: usize) -> Option<Vec<KeyAtom>> {
    idx.iter()
        .map(|&i| match &t.columns[i].cells[r] {
            // +0.0 and -0.0 compare equal
            Cell::Num(v) => Some(KeyAtom::Num((v + 0.0).to_bits())),
            Cell::Text(s) => Some(KeyAtom::Text(s.clone())),
            Cell::Missing => None,
        })
        .collect()
}

/// Inner join; rows come in left order, then right order within a key.
fn join(left: &Table, right: &Table, keys: &[String]) -> Result<Table> {
    if keys.is_empty() {
        return Err(Error::param("join needs at least one key column"));
    }
    let li: Vec<usize> = keys
        .iter()
        .map(|k| left.index_of(k))
        .collect::<Result<_>>()?;
    let ri: Vec<usize> = keys
        .iter()
        .map(|k| right.index_of(k))
        .collect::<Result<_>>()?;
    for c in &right.columns {
        if !keys.contains(&c.name) && left.has_column(&c.name) {
            return Err(Error::Schema(format!(
                "non-key column `{}` present on both sides",
                c.name
            )));
        }
    }
    let mut index: BTreeMap<Vec<KeyAtom>, Vec<usize>> = BTreeMap::new();
    for r in 0..right.n_rows() {
        if let Some(k) = key_of(right, &ri, r) {
            index.entry(k).or_default().push(r);
        }
    }
    let (mut lrows, mut rrows) = (Vec::new(), Vec::new());
    for r in 0..left.n_rows() {
        if let Some(m) = key_of(left, &li, r).and_then(|k| index.get(&k)) {
            for &rr in m {
                lrows.push(r);
                rrows.push(rr);
            }
        }
    }
    let mut out = left.take_rows(&lrows);
    let rt = right.take_rows(&rrows);
    for c in rt.columns.into_iter().filter(|c| !keys.contains(&c.name)) {
        out.columns.push(c);
    }
    out.source_id = format!("{}+{}", left.source_id, right.source_id);
    out.check()?;
    Ok(out)
}

fn concat(a: &Table, b: &Table) -> Result<Table> {
    if b.columns.is_empty() {
        return Ok(a.clone());
    }
    if a.columns.is_empty() {
        return Ok(b.clone());
    }
    let same = a.columns.len() == b.columns.len()
        && a.columns
            .iter()
            .zip(&b.columns)
            .all(|(x, y)| x.name == y.name && x.kind == y.kind && x.bins == y.bins);
    if !same {
        return Err(Error::Schema(format!(
            "concat needs identical schemas: [{}] vs [{}]",
            a.column_names().join(", "),
            b.column_names().join(", ")
        )));
    }
    let columns = a
        .columns
        .iter()
        .zip(&b.columns)
        .map(|(x, y)| {
            let mut c: Column = x.clone();
            c.cells.extend(y.cells.iter().cloned());
            c
        })
        .collect();
    Table::new(columns, a.source_id.clone())
}

/// Kind of a representation payload, for reporting.
pub fn rep_kind_name(kind: &RepKind) -> &'static str {
    match kind {
        RepKind::Sample(_) => "sample",
        RepKind::Summary(_) => "summary",
        RepKind::Model(_) => "model",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Column;
    use crate::pipeline::parse_pipeline;

    fn table(x: &[f64]) -> Table {
        Table::new(vec![Column::numeric("x", x)], "t").unwrap()
    }

    fn inputs(t: Table) -> BTreeMap<String, Table> {
        BTreeMap::from([("t".to_string(), t)])
    }

    #[test]
    fn identity_pipeline() {
        let g = parse_pipeline(
            r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},{"id":"f","op":"full_disclosure"}],
            "edges":[["s","f",0]],"outputs":["f"]}"#,
        )
        .unwrap();
        let t = table(&[3.0, 1.0, 2.0]);
        let out = execute(&g, &inputs(t.clone()), Seed(0)).unwrap();
        let rep = out["f"].as_rep().unwrap();
        assert_eq!(rep.as_table().unwrap(), &t);
        assert!(rep.lineage.is_empty());
    }

    #[test]
    fn chain_histogram_counts() {
        let g = parse_pipeline(
            r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},
            {"id":"c","op":"classify","params":{"column":"x","bins":{"equal_width":2}}},
            {"id":"a","op":"aggregate","params":{"group_by":["x__bin"],"stats":[{"stat":"count"}]}}],
            "edges":[["s","c",0],["c","a",0]],"outputs":["a"]}"#,
        )
        .unwrap();
        let out = execute(&g, &inputs(table(&[0.0, 1.0, 2.0, 3.0])), Seed(0)).unwrap();
        let rep = out["a"].as_rep().unwrap();
        let s = rep.as_summary().unwrap();
        let counts: Vec<f64> = s.groups.iter().map(|g| g.stats[0].unwrap()).collect();
        assert_eq!(counts, vec![2.0, 2.0]);
        let ops: Vec<(&str, Option<&str>)> = rep
            .lineage
            .iter()
            .map(|e| (e.op.as_str(), e.node.as_deref()))
            .collect();
        assert_eq!(ops, vec![("classify", Some("c")), ("aggregate", Some("a"))]);
    }

    const BRANCH: &str = r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},
        {"id":"noise_a","op":"noise","params":{"family":"gaussian","sigma":1,"columns":["x"]}},
        {"id":"noise_b","op":"noise","params":{"family":"gaussian","sigma":1,"columns":["x"]}}],
        "edges":[["s","noise_a",0],["s","noise_b",0]],"outputs":["noise_a","noise_b"]}"#;

    #[test]
    fn branch_draws_differ_and_repeat() {
        let g = parse_pipeline(BRANCH).unwrap();
        let t = table(&[0.0; 5]);
        let x = |out: &BTreeMap<String, Output>, id: &str| {
            out[id]
                .as_rep()
                .unwrap()
                .as_table()
                .unwrap()
                .column("x")
                .unwrap()
                .present_f64()
        };
        let a = execute(&g, &inputs(t.clone()), Seed(0)).unwrap();
        let b = execute(&g, &inputs(t), Seed(0)).unwrap();
        assert_ne!(x(&a, "noise_a"), x(&a, "noise_b"));
        assert_eq!(a, b);
        // first draw of noise_a is the first Box-Muller variate of its sub-seed
        let mut rng = Seed(0).for_node("noise_a").rng();
        assert_eq!(x(&a, "noise_a")[0], rng.next_gaussian());
    }

    #[test]
    fn reordered_declaration_same_result() {
        let g = parse_pipeline(BRANCH).unwrap();
        let mut h = g.clone();
        h.nodes.reverse();
        h.edges.reverse();
        let t = table(&[1.0, 2.0, 3.0]);
        assert_eq!(
            execute(&g, &inputs(t.clone()), Seed(9)).unwrap(),
            execute(&h, &inputs(t), Seed(9)).unwrap()
        );
    }

    #[test]
    fn runtime_error_names_node() {
        let g = parse_pipeline(
            r#"{"nodes":[{"id":"s","op":"source","params":{"table":"t"}},
            {"id":"p","op":"permute","params":{"column":"nope"}}],"edges":[["s","p",0]],"outputs":["p"]}"#,
        )
        .unwrap();
        let e = execute(&g, &inputs(table(&[1.0])), Seed(0)).unwrap_err();
        assert!(
            matches!(e, Error::Node { ref node, .. } if node == "p"),
            "{e:?}"
        );
        let e = execute(&g, &BTreeMap::new(), Seed(0)).unwrap_err();
        assert!(e.to_string().contains("unbound"), "{e}");
    }

    #[test]
    fn concat_identity_and_order() {
        let t = table(&[1.0, 2.0]);
        let empty = table(&[]);
        let a = Representation::sample(t.clone());
        let out = combine(
            &[a.clone(), Representation::sample(empty)],
            &CombineSpec::ConcatRows,
        )
        .unwrap();
        assert_eq!(out.as_rep().unwrap().as_table().unwrap(), &t);
        let out = combine(
            &[a.clone(), Representation::sample(table(&[5.0]))],
            &CombineSpec::ConcatRows,
        )
        .unwrap();
        assert_eq!(
            out.as_rep()
                .unwrap()
                .as_table()
                .unwrap()
                .column("x")
                .unwrap()
                .present_f64(),
            vec![1.0, 2.0, 5.0]
        );
        let other = Table::new(vec![Column::numeric("y", &[1.0])], "u").unwrap();
        assert!(matches!(
            combine(
                &[a, Representation::sample(other)],
                &CombineSpec::ConcatRows
            ),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn join_inner() {
        let l = Table::new(
            vec![
                Column::numeric("k", &[1.0, 2.0, 2.0]),
                Column::numeric("a", &[10.0, 20.0, 21.0]),
            ],
            "l",
        )
        .unwrap();
        let r = Table::new(
            vec![
                Column::numeric("k", &[2.0, 3.0]),
                Column::nominal("b", &["two", "three"]),
            ],
            "r",
        )
        .unwrap();
        let spec = CombineSpec::JoinOnKeys {
            keys: vec!["k".into()],
        };
        let out = combine(
            &[Representation::sample(l.clone()), Representation::sample(r)],
            &spec,
        )
        .unwrap();
        let t = out.as_rep().unwrap().as_table().unwrap().clone();
        assert_eq!(t.column("a").unwrap().present_f64(), vec![20.0, 21.0]);
        assert_eq!(t.column_names(), vec!["k", "a", "b"]);
        let disjoint = Table::new(
            vec![Column::numeric("k", &[9.0]), Column::numeric("c", &[0.0])],
            "d",
        )
        .unwrap();
        let out = combine(
            &[
                Representation::sample(l.clone()),
                Representation::sample(disjoint),
            ],
            &spec,
        )
        .unwrap();
        assert_eq!(out.as_rep().unwrap().as_table().unwrap().n_rows(), 0);
        let nokey = Table::new(vec![Column::numeric("z", &[1.0])], "n").unwrap();
        assert!(combine(
            &[Representation::sample(l), Representation::sample(nokey)],
            &spec
        )
        .is_err());
    }

    #[test]
    fn layer_keeps_members() {
        let mut a = Representation::sample(table(&[1.0]));
        a.lineage.push(LineageEntry::new("noise"));
        let m = tactics::smooth_kde(
            &Representation::sample(table(&[0.0, 1.0])),
            &["x".into()],
            &[tactics::Bandwidth::Fixed(1.0)],
            &[tactics::GridSpec { n: 8, range: None }],
        )
        .unwrap();
        match combine(&[a.clone(), m.clone()], &CombineSpec::Layer).unwrap() {
            Output::Bundle(b) => assert_eq!(b, vec![a, m]),
            o => panic!("{o:?}"),
        }
    }
}
