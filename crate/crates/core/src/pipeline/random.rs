//! Seeded generators of well-typed pipelines and of kind-mismatched
//! mutations, for property and acceptance testing.

use serde_json::{json, Value};

use crate::model::{Column, Table};
use crate::rng::{Seed, SplitMix64};

use super::ir::PipelineGraph;
use super::parse::parse_pipeline;

/// Table the generated graphs read: normal `x`, `y`, `z` and uniform `u`.
pub fn random_table(seed: Seed, rows: usize) -> Table {
    let mut rng = seed.rng();
    let mut col = |f: &mut dyn FnMut(&mut SplitMix64) -> f64| -> Vec<f64> {
        (0..rows).map(|_| f(&mut rng)).collect()
    };
    let x = col(&mut |r| r.next_gaussian());
    let y = col(&mut |r| 2.0 + 0.5 * r.next_gaussian());
    let z = col(&mut |r| 10.0 * r.next_f64());
    let u = col(&mut |r| r.next_f64());
    Table::new(
        vec![
            Column::numeric("x", &x),
            Column::numeric("y", &y),
            Column::numeric("z", &z),
            Column::numeric("u", &u),
        ],
        "t",
    )
    .expect("equal lengths")
}

#[derive(Clone)]
enum Shape {
    Sample { cols: Vec<String>, bins: Vec<String>, rows: usize },
    Summary,
    Density { axes: Vec<String> },
    OtherModel,
    Terminal,
}

struct Builder {
    rng: SplitMix64,
    nodes: Vec<Value>,
    edges: Vec<Value>,
    shapes: Vec<(String, Shape)>,
}

impl Builder {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.next_index(xs.len())]
    }

    fn subset(&mut self, xs: &[String], min: usize) -> Vec<String> {
        let mut out: Vec<String> = xs.iter().filter(|_| self.rng.next_f64() < 0.5).cloned().collect();
        let mut i = 0;
        while out.len() < min.min(xs.len()) {
            if !out.contains(&xs[i]) {
                out.push(xs[i].clone());
            }
            i += 1;
        }
        out.sort_by_key(|c| xs.iter().position(|x| x == c));
        out
    }

    fn add(&mut self, id: String, op: &str, params: Value, inputs: &[&str], shape: Shape) {
        self.nodes.push(json!({"id": id, "op": op, "params": params}));
        for (slot, from) in inputs.iter().enumerate() {
            self.edges.push(json!([from, id, slot]));
        }
        self.shapes.push((id, shape));
    }

    fn open_node(&mut self) -> String {
        let open: Vec<&String> = self
            .shapes
            .iter()
            .filter(|(_, s)| !matches!(s, Shape::Terminal))
            .map(|(id, _)| id)
            .collect();
        open[self.rng.next_index(open.len())].clone()
    }

    /// Appends one random well-typed child of node `pi`.
    fn grow(&mut self, i: usize, pi: usize) {
        let (parent, shape) = self.shapes[pi].clone();
        let id = format!("n{i}");
        match shape {
            Shape::Sample { cols, bins, rows } => self.grow_sample(id, &parent, cols, bins, rows),
            Shape::Density { axes } => {
                if self.rng.next_f64() < 0.6 {
                    let nested = self.rng.next_f64() < 0.3;
                    let levels = if nested { json!([0.5, 0.85]) } else { json!([0.85]) };
                    let shape = if nested { Shape::Terminal } else { Shape::Summary };
                    self.add(id, "band", json!({"levels": {"mass": levels}}), &[&parent], shape);
                } else {
                    let keep = self.subset(&axes, 1);
                    let shape = Shape::Density { axes: keep.clone() };
                    self.add(id, "encode_select", json!({"columns": keep}), &[&parent], shape);
                }
            }
            Shape::Summary | Shape::OtherModel | Shape::Terminal => {
                let other = self.open_node();
                self.add(id, "combine", json!({"mode": "layer"}), &[&parent, &other], Shape::Terminal);
            }
        }
    }

    fn grow_sample(&mut self, id: String, parent: &str, cols: Vec<String>, bins: Vec<String>, rows: usize) {
        let sample = |cols: Vec<String>, bins: Vec<String>, rows: usize| Shape::Sample { cols, bins, rows };
        let ops = [
            "full_disclosure",
            "classify",
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
        let op = *self.pick(&ops);
        let c = self.pick(&cols).clone();
        match op {
            "full_disclosure" => self.add(id, op, json!({}), &[parent], sample(cols, bins, rows)),
            "classify" if !bins.contains(&format!("{c}__bin")) => {
                let k = 1 + self.rng.next_index(8);
                let spec = if self.rng.next_f64() < 0.5 {
                    json!({"equal_width": k})
                } else {
                    json!({"equal_frequency": k})
                };
                let mut bins = bins;
                bins.push(format!("{c}__bin"));
                self.add(id, op, json!({"column": c, "bins": spec}), &[parent], sample(cols, bins, rows));
            }
            "aggregate" => {
                let group_by = self.subset(&bins, 0);
                let stat = *self.pick(&["mean", "sum", "median", "min", "max"]);
                let stats = json!([{"stat": "count"}, {"stat": stat, "column": c}]);
                self.add(id, op, json!({"group_by": group_by, "stats": stats}), &[parent], Shape::Summary);
            }
            "band" => {
                let levels = if self.rng.next_f64() < 0.5 {
                    json!({"quantiles": [0.0, 0.25, 0.5, 0.75, 1.0]})
                } else {
                    json!({"cuts": [-100.0, 0.0, 1.0, 100.0]})
                };
                self.add(id, op, json!({"source": c, "levels": levels}), &[parent], Shape::Summary);
            }
            "derive" => {
                let d = self.pick(&cols).clone();
                let out = format!("d_{id}");
                let expr = format!("{c} + 0.5 * {d}");
                let mut cols = cols;
                cols.push(out.clone());
                self.add(id, op, json!({"expr": expr, "out": out}), &[parent], sample(cols, bins, rows));
            }
            "encode_select" => {
                let keep = self.subset(&cols, 1);
                let keep_bins = self.subset(&bins, 0);
                let mut all = keep.clone();
                all.extend(keep_bins.iter().cloned());
                self.add(id, op, json!({"columns": all}), &[parent], sample(keep, keep_bins, rows));
            }
            "subsample" if rows > 8 => {
                let n = 5 + self.rng.next_index(rows - 5);
                let replacement = self.rng.next_f64() < 0.3;
                self.add(id, op, json!({"n": n, "replacement": replacement}), &[parent], sample(cols, bins, n));
            }
            "subsample" => {
                self.add(id, "full_disclosure", json!({}), &[parent], sample(cols, bins, rows))
            }
            "noise" => {
                let which = self.subset(&cols, 1);
                let p = if self.rng.next_f64() < 0.5 {
                    json!({"family": "gaussian", "sigma": 0.3, "columns": which})
                } else {
                    json!({"family": "laplace", "scale": 0.3, "columns": which})
                };
                self.add(id, op, p, &[parent], sample(cols, bins, rows));
            }
            "permute" => self.add(id, op, json!({"column": c}), &[parent], sample(cols, bins, rows)),
            "smooth_kde" => {
                let axes = self.subset(&cols, 1);
                let axes: Vec<String> = axes.into_iter().take(2).collect();
                let bw: Vec<Value> = axes.iter().map(|_| json!("auto")).collect();
                let grid: Vec<Value> = axes.iter().map(|_| json!({"n": 12})).collect();
                let p = json!({"columns": axes, "bandwidth": bw, "grid": grid});
                self.add(id, op, p, &[parent], Shape::Density { axes });
            }
            "magnitude_adjust" => {
                let u = self.pick(&cols).clone();
                let p = json!({"value": c, "pivot": 0.0, "u_max": 2.0, "uncertainty": u});
                self.add(id, op, p, &[parent], sample(cols, bins, rows));
            }
            "predict_ols" if cols.len() >= 2 && !cols.contains(&format!("{c}__fitted")) => {
                let x = cols.iter().find(|x| **x != c).expect("two columns").clone();
                let emit_sample = self.rng.next_f64() < 0.5;
                let emit = if emit_sample { "sample" } else { "model" };
                let p = json!({"y": c, "xs": [x], "emit": emit});
                let shape = if emit_sample {
                    let mut cols = cols;
                    cols.push(format!("{c}__fitted"));
                    sample(cols, bins, rows)
                } else {
                    Shape::OtherModel
                };
                self.add(id, op, p, &[parent], shape);
            }
            "project_pca" if cols.len() >= 2 && !cols.iter().any(|c| c == "pc1") => {
                let proj = self.subset(&cols, 2);
                let emit_sample = self.rng.next_f64() < 0.5;
                let emit = if emit_sample { "sample" } else { "model" };
                let p = json!({"columns": proj, "k": 1, "emit": emit});
                let shape = if emit_sample {
                    let mut rest: Vec<String> = cols.iter().filter(|c| !proj.contains(c)).cloned().collect();
                    rest.push("pc1".into());
                    sample(rest, bins, rows)
                } else {
                    Shape::OtherModel
                };
                self.add(id, op, p, &[parent], shape);
            }
            "combine" => {
                if self.rng.next_f64() < 0.5 {
                    let p = json!({"mode": "concat_rows"});
                    self.add(id, "combine", p, &[parent, parent], sample(cols, bins, 2 * rows));
                } else {
                    let other = self.open_node();
                    let p = json!({"mode": "layer"});
                    self.add(id, "combine", p, &[parent, &other], Shape::Terminal);
                }
            }
            _ => self.add(id, "permute", json!({"column": c}), &[parent], sample(cols, bins, rows)),
        }
    }

    fn finish(self, extra_outputs: usize) -> PipelineGraph {
        let mut rng = self.rng;
        let has_child = |id: &str| self.edges.iter().any(|e| e[0] == id);
        let mut outputs: Vec<String> = self
            .shapes
            .iter()
            .map(|(id, _)| id.clone())
            .filter(|id| !has_child(id))
            .collect();
        for _ in 0..extra_outputs {
            let (id, _) = &self.shapes[rng.next_index(self.shapes.len())];
            if !outputs.contains(id) {
                outputs.push(id.clone());
            }
        }
        let doc = json!({"nodes": self.nodes, "edges": self.edges, "outputs": outputs});
        parse_pipeline(&doc.to_string()).expect("generated graph parses")
    }
}

fn builder(seed: Seed, rows: usize) -> Builder {
    let mut b = Builder {
        rng: seed.for_node("graph").rng(),
        nodes: Vec::new(),
        edges: Vec::new(),
        shapes: Vec::new(),
    };
    let cols: Vec<String> = ["x", "y", "z", "u"].iter().map(|s| s.to_string()).collect();
    let decl: Vec<Value> = cols.iter().map(|c| json!({"name": c, "kind": "continuous"})).collect();
    b.add(
        "src".into(),
        "source",
        json!({"table": "t", "columns": decl, "rows": rows}),
        &[],
        Shape::Sample { cols, bins: Vec::new(), rows },
    );
    b
}

/// A random well-typed graph over [`random_table`] with `rows` rows and up to
/// `max_ops` tactic nodes.
pub fn random_pipeline(seed: Seed, rows: usize, max_ops: usize) -> PipelineGraph {
    let mut b = builder(seed, rows);
    let n = 1 + b.rng.next_index(max_ops.max(1));
    for i in 0..n {
        let open: Vec<usize> = (0..b.shapes.len())
            .filter(|&k| !matches!(b.shapes[k].1, Shape::Terminal))
            .collect();
        if open.is_empty() {
            break;
        }
        let pi = open[b.rng.next_index(open.len())];
        b.grow(i, pi);
    }
    let extra = b.rng.next_index(2);
    b.finish(extra)
}

/// `g` with one extra node whose input kind its op cannot accept.
pub fn kind_mismatch(g: &PipelineGraph, seed: Seed) -> PipelineGraph {
    let (types, _) = super::validate::infer_types(g);
    let mut rng = seed.for_node("mutation").rng();
    let mut doc: Value = serde_json::from_str(&g.to_json()).expect("graph json");
    let non_sample: Vec<&String> = types
        .iter()
        .filter(|(_, t)| t.kind != super::validate::StaticKind::Sample)
        .map(|(id, _)| id)
        .collect();
    let nodes = doc["nodes"].as_array_mut().expect("nodes");
    let (parent, op, params) = match non_sample.is_empty() {
        // a mass band needs a density grid
        true => {
            let samples: Vec<&String> = types.keys().collect();
            let p = samples[rng.next_index(samples.len())].clone();
            (p, "band", json!({"levels": {"mass": [0.85]}}))
        }
        false => {
            let p = non_sample[rng.next_index(non_sample.len())].clone();
            let choices = [
                ("subsample", json!({"n": 3, "replacement": true})),
                ("aggregate", json!({"stats": [{"stat": "count"}]})),
                ("permute", json!({"column": "x"})),
                ("smooth_kde", json!({"columns": ["x"], "bandwidth": [1.0], "grid": [{"n": 8}]})),
                ("predict_ols", json!({"y": "y", "xs": ["x"]})),
                ("classify", json!({"column": "x", "bins": {"equal_width": 3}})),
            ];
            let (op, params) = choices[rng.next_index(choices.len())].clone();
            (p, op, params)
        }
    };
    nodes.push(json!({"id": "mutant", "op": op, "params": params}));
    doc["edges"].as_array_mut().expect("edges").push(json!([parent, "mutant", 0]));
    doc["outputs"].as_array_mut().expect("outputs").push(json!("mutant"));
    parse_pipeline(&doc.to_string()).expect("mutated graph parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{execute, validate_pipeline};
    use std::collections::BTreeMap;

    #[test]
    fn generated_graphs_run() {
        let t = random_table(Seed(1), 60);
        let inputs = BTreeMap::from([("t".to_string(), t)]);
        for s in 0..40 {
            let g = random_pipeline(Seed(s), 60, 6);
            assert!(validate_pipeline(&g).is_empty(), "{}", g.to_json());
            if let Err(e) = execute(&g, &inputs, Seed(s)) {
                panic!("seed {s}: {e}\n{}", g.to_json());
            }
        }
    }

    #[test]
    fn mutations_are_rejected() {
        for s in 0..40 {
            let g = kind_mismatch(&random_pipeline(Seed(s), 60, 6), Seed(s));
            assert!(!validate_pipeline(&g).is_empty(), "{}", g.to_json());
        }
    }
}
