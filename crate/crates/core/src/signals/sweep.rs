use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::Table;
use crate::pipeline::{check_graph, execute_all, Node, Op, PipelineGraph};
use crate::rng::Seed;

use super::distortion::{distortion_of_output, Distortion};
use super::spec::{Goal, Objective, SignalDecl, SignalKind, SweepSpec};

/// Splits `node.path.to.param` into the node id and the parameter path,
/// checking the parameter exists and is numeric.
pub fn resolve_target(g: &PipelineGraph, target: &str) -> Result<(String, Vec<String>)> {
    let node = g
        .nodes
        .iter()
        .filter(|n| target.starts_with(&format!("{}.", n.id)))
        .max_by_key(|n| n.id.len())
        .ok_or_else(|| Error::param(format!("parameter path `{target}` names no node")))?;
    let path: Vec<String> = target[node.id.len() + 1..]
        .split('.')
        .map(String::from)
        .collect();
    let params = params_of(node);
    match lookup(&params, &path) {
        Some(Value::Number(_)) => Ok((node.id.clone(), path)),
        Some(_) => Err(Error::param(format!("parameter `{target}` is not numeric"))),
        None => Err(Error::param(format!("parameter path `{target}` not found"))),
    }
}

fn params_of(node: &Node) -> Value {
    let v = serde_json::to_value(&node.op).expect("op serializes");
    v.get("params")
        .cloned()
        .unwrap_or(Value::Object(Default::default()))
}

fn lookup<'a>(v: &'a Value, path: &[String]) -> Option<&'a Value> {
    path.iter().try_fold(v, |cur, seg| match cur {
        Value::Object(m) => m.get(seg),
        Value::Array(a) => a.get(seg.parse::<usize>().ok()?),
        _ => None,
    })
}

fn lookup_mut<'a>(v: &'a mut Value, path: &[String]) -> Option<&'a mut Value> {
    path.iter().try_fold(v, |cur, seg| match cur {
        Value::Object(m) => m.get_mut(seg),
        Value::Array(a) => a.get_mut(seg.parse::<usize>().ok()?),
        _ => None,
    })
}

fn number(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        Value::from(x)
    }
}

/// Copy of `g` with one numeric parameter replaced.
pub fn set_param(g: &PipelineGraph, target: &str, value: f64) -> Result<PipelineGraph> {
    let (id, path) = resolve_target(g, target)?;
    let mut out = g.clone();
    let node = out.nodes.iter_mut().find(|n| n.id == id).expect("resolved");
    let mut params = params_of(node);
    *lookup_mut(&mut params, &path).expect("resolved") = number(value);
    let tagged = serde_json::json!({ "op": node.op.name(), "params": params });
    node.op = serde_json::from_value::<Op>(tagged)
        .map_err(|e| Error::param(format!("{target} = {value}: {e}")))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// One value per varied axis.
    pub values: Vec<f64>,
    /// One per objective, in objective order.
    pub distortions: Vec<Distortion>,
    pub pareto: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Targets of each varied axis, joined by `|`.
    pub parameters: Vec<String>,
    pub objectives: Vec<Objective>,
    pub points: Vec<SweepPoint>,
}

/// Objective cost, smaller is better.
fn cost(d: &Distortion, goal: Goal) -> f64 {
    match (goal, d.hidden, d.abs_error) {
        (Goal::Preserve, true, _) => f64::INFINITY,
        (Goal::Preserve, false, e) => e.unwrap_or(f64::INFINITY),
        (Goal::Hide, true, _) => f64::NEG_INFINITY,
        (Goal::Hide, false, e) => -e.unwrap_or(0.0),
    }
}

/// Flags points no other point dominates (no worse on every objective and
/// strictly better on one).
pub fn pareto_flags(costs: &[Vec<f64>]) -> Vec<bool> {
    costs
        .iter()
        .map(|p| {
            !costs.iter().any(|q| {
                q.iter().zip(p).all(|(a, b)| a <= b) && q.iter().zip(p).any(|(a, b)| a < b)
            })
        })
        .collect()
}

pub(crate) fn original_for<'a>(
    decl: &SignalDecl,
    g: &PipelineGraph,
    inputs: &'a BTreeMap<String, Table>,
) -> Result<&'a Table> {
    let name = match &decl.source {
        Some(s) => s.clone(),
        None => {
            let mut sources: Vec<(&str, &str)> =
                g.sources().map(|(id, p)| (id, p.table.as_str())).collect();
            sources.sort();
            sources
                .first()
                .map(|(_, t)| t.to_string())
                .ok_or_else(|| Error::Pipeline("graph has no source".into()))?
        }
    };
    inputs.get(&name).ok_or(Error::Unbound(name))
}

/// Evaluates every declared signal on its output node.
pub fn measure(
    g: &PipelineGraph,
    inputs: &BTreeMap<String, Table>,
    seed: Seed,
) -> Result<Vec<Distortion>> {
    let outs = execute_all(g, inputs, seed)?;
    g.signals
        .iter()
        .map(|s| {
            distortion_of_output(
                &s.id,
                &s.spec,
                original_for(s, g, inputs)?,
                &outs[&s.output],
            )
        })
        .collect()
}

/// Exhaustive grid over the varied parameters, first axis slowest. Points are
/// evaluated in parallel and returned in grid order.
pub fn sweep(
    g: &PipelineGraph,
    spec: &SweepSpec,
    inputs: &BTreeMap<String, Table>,
    seed: Seed,
) -> Result<SweepResult> {
    spec.check(g)?;
    for o in &spec.objectives {
        let decl = g
            .signals
            .iter()
            .find(|s| s.id == o.signal)
            .expect("checked");
        if matches!(decl.spec.kind, SignalKind::ClusterSummary { .. }) {
            return Err(Error::param(format!(
                "objective `{}` is not scalar",
                o.signal
            )));
        }
    }
    let axes: Vec<Vec<f64>> = spec
        .vary
        .iter()
        .map(|a| a.points())
        .collect::<Result<_>>()?;
    let total: usize = axes.iter().map(Vec::len).product();
    let grid: Vec<Vec<f64>> = (0..total)
        .map(|mut flat| {
            let mut v = vec![0.0; axes.len()];
            for a in (0..axes.len()).rev() {
                v[a] = axes[a][flat % axes[a].len()];
                flat /= axes[a].len();
            }
            v
        })
        .collect();

    let evaluated: Vec<Result<Vec<Distortion>>> = grid
        .par_iter()
        .map(|values| {
            let mut gp = g.clone();
            for (axis, &v) in spec.vary.iter().zip(values) {
                for t in &axis.targets {
                    gp = set_param(&gp, t, v)?;
                }
            }
            check_graph(&gp)?;
            let outs = execute_all(&gp, inputs, seed)?;
            spec.objectives
                .iter()
                .map(|o| {
                    let decl = gp
                        .signals
                        .iter()
                        .find(|s| s.id == o.signal)
                        .expect("checked");
                    distortion_of_output(
                        &decl.id,
                        &decl.spec,
                        original_for(decl, &gp, inputs)?,
                        &outs[&decl.output],
                    )
                })
                .collect()
        })
        .collect();

    let mut points = Vec::with_capacity(total);
    for (values, r) in grid.into_iter().zip(evaluated) {
        let distortions = r.map_err(|e| Error::Pipeline(format!("sweep point {values:?}: {e}")))?;
        points.push(SweepPoint {
            values,
            distortions,
            pareto: false,
        });
    }
    let costs: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            p.distortions
                .iter()
                .zip(&spec.objectives)
                .map(|(d, o)| cost(d, o.goal))
                .collect()
        })
        .collect();
    for (p, flag) in points.iter_mut().zip(pareto_flags(&costs)) {
        p.pareto = flag;
    }
    Ok(SweepResult {
        parameters: spec.vary.iter().map(|a| a.targets.join("|")).collect(),
        objectives: spec.objectives.clone(),
        points,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SweepResult {
    /// Flat table: one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = self.parameters.clone();
        for o in &self.objectives {
            for f in ["original", "disclosed", "abs_error", "hidden"] {
                header.push(format!("{}_{f}", o.signal));
            }
        }
        header.push("pareto".into());
        let quoted: Vec<String> = header
            .iter()
            .map(|h| {
                if h.contains([',', '"', '|']) {
                    format!("\"{}\"", h.replace('"', "\"\""))
                } else {
                    h.clone()
                }
            })
            .collect();
        writeln!(out, "{}", quoted.join(",")).unwrap();
        for p in &self.points {
            let mut row: Vec<String> = p.values.iter().map(|v| v.to_string()).collect();
            for d in &p.distortions {
                row.push(cell(d.original.value()));
                row.push(cell(d.disclosed.value()));
                row.push(cell(d.abs_error));
                row.push(d.hidden.to_string());
            }
            row.push(p.pareto.to_string());
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Column;
    use crate::pipeline::parse_pipeline;

    #[test]
    fn dominance() {
        assert_eq!(pareto_flags(&[vec![1.0, 1.0]]), vec![true]);
        assert_eq!(
            pareto_flags(&[vec![1.0, 1.0], vec![2.0, 1.0]]),
            vec![true, false]
        );
        assert_eq!(
            pareto_flags(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            vec![true, true]
        );
        assert_eq!(pareto_flags(&[vec![1.0], vec![1.0]]), vec![true, true]);
    }

    const DOC: &str = r#"{
      "nodes": [
        {"id": "s", "op": "source", "params": {"table": "t"}},
        {"id": "c", "op": "classify", "params": {"column": "x", "bins": {"equal_width": 2}}},
        {"id": "a", "op": "aggregate", "params": {"group_by": ["x__bin"], "stats": [{"stat": "count"}]}}
      ],
      "edges": [["s", "c", 0], ["c", "a", 0]],
      "outputs": ["a"],
      "signals": [
        {"id": "tail", "output": "a", "kind": "exceedance", "threshold": 2.5, "columns": ["x"]},
        {"id": "reid", "output": "a", "kind": "reidentification_risk", "k": 2}
      ],
      "sweep": {
        "vary": [{"targets": ["c.bins.equal_width"], "values": [2, 4, 8]}],
        "objectives": [{"signal": "tail", "goal": "preserve"}, {"signal": "reid", "goal": "hide"}]
      }
    }"#;

    fn inputs() -> BTreeMap<String, Table> {
        let x: Vec<f64> = (0..12).map(|i| (i * i) as f64 / 10.0).collect();
        BTreeMap::from([(
            "t".into(),
            Table::new(vec![Column::numeric("x", &x)], "t").unwrap(),
        )])
    }

    #[test]
    fn sweep_runs_in_grid_order() {
        let g = parse_pipeline(DOC).unwrap();
        let r = sweep(&g, g.sweep.as_ref().unwrap(), &inputs(), Seed(0)).unwrap();
        let vals: Vec<f64> = r.points.iter().map(|p| p.values[0]).collect();
        assert_eq!(vals, vec![2.0, 4.0, 8.0]);
        assert!(r.points.iter().any(|p| p.pareto));
        let again = sweep(&g, g.sweep.as_ref().unwrap(), &inputs(), Seed(0)).unwrap();
        assert_eq!(r, again);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("c.bins.equal_width,tail_original"));
    }

    #[test]
    fn single_point_is_pareto() {
        let mut g = parse_pipeline(DOC).unwrap();
        g.sweep.as_mut().unwrap().vary[0].values = vec![3.0];
        let r = sweep(&g, g.sweep.as_ref().unwrap(), &inputs(), Seed(0)).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!(r.points[0].pareto);
    }

    #[test]
    fn bad_path() {
        let g = parse_pipeline(DOC).unwrap();
        assert!(resolve_target(&g, "c.bins.nope").is_err());
        assert!(resolve_target(&g, "zz.k").is_err());
        assert!(resolve_target(&g, "c.column").is_err());
        let h = set_param(&g, "c.bins.equal_width", 5.0).unwrap();
        assert_eq!(
            h.node("c").unwrap().op,
            Op::Classify(crate::pipeline::ClassifyParams {
                column: "x".into(),
                bins: crate::tactics::BinSpec::EqualWidth(5)
            })
        );
    }
}
