//! The three reference scenarios: seeded datasets and the pipeline variants
//! compared on each.
//!
//! | scenario | rows | data |
//! |---|---|---|
//! | fred | 150 | 2-D Gaussian mixture: means (2, 2), (6, 3), (4, 7); sd 0.6; weights 0.4, 0.35, 0.25 |
//! | anne | 260 | weekly tons: 62% `600·exp(0.18·z)`, 38% `1150·exp(0.12·z)`, redrawn outside [150, 2050]; KDE at 0.5, 1 and 2 times Silverman's bandwidth |
//! | claudia | 60 | counties: uncertainty `u ~ U[0, 1)`, value `50 + 25·z` clamped to [0, 100] |
//!
//! The constants are illustrative and fixed in code.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use disclosure_core::analysis::DisclosureReport;
use disclosure_core::model::{Column, Table};
use disclosure_core::pipeline::{execute, parse_pipeline, Output, PipelineGraph};
use disclosure_core::signals::Distortion;
use disclosure_core::Seed;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::build_report;
use crate::io::{output_files, table_csv};
use crate::render::{render_layers, ChartKind, Layer, Style};

pub const SCENARIOS: [&str; 3] = ["fred", "anne", "claudia"];

pub const FRED_ROWS: usize = 150;
pub const FRED_MEANS: [[f64; 2]; 3] = [[2.0, 2.0], [6.0, 3.0], [4.0, 7.0]];
pub const FRED_WEIGHTS: [f64; 3] = [0.4, 0.35, 0.25];
pub const FRED_SD: f64 = 0.6;
pub const FRED_NOISE_SCALES: [f64; 2] = [0.3, 1.5];

pub const ANNE_ROWS: usize = 260;
pub const ANNE_THRESHOLD: f64 = 1000.0;
/// KDE bandwidths as multiples of Silverman's rule on the tons column.
pub const ANNE_BANDWIDTH_FACTORS: [f64; 3] = [0.5, 1.0, 2.0];

pub const CLAUDIA_ROWS: usize = 60;
pub const CLAUDIA_THRESHOLD: f64 = 60.0;

pub struct Variant {
    pub name: String,
    pub graph: PipelineGraph,
    pub chart: ChartKind,
    pub columns: Vec<String>,
}

pub struct Scenario {
    pub name: String,
    pub seed: Seed,
    pub data: Table,
    pub variants: Vec<Variant>,
}

pub struct VariantRun {
    pub name: String,
    pub graph: PipelineGraph,
    pub outputs: BTreeMap<String, Output>,
    pub report: DisclosureReport,
    pub svg: String,
}

pub struct ScenarioRun {
    pub name: String,
    pub data: Table,
    pub variants: Vec<VariantRun>,
}

impl ScenarioRun {
    pub fn variant(&self, name: &str) -> Option<&VariantRun> {
        self.variants.iter().find(|v| v.name == name)
    }
}

impl VariantRun {
    pub fn distortion(&self, signal: &str) -> Option<&Distortion> {
        self.report.distortions.iter().find(|d| d.signal == signal)
    }
}

fn fred_data(seed: Seed) -> Table {
    let mut rng = seed.for_node("fred").rng();
    let (mut x, mut y) = (Vec::with_capacity(FRED_ROWS), Vec::with_capacity(FRED_ROWS));
    for _ in 0..FRED_ROWS {
        let u = rng.next_f64();
        let mut c = 0;
        let mut acc = FRED_WEIGHTS[0];
        while u >= acc && c + 1 < FRED_WEIGHTS.len() {
            c += 1;
            acc += FRED_WEIGHTS[c];
        }
        x.push(FRED_MEANS[c][0] + FRED_SD * rng.next_gaussian());
        y.push(FRED_MEANS[c][1] + FRED_SD * rng.next_gaussian());
    }
    Table::new(vec![Column::numeric("x", &x), Column::numeric("y", &y)], "fred").expect("equal lengths")
}

fn anne_data(seed: Seed) -> Table {
    let mut rng = seed.for_node("anne").rng();
    let week: Vec<f64> = (1..=ANNE_ROWS).map(|w| w as f64).collect();
    let mut tons = Vec::with_capacity(ANNE_ROWS);
    while tons.len() < ANNE_ROWS {
        let v = if rng.next_f64() < 0.62 {
            600.0 * (0.18 * rng.next_gaussian()).exp()
        } else {
            1150.0 * (0.12 * rng.next_gaussian()).exp()
        };
        if (150.0..=2050.0).contains(&v) {
            tons.push(v);
        }
    }
    Table::new(vec![Column::numeric("week", &week), Column::numeric("tons", &tons)], "anne").expect("equal lengths")
}

fn claudia_data(seed: Seed) -> Table {
    let mut rng = seed.for_node("claudia").rng();
    let names: Vec<String> = (1..=CLAUDIA_ROWS).map(|i| format!("county{i:02}")).collect();
    let (mut value, mut unc) = (Vec::new(), Vec::new());
    for _ in 0..CLAUDIA_ROWS {
        unc.push(rng.next_f64());
        value.push((50.0 + 25.0 * rng.next_gaussian()).clamp(0.0, 100.0));
    }
    Table::new(
        vec![
            Column::nominal("county", &names),
            Column::numeric("value", &value),
            Column::numeric("uncertainty", &unc),
        ],
        "claudia",
    )
    .expect("equal lengths")
}

fn source(table: &str, data: &Table) -> Value {
    let cols: Vec<Value> = data
        .columns
        .iter()
        .map(|c| json!({"name": c.name, "kind": c.kind}))
        .collect();
    json!({"id": "src", "op": "source", "params": {"table": table, "columns": cols, "rows": data.n_rows()}})
}

/// A linear pipeline `src -> steps...`; the last step is the output.
fn chain(table: &str, data: &Table, steps: &[(&str, &str, Value)], signals: Value) -> PipelineGraph {
    let mut nodes = vec![source(table, data)];
    let mut edges = Vec::new();
    let mut prev = "src";
    for (id, op, params) in steps {
        nodes.push(json!({"id": id, "op": op, "params": params}));
        edges.push(json!([prev, id, 0]));
        prev = id;
    }
    let out = prev;
    let signals: Vec<Value> = signals
        .as_array()
        .expect("signal list")
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s["output"] = json!(out);
            s
        })
        .collect();
    let doc = json!({"nodes": nodes, "edges": edges, "outputs": [out], "signals": signals});
    parse_pipeline(&doc.to_string()).expect("scenario pipelines are well formed")
}

fn variant(name: &str, graph: PipelineGraph, chart: ChartKind, columns: &[&str]) -> Variant {
    Variant {
        name: name.into(),
        graph,
        chart,
        columns: columns.iter().map(|c| c.to_string()).collect(),
    }
}

fn fred(seed: Seed) -> Scenario {
    let data = fred_data(seed);
    let signals = json!([
        {"id": "clusters", "kind": "cluster_count", "mass": 0.85, "columns": ["x", "y"]},
        {"id": "reid", "kind": "reidentification_risk", "k": 5, "columns": ["x", "y"]},
    ]);
    let heat = |k: usize| {
        chain(
            "fred",
            &data,
            &[
                ("cx", "classify", json!({"column": "x", "bins": {"equal_width": k}})),
                ("cy", "classify", json!({"column": "y", "bins": {"equal_width": k}})),
                ("counts", "aggregate", json!({"group_by": ["x__bin", "y__bin"], "stats": [{"stat": "count"}]})),
            ],
            signals.clone(),
        )
    };
    let noisy = |scale: f64| {
        chain(
            "fred",
            &data,
            &[("jitter", "noise", json!({"family": "laplace", "scale": scale, "columns": ["x", "y"]}))],
            signals.clone(),
        )
    };
    let mut variants = vec![
        variant(
            "full",
            chain("fred", &data, &[("shown", "full_disclosure", json!({}))], signals.clone()),
            ChartKind::Scatter,
            &["x", "y"],
        ),
        variant(
            "contour",
            chain(
                "fred",
                &data,
                &[
                    (
                        "kde",
                        "smooth_kde",
                        json!({"columns": ["x", "y"], "bandwidth": ["auto", "auto"], "grid": [{"n": 64}, {"n": 64}]}),
                    ),
                    ("band", "band", json!({"levels": {"mass": [0.85]}})),
                ],
                signals.clone(),
            ),
            ChartKind::ContourBand,
            &[],
        ),
        variant("heatmap8", heat(8), ChartKind::Heatmap, &[]),
        variant("heatmap40", heat(40), ChartKind::Heatmap, &[]),
    ];
    for (name, scale) in ["noise_low", "noise_high"].iter().zip(FRED_NOISE_SCALES) {
        variants.push(variant(name, noisy(scale), ChartKind::Scatter, &["x", "y"]));
    }
    Scenario {
        name: "fred".into(),
        seed,
        data,
        variants,
    }
}

fn anne(seed: Seed) -> Scenario {
    let data = anne_data(seed);
    let signals = json!([
        {"id": "exceed", "kind": "exceedance", "threshold": ANNE_THRESHOLD, "columns": ["tons"]},
        {"id": "modes", "kind": "mode_count", "prominence": 0.1, "columns": ["tons"]},
    ]);
    let mut variants = vec![
        variant(
            "full",
            chain("anne", &data, &[("shown", "full_disclosure", json!({}))], signals.clone()),
            ChartKind::Dotplot,
            &["tons"],
        ),
        variant(
            "five_number",
            chain(
                "anne",
                &data,
                &[("quartiles", "band", json!({"source": "tons", "levels": {"quantiles": [0.0, 0.25, 0.5, 0.75, 1.0]}}))],
                signals.clone(),
            ),
            ChartKind::Histogram,
            &[],
        ),
    ];
    let tons = data.column("tons").expect("generated").present_f64();
    let silverman = disclosure_core::tactics::silverman_bandwidth(&tons).expect("tons vary");
    for (name, f) in ["kde_narrow", "kde_medium", "kde_wide"].iter().zip(ANNE_BANDWIDTH_FACTORS) {
        let h = f * silverman;
        let g = chain(
            "anne",
            &data,
            &[(
                "density",
                "smooth_kde",
                json!({"columns": ["tons"], "bandwidth": [h], "grid": [{"n": 512, "range": [0.0, 2200.0]}]}),
            )],
            signals.clone(),
        );
        variants.push(variant(name, g, ChartKind::Histogram, &[]));
    }
    // edges at 100 + 200k put the threshold in the middle of [900, 1100)
    let edges: Vec<f64> = (0..=10).map(|k| 100.0 + 200.0 * k as f64).collect();
    variants.push(variant(
        "histogram",
        chain(
            "anne",
            &data,
            &[
                ("bins", "classify", json!({"column": "tons", "bins": {"explicit_edges": edges}})),
                ("counts", "aggregate", json!({"group_by": ["tons__bin"], "stats": [{"stat": "count"}]})),
            ],
            signals,
        ),
        ChartKind::Histogram,
        &[],
    ));
    Scenario {
        name: "anne".into(),
        seed,
        data,
        variants,
    }
}

fn claudia(seed: Seed) -> Scenario {
    let data = claudia_data(seed);
    let signals = json!([
        {"id": "exceed", "kind": "exceedance", "threshold": CLAUDIA_THRESHOLD, "columns": ["value"]},
        {"id": "median", "kind": "quantile", "p": 0.5, "columns": ["value"]},
    ]);
    let variants = vec![
        variant(
            "full",
            chain("claudia", &data, &[("shown", "full_disclosure", json!({}))], signals.clone()),
            ChartKind::Scatter,
            &["value", "uncertainty"],
        ),
        variant(
            "vsup_classify",
            chain(
                "claudia",
                &data,
                &[
                    ("levels", "classify", json!({"column": "uncertainty", "bins": {"explicit_edges": [0.0, 0.25, 0.5, 0.75, 1.0]}})),
                    ("shades", "classify", json!({"column": "value", "bins": {"explicit_edges": [0.0, 12.5, 25.0, 37.5, 50.0, 62.5, 75.0, 87.5, 100.0]}})),
                    (
                        "palette",
                        "aggregate",
                        json!({"group_by": ["value__bin", "uncertainty__bin"], "stats": [{"stat": "count"}, {"stat": "mean", "column": "value"}]}),
                    ),
                ],
                signals.clone(),
            ),
            ChartKind::Heatmap,
            &[],
        ),
        variant(
            "vsup_adjust",
            chain(
                "claudia",
                &data,
                &[(
                    "adjust",
                    "magnitude_adjust",
                    json!({"value": "value", "pivot": 50.0, "u_max": 1.0, "uncertainty": "uncertainty"}),
                )],
                signals,
            ),
            ChartKind::Scatter,
            &["value", "uncertainty"],
        ),
    ];
    Scenario {
        name: "claudia".into(),
        seed,
        data,
        variants,
    }
}

pub fn scenario(name: &str, seed: Seed) -> Result<Scenario> {
    Ok(match name {
        "fred" => fred(seed),
        "anne" => anne(seed),
        "claudia" => claudia(seed),
        _ => bail!("unknown scenario `{name}` (fred, anne, claudia)"),
    })
}

impl Scenario {
    /// Executes, analyses and renders every variant in memory.
    pub fn run(&self) -> Result<ScenarioRun> {
        let inputs = BTreeMap::from([(self.name.clone(), self.data.clone())]);
        let mut variants = Vec::with_capacity(self.variants.len());
        for v in &self.variants {
            let outputs = execute(&v.graph, &inputs, self.seed).with_context(|| format!("{}/{}", self.name, v.name))?;
            let report = build_report(&v.graph, &inputs, Some(&outputs))?;
            let layers: Vec<Layer> = outputs
                .values()
                .flat_map(|o| o.members())
                .map(|rep| Layer {
                    rep,
                    kind: v.chart,
                    columns: v.columns.clone(),
                })
                .collect();
            let svg = render_layers(&layers, &Style::default()).with_context(|| format!("{}/{}", self.name, v.name))?;
            variants.push(VariantRun {
                name: v.name.clone(),
                graph: v.graph.clone(),
                outputs,
                report,
                svg,
            });
        }
        Ok(ScenarioRun {
            name: self.name.clone(),
            data: self.data.clone(),
            variants,
        })
    }
}

#[derive(Serialize)]
struct VariantSummary<'a> {
    variant: &'a str,
    families: Vec<&'a str>,
    findings: Vec<String>,
    distortions: &'a [Distortion],
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

impl ScenarioRun {
    /// Relative path and contents of every artifact.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut files = vec![("data.csv".to_string(), table_csv(&self.data))];
        let mut rows = Vec::new();
        let mut summary = Vec::new();
        for v in &self.variants {
            let dir = &v.name;
            files.push((format!("{dir}/pipeline.json"), v.graph.to_json() + "\n"));
            files.push((format!("{dir}/report.json"), v.report.to_json() + "\n"));
            files.push((format!("{dir}/report.txt"), v.report.to_text()));
            files.push((format!("{dir}/chart.svg"), v.svg.clone()));
            for (name, body) in output_files(&v.outputs) {
                files.push((format!("{dir}/{name}"), body));
            }
            for d in &v.report.distortions {
                let [lo, hi] = d.bound.map_or([None, None], |[a, b]| [Some(a), Some(b)]);
                rows.push(vec![
                    v.name.clone(),
                    d.signal.clone(),
                    opt(d.original.value()),
                    opt(d.disclosed.value()),
                    opt(d.abs_error),
                    opt(d.rel_error),
                    opt(lo),
                    opt(hi),
                    d.hidden.to_string(),
                ]);
            }
            summary.push(VariantSummary {
                variant: &v.name,
                families: v
                    .report
                    .outputs
                    .iter()
                    .flat_map(|o| o.families.iter().map(|f| f.as_str()))
                    .collect(),
                findings: v
                    .report
                    .findings
                    .iter()
                    .map(|f| format!("{} {} {}", f.rule_id, f.category, f.node_id))
                    .collect(),
                distortions: &v.report.distortions,
            });
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record([
            "variant", "signal", "original", "disclosed", "abs_error", "rel_error", "bound_lo", "bound_hi", "hidden",
        ])
        .expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        files.push((
            "distortions.csv".into(),
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"),
        ));
        files.push((
            "summary.json".into(),
            serde_json::to_string_pretty(&json!({"scenario": self.name, "variants": summary})).expect("serializes") + "\n",
        ));
        files
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        crate::commands::write_files(&out.join(&self.name), &self.files())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_is_a_function_of_seed() {
        for name in SCENARIOS {
            let a = scenario(name, Seed(3)).unwrap();
            let b = scenario(name, Seed(3)).unwrap();
            let c = scenario(name, Seed(4)).unwrap();
            assert_eq!(a.data, b.data);
            assert_ne!(a.data, c.data);
        }
    }

    #[test]
    fn sizes() {
        assert_eq!(scenario("fred", Seed(0)).unwrap().data.n_rows(), FRED_ROWS);
        let anne = scenario("anne", Seed(0)).unwrap().data;
        assert_eq!(anne.n_rows(), ANNE_ROWS);
        assert!(anne.column("tons").unwrap().present_f64().iter().all(|v| (150.0..=2050.0).contains(v)));
        assert_eq!(scenario("claudia", Seed(0)).unwrap().data.n_rows(), CLAUDIA_ROWS);
    }

    #[test]
    fn unknown_name() {
        assert!(scenario("bob", Seed(0)).is_err());
    }
}
