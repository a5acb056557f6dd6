//! The five commands. Each validates and computes everything in memory before
//! writing, so a failing command leaves no partial outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use disclosure_core::analysis::{signal_distortions, static_report, AnalysisConfig, DisclosureReport, Schema};
use disclosure_core::model::{Representation, Table};
use disclosure_core::pipeline::{execute, parse_pipeline, validate_pipeline, Output, PipelineGraph};
use disclosure_core::signals::sweep;
use disclosure_core::{Error, Seed};

use crate::io::{load_csv, output_files};
use crate::render::{render_layers, ChartKind, Layer, Style};
use crate::scenarios::scenario;

#[derive(Debug)]
pub enum CliError {
    /// Bad spec, bindings or input files: exit 2.
    Validation(anyhow::Error),
    /// Anything that failed while running: exit 1.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(e) => write!(f, "invalid: {e:#}"),
            CliError::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn invalid(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Validation(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

fn is_static(e: &Error) -> bool {
    match e {
        Error::Node { source, .. } => is_static(source),
        Error::Syntax { .. }
        | Error::Pipeline(_)
        | Error::DuplicateId(_)
        | Error::UnknownOp { .. }
        | Error::UnknownNode(_)
        | Error::Cycle(_)
        | Error::Invalid(_)
        | Error::Unbound(_)
        | Error::Parameter(_)
        | Error::Expression(_) => true,
        _ => false,
    }
}

fn classify_core(e: Error) -> CliError {
    if is_static(&e) {
        invalid(e)
    } else {
        runtime(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            _ => Err(format!("unknown format `{s}` (json, text)")),
        }
    }
}

/// Parses and kind-checks a pipeline file.
pub fn load_spec(path: &Path) -> CliResult<PipelineGraph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(invalid)?;
    let g = parse_pipeline(&text).map_err(|e| invalid(anyhow!("{}: {e}", path.display())))?;
    let errors = validate_pipeline(&g);
    if !errors.is_empty() {
        let lines: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
        return Err(invalid(anyhow!("{}:\n  {}", path.display(), lines.join("\n  "))));
    }
    Ok(g)
}

/// Splits `NAME=PATH`.
pub fn parse_binding(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok((n.to_string(), PathBuf::from(p))),
        _ => Err(format!("expected NAME=CSVPATH, got `{s}`")),
    }
}

/// Loads every bound CSV, using declared column kinds as hints.
pub fn load_inputs(g: Option<&PipelineGraph>, bindings: &[(String, PathBuf)]) -> CliResult<BTreeMap<String, Table>> {
    let mut hints: BTreeMap<String, BTreeMap<String, _>> = BTreeMap::new();
    if let Some(g) = g {
        for (_, p) in g.sources() {
            let h = hints.entry(p.table.clone()).or_default();
            for c in p.columns.iter().flatten() {
                if let Some(k) = c.kind {
                    h.insert(c.name.clone(), k);
                }
            }
        }
    }
    let mut tables = BTreeMap::new();
    for (name, path) in bindings {
        let mut t = load_csv(path, hints.get(name).unwrap_or(&BTreeMap::new())).map_err(invalid)?;
        t.source_id = name.clone();
        if tables.insert(name.clone(), t).is_some() {
            return Err(invalid(anyhow!("input `{name}` bound twice")));
        }
    }
    if let Some(g) = g {
        for (id, p) in g.sources() {
            if !tables.contains_key(&p.table) {
                return Err(invalid(anyhow!("source `{id}` needs --input {}=CSVPATH", p.table)));
            }
        }
    }
    Ok(tables)
}

/// Findings and statuses over the bound schemas, plus signal distortions
/// when outputs are given.
pub fn build_report(
    g: &PipelineGraph,
    inputs: &BTreeMap<String, Table>,
    outputs: Option<&BTreeMap<String, Output>>,
) -> anyhow::Result<DisclosureReport> {
    let mut schema = Schema::declared(g);
    for (name, t) in inputs {
        schema = schema.bind(name, t);
    }
    let mut r = static_report(g, &schema, &AnalysisConfig::default());
    if let Some(outs) = outputs {
        r.distortions = signal_distortions(g, inputs, outs)?;
    }
    Ok(r)
}

/// Writes `(relative path, contents)` pairs under `dir`.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> anyhow::Result<()> {
    for (rel, body) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn report_text(r: &DisclosureReport, format: Format) -> String {
    match format {
        Format::Json => r.to_json() + "\n",
        Format::Text => r.to_text(),
    }
}

/// Executes a pipeline; writes each output, `report.json` and `report.txt`.
/// Returns the report in the requested format.
pub fn cmd_run(spec: &Path, bindings: &[(String, PathBuf)], seed: Seed, out: &Path, format: Format) -> CliResult<String> {
    let g = load_spec(spec)?;
    let inputs = load_inputs(Some(&g), bindings)?;
    let outputs = execute(&g, &inputs, seed).map_err(classify_core)?;
    let report = build_report(&g, &inputs, Some(&outputs)).map_err(runtime)?;
    let mut files = output_files(&outputs);
    files.push(("report.json".into(), report.to_json() + "\n"));
    files.push(("report.txt".into(), report.to_text()));
    write_files(out, &files).map_err(runtime)?;
    Ok(report_text(&report, format))
}

/// Static analysis only: findings and statuses over the declared schema.
pub fn cmd_analyze(spec: &Path, out: Option<&Path>, format: Format) -> CliResult<String> {
    let g = load_spec(spec)?;
    let report = build_report(&g, &BTreeMap::new(), None).map_err(runtime)?;
    if let Some(dir) = out {
        write_files(dir, &[("report.json".into(), report.to_json() + "\n")]).map_err(runtime)?;
    }
    Ok(report_text(&report, format))
}

/// Runs the spec's sweep; writes `sweep.json` and `sweep.csv`.
pub fn cmd_sweep(spec: &Path, bindings: &[(String, PathBuf)], seed: Seed, out: &Path, format: Format) -> CliResult<String> {
    let g = load_spec(spec)?;
    let Some(sw) = g.sweep.clone() else {
        return Err(invalid(anyhow!("{}: no sweep block", spec.display())));
    };
    let inputs = load_inputs(Some(&g), bindings)?;
    let result = sweep(&g, &sw, &inputs, seed).map_err(classify_core)?;
    let json = serde_json::to_string_pretty(&result).map_err(runtime)? + "\n";
    let csv = result.to_csv();
    write_files(out, &[("sweep.json".into(), json.clone()), ("sweep.csv".into(), csv.clone())]).map_err(runtime)?;
    Ok(match format {
        Format::Json => json,
        Format::Text => csv,
    })
}

/// Generates a scenario and writes its artifact tree under `out/<name>`.
pub fn cmd_scenario(name: &str, seed: Seed, out: &Path) -> CliResult<String> {
    let s = scenario(name, seed).map_err(invalid)?;
    let run = s.run().map_err(runtime)?;
    run.write(out).map_err(runtime)?;
    Ok(format!("{}: {} variants written to {}\n", name, run.variants.len(), out.join(name).display()))
}

pub struct RenderRequest<'a> {
    pub spec: Option<&'a Path>,
    pub bindings: &'a [(String, PathBuf)],
    pub seed: Seed,
    pub out: &'a Path,
    pub chart: ChartKind,
    /// Output node to draw; the first output when absent.
    pub node: Option<&'a str>,
    pub columns: Vec<String>,
}

/// Draws one pipeline output, or a single CSV input as a sample when no
/// spec is given. Writes `<name>.svg`.
pub fn cmd_render(req: &RenderRequest) -> CliResult<String> {
    let (name, reps): (String, Vec<Representation>) = match req.spec {
        Some(spec) => {
            let g = load_spec(spec)?;
            let inputs = load_inputs(Some(&g), req.bindings)?;
            let node = req.node.map(str::to_string).unwrap_or_else(|| g.outputs[0].clone());
            if !g.outputs.contains(&node) {
                return Err(invalid(anyhow!("`{node}` is not an output ({})", g.outputs.join(", "))));
            }
            let mut outputs = execute(&g, &inputs, req.seed).map_err(classify_core)?;
            let out = outputs.remove(&node).expect("outputs are executed");
            let reps = match out {
                Output::Rep(r) => vec![r],
                Output::Bundle(m) => m,
            };
            (node, reps)
        }
        None => {
            let inputs = load_inputs(None, req.bindings)?;
            if inputs.len() != 1 {
                return Err(invalid(anyhow!("without --spec, give exactly one --input")));
            }
            let (name, t) = inputs.into_iter().next().expect("one input");
            (name, vec![Representation::sample(t)])
        }
    };
    let layers: Vec<Layer> = reps
        .iter()
        .map(|rep| Layer {
            rep,
            kind: req.chart,
            columns: req.columns.clone(),
        })
        .collect();
    let svg = render_layers(&layers, &Style::default()).map_err(invalid)?;
    let file = format!("{name}.svg");
    write_files(req.out, &[(file.clone(), svg)]).map_err(runtime)?;
    Ok(format!("{}\n", req.out.join(file).display()))
}
