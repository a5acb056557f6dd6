use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use disclosure_cli::commands::{
    cmd_analyze, cmd_render, cmd_run, cmd_scenario, cmd_sweep, parse_binding, CliResult, Format, RenderRequest,
};
use disclosure_cli::render::ChartKind;
use disclosure_core::Seed;

#[derive(Parser)]
#[command(name = "disclose", version, about = "Run disclosure-tactic pipelines and report what they reveal, distort and hide")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Bind a source table to a CSV file; repeatable.
    #[arg(long = "input", value_name = "NAME=CSVPATH", value_parser = parse_binding)]
    inputs: Vec<(String, PathBuf)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a pipeline and write its outputs and report.
    Run(Common),
    /// Static findings and column statuses; no data needed.
    Analyze {
        #[arg(long)]
        spec: PathBuf,
        /// Also write report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: Format,
    },
    /// Evaluate the spec's parameter sweep.
    Sweep(Common),
    /// Regenerate a reference scenario: fred, anne or claudia.
    Scenario {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Draw an output (or a single CSV input) as SVG.
    Render {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long = "input", value_name = "NAME=CSVPATH", value_parser = parse_binding)]
        inputs: Vec<(String, PathBuf)>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// dotplot, histogram, heatmap, contour-band or scatter.
        #[arg(long)]
        chart: ChartKind,
        /// Output node to draw; the first output by default.
        #[arg(long)]
        node: Option<String>,
        /// Comma-separated columns to encode.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
    },
}

fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Run(c) => cmd_run(&c.spec, &c.inputs, Seed(c.seed), &c.out, c.format),
        Command::Analyze { spec, out, format } => cmd_analyze(&spec, out.as_deref(), format),
        Command::Sweep(c) => cmd_sweep(&c.spec, &c.inputs, Seed(c.seed), &c.out, c.format),
        Command::Scenario { name, seed, out } => cmd_scenario(&name, Seed(seed), &out),
        Command::Render {
            spec,
            inputs,
            seed,
            out,
            chart,
            node,
            columns,
        } => cmd_render(&RenderRequest {
            spec: spec.as_deref(),
            bindings: &inputs,
            seed: Seed(seed),
            out: &out,
            chart,
            node: node.as_deref(),
            columns,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
