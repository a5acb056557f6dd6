//! Static vulnerability findings and the per-column disclosure report.

mod flow;
mod report;
mod rules;

pub use flow::{column_flows, node_flow, row_counts, ColumnFlow, Origins, Schema};
pub use report::{
    disclosure_report, level_of_detail, signal_distortions, static_report, ColumnStatus,
    DisclosureReport, OutputReport, Status, PERCEPTUAL_CAVEAT,
};
pub use rules::{
    detect_vulnerabilities, detect_vulnerabilities_with, rule, sample_members, AnalysisConfig,
    Category, Finding, Rule, RULEBOOK,
};
