//! CSV in and out.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use disclosure_core::model::{Cell, Column, ColumnKind, GroupKey, RepKind, Representation, SummaryRep, Table};
use disclosure_core::pipeline::Output;
use disclosure_core::{infer_column_kind, Error};

fn parse_cell(s: &str) -> Cell {
    let t = s.trim();
    if t.is_empty() {
        return Cell::Missing;
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Num(v),
        _ => Cell::Text(s.to_string()),
    }
}

/// Parses CSV text with a header row. Kinds come from `hints`, otherwise from
/// the cells; a column without values is continuous.
pub fn parse_csv(text: &str, name: &str, hints: &BTreeMap<String, ColumnKind>) -> Result<Table> {
    if text.trim().is_empty() {
        bail!("{name}: empty file");
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut cells: Vec<Vec<Cell>> = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            bail!("{name}: line {line} has {} fields, header has {}", rec.len(), header.len());
        }
        for (i, f) in rec.iter().enumerate() {
            cells[i].push(parse_cell(f));
        }
    }
    let mut columns = Vec::with_capacity(header.len());
    for (h, col) in header.into_iter().zip(cells) {
        let kind = match hints.get(&h) {
            Some(k) => *k,
            None => match infer_column_kind(&col) {
                Ok(k) => k,
                Err(Error::NoValues) => ColumnKind::Continuous,
                Err(e) => return Err(e.into()),
            },
        };
        let col: Vec<Cell> = match kind {
            ColumnKind::Nominal => col
                .into_iter()
                .map(|c| match c {
                    Cell::Num(v) => Cell::Text(v.to_string()),
                    c => c,
                })
                .collect(),
            _ => col,
        };
        columns.push(Column::new(h, kind, col));
    }
    Table::new(columns, name).with_context(|| format!("{name}: inconsistent columns"))
}

pub fn load_csv(path: &Path, hints: &BTreeMap<String, ColumnKind>) -> Result<Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
    parse_csv(&text, name, hints)
}

fn write_rows(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn cell_text(c: &Column, row: usize) -> String {
    match (&c.cells[row], &c.bins) {
        (Cell::Num(v), Some(bins)) => bins[*v as usize].to_string(),
        (cell, _) => cell.to_string(),
    }
}

pub fn table_csv(t: &Table) -> String {
    let header = t.column_names();
    write_rows(
        &header,
        (0..t.n_rows()).map(|r| t.columns.iter().map(|c| cell_text(c, r)).collect()),
    )
}

/// One row per group: key columns rendered as text, then the statistics.
pub fn summary_csv(s: &SummaryRep) -> String {
    let header: Vec<String> = s.key_columns.iter().chain(&s.stat_names).cloned().collect();
    write_rows(
        &header,
        s.groups.iter().map(|g| {
            let keys = g.keys.iter().map(|k| match k {
                GroupKey::Value(c) => c.to_string(),
                k => k.to_string(),
            });
            let stats = g.stats.iter().map(|v| v.map_or(String::new(), |v| v.to_string()));
            keys.chain(stats).collect()
        }),
    )
}

fn rep_file(stem: &str, rep: &Representation) -> (String, String) {
    match &rep.kind {
        RepKind::Sample(t) => (format!("{stem}.csv"), table_csv(t)),
        RepKind::Summary(s) => (format!("{stem}.csv"), summary_csv(s)),
        RepKind::Model(_) => (
            format!("{stem}.json"),
            serde_json::to_string_pretty(rep).expect("model serializes") + "\n",
        ),
    }
}

/// File name and contents for each output: CSV for samples and summaries,
/// JSON for models, `<id>.<i>.<ext>` for the members of a bundle.
pub fn output_files(outputs: &BTreeMap<String, Output>) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (id, out) in outputs {
        match out {
            Output::Rep(r) => files.push(rep_file(id, r)),
            Output::Bundle(members) => {
                for (i, r) in members.iter().enumerate() {
                    files.push(rep_file(&format!("{id}.{i}"), r));
                }
            }
        }
    }
    files
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Table> {
        parse_csv(text, "t", &BTreeMap::new())
    }

    #[test]
    fn header_only() {
        let t = parse("a,b\n").unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.column_names(), vec!["a", "b"]);
    }

    #[test]
    fn kinds_inferred() {
        let t = parse("a,b\n1,x").unwrap();
        assert_eq!(t.column("a").unwrap().kind, ColumnKind::Continuous);
        assert_eq!(t.column("b").unwrap().kind, ColumnKind::Nominal);
    }

    #[test]
    fn ragged_row_names_line() {
        let e = parse("a,b\n1,2\n3\n").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn empty_file() {
        assert!(parse("").is_err());
    }

    #[test]
    fn hints_and_missing() {
        let hints = BTreeMap::from([("a".to_string(), ColumnKind::Nominal)]);
        let t = parse_csv("a,b\n1,\n2,3\n", "t", &hints).unwrap();
        assert_eq!(t.column("a").unwrap().cells[0], Cell::Text("1".into()));
        assert_eq!(t.column("b").unwrap().cells[0], Cell::Missing);
    }

    #[test]
    fn round_trip() {
        let t = parse("a,b\n1.5,x\n-2,\"y,z\"\n").unwrap();
        assert_eq!(table_csv(&t), "a,b\n1.5,x\n-2,\"y,z\"\n");
    }
}
