//! Tables, column kinds and the three representation kinds.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tactics::AdjustmentSpec;

/// A single table cell. Numeric cells are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn num(v: f64) -> Cell {
        if v.is_finite() {
            Cell::Num(v)
        } else {
            Cell::Missing
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    /// Numeric cells ordered by value. Never inferred, only declared.
    Ordinal,
    Nominal,
}

impl ColumnKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, ColumnKind::Nominal)
    }
}

/// Nominal if any present cell is non-numeric, else continuous.
pub fn infer_column_kind(values: &[Cell]) -> Result<ColumnKind> {
    if values.is_empty() {
        return Err(Error::NoValues);
    }
    if values.iter().any(|c| matches!(c, Cell::Text(_))) {
        Ok(ColumnKind::Nominal)
    } else {
        Ok(ColumnKind::Continuous)
    }
}

/// Numeric interval. Right-open unless `closed_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, closed_hi: bool) -> Self {
        Interval { lo, hi, closed_hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && (x < self.hi || (self.closed_hi && x == self.hi))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        let (a, b) = if self.lo <= other.lo {
            (self, other)
        } else {
            (other, self)
        };
        b.lo < a.hi || (a.closed_hi && b.lo == a.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let close = if self.closed_hi { ']' } else { ')' };
        write!(f, "[{}, {}{}", self.lo, self.hi, close)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub cells: Vec<Cell>,
    /// Partition labels: cell value `i` denotes `bins[i]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<Interval>>,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind, cells: Vec<Cell>) -> Self {
        Column {
            name: name.into(),
            kind,
            cells,
            bins: None,
        }
    }

    pub fn numeric(name: impl Into<String>, values: &[f64]) -> Self {
        Column::new(
            name,
            ColumnKind::Continuous,
            values.iter().map(|&v| Cell::num(v)).collect(),
        )
    }

    pub fn nominal<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        Column::new(
            name,
            ColumnKind::Nominal,
            values
                .iter()
                .map(|s| Cell::Text(s.as_ref().to_string()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Present numeric values in row order.
    pub fn present_f64(&self) -> Vec<f64> {
        self.cells.iter().filter_map(Cell::as_f64).collect()
    }

    fn check(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Table("empty column name".into()));
        }
        for (row, cell) in self.cells.iter().enumerate() {
            let ok = match (self.kind, cell) {
                (_, Cell::Missing) => true,
                (ColumnKind::Nominal, Cell::Text(_)) => true,
                (ColumnKind::Nominal, Cell::Num(_)) => false,
                (_, Cell::Num(v)) => v.is_finite(),
                (_, Cell::Text(_)) => false,
            };
            if !ok {
                return Err(Error::Table(format!(
                    "column `{}` row {}: cell {:?} incompatible with kind {:?}",
                    self.name, row, cell, self.kind
                )));
            }
        }
        if let Some(bins) = &self.bins {
            for cell in &self.cells {
                if let Cell::Num(v) = cell {
                    if v.fract() != 0.0 || *v < 0.0 || *v as usize >= bins.len() {
                        return Err(Error::Table(format!(
                            "column `{}`: label {} outside its {} bins",
                            self.name,
                            v,
                            bins.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sample-based representation: named, typed columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<Column>,
    pub source_id: String,
}

impl Table {
    pub fn new(columns: Vec<Column>, source_id: impl Into<String>) -> Result<Self> {
        let t = Table {
            columns,
            source_id: source_id.into(),
        };
        t.check()?;
        Ok(t)
    }

    pub fn check(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for c in &self.columns {
            c.check()?;
            if !names.insert(c.name.as_str()) {
                return Err(Error::Table(format!("duplicate column `{}`", c.name)));
            }
        }
        if let Some(first) = self.columns.first() {
            if let Some(bad) = self.columns.iter().find(|c| c.len() != first.len()) {
                return Err(Error::Table(format!(
                    "column `{}` has {} rows, `{}` has {}",
                    bad.name,
                    bad.len(),
                    first.name,
                    first.len()
                )));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.index_of(name)?])
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    /// Fails unless `name` is continuous or ordinal.
    pub fn numeric_column(&self, name: &str) -> Result<&Column> {
        let c = self.column(name)?;
        if !c.kind.is_numeric() {
            return Err(Error::ColumnKind {
                column: name.to_string(),
                expected: "continuous or ordinal",
                actual: c.kind,
            });
        }
        Ok(c)
    }

    /// New table holding the given rows, in the given order (repeats allowed).
    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    kind: c.kind,
                    cells: rows.iter().map(|&r| c.cells[r].clone()).collect(),
                    bins: c.bins.clone(),
                })
                .collect(),
            source_id: self.source_id.clone(),
        }
    }

    /// Drops rows with a missing cell in any of `cols`; returns the number dropped.
    pub fn drop_missing(&self, cols: &[&str]) -> Result<(Table, usize)> {
        let idx = cols
            .iter()
            .map(|c| self.index_of(c))
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&r| idx.iter().all(|&i| !self.columns[i].cells[r].is_missing()))
            .collect();
        let dropped = self.n_rows() - keep.len();
        if dropped == 0 {
            return Ok((self.clone(), 0));
        }
        Ok((self.take_rows(&keep), dropped))
    }

    pub fn push_column(&mut self, column: Column) -> Result<()> {
        if self.has_column(&column.name) {
            return Err(Error::param(format!(
                "column `{}` already exists",
                column.name
            )));
        }
        if !self.columns.is_empty() && column.len() != self.n_rows() {
            return Err(Error::Table(format!(
                "column `{}` has {} rows, table has {}",
                column.name,
                column.len(),
                self.n_rows()
            )));
        }
        column.check()?;
        self.columns.push(column);
        Ok(())
    }
}

/// One applied step in a representation's history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEntry {
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dropped_rows: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub warnings: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjustment: Option<AdjustmentSpec>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl LineageEntry {
    pub fn new(op: &str) -> Self {
        LineageEntry {
            op: op.to_string(),
            node: None,
            dropped_rows: 0,
            warnings: 0,
            dropped_columns: Vec::new(),
            adjustment: None,
        }
    }

    pub fn dropped(mut self, rows: usize) -> Self {
        self.dropped_rows = rows;
        self
    }

    pub fn warned(mut self, n: usize) -> Self {
        self.warnings = n;
        self
    }
}

/// Key identifying one summary group on one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Value(Cell),
    Interval(Interval),
    /// Highest-density region: flat indices into the summary's grid.
    Region {
        level: f64,
        cells: Vec<usize>,
    },
}

impl GroupKey {
    pub fn interval(&self) -> Option<Interval> {
        match self {
            GroupKey::Interval(iv) => Some(*iv),
            _ => None,
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Value(c) => write!(f, "{c}"),
            GroupKey::Interval(iv) => write!(f, "{iv}"),
            GroupKey::Region { level, cells } => write!(f, "hdr({level}; {} cells)", cells.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub keys: Vec<GroupKey>,
    /// One value per declared stat; `None` marks a missing statistic.
    pub stats: Vec<Option<f64>>,
}

/// Grid axis shared by density models and the regions banded from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRep {
    pub key_columns: Vec<String>,
    pub stat_names: Vec<String>,
    pub groups: Vec<Group>,
    pub intervals_nested: bool,
    /// Geometry for region keys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<Axis>>,
}

impl SummaryRep {
    pub fn stat_index(&self, name: &str) -> Option<usize> {
        self.stat_names.iter().position(|s| s == name)
    }

    pub fn key_index(&self, name: &str) -> Option<usize> {
        self.key_columns.iter().position(|s| s == name)
    }

    pub fn check(&self) -> Result<()> {
        for (gi, g) in self.groups.iter().enumerate() {
            if g.keys.len() != self.key_columns.len() || g.stats.len() != self.stat_names.len() {
                return Err(Error::Table(format!(
                    "summary group {gi} has the wrong arity"
                )));
            }
        }
        if self.intervals_nested {
            return Ok(());
        }
        // Same-axis intervals must be disjoint, unless the groups differ on
        // another axis (a 2D heatmap repeats each x interval once per y bin).
        for axis in 0..self.key_columns.len() {
            let mut seen: Vec<Interval> = Vec::new();
            for g in &self.groups {
                if let GroupKey::Interval(iv) = g.keys[axis] {
                    if seen.contains(&iv) {
                        continue;
                    }
                    if let Some(o) = seen.iter().find(|o| o.overlaps(&iv)) {
                        return Err(Error::Table(format!(
                            "overlapping intervals {o} and {iv} on `{}`",
                            self.key_columns[axis]
                        )));
                    }
                    seen.push(iv);
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    DensityGrid,
    OlsLine,
    PcaLoadings,
    AdjustmentFn,
}

/// Model-based representation: a function materialized on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRep {
    pub axes: Vec<Axis>,
    pub evaluator: Evaluator,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    /// Row-major over `axes` (first axis outermost).
    pub grid: Vec<f64>,
}

impl ModelRep {
    pub fn check(&self) -> Result<()> {
        for a in &self.axes {
            if !(a.lo < a.hi) || a.n < 2 {
                return Err(Error::Table(format!(
                    "axis `{}` needs lo < hi and at least 2 grid points",
                    a.name
                )));
            }
        }
        let expected: usize = self.axes.iter().map(|a| a.n).product();
        if self.grid.len() != expected {
            return Err(Error::Table(format!(
                "grid has {} values, axes imply {expected}",
                self.grid.len()
            )));
        }
        if self.param_names.len() != self.params.len() {
            return Err(Error::Table(
                "parameter names and values differ in length".into(),
            ));
        }
        Ok(())
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|p| p == name)
            .map(|i| self.params[i])
    }
}

/// Payload of a representation; the variant is its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum RepKind {
    Sample(Table),
    Summary(SummaryRep),
    Model(ModelRep),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    #[serde(flatten)]
    pub kind: RepKind,
    pub lineage: Vec<LineageEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Full,
    Sampling,
    Summarizing,
    Modeling,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Full => "full",
            Family::Sampling => "sampling",
            Family::Summarizing => "summarizing",
            Family::Modeling => "modeling",
        }
    }
}

impl Representation {
    pub fn sample(t: Table) -> Self {
        Representation {
            kind: RepKind::Sample(t),
            lineage: Vec::new(),
        }
    }

    pub fn summary(s: SummaryRep, lineage: Vec<LineageEntry>) -> Self {
        Representation {
            kind: RepKind::Summary(s),
            lineage,
        }
    }

    pub fn model(m: ModelRep, lineage: Vec<LineageEntry>) -> Self {
        Representation {
            kind: RepKind::Model(m),
            lineage,
        }
    }

    pub fn with_lineage(mut self, lineage: Vec<LineageEntry>) -> Self {
        self.lineage = lineage;
        self
    }

    /// Lineage extended by one entry; the original is left untouched.
    pub fn extended(lineage: &[LineageEntry], entry: LineageEntry) -> Vec<LineageEntry> {
        let mut l = lineage.to_vec();
        l.push(entry);
        l
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            RepKind::Sample(_) => "sample",
            RepKind::Summary(_) => "summary",
            RepKind::Model(_) => "model",
        }
    }

    pub fn as_table(&self) -> Result<&Table> {
        match &self.kind {
            RepKind::Sample(t) => Ok(t),
            _ => Err(Error::RepresentationKind {
                expected: "sample",
                found: self.kind_name(),
            }),
        }
    }

    pub fn as_summary(&self) -> Result<&SummaryRep> {
        match &self.kind {
            RepKind::Summary(s) => Ok(s),
            _ => Err(Error::RepresentationKind {
                expected: "summary",
                found: self.kind_name(),
            }),
        }
    }

    pub fn as_model(&self) -> Result<&ModelRep> {
        match &self.kind {
            RepKind::Model(m) => Ok(m),
            _ => Err(Error::RepresentationKind {
                expected: "model",
                found: self.kind_name(),
            }),
        }
    }

    /// Payload invariants for whichever kind this is.
    pub fn check(&self) -> Result<()> {
        match &self.kind {
            RepKind::Sample(t) => t.check(),
            RepKind::Summary(s) => s.check(),
            RepKind::Model(m) => m.check(),
        }
    }

    pub fn family(&self) -> Family {
        representation_family(self)
    }
}

pub fn representation_family(rep: &Representation) -> Family {
    match rep.kind {
        RepKind::Sample(_) if rep.lineage.is_empty() => Family::Full,
        RepKind::Sample(_) => Family::Sampling,
        RepKind::Summary(_) => Family::Summarizing,
        RepKind::Model(_) => Family::Modeling,
    }
}
