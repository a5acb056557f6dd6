use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, Group, GroupKey, LineageEntry, Representation, SummaryRep, Table};

use super::{quantile_sorted, sorted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    Count,
    Sum,
    Mean,
    Median,
    Min,
    Max,
    Quantile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSpec {
    pub stat: Stat,
    /// Target column; ignored by `count`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
}

impl StatSpec {
    pub fn count() -> Self {
        StatSpec {
            stat: Stat::Count,
            column: None,
        }
    }

    pub fn of(stat: Stat, column: &str) -> Self {
        StatSpec {
            stat,
            column: Some(column.to_string()),
        }
    }

    /// Output statistic name, e.g. `count`, `mean(x)`, `quantile(0.9,x)`.
    pub fn name(&self) -> String {
        let col = self.column.as_deref().unwrap_or("");
        match self.stat {
            Stat::Count => "count".to_string(),
            Stat::Sum => format!("sum({col})"),
            Stat::Mean => format!("mean({col})"),
            Stat::Median => format!("median({col})"),
            Stat::Min => format!("min({col})"),
            Stat::Max => format!("max({col})"),
            Stat::Quantile(p) => format!("quantile({p},{col})"),
        }
    }

    fn validate(&self, t: &Table) -> Result<()> {
        if let Stat::Quantile(p) = self.stat {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("quantile level {p} outside [0, 1]")));
            }
        }
        match (&self.stat, &self.column) {
            (Stat::Count, _) => Ok(()),
            (_, None) => Err(Error::param(format!(
                "{} needs a target column",
                self.name()
            ))),
            (_, Some(c)) => t.numeric_column(c).map(|_| ()),
        }
    }

    fn compute(&self, rows: &[usize], t: &Table) -> Result<Option<f64>> {
        if self.stat == Stat::Count {
            return Ok(Some(rows.len() as f64));
        }
        let col = t.column(self.column.as_deref().unwrap_or_default())?;
        let values: Vec<f64> = rows.iter().filter_map(|&r| col.cells[r].as_f64()).collect();
        if values.is_empty() {
            return Ok(None);
        }
        Ok(match self.stat {
            Stat::Count => unreachable!(),
            Stat::Sum => Some(values.iter().sum()),
            Stat::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
            Stat::Median => quantile_sorted(&sorted(&values), 0.5),
            Stat::Min => values.iter().copied().reduce(f64::min),
            Stat::Max => values.iter().copied().reduce(f64::max),
            Stat::Quantile(p) => quantile_sorted(&sorted(&values), p),
        })
    }
}

/// Sort key for one grouping cell: numbers (and bin labels) before text.
#[derive(Debug, Clone, PartialEq)]
enum KeyAtom {
    Num(f64),
    Text(String),
}

impl Eq for KeyAtom {}

impl PartialOrd for KeyAtom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for KeyAtom {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyAtom::Num(a), KeyAtom::Num(b)) => a.total_cmp(b),
            (KeyAtom::Num(_), KeyAtom::Text(_)) => Ordering::Less,
            (KeyAtom::Text(_), KeyAtom::Num(_)) => Ordering::Greater,
            (KeyAtom::Text(a), KeyAtom::Text(b)) => a.cmp(b),
        }
    }
}

/// Collapses rows into one group per distinct key combination, ordered by key.
/// Rows with a missing grouping cell are dropped; statistics ignore missing
/// target cells and are missing-marked when a group has no present values.
pub fn aggregate(
    rep: &Representation,
    group_by: &[String],
    stats: &[StatSpec],
) -> Result<Representation> {
    let t = rep.as_table()?;
    for s in stats {
        s.validate(t)?;
    }
    let keys: Vec<&str> = group_by.iter().map(String::as_str).collect();
    let (t, dropped) = t.drop_missing(&keys)?;
    let key_cols = keys
        .iter()
        .map(|k| t.column(k))
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<Vec<KeyAtom>, Vec<usize>> = BTreeMap::new();
    for r in 0..t.n_rows() {
        let atoms = key_cols
            .iter()
            .map(|c| match &c.cells[r] {
                Cell::Num(v) => KeyAtom::Num(*v),
                Cell::Text(s) => KeyAtom::Text(s.clone()),
                Cell::Missing => unreachable!("missing keys were dropped"),
            })
            .collect();
        groups.entry(atoms).or_default().push(r);
    }

    let mut out = Vec::with_capacity(groups.len());
    for (atoms, rows) in &groups {
        let keys = atoms
            .iter()
            .zip(&key_cols)
            .map(|(a, c)| match (a, &c.bins) {
                (KeyAtom::Num(i), Some(bins)) => GroupKey::Interval(bins[*i as usize]),
                (KeyAtom::Num(v), None) => GroupKey::Value(Cell::Num(*v)),
                (KeyAtom::Text(s), _) => GroupKey::Value(Cell::Text(s.clone())),
            })
            .collect();
        let values = stats
            .iter()
            .map(|s| s.compute(rows, &t))
            .collect::<Result<Vec<_>>>()?;
        out.push(Group {
            keys,
            stats: values,
        });
    }

    let summary = SummaryRep {
        key_columns: group_by.to_vec(),
        stat_names: stats.iter().map(StatSpec::name).collect(),
        groups: out,
        intervals_nested: false,
        grid: None,
    };
    summary.check()?;
    let entry = LineageEntry::new("aggregate").dropped(dropped);
    Ok(Representation::summary(
        summary,
        Representation::extended(&rep.lineage, entry),
    ))
}
