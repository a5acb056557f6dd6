use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, Column, ColumnKind, Interval, LineageEntry, Representation};

use super::sorted;

/// How bin edges are chosen. Bins are right-open except the last, which is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    ExplicitEdges(Vec<f64>),
    EqualWidth(usize),
    EqualFrequency(usize),
}

impl BinSpec {
    /// Number of bins requested.
    pub fn bin_count(&self) -> usize {
        match self {
            BinSpec::ExplicitEdges(e) => e.len().saturating_sub(1),
            BinSpec::EqualWidth(n) | BinSpec::EqualFrequency(n) => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BinSpec::ExplicitEdges(e) => {
                if e.len() < 2 {
                    return Err(Error::param("explicit edges need at least 2 values"));
                }
                if e.iter().any(|v| !v.is_finite()) || e.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::param(
                        "explicit edges must be finite and strictly ascending",
                    ));
                }
            }
            BinSpec::EqualWidth(0) | BinSpec::EqualFrequency(0) => {
                return Err(Error::param("bin count must be at least 1"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Resolves the spec to concrete intervals for the given present values.
    /// A degenerate spread yields the single closed bin `[v, v]`.
    pub fn intervals(&self, values: &[f64]) -> Result<Vec<Interval>> {
        self.validate()?;
        let edges = match self {
            BinSpec::ExplicitEdges(e) => e.clone(),
            BinSpec::EqualWidth(count) => {
                let s = sorted(values);
                let (lo, hi) = match (s.first(), s.last()) {
                    (Some(&lo), Some(&hi)) => (lo, hi),
                    _ => return Err(Error::NoValues),
                };
                if lo == hi {
                    vec![lo, hi]
                } else {
                    let w = (hi - lo) / *count as f64;
                    let mut e: Vec<f64> = (0..*count).map(|i| lo + i as f64 * w).collect();
                    e.push(hi);
                    e
                }
            }
            BinSpec::EqualFrequency(count) => {
                let s = sorted(values);
                if s.len() < *count {
                    return Err(Error::param(format!(
                        "equal-frequency binning into {count} bins needs at least {count} values, got {}",
                        s.len()
                    )));
                }
                equal_frequency_edges(&s, *count)
            }
        };
        let n = edges.len();
        Ok(edges
            .windows(2)
            .enumerate()
            .map(|(i, w)| Interval::new(w[0], w[1], i + 2 == n))
            .collect())
    }
}

/// Split `i` falls after sorted rank `floor(i·n/count)`. Values tied with the
/// last value of a lower bin stay in that bin, so the edge sits halfway to the
/// next distinct value; collapsed edges are dropped.
fn equal_frequency_edges(sorted: &[f64], count: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut edges = vec![sorted[0]];
    for i in 1..count {
        let rank = i * n / count;
        let boundary = sorted[rank - 1];
        let next = sorted[rank..].iter().copied().find(|&v| v > boundary);
        if let Some(next) = next {
            let edge = boundary + (next - boundary) / 2.0;
            if edge > *edges.last().unwrap() {
                edges.push(edge);
            }
        }
    }
    let max = sorted[n - 1];
    if max > *edges.last().unwrap() || edges.len() == 1 {
        edges.push(max);
    }
    edges
}

/// Appends a partition-label column `<col>__bin`. Values outside every bin
/// receive a missing label and are counted as warnings.
pub fn classify(rep: &Representation, col: &str, bins: &BinSpec) -> Result<Representation> {
    let t = rep.as_table()?;
    t.numeric_column(col)?;
    let (mut t, dropped) = t.drop_missing(&[col])?;
    let values = t.column(col)?.present_f64();
    let intervals = bins.intervals(&values)?;
    let mut outside = 0;
    let labels: Vec<Cell> = values
        .iter()
        .map(|&v| match intervals.iter().position(|iv| iv.contains(v)) {
            Some(i) => Cell::Num(i as f64),
            None => {
                outside += 1;
                Cell::Missing
            }
        })
        .collect();
    let mut label_col = Column::new(format!("{col}__bin"), ColumnKind::Ordinal, labels);
    label_col.bins = Some(intervals);
    t.push_column(label_col)?;
    let entry = LineageEntry::new("classify")
        .dropped(dropped)
        .warned(outside);
    Ok(Representation::sample(t).with_lineage(Representation::extended(&rep.lineage, entry)))
}

/// Replaces each nominal value with its group name.
pub fn categorize(
    rep: &Representation,
    col: &str,
    mapping: &BTreeMap<String, String>,
    default_group: Option<&str>,
) -> Result<Representation> {
    let t = rep.as_table()?;
    let c = t.column(col)?;
    if c.kind != ColumnKind::Nominal {
        return Err(Error::ColumnKind {
            column: col.to_string(),
            expected: "nominal",
            actual: c.kind,
        });
    }
    let (mut t, dropped) = t.drop_missing(&[col])?;
    let idx = t.index_of(col)?;
    let mut unmapped = BTreeSet::new();
    let cells: Vec<Cell> = t.columns[idx]
        .cells
        .iter()
        .map(|cell| {
            let Cell::Text(v) = cell else {
                unreachable!("nominal column holds text")
            };
            match (mapping.get(v), default_group) {
                (Some(g), _) => Cell::Text(g.clone()),
                (None, Some(d)) => Cell::Text(d.to_string()),
                (None, None) => {
                    unmapped.insert(v.clone());
                    Cell::Missing
                }
            }
        })
        .collect();
    if !unmapped.is_empty() {
        return Err(Error::Unmapped(unmapped.into_iter().collect()));
    }
    t.columns[idx].cells = cells;
    let entry = LineageEntry::new("categorize").dropped(dropped);
    Ok(Representation::sample(t).with_lineage(Representation::extended(&rep.lineage, entry)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Table;

    fn rep(values: &[f64]) -> Representation {
        Representation::sample(Table::new(vec![Column::numeric("v", values)], "t").unwrap())
    }

    fn labels(r: &Representation) -> Vec<f64> {
        r.as_table()
            .unwrap()
            .column("v__bin")
            .unwrap()
            .present_f64()
    }

    #[test]
    fn single_covering_bin() {
        let out = classify(
            &rep(&[1.0, 5.0, 9.0]),
            "v",
            &BinSpec::ExplicitEdges(vec![0.0, 10.0]),
        )
        .unwrap();
        assert_eq!(labels(&out), vec![0.0, 0.0, 0.0]);
        let bins = out
            .as_table()
            .unwrap()
            .column("v__bin")
            .unwrap()
            .bins
            .clone()
            .unwrap();
        assert_eq!(bins, vec![Interval::new(0.0, 10.0, true)]);
        assert_eq!(out.lineage.len(), 1);
    }

    #[test]
    fn equal_width_right_open() {
        // edges {0, 1.5, 3}: 0,1 -> bin 0; 2,3 -> bin 1 (3 lands in the closed last bin)
        let out = classify(&rep(&[0.0, 1.0, 2.0, 3.0]), "v", &BinSpec::EqualWidth(2)).unwrap();
        assert_eq!(labels(&out), vec![0.0, 0.0, 1.0, 1.0]);
        let bins = out
            .as_table()
            .unwrap()
            .column("v__bin")
            .unwrap()
            .bins
            .clone()
            .unwrap();
        assert_eq!(bins[0], Interval::new(0.0, 1.5, false));
        assert_eq!(bins[1], Interval::new(1.5, 3.0, true));
    }

    #[test]
    fn equal_frequency_splits_after_rank() {
        let out = classify(
            &rep(&[4.0, 2.0, 1.0, 3.0]),
            "v",
            &BinSpec::EqualFrequency(2),
        )
        .unwrap();
        assert_eq!(labels(&out), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn equal_frequency_ties_go_low() {
        let out = classify(
            &rep(&[1.0, 1.0, 1.0, 2.0]),
            "v",
            &BinSpec::EqualFrequency(2),
        )
        .unwrap();
        assert_eq!(labels(&out), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn equal_frequency_needs_enough_values() {
        assert!(classify(&rep(&[1.0]), "v", &BinSpec::EqualFrequency(2)).is_err());
    }

    #[test]
    fn bad_edges_and_kinds() {
        assert!(matches!(
            classify(&rep(&[1.0]), "v", &BinSpec::ExplicitEdges(vec![2.0, 1.0])),
            Err(Error::Parameter(_))
        ));
        let t = Table::new(vec![Column::nominal("n", &["a"])], "t").unwrap();
        assert!(matches!(
            classify(&Representation::sample(t), "n", &BinSpec::EqualWidth(2)),
            Err(Error::ColumnKind { .. })
        ));
    }

    #[test]
    fn out_of_range_values_warn() {
        let out = classify(
            &rep(&[-1.0, 0.5, 11.0]),
            "v",
            &BinSpec::ExplicitEdges(vec![0.0, 10.0]),
        )
        .unwrap();
        assert_eq!(out.lineage[0].warnings, 2);
        assert_eq!(labels(&out), vec![0.0]);
    }

    fn counties() -> Representation {
        let t = Table::new(
            vec![Column::nominal("county", &["cook", "lake", "miami-dade"])],
            "t",
        )
        .unwrap();
        Representation::sample(t)
    }

    #[test]
    fn categorize_groups() {
        let mapping: BTreeMap<String, String> =
            [("cook", "IL"), ("lake", "IL"), ("miami-dade", "FL")]
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
        let out = categorize(&counties(), "county", &mapping, None).unwrap();
        let cells = &out.as_table().unwrap().column("county").unwrap().cells;
        let groups: BTreeSet<String> = cells.iter().map(|c| c.to_string()).collect();
        assert_eq!(groups.len(), 2);
        assert_eq!(cells[0], Cell::Text("IL".into()));
    }

    #[test]
    fn categorize_identity_keeps_table() {
        let mapping: BTreeMap<String, String> = ["cook", "lake", "miami-dade"]
            .into_iter()
            .map(|a| (a.to_string(), a.to_string()))
            .collect();
        let input = counties();
        let out = categorize(&input, "county", &mapping, None).unwrap();
        assert_eq!(out.as_table().unwrap(), input.as_table().unwrap());
        assert_eq!(out.lineage.len(), 1);
    }

    #[test]
    fn categorize_unmapped_errors() {
        let t = Table::new(vec![Column::nominal("county", &["cook", "unknown"])], "t").unwrap();
        let mapping: BTreeMap<String, String> = [("cook".to_string(), "IL".to_string())].into();
        let err =
            categorize(&Representation::sample(t.clone()), "county", &mapping, None).unwrap_err();
        assert_eq!(err, Error::Unmapped(vec!["unknown".into()]));
        let ok = categorize(
            &Representation::sample(t),
            "county",
            &mapping,
            Some("other"),
        )
        .unwrap();
        assert_eq!(
            ok.as_table().unwrap().column("county").unwrap().cells[1],
            Cell::Text("other".into())
        );
    }
}
