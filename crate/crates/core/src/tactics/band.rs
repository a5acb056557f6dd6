use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Evaluator, Group, GroupKey, Interval, LineageEntry, ModelRep, RepKind, Representation,
    SummaryRep,
};

use super::{quantile_sorted, sorted};

/// Where the band boundaries come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandLevels {
    /// Explicit cut points, strictly ascending.
    Cuts(Vec<f64>),
    /// Probability levels in `[0, 1]`; bands run between consecutive quantiles.
    Quantiles(Vec<f64>),
    /// Highest-density-region mass levels in `(0, 1)`; density grids only.
    Mass(Vec<f64>),
}

impl BandLevels {
    pub fn is_mass(&self) -> bool {
        matches!(self, BandLevels::Mass(_))
    }

    /// True when the output regions are nested (several mass levels).
    pub fn is_nested(&self) -> bool {
        matches!(self, BandLevels::Mass(l) if l.len() > 1)
    }

    fn checked(&self) -> Result<Vec<f64>> {
        match self {
            BandLevels::Cuts(c) => {
                if c.len() < 2
                    || c.iter().any(|v| !v.is_finite())
                    || c.windows(2).any(|w| w[0] >= w[1])
                {
                    return Err(Error::param(
                        "cut points must be finite, strictly ascending, at least 2",
                    ));
                }
                Ok(c.clone())
            }
            BandLevels::Quantiles(q) => {
                if q.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::param("quantile levels must lie in [0, 1]"));
                }
                let mut q = sorted(q);
                q.dedup();
                if q.len() < 2 {
                    return Err(Error::param("need at least 2 distinct quantile levels"));
                }
                Ok(q)
            }
            BandLevels::Mass(m) => {
                if m.is_empty() || m.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
                    return Err(Error::param("mass levels must lie in (0, 1)"));
                }
                let mut m = sorted(m);
                m.dedup();
                Ok(m)
            }
        }
    }
}

/// Cell masses of a grid (density × cell volume), normalized to sum to one.
pub(crate) fn normalized_masses(m: &ModelRep) -> Vec<f64> {
    let total: f64 = m.grid.iter().map(|d| d.max(0.0)).sum();
    if total <= 0.0 {
        return vec![0.0; m.grid.len()];
    }
    m.grid.iter().map(|d| d.max(0.0) / total).collect()
}

/// Smallest set of grid cells, taken by descending density, whose share of
/// the grid's total mass reaches `level`. Returned as ascending flat indices.
pub fn highest_density_region(m: &ModelRep, level: f64) -> Vec<usize> {
    let masses = normalized_masses(m);
    let mut order: Vec<usize> = (0..m.grid.len()).collect();
    order.sort_by(|&a, &b| m.grid[b].total_cmp(&m.grid[a]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut cells = Vec::new();
    for i in order {
        if cum >= level {
            break;
        }
        cum += masses[i];
        cells.push(i);
    }
    cells.sort_unstable();
    cells
}

fn interval_groups(edges: &[f64]) -> Vec<Interval> {
    let n = edges.len();
    edges
        .windows(2)
        .enumerate()
        .map(|(i, w)| Interval::new(w[0], w[1], i + 2 == n))
        .collect()
}

/// Quantile of a 1-D grid density. Each grid point's mass is spread evenly
/// over the cell of width `step` centred on it.
pub(crate) fn grid_quantile(m: &ModelRep, p: f64) -> f64 {
    let axis = &m.axes[0];
    let half = axis.step() / 2.0;
    let masses = normalized_masses(m);
    let mut prev = 0.0;
    for (i, w) in masses.iter().enumerate() {
        let cum = prev + w;
        if cum >= p && *w > 0.0 {
            let frac = ((p - prev) / w).clamp(0.0, 1.0);
            let x = axis.point(i) - half + frac * 2.0 * half;
            return x.clamp(axis.lo, axis.hi);
        }
        prev = cum;
    }
    axis.hi
}

fn density_axis<'a>(m: &'a ModelRep, source: Option<&str>) -> Result<&'a str> {
    if m.axes.len() != 1 {
        return Err(Error::param(
            "cut and quantile banding of a density needs a 1-D grid",
        ));
    }
    let name = m.axes[0].name.as_str();
    match source {
        Some(s) if s != name => Err(Error::UnknownColumn(s.to_string())),
        _ => Ok(name),
    }
}

/// Partitions a column (or a density grid) into ranges. Mass levels yield
/// highest-density regions, nested when more than one level is given.
pub fn band(
    rep: &Representation,
    source: Option<&str>,
    levels: &BandLevels,
) -> Result<Representation> {
    let lv = levels.checked()?;
    let mut dropped = 0;
    let summary = match (&rep.kind, levels) {
        (RepKind::Summary(_), _) => {
            return Err(Error::RepresentationKind {
                expected: "sample or model",
                found: "summary",
            })
        }
        (RepKind::Sample(_), BandLevels::Mass(_)) => {
            return Err(Error::RepresentationKind {
                expected: "model (density grid)",
                found: "sample",
            })
        }
        (RepKind::Model(m), _) if m.evaluator != Evaluator::DensityGrid => {
            return Err(Error::RepresentationKind {
                expected: "model (density grid)",
                found: "model",
            })
        }
        (RepKind::Sample(t), _) => {
            let col =
                source.ok_or_else(|| Error::param("band over a sample needs a source column"))?;
            t.numeric_column(col)?;
            let (t, d) = t.drop_missing(&[col])?;
            dropped = d;
            let values = sorted(&t.column(col)?.present_f64());
            match levels {
                BandLevels::Cuts(_) => {
                    let ivs = interval_groups(&lv);
                    let total = values.len() as f64;
                    let groups = ivs
                        .iter()
                        .map(|iv| {
                            let count = values.iter().filter(|&&v| iv.contains(v)).count() as f64;
                            let mass = if total > 0.0 {
                                Some(count / total)
                            } else {
                                None
                            };
                            Group {
                                keys: vec![GroupKey::Interval(*iv)],
                                stats: vec![Some(count), mass],
                            }
                        })
                        .collect();
                    SummaryRep {
                        key_columns: vec![col.to_string()],
                        stat_names: vec!["count".into(), "mass".into()],
                        groups,
                        intervals_nested: false,
                        grid: None,
                    }
                }
                _ => {
                    if values.is_empty() {
                        return Err(Error::NoValues);
                    }
                    let qs: Vec<f64> = lv
                        .iter()
                        .map(|&p| quantile_sorted(&values, p).unwrap())
                        .collect();
                    quantile_summary(col, &lv, &qs)
                }
            }
        }
        (RepKind::Model(m), BandLevels::Cuts(_)) => {
            let axis = density_axis(m, source)?;
            let masses = normalized_masses(m);
            let points = m.axes[0].points();
            let groups = interval_groups(&lv)
                .into_iter()
                .map(|iv| {
                    let mass: f64 = points
                        .iter()
                        .zip(&masses)
                        .filter(|(x, _)| iv.contains(**x))
                        .map(|(_, w)| w)
                        .sum();
                    Group {
                        keys: vec![GroupKey::Interval(iv)],
                        stats: vec![Some(mass)],
                    }
                })
                .collect();
            SummaryRep {
                key_columns: vec![axis.to_string()],
                stat_names: vec!["mass".into()],
                groups,
                intervals_nested: false,
                grid: None,
            }
        }
        (RepKind::Model(m), BandLevels::Quantiles(_)) => {
            let axis = density_axis(m, source)?;
            let qs: Vec<f64> = lv.iter().map(|&p| grid_quantile(m, p)).collect();
            quantile_summary(axis, &lv, &qs)
        }
        (RepKind::Model(m), BandLevels::Mass(_)) => {
            let masses = normalized_masses(m);
            let groups = lv
                .iter()
                .map(|&level| {
                    let cells = highest_density_region(m, level);
                    let mass: f64 = cells.iter().map(|&i| masses[i]).sum();
                    let threshold = cells
                        .iter()
                        .map(|&i| m.grid[i])
                        .fold(f64::INFINITY, f64::min);
                    Group {
                        stats: vec![
                            Some(level),
                            Some(mass),
                            Some(threshold),
                            Some(cells.len() as f64),
                        ],
                        keys: vec![GroupKey::Region { level, cells }],
                    }
                })
                .collect();
            SummaryRep {
                key_columns: vec!["region".into()],
                stat_names: vec![
                    "level".into(),
                    "mass".into(),
                    "density_threshold".into(),
                    "cells".into(),
                ],
                groups,
                intervals_nested: lv.len() > 1,
                grid: Some(m.axes.clone()),
            }
        }
    };
    summary.check()?;
    let entry = LineageEntry::new("band").dropped(dropped);
    Ok(Representation::summary(
        summary,
        Representation::extended(&rep.lineage, entry),
    ))
}

fn quantile_summary(key: &str, levels: &[f64], qs: &[f64]) -> SummaryRep {
    let ivs = interval_groups(qs);
    let groups = ivs
        .into_iter()
        .enumerate()
        .map(|(i, iv)| Group {
            keys: vec![GroupKey::Interval(iv)],
            stats: vec![
                Some(levels[i]),
                Some(levels[i + 1]),
                Some(levels[i + 1] - levels[i]),
            ],
        })
        .collect();
    SummaryRep {
        key_columns: vec![key.to_string()],
        stat_names: vec!["p_lo".into(), "p_hi".into(), "mass".into()],
        groups,
        intervals_nested: false,
        grid: None,
    }
}
