use crate::error::{Error, Result};
use crate::model::{Evaluator, LineageEntry, ModelRep, RepKind, Representation, SummaryRep, Table};

/// Restricts a representation to the named columns (sample), statistics
/// (summary, group keys must be kept) or axes (density grids are marginalized).
/// Dropped names are recorded in lineage.
pub fn encode_select(rep: &Representation, cols: &[String]) -> Result<Representation> {
    if cols.is_empty() {
        return Err(Error::param("encode_select needs at least one column"));
    }
    let (kind, dropped) = match &rep.kind {
        RepKind::Sample(t) => {
            for c in cols {
                t.index_of(c)?;
            }
            let keep: Vec<_> = t
                .columns
                .iter()
                .filter(|c| cols.contains(&c.name))
                .cloned()
                .collect();
            let dropped = t
                .columns
                .iter()
                .filter(|c| !cols.contains(&c.name))
                .map(|c| c.name.clone())
                .collect();
            (
                RepKind::Sample(Table {
                    columns: keep,
                    source_id: t.source_id.clone(),
                }),
                dropped,
            )
        }
        RepKind::Summary(s) => {
            for c in cols {
                if s.key_index(c).is_none() && s.stat_index(c).is_none() {
                    return Err(Error::UnknownColumn(c.clone()));
                }
            }
            if let Some(k) = s.key_columns.iter().find(|k| !cols.contains(k)) {
                return Err(Error::param(format!(
                    "cannot drop group key `{k}`; merging groups is aggregate's job"
                )));
            }
            let keep: Vec<usize> = (0..s.stat_names.len())
                .filter(|&i| cols.contains(&s.stat_names[i]))
                .collect();
            let dropped = s
                .stat_names
                .iter()
                .filter(|n| !cols.contains(n))
                .cloned()
                .collect();
            let out = SummaryRep {
                key_columns: s.key_columns.clone(),
                stat_names: keep.iter().map(|&i| s.stat_names[i].clone()).collect(),
                groups: s
                    .groups
                    .iter()
                    .map(|g| crate::model::Group {
                        keys: g.keys.clone(),
                        stats: keep.iter().map(|&i| g.stats[i]).collect(),
                    })
                    .collect(),
                intervals_nested: s.intervals_nested,
                grid: s.grid.clone(),
            };
            (RepKind::Summary(out), dropped)
        }
        RepKind::Model(m) => {
            for c in cols {
                if m.axis_index(c).is_none() {
                    return Err(Error::UnknownColumn(c.clone()));
                }
            }
            let dropped: Vec<String> = m
                .axes
                .iter()
                .filter(|a| !cols.contains(&a.name))
                .map(|a| a.name.clone())
                .collect();
            if dropped.is_empty() {
                (RepKind::Model(m.clone()), dropped)
            } else if m.evaluator == Evaluator::DensityGrid {
                (RepKind::Model(marginalize(m, cols)), dropped)
            } else {
                return Err(Error::param(format!(
                    "{:?} models cannot drop axes",
                    m.evaluator
                )));
            }
        }
    };
    let mut entry = LineageEntry::new("encode_select");
    entry.dropped_columns = dropped;
    Ok(Representation {
        kind,
        lineage: Representation::extended(&rep.lineage, entry),
    })
}

/// Integrates a density grid over every axis not in `keep`.
fn marginalize(m: &ModelRep, keep: &[String]) -> ModelRep {
    let shape = m.shape();
    let kept: Vec<usize> = (0..m.axes.len())
        .filter(|&a| keep.contains(&m.axes[a].name))
        .collect();
    let out_shape: Vec<usize> = kept.iter().map(|&a| shape[a]).collect();
    let mut out = vec![0.0; out_shape.iter().product()];
    let dropped_volume: f64 = (0..m.axes.len())
        .filter(|a| !kept.contains(a))
        .map(|a| m.axes[a].step())
        .product();
    let mut idx = vec![0usize; shape.len()];
    for v in &m.grid {
        let flat = kept.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        out[flat] += v * dropped_volume;
        for a in (0..shape.len()).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    ModelRep {
        axes: kept.iter().map(|&a| m.axes[a].clone()).collect(),
        evaluator: m.evaluator,
        param_names: m.param_names.clone(),
        params: m.params.clone(),
        grid: out,
    }
}
