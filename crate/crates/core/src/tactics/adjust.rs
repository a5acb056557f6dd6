use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Axis, Cell, Evaluator, LineageEntry, ModelRep, RepKind, Representation};

/// Value suppression toward a pivot: `adjusted = pivot + (value − pivot)·w(u)`
/// with `w(u) = clamp(1 − u/u_max, 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentSpec {
    pub pivot: f64,
    pub u_max: f64,
    /// Column (or summary statistic) holding the uncertainty `u`.
    pub uncertainty: String,
}

impl AdjustmentSpec {
    pub fn weight(&self, u: f64) -> f64 {
        (1.0 - u / self.u_max).clamp(0.0, 1.0)
    }

    pub fn apply(&self, value: f64, u: f64) -> f64 {
        self.pivot + (value - self.pivot) * self.weight(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max > 0.0 && self.u_max.is_finite()) || !self.pivot.is_finite() {
            return Err(Error::param(
                "adjustment needs a finite pivot and u_max > 0",
            ));
        }
        Ok(())
    }

    /// The weight function `w` on `[0, u_max]` as a model.
    pub fn as_model(&self, grid_n: usize) -> Result<ModelRep> {
        self.validate()?;
        let axis = Axis {
            name: self.uncertainty.clone(),
            lo: 0.0,
            hi: self.u_max,
            n: grid_n,
        };
        let m = ModelRep {
            grid: axis.points().iter().map(|&u| self.weight(u)).collect(),
            axes: vec![axis],
            evaluator: Evaluator::AdjustmentFn,
            param_names: vec!["pivot".into(), "u_max".into()],
            params: vec![self.pivot, self.u_max],
        };
        m.check()?;
        Ok(m)
    }
}

/// Pulls `value_col` toward the pivot in proportion to uncertainty. Works on
/// sample columns or summary statistics; the spec is recorded in lineage.
pub fn magnitude_adjust(
    rep: &Representation,
    spec: &AdjustmentSpec,
    value_col: &str,
) -> Result<Representation> {
    spec.validate()?;
    let (kind, dropped) = match &rep.kind {
        RepKind::Sample(t) => {
            t.numeric_column(value_col)?;
            t.numeric_column(&spec.uncertainty)?;
            let (mut t, dropped) = t.drop_missing(&[value_col, &spec.uncertainty])?;
            let ui = t.index_of(&spec.uncertainty)?;
            let vi = t.index_of(value_col)?;
            let us: Vec<f64> = t.columns[ui].present_f64();
            let col = &mut t.columns[vi];
            for (cell, u) in col.cells.iter_mut().zip(us) {
                let v = cell.as_f64().expect("missing rows dropped");
                *cell = Cell::num(spec.apply(v, u));
            }
            // adjusted values are no longer bin labels
            col.bins = None;
            (RepKind::Sample(t), dropped)
        }
        RepKind::Summary(s) => {
            let vi = s
                .stat_index(value_col)
                .ok_or_else(|| Error::UnknownColumn(value_col.to_string()))?;
            let ui = s
                .stat_index(&spec.uncertainty)
                .ok_or_else(|| Error::UnknownColumn(spec.uncertainty.clone()))?;
            let mut s = s.clone();
            for g in &mut s.groups {
                g.stats[vi] = match (g.stats[vi], g.stats[ui]) {
                    (Some(v), Some(u)) => Some(spec.apply(v, u)),
                    _ => None,
                };
            }
            (RepKind::Summary(s), 0)
        }
        RepKind::Model(_) => {
            return Err(Error::RepresentationKind {
                expected: "sample or summary",
                found: "model",
            })
        }
    };
    let mut entry = LineageEntry::new("magnitude_adjust").dropped(dropped);
    entry.adjustment = Some(spec.clone());
    Ok(Representation {
        kind,
        lineage: Representation::extended(&rep.lineage, entry),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Table};

    fn spec() -> AdjustmentSpec {
        AdjustmentSpec {
            pivot: 0.0,
            u_max: 2.0,
            uncertainty: "u".into(),
        }
    }

    fn run(values: &[f64], us: &[f64]) -> Vec<f64> {
        let t = Table::new(
            vec![Column::numeric("v", values), Column::numeric("u", us)],
            "t",
        )
        .unwrap();
        let out = magnitude_adjust(&Representation::sample(t), &spec(), "v").unwrap();
        assert_eq!(out.lineage[0].adjustment, Some(spec()));
        out.as_table().unwrap().column("v").unwrap().present_f64()
    }

    #[test]
    fn zero_uncertainty_unchanged() {
        assert_eq!(run(&[10.0, -3.0], &[0.0, 0.0]), vec![10.0, -3.0]);
    }

    #[test]
    fn full_suppression() {
        assert_eq!(run(&[10.0, -3.0], &[2.0, 5.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn half_weight() {
        assert_eq!(run(&[10.0], &[1.0]), vec![5.0]);
    }

    #[test]
    fn weight_shape() {
        let s = spec();
        assert_eq!(s.weight(0.0), 1.0);
        assert_eq!(s.weight(-1.0), 1.0);
        assert!(s.weight(0.5) >= s.weight(1.5));
        let m = s.as_model(3).unwrap();
        assert_eq!(m.grid, vec![1.0, 0.5, 0.0]);
        assert!(AdjustmentSpec { u_max: 0.0, ..s }.validate().is_err());
    }
}
