use crate::error::{Error, Result};
use crate::model::{Axis, Column, Evaluator, LineageEntry, ModelRep, Representation};

use super::linalg::{least_squares, Matrix};

/// Both outputs of the prediction tactic.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// `OlsLine` model: parameters `[intercept, slope per regressor]`,
    /// predictions materialized over the regressors' observed ranges.
    pub model: Representation,
    /// Input rows plus a `<y>__fitted` column.
    pub fitted: Representation,
}

/// Ordinary least squares of `y` on `xs` with an intercept.
pub fn predict_ols(rep: &Representation, y: &str, xs: &[String], grid_n: usize) -> Result<OlsFit> {
    if xs.is_empty() {
        return Err(Error::param("predict_ols needs at least one regressor"));
    }
    if grid_n < 2 {
        return Err(Error::param(
            "prediction grid needs at least 2 points per axis",
        ));
    }
    let t = rep.as_table()?;
    t.numeric_column(y)?;
    for x in xs {
        t.numeric_column(x)?;
    }
    let mut used: Vec<&str> = vec![y];
    used.extend(xs.iter().map(String::as_str));
    let (mut t, dropped) = t.drop_missing(&used)?;
    let n = t.n_rows();
    if n < xs.len() + 1 {
        return Err(Error::param(format!(
            "need at least {} complete rows, got {n}",
            xs.len() + 1
        )));
    }

    let mut cols = vec![vec![1.0; n]];
    for x in xs {
        cols.push(t.column(x)?.present_f64());
    }
    let yv = t.column(y)?.present_f64();
    let design = Matrix::from_columns(&cols);
    let names: Vec<String> = std::iter::once("intercept".to_string())
        .chain(xs.iter().cloned())
        .collect();
    let beta = least_squares(&design, &yv).map_err(|j| Error::RankDeficient {
        column: names[j].clone(),
        with: names[..j].to_vec(),
    })?;

    let fitted = design.mul_vec(&beta);
    t.push_column(Column::numeric(format!("{y}__fitted"), &fitted))?;

    let axes: Vec<Axis> = xs
        .iter()
        .zip(&cols[1..])
        .map(|(name, v)| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Axis {
                name: name.clone(),
                lo,
                hi,
                n: grid_n,
            }
        })
        .collect();
    let grid = evaluate_grid(&axes, &beta);
    let model = ModelRep {
        axes,
        evaluator: Evaluator::OlsLine,
        param_names: names,
        params: beta,
        grid,
    };
    model.check()?;

    let entry = LineageEntry::new("predict_ols").dropped(dropped);
    let lineage = Representation::extended(&rep.lineage, entry);
    Ok(OlsFit {
        model: Representation::model(model, lineage.clone()),
        fitted: Representation::sample(t).with_lineage(lineage),
    })
}

fn evaluate_grid(axes: &[Axis], beta: &[f64]) -> Vec<f64> {
    let total: usize = axes.iter().map(|a| a.n).product();
    let mut idx = vec![0usize; axes.len()];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let v = beta[0]
            + axes
                .iter()
                .zip(&idx)
                .zip(&beta[1..])
                .map(|((a, &i), b)| b * a.point(i))
                .sum::<f64>();
        out.push(v);
        for k in (0..axes.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].n {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}
