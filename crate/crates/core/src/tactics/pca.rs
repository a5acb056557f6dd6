use crate::error::{Error, Result};
use crate::model::{Axis, Column, Evaluator, LineageEntry, ModelRep, Representation, Table};

use super::linalg::{symmetric_eigen, Matrix};
use super::mean;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    /// Input rows with the projected columns replaced by `pc1..pck`.
    pub embedding: Representation,
    /// `PcaLoadings` model; the grid holds the full eigenvalue spectrum.
    pub model: Representation,
    /// Unit loadings, one per component, in descending eigenvalue order.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

/// Principal components of mean-centred columns from the sample covariance.
pub fn project_pca(rep: &Representation, cols: &[String], k: usize) -> Result<PcaFit> {
    let d = cols.len();
    if d == 0 {
        return Err(Error::param("project_pca needs at least one column"));
    }
    if k > d {
        return Err(Error::param(format!(
            "k = {k} exceeds the {d} projected columns"
        )));
    }
    let t = rep.as_table()?;
    for c in cols {
        t.numeric_column(c)?;
    }
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let (t, dropped) = t.drop_missing(&names)?;
    let n = t.n_rows();
    if n < 2 {
        return Err(Error::param("project_pca needs at least 2 complete rows"));
    }

    let data: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| t.column(c).map(|col| col.present_f64()))
        .collect::<Result<_>>()?;
    let means: Vec<f64> = data.iter().map(|v| mean(v)).collect();
    let centred: Vec<Vec<f64>> = data
        .iter()
        .zip(&means)
        .map(|(v, m)| v.iter().map(|x| x - m).collect())
        .collect();

    let mut cov = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let c = super::linalg::dot(&centred[i], &centred[j]) / (n - 1) as f64;
            cov.set(i, j, c);
            cov.set(j, i, c);
        }
    }
    let pairs = symmetric_eigen(&cov, POWER_TOL, POWER_MAX_ITER);
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let loadings: Vec<Vec<f64>> = pairs.iter().take(k).map(|p| p.1.clone()).collect();

    let mut columns: Vec<Column> = t
        .columns
        .iter()
        .filter(|c| !cols.contains(&c.name))
        .cloned()
        .collect();
    for (j, l) in loadings.iter().enumerate() {
        let scores: Vec<f64> = (0..n)
            .map(|r| centred.iter().zip(l).map(|(c, w)| c[r] * w).sum())
            .collect();
        columns.push(Column::numeric(format!("pc{}", j + 1), &scores));
    }
    let embedding = Table::new(columns, t.source_id.clone())?;

    let mut param_names = Vec::new();
    let mut params = Vec::new();
    for (c, m) in cols.iter().zip(&means) {
        param_names.push(format!("mean({c})"));
        params.push(*m);
    }
    for (j, l) in loadings.iter().enumerate() {
        for (c, w) in cols.iter().zip(l) {
            param_names.push(format!("loading(pc{},{c})", j + 1));
            params.push(*w);
        }
    }
    let mut spectrum = eigenvalues.clone();
    if spectrum.len() < 2 {
        spectrum.push(0.0);
    }
    let model = ModelRep {
        axes: vec![Axis {
            name: "component".into(),
            lo: 1.0,
            hi: spectrum.len() as f64,
            n: spectrum.len(),
        }],
        evaluator: Evaluator::PcaLoadings,
        param_names,
        params,
        grid: spectrum,
    };
    model.check()?;

    let entry = LineageEntry::new("project_pca").dropped(dropped);
    let lineage = Representation::extended(&rep.lineage, entry);
    Ok(PcaFit {
        embedding: Representation::sample(embedding).with_lineage(lineage.clone()),
        model: Representation::model(model, lineage),
        loadings,
        eigenvalues,
    })
}
