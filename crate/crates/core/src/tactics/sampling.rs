use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cell, ColumnKind, LineageEntry, Representation};
use crate::rng::{Seed, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
}

impl NoiseFamily {
    fn spread(&self) -> f64 {
        match *self {
            NoiseFamily::Gaussian { sigma } => sigma,
            NoiseFamily::Laplace { scale } => scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub family: NoiseFamily,
    pub columns: Vec<String>,
}

/// `x = −scale·sign(u)·ln(1 − 2|u|)` for `u` in `(−0.5, 0.5)`.
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Row subset: a seeded Fisher–Yates prefix without replacement, or `n`
/// independent uniform draws with replacement. Rows keep draw order.
pub fn subsample(
    rep: &Representation,
    n: usize,
    replacement: bool,
    seed: Seed,
) -> Result<Representation> {
    let t = rep.as_table()?;
    let rows = t.n_rows();
    let mut rng = seed.rng();
    let picked: Vec<usize> = if replacement {
        if rows == 0 && n > 0 {
            return Err(Error::param(
                "cannot draw with replacement from an empty table",
            ));
        }
        (0..n).map(|_| rng.next_index(rows)).collect()
    } else {
        if n > rows {
            return Err(Error::param(format!(
                "cannot draw {n} rows without replacement from {rows}"
            )));
        }
        let mut idx: Vec<usize> = (0..rows).collect();
        for i in 0..n {
            let j = i + rng.next_index(rows - i);
            idx.swap(i, j);
        }
        idx.truncate(n);
        idx
    };
    let out = t.take_rows(&picked);
    Ok(
        Representation::sample(out).with_lineage(Representation::extended(
            &rep.lineage,
            LineageEntry::new("subsample"),
        )),
    )
}

/// Adds seeded Gaussian (Box–Muller) or Laplace (inverse CDF) noise to the
/// listed columns, column by column in the listed order. Zero spread is the
/// identity.
pub fn noise(rep: &Representation, model: &NoiseModel, seed: Seed) -> Result<Representation> {
    let spread = model.family.spread();
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::param("noise spread must be finite and non-negative"));
    }
    if model.columns.is_empty() {
        return Err(Error::param("noise needs at least one column"));
    }
    let t = rep.as_table()?;
    for c in &model.columns {
        t.numeric_column(c)?;
    }
    let names: Vec<&str> = model.columns.iter().map(String::as_str).collect();
    let (mut t, dropped) = t.drop_missing(&names)?;
    let mut rng = seed.rng();
    if spread > 0.0 {
        for c in &model.columns {
            let i = t.index_of(c)?;
            let col = &mut t.columns[i];
            for cell in col.cells.iter_mut() {
                let v = cell.as_f64().expect("missing rows dropped");
                *cell = Cell::num(v + draw(&model.family, &mut rng));
            }
            col.kind = ColumnKind::Continuous;
            col.bins = None;
        }
    }
    let entry = LineageEntry::new("noise").dropped(dropped);
    Ok(Representation::sample(t).with_lineage(Representation::extended(&rep.lineage, entry)))
}

fn draw(family: &NoiseFamily, rng: &mut SplitMix64) -> f64 {
    match *family {
        NoiseFamily::Gaussian { sigma } => sigma * rng.next_gaussian(),
        NoiseFamily::Laplace { scale } => laplace_inverse_cdf(rng.next_open01() - 0.5, scale),
    }
}

/// Seeded Fisher–Yates shuffle of one column; other columns are untouched.
pub fn permute(rep: &Representation, col: &str, seed: Seed) -> Result<Representation> {
    let t = rep.as_table()?;
    t.index_of(col)?;
    let (mut t, dropped) = t.drop_missing(&[col])?;
    let i = t.index_of(col)?;
    let cells = &mut t.columns[i].cells;
    let mut rng = seed.rng();
    for k in (1..cells.len()).rev() {
        let j = rng.next_index(k + 1);
        cells.swap(k, j);
    }
    let entry = LineageEntry::new("permute").dropped(dropped);
    Ok(Representation::sample(t).with_lineage(Representation::extended(&rep.lineage, entry)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Table};

    fn rep(n: usize) -> Representation {
        let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let w: Vec<f64> = (0..n).map(|i| 100.0 + i as f64).collect();
        Representation::sample(
            Table::new(
                vec![Column::numeric("v", &v), Column::numeric("w", &w)],
                "t",
            )
            .unwrap(),
        )
    }

    fn col(r: &Representation, name: &str) -> Vec<f64> {
        r.as_table().unwrap().column(name).unwrap().present_f64()
    }

    #[test]
    fn laplace_closed_form() {
        assert!((laplace_inverse_cdf(0.25, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((laplace_inverse_cdf(-0.25, 2.0) + 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(laplace_inverse_cdf(0.0, 1.0), 0.0);
    }

    #[test]
    fn subsample_edges() {
        let r = rep(5);
        let all = subsample(&r, 5, false, Seed(1)).unwrap();
        let mut got = col(&all, "v");
        got.sort_by(f64::total_cmp);
        assert_eq!(got, col(&r, "v"));
        assert_eq!(
            subsample(&r, 0, false, Seed(1))
                .unwrap()
                .as_table()
                .unwrap()
                .n_rows(),
            0
        );
        assert!(subsample(&r, 6, false, Seed(1)).is_err());
        assert_eq!(
            subsample(&r, 12, true, Seed(1))
                .unwrap()
                .as_table()
                .unwrap()
                .n_rows(),
            12
        );
    }

    #[test]
    fn subsample_reference_trace() {
        // Independent SplitMix64 + Fisher–Yates prefix, seed 3, 4 of 10.
        let out = subsample(&rep(10), 4, false, Seed(3)).unwrap();
        assert_eq!(col(&out, "v"), vec![1.0, 7.0, 6.0, 3.0]);
        assert_eq!(col(&out, "w"), vec![101.0, 107.0, 106.0, 103.0]);
    }

    #[test]
    fn permute_reference_trace() {
        // Independent SplitMix64 + descending Fisher–Yates, seed 7, 8 rows.
        let out = permute(&rep(8), "v", Seed(7)).unwrap();
        assert_eq!(col(&out, "v"), vec![7.0, 4.0, 6.0, 1.0, 2.0, 5.0, 0.0, 3.0]);
        assert_eq!(col(&out, "w"), col(&rep(8), "w"));
    }

    #[test]
    fn permute_single_row() {
        let r = rep(1);
        assert_eq!(
            permute(&r, "v", Seed(5)).unwrap().as_table().unwrap(),
            r.as_table().unwrap()
        );
    }

    #[test]
    fn zero_noise_is_identity() {
        let r = rep(20);
        for family in [
            NoiseFamily::Gaussian { sigma: 0.0 },
            NoiseFamily::Laplace { scale: 0.0 },
        ] {
            let m = NoiseModel {
                family,
                columns: vec!["v".into()],
            };
            let out = noise(&r, &m, Seed(11)).unwrap();
            assert_eq!(out.as_table().unwrap(), r.as_table().unwrap());
        }
    }

    #[test]
    fn noise_model_json() {
        let m: NoiseModel =
            serde_json::from_str(r#"{"family":"laplace","scale":0.5,"columns":["x"]}"#).unwrap();
        assert_eq!(m.family, NoiseFamily::Laplace { scale: 0.5 });
        assert!(serde_json::from_str::<NoiseModel>(r#"{"family":"cauchy","columns":[]}"#).is_err());
    }

    #[test]
    fn laplace_moments() {
        let zeros = vec![0.0; 100_000];
        let r =
            Representation::sample(Table::new(vec![Column::numeric("z", &zeros)], "t").unwrap());
        let m = NoiseModel {
            family: NoiseFamily::Laplace { scale: 1.0 },
            columns: vec!["z".into()],
        };
        let x = col(&noise(&r, &m, Seed(2024)).unwrap(), "z");
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let mean_abs = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((mean_abs - 1.0).abs() < 0.02, "{mean_abs}");
    }
}
