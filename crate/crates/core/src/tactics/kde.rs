use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Axis, Evaluator, LineageEntry, ModelRep, Representation};

use super::{quantile_sorted, sample_sd, sorted};

const INV_SQRT_TAU: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_TAU * (-0.5 * z * z).exp()
}

/// Per-axis kernel bandwidth: a positive number or `"auto"` (Silverman).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    Auto,
}

impl Serialize for Bandwidth {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Fixed(h) => s.serialize_f64(*h),
            Bandwidth::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(h) => Ok(Bandwidth::Fixed(h)),
            Raw::Text(s) if s == "auto" => Ok(Bandwidth::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "bandwidth must be a number or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·n^(−1/5)`, falling back to `sd`
/// when the IQR is zero. `None` when fewer than two values or zero spread.
pub fn silverman_bandwidth(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let s = sorted(values);
    let sd = sample_sd(&s);
    if sd == 0.0 {
        return None;
    }
    let iqr = quantile_sorted(&s, 0.75)? - quantile_sorted(&s, 0.25)?;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Some(0.9 * spread * (s.len() as f64).powf(-0.2))
}

fn resolve_bandwidth(
    axis: &str,
    values: &[f64],
    bw: Bandwidth,
    range: Option<[f64; 2]>,
) -> Result<f64> {
    match bw {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
        Bandwidth::Fixed(h) => Err(Error::param(format!(
            "bandwidth for `{axis}` must be positive, got {h}"
        ))),
        Bandwidth::Auto => {
            if values.len() < 2 {
                return Err(Error::param(format!(
                    "automatic bandwidth for `{axis}` needs at least 2 values"
                )));
            }
            if let Some(h) = silverman_bandwidth(values) {
                return Ok(h);
            }
            // Zero variance: a tenth of the declared grid range.
            match range {
                Some([lo, hi]) if hi > lo => Ok((hi - lo) / 10.0),
                _ => Err(Error::param(format!(
                    "`{axis}` has zero variance; give an explicit bandwidth or grid range"
                ))),
            }
        }
    }
}

fn broadcast<T: Copy>(what: &str, v: &[T], n: usize) -> Result<Vec<T>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(Error::param(format!(
            "{what}: expected 1 or {n} entries, got {k}"
        ))),
    }
}

/// Gaussian (product) kernel density estimate of one or two columns,
/// materialized on a regular grid.
pub fn smooth_kde(
    rep: &Representation,
    cols: &[String],
    bandwidth: &[Bandwidth],
    grid: &[GridSpec],
) -> Result<Representation> {
    if cols.is_empty() || cols.len() > 2 {
        return Err(Error::param("smooth_kde takes one or two columns"));
    }
    let t = rep.as_table()?;
    for c in cols {
        t.numeric_column(c)?;
    }
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    let (t, dropped) = t.drop_missing(&names)?;
    let n = t.n_rows();
    if n == 0 {
        return Err(Error::NoValues);
    }
    let bandwidth = broadcast("bandwidth", bandwidth, cols.len())?;
    let grid = broadcast("grid", grid, cols.len())?;

    let mut axes = Vec::new();
    let mut hs = Vec::new();
    let mut data = Vec::new();
    for (i, c) in cols.iter().enumerate() {
        let values = t.column(c)?.present_f64();
        let h = resolve_bandwidth(c, &values, bandwidth[i], grid[i].range)?;
        let (lo, hi) = match grid[i].range {
            Some([lo, hi]) => (lo, hi),
            None => {
                let s = sorted(&values);
                (s[0] - 3.0 * h, s[s.len() - 1] + 3.0 * h)
            }
        };
        if grid[i].n < 2 || !(lo < hi) {
            return Err(Error::param(format!(
                "grid for `{c}` needs at least 2 points and lo < hi"
            )));
        }
        axes.push(Axis {
            name: c.clone(),
            lo,
            hi,
            n: grid[i].n,
        });
        hs.push(h);
        data.push(values);
    }

    // kernel[a][g * n + r] = φ((grid_g − x_r)/h)/h on axis a
    let kernels: Vec<Vec<f64>> = axes
        .iter()
        .zip(&hs)
        .zip(&data)
        .map(|((axis, &h), xs)| {
            axis.points()
                .iter()
                .flat_map(|&g| xs.iter().map(move |&x| std_normal_pdf((g - x) / h) / h))
                .collect()
        })
        .collect();

    let inv_n = 1.0 / n as f64;
    let values: Vec<f64> = if axes.len() == 1 {
        kernels[0]
            .chunks(n)
            .map(|k| k.iter().sum::<f64>() * inv_n)
            .collect()
    } else {
        let mut out = Vec::with_capacity(axes[0].n * axes[1].n);
        for kx in kernels[0].chunks(n) {
            for ky in kernels[1].chunks(n) {
                out.push(kx.iter().zip(ky).map(|(a, b)| a * b).sum::<f64>() * inv_n);
            }
        }
        out
    };

    let mut param_names: Vec<String> = cols.iter().map(|c| format!("bandwidth({c})")).collect();
    param_names.push("n".to_string());
    let mut params = hs.clone();
    params.push(n as f64);
    let model = ModelRep {
        axes,
        evaluator: Evaluator::DensityGrid,
        param_names,
        params,
        grid: values,
    };
    model.check()?;
    let entry = LineageEntry::new("smooth_kde").dropped(dropped);
    Ok(Representation::model(
        model,
        Representation::extended(&rep.lineage, entry),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Table};

    fn rep(cols: &[(&str, &[f64])]) -> Representation {
        Representation::sample(
            Table::new(
                cols.iter().map(|(n, v)| Column::numeric(*n, v)).collect(),
                "t",
            )
            .unwrap(),
        )
    }

    fn riemann_mass(m: &ModelRep) -> f64 {
        m.grid.iter().sum::<f64>() * m.cell_volume()
    }

    #[test]
    fn bandwidth_parses_auto_and_numbers() {
        let b: Vec<Bandwidth> = serde_json::from_str(r#"["auto", 0.5]"#).unwrap();
        assert_eq!(b, vec![Bandwidth::Auto, Bandwidth::Fixed(0.5)]);
        assert_eq!(
            serde_json::to_string(&Bandwidth::Auto).unwrap(),
            r#""auto""#
        );
    }

    #[test]
    fn single_point_peaks_at_nearest_cell() {
        let r = rep(&[("x", &[0.0])]);
        let out = smooth_kde(
            &r,
            &["x".into()],
            &[Bandwidth::Fixed(1.0)],
            &[GridSpec {
                n: 11,
                range: Some([-2.0, 3.0]),
            }],
        )
        .unwrap();
        let m = out.as_model().unwrap();
        let argmax = (0..m.grid.len())
            .max_by(|&a, &b| m.grid[a].total_cmp(&m.grid[b]))
            .unwrap();
        assert_eq!(m.axes[0].point(argmax), 0.0);
    }

    #[test]
    fn symmetric_pair_density_at_zero() {
        let r = rep(&[("x", &[-1.0, 1.0])]);
        let out = smooth_kde(
            &r,
            &["x".into()],
            &[Bandwidth::Fixed(1.0)],
            &[GridSpec {
                n: 5,
                range: Some([-2.0, 2.0]),
            }],
        )
        .unwrap();
        let m = out.as_model().unwrap();
        // (1/(n·h))·Σφ((0 ∓ 1)/h) = φ(1)
        assert!((m.grid[2] - 0.24197072451914337).abs() < 1e-12);
    }

    #[test]
    fn default_range_integrates_to_one() {
        let r = rep(&[
            ("x", &[0.1, 0.4, 2.0, 2.2, 5.0]),
            ("y", &[1.0, -1.0, 0.5, 0.0, 3.0]),
        ]);
        let out = smooth_kde(
            &r,
            &["x".into(), "y".into()],
            &[Bandwidth::Auto],
            &[GridSpec { n: 80, range: None }],
        )
        .unwrap();
        let m = out.as_model().unwrap();
        assert!((riemann_mass(m) - 1.0).abs() < 0.01);
        assert_eq!(m.grid.len(), 80 * 80);
    }

    #[test]
    fn silverman_fallbacks() {
        // IQR = 0 but sd > 0: uses sd
        let v = [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 9.0];
        let sd = sample_sd(&v);
        let h = silverman_bandwidth(&v).unwrap();
        assert!((h - 0.9 * sd * 8f64.powf(-0.2)).abs() < 1e-12);
        // zero variance
        assert_eq!(silverman_bandwidth(&[2.0, 2.0]), None);
        let r = rep(&[("x", &[2.0, 2.0])]);
        let err = smooth_kde(
            &r,
            &["x".into()],
            &[Bandwidth::Auto],
            &[GridSpec { n: 10, range: None }],
        );
        assert!(err.is_err());
        let ok = smooth_kde(
            &r,
            &["x".into()],
            &[Bandwidth::Auto],
            &[GridSpec {
                n: 10,
                range: Some([0.0, 4.0]),
            }],
        )
        .unwrap();
        assert_eq!(ok.as_model().unwrap().params[0], 0.4);
    }

    #[test]
    fn zero_bandwidth_rejected() {
        let r = rep(&[("x", &[1.0, 1.0])]);
        assert!(smooth_kde(
            &r,
            &["x".into()],
            &[Bandwidth::Fixed(0.0)],
            &[GridSpec {
                n: 10,
                range: Some([0.0, 2.0])
            }]
        )
        .is_err());
    }
}
