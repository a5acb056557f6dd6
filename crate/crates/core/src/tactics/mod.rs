//! Disclosure tactics. Each maps an input representation to an output
//! representation and appends one entry to its lineage.

mod adjust;
mod aggregate;
mod band;
mod derive;
mod kde;
pub(crate) mod linalg;
mod ols;
mod partition;
mod pca;
mod sampling;
mod select;

pub use adjust::{magnitude_adjust, AdjustmentSpec};
pub use aggregate::{aggregate, Stat, StatSpec};
pub use band::{band, highest_density_region, BandLevels};
pub use derive::{derive, Expr};
pub use kde::{silverman_bandwidth, smooth_kde, std_normal_pdf, Bandwidth, GridSpec};
pub use ols::{predict_ols, OlsFit};
pub use partition::{categorize, classify, BinSpec};
pub use pca::{project_pca, PcaFit};
pub use sampling::{laplace_inverse_cdf, noise, permute, subsample, NoiseFamily, NoiseModel};
pub use select::encode_select;

use crate::model::{Representation, Table};

/// Tactic names as they appear in lineage and pipeline documents.
pub const TACTICS: [&str; 14] = [
    "classify",
    "categorize",
    "aggregate",
    "band",
    "derive",
    "encode_select",
    "subsample",
    "noise",
    "permute",
    "smooth_kde",
    "magnitude_adjust",
    "predict_ols",
    "project_pca",
    "full_disclosure",
];

/// Wraps a table unchanged, with no lineage.
pub fn full_disclosure(t: Table) -> Representation {
    Representation::sample(t)
}

/// Quantile of an ascending slice by linear interpolation at rank `p·(n−1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi || frac == 0.0 {
        return Some(sorted[lo]);
    }
    Some(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Family};

    #[test]
    fn quantile_convention() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.25), Some(3.0));
        assert_eq!(quantile_sorted(&v, 0.5), Some(5.0));
        assert_eq!(quantile_sorted(&v, 0.75), Some(7.0));
        assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5), Some(1.5));
        assert_eq!(quantile_sorted(&[], 0.5), None);
    }

    #[test]
    fn full_disclosure_is_identity() {
        let t = Table::new(vec![Column::numeric("a", &[1.0, 2.0])], "src").unwrap();
        let rep = full_disclosure(t.clone());
        assert_eq!(rep.as_table().unwrap(), &t);
        assert!(rep.lineage.is_empty());
        assert_eq!(rep.family(), Family::Full);
    }
}
