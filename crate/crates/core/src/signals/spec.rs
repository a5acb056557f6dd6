use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PipelineGraph;

/// What a signal asks of the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    /// Share of values strictly above `threshold`.
    Exceedance {
        threshold: f64,
    },
    Quantile {
        p: f64,
    },
    /// Local maxima whose prominence, as a fraction of the highest peak, is
    /// at least `prominence`.
    ModeCount {
        prominence: f64,
    },
    /// Connected components of the highest-density region at `mass`.
    ClusterCount {
        mass: f64,
    },
    ClusterSummary {
        mass: f64,
    },
    ReidentificationRisk {
        k: usize,
    },
}

impl SignalKind {
    pub fn name(&self) -> &'static str {
        match self {
            SignalKind::Exceedance { .. } => "exceedance",
            SignalKind::Quantile { .. } => "quantile",
            SignalKind::ModeCount { .. } => "mode_count",
            SignalKind::ClusterCount { .. } => "cluster_count",
            SignalKind::ClusterSummary { .. } => "cluster_summary",
            SignalKind::ReidentificationRisk { .. } => "reidentification_risk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub kind: SignalKind,
    /// Target columns or axes. One for the univariate kinds; one or two for
    /// clusters; any number (empty = all shared numeric) for re-identification.
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub connectivity: Connectivity,
    /// Kernel bandwidth used when a shape signal is asked of a sample;
    /// Silverman's rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    /// Grid points per axis for that density estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
}

impl SignalSpec {
    pub fn new(kind: SignalKind, columns: &[&str]) -> Self {
        SignalSpec {
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            connectivity: Connectivity::Four,
            bandwidth: None,
            grid_n: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            SignalKind::Exceedance { threshold } => threshold.is_finite(),
            SignalKind::Quantile { p } => (0.0..=1.0).contains(&p),
            SignalKind::ModeCount { prominence } => prominence >= 0.0 && prominence.is_finite(),
            SignalKind::ClusterCount { mass } | SignalKind::ClusterSummary { mass } => {
                mass > 0.0 && mass < 1.0
            }
            SignalKind::ReidentificationRisk { k } => k >= 1,
        };
        if !ok {
            return Err(Error::param(format!(
                "{} parameter out of range",
                self.kind.name()
            )));
        }
        let n = self.columns.len();
        let cols_ok = match self.kind {
            SignalKind::Exceedance { .. }
            | SignalKind::Quantile { .. }
            | SignalKind::ModeCount { .. } => n == 1,
            SignalKind::ClusterCount { .. } | SignalKind::ClusterSummary { .. } => n == 1 || n == 2,
            SignalKind::ReidentificationRisk { .. } => true,
        };
        if !cols_ok {
            return Err(Error::param(format!(
                "{} takes {n} columns",
                self.kind.name()
            )));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::param("bandwidth must be positive"));
            }
        }
        if matches!(self.grid_n, Some(n) if n < 2) {
            return Err(Error::param("grid_n must be at least 2"));
        }
        Ok(())
    }
}

/// A signal bound to the pipeline output it is evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDecl {
    pub id: String,
    /// Node whose output is measured.
    pub output: String,
    /// Input table the original value is computed from; the first bound
    /// source when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(flatten)]
    pub spec: SignalSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    /// Keep the signal: smaller error is better.
    Preserve,
    /// Destroy the signal: larger error, or none answerable, is better.
    Hide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub signal: String,
    pub goal: Goal,
}

/// One swept dimension: all `targets` take each value in turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaryAxis {
    /// `node_id.param.path`, e.g. `cx.bins.equal_width`.
    pub targets: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    /// `[from, to, step]`, inclusive; appended to `values`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 3]>,
}

impl VaryAxis {
    pub fn points(&self) -> Result<Vec<f64>> {
        let mut v = self.values.clone();
        if let Some([from, to, step]) = self.range {
            if !(step > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
                return Err(Error::param("range needs from <= to and step > 0"));
            }
            let n = ((to - from) / step + 1e-9).floor() as usize;
            v.extend((0..=n).map(|i| from + i as f64 * step));
        }
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("each swept parameter needs finite values"));
        }
        Ok(v)
    }
}

pub const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub vary: Vec<VaryAxis>,
    pub objectives: Vec<Objective>,
}

impl SweepSpec {
    pub fn grid_size(&self) -> Result<usize> {
        let mut n: usize = 1;
        for a in &self.vary {
            n = n.saturating_mul(a.points()?.len());
        }
        Ok(n)
    }

    /// Static checks against the graph the sweep belongs to.
    pub fn check(&self, g: &PipelineGraph) -> Result<()> {
        if self.vary.is_empty() || self.objectives.is_empty() {
            return Err(Error::param(
                "sweep needs at least one varied parameter and one objective",
            ));
        }
        let n = self.grid_size()?;
        if n > MAX_SWEEP_POINTS {
            return Err(Error::param(format!(
                "sweep grid has {n} points, limit {MAX_SWEEP_POINTS}"
            )));
        }
        for a in &self.vary {
            if a.targets.is_empty() {
                return Err(Error::param("swept parameter without targets"));
            }
            for t in &a.targets {
                super::sweep::resolve_target(g, t)?;
            }
        }
        for o in &self.objectives {
            if !g.signals.iter().any(|s| s.id == o.signal) {
                return Err(Error::param(format!(
                    "objective names unknown signal `{}`",
                    o.signal
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decl_json() {
        let d: SignalDecl = serde_json::from_str(
            r#"{"id":"clusters","output":"band","kind":"cluster_count","mass":0.85,"columns":["x","y"]}"#,
        )
        .unwrap();
        assert_eq!(d.spec.kind, SignalKind::ClusterCount { mass: 0.85 });
        assert_eq!(d.spec.connectivity, Connectivity::Four);
        d.spec.validate().unwrap();
        let back = serde_json::to_value(&d).unwrap();
        assert_eq!(back["kind"], "cluster_count");
        assert!(back.get("connectivity").is_none());
    }

    #[test]
    fn parameter_ranges() {
        let bad = [
            SignalKind::Exceedance {
                threshold: f64::NAN,
            },
            SignalKind::Quantile { p: 1.5 },
            SignalKind::ModeCount { prominence: -0.1 },
            SignalKind::ClusterCount { mass: 1.0 },
            SignalKind::ReidentificationRisk { k: 0 },
        ];
        for k in bad {
            assert!(SignalSpec::new(k, &["x"]).validate().is_err(), "{k:?}");
        }
        assert!(
            SignalSpec::new(SignalKind::Quantile { p: 0.5 }, &["x", "y"])
                .validate()
                .is_err()
        );
    }

    #[test]
    fn range_points() {
        let a = VaryAxis {
            targets: vec!["n.k".into()],
            values: vec![],
            range: Some([4.0, 40.0, 4.0]),
        };
        let p = a.points().unwrap();
        assert_eq!(p.len(), 10);
        assert_eq!(p[9], 40.0);
    }
}
