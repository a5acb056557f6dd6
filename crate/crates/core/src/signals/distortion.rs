use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Representation, Table};
use crate::pipeline::Output;

use super::eval::{eval_signal, SignalValue};
use super::spec::SignalSpec;

/// A signal measured on the original data and on a disclosed representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub signal: String,
    pub original: SignalValue,
    pub disclosed: SignalValue,
    /// `|disclosed − original|`; present iff both are scalars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    /// `abs_error / |original|`, or `abs_error` when the original is 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_error: Option<f64>,
    /// Interval the disclosed representation pins the answer to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_within_bound: Option<bool>,
    /// The disclosed representation cannot answer the signal.
    pub hidden: bool,
}

fn from_values(id: &str, original: SignalValue, disclosed: SignalValue) -> Distortion {
    let (abs_error, rel_error) = match (original.value(), disclosed.value()) {
        (Some(o), Some(d)) => {
            let a = (d - o).abs();
            (Some(a), Some(if o == 0.0 { a } else { a / o.abs() }))
        }
        _ => (None, None),
    };
    let bound = disclosed.bound();
    Distortion {
        signal: id.to_string(),
        original_within_bound: bound
            .zip(original.value())
            .map(|([lo, hi], o)| lo <= o && o <= hi),
        hidden: disclosed.is_unanswerable(),
        original,
        disclosed,
        abs_error,
        rel_error,
        bound,
    }
}

/// Evaluates `s` on the original table and on `disclosed`. A disclosed
/// representation that lacks what the signal needs counts as hiding it.
pub fn distortion(
    id: &str,
    s: &SignalSpec,
    original: &Table,
    disclosed: &Representation,
) -> Result<Distortion> {
    let o = eval_signal(s, &Representation::sample(original.clone()), Some(original))?;
    let d = eval_signal(s, disclosed, Some(original))
        .unwrap_or_else(|e| SignalValue::unanswerable(e.to_string()));
    Ok(from_values(id, o, d))
}

/// As [`distortion`], for a node output; a bundle answers through its first
/// member that can.
pub fn distortion_of_output(
    id: &str,
    s: &SignalSpec,
    original: &Table,
    out: &Output,
) -> Result<Distortion> {
    let members = out.members();
    let mut first = None;
    for m in &members {
        let d = distortion(id, s, original, m)?;
        if !d.hidden {
            return Ok(d);
        }
        first.get_or_insert(d);
    }
    match first {
        Some(d) => Ok(d),
        None => {
            let o = eval_signal(s, &Representation::sample(original.clone()), Some(original))?;
            Ok(from_values(
                id,
                o,
                SignalValue::unanswerable("empty bundle"),
            ))
        }
    }
}
