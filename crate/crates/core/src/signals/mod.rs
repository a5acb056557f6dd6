//! Task-relevant signals, their evaluation on any representation, distortion
//! against the original data, and parameter sweeps.

mod distortion;
mod eval;
mod spec;
mod sweep;

pub use distortion::{distortion, distortion_of_output, Distortion};
pub use eval::{count_modes, eval_signal, Cluster, SignalValue};
pub use spec::{
    Connectivity, Goal, Objective, SignalDecl, SignalKind, SignalSpec, SweepSpec, VaryAxis,
    MAX_SWEEP_POINTS,
};
pub(crate) use sweep::original_for;
pub use sweep::{measure, pareto_flags, resolve_target, set_param, sweep, SweepPoint, SweepResult};
