//! The reduced (modified) Kähler–Ricci flow on a box in `𝔞₁`.

pub mod banded;
pub mod grid;
pub mod operator;
pub mod path;
pub mod reference;
pub mod run;

pub use grid::{tree_sum, Grid};
pub use operator::{FlowOperator, NodeEval};
pub use path::{LaggedPath, SmoothedPath};
pub use reference::ReferencePotential;
pub use run::{
    fit_xi, gauge_project, min_point, normalize_c, reference_potential, soliton_residual, Flow, FlowConfig, FlowResult, FlowState, Phase2,
    PotentialField, Scheme, TraceRow,
};
