//! Gradient descent with fixed schedules, test oracles, and trace checks.

mod check;
mod oracle;
mod trace;

pub use check::{
    dominance_check, safety_sweep, standard_instances, sufficient_decrease_slack,
    tightness_gradient, tightness_gradient_from, tightness_objective, tightness_objective_from,
    trace_scale, Instance, SweepCase, SweepReport, Tightness, EQUALITY_TOL, INEQUALITY_TOL,
};
pub use oracle::{
    huber_oracle, FunctionOracle, Huber, HuberSpec, HuberVariant, LogSumExp, Logistic, Quadratic,
};
pub use trace::{q_report, run_gd, GDTrace, QReport};
