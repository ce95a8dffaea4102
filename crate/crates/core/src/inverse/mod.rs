//! Inverse problems: residual losses for multi-term variable-order
//! equations with a power-series ansatz, and the network pipeline for the
//! Verhulst-Pearl logistic equation.

mod series;
mod vp;

pub use series::{equation_residual, fit_series, DEFAULT_SERIES_DEGREE, zeta_k, MultiTermProblem, PowerSeriesModel, ScalarRhs, Term};
pub use vp::{
    interp_linear, train_vp, vp_network_residual, vp_rhs, OrderChoice, VpCheckpoint, VpConfig, VpOutcome, VP_U0,
};

use serde::Serialize;

/// Loss components at one iteration. `l_total = λ1·l_eqn + λ2·l_ini`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub iteration: usize,
    pub l_eqn: f64,
    pub l_ini: f64,
    pub l_total: f64,
    /// `(t, α)` samples; filled only for reports that export a trace.
    pub learned_alpha_trace: Vec<(f64, f64)>,
}

impl LossReport {
    pub fn new(iteration: usize, l_eqn: f64, l_ini: f64, lambda1: f64, lambda2: f64) -> Self {
        LossReport {
            iteration,
            l_eqn,
            l_ini,
            l_total: lambda1 * l_eqn + lambda2 * l_ini,
            learned_alpha_trace: Vec::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.l_eqn.is_finite() && self.l_ini.is_finite() && self.l_total.is_finite()
    }
}
