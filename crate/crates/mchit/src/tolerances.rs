use serde::{Deserialize, Serialize};

/// Central numeric configuration. Every tolerance-checked assertion in the
/// crate reads from one of these fields; tests and the CLI share the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Row-sum check for generators (sum 0) and stochastic matrices (sum 1).
    pub row_sum: f64,
    /// How negative a probability entry may be before it is rejected.
    pub entry_negative: f64,
    /// Distribution mass must be within this of 1.
    pub dist_sum: f64,
    /// Residual norm allowed in the stationary solve.
    pub stationary_residual: f64,
    /// Rule law vs stationary, and other 1e-9 level checks.
    pub stationarity: f64,
    /// Detailed-balance slack for the reversibility test.
    pub detailed_balance: f64,
    /// Stopping-rule residuals may dip this far below zero.
    pub residual_clamp: f64,
    /// Poisson tail mass dropped when truncating uniformization series.
    pub poisson_tail: f64,
    /// Relative precision of the continuous mixing-time bisection.
    pub mixing_rel: f64,
    /// Slack granted to every certified inequality.
    pub verify_slack: f64,
    /// Absorption-matrix rows must sum to 1 within this.
    pub harmonic_row_sum: f64,
    /// Two maximizer candidates closer than this are treated as tied.
    pub tie: f64,
    /// Harmonic-measure entries at or below this count as zero support.
    pub support_zero: f64,
    /// Largest state count for exact subset enumeration.
    pub exact_cap: usize,
    /// Uniformization rate is this factor times max |q(x,x)|.
    pub lambda_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            row_sum: 1e-12,
            entry_negative: 1e-12,
            dist_sum: 1e-10,
            stationary_residual: 1e-10,
            stationarity: 1e-9,
            detailed_balance: 1e-9,
            residual_clamp: 1e-10,
            poisson_tail: 1e-13,
            mixing_rel: 1e-6,
            verify_slack: 1e-9,
            harmonic_row_sum: 1e-10,
            tie: 1e-12,
            support_zero: 1e-14,
            exact_cap: 16,
            lambda_margin: 1.05,
        }
    }
}
