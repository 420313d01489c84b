//! Closed-form collapse and revival times.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimingError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("revival estimate invalid: denominator {0} <= 0")]
    InvalidEstimate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalEstimate {
    pub t_collapse: f64,
    pub t_revival: f64,
    /// `t_revival / 4`.
    pub t_attractor: f64,
    /// `3 t_revival / 4`.
    pub t_second_attractor: f64,
    /// The collapse time is borrowed from the field-mode formula.
    pub collapse_is_heuristic: bool,
}

impl RevivalEstimate {
    fn new(t_collapse: f64, t_revival: f64, collapse_is_heuristic: bool) -> Self {
        Self {
            t_collapse,
            t_revival,
            t_attractor: 0.25 * t_revival,
            t_second_attractor: 0.75 * t_revival,
            collapse_is_heuristic,
        }
    }

    /// `t_collapse < t_attractor < t_revival`.
    pub fn is_well_separated(&self) -> bool {
        self.t_collapse < self.t_attractor && self.t_attractor < self.t_revival
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, TimingError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(TimingError::NonPositive { name, value })
    }
}

/// `t_c = 2 / lambda`, `t_r = 2 pi sqrt(n_bar) / lambda`.
pub fn field_revival_estimate(n_bar: f64, lambda: f64) -> Result<RevivalEstimate, TimingError> {
    let n_bar = positive("n_bar", n_bar)?;
    let lambda = positive("lambda", lambda)?;
    Ok(RevivalEstimate::new(
        2.0 / lambda,
        2.0 * PI * n_bar.sqrt() / lambda,
        false,
    ))
}

/// Revival time of two qubits coupled to a spin coherent state of `n_spins`
/// spins with `|zeta|^2 = zeta2`, including all finite-N corrections:
///
/// `t_r = 2 pi sqrt(N z / (N + z)) / (lambda D)` with
/// `D = 1 - 3z / (2(N + z)) - (N + z)/(N z) + z/(4 N^2) (N(z - 1) + z(N - 1)) / (N + z)^2`.
pub fn spin_revival_estimate(
    zeta2: f64,
    n_spins: usize,
    lambda: f64,
) -> Result<RevivalEstimate, TimingError> {
    let z = positive("zeta2", zeta2)?;
    let n = positive("n_spins", n_spins as f64)?;
    let lambda = positive("lambda", lambda)?;
    let numerator = 2.0 * PI * (n * z / (n + z)).sqrt();
    let denominator = 1.0 - 3.0 * z / (2.0 * (n + z)) - (n + z) / (n * z)
        + z / (4.0 * n * n) * (n * (z - 1.0) + z * (n - 1.0)) / ((n + z) * (n + z));
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(TimingError::InvalidEstimate(denominator));
    }
    Ok(RevivalEstimate::new(
        2.0 / lambda,
        numerator / (lambda * denominator),
        true,
    ))
}
