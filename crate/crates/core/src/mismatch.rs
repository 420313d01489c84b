//! Decoherence from a Gaussian-distributed coupling mismatch
//! `lambda_1 = lambda_2 + delta`: every member of a discrete ensemble of
//! `delta` values is evolved exactly and the two-qubit density matrices are
//! averaged with normalized Gaussian weights.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{DynamicsError, Frame, ModelParams, System, TimeGrid};
use crate::measures::{reduced_two_qubit_density, MeasureError};
use crate::qalg::{compensated_sum, ComplexMatrix, ComplexVector, C64};

pub const DEFAULT_SAMPLE_COUNT: usize = 61;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MismatchError {
    #[error("sample count must be odd and >= 1, got {0}")]
    SampleCount(usize),
    #[error("distribution width must be finite and >= 0, got {0}")]
    Width(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Uniform `delta` grid on `[-3 width, 3 width]` with normalized Gaussian weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchEnsemble {
    pub width: f64,
    pub deltas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MismatchEnsemble {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn members(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.deltas.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Weights `f(delta_i) / sum_j f(delta_j)` for `f` the centred Gaussian of
/// standard deviation `width`. A zero width yields the single member
/// `delta = 0` with weight 1.
pub fn gaussian_weight_grid(width: f64, sample_count: usize) -> Result<MismatchEnsemble, MismatchError> {
    if sample_count == 0 || sample_count.is_multiple_of(2) {
        return Err(MismatchError::SampleCount(sample_count));
    }
    if !(width >= 0.0 && width.is_finite()) {
        return Err(MismatchError::Width(width));
    }
    if width == 0.0 || sample_count == 1 {
        return Ok(MismatchEnsemble {
            width,
            deltas: vec![0.0],
            weights: vec![1.0],
        });
    }
    let half = (sample_count - 1) as f64;
    // Integer numerators keep the grid exactly antisymmetric.
    let deltas: Vec<f64> = (0..sample_count)
        .map(|i| 3.0 * width * (2.0 * i as f64 - half) / half)
        .collect();
    let density: Vec<f64> = deltas
        .iter()
        .map(|d| (-d * d / (2.0 * width * width)).exp())
        .collect();
    let total = compensated_sum(density.iter().copied());
    let weights = density.iter().map(|f| f / total).collect();
    Ok(MismatchEnsemble {
        width,
        deltas,
        weights,
    })
}

/// Smallest odd sample count, at least [`DEFAULT_SAMPLE_COUNT`], whose grid
/// spacing `h` keeps the discrete ensemble from rephasing before `t_max`.
///
/// Members `h` apart drift in phase at a rate near `2 sqrt(n_mean) h`, so a
/// uniform grid recurs at `pi / (sqrt(n_mean) h)`; that recurrence is pushed
/// past `ALIAS_MARGIN * t_max`.
pub fn alias_free_sample_count(width: f64, n_mean: f64, t_max: f64) -> Result<usize, MismatchError> {
    if !(width >= 0.0 && width.is_finite()) {
        return Err(MismatchError::Width(width));
    }
    if width == 0.0 || n_mean.is_nan() || n_mean <= 0.0 || t_max.is_nan() || t_max <= 0.0 {
        return Ok(DEFAULT_SAMPLE_COUNT);
    }
    let h_max = std::f64::consts::PI / (n_mean.sqrt() * ALIAS_MARGIN * t_max);
    let intervals = (6.0 * width / h_max).ceil() as usize;
    let count = intervals + 1 + intervals % 2;
    Ok(count.max(DEFAULT_SAMPLE_COUNT))
}

pub const ALIAS_MARGIN: f64 = 1.5;

/// Two-qubit reduced density matrices of one ensemble member at every grid time.
pub fn member_series(
    params: &ModelParams,
    psi0: &ComplexVector,
    grid: &TimeGrid,
    frame: Frame,
) -> Result<Vec<ComplexMatrix>, MismatchError> {
    let system = System::new(params.clone())?;
    let spec = system.spec();
    let trajectory = system.trajectory(psi0, frame)?;
    grid.times()
        .par_iter()
        .map(|&t| Ok(reduced_two_qubit_density(&trajectory.state_at(t), &spec)?))
        .collect()
}

/// `rho_q(t) = sum_i w_i rho_q(t, delta_i)`. Members are evolved in parallel
/// and summed in ascending-`delta` order, so the result does not depend on
/// the number of worker threads.
pub fn ensemble_average_series(
    base: &ModelParams,
    ensemble: &MismatchEnsemble,
    psi0: &ComplexVector,
    grid: &TimeGrid,
    frame: Frame,
) -> Result<Vec<ComplexMatrix>, MismatchError> {
    let members: Vec<Vec<ComplexMatrix>> = ensemble
        .deltas
        .par_iter()
        .map(|&delta| member_series(&base.with_mismatch(delta)?, psi0, grid, frame))
        .collect::<Result<_, _>>()?;
    let mut members = members.into_iter().zip(ensemble.weights.iter().copied());
    let (first, w0) = members.next().expect("ensemble has at least one member");
    let mut acc: Vec<ComplexMatrix> = first.into_iter().map(|m| m * C64::new(w0, 0.0)).collect();
    for (series, w) in members {
        for (a, m) in acc.iter_mut().zip(series) {
            *a += m * C64::new(w, 0.0);
        }
    }
    Ok(acc)
}
