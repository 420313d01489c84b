//! Diagnostics of the two-qubit reduced state: populations, linear entropy,
//! Wootters concurrence and tangle, attractor-state probabilities and the
//! tangle over the basin-of-attraction family.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use thiserror::Error;

use crate::dynamics::HilbertSpec;
use crate::qalg::{
    expectation, hermitian_residual, reduce_pure, ComplexMatrix, ComplexVector, EigenSystem,
    QalgError, C64, ONE, ZERO,
};
use crate::statekit::{basin_state, two_qubit_attractor, Branch, StateError};

/// Eigenvalues of a density matrix below `-NEGATIVITY_TOL` are rejected;
/// those in `[-NEGATIVITY_TOL, 0)` are treated as zero.
pub const NEGATIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Qalg(#[from] QalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

fn check_shape(rho: &ComplexMatrix, n: usize) -> Result<(), MeasureError> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(MeasureError::Shape {
            expected: n,
            rows: rho.nrows(),
            cols: rho.ncols(),
        });
    }
    Ok(())
}

/// Reduced density matrix of all the specified qubits (mode traced out).
pub fn reduced_qubit_density(
    psi: &ComplexVector,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix, MeasureError> {
    Ok(reduce_pure(psi, &spec.layout(), &spec.qubit_factors())?)
}

/// `Tr_mode |psi><psi|` for a two-qubit system.
pub fn reduced_two_qubit_density(
    psi: &ComplexVector,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix, MeasureError> {
    if spec.m_q != 2 {
        return Err(MeasureError::InvalidDensity(format!(
            "two-qubit reduction needs m_q = 2, have {}",
            spec.m_q
        )));
    }
    reduced_qubit_density(psi, spec)
}

/// Reduced density matrix of the field mode or composite spin.
pub fn reduced_mode_density(
    psi: &ComplexVector,
    spec: &HilbertSpec,
) -> Result<ComplexMatrix, MeasureError> {
    Ok(reduce_pure(psi, &spec.layout(), &[spec.mode_factor()])?)
}

/// `Tr rho^2` for Hermitian `rho`.
pub fn purity(rho: &ComplexMatrix) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// `1 - Tr rho^2`.
pub fn linear_entropy(rho: &ComplexMatrix) -> f64 {
    1.0 - purity(rho)
}

/// Population of `|ee>`.
pub fn p_ee(rho: &ComplexMatrix) -> f64 {
    rho[(0, 0)].re
}

/// `<psi_att| rho |psi_att>` for the two-qubit attractor of the given branch.
pub fn attractor_probability(rho: &ComplexMatrix, branch: Branch, phase: f64) -> f64 {
    expectation(rho, &two_qubit_attractor(branch, phase).to_vector())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entanglement {
    pub concurrence: f64,
    pub tangle: f64,
}

/// `sigma_y ⊗ sigma_y` in the `ee, eg, ge, gg` basis.
fn spin_flip() -> ComplexMatrix {
    let mut yy = ComplexMatrix::zeros(4, 4);
    yy[(0, 3)] = -ONE;
    yy[(1, 2)] = ONE;
    yy[(2, 1)] = ONE;
    yy[(3, 0)] = -ONE;
    yy
}

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)` and tangle `C^2`.
///
/// The `l_i` are the square roots of the eigenvalues of `sqrt(rho) rho~ sqrt(rho)`
/// with `rho~ = (sy ⊗ sy) rho* (sy ⊗ sy)`. With `rho = W W^dagger`,
/// `W = V diag(sqrt p)`, they are the singular values of `W^T (sy ⊗ sy) W`,
/// which avoids taking square roots of near-zero eigenvalues.
pub fn concurrence_and_tangle(rho: &ComplexMatrix) -> Result<Entanglement, MeasureError> {
    check_shape(rho, 4)?;
    let residual = hermitian_residual(rho);
    if residual > 1e-10 {
        return Err(MeasureError::InvalidDensity(format!(
            "not Hermitian (residual {residual:.3e})"
        )));
    }
    let eig = EigenSystem::hermitian(rho)?;
    if let Some(&p) = eig.eigenvalues.iter().find(|&&p| p < -NEGATIVITY_TOL) {
        return Err(MeasureError::InvalidDensity(format!(
            "negative eigenvalue {p:.3e}"
        )));
    }
    let mut w = eig.eigenvectors.clone();
    for (j, &p) in eig.eigenvalues.iter().enumerate() {
        let s = p.max(0.0).sqrt();
        w.column_mut(j).iter_mut().for_each(|z| *z *= s);
    }
    let x = w.transpose() * spin_flip() * &w;
    let mut sv: Vec<f64> = x.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let concurrence = (sv[0] - sv[1] - sv[2] - sv[3]).max(0.0);
    Ok(Entanglement {
        concurrence,
        tangle: concurrence * concurrence,
    })
}

/// Tangle of the basin state with parameter `a` at `theta = 0`.
pub fn basin_tangle(a: C64) -> Result<f64, MeasureError> {
    let v = basin_state(a, 0.0)?.to_vector();
    Ok(concurrence_and_tangle(&(&v * v.adjoint()))?.tangle)
}

/// One grid point of the basin scan, `a = r e^{i chi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinPoint {
    pub r: f64,
    pub chi: f64,
    pub tangle: f64,
}

/// Radii `r_k = sqrt(k / (2 (steps - 1)))`, uniform in `|a|^2` from 0 to 1/2.
pub fn basin_radii(steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..steps)
            .map(|k| {
                if k == steps - 1 {
                    FRAC_1_SQRT_2
                } else {
                    (k as f64 / (2.0 * (steps - 1) as f64)).sqrt()
                }
            })
            .collect(),
    }
}

/// Tangle over `r` (uniform in `r^2` on `[0, 1/sqrt 2]`) times `chi` (uniform
/// on `[0, 2 pi)`), row-major in `r`.
pub fn basin_scan(r_steps: usize, chi_steps: usize) -> Result<Vec<BasinPoint>, MeasureError> {
    use rayon::prelude::*;
    let radii = basin_radii(r_steps);
    let points: Vec<(f64, f64)> = radii
        .iter()
        .flat_map(|&r| (0..chi_steps).map(move |j| (r, 2.0 * PI * j as f64 / chi_steps as f64)))
        .collect();
    points
        .into_par_iter()
        .map(|(r, chi)| {
            basin_tangle(C64::from_polar(r, chi)).map(|tangle| BasinPoint { r, chi, tangle })
        })
        .collect()
}

/// All diagnostics at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub p_ee: f64,
    pub s_lin: f64,
    pub tangle: f64,
    pub concurrence: f64,
    pub p_att_plus: f64,
    pub p_att_minus: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 7] = [
        "t",
        "p_ee",
        "s_lin",
        "tangle",
        "concurrence",
        "p_att_plus",
        "p_att_minus",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.t,
            self.p_ee,
            self.s_lin,
            self.tangle,
            self.concurrence,
            self.p_att_plus,
            self.p_att_minus,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        Self {
            t: v[0],
            p_ee: v[1],
            s_lin: v[2],
            tangle: v[3],
            concurrence: v[4],
            p_att_plus: v[5],
            p_att_minus: v[6],
        }
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        Self::COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.values()[i])
    }

    /// Diagnostics of a two-qubit density matrix; `phase` is the attractor
    /// phase (field `theta` or spin `phi`).
    pub fn from_two_qubit(t: f64, rho: &ComplexMatrix, phase: f64) -> Result<Self, MeasureError> {
        let ent = concurrence_and_tangle(rho)?;
        Ok(Self {
            t,
            p_ee: p_ee(rho),
            s_lin: linear_entropy(rho),
            tangle: ent.tangle,
            concurrence: ent.concurrence,
            p_att_plus: attractor_probability(rho, Branch::Plus, phase),
            p_att_minus: attractor_probability(rho, Branch::Minus, phase),
        })
    }

    /// Single-qubit diagnostics: `p_ee` holds the excited population and the
    /// attractor columns use the single-qubit attractors; entanglement
    /// columns are zero.
    pub fn from_single_qubit(t: f64, rho: &ComplexMatrix, theta: f64) -> Result<Self, MeasureError> {
        check_shape(rho, 2)?;
        let att = |branch| {
            let a = crate::statekit::single_qubit_attractor(branch, theta);
            expectation(rho, &ComplexVector::from_column_slice(&a))
        };
        Ok(Self {
            t,
            p_ee: rho[(0, 0)].re,
            s_lin: linear_entropy(rho),
            tangle: 0.0,
            concurrence: 0.0,
            p_att_plus: att(Branch::Plus),
            p_att_minus: att(Branch::Minus),
        })
    }
}

/// Checks the density-matrix invariants: Hermitian, unit trace, and no
/// eigenvalue below `-min_eig_tol`.
pub fn validate_density(rho: &ComplexMatrix, tol: f64) -> Result<(), MeasureError> {
    let residual = hermitian_residual(rho);
    if residual > tol {
        return Err(MeasureError::InvalidDensity(format!(
            "Hermitian residual {residual:.3e}"
        )));
    }
    let tr: C64 = rho.diagonal().iter().sum();
    if (tr - ONE).norm() > tol {
        return Err(MeasureError::InvalidDensity(format!("trace {tr}")));
    }
    let min = EigenSystem::hermitian(rho)?.eigenvalues[0];
    if min < -tol {
        return Err(MeasureError::InvalidDensity(format!(
            "min eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// The projector `|v><v|` for a vector.
pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// `SWAP rho SWAP` for two qubits.
pub fn swap_qubits(rho: &ComplexMatrix) -> ComplexMatrix {
    let perm = [0usize, 2, 1, 3];
    ComplexMatrix::from_fn(4, 4, |i, j| rho[(perm[i], perm[j])])
}

/// Maximally mixed two-qubit state.
pub fn maximally_mixed() -> ComplexMatrix {
    ComplexMatrix::from_fn(4, 4, |i, j| if i == j { C64::new(0.25, 0.0) } else { ZERO })
}
