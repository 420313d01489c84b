//! Dense complex linear algebra used by every other module: Kronecker
//! products, partial traces over tensor-product layouts, Hermitian
//! eigendecomposition, and exact propagation `exp(-iHt)`.
//!
//! Basis convention: in a tensor product the left (first) factor varies
//! slowest, so for factors `[d0, d1, d2]` the flat index of `(i0, i1, i2)` is
//! `(i0 * d1 + i1) * d2 + i2`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Relative tolerance on `max |H - H^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian: max |H - H^dagger| = {residual:.3e}")]
    NotHermitian { residual: f64 },
    #[error("eigendecomposition failed: reconstruction residual {residual:.3e}")]
    Eigen { residual: f64 },
    #[error("invalid subsystem selection: {0}")]
    Subsystem(String),
    #[error("empty operand")]
    Empty,
}

/// Kronecker product `a ⊗ b`, left factor varying slowest.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_vector(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Largest entry of `|m - m^dagger|`.
pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    if m.ncols() != n {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Outer product `|a><b|`.
pub fn outer(a: &ComplexVector, b: &ComplexVector) -> ComplexMatrix {
    a * b.adjoint()
}

/// `<a|m|a>` as a real number (imaginary part dropped).
pub fn expectation(m: &ComplexMatrix, a: &ComplexVector) -> f64 {
    (a.adjoint() * m * a)[(0, 0)].re
}

/// Dimensions of the factors of a tensor-product space, slowest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorLayout {
    dims: Vec<usize>,
}

impl TensorLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self, QalgError> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(QalgError::Empty);
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for f in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * self.dims[f + 1];
        }
        strides
    }

    /// Flat offsets for every multi-index over `factors` (in the given order,
    /// first factor slowest).
    fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offs = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offs.len() * self.dims[f]);
            for &o in &offs {
                for i in 0..self.dims[f] {
                    next.push(o + i * strides[f]);
                }
            }
            offs = next;
        }
        offs
    }

    /// Splits into (kept offsets, traced offsets) after validating `keep`.
    fn split(&self, keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>), QalgError> {
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(QalgError::Subsystem(format!(
                "kept factors must be strictly increasing, got {keep:?}"
            )));
        }
        if let Some(&bad) = keep.iter().find(|&&f| f >= self.dims.len()) {
            return Err(QalgError::Subsystem(format!(
                "factor {bad} out of range for {} factors",
                self.dims.len()
            )));
        }
        let traced: Vec<usize> = (0..self.dims.len()).filter(|f| !keep.contains(f)).collect();
        Ok((self.offsets(keep), self.offsets(&traced)))
    }
}

/// Partial trace of `rho` keeping the factors listed in `keep`.
pub fn partial_trace(
    rho: &ComplexMatrix,
    layout: &TensorLayout,
    keep: &[usize],
) -> Result<ComplexMatrix, QalgError> {
    let dim = layout.total_dim();
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(QalgError::DimensionMismatch {
            expected: dim,
            found: rho.nrows().max(rho.ncols()),
        });
    }
    let (kept, traced) = layout.split(keep)?;
    let n = kept.len();
    Ok(ComplexMatrix::from_fn(n, n, |a, b| {
        traced
            .iter()
            .map(|&t| rho[(kept[a] + t, kept[b] + t)])
            .sum()
    }))
}

/// Reduced density matrix of the pure state `psi` over the kept factors,
/// without forming `|psi><psi|`.
pub fn reduce_pure(
    psi: &ComplexVector,
    layout: &TensorLayout,
    keep: &[usize],
) -> Result<ComplexMatrix, QalgError> {
    let dim = layout.total_dim();
    if psi.len() != dim {
        return Err(QalgError::DimensionMismatch {
            expected: dim,
            found: psi.len(),
        });
    }
    let (kept, traced) = layout.split(keep)?;
    let n = kept.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v: C64 = traced
                .iter()
                .map(|&t| psi[kept[a] + t] * psi[kept[b] + t].conj())
                .sum();
            out[(a, b)] = v;
            out[(b, a)] = v.conj();
        }
        out[(a, a)].im = 0.0;
    }
    Ok(out)
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending and
/// eigenvectors stored as the columns of a unitary matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn hermitian(h: &ComplexMatrix) -> Result<Self, QalgError> {
        if h.nrows() != h.ncols() {
            return Err(QalgError::DimensionMismatch {
                expected: h.nrows(),
                found: h.ncols(),
            });
        }
        if h.nrows() == 0 {
            return Err(QalgError::Empty);
        }
        let residual = hermitian_residual(h);
        if residual > HERMITIAN_TOL * max_abs(h).max(1.0) {
            return Err(QalgError::NotHermitian { residual });
        }
        let n = h.nrows();
        if n == 1 {
            return Ok(Self {
                eigenvalues: vec![h[(0, 0)].re],
                eigenvectors: identity(1),
            });
        }
        let eig = SymmetricEigen::new(h.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if eigenvalues.iter().any(|e| !e.is_finite()) {
            return Err(QalgError::Eigen {
                residual: f64::INFINITY,
            });
        }
        let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(E) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(e);
        }
        scaled * v.adjoint()
    }

    /// Applies `f` to the spectrum: `V diag(f(E)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &e) in self.eigenvalues.iter().enumerate() {
            let fe = f(e);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fe);
        }
        scaled * v.adjoint()
    }
}

/// Hermitian operator stored as a map of nonzero entries. Used for
/// Hamiltonians too large to hold densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    entries: BTreeMap<(usize, usize), C64>,
}

impl SparseHermitian {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_diagonal(&mut self, i: usize, value: f64) {
        *self.entries.entry((i, i)).or_insert(ZERO) += C64::new(value, 0.0);
    }

    /// Adds `value` at `(i, j)` and its conjugate at `(j, i)`.
    pub fn add_pair(&mut self, i: usize, j: usize, value: C64) {
        if i == j {
            self.add_diagonal(i, value.re);
            return;
        }
        *self.entries.entry((i, j)).or_insert(ZERO) += value;
        *self.entries.entry((j, i)).or_insert(ZERO) += value.conj();
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries.get(&(i, j)).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.iter() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn mul_vec(&self, v: &ComplexVector) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.dim);
        for (i, j, h) in self.iter() {
            out[i] += h * v[j];
        }
        out
    }

    /// Groups basis indices into the connected components of the nonzero
    /// pattern. Each group is sorted; groups are ordered by smallest index.
    pub fn connected_blocks(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.dim).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, j, v) in self.iter() {
            if i != j && v != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.dim {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        groups.into_values().collect()
    }
}

impl From<&ComplexMatrix> for SparseHermitian {
    fn from(m: &ComplexMatrix) -> Self {
        let mut entries = BTreeMap::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != ZERO {
                    entries.insert((i, j), m[(i, j)]);
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    indices: Vec<usize>,
    eigen: EigenSystem,
}

/// Exact propagator `exp(-iHt)` from one eigendecomposition of a
/// time-independent Hermitian `H`, optionally split into invariant blocks.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    blocks: Vec<Block>,
}

impl Propagator {
    /// Diagonalizes `h` as a single dense block.
    pub fn dense(h: &ComplexMatrix) -> Result<Self, QalgError> {
        let eigen = EigenSystem::hermitian(h)?;
        Ok(Self {
            dim: h.nrows(),
            blocks: vec![Block {
                indices: (0..h.nrows()).collect(),
                eigen,
            }],
        })
    }

    /// Diagonalizes each connected block of `h` separately.
    pub fn block_diagonal(h: &SparseHermitian) -> Result<Self, QalgError> {
        let blocks = h
            .connected_blocks()
            .into_iter()
            .map(|indices| {
                let n = indices.len();
                let sub = ComplexMatrix::from_fn(n, n, |a, b| h.get(indices[a], indices[b]));
                EigenSystem::hermitian(&sub).map(|eigen| Block { indices, eigen })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            dim: h.dim(),
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// All eigenvalues, sorted ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.eigen.eigenvalues.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Projects `psi0` onto the eigenbasis once so that any number of times can
    /// be evaluated cheaply.
    pub fn prepare(&self, psi0: &ComplexVector) -> Result<PreparedState<'_>, QalgError> {
        if psi0.len() != self.dim {
            return Err(QalgError::DimensionMismatch {
                expected: self.dim,
                found: psi0.len(),
            });
        }
        let coefficients = self
            .blocks
            .iter()
            .map(|b| {
                let local = ComplexVector::from_iterator(
                    b.indices.len(),
                    b.indices.iter().map(|&i| psi0[i]),
                );
                b.eigen.eigenvectors.ad_mul(&local)
            })
            .collect();
        Ok(PreparedState {
            propagator: self,
            coefficients,
        })
    }
}

/// An initial state expanded in a propagator's eigenbasis.
#[derive(Debug, Clone)]
pub struct PreparedState<'a> {
    propagator: &'a Propagator,
    coefficients: Vec<ComplexVector>,
}

impl PreparedState<'_> {
    /// `psi(t) = V exp(-iEt) V^dagger psi(0)`.
    pub fn at(&self, t: f64) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.propagator.dim);
        self.write_at(t, out.as_mut_slice());
        out
    }

    /// Writes `psi(t)` into `out` without allocating.
    pub fn write_at(&self, t: f64, out: &mut [C64]) {
        assert_eq!(out.len(), self.propagator.dim, "output length");
        let mut phased: Vec<C64> = Vec::new();
        for (block, coeffs) in self.propagator.blocks.iter().zip(&self.coefficients) {
            phased.clear();
            phased.extend(
                block
                    .eigen
                    .eigenvalues
                    .iter()
                    .zip(coeffs.iter())
                    .map(|(&e, &c)| c * C64::from_polar(1.0, -e * t)),
            );
            let v = &block.eigen.eigenvectors;
            for (r, &i) in block.indices.iter().enumerate() {
                out[i] = phased
                    .iter()
                    .enumerate()
                    .map(|(c, &p)| v[(r, c)] * p)
                    .sum();
            }
        }
    }
}

/// Evolves `psi0` under `h` to each of `times` using a single dense
/// eigendecomposition.
pub fn eigh_propagate(
    h: &ComplexMatrix,
    psi0: &ComplexVector,
    times: &[f64],
) -> Result<Vec<ComplexVector>, QalgError> {
    let propagator = Propagator::dense(h)?;
    let prepared = propagator.prepare(psi0)?;
    Ok(times.iter().map(|&t| prepared.at(t)).collect())
}

/// Kahan-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
