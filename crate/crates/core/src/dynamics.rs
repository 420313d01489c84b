//! Hamiltonians for `m_q` qubits coupled to a bosonic field mode or to a
//! composite spin restricted to its symmetric `j = N/2` Dicke ladder, and
//! exact time evolution of the joint state.
//!
//! Basis index: qubits slowest (qubit 0 first, `|e> = 0`, `|g> = 1`), then the
//! mode index `n` fastest. For the field `n` is the photon number; for the
//! composite spin `n` labels `|N/2, n - N/2>` (number of excited spins).

use thiserror::Error;

use crate::qalg::{
    tensor_vector, ComplexVector, Propagator, PreparedState, QalgError, SparseHermitian,
    TensorLayout, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid model parameters: {0}")]
    Params(String),
    #[error("invalid time grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Qalg(#[from] QalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Field mode truncated to photon numbers `0..=n_max`.
    Field { n_max: usize },
    /// Composite spin of `n_spins` spin-1/2 particles.
    Spin { n_spins: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    /// Mode (or composite-spin) frequency.
    pub omega: f64,
    /// Qubit frequencies `Omega_i`.
    pub qubit_freqs: Vec<f64>,
    /// Couplings `lambda_i`.
    pub couplings: Vec<f64>,
}

impl ModelParams {
    pub fn new(
        kind: ModelKind,
        omega: f64,
        qubit_freqs: Vec<f64>,
        couplings: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        let p = Self {
            kind,
            omega,
            qubit_freqs,
            couplings,
        };
        p.validate()?;
        Ok(p)
    }

    /// Identical qubits at resonance with the mode, uniform coupling.
    pub fn resonant(
        kind: ModelKind,
        omega: f64,
        m_q: usize,
        lambda: f64,
    ) -> Result<Self, DynamicsError> {
        Self::new(kind, omega, vec![omega; m_q], vec![lambda; m_q])
    }

    /// Same model with `lambda_1 = lambda_2 + delta` (two qubits only).
    pub fn with_mismatch(&self, delta: f64) -> Result<Self, DynamicsError> {
        if self.m_q() != 2 {
            return Err(DynamicsError::Params(format!(
                "coupling mismatch needs exactly 2 qubits, have {}",
                self.m_q()
            )));
        }
        let mut out = self.clone();
        out.couplings[0] = self.couplings[1] + delta;
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |msg: String| Err(DynamicsError::Params(msg));
        if self.qubit_freqs.is_empty() {
            return bad("at least one qubit is required".into());
        }
        if self.qubit_freqs.len() != self.couplings.len() {
            return bad(format!(
                "{} qubit frequencies but {} couplings",
                self.qubit_freqs.len(),
                self.couplings.len()
            ));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if let Some(f) = self.qubit_freqs.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return bad(format!("qubit frequencies must be positive, got {f}"));
        }
        if let Some(l) = self.couplings.iter().find(|l| !l.is_finite()) {
            return bad(format!("coupling must be finite, got {l}"));
        }
        match self.kind {
            ModelKind::Field { n_max } if n_max < 1 => bad("n_max must be at least 1".into()),
            ModelKind::Spin { n_spins } if n_spins < 1 => bad("n_spins must be at least 1".into()),
            _ => Ok(()),
        }
    }

    pub fn m_q(&self) -> usize {
        self.couplings.len()
    }

    pub fn hilbert(&self) -> HilbertSpec {
        let mode_dim = match self.kind {
            ModelKind::Field { n_max } => n_max + 1,
            ModelKind::Spin { n_spins } => n_spins + 1,
        };
        HilbertSpec {
            m_q: self.m_q(),
            mode_dim,
        }
    }
}

/// Qubits ⊗ mode space, qubits slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpec {
    pub m_q: usize,
    pub mode_dim: usize,
}

impl HilbertSpec {
    pub fn qubit_dim(&self) -> usize {
        1 << self.m_q
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.mode_dim
    }

    /// Factor dimensions `[2, ..., 2, mode_dim]`.
    pub fn layout(&self) -> TensorLayout {
        let mut dims = vec![2; self.m_q];
        dims.push(self.mode_dim);
        TensorLayout::new(dims).expect("nonzero dims")
    }

    /// Factor indices of the qubits, for partial traces.
    pub fn qubit_factors(&self) -> Vec<usize> {
        (0..self.m_q).collect()
    }

    pub fn mode_factor(&self) -> usize {
        self.m_q
    }

    pub fn index(&self, qubits: usize, n: usize) -> usize {
        qubits * self.mode_dim + n
    }

    /// Whether qubit `i` is excited in the qubit basis index `qubits`.
    pub fn is_excited(&self, qubits: usize, i: usize) -> bool {
        (qubits >> (self.m_q - 1 - i)) & 1 == 0
    }

    pub fn excited_count(&self, qubits: usize) -> usize {
        (0..self.m_q).filter(|&i| self.is_excited(qubits, i)).count()
    }

    /// `|qubits> ⊗ |mode>`.
    pub fn product_state(
        &self,
        qubits: &ComplexVector,
        mode: &ComplexVector,
    ) -> Result<ComplexVector, DynamicsError> {
        if qubits.len() != self.qubit_dim() {
            return Err(QalgError::DimensionMismatch {
                expected: self.qubit_dim(),
                found: qubits.len(),
            }
            .into());
        }
        if mode.len() != self.mode_dim {
            return Err(QalgError::DimensionMismatch {
                expected: self.mode_dim,
                found: mode.len(),
            }
            .into());
        }
        Ok(tensor_vector(qubits, mode))
    }

    /// Total excitation number `n + (number of excited qubits)` per basis index.
    pub fn excitation_numbers(&self) -> Vec<usize> {
        (0..self.qubit_dim())
            .flat_map(|q| (0..self.mode_dim).map(move |n| (q, n)))
            .map(|(q, n)| n + self.excited_count(q))
            .collect()
    }
}

/// Diagonal terms and mode ladder shared by both models. `raise(n)` is the
/// matrix element `<n+1| L^+ |n>` of the mode raising operator times the
/// coupling prefactor.
fn build_hamiltonian(p: &ModelParams, raise: impl Fn(usize) -> f64) -> SparseHermitian {
    let spec = p.hilbert();
    let mut h = SparseHermitian::zeros(spec.dim());
    for q in 0..spec.qubit_dim() {
        let qubit_energy: f64 = (0..spec.m_q)
            .map(|i| {
                let s = if spec.is_excited(q, i) { 1.0 } else { -1.0 };
                0.5 * p.qubit_freqs[i] * s
            })
            .sum();
        for n in 0..spec.mode_dim {
            h.add_diagonal(spec.index(q, n), p.omega * n as f64 + qubit_energy);
        }
        for i in 0..spec.m_q {
            if !spec.is_excited(q, i) || p.couplings[i] == 0.0 {
                continue;
            }
            // sigma^-_i takes e -> g: set qubit i's bit.
            let lowered = q | (1 << (spec.m_q - 1 - i));
            for n in 0..spec.mode_dim - 1 {
                let amp = p.couplings[i] * raise(n);
                h.add_pair(
                    spec.index(lowered, n + 1),
                    spec.index(q, n),
                    C64::new(amp, 0.0),
                );
            }
        }
    }
    h
}

/// `omega a^dag a + 1/2 sum Omega_i sz_i + sum lambda_i (a^dag s-_i + a s+_i)`
/// on the truncated Fock space.
pub fn build_field_hamiltonian(p: &ModelParams) -> Result<SparseHermitian, DynamicsError> {
    p.validate()?;
    match p.kind {
        ModelKind::Field { .. } => Ok(build_hamiltonian(p, |n| ((n + 1) as f64).sqrt())),
        ModelKind::Spin { .. } => Err(DynamicsError::Params(
            "field Hamiltonian requested for a spin model".into(),
        )),
    }
}

/// `omega (Jz + N/2) + 1/2 sum Omega_i sz_i + N^{-1/2} sum lambda_i (J+ s-_i + J- s+_i)`
/// on the `j = N/2` ladder, where
/// `J+ |N/2, n - N/2> = sqrt((n + 1)(N - n)) |N/2, n + 1 - N/2>`.
pub fn build_spin_hamiltonian(p: &ModelParams) -> Result<SparseHermitian, DynamicsError> {
    p.validate()?;
    match p.kind {
        ModelKind::Spin { n_spins } => {
            let big_n = n_spins as f64;
            Ok(build_hamiltonian(p, move |n| {
                (((n + 1) as f64) * (big_n - n as f64) / big_n).sqrt()
            }))
        }
        ModelKind::Field { .. } => Err(DynamicsError::Params(
            "spin Hamiltonian requested for a field model".into(),
        )),
    }
}

pub fn build(p: &ModelParams) -> Result<SparseHermitian, DynamicsError> {
    match p.kind {
        ModelKind::Field { .. } => build_field_hamiltonian(p),
        ModelKind::Spin { .. } => build_spin_hamiltonian(p),
    }
}

/// Frame in which states are reported. `Rotating` removes the free evolution
/// at the mode frequency, `psi -> exp(i omega t N_ex) psi`; at resonance this is
/// the interaction picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    Lab,
    #[default]
    Rotating,
}

/// Sample times, strictly increasing from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self, DynamicsError> {
        match times.first() {
            None => return Err(DynamicsError::Grid("grid is empty".into())),
            Some(&t0) if t0 != 0.0 => {
                return Err(DynamicsError::Grid(format!("grid must start at 0, starts at {t0}")))
            }
            _ => {}
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(DynamicsError::Grid("non-finite time".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(DynamicsError::Grid(format!(
                "grid must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self(times))
    }

    /// `n_points` uniform points on `[0, t_max]`.
    pub fn uniform(t_max: f64, n_points: usize) -> Result<Self, DynamicsError> {
        if n_points == 1 {
            return Self::new(vec![0.0]);
        }
        if n_points == 0 || t_max.is_nan() || t_max <= 0.0 {
            return Err(DynamicsError::Grid(format!(
                "need t_max > 0 and n_points >= 1, got {t_max} and {n_points}"
            )));
        }
        let step = t_max / (n_points - 1) as f64;
        Self::new((0..n_points).map(|k| k as f64 * step).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A model with its Hamiltonian diagonalized block by block.
#[derive(Debug, Clone)]
pub struct System {
    params: ModelParams,
    spec: HilbertSpec,
    hamiltonian: SparseHermitian,
    propagator: Propagator,
}

impl System {
    pub fn new(params: ModelParams) -> Result<Self, DynamicsError> {
        let hamiltonian = build(&params)?;
        let propagator = Propagator::block_diagonal(&hamiltonian)?;
        Ok(Self {
            spec: params.hilbert(),
            params,
            hamiltonian,
            propagator,
        })
    }

    /// Same model diagonalized as one dense matrix; for cross-checks.
    pub fn new_dense(params: ModelParams) -> Result<Self, DynamicsError> {
        let hamiltonian = build(&params)?;
        let propagator = Propagator::dense(&hamiltonian.to_dense())?;
        Ok(Self {
            spec: params.hilbert(),
            params,
            hamiltonian,
            propagator,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn hamiltonian(&self) -> &SparseHermitian {
        &self.hamiltonian
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn trajectory(&self, psi0: &ComplexVector, frame: Frame) -> Result<Trajectory<'_>, DynamicsError> {
        Ok(Trajectory {
            prepared: self.propagator.prepare(psi0)?,
            excitations: self.spec.excitation_numbers(),
            omega: self.params.omega,
            frame,
        })
    }
}

/// Evolution of one initial state; `state_at` may be called for any time.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    prepared: PreparedState<'a>,
    excitations: Vec<usize>,
    omega: f64,
    frame: Frame,
}

impl Trajectory<'_> {
    pub fn state_at(&self, t: f64) -> ComplexVector {
        let mut psi = self.prepared.at(t);
        if self.frame == Frame::Rotating && t != 0.0 {
            for (z, &k) in psi.iter_mut().zip(&self.excitations) {
                *z *= C64::from_polar(1.0, self.omega * t * k as f64);
            }
        }
        psi
    }
}

/// Lab-frame states at every grid time from a single block-wise
/// eigendecomposition of `h`.
pub fn evolve_series(
    h: &SparseHermitian,
    psi0: &ComplexVector,
    grid: &TimeGrid,
) -> Result<Vec<ComplexVector>, DynamicsError> {
    let propagator = Propagator::block_diagonal(h)?;
    let prepared = propagator.prepare(psi0)?;
    Ok(grid.times().iter().map(|&t| prepared.at(t)).collect())
}

/// Excitation number operator `n + sum_i s+_i s-_i` as a sparse diagonal.
pub fn excitation_operator(spec: &HilbertSpec) -> SparseHermitian {
    let mut op = SparseHermitian::zeros(spec.dim());
    for (i, k) in spec.excitation_numbers().into_iter().enumerate() {
        op.add_diagonal(i, k as f64);
    }
    op
}

pub fn expected_excitations(spec: &HilbertSpec, psi: &ComplexVector) -> f64 {
    spec.excitation_numbers()
        .iter()
        .zip(psi.iter())
        .map(|(&k, z)| k as f64 * z.norm_sqr())
        .sum()
}
