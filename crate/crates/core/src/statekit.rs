//! Constructors for every initial and reference state: oscillator coherent
//! states, spin coherent states over the Dicke ladder, two-qubit states,
//! attractor states and the basin-of-attraction family.
//!
//! Qubit basis: `|e> = 0`, `|g> = 1`, so the two-qubit order is
//! `ee, eg, ge, gg`.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::qalg::{compensated_sum, ComplexVector, C64, ONE, ZERO};

/// Tolerance on the Poisson tail left out by a truncated coherent state.
pub const TRUNCATION_TOL: f64 = 1e-12;
/// Tolerance for normalized qubit amplitudes.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("coherent state truncated at n_max = {n_max} loses {deficit:.3e} of its norm; need n_max >= {required}")]
    Truncation {
        n_max: usize,
        deficit: f64,
        required: usize,
    },
    #[error("basin parameter |a| = {0} outside [0, 1/sqrt(2)]")]
    BasinRange(f64),
    #[error("two-qubit amplitudes have norm^2 {0}, expected 1")]
    NotNormalized(f64),
    #[error("{0} must be at least 1")]
    TooSmall(&'static str),
}

/// Sign of an attractor branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Default truncation `ceil(n_bar + 10 sqrt(n_bar))`.
pub fn default_n_max(n_bar: f64) -> usize {
    ((n_bar + 10.0 * n_bar.sqrt()).ceil() as usize).max(1)
}

/// Log-magnitudes of `e^{-|alpha|^2/2} |alpha|^n / sqrt(n!)` for `n = 0..len`.
fn coherent_log_magnitudes(n_bar: f64, len: usize) -> impl Iterator<Item = f64> {
    let log_abs = 0.5 * n_bar.ln();
    // (running sum, compensation)
    (0..len).scan((-0.5 * n_bar, 0.0f64), move |(acc, carry), n| {
        let current = *acc;
        let step = log_abs - 0.5 * ((n + 1) as f64).ln() - *carry;
        let next = *acc + step;
        *carry = (next - *acc) - step;
        *acc = next;
        Some(current)
    })
}

/// Norm left outside `0..=n_max`, summed explicitly from the tail terms.
fn coherent_tail(n_bar: f64, n_max: usize) -> f64 {
    if n_bar == 0.0 {
        return 0.0;
    }
    // Terms beyond the peak decay faster than geometrically once n > 2 n_bar.
    let horizon = n_max + 1 + (4.0 * n_bar + 200.0) as usize;
    let terms: Vec<f64> = coherent_log_magnitudes(n_bar, horizon)
        .skip(n_max + 1)
        .map(|l| (2.0 * l).exp())
        .collect();
    compensated_sum(terms.into_iter().rev())
}

/// Smallest `n_max >= from` whose tail deficit is within [`TRUNCATION_TOL`].
fn smallest_truncation(n_bar: f64, from: usize) -> usize {
    let mut hi = from;
    while coherent_tail(n_bar, hi) > TRUNCATION_TOL {
        hi += 1 + hi / 16;
    }
    let mut lo = from;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if coherent_tail(n_bar, mid) > TRUNCATION_TOL {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    hi
}

/// [`default_n_max`], raised if needed so the truncation is accepted.
pub fn sufficient_n_max(n_bar: f64) -> usize {
    smallest_truncation(n_bar, default_n_max(n_bar))
}

/// Oscillator coherent state truncated to `0..=n_max`.
#[derive(Debug, Clone)]
pub struct FockCoherent {
    pub alpha: C64,
    pub n_max: usize,
    pub amplitudes: ComplexVector,
}

impl FockCoherent {
    /// `alpha = sqrt(n_bar) e^{-i theta}`.
    pub fn from_mean_photons(n_bar: f64, theta: f64, n_max: usize) -> Result<Self, StateError> {
        coherent_fock_amplitudes(C64::from_polar(n_bar.sqrt(), -theta), n_max)
    }

    pub fn n_bar(&self) -> f64 {
        self.alpha.norm_sqr()
    }
}

/// Amplitudes `e^{-|alpha|^2/2} alpha^n / sqrt(n!)`, accumulated in log space
/// so that large `|alpha|` neither underflows nor overflows.
pub fn coherent_fock_amplitudes(alpha: C64, n_max: usize) -> Result<FockCoherent, StateError> {
    if n_max < 1 {
        return Err(StateError::TooSmall("n_max"));
    }
    let n_bar = alpha.norm_sqr();
    let deficit = coherent_tail(n_bar, n_max);
    if deficit > TRUNCATION_TOL {
        return Err(StateError::Truncation {
            n_max,
            deficit,
            required: smallest_truncation(n_bar, n_max + 1),
        });
    }
    let amplitudes = if n_bar == 0.0 {
        ComplexVector::from_fn(n_max + 1, |n, _| if n == 0 { ONE } else { ZERO })
    } else {
        let phase = alpha.arg();
        ComplexVector::from_iterator(
            n_max + 1,
            coherent_log_magnitudes(n_bar, n_max + 1)
                .enumerate()
                .map(|(n, l)| C64::from_polar(l.exp(), phase * n as f64)),
        )
    };
    Ok(FockCoherent {
        alpha,
        n_max,
        amplitudes,
    })
}

/// Spin coherent state of `n_spins` spins expanded over the Dicke states
/// `|N/2, n - N/2>`, `n = 0..=N` (`n` counts excited spins).
#[derive(Debug, Clone)]
pub struct SpinCoherent {
    pub zeta: C64,
    pub n_spins: usize,
    pub amplitudes: ComplexVector,
}

impl SpinCoherent {
    /// `zeta = |zeta| e^{-i phi}` with `|zeta|^2 = zeta2`.
    pub fn from_parameters(zeta2: f64, phi: f64, n_spins: usize) -> Result<Self, StateError> {
        spin_coherent_amplitudes(C64::from_polar(zeta2.sqrt(), -phi), n_spins)
    }
}

/// `C_n = (1 + |zeta|^2/N)^{-N/2} sqrt(binom(N, n)) (zeta / sqrt N)^n`.
pub fn spin_coherent_amplitudes(zeta: C64, n_spins: usize) -> Result<SpinCoherent, StateError> {
    if n_spins < 1 {
        return Err(StateError::TooSmall("n_spins"));
    }
    let n = n_spins as f64;
    let zeta2 = zeta.norm_sqr();
    let amplitudes = if zeta2 == 0.0 {
        ComplexVector::from_fn(n_spins + 1, |k, _| if k == 0 { ONE } else { ZERO })
    } else {
        let prefactor = -0.5 * n * (zeta2 / n).ln_1p();
        let log_ratio = 0.5 * (zeta2 / n).ln();
        let phase = zeta.arg();
        // ln binom(N, k), accumulated with compensation.
        let mut log_binom = 0.0f64;
        let mut carry = 0.0f64;
        let mut amps = Vec::with_capacity(n_spins + 1);
        for k in 0..=n_spins {
            let log_mag = prefactor + 0.5 * log_binom + k as f64 * log_ratio;
            amps.push(C64::from_polar(log_mag.exp(), phase * k as f64));
            if k < n_spins {
                let step = ((n_spins - k) as f64).ln() - ((k + 1) as f64).ln() - carry;
                let next = log_binom + step;
                carry = (next - log_binom) - step;
                log_binom = next;
            }
        }
        ComplexVector::from_vec(amps)
    };
    Ok(SpinCoherent {
        zeta,
        n_spins,
        amplitudes,
    })
}

/// Amplitudes `(c_ee, c_eg, c_ge, c_gg)` of a normalized two-qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: [C64; 4],
}

impl TwoQubitState {
    pub fn new(c_ee: C64, c_eg: C64, c_ge: C64, c_gg: C64) -> Result<Self, StateError> {
        let amps = [c_ee, c_eg, c_ge, c_gg];
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized(norm2));
        }
        Ok(Self { amps })
    }

    /// `(|ee> + |gg>)/sqrt 2`.
    pub fn bell() -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self {
            amps: [s, ZERO, ZERO, s],
        }
    }

    pub fn product(first: [C64; 2], second: [C64; 2]) -> Self {
        Self {
            amps: [
                first[0] * second[0],
                first[0] * second[1],
                first[1] * second[0],
                first[1] * second[1],
            ],
        }
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.amps
    }

    pub fn to_vector(&self) -> ComplexVector {
        ComplexVector::from_column_slice(&self.amps)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `(e^{-i theta}|e> ± i|g>)/sqrt 2`, returned as `[c_e, c_g]`.
pub fn single_qubit_attractor(branch: Branch, theta: f64) -> [C64; 2] {
    [
        C64::from_polar(FRAC_1_SQRT_2, -theta),
        C64::new(0.0, branch.sign() * FRAC_1_SQRT_2),
    ]
}

/// `(e^{-2i phase}|ee> ± i e^{-i phase}(|eg> + |ge>) - |gg>)/2`. The phase is
/// the field phase `theta` or the composite-spin phase `phi`.
pub fn two_qubit_attractor(branch: Branch, phase: f64) -> TwoQubitState {
    let mixed = C64::new(0.0, 0.5 * branch.sign()) * C64::from_polar(1.0, -phase);
    TwoQubitState {
        amps: [
            C64::from_polar(0.5, -2.0 * phase),
            mixed,
            mixed,
            C64::new(-0.5, 0.0),
        ],
    }
}

/// `a(e^{-i theta}|ee> + e^{i theta}|gg>) + sqrt(1/2 - |a|^2)(|eg> + |ge>)`.
pub fn basin_state(a: C64, theta: f64) -> Result<TwoQubitState, StateError> {
    let r2 = a.norm_sqr();
    if a.norm() > FRAC_1_SQRT_2 + 1e-12 || !r2.is_finite() {
        return Err(StateError::BasinRange(a.norm()));
    }
    let side = C64::new((0.5 - r2).max(0.0).sqrt(), 0.0);
    Ok(TwoQubitState {
        amps: [
            a * C64::from_polar(1.0, -theta),
            side,
            side,
            a * C64::from_polar(1.0, theta),
        ],
    })
}
