//! Oracles shared by the integration suites.

#![allow(dead_code)]

use qubit_revival::dynamics::{Frame, HilbertSpec, ModelKind, ModelParams, System};
use qubit_revival::qalg::{ComplexVector, Propagator, SparseHermitian, C64};
use qubit_revival::statekit::SpinCoherent;

/// `P_ee(t)` of two qubits coupled to `N` distinguishable spins simulated in
/// the full `4 * 2^N` tensor space, starting from `qubits ⊗ s^{⊗N}` with `s`
/// the single-spin coherent state of parameter `zeta / sqrt N`.
pub fn full_tensor_p_ee(params: &ModelParams, qubits: &[C64; 4], zeta2: f64, phi: f64, times: &[f64]) -> Vec<f64> {
    let ModelKind::Spin { n_spins } = params.kind else {
        panic!("spin model expected");
    };
    let qspec = HilbertSpec { m_q: 2, mode_dim: 1 };
    let spins = 1usize << n_spins;
    let dim = 4 * spins;
    let scale = 1.0 / (n_spins as f64).sqrt();
    let mut h = SparseHermitian::zeros(dim);
    for q in 0..4 {
        let qubit_energy: f64 = (0..2)
            .map(|i| 0.5 * params.qubit_freqs[i] * if qspec.is_excited(q, i) { 1.0 } else { -1.0 })
            .sum();
        for s in 0..spins {
            h.add_diagonal(q * spins + s, params.omega * s.count_ones() as f64 + qubit_energy);
        }
        for i in 0..2 {
            if !qspec.is_excited(q, i) {
                continue;
            }
            let lowered = q | (1 << (1 - i));
            for s in 0..spins {
                for k in 0..n_spins {
                    if s & (1 << k) == 0 {
                        h.add_pair(
                            lowered * spins + (s | (1 << k)),
                            q * spins + s,
                            C64::new(params.couplings[i] * scale, 0.0),
                        );
                    }
                }
            }
        }
    }
    let single = SpinCoherent::from_parameters(zeta2 / n_spins as f64, phi, 1)
        .unwrap()
        .amplitudes;
    let psi0 = ComplexVector::from_fn(dim, |idx, _| {
        let (q, s) = (idx / spins, idx % spins);
        (0..n_spins).fold(qubits[q], |acc, k| acc * single[(s >> k) & 1])
    });
    let prop = Propagator::block_diagonal(&h).unwrap();
    let state = prop.prepare(&psi0).unwrap();
    times
        .iter()
        .map(|&t| {
            let psi = state.at(t);
            (0..spins).map(|s| psi[s].norm_sqr()).sum()
        })
        .collect()
}

/// The same quantity in the symmetric Dicke subspace.
pub fn symmetric_p_ee(params: &ModelParams, qubits: &[C64; 4], zeta2: f64, phi: f64, times: &[f64]) -> Vec<f64> {
    let ModelKind::Spin { n_spins } = params.kind else {
        panic!("spin model expected");
    };
    let spec = params.hilbert();
    let mode = SpinCoherent::from_parameters(zeta2, phi, n_spins).unwrap().amplitudes;
    let psi0 = spec
        .product_state(&ComplexVector::from_column_slice(qubits), &mode)
        .unwrap();
    let system = System::new(params.clone()).unwrap();
    let traj = system.trajectory(&psi0, Frame::Lab).unwrap();
    times
        .iter()
        .map(|&t| {
            let psi = traj.state_at(t);
            (0..spec.mode_dim).map(|n| psi[spec.index(0, n)].norm_sqr()).sum()
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
