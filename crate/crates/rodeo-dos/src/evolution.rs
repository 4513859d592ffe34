//! Controlled time evolution `e^{−iHt}`, either exactly through the
//! spectral decomposition or via Suzuki-Trotter product formulas.
//!
//! The order-`m` step is built recursively:
//!
//! ```text
//! S_1(t) = e^{−iH_1 t} … e^{−iH_Γ t}
//! S_2(t) = e^{−iH_1 t/2} … e^{−iH_Γ t/2} e^{−iH_Γ t/2} … e^{−iH_1 t/2}
//! S_m(t) = S²_{m−2}(p_m t) S_{m−2}((1−4p_m) t) S²_{m−2}(p_m t)
//! ```
//!
//! with `p_m = 1/(4 − 4^{1/(m−1)})`, and `r` repetitions of `S_m(t/r)`
//! approximate `e^{−iHt}` to precision `δ` when
//! `r = ⌈|t|^{1+1/m} / δ^{1/m}⌉`.
//!
//! ```
//! use rodeo_dos::evolution::{trotter_step_count, TrotterConfig, EvolutionMode};
//!
//! let config = TrotterConfig { order: 1, precision: 0.1, max_steps: 5000, mode: EvolutionMode::Trotter };
//! assert_eq!(trotter_step_count(1.0, &config), (10, false));
//! assert_eq!(trotter_step_count(40.0, &config), (5000, true)); // capped
//! ```

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitError, GateRecord, StateVector};
use crate::hamiltonian::{exact_spectrum, Hamiltonian, HamiltonianError};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("suzuki order must be 1 or even, got {0}")]
    BadOrder(u32),
    #[error("suzuki coefficient p_m needs an even order of at least 4, got {0}")]
    OrderTooSmall(u32),
    #[error("trotter precision must be positive, got {0}")]
    BadPrecision(f64),
    #[error("max_steps must be at least 1")]
    BadMaxSteps,
    #[error("hamiltonian acts on {expected} qubits but the statevector has {got} system qubits")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    /// Dense evolution through one cached eigen-decomposition.
    Exact,
    /// Product-formula evolution with `r` steps per application.
    Trotter,
}

/// Product-formula configuration; `mode = Exact` bypasses Trotterization
/// entirely and uses the spectral oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterConfig {
    pub order: u32,
    pub precision: f64,
    pub max_steps: u32,
    pub mode: EvolutionMode,
}

impl Default for TrotterConfig {
    fn default() -> Self {
        TrotterConfig {
            order: 1,
            precision: 0.1,
            max_steps: 5000,
            mode: EvolutionMode::Exact,
        }
    }
}

impl TrotterConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if self.order != 1 && self.order % 2 != 0 {
            return Err(EvolutionError::BadOrder(self.order));
        }
        if !(self.precision > 0.0) {
            return Err(EvolutionError::BadPrecision(self.precision));
        }
        if self.max_steps == 0 {
            return Err(EvolutionError::BadMaxSteps);
        }
        Ok(())
    }
}

/// Recursion coefficient `p_m = 1/(4 − 4^{1/(m−1)})` for even `m ≥ 4`.
/// Satisfies `4 p_m + (1 − 4 p_m) = 1` with `1 − 4 p_m < 0` (the backward
/// mid-step).
pub fn suzuki_p(order: u32) -> Result<f64, EvolutionError> {
    if order < 4 || order % 2 != 0 {
        return Err(EvolutionError::OrderTooSmall(order));
    }
    Ok(1.0 / (4.0 - 4f64.powf(1.0 / (order as f64 - 1.0))))
}

/// Number of Trotter steps for total evolution time `t`:
/// `max(1, ⌈|t|^{1+1/m} / δ^{1/m}⌉)`, clamped to `max_steps`. Returns the
/// count together with a flag telling whether the clamp was hit.
pub fn trotter_step_count(t: f64, config: &TrotterConfig) -> (u32, bool) {
    let m = config.order as f64;
    let raw = t.abs().powf(1.0 + 1.0 / m) / config.precision.powf(1.0 / m);
    let r = raw.ceil().max(1.0);
    if r > config.max_steps as f64 {
        (config.max_steps, true)
    } else {
        (r as u32, false)
    }
}

/// Gate sequence of one order-`m` step `S_m(t)`. Each entry is a Pauli
/// exponential `e^{−i c_j P_j t'}` over the system register; the sequence
/// applied `r` times with step time `t/r` approximates `e^{−iHt}`.
pub fn trotter_gate_sequence(
    h: &Hamiltonian,
    t: f64,
    config: &TrotterConfig,
) -> Result<Vec<GateRecord>, EvolutionError> {
    config.validate()?;
    let mut seq = Vec::new();
    push_step(h, t, config.order, &mut seq)?;
    Ok(seq)
}

fn push_step(
    h: &Hamiltonian,
    t: f64,
    order: u32,
    seq: &mut Vec<GateRecord>,
) -> Result<(), EvolutionError> {
    match order {
        1 => {
            for term in h.terms() {
                seq.push(GateRecord::PauliExp {
                    angle: term.coefficient() * t,
                    letters: term.clone(),
                });
            }
            Ok(())
        }
        2 => {
            for term in h.terms() {
                seq.push(GateRecord::PauliExp {
                    angle: term.coefficient() * t / 2.0,
                    letters: term.clone(),
                });
            }
            for term in h.terms().iter().rev() {
                seq.push(GateRecord::PauliExp {
                    angle: term.coefficient() * t / 2.0,
                    letters: term.clone(),
                });
            }
            Ok(())
        }
        m if m >= 4 && m % 2 == 0 => {
            let p = suzuki_p(m)?;
            push_step(h, p * t, m - 2, seq)?;
            push_step(h, p * t, m - 2, seq)?;
            push_step(h, (1.0 - 4.0 * p) * t, m - 2, seq)?;
            push_step(h, p * t, m - 2, seq)?;
            push_step(h, p * t, m - 2, seq)?;
            Ok(())
        }
        m => Err(EvolutionError::BadOrder(m)),
    }
}

enum EvolverKind {
    /// Computational-basis-diagonal Hamiltonian: evolution is a phase per
    /// basis state in both exact and Trotter modes (all step exponentials
    /// commute and their angles telescope to `E(b)·t`).
    Diagonal { energies: Vec<f64> },
    /// Spectral route `V e^{−iEt} V†` from one cached diagonalization.
    Spectral {
        eigenvalues: Vec<f64>,
        v: DMatrix<Complex64>,
        v_dag: DMatrix<Complex64>,
    },
    /// Genuine product-formula evolution.
    Trotter,
}

/// Reusable controlled-evolution engine for one Hamiltonian. In exact
/// mode the eigen-decomposition is computed once and shared across all
/// `(t, E, n)` cells; the engine is immutable and safe to use from
/// parallel workers.
pub struct Evolver {
    hamiltonian: Hamiltonian,
    config: TrotterConfig,
    kind: EvolverKind,
    cap_hits: AtomicU64,
}

impl Evolver {
    pub fn new(h: &Hamiltonian, config: &TrotterConfig) -> Result<Self, EvolutionError> {
        config.validate()?;
        let kind = if h.is_diagonal() {
            EvolverKind::Diagonal {
                energies: h.diagonal_energies().expect("diagonal"),
            }
        } else {
            match config.mode {
                EvolutionMode::Exact => {
                    let spectrum = exact_spectrum(h, true)?;
                    let v = spectrum.eigenvectors().expect("overlaps requested").clone();
                    let v_dag = v.adjoint();
                    EvolverKind::Spectral {
                        eigenvalues: spectrum.eigenvalues().to_vec(),
                        v,
                        v_dag,
                    }
                }
                EvolutionMode::Trotter => EvolverKind::Trotter,
            }
        };
        Ok(Evolver {
            hamiltonian: h.clone(),
            config: *config,
            kind,
            cap_hits: AtomicU64::new(0),
        })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn config(&self) -> &TrotterConfig {
        &self.config
    }

    /// Number of times the Trotter step cap was hit so far.
    pub fn cap_hits(&self) -> u64 {
        self.cap_hits.load(Ordering::Relaxed)
    }

    /// Apply `e^{−iHt}` on the `|1⟩` branch of the control ancilla.
    pub fn apply_controlled(
        &self,
        sv: &mut StateVector,
        control: usize,
        t: f64,
    ) -> Result<(), EvolutionError> {
        self.apply(sv, Some(control), t)
    }

    /// Apply `e^{−iHt}` unconditionally on the system register.
    pub fn apply_uncontrolled(&self, sv: &mut StateVector, t: f64) -> Result<(), EvolutionError> {
        self.apply(sv, None, t)
    }

    fn apply(
        &self,
        sv: &mut StateVector,
        control: Option<usize>,
        t: f64,
    ) -> Result<(), EvolutionError> {
        if sv.system_qubits() != self.hamiltonian.qubits() {
            return Err(EvolutionError::DimensionMismatch {
                got: sv.system_qubits(),
                expected: self.hamiltonian.qubits(),
            });
        }
        match &self.kind {
            EvolverKind::Diagonal { energies } => {
                // commuting step exponentials telescope to E(b)·t exactly,
                // so the result is cap-independent; the cap log still
                // records where a literal product formula would have hit it
                if self.config.mode == EvolutionMode::Trotter {
                    let (_, capped) = trotter_step_count(t, &self.config);
                    if capped {
                        self.cap_hits.fetch_add(1, Ordering::Relaxed);
                    }
                }
                let angles: Vec<f64> = energies.iter().map(|e| e * t).collect();
                sv.diagonal_system_phase(&angles, control);
                Ok(())
            }
            EvolverKind::Spectral {
                eigenvalues,
                v,
                v_dag,
            } => {
                sv.spectral_system_evolution(v, v_dag, eigenvalues, t, control);
                Ok(())
            }
            EvolverKind::Trotter => {
                let (r, capped) = trotter_step_count(t, &self.config);
                if capped {
                    self.cap_hits.fetch_add(1, Ordering::Relaxed);
                }
                let step = trotter_gate_sequence(&self.hamiltonian, t / r as f64, &self.config)?;
                for _ in 0..r {
                    for gate in &step {
                        sv.apply_gate(gate, control)?;
                    }
                }
                Ok(())
            }
        }
    }

    /// Dense matrix of the full evolution `e^{−iHt}` as this evolver
    /// realizes it (spectral product or `r` Trotter steps). Intended for
    /// operator-norm comparisons at desk scale.
    pub fn dense_propagator(&self, t: f64) -> Result<DMatrix<Complex64>, EvolutionError> {
        let dim = self.hamiltonian.dimension();
        let mut u = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut sv = StateVector::rider_state(0, self.hamiltonian.qubits(), col as u64)
                .map_err(EvolutionError::Circuit)?;
            self.apply_uncontrolled(&mut sv, t)?;
            for row in 0..dim {
                u[(row, col)] = sv.amplitudes()[row];
            }
        }
        Ok(u)
    }
}

/// One-shot convenience wrapper around [`Evolver`]: applies the controlled
/// time evolution for a single call. Scans should construct the
/// [`Evolver`] once instead.
pub fn controlled_time_evolution(
    sv: &mut StateVector,
    control: usize,
    h: &Hamiltonian,
    t: f64,
    config: &TrotterConfig,
) -> Result<(), EvolutionError> {
    Evolver::new(h, config)?.apply_controlled(sv, control, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_tfim, TfimParams};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tfim(m: usize, b: f64) -> Hamiltonian {
        build_tfim(&TfimParams {
            spins: m,
            exchange: 1.0,
            field: b,
            periodic: true,
        })
        .unwrap()
    }

    fn cfg(order: u32, precision: f64, mode: EvolutionMode) -> TrotterConfig {
        TrotterConfig {
            order,
            precision,
            max_steps: 5000,
            mode,
        }
    }

    fn op_norm(m: &DMatrix<Complex64>) -> f64 {
        m.clone().svd(false, false).singular_values[0]
    }

    #[test]
    fn suzuki_p_values() {
        // frozen from the closed form 1/(4 − 4^{1/(m−1)})
        assert_abs_diff_eq!(suzuki_p(4).unwrap(), 0.4144908, epsilon = 1e-7);
        assert_abs_diff_eq!(suzuki_p(6).unwrap(), 0.3730658, epsilon = 1e-7);
        for m in [4, 6, 8] {
            let p = suzuki_p(m).unwrap();
            assert!(1.0 - 4.0 * p < 0.0);
            assert!(p.abs() < 0.5);
            assert_abs_diff_eq!(4.0 * p + (1.0 - 4.0 * p), 1.0, epsilon = 1e-15);
        }
        assert!(suzuki_p(3).is_err());
        assert!(suzuki_p(2).is_err());
    }

    #[test]
    fn step_count_rule() {
        let c = cfg(1, 0.1, EvolutionMode::Trotter);
        assert_eq!(trotter_step_count(0.0, &c), (1, false));
        assert_eq!(trotter_step_count(1.0, &c), (10, false));
        assert_eq!(trotter_step_count(40.0, &c), (5000, true));
        // monotone nondecreasing in |t|
        let mut prev = 0;
        for i in 0..100 {
            let (r, _) = trotter_step_count(i as f64 * 0.3, &c);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn commuting_sequence_is_exact() {
        // B = 0 TFIM is diagonal; a single order-1 step equals e^{−iHt}
        let h = tfim(3, 0.0);
        let t = 0.83;
        let seq = trotter_gate_sequence(&h, t, &cfg(1, 0.1, EvolutionMode::Trotter)).unwrap();
        let exact = Evolver::new(&h, &cfg(1, 0.1, EvolutionMode::Exact)).unwrap();
        let u_exact = exact.dense_propagator(t).unwrap();
        let mut u_seq = DMatrix::<Complex64>::zeros(8, 8);
        for col in 0..8 {
            let mut sv = StateVector::rider_state(0, 3, col as u64).unwrap();
            for g in &seq {
                sv.apply_gate(g, None).unwrap();
            }
            for row in 0..8 {
                u_seq[(row, col)] = sv.amplitudes()[row];
            }
        }
        assert!(op_norm(&(u_exact - u_seq)) < 1e-12);
    }

    #[test]
    fn order_two_sequence_is_palindromic() {
        let h = tfim(3, 0.5);
        let seq = trotter_gate_sequence(&h, 0.4, &cfg(2, 0.1, EvolutionMode::Trotter)).unwrap();
        let angles: Vec<f64> = seq
            .iter()
            .map(|g| match g {
                GateRecord::PauliExp { angle, .. } => *angle,
                _ => panic!("unexpected gate kind"),
            })
            .collect();
        let mut rev = angles.clone();
        rev.reverse();
        assert_eq!(angles, rev);
        assert_eq!(seq.len(), 2 * h.terms().len());
    }

    #[test]
    fn first_order_error_halves_when_steps_double() {
        let h = tfim(3, 0.5);
        let exact = Evolver::new(&h, &cfg(1, 0.1, EvolutionMode::Exact)).unwrap();
        let t = 1.0;
        let u_exact = exact.dense_propagator(t).unwrap();
        let err_at = |r: u32| {
            // pick δ so the step rule lands exactly on r for t = 1
            let c = cfg(1, 1.0 / r as f64, EvolutionMode::Trotter);
            assert_eq!(trotter_step_count(t, &c).0, r);
            let u = Evolver::new(&h, &c).unwrap().dense_propagator(t).unwrap();
            op_norm(&(u_exact.clone() - u))
        };
        let e8 = err_at(8);
        let e16 = err_at(16);
        let ratio = e8 / e16;
        assert!(
            (1.6..2.5).contains(&ratio),
            "first-order ratio {ratio} outside [1.6, 2.5]"
        );
    }

    #[test]
    fn controlled_evolution_phases_eigenstate_branch() {
        // diagonal TFIM: |00000⟩ has E = −5; control |1⟩ branch picks up
        // e^{−iE t}
        let h = tfim(5, 0.0);
        let ev = Evolver::new(&h, &TrotterConfig::default()).unwrap();
        let mut sv = StateVector::rider_state(1, 5, 0).unwrap();
        sv.hadamard(0).unwrap();
        let t = 0.37;
        ev.apply_controlled(&mut sv, 0, t).unwrap();
        // H|1⟩ = (|0⟩ − |1⟩)/√2, so the evolved branch carries a minus sign
        let expected = -Complex64::from_polar(std::f64::consts::FRAC_1_SQRT_2, 5.0 * t);
        assert!((sv.amplitudes()[1] - expected).norm() < 1e-12);
        // |0⟩ branch untouched
        assert_abs_diff_eq!(
            sv.amplitudes()[0].re,
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn exact_and_trotter_agree_at_t_zero() {
        let h = tfim(3, 0.5);
        for mode in [EvolutionMode::Exact, EvolutionMode::Trotter] {
            let ev = Evolver::new(&h, &cfg(1, 0.1, mode)).unwrap();
            let mut sv = StateVector::rider_state(1, 3, 2).unwrap();
            let before = sv.clone();
            ev.apply_controlled(&mut sv, 0, 0.0).unwrap();
            for (a, b) in sv.amplitudes().iter().zip(before.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn trotter_branch_fidelity_close_to_exact() {
        let h = tfim(3, 0.5);
        let delta = 0.01;
        let exact = Evolver::new(&h, &cfg(1, delta, EvolutionMode::Exact)).unwrap();
        let trotter = Evolver::new(&h, &cfg(1, delta, EvolutionMode::Trotter)).unwrap();
        let t = 0.7;
        let mut a = StateVector::rider_state(1, 3, 3).unwrap();
        a.hadamard(0).unwrap();
        let mut b = a.clone();
        exact.apply_controlled(&mut a, 0, t).unwrap();
        trotter.apply_controlled(&mut b, 0, t).unwrap();
        let fidelity: f64 = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm();
        assert!(fidelity >= 1.0 - 5.0 * delta, "fidelity {fidelity}");
    }

    #[test]
    fn diagonal_trotter_identical_to_exact() {
        let h = tfim(4, 0.0);
        let t = 2.31;
        let e = Evolver::new(&h, &cfg(1, 0.1, EvolutionMode::Exact)).unwrap();
        let tr = Evolver::new(&h, &cfg(1, 0.1, EvolutionMode::Trotter)).unwrap();
        let mut a = StateVector::rider_state(1, 4, 9).unwrap();
        a.hadamard(0).unwrap();
        let mut b = a.clone();
        e.apply_controlled(&mut a, 0, t).unwrap();
        tr.apply_controlled(&mut b, 0, t).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn time_additivity_in_exact_mode() {
        let h = tfim(3, 0.5);
        let ev = Evolver::new(&h, &TrotterConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let (t1, t2) = (rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            let mut sv = StateVector::rider_state(1, 3, rng.gen_range(0..8)).unwrap();
            sv.hadamard(0).unwrap();
            sv.hadamard(2).unwrap();
            let mut sv2 = sv.clone();
            ev.apply_controlled(&mut sv, 0, t1).unwrap();
            ev.apply_controlled(&mut sv, 0, t2).unwrap();
            ev.apply_controlled(&mut sv2, 0, t1 + t2).unwrap();
            for (a, b) in sv.amplitudes().iter().zip(sv2.amplitudes()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sequences_preserve_norm() {
        let h = tfim(3, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for order in [1u32, 2, 4] {
            let ev = Evolver::new(&h, &cfg(order, 0.05, EvolutionMode::Trotter)).unwrap();
            let mut sv = StateVector::rider_state(1, 3, rng.gen_range(0..8)).unwrap();
            sv.hadamard(0).unwrap();
            ev.apply_controlled(&mut sv, 0, 1.7).unwrap();
            assert!((sv.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = tfim(3, 0.5);
        let ev = Evolver::new(&h, &TrotterConfig::default()).unwrap();
        let mut sv = StateVector::rider_state(1, 4, 0).unwrap();
        assert!(matches!(
            ev.apply_controlled(&mut sv, 0, 1.0),
            Err(EvolutionError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cap_hits_are_counted() {
        let h = tfim(3, 0.5);
        let c = TrotterConfig {
            order: 1,
            precision: 0.1,
            max_steps: 3,
            mode: EvolutionMode::Trotter,
        };
        let ev = Evolver::new(&h, &c).unwrap();
        let mut sv = StateVector::rider_state(1, 3, 0).unwrap();
        ev.apply_controlled(&mut sv, 0, 10.0).unwrap();
        assert_eq!(ev.cap_hits(), 1);
    }
}
