//! State-vector engine over `N` ancilla + `M` system qubits.
//!
//! Index convention: ancilla `k` occupies global bit `k` (low bits),
//! system qubit `j` occupies global bit `N + j`. The amplitude at index
//! `i` belongs to the basis state whose qubit `q` reads bit `q` of `i`.
//!
//! ```
//! use rodeo_dos::circuit::StateVector;
//!
//! // one ancilla prepared in |1⟩, system of two qubits in |00⟩
//! let mut sv = StateVector::rider_state(1, 2, 0).unwrap();
//! sv.hadamard(0).unwrap();
//! assert!(sv.expect_z(0).unwrap().abs() < 1e-12); // |−⟩ has ⟨σ^z⟩ = 0
//! sv.hadamard(0).unwrap();
//! assert!((sv.expect_z(0).unwrap() + 1.0).abs() < 1e-12); // back to |1⟩
//! ```

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::hamiltonian::PauliString;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("basis index {index} out of range for {qubits} qubits")]
    BasisOutOfRange { index: u64, qubits: usize },
    #[error("qubit index {index} out of range ({qubits} qubits)")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("control qubit {control} overlaps the gate targets")]
    ControlOverlapsTarget { control: usize },
    #[error("dense payload must be unitary within 1e-10")]
    NonUnitaryPayload,
    #[error("dense payload dimension {got} does not match system dimension {expected}")]
    PayloadDimensionMismatch { got: usize, expected: usize },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("pauli payload has {got} letters, expected {expected}")]
    PayloadLetterMismatch { got: usize, expected: usize },
    #[error("bad statevector dump: {0}")]
    BadDump(String),
}

/// One gate of a circuit sequence. `PauliExp` is `exp(−i·angle·P)` over
/// the system register; `Dense` is an arbitrary unitary over the whole
/// system register.
#[derive(Debug, Clone)]
pub enum GateRecord {
    Hadamard { target: usize },
    Phase { target: usize, angle: f64 },
    PauliExp { angle: f64, letters: PauliString },
    Dense { matrix: DMatrix<Complex64> },
}

impl GateRecord {
    /// Dense payload constructor; rejects matrices that are not unitary
    /// within 1e-10.
    pub fn dense(matrix: DMatrix<Complex64>) -> Result<Self, CircuitError> {
        let dim = matrix.nrows();
        let prod = matrix.adjoint() * &matrix;
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (prod[(i, j)] - Complex64::new(expected, 0.0)).norm() > 1e-10 {
                    return Err(CircuitError::NonUnitaryPayload);
                }
            }
        }
        Ok(GateRecord::Dense { matrix })
    }
}

/// `2^(N+M)` complex amplitudes for `N` ancillas and `M` system qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    ancillas: usize,
    system_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The rider state `|1⟩^{⊗N} ⊗ |n⟩`: ancillas all in `|1⟩`, system in
    /// the computational basis state `n`.
    pub fn rider_state(ancillas: usize, system_qubits: usize, n: u64) -> Result<Self, CircuitError> {
        if n >= 1 << system_qubits {
            return Err(CircuitError::BasisOutOfRange {
                index: n,
                qubits: system_qubits,
            });
        }
        let dim = 1usize << (ancillas + system_qubits);
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        let anc_ones = (1u64 << ancillas) - 1;
        amps[(anc_ones | (n << ancillas)) as usize] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            ancillas,
            system_qubits,
            amps,
        })
    }

    /// All qubits in `|0⟩`.
    pub fn zero_state(ancillas: usize, system_qubits: usize) -> Self {
        let dim = 1usize << (ancillas + system_qubits);
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector {
            ancillas,
            system_qubits,
            amps,
        }
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn system_qubits(&self) -> usize {
        self.system_qubits
    }

    pub fn qubits(&self) -> usize {
        self.ancillas + self.system_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.qubits() {
            Err(CircuitError::QubitOutOfRange {
                index: q,
                qubits: self.qubits(),
            })
        } else {
            Ok(())
        }
    }

    /// Hadamard on qubit `q`.
    pub fn hadamard(&mut self, q: usize) -> Result<(), CircuitError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = (a0 + a1) * inv_sqrt2;
                self.amps[j] = (a0 - a1) * inv_sqrt2;
            }
        }
        Ok(())
    }

    /// Phase shift `P(φ)`: multiplies the `|1⟩` branch of qubit `q` by
    /// `e^{iφ}`.
    pub fn phase_shift(&mut self, q: usize, phi: f64) -> Result<(), CircuitError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        let phase = Complex64::from_polar(1.0, phi);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= phase;
            }
        }
        Ok(())
    }

    /// `exp(−i·angle·P)` for a Pauli string `P` over the system register,
    /// optionally restricted to the `|1⟩` subspace of a control qubit.
    /// Uses `exp(−iθP) = cos θ · 1 − i sin θ · P`.
    pub fn pauli_exp(
        &mut self,
        angle: f64,
        letters: &PauliString,
        control: Option<usize>,
    ) -> Result<(), CircuitError> {
        if letters.letters().len() != self.system_qubits {
            return Err(CircuitError::PayloadLetterMismatch {
                got: letters.letters().len(),
                expected: self.system_qubits,
            });
        }
        if let Some(c) = control {
            self.check_qubit(c)?;
            if c >= self.ancillas {
                return Err(CircuitError::ControlOverlapsTarget { control: c });
            }
        }
        let (flip_sys, phase_sys, y_count) = letters.masks();
        // shift system masks up past the ancilla bits
        let flip = (flip_sys as usize) << self.ancillas;
        let phase_mask = (phase_sys as usize) << self.ancillas;
        let ctrl_bit = control.map(|c| 1usize << c);
        let (cos_t, sin_t) = (angle.cos(), angle.sin());
        let i_pow = match y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        if flip == 0 {
            // diagonal: amplitude picks up e^{−iθ·(±1)}
            let plus = Complex64::new(cos_t, -sin_t);
            let minus = Complex64::new(cos_t, sin_t);
            for (i, a) in self.amps.iter_mut().enumerate() {
                if let Some(cb) = ctrl_bit {
                    if i & cb == 0 {
                        continue;
                    }
                }
                *a *= if (i & phase_mask).count_ones() % 2 == 0 {
                    plus
                } else {
                    minus
                };
            }
        } else {
            let minus_i_sin = Complex64::new(0.0, -sin_t);
            for i in 0..self.amps.len() {
                let j = i ^ flip;
                if i >= j {
                    continue;
                }
                if let Some(cb) = ctrl_bit {
                    if i & cb == 0 {
                        continue;
                    }
                }
                let ph = |b: usize| -> Complex64 {
                    let sign = if (b & phase_mask).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    i_pow * sign
                };
                let ai = self.amps[i];
                let aj = self.amps[j];
                self.amps[i] = cos_t * ai + minus_i_sin * ph(j) * aj;
                self.amps[j] = cos_t * aj + minus_i_sin * ph(i) * ai;
            }
        }
        Ok(())
    }

    /// Dense unitary over the whole system register, optionally controlled
    /// by an ancilla.
    pub fn dense_system(
        &mut self,
        matrix: &DMatrix<Complex64>,
        control: Option<usize>,
    ) -> Result<(), CircuitError> {
        let sys_dim = 1usize << self.system_qubits;
        if matrix.nrows() != sys_dim || matrix.ncols() != sys_dim {
            return Err(CircuitError::PayloadDimensionMismatch {
                got: matrix.nrows(),
                expected: sys_dim,
            });
        }
        if let Some(c) = control {
            self.check_qubit(c)?;
            if c >= self.ancillas {
                return Err(CircuitError::ControlOverlapsTarget { control: c });
            }
        }
        let anc_dim = 1usize << self.ancillas;
        let ctrl_bit = control.map(|c| 1usize << c);
        let mut scratch = DVector::<Complex64>::zeros(sys_dim);
        for anc in 0..anc_dim {
            if let Some(cb) = ctrl_bit {
                if anc & cb == 0 {
                    continue;
                }
            }
            for ns in 0..sys_dim {
                scratch[ns] = self.amps[anc | (ns << self.ancillas)];
            }
            let out = matrix * &scratch;
            for ns in 0..sys_dim {
                self.amps[anc | (ns << self.ancillas)] = out[ns];
            }
        }
        Ok(())
    }

    /// Diagonal phase over the system register: amplitude of system basis
    /// state `b` gains `e^{−i·angles[b]}`, optionally controlled.
    pub(crate) fn diagonal_system_phase(&mut self, angles: &[f64], control: Option<usize>) {
        let ctrl_bit = control.map(|c| 1usize << c);
        let anc = self.ancillas;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if let Some(cb) = ctrl_bit {
                if i & cb == 0 {
                    continue;
                }
            }
            *a *= Complex64::from_polar(1.0, -angles[i >> anc]);
        }
    }

    /// Spectral evolution `V e^{−iEt} V†` over the system register,
    /// optionally controlled. `v_dag` must be the adjoint of `v`.
    pub(crate) fn spectral_system_evolution(
        &mut self,
        v: &DMatrix<Complex64>,
        v_dag: &DMatrix<Complex64>,
        eigenvalues: &[f64],
        t: f64,
        control: Option<usize>,
    ) {
        let sys_dim = 1usize << self.system_qubits;
        let anc_dim = 1usize << self.ancillas;
        let ctrl_bit = control.map(|c| 1usize << c);
        let mut scratch = DVector::<Complex64>::zeros(sys_dim);
        for anc in 0..anc_dim {
            if let Some(cb) = ctrl_bit {
                if anc & cb == 0 {
                    continue;
                }
            }
            for ns in 0..sys_dim {
                scratch[ns] = self.amps[anc | (ns << self.ancillas)];
            }
            let mut w = v_dag * &scratch;
            for (x, wx) in w.iter_mut().enumerate() {
                *wx *= Complex64::from_polar(1.0, -eigenvalues[x] * t);
            }
            let out = v * &w;
            for ns in 0..sys_dim {
                self.amps[anc | (ns << self.ancillas)] = out[ns];
            }
        }
    }

    /// Apply a gate record, optionally controlled by qubit `control`.
    pub fn apply_gate(
        &mut self,
        gate: &GateRecord,
        control: Option<usize>,
    ) -> Result<(), CircuitError> {
        match gate {
            GateRecord::Hadamard { target } => {
                if let Some(control) = control {
                    return Err(CircuitError::ControlOverlapsTarget { control });
                }
                self.hadamard(*target)
            }
            GateRecord::Phase { target, angle } => {
                if let Some(c) = control {
                    if c == *target {
                        return Err(CircuitError::ControlOverlapsTarget { control: c });
                    }
                    // controlled phase: phase only when both bits set
                    self.check_qubit(*target)?;
                    self.check_qubit(c)?;
                    let mask = (1usize << c) | (1usize << *target);
                    let phase = Complex64::from_polar(1.0, *angle);
                    for (i, a) in self.amps.iter_mut().enumerate() {
                        if i & mask == mask {
                            *a *= phase;
                        }
                    }
                    Ok(())
                } else {
                    self.phase_shift(*target, *angle)
                }
            }
            GateRecord::PauliExp { angle, letters } => self.pauli_exp(*angle, letters, control),
            GateRecord::Dense { matrix } => self.dense_system(matrix, control),
        }
    }

    /// Expectation value `⟨σ^z⟩` of qubit `q`; `|0⟩ → +1`, `|1⟩ → −1`, so
    /// the prepared ancilla state `|1⟩` scores `−1`.
    pub fn expect_z(&self, q: usize) -> Result<f64, CircuitError> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            acc += if i & bit == 0 { p } else { -p };
        }
        Ok(acc)
    }

    /// Expectation of the product observable `σ^z ⊗ … ⊗ σ^z` over the
    /// listed qubits.
    pub fn expect_z_product(&self, qubits: &[usize]) -> Result<f64, CircuitError> {
        let mut mask = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            mask |= 1 << q;
        }
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            acc += if (i & mask).count_ones() % 2 == 0 { p } else { -p };
        }
        Ok(acc)
    }

    /// Empirical mean of ±1 outcomes drawn from the Born distribution of
    /// `expect_z`; converges to `expect_z` as `shots → ∞`.
    pub fn sample_z<R: Rng>(&self, q: usize, shots: u64, rng: &mut R) -> Result<f64, CircuitError> {
        if shots == 0 {
            return Err(CircuitError::ZeroShots);
        }
        self.check_qubit(q)?;
        let bit = 1usize << q;
        let p_one: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let mut ones = 0u64;
        for _ in 0..shots {
            if rng.gen::<f64>() < p_one {
                ones += 1;
            }
        }
        Ok(((shots - ones) as f64 - ones as f64) / shots as f64)
    }

    /// Empirical mean of the ±1 product outcome over the listed qubits,
    /// drawn from the joint Born distribution.
    pub fn sample_z_product<R: Rng>(
        &self,
        qubits: &[usize],
        shots: u64,
        rng: &mut R,
    ) -> Result<f64, CircuitError> {
        if shots == 0 {
            return Err(CircuitError::ZeroShots);
        }
        let mut mask = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            mask |= 1 << q;
        }
        // probability that the parity over `mask` is odd
        let p_odd: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & mask).count_ones() % 2 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let mut odd = 0u64;
        for _ in 0..shots {
            if rng.gen::<f64>() < p_odd {
                odd += 1;
            }
        }
        Ok(((shots - odd) as f64 - odd as f64) / shots as f64)
    }

    /// Binary dump: 16-byte header (`RDSV`, u32 LE ancilla count, u32 LE
    /// system count, u32 reserved) followed by interleaved little-endian
    /// (real, imag) f64 pairs.
    pub fn write_dump<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(b"RDSV")?;
        w.write_all(&(self.ancillas as u32).to_le_bytes())?;
        w.write_all(&(self.system_qubits as u32).to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: std::io::Read>(mut r: R) -> Result<Self, CircuitError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| CircuitError::BadDump(e.to_string()))?;
        if &header[0..4] != b"RDSV" {
            return Err(CircuitError::BadDump("bad magic".into()));
        }
        let ancillas = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let system_qubits = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let dim = 1usize << (ancillas + system_qubits);
        let mut amps = Vec::with_capacity(dim);
        let mut buf = [0u8; 16];
        for _ in 0..dim {
            r.read_exact(&mut buf)
                .map_err(|e| CircuitError::BadDump(e.to_string()))?;
            amps.push(Complex64::new(
                f64::from_le_bytes(buf[0..8].try_into().unwrap()),
                f64::from_le_bytes(buf[8..16].try_into().unwrap()),
            ));
        }
        Ok(StateVector {
            ancillas,
            system_qubits,
            amps,
        })
    }
}
