//! Rodeo cycles and the number-of-states scan.
//!
//! One cycle on basis input `|n⟩` with energy guess `E`: prepare the
//! rider state, Hadamard every ancilla, then for each ancilla `k` apply
//! the controlled evolution `e^{−iHt_k}` (fresh Gaussian `t_k`) followed
//! by the phase shift `P(E·t_k)`, Hadamard again, and read `⟨σ^z⟩`. The
//! Score Average `h̄(E, n)` is the mean over ancillas and rounds; summing
//! `−h̄(E, n)` over all basis inputs estimates the number of states Ω(E).
//!
//! ```
//! use rodeo_dos::hamiltonian::{build_tfim, TfimParams};
//! use rodeo_dos::evolution::{Evolver, TrotterConfig};
//! use rodeo_dos::rodeo::{score_average, RodeoParams};
//!
//! let h = build_tfim(&TfimParams { spins: 5, exchange: 1.0, field: 0.0, periodic: true }).unwrap();
//! let evolver = Evolver::new(&h, &TrotterConfig::default()).unwrap();
//! // |00000⟩ is an eigenstate with E = −5: a guess of −5 scores exactly −1
//! let score = score_average(&evolver, 0, -5.0, &RodeoParams::default(), 0).unwrap();
//! assert!((score.mean + 1.0).abs() < 1e-12 && score.stderr < 1e-12);
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitError, StateVector};
use crate::evolution::{EvolutionError, Evolver, TrotterConfig};
use crate::hamiltonian::{Hamiltonian, Spectrum};

#[derive(Debug, Error)]
pub enum RodeoError {
    #[error("basis input {input} out of range for {qubits} system qubits")]
    InputOutOfRange { input: usize, qubits: usize },
    #[error("rodeo parameters invalid: {0}")]
    BadParams(&'static str),
    #[error("energy grid invalid: {0}")]
    BadGrid(&'static str),
    #[error("spectrum carries no basis overlaps")]
    MissingOverlaps,
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// How ancilla readouts are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    /// Exact quantum expectation value (the simulator default).
    Expectation,
    /// Empirical mean over a finite number of measurement shots.
    Shots(u64),
}

/// Whether ancillas are read one by one or as one product observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    Sequential,
    Simultaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodeoParams {
    /// Ancilla count N.
    pub ancillas: usize,
    /// Rounds per (input, energy) cell.
    pub rounds: usize,
    /// Mean τ of the Gaussian time distribution.
    pub tau: f64,
    /// Standard deviation d of the Gaussian time distribution.
    pub dev: f64,
    /// Master seed; per-cell streams are derived from it.
    pub seed: u64,
    pub readout: Readout,
    pub convention: Measurement,
}

impl Default for RodeoParams {
    fn default() -> Self {
        RodeoParams {
            ancillas: 1,
            rounds: 500,
            tau: 0.0,
            dev: 20.0,
            seed: 42,
            readout: Readout::Expectation,
            convention: Measurement::Sequential,
        }
    }
}

impl RodeoParams {
    pub fn validate(&self) -> Result<(), RodeoError> {
        if self.ancillas == 0 {
            return Err(RodeoError::BadParams("ancillas must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(RodeoError::BadParams("rounds must be at least 1"));
        }
        if !(self.dev > 0.0) {
            return Err(RodeoError::BadParams("dev must be positive"));
        }
        if let Readout::Shots(0) = self.readout {
            return Err(RodeoError::BadParams("shot count must be at least 1"));
        }
        Ok(())
    }
}

/// Energy guesses `E_ℓ = E₀ + ℓε`; both endpoints included (the last
/// point is the largest `E_ℓ ≤ E_f + ε/2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl EnergyGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self, RodeoError> {
        if !(step > 0.0) {
            return Err(RodeoError::BadGrid("step must be positive"));
        }
        if end < start {
            return Err(RodeoError::BadGrid("end must not be below start"));
        }
        Ok(EnergyGrid { start, end, step })
    }

    pub fn len(&self) -> usize {
        ((self.end - self.start) / self.step + 0.5).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn energy(&self, index: usize) -> f64 {
        self.start + index as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|l| self.energy(l)).collect()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Per-cell stream derivation: `hash(master_seed, input, grid_index,
/// round)`. The scan is reproducible under any parallel schedule and any
/// cell subset.
pub fn derive_round_rng(master_seed: u64, input: u64, grid_index: u64, round: u64) -> ChaCha8Rng {
    let mut s = splitmix64(master_seed);
    for v in [input, grid_index, round] {
        s = splitmix64(s ^ v.wrapping_mul(0x9e3779b97f4a7c15));
    }
    ChaCha8Rng::seed_from_u64(s)
}

/// Draw `count` i.i.d. times from `Normal(τ, d²)` out of the given stream.
pub fn sample_times<R: Rng>(params: &RodeoParams, count: usize, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(params.tau, params.dev).expect("dev validated positive");
    (0..count).map(|_| normal.sample(rng)).collect()
}

/// Score Average over rounds with its standard error
/// `s = sqrt(Var / sample_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mean: f64,
    pub stderr: f64,
}

/// Run one rodeo cycle with fixed times and return the per-ancilla scores
/// (sequential) or the single product score (simultaneous).
pub fn run_cycle<R: Rng>(
    evolver: &Evolver,
    input: usize,
    energy: f64,
    times: &[f64],
    convention: Measurement,
    readout: Readout,
    rng: &mut R,
) -> Result<Vec<f64>, RodeoError> {
    let n = times.len();
    let m = evolver.hamiltonian().qubits();
    if input >= 1 << m {
        return Err(RodeoError::InputOutOfRange { input, qubits: m });
    }
    let mut sv = StateVector::rider_state(n, m, input as u64)?;
    for k in 0..n {
        sv.hadamard(k)?;
    }
    for (k, &t) in times.iter().enumerate() {
        evolver.apply_controlled(&mut sv, k, t)?;
        sv.phase_shift(k, energy * t)?;
    }
    for k in 0..n {
        sv.hadamard(k)?;
    }
    let values = match convention {
        Measurement::Sequential => {
            let mut v = Vec::with_capacity(n);
            for k in 0..n {
                v.push(match readout {
                    Readout::Expectation => sv.expect_z(k)?,
                    Readout::Shots(shots) => sv.sample_z(k, shots, rng)?,
                });
            }
            v
        }
        Measurement::Simultaneous => {
            let qubits: Vec<usize> = (0..n).collect();
            vec![match readout {
                Readout::Expectation => sv.expect_z_product(&qubits)?,
                Readout::Shots(shots) => sv.sample_z_product(&qubits, shots, rng)?,
            }]
        }
    };
    Ok(values)
}

/// Score Average `h̄(E, n)` over `N·N_rounds` readouts, with its standard
/// error. `grid_index` labels the cell for stream derivation; standalone
/// calls may pass 0.
pub fn score_average(
    evolver: &Evolver,
    input: usize,
    energy: f64,
    params: &RodeoParams,
    grid_index: u64,
) -> Result<Score, RodeoError> {
    params.validate()?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for round in 0..params.rounds {
        let mut rng = derive_round_rng(params.seed, input as u64, grid_index, round as u64);
        let times = sample_times(params, params.ancillas, &mut rng);
        let values = run_cycle(
            evolver,
            input,
            energy,
            &times,
            params.convention,
            params.readout,
            &mut rng,
        )?;
        for v in values {
            sum += v;
            sum_sq += v * v;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    let var = (sum_sq / count as f64 - mean * mean).max(0.0);
    Ok(Score {
        mean,
        stderr: (var / count as f64).sqrt(),
    })
}

/// Closed-form score for fixed times: the expectation the circuit
/// produces in exact-evolution mode,
/// sequential `h = −(1/N) Σ_k Σ_x c²_{x,n} cos[(E − E_x) t_k]`,
/// simultaneous `h = −Σ_x c²_{x,n} Π_k cos[(E − E_x) t_k]`.
pub fn closed_form_score(
    spectrum: &Spectrum,
    input: usize,
    energy: f64,
    times: &[f64],
    convention: Measurement,
) -> Result<f64, RodeoError> {
    if !spectrum.has_overlaps() {
        return Err(RodeoError::MissingOverlaps);
    }
    let dim = spectrum.eigenvalues().len();
    if input >= dim {
        return Err(RodeoError::InputOutOfRange {
            input,
            qubits: dim.trailing_zeros() as usize,
        });
    }
    let mut acc = 0.0;
    match convention {
        Measurement::Sequential => {
            for (x, &ex) in spectrum.eigenvalues().iter().enumerate() {
                let c2 = spectrum.overlap_sq(x, input).unwrap();
                if c2 == 0.0 {
                    continue;
                }
                let mut cos_sum = 0.0;
                for &t in times {
                    cos_sum += ((energy - ex) * t).cos();
                }
                acc += c2 * cos_sum;
            }
            acc /= times.len() as f64;
        }
        Measurement::Simultaneous => {
            for (x, &ex) in spectrum.eigenvalues().iter().enumerate() {
                let c2 = spectrum.overlap_sq(x, input).unwrap();
                if c2 == 0.0 {
                    continue;
                }
                let mut prod = 1.0;
                for &t in times {
                    prod *= ((energy - ex) * t).cos();
                }
                acc += c2 * prod;
            }
        }
    }
    Ok(-acc)
}

/// Gaussian-averaged theoretical Score Average for one basis input,
/// sequential `h̄ = −Σ_x c²_{x,n} e^{−d²(E−E_x)²/2} cos[(E−E_x)τ]`;
/// the simultaneous variant carries `N d²` in the exponent and `cos^N`.
pub fn theory_score(
    spectrum: &Spectrum,
    input: usize,
    energy: f64,
    params: &RodeoParams,
) -> Result<f64, RodeoError> {
    if !spectrum.has_overlaps() {
        return Err(RodeoError::MissingOverlaps);
    }
    let n = params.ancillas as f64;
    let mut acc = 0.0;
    for (x, &ex) in spectrum.eigenvalues().iter().enumerate() {
        let c2 = spectrum.overlap_sq(x, input).unwrap();
        if c2 == 0.0 {
            continue;
        }
        let delta = energy - ex;
        acc += c2 * match params.convention {
            Measurement::Sequential => {
                (-params.dev * params.dev * delta * delta / 2.0).exp() * (delta * params.tau).cos()
            }
            Measurement::Simultaneous => {
                (-n * params.dev * params.dev * delta * delta / 2.0).exp()
                    * (delta * params.tau).cos().powi(params.ancillas as i32)
            }
        };
    }
    Ok(-acc)
}

/// Basis-summed theoretical number-of-states curve
/// `Σ_x e^{−d²(E−E_x)²/2} cos[(E−E_x)τ]`; needs only eigenvalues.
pub fn theory_nos(eigenvalues: &[f64], energy: f64, params: &RodeoParams) -> f64 {
    eigenvalues
        .iter()
        .map(|&ex| {
            let delta = energy - ex;
            (-params.dev * params.dev * delta * delta / 2.0).exp() * (delta * params.tau).cos()
        })
        .sum()
}

/// Result of a number-of-states scan: per gridpoint, `Ω(E_ℓ) ≈ Σ_n −h̄`
/// with standard errors aggregated in quadrature, plus the per-input
/// Score Average matrix.
#[derive(Debug, Clone)]
pub struct NosEstimate {
    pub grid: EnergyGrid,
    pub energies: Vec<f64>,
    pub omega: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `per_input[ℓ * 2^M + n]` holds the Score Average of cell `(E_ℓ, n)`.
    pub per_input: Vec<Score>,
    pub inputs: usize,
}

impl NosEstimate {
    /// Scan CSV with columns `energy,omega,stderr,theory`; the theory
    /// column is left empty when no oracle curve is supplied.
    pub fn write_csv<W: std::io::Write>(
        &self,
        theory: Option<&[f64]>,
        mut w: W,
    ) -> std::io::Result<()> {
        writeln!(w, "energy,omega,stderr,theory")?;
        for (l, &e) in self.energies.iter().enumerate() {
            match theory {
                Some(t) => writeln!(w, "{},{},{},{}", e, self.omega[l], self.stderr[l], t[l])?,
                None => writeln!(w, "{},{},{},", e, self.omega[l], self.stderr[l])?,
            }
        }
        Ok(())
    }

    /// Per-input matrix CSV with columns `energy,n,sa,stderr`.
    pub fn write_per_input_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "energy,n,sa,stderr")?;
        for (l, &e) in self.energies.iter().enumerate() {
            for n in 0..self.inputs {
                let s = &self.per_input[l * self.inputs + n];
                writeln!(w, "{},{},{},{}", e, n, s.mean, s.stderr)?;
            }
        }
        Ok(())
    }
}

/// Scan every gridpoint with every basis input. Cells are computed
/// independently (embarrassingly parallel over the worker pool);
/// aggregation is a fixed-order reduction so results do not depend on
/// worker count or schedule.
pub fn nos_scan(
    h: &Hamiltonian,
    grid: &EnergyGrid,
    params: &RodeoParams,
    trotter: &TrotterConfig,
) -> Result<NosEstimate, RodeoError> {
    params.validate()?;
    let evolver = Evolver::new(h, trotter)?;
    nos_scan_with_evolver(&evolver, grid, params)
}

/// Scan variant reusing a prebuilt evolver (and its cap-hit counter).
pub fn nos_scan_with_evolver(
    evolver: &Evolver,
    grid: &EnergyGrid,
    params: &RodeoParams,
) -> Result<NosEstimate, RodeoError> {
    params.validate()?;
    let inputs = 1usize << evolver.hamiltonian().qubits();
    let n_points = grid.len();
    let cells: Vec<(usize, usize)> = (0..n_points)
        .flat_map(|l| (0..inputs).map(move |n| (l, n)))
        .collect();
    let scores: Vec<Score> = cells
        .par_iter()
        .map(|&(l, n)| score_average(evolver, n, grid.energy(l), params, l as u64))
        .collect::<Result<_, _>>()?;
    let mut omega = vec![0.0; n_points];
    let mut stderr = vec![0.0; n_points];
    for (idx, &(l, _)) in cells.iter().enumerate() {
        omega[l] -= scores[idx].mean;
        stderr[l] += scores[idx].stderr * scores[idx].stderr;
    }
    for s in &mut stderr {
        *s = s.sqrt();
    }
    Ok(NosEstimate {
        grid: *grid,
        energies: grid.points(),
        omega,
        stderr,
        per_input: scores,
        inputs,
    })
}
