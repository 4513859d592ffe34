//! Number-of-states estimation for spin Hamiltonians with the rodeo
//! algorithm, plus the oracles and thermodynamics needed to check it.
//!
//! The pipeline: build a Pauli-string Hamiltonian ([`hamiltonian`]), run
//! ancilla-controlled time evolution on a dense state vector ([`circuit`],
//! [`evolution`]), average the ancilla σ^z readout into a Score Average
//! and sum it over basis inputs into Ω(E) ([`rodeo`]), locate levels on a
//! refined scan ([`peaks`]), and Laplace-transform the result into Z, F,
//! and c_B ([`thermo`]). [`config`] holds the TOML run configuration and
//! the manifest written next to every artifact.
//!
//! ```
//! use rodeo_dos::hamiltonian::{build_tfim, exact_spectrum, TfimParams};
//! use rodeo_dos::rodeo::{nos_scan, EnergyGrid, RodeoParams, theory_nos};
//! use rodeo_dos::evolution::TrotterConfig;
//!
//! // three-spin zero-field Ising chain: levels at −3 (×2) and 1 (×6)
//! let h = build_tfim(&TfimParams { spins: 3, exchange: 1.0, field: 0.0, periodic: true }).unwrap();
//! let params = RodeoParams { rounds: 40, ..RodeoParams::default() };
//! let grid = EnergyGrid::new(-3.0, 1.0, 4.0).unwrap();
//! let est = nos_scan(&h, &grid, &params, &TrotterConfig::default()).unwrap();
//! assert!((est.omega[0] - 2.0).abs() < 4.0 * est.stderr[0] + 1e-9);
//! assert!((est.omega[1] - 6.0).abs() < 4.0 * est.stderr[1] + 1e-9);
//!
//! // and the Gaussian-broadened theory curve agrees at the peaks
//! let s = exact_spectrum(&h, false).unwrap();
//! assert!((theory_nos(s.eigenvalues(), -3.0, &params) - 2.0).abs() < 1e-9);
//! ```

pub mod circuit;
pub mod config;
pub mod evolution;
pub mod hamiltonian;
pub mod peaks;
pub mod rodeo;
pub mod thermo;
