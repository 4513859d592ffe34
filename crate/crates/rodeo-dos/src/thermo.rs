//! Canonical thermodynamics from a number-of-states table.
//!
//! The partition function is the Laplace transform of the table,
//! `Z(𝓑) = Σ_ℓ Ω(E_ℓ) e^{−𝓑E_ℓ}` at complex inverse temperature
//! `𝓑 = β + ib`; weights enter as multiplicities, so no grid-step factor
//! multiplies the sum. From Z follow the free energy
//! `F = −ln(Z)/𝓑`, the microcanonical entropy `S = ln Ω`, and the
//! per-spin specific heat `c_B = β²(⟨E²⟩ − ⟨E⟩²)/M`.
//!
//! ```
//! use rodeo_dos::thermo::NosTable;
//!
//! // the two-fold ground level and its first excitations of the
//! // five-spin zero-field Ising chain
//! let table = NosTable::from_levels(&[(-5.0, 2.0), (-1.0, 20.0), (3.0, 10.0)]).unwrap();
//! let z = table.partition_function(0.0, 0.0).unwrap();
//! assert!((z.re - 32.0).abs() < 1e-12); // counting sum rule: Σ Ω = 2^5
//! let cb = table.specific_heat(&[1.0], 5).unwrap()[0];
//! assert!(cb > 0.0);
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error("number-of-states table is empty")]
    EmptyTable,
    #[error("table energies must be finite and strictly increasing")]
    BadEnergies,
    #[error("table weights must be finite")]
    BadWeights,
    #[error("partition function vanishes at 𝓑 = {beta} + {b}i (Fisher zero)")]
    FisherZero { beta: f64, b: f64 },
    #[error("inverse temperature must be nonzero for the free energy")]
    ZeroBeta,
    #[error("entropy requires a positive weight, got {0}")]
    NonpositiveWeight(f64),
    #[error("no level within {tol} of energy {energy}")]
    LevelNotFound { energy: f64, tol: f64 },
    #[error("beta grid is empty")]
    EmptyGrid,
    #[error("curves must have equal length")]
    LengthMismatch,
}

/// Where a table's weights came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Rodeo,
    Exact,
}

/// Energy levels with their (possibly estimated) multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NosTable {
    entries: Vec<(f64, f64)>,
    source: TableSource,
}

impl NosTable {
    fn build(entries: Vec<(f64, f64)>, source: TableSource) -> Result<Self, ThermoError> {
        if entries.is_empty() {
            return Err(ThermoError::EmptyTable);
        }
        for w in entries.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(ThermoError::BadEnergies);
            }
        }
        for &(e, o) in &entries {
            if !e.is_finite() {
                return Err(ThermoError::BadEnergies);
            }
            if !o.is_finite() {
                return Err(ThermoError::BadWeights);
            }
        }
        Ok(NosTable { entries, source })
    }

    /// Exact table from `(energy, multiplicity)` levels.
    pub fn from_levels(levels: &[(f64, f64)]) -> Result<Self, ThermoError> {
        Self::build(levels.to_vec(), TableSource::Exact)
    }

    /// Rodeo table from a scan curve. Negative weights are statistical
    /// noise; by default they are clamped to 0 here (the raw scan output
    /// keeps them) because they can drive Z negative at large β.
    pub fn from_scan(energies: &[f64], omega: &[f64], clamp_negative: bool) -> Result<Self, ThermoError> {
        let entries = energies
            .iter()
            .zip(omega)
            .map(|(&e, &o)| (e, if clamp_negative { o.max(0.0) } else { o }))
            .collect();
        Self::build(entries, TableSource::Rodeo)
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|&(_, o)| o).sum()
    }

    /// `ln Z(𝓑)` with the `e^{−𝓑E_min}` factor extracted before summing,
    /// so β up to 10³ stays finite in double precision.
    pub fn log_partition_function(&self, beta: f64, b: f64) -> Result<Complex64, ThermoError> {
        let bb = Complex64::new(beta, b);
        let e_min = self.entries[0].0;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut scale = 0.0;
        for &(e, o) in &self.entries {
            let w = (-beta * (e - e_min)).exp();
            sum += o * w * Complex64::new(0.0, -b * (e - e_min)).exp();
            scale += o.abs() * w;
        }
        // a cancellation past double precision is a genuine zero of Z
        if sum.norm() <= 1e-14 * scale {
            return Err(ThermoError::FisherZero { beta, b });
        }
        Ok(sum.ln() - bb * e_min)
    }

    /// `Z(𝓑) = Σ_ℓ Ω(E_ℓ) e^{−𝓑E_ℓ}`.
    pub fn partition_function(&self, beta: f64, b: f64) -> Result<Complex64, ThermoError> {
        Ok(self.log_partition_function(beta, b)?.exp())
    }

    /// `F(𝓑) = −ln Z / 𝓑` on the principal branch; real when `b = 0`.
    pub fn free_energy(&self, beta: f64, b: f64) -> Result<Complex64, ThermoError> {
        let bb = Complex64::new(beta, b);
        if bb.norm() == 0.0 {
            return Err(ThermoError::ZeroBeta);
        }
        Ok(-self.log_partition_function(beta, b)? / bb)
    }

    /// Microcanonical entropy `S = ln Ω` (k_B = 1) of the level nearest
    /// `energy` within `tol`.
    pub fn entropy(&self, energy: f64, tol: f64) -> Result<f64, ThermoError> {
        let (_, o) = *self
            .entries
            .iter()
            .filter(|(e, _)| (e - energy).abs() <= tol)
            .min_by(|a, b| {
                (a.0 - energy)
                    .abs()
                    .partial_cmp(&(b.0 - energy).abs())
                    .unwrap()
            })
            .ok_or(ThermoError::LevelNotFound { energy, tol })?;
        if o <= 0.0 {
            return Err(ThermoError::NonpositiveWeight(o));
        }
        Ok(o.ln())
    }

    /// Canonical moments `⟨E⟩` and `⟨E²⟩` at real β, computed against the
    /// minimum-energy-shifted Boltzmann weights.
    fn canonical_moments(&self, beta: f64) -> (f64, f64) {
        let e_min = self.entries[0].0;
        let mut z = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for &(e, o) in &self.entries {
            let w = o * (-beta * (e - e_min)).exp();
            z += w;
            m1 += w * e;
            m2 += w * e * e;
        }
        (m1 / z, m2 / z)
    }

    /// Per-spin specific heat `c_B = β²(⟨E²⟩ − ⟨E⟩²)/M` (the analytic
    /// second derivative of ln Z), evaluated on a β grid.
    pub fn specific_heat(&self, beta_grid: &[f64], spins: usize) -> Result<Vec<f64>, ThermoError> {
        if beta_grid.is_empty() {
            return Err(ThermoError::EmptyGrid);
        }
        Ok(beta_grid
            .iter()
            .map(|&beta| {
                let (m1, m2) = self.canonical_moments(beta);
                beta * beta * (m2 - m1 * m1).max(0.0) / spins as f64
            })
            .collect())
    }

    /// Finite-difference cross-check `c_B = −(β²/M) ∂²(βF)/∂β²`, which is
    /// mathematically identical to the variance form (`βF = −ln Z`).
    pub fn specific_heat_fd(
        &self,
        beta_grid: &[f64],
        spins: usize,
        step: f64,
    ) -> Result<Vec<f64>, ThermoError> {
        if beta_grid.is_empty() {
            return Err(ThermoError::EmptyGrid);
        }
        // differencing the shifted log-sum instead of ln Z itself drops
        // the β·E_min linear term (zero second derivative) and with it
        // most of the cancellation error
        let e_min = self.entries[0].0;
        let shifted = |beta: f64| -> f64 {
            -self
                .entries
                .iter()
                .map(|&(e, o)| o * (-beta * (e - e_min)).exp())
                .sum::<f64>()
                .ln()
        };
        let mut out = Vec::with_capacity(beta_grid.len());
        for &beta in beta_grid {
            let h = step.min(beta / 2.0);
            let d2 = (shifted(beta + h) - 2.0 * shifted(beta) + shifted(beta - h)) / (h * h);
            out.push(-beta * beta * d2 / spins as f64);
        }
        Ok(out)
    }

    /// The literal reading `c_B = (1/M) ∂²F/∂β²` by central finite
    /// differences, exposed for side-by-side inspection; it differs from
    /// the variance form by the `β²`-vs-`1/𝓑` bookkeeping.
    pub fn specific_heat_literal(
        &self,
        beta_grid: &[f64],
        spins: usize,
        step: f64,
    ) -> Result<Vec<f64>, ThermoError> {
        if beta_grid.is_empty() {
            return Err(ThermoError::EmptyGrid);
        }
        let mut out = Vec::with_capacity(beta_grid.len());
        for &beta in beta_grid {
            let h = step.min(beta / 2.0);
            let f = |b: f64| -> Result<f64, ThermoError> { Ok(self.free_energy(b, 0.0)?.re) };
            let d2 = (f(beta + h)? - 2.0 * f(beta)? + f(beta - h)?) / (h * h);
            out.push(d2 / spins as f64);
        }
        Ok(out)
    }

    /// Evaluate Z, F, and c_B over a β grid at a fixed imaginary part `b`.
    pub fn curve(&self, beta_grid: &[f64], b: f64, spins: usize) -> Result<ThermoCurve, ThermoError> {
        if beta_grid.is_empty() {
            return Err(ThermoError::EmptyGrid);
        }
        let cb = self.specific_heat(beta_grid, spins)?;
        let mut z = Vec::with_capacity(beta_grid.len());
        let mut f = Vec::with_capacity(beta_grid.len());
        for &beta in beta_grid {
            z.push(self.partition_function(beta, b)?);
            f.push(self.free_energy(beta, b)?);
        }
        Ok(ThermoCurve {
            beta_grid: beta_grid.to_vec(),
            imag_part: b,
            z,
            f,
            cb,
        })
    }
}

/// Thermodynamic observables on a β grid at fixed `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoCurve {
    pub beta_grid: Vec<f64>,
    pub imag_part: f64,
    pub z: Vec<Complex64>,
    pub f: Vec<Complex64>,
    pub cb: Vec<f64>,
}

impl ThermoCurve {
    /// CSV with columns `beta,T,Z_real,Z_imag,F_real,cB`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "beta,T,Z_real,Z_imag,F_real,cB")?;
        for (i, &beta) in self.beta_grid.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                beta,
                1.0 / beta,
                self.z[i].re,
                self.z[i].im,
                self.f[i].re,
                self.cb[i]
            )?;
        }
        Ok(())
    }
}

/// `|1 − a/b|` pointwise; a zero reference flags the point as infinite.
pub fn relative_difference(curve_a: &[f64], curve_b: &[f64]) -> Result<Vec<f64>, ThermoError> {
    if curve_a.len() != curve_b.len() {
        return Err(ThermoError::LengthMismatch);
    }
    Ok(curve_a
        .iter()
        .zip(curve_b)
        .map(|(&a, &b)| if b == 0.0 { f64::INFINITY } else { (1.0 - a / b).abs() })
        .collect())
}

/// Comparison CSV with columns `beta,cB_rodeo,cB_exact,rel_diff`.
pub fn write_compare_csv<W: std::io::Write>(
    beta_grid: &[f64],
    cb_rodeo: &[f64],
    cb_exact: &[f64],
    mut w: W,
) -> Result<(), std::io::Error> {
    let rel = relative_difference(cb_rodeo, cb_exact)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    writeln!(w, "beta,cB_rodeo,cB_exact,rel_diff")?;
    for (i, &beta) in beta_grid.iter().enumerate() {
        writeln!(w, "{},{},{},{}", beta, cb_rodeo[i], cb_exact[i], rel[i])?;
    }
    Ok(())
}

/// Default β grid for reference runs: `count` log-spaced temperatures
/// over `[t_min, t_max]`, returned as β = 1/T in increasing-β order.
pub fn default_beta_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    assert!(t_min > 0.0 && t_max > t_min && count >= 2);
    let (ln_lo, ln_hi) = (t_min.ln(), t_max.ln());
    (0..count)
        .map(|i| {
            let t = (ln_hi + (ln_lo - ln_hi) * i as f64 / (count - 1) as f64).exp();
            1.0 / t
        })
        .collect()
}
