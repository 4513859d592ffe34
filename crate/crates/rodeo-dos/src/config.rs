//! Run configuration (TOML) and the JSON manifest written next to every
//! artifact.
//!
//! A minimal file needs only the model; every other key has a documented
//! default matching the reference scan (single ancilla, τ = 0, d = 20,
//! 500 rounds, grid [−6, 5] with ε = 0.1, first-order product formula
//! with δ = 0.1 but exact evolution mode). Unknown keys are hard errors.
//!
//! ```
//! use rodeo_dos::config::RunConfig;
//!
//! let cfg = RunConfig::parse_toml("
//!     [model]
//!     spins = 5
//!     J = 1.0
//!     B = 0.0
//! ").unwrap();
//! assert_eq!(cfg.rodeo.rounds, 500);
//! assert_eq!(cfg.grid.step, 0.1);
//! assert!(RunConfig::parse_toml("[model]\nspins = 5\ngamma = 1").is_err());
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{EvolutionMode, TrotterConfig};
use crate::hamiltonian::TfimParams;
use crate::rodeo::{EnergyGrid, Measurement, Readout, RodeoParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config validation error: {0}")]
    Validation(String),
    #[error("config I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn validation<T: std::fmt::Display>(e: T) -> ConfigError {
    ConfigError::Validation(e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    spins: usize,
    #[serde(rename = "J", default = "one")]
    exchange: f64,
    #[serde(rename = "B", default)]
    field: f64,
    #[serde(default = "yes")]
    periodic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RodeoSection {
    ancillas: usize,
    rounds: usize,
    tau: f64,
    dev: f64,
    seed: u64,
    /// 0 = exact expectation values; > 0 = that many measurement shots.
    shots: u64,
    convention: Measurement,
}

impl Default for RodeoSection {
    fn default() -> Self {
        let p = RodeoParams::default();
        RodeoSection {
            ancillas: p.ancillas,
            rounds: p.rounds,
            tau: p.tau,
            dev: p.dev,
            seed: p.seed,
            shots: 0,
            convention: p.convention,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GridSection {
    e0: f64,
    ef: f64,
    eps: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            e0: -6.0,
            ef: 5.0,
            eps: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TrotterSection {
    order: u32,
    #[serde(rename = "delta")]
    precision: f64,
    max_steps: u32,
    mode: EvolutionMode,
}

impl Default for TrotterSection {
    fn default() -> Self {
        let c = TrotterConfig::default();
        TrotterSection {
            order: c.order,
            precision: c.precision,
            max_steps: c.max_steps,
            mode: c.mode,
        }
    }
}

/// β-grid specification: log-spaced temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermoSection {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Imaginary part b of the complex inverse temperature.
    pub imag: f64,
    /// Clamp negative scan weights to 0 before thermodynamics.
    pub clamp_negative: bool,
}

impl Default for ThermoSection {
    fn default() -> Self {
        ThermoSection {
            t_min: 0.05,
            t_max: 10.0,
            points: 200,
            imag: 0.0,
            clamp_negative: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSection,
    #[serde(default)]
    rodeo: RodeoSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    trotter: TrotterSection,
    #[serde(default)]
    thermo: ThermoSection,
    #[serde(default = "default_output")]
    output: String,
    #[serde(default)]
    workers: usize,
}

fn default_output() -> String {
    "out".to_string()
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: TfimParams,
    pub rodeo: RodeoParams,
    pub grid: EnergyGrid,
    pub trotter: TrotterConfig,
    pub thermo: ThermoSection,
    pub output: String,
    /// Worker-pool size; 0 picks the machine's core count.
    pub workers: usize,
}

impl RunConfig {
    pub fn parse_toml(source: &str) -> Result<RunConfig, ConfigError> {
        let raw: RawConfig = toml::from_str(source)?;
        let model = TfimParams {
            spins: raw.model.spins,
            exchange: raw.model.exchange,
            field: raw.model.field,
            periodic: raw.model.periodic,
        };
        crate::hamiltonian::build_tfim(&model).map_err(validation)?;
        let rodeo = RodeoParams {
            ancillas: raw.rodeo.ancillas,
            rounds: raw.rodeo.rounds,
            tau: raw.rodeo.tau,
            dev: raw.rodeo.dev,
            seed: raw.rodeo.seed,
            readout: if raw.rodeo.shots == 0 {
                Readout::Expectation
            } else {
                Readout::Shots(raw.rodeo.shots)
            },
            convention: raw.rodeo.convention,
        };
        rodeo.validate().map_err(validation)?;
        let grid = EnergyGrid::new(raw.grid.e0, raw.grid.ef, raw.grid.eps).map_err(validation)?;
        let trotter = TrotterConfig {
            order: raw.trotter.order,
            precision: raw.trotter.precision,
            max_steps: raw.trotter.max_steps,
            mode: raw.trotter.mode,
        };
        trotter.validate().map_err(validation)?;
        let t = raw.thermo;
        if !(t.t_min > 0.0 && t.t_max > t.t_min) {
            return Err(ConfigError::Validation(
                "thermo temperature range needs 0 < t_min < t_max".into(),
            ));
        }
        if t.points < 2 {
            return Err(ConfigError::Validation(
                "thermo.points must be at least 2".into(),
            ));
        }
        Ok(RunConfig {
            model,
            rodeo,
            grid,
            trotter,
            thermo: t,
            output: raw.output,
            workers: raw.workers,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        Self::parse_toml(&std::fs::read_to_string(path)?)
    }

    /// Apply flag and environment overrides: flags win over `RODEO_SEED`,
    /// which wins over the file.
    pub fn apply_overrides(&mut self, ov: &Overrides) -> Result<(), ConfigError> {
        if let Some(seed) = ov.env_seed {
            self.rodeo.seed = seed;
        }
        if let Some(seed) = ov.seed {
            self.rodeo.seed = seed;
        }
        if let Some(workers) = ov.workers {
            self.workers = workers;
        }
        if let Some(out) = &ov.out {
            self.output = out.clone();
        }
        let (e0, ef, eps) = (
            ov.e0.unwrap_or(self.grid.start),
            ov.ef.unwrap_or(self.grid.end),
            ov.eps.unwrap_or(self.grid.step),
        );
        self.grid = EnergyGrid::new(e0, ef, eps).map_err(validation)?;
        if let Some(dev) = ov.dev {
            self.rodeo.dev = dev;
            self.rodeo.validate().map_err(validation)?;
        }
        Ok(())
    }

    pub fn beta_grid(&self) -> Vec<f64> {
        crate::thermo::default_beta_grid(self.thermo.t_min, self.thermo.t_max, self.thermo.points)
    }
}

/// Flag / environment overrides collected by the CLI.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub env_seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub e0: Option<f64>,
    pub ef: Option<f64>,
    pub eps: Option<f64>,
    pub dev: Option<f64>,
}

/// Everything needed to re-execute a run, plus runtime bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub config: &'a RunConfig,
    pub seed: u64,
    pub workers_used: usize,
    pub trotter_cap_hits: u64,
    pub wall_time_s: f64,
    pub timestamp_unix: u64,
    /// Set when a criterion-mandated parameter escalation (more rounds)
    /// was applied on top of the configured values.
    pub rounds_escalated_to: Option<usize>,
}

impl Manifest<'_> {
    pub fn write_json<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn minimal_file_gets_reference_defaults() {
        let cfg = RunConfig::parse_toml("[model]\nspins = 5\nJ = 1.0\nB = 0.0").unwrap();
        assert_eq!(cfg.model.spins, 5);
        assert_eq!(cfg.model.exchange, 1.0);
        assert_eq!(cfg.model.field, 0.0);
        assert!(cfg.model.periodic);
        assert_eq!(cfg.rodeo.ancillas, 1);
        assert_eq!(cfg.rodeo.rounds, 500);
        assert_eq!(cfg.rodeo.tau, 0.0);
        assert_eq!(cfg.rodeo.dev, 20.0);
        assert_eq!(cfg.rodeo.readout, Readout::Expectation);
        assert_abs_diff_eq!(cfg.grid.start, -6.0);
        assert_abs_diff_eq!(cfg.grid.end, 5.0);
        assert_abs_diff_eq!(cfg.grid.step, 0.1);
        assert_eq!(cfg.trotter.order, 1);
        assert_abs_diff_eq!(cfg.trotter.precision, 0.1);
        assert_eq!(cfg.trotter.mode, EvolutionMode::Exact);
        assert_eq!(cfg.thermo.points, 200);
        assert_eq!(cfg.workers, 0);
        assert_eq!(cfg.output, "out");
    }

    #[test]
    fn negative_dev_names_the_field() {
        let err = RunConfig::parse_toml("[model]\nspins = 3\n[rodeo]\ndev = -1.0")
            .unwrap_err()
            .to_string();
        assert!(err.contains("dev must be positive"), "{err}");
    }

    #[test]
    fn unknown_key_names_the_key() {
        let err = RunConfig::parse_toml("[model]\nspins = 5\ngamma = 1.0")
            .unwrap_err()
            .to_string();
        assert!(err.contains("gamma"), "{err}");
        let err = RunConfig::parse_toml("[model]\nspins = 3\n[extra]\nx = 1")
            .unwrap_err()
            .to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn full_file_round_trips() {
        let cfg = RunConfig::parse_toml(
            "output = \"artifacts\"\nworkers = 4\n\
             [model]\nspins = 3\nJ = 1.0\nB = 0.5\nperiodic = true\n\
             [rodeo]\nancillas = 2\nrounds = 100\ntau = 0.5\ndev = 10.0\nseed = 7\nshots = 64\nconvention = \"simultaneous\"\n\
             [grid]\ne0 = -4.0\nef = 4.0\neps = 0.05\n\
             [trotter]\norder = 2\ndelta = 0.01\nmax_steps = 1000\nmode = \"trotter\"\n\
             [thermo]\nt_min = 0.2\nt_max = 10.0\npoints = 50\nimag = 0.0\nclamp_negative = false",
        )
        .unwrap();
        assert_eq!(cfg.rodeo.readout, Readout::Shots(64));
        assert_eq!(cfg.rodeo.convention, Measurement::Simultaneous);
        assert_eq!(cfg.trotter.mode, EvolutionMode::Trotter);
        assert_eq!(cfg.workers, 4);
        assert!(!cfg.thermo.clamp_negative);
    }

    #[test]
    fn invalid_nested_values_rejected() {
        assert!(RunConfig::parse_toml("[model]\nspins = 0").is_err());
        assert!(RunConfig::parse_toml("[model]\nspins = 3\n[grid]\neps = 0.0").is_err());
        assert!(RunConfig::parse_toml("[model]\nspins = 3\n[trotter]\norder = 3").is_err());
        assert!(RunConfig::parse_toml("[model]\nspins = 3\n[thermo]\nt_min = 0.0").is_err());
        assert!(RunConfig::parse_toml("[model]\nspins = 3\n[thermo]\npoints = 1").is_err());
    }

    #[test]
    fn override_precedence_flag_env_file() {
        let mut cfg = RunConfig::parse_toml("[model]\nspins = 3\n[rodeo]\nseed = 1").unwrap();
        cfg.apply_overrides(&Overrides {
            env_seed: Some(2),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.rodeo.seed, 2);
        cfg.apply_overrides(&Overrides {
            seed: Some(3),
            env_seed: Some(2),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.rodeo.seed, 3);
    }

    #[test]
    fn grid_and_dev_overrides_validated() {
        let mut cfg = RunConfig::parse_toml("[model]\nspins = 3").unwrap();
        cfg.apply_overrides(&Overrides {
            e0: Some(-1.4),
            ef: Some(-0.6),
            eps: Some(0.005),
            dev: Some(200.0),
            ..Overrides::default()
        })
        .unwrap();
        assert_abs_diff_eq!(cfg.grid.start, -1.4);
        assert_abs_diff_eq!(cfg.grid.step, 0.005);
        assert_eq!(cfg.rodeo.dev, 200.0);
        let bad = cfg.apply_overrides(&Overrides {
            eps: Some(-1.0),
            ..Overrides::default()
        });
        assert!(bad.is_err());
    }

    #[test]
    fn beta_grid_uses_thermo_section() {
        let cfg = RunConfig::parse_toml("[model]\nspins = 3\n[thermo]\nt_min = 0.5\nt_max = 2.0\npoints = 3").unwrap();
        let g = cfg.beta_grid();
        assert_eq!(g.len(), 3);
        assert_abs_diff_eq!(g[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g[2], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn manifest_serializes_all_parameters() {
        let cfg = RunConfig::parse_toml("[model]\nspins = 3").unwrap();
        let m = Manifest {
            subcommand: "scan",
            config: &cfg,
            seed: 42,
            workers_used: 8,
            trotter_cap_hits: 0,
            wall_time_s: 1.25,
            timestamp_unix: 1_700_000_000,
            rounds_escalated_to: None,
        };
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["seed"], 42);
        assert_eq!(v["config"]["model"]["spins"], 3);
        assert_eq!(v["config"]["rodeo"]["rounds"], 500);
        assert_eq!(v["config"]["grid"]["step"], 0.1);
        assert_eq!(v["config"]["trotter"]["order"], 1);
        assert!(v["rounds_escalated_to"].is_null());
    }
}
