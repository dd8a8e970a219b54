//! Experiment configuration read from TOML. Every field has a default and
//! unknown keys are rejected.

use std::path::{Path, PathBuf};

use crit3_core::evolution::EvolutionConfig;
use crit3_core::special::SpecialConfig;
use crit3_core::virial::{default_scan_masses, ScanConfig};
use crit3_core::{MassTriple, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub r_max: f64,
    /// Stretch length `L` of the map `r = L s / (1 - s^2)`.
    pub stretch: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 2048, r_max: 1.0e4, stretch: 8.0 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::stretched(self.r_max, self.n, self.stretch).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Also compute `lambda1` on `n/4` and `n/2` and extrapolate.
    pub convergence: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { convergence: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    /// Initial data `scale * Q + perturbation * w` with `w` a seeded smooth bump.
    pub scale: f64,
    pub perturbation: f64,
    /// Run the scattering diagnostic when the run completes.
    pub scattering: bool,
    pub run: EvolutionConfig,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            scale: 0.9,
            perturbation: 0.0,
            scattering: false,
            run: EvolutionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecialSection {
    pub amplitude: f64,
    /// Run the backward leg after the forward one.
    pub backward: bool,
    /// Grid for the backward leg; dispersion needs a milder stretch.
    pub backward_grid: GridConfig,
    pub series: SpecialConfig,
}

impl Default for SpecialSection {
    fn default() -> Self {
        Self {
            amplitude: -1.0,
            backward: true,
            backward_grid: GridConfig { n: 4096, r_max: 5000.0, stretch: 32.0 },
            series: SpecialConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VirialSection {
    pub lattice: Vec<[f64; 3]>,
    pub scan: ScanConfig,
}

impl Default for VirialSection {
    fn default() -> Self {
        Self { lattice: default_scan_masses().iter().map(|m| m.as_array()).collect(), scan: ScanConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulateSection {
    /// The Newton conditions pair with `Lambda Q ~ r^-2`, so parameter recovery
    /// is sensitive to the outer radius; this grid is wider than the default.
    pub grid: GridConfig,
    /// Perturbation sizes for the comparability suite.
    pub epsilons: Vec<f64>,
    /// Group elements `(eta, theta, mu)` for round-trip checks.
    pub round_trip: Vec<[f64; 3]>,
    /// Snapshot files to decompose.
    pub inputs: Vec<PathBuf>,
}

impl Default for ModulateSection {
    fn default() -> Self {
        Self {
            grid: GridConfig { n: 2048, r_max: 1.0e5, stretch: 8.0 },
            epsilons: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            round_trip: vec![[0.4, -0.2, 1.3], [1.0, 1.0, 0.5], [-1.0, 0.5, 2.0]],
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub masses: [f64; 3],
    pub seed: u64,
    pub out: PathBuf,
    pub grid: GridConfig,
    pub spectrum: SpectrumSection,
    pub evolve: EvolveSection,
    pub special: SpecialSection,
    pub virial: VirialSection,
    pub modulate: ModulateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            masses: [1.0, 1.0, 3.0],
            seed: 0,
            out: PathBuf::from("lab-out"),
            grid: GridConfig::default(),
            spectrum: SpectrumSection::default(),
            evolve: EvolveSection::default(),
            special: SpecialSection::default(),
            virial: VirialSection::default(),
            modulate: ModulateSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn mass_triple(&self) -> Result<MassTriple, CliError> {
        let [a, b, c] = self.masses;
        MassTriple::new(a, b, c).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Parses `m1,m2,m3`.
pub fn parse_masses(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated masses, got '{s}'"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| format!("bad mass '{p}': {e}"))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back.masses, cfg.masses);
        assert_eq!(back.grid, cfg.grid);
        assert_eq!(back.virial.lattice.len(), 12);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = ExperimentConfig::parse("masses = [1.0, 1.0, 3.0]\n[grid]\nn = 512\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg = ExperimentConfig::parse("[evolve.run]\ndt = 0.005\n").unwrap();
        assert_eq!(cfg.evolve.run.dt, 0.005);
        assert_eq!(cfg.evolve.run.t_end, EvolutionConfig::default().t_end);
        assert_eq!(cfg.grid.n, 2048);
    }

    #[test]
    fn mass_flag_parsing() {
        assert_eq!(parse_masses("1, 2,4").unwrap(), [1.0, 2.0, 4.0]);
        assert!(parse_masses("1,2").is_err());
        assert!(parse_masses("1,x,2").is_err());
    }
}
