use std::path::Path;

use serde::{Deserialize, Serialize};
use twosite_core::ensemble::InitialState;
use twosite_core::{Site, SpectrumConfig};

use crate::error::CliError;
use crate::manifest::RunManifest;

pub const DEFAULT_SEED: u64 = 20_261_016;

/// Fully resolved run configuration. Every field has a default, so an
/// empty file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub model: ModelSection,
    pub initial_state: InitialSection,
    pub time: TimeSection,
    pub ensemble: EnsembleSection,
    pub fit: FitSection,
    pub sweep: SweepSection,
    pub diagrams: DiagramsSection,
    pub moments: MomentsSection,
    pub effective: EffectiveSection,
    pub bounds: BoundsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n_levels: usize,
    pub coupling: f64,
    pub edge_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub site: u8,
    pub band: [f64; 2],
}

/// Grid in scaled time `T = lambda^2 t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub window: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub couplings: Vec<f64>,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagramsSection {
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    pub k: usize,
    pub n_levels: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveSection {
    /// Initial population of site 1.
    pub p1: f64,
    pub nbar_max: usize,
    /// Coefficient of the rate equation.
    pub ode_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            model: ModelSection::default(),
            initial_state: InitialSection::default(),
            time: TimeSection::default(),
            ensemble: EnsembleSection::default(),
            fit: FitSection::default(),
            sweep: SweepSection::default(),
            diagrams: DiagramsSection::default(),
            moments: MomentsSection::default(),
            effective: EffectiveSection::default(),
            bounds: BoundsSection::default(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_levels: 512,
            coupling: 0.05,
            edge_cutoff: twosite_core::model::DEFAULT_EDGE_CUTOFF,
        }
    }
}

impl Default for InitialSection {
    fn default() -> Self {
        let d = InitialState::default();
        Self {
            site: d.site.label(),
            band: [d.band.0, d.band.1],
        }
    }
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { t_max: 0.3, step: 0.005 }
    }
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { samples: 32 }
    }
}

impl Default for FitSection {
    fn default() -> Self {
        let (lo, hi) = twosite_core::ensemble::DEFAULT_FIT_WINDOW;
        Self { window: [lo, hi] }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            couplings: vec![0.08, 0.05, 0.03],
            sizes: vec![512],
        }
    }
}

impl Default for DiagramsSection {
    fn default() -> Self {
        Self { n: 3, m: 3 }
    }
}

impl Default for MomentsSection {
    fn default() -> Self {
        Self {
            k: 1,
            n_levels: 32,
            samples: 500,
        }
    }
}

impl Default for EffectiveSection {
    fn default() -> Self {
        Self {
            p1: 1.0,
            nbar_max: twosite_core::effective::DEFAULT_NBAR_MAX,
            ode_coefficient: 2.0 * std::f64::consts::PI,
        }
    }
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

/// Reads a TOML config, or the resolved config of a previous run when the
/// path names a `manifest.json`.
pub fn load(path: &Path, command: &str) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", path.display())))?;
        if manifest.command != command {
            return Err(CliError::Usage(format!(
                "{} was written by `{}`, not `{command}`",
                path.display(),
                manifest.command
            )));
        }
        return Ok(manifest.config);
    }
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn field<T>(name: &str, r: twosite_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(format!("config field {name}: {e}")))
}

impl Config {
    pub fn spectrum(&self) -> Result<SpectrumConfig, CliError> {
        let m = &self.model;
        field("model", SpectrumConfig::new(m.n_levels, m.coupling, m.edge_cutoff, self.seed))
    }

    pub fn initial(&self) -> Result<InitialState, CliError> {
        let site = field("initial_state.site", Site::from_index(self.initial_state.site))?;
        let [lo, hi] = self.initial_state.band;
        if !(lo < hi) {
            return Err(CliError::Usage(format!("config field initial_state.band: need lo < hi, got [{lo}, {hi}]")));
        }
        Ok(InitialState { site, band: (lo, hi) })
    }

    pub fn scaled_times(&self) -> Result<Vec<f64>, CliError> {
        field("time", twosite_core::ensemble::scaled_time_grid(self.time.t_max, self.time.step))
    }

    pub fn window(&self) -> Result<(f64, f64), CliError> {
        let [lo, hi] = self.fit.window;
        if !(lo >= 0.0 && lo < hi) {
            return Err(CliError::Usage(format!("config field fit.window: need 0 <= lo < hi, got [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }

    pub fn samples(&self) -> Result<usize, CliError> {
        if self.ensemble.samples == 0 {
            return Err(CliError::Usage("config field ensemble.samples: must be at least 1".into()));
        }
        Ok(self.ensemble.samples)
    }

    /// Initial populations `(P^1, P^2)` implied by the initial site.
    pub fn initial_populations(&self) -> Result<(f64, f64), CliError> {
        Ok(match self.initial()?.site {
            Site::One => (1.0, 0.0),
            Site::Two => (0.0, 1.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: Config = toml::from_str("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.initial().unwrap(), InitialState::default());
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let err = toml::from_str::<Config>("[model]\nn_level = 4\n").unwrap_err().to_string();
        assert!(err.contains("n_level"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = Config::default();
        c.seed = 7;
        c.sweep.sizes = vec![16, 32];
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<Config>(&text).unwrap(), c);
    }
}
