//! Experiment configuration files.
//!
//! A TOML document with one table per concern; every key is optional and
//! unknown keys are rejected:
//!
//! ```toml
//! [model]        # any ModelParams key: J1, J2, g, delta1, delta2, omega, B_L, B_H, tau, T, ...
//! [cycle]        # engine, bath, thermalization, basis, renormalize, n_cycles, ...
//! [sweep]        # variable, values
//! [spectrum]     # target, fields
//! [transitions]  # taus, direction, levels
//! [output]       # path, vertices
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qotto_core::analysis::{LevelSelection, SpectrumTarget};
use qotto_core::cycle::{BathMode, CycleConfig};
use qotto_core::dynamics::ThermalizationMode;
use qotto_core::measurement::{MeasurementBasis, MeasurementSpec};
use qotto_core::model::RampDirection;
use qotto_core::thermo::EngineModel;
use qotto_core::ModelParams64;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelParams64,
    pub cycle: CycleSection,
    pub sweep: Option<SweepSection>,
    pub spectrum: Option<SpectrumSection>,
    pub transitions: Option<TransitionsSection>,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleSection {
    pub engine: EngineModel,
    pub bath: BathMode,
    /// Defaults to `finite_time_gkls` for an always-on bath, `exact_gibbs`
    /// otherwise.
    pub thermalization: Option<ThermalizationMode>,
    pub basis: MeasurementBasis,
    pub renormalize: bool,
    pub n_cycles: usize,
    /// Defaults to `true` for engine `B`, `false` for engine `A`.
    pub reset_ancilla: Option<bool>,
    pub stop_at_limit_cycle: bool,
}

impl Default for CycleSection {
    fn default() -> Self {
        Self {
            engine: EngineModel::SystemMeasurement,
            bath: BathMode::Ideal,
            thermalization: None,
            basis: MeasurementBasis::Proj00,
            renormalize: true,
            n_cycles: 1,
            reset_ancilla: None,
            stop_at_limit_cycle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub target: SpectrumTarget,
    /// Field grid, strictly ascending, at least five points.
    pub fields: Vec<f64>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            target: SpectrumTarget::SystemOnly,
            fields: (1..=200).map(|k| 0.02 * f64::from(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionsSection {
    pub taus: Vec<f64>,
    pub direction: RampDirection,
    /// Reported levels; the lowest four when absent.
    pub levels: Option<Vec<usize>>,
}

impl Default for TransitionsSection {
    fn default() -> Self {
        Self {
            taus: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            direction: RampDirection::Expand,
            levels: None,
        }
    }
}

impl TransitionsSection {
    pub fn selection(&self) -> LevelSelection {
        self.levels
            .clone()
            .map_or_else(LevelSelection::default, LevelSelection::Indices)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// CSV destination; standard output when absent.
    pub path: Option<PathBuf>,
    /// JSON dump of the last cycle's vertex states.
    pub vertices: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(doc: &str) -> Result<Self, String> {
        toml::from_str(doc).map_err(|e| e.to_string())
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Cycle configuration assembled from `[model]` and `[cycle]`.
    pub fn cycle_config(&self) -> CycleConfig<f64> {
        let c = &self.cycle;
        let mut config = CycleConfig::new(self.model.clone(), c.engine);
        config.bath = c.bath;
        config.thermalization = c.thermalization.unwrap_or(match c.bath {
            BathMode::AlwaysOn => ThermalizationMode::FiniteTimeGkls,
            BathMode::Ideal => ThermalizationMode::ExactGibbs,
        });
        config.measurement = MeasurementSpec {
            renormalize: c.renormalize,
            ..MeasurementSpec::new(config.measurement.target, c.basis)
        };
        config.n_cycles = c.n_cycles;
        if let Some(reset) = c.reset_ancilla {
            config.reset_ancilla = reset;
        }
        config.stop_at_limit_cycle = c.stop_at_limit_cycle;
        config
    }
}
