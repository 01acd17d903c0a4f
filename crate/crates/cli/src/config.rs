//! Run configuration: a sectioned TOML file with full schema validation,
//! overridable by command-line flags. A run is reproducible from the
//! resolved config stored in its manifest.

use lorenz_casimir::flow::{FlowParams, Perturbation};
use lorenz_casimir::pipeline::RunBudget;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    /// "none", "axial" or "planar".
    pub kind: String,
    #[serde(default)]
    pub epsilon: f64,
    /// Planar forcing angle in degrees.
    #[serde(default)]
    pub theta_deg: f64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self { kind: "none".into(), epsilon: 0.0, theta_deg: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub events: usize,
    pub orbits: usize,
    pub tol: f64,
    pub seed: u64,
    pub grid_bins: usize,
    pub knots_per_branch: usize,
    pub lattice_depth: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            events: 100_000,
            orbits: 64,
            tol: 1e-10,
            seed: 7,
            grid_bins: 512,
            knots_per_branch: 96,
            lattice_depth: 40,
        }
    }
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))
            }
        }
    }

    pub fn flow_params(&self) -> Result<FlowParams, CliError> {
        FlowParams::new(self.flow.sigma, self.flow.rho, self.flow.beta)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn perturbation(&self) -> Result<Perturbation, CliError> {
        match self.perturbation.kind.as_str() {
            "none" => Ok(Perturbation::None),
            "axial" | "axial_forcing" => {
                Ok(Perturbation::AxialForcing { epsilon: self.perturbation.epsilon })
            }
            "planar" | "planar_forcing" => Ok(Perturbation::PlanarForcing {
                epsilon: self.perturbation.epsilon,
                theta: self.perturbation.theta_deg.to_radians(),
            }),
            other => Err(CliError::Config(format!(
                "perturbation.kind must be none | axial | planar, got {other:?}"
            ))),
        }
    }

    pub fn budget(&self) -> RunBudget {
        RunBudget {
            total_events: self.run.events,
            orbits: self.run.orbits,
            tol: self.run.tol,
            seed: self.run.seed,
            grid_bins: self.run.grid_bins,
            knots_per_branch: self.run.knots_per_branch,
        }
    }
}
