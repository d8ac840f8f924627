//! JSON run configuration. Unknown keys are rejected and every missing key
//! takes its default, so a minimal document only names the experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::infsup::InfSupOptions;
use crate::analysis::manufactured::ManufacturedSolution;
use crate::analysis::solve::{HxOptions, KrylovMethod, SolverSetup};
use crate::analysis::timedomain::TimeDomainConfig;
use crate::assembly::ScalarWeight;
use crate::error::{Error, Result};
use crate::geometry::InterfaceSpec;
use crate::ife_local::CoefficientPair;
use crate::solvers::KrylovOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Mesh,
    #[default]
    Solve,
    Converge,
    Infsup,
    PrecondBench,
    Timedomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Coefficients {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self::from_rho(100.0)
    }
}

impl Coefficients {
    /// `alpha+ = beta+ = rho`, unit values inside.
    pub fn from_rho(rho: f64) -> Self {
        Self {
            alpha_plus: rho,
            alpha_minus: 1.0,
            beta_plus: rho,
            beta_minus: 1.0,
        }
    }

    pub fn pair(&self) -> Result<CoefficientPair> {
        CoefficientPair::new(self.alpha_plus, self.alpha_minus, self.beta_plus, self.beta_minus)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: KrylovMethod,
    pub preconditioner: bool,
    pub tol: f64,
    pub max_it: usize,
    pub restart: usize,
    /// Expanding width `l` of the interface block.
    pub width: usize,
    /// Widths swept by `precond-bench`.
    pub widths: Vec<usize>,
    pub amg_cycles: usize,
    pub scalar_weight: ScalarWeight,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let hx = HxOptions::default();
        let k = KrylovOptions::default();
        Self {
            method: KrylovMethod::Gmres,
            preconditioner: true,
            tol: k.tol,
            max_it: k.max_it,
            restart: k.restart,
            width: hx.width,
            widths: vec![0, 1, 2],
            amg_cycles: hx.amg_cycles,
            scalar_weight: hx.scalar_weight,
        }
    }
}

impl SolverConfig {
    pub fn setup(&self, width: usize) -> SolverSetup {
        SolverSetup {
            method: self.method,
            hx: self.preconditioner.then(|| HxOptions {
                width,
                amg_cycles: self.amg_cycles,
                scalar_weight: self.scalar_weight,
                ..HxOptions::default()
            }),
            krylov: KrylovOptions {
                tol: self.tol,
                max_it: self.max_it,
                restart: self.restart,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            vtk: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub interface: InterfaceSpec,
    pub coefficients: Coefficients,
    pub meshes: Vec<usize>,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub seed: u64,
    pub timedomain: TimeDomainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::default(),
            interface: InterfaceSpec::Sphere {
                center: [0.0; 3],
                radius: 0.6,
            },
            coefficients: Coefficients::default(),
            meshes: vec![4, 8],
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            seed: InfSupOptions::default().seed,
            timedomain: TimeDomainConfig::default(),
        }
    }
}

fn config_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.meshes.is_empty() {
            return Err(config_err("meshes", "at least one mesh size is required"));
        }
        for (i, &n) in self.meshes.iter().enumerate() {
            if n == 0 {
                return Err(config_err(&format!("meshes[{i}]"), "mesh size must be positive"));
            }
        }
        self.interface
            .validate()
            .map_err(|e| config_err("interface", e.to_string()))?;
        self.coefficients
            .pair()
            .map_err(|e| config_err("coefficients", e.to_string()))?;
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(config_err("solver.tol", format!("must lie in (0, 1), got {}", s.tol)));
        }
        for (name, v) in [("solver.max_it", s.max_it), ("solver.restart", s.restart), ("solver.amg_cycles", s.amg_cycles)] {
            if v == 0 {
                return Err(config_err(name, "must be positive"));
            }
        }
        if matches!(self.experiment, Experiment::Solve | Experiment::Converge | Experiment::PrecondBench) {
            self.manufactured()?;
        }
        if self.experiment == Experiment::Timedomain {
            self.timedomain
                .validate()
                .map_err(|e| config_err("timedomain", e.to_string()))?;
        }
        Ok(())
    }

    /// Manufactured solution for a sphere interface centred at the origin.
    pub fn manufactured(&self) -> Result<ManufacturedSolution> {
        match self.interface {
            InterfaceSpec::Sphere { center, radius } if center == [0.0; 3] && radius < 1.0 => {
                ManufacturedSolution::new(radius, 1.0, 1.0, self.coefficients.pair()?)
                    .map_err(|e| config_err("interface", e.to_string()))
            }
            _ => Err(config_err(
                "interface",
                "the manufactured solution needs a sphere centred at the origin with radius < 1",
            )),
        }
    }
}
