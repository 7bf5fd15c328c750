//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[model]`, `[graph]`,
//! `[dkf]`, `[run]` and `[flags]`. Every key has a default, so an empty file
//! describes the 100-node reference experiment:
//!
//! ```toml
//! [model]
//! dt = 0.1
//! q_intensity = 1.0
//! r_var = 0.5
//! sensor_assignment = "static_split"   # or "per_step_random"
//! assignment_seed = 0
//! x0_mean = [0.0, 0.0, 1.0, 1.0]
//! p0_diag = [1.0, 1.0, 1.0, 1.0]
//! init_spread = 1.0                    # half-width of the box node estimates start in
//!
//! [graph]
//! topology = "random_geometric"        # ring | path | complete | random_geometric | explicit
//! n_nodes = 100
//! radius = 0.18
//! seed = 18
//! # edges_file = "net.edges"           # for topology = "explicit"
//!
//! [dkf]
//! auto = false                         # derive step sizes from the graph spectrum
//! alpha_lambda = 0.10
//! mu = 0.001
//! alpha_nu = 0.04
//! sub_iterations = 20
//!
//! [run]
//! horizon_steps = 100
//! n_mc_runs = 50
//! master_seed = 1
//! output_dir = "dkf-out"
//!
//! [flags]
//! noise_free = false
//! sub_iterated_covariance = false
//! override_stability_guard = false
//! ```

use std::path::{Path, PathBuf};

use dkf_core::dkf::{DkfParams, ParamCheck, ValidatedParams};
use dkf_core::graph::{build_graph, load_edge_list, spectral_summary, SensorGraph, SpectralSummary, Topology};
use dkf_core::linalg::SymMatrix;
use dkf_core::model::{build_constant_velocity_model, SensorAssignment, StateSpaceModel};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentKind {
    StaticSplit,
    PerStepRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Ring,
    Path,
    Complete,
    RandomGeometric,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub dt: f64,
    pub q_intensity: f64,
    pub r_var: f64,
    pub sensor_assignment: AssignmentKind,
    pub assignment_seed: u64,
    pub x0_mean: Vec<f64>,
    pub p0_diag: Vec<f64>,
    pub init_spread: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            dt: 0.1,
            q_intensity: 1.0,
            r_var: 0.5,
            sensor_assignment: AssignmentKind::StaticSplit,
            assignment_seed: 0,
            x0_mean: vec![0.0, 0.0, 1.0, 1.0],
            p0_diag: vec![1.0; 4],
            init_spread: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub topology: TopologyKind,
    pub n_nodes: usize,
    pub radius: f64,
    pub seed: u64,
    pub edges_file: Option<PathBuf>,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self { topology: TopologyKind::RandomGeometric, n_nodes: 100, radius: 0.18, seed: 18, edges_file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DkfSection {
    pub auto: bool,
    pub alpha_lambda: f64,
    pub mu: f64,
    pub alpha_nu: f64,
    pub sub_iterations: usize,
}

impl Default for DkfSection {
    fn default() -> Self {
        Self { auto: false, alpha_lambda: 0.10, mu: 0.001, alpha_nu: 0.04, sub_iterations: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub horizon_steps: usize,
    pub n_mc_runs: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { horizon_steps: 100, n_mc_runs: 50, master_seed: 1, output_dir: PathBuf::from("dkf-out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlagsSection {
    /// No process, measurement or initial-state noise, and every node starts
    /// exactly at `x0_mean`.
    pub noise_free: bool,
    pub sub_iterated_covariance: bool,
    pub override_stability_guard: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub graph: GraphSection,
    pub dkf: DkfSection,
    pub run: RunSection,
    pub flags: FlagsSection,
    /// Directory relative paths inside the file resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn reject(msg: impl Into<String>) -> HarnessError {
    HarnessError::ConfigRejected(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::ConfigRead { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Range checks that do not need the graph.
    pub fn check(&self) -> Result<()> {
        let m = &self.model;
        if [m.dt, m.q_intensity, m.r_var].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(reject("model.dt, model.q_intensity and model.r_var must be positive"));
        }
        if m.x0_mean.len() != 4 || m.p0_diag.len() != 4 {
            return Err(reject("model.x0_mean and model.p0_diag need 4 entries"));
        }
        if m.p0_diag.iter().any(|&v| v.is_nan() || v <= 0.0) {
            return Err(reject("model.p0_diag entries must be positive"));
        }
        if m.init_spread.is_nan() || m.init_spread < 0.0 {
            return Err(reject("model.init_spread must be non-negative"));
        }
        if self.graph.n_nodes < 2 {
            return Err(reject("graph.n_nodes must be at least 2"));
        }
        if self.graph.topology == TopologyKind::Explicit && self.graph.edges_file.is_none() {
            return Err(reject("graph.topology = \"explicit\" needs graph.edges_file"));
        }
        if self.run.horizon_steps == 0 || self.run.n_mc_runs == 0 {
            return Err(reject("run.horizon_steps and run.n_mc_runs must be at least 1"));
        }
        if !self.dkf.auto {
            DkfParams::new(self.dkf.alpha_lambda, self.dkf.mu, self.dkf.alpha_nu, self.dkf.sub_iterations)
                .map_err(|e| reject(e.to_string()))?;
        } else if self.dkf.sub_iterations == 0 {
            return Err(reject("dkf.sub_iterations must be at least 1"));
        }
        Ok(())
    }

    pub fn topology(&self) -> Result<Topology> {
        Ok(match self.graph.topology {
            TopologyKind::Ring => Topology::Ring,
            TopologyKind::Path => Topology::Path,
            TopologyKind::Complete => Topology::Complete,
            TopologyKind::RandomGeometric => {
                Topology::RandomGeometric { radius: self.graph.radius, seed: self.graph.seed }
            }
            TopologyKind::Explicit => {
                let file = self.graph.edges_file.as_ref().ok_or_else(|| reject("graph.edges_file missing"))?;
                let path = match &self.base_dir {
                    Some(base) if file.is_relative() => base.join(file),
                    _ => file.clone(),
                };
                Topology::Explicit(load_edge_list(&path).map_err(|e| reject(format!("{}: {e}", path.display())))?)
            }
        })
    }

    pub fn build_graph(&self) -> Result<SensorGraph> {
        build_graph(&self.topology()?, self.graph.n_nodes).map_err(|e| reject(e.to_string()))
    }

    pub fn spectrum(&self, graph: &SensorGraph) -> Result<SpectralSummary> {
        spectral_summary(graph, dkf_core::graph::DEFAULT_SPECTRAL_TOL).map_err(HarnessError::Setup)
    }

    pub fn assignment(&self) -> SensorAssignment {
        match self.model.sensor_assignment {
            AssignmentKind::StaticSplit => SensorAssignment::StaticSplit,
            AssignmentKind::PerStepRandom => SensorAssignment::PerStepRandom { seed: self.model.assignment_seed },
        }
    }

    pub fn build_model(&self) -> Result<StateSpaceModel> {
        self.build_model_with(self.assignment())
    }

    /// Same model with a different sensor assignment.
    pub fn build_model_with(&self, assignment: SensorAssignment) -> Result<StateSpaceModel> {
        let m = &self.model;
        let cv = build_constant_velocity_model(m.dt, m.q_intensity, self.graph.n_nodes, assignment, m.r_var)
            .map_err(|e| reject(e.to_string()))?;
        let p0 = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(m.p0_diag.clone())))
            .map_err(|e| reject(e.to_string()))?;
        StateSpaceModel::new(
            cv.f().clone(),
            cv.q().clone(),
            DVector::from_vec(m.x0_mean.clone()),
            p0,
            cv.sensors().to_vec(),
            cv.schedule().clone(),
        )
        .map_err(|e| reject(e.to_string()))
    }

    /// Configured (or derived) step sizes, unchecked.
    pub fn params(&self, spectrum: &SpectralSummary) -> Result<DkfParams> {
        let d = &self.dkf;
        let p = if d.auto {
            DkfParams::auto(spectrum, d.sub_iterations)
        } else {
            DkfParams::new(d.alpha_lambda, d.mu, d.alpha_nu, d.sub_iterations)
        };
        p.map_err(|e| reject(e.to_string()))
    }

    /// Step sizes after the stability guard, honoring the override flag.
    pub fn validated_params(&self, spectrum: &SpectralSummary) -> Result<(ValidatedParams, ParamCheck)> {
        let p = self.params(spectrum)?;
        let check = p.check(spectrum);
        let v = if self.flags.override_stability_guard {
            p.override_guard()
        } else {
            p.validate(spectrum).map_err(|e| reject(e.to_string()))?
        };
        Ok((v, check))
    }
}
