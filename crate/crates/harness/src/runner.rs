//! Monte-Carlo execution of a scenario.

use dkf_core::dkf::{CommLedger, CommRecord, DkfEngine, EngineOptions, ParamCheck};
use dkf_core::graph::SpectralSummary;
use dkf_core::linalg::{dare_solve, SymMatrix};
use dkf_core::model::{simulate_trajectory_with, NoiseMode, SensorAssignment, StateSpaceModel};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};

const DARE_TOL: f64 = 1e-13;
const DARE_MAX_ITER: usize = 1_000_000;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of stream `stream` of Monte-Carlo run `run`.
pub fn derive_seed(master_seed: u64, run: usize, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ run as u64) ^ stream)
}

/// Aggregated results over all Monte-Carlo runs. Time index `k` refers to
/// filter step `t = k + 1`.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub n_nodes: usize,
    pub n_runs: usize,
    /// `sqrt(mean over runs of ‖p_t − p̂_{i,t|t}‖²)`.
    pub rmse_pos: Vec<Vec<f64>>,
    pub rmse_vel: Vec<Vec<f64>>,
    /// Mean over runs of the mean over nodes of `‖ξ_{i,t,l} − ξ̄_{t,l}‖`.
    pub consensus_error: Vec<Vec<f64>>,
    /// Mean over runs of `‖P_{i,t|t−1} − P*‖_F / ‖P*‖_F`.
    pub cov_error: Vec<Vec<f64>>,
    /// Ledger of the first run; every run sends the same traffic.
    pub comm: CommLedger,
    /// Traffic summed over all runs.
    pub comm_totals: CommRecord,
    pub schema_violations: u64,
    /// Largest `|Σᵢ(θᵢ + ν̃ᵢ) − Σᵢ N ωᵢ|` entry seen at any step of any run.
    pub max_conservation_residual: f64,
    /// The same, divided by the largest entry of `Σᵢ N ωᵢ`.
    pub max_conservation_relative: f64,
    /// Posterior assemblies that needed eigenvalue flooring.
    pub projections: usize,
    pub p_star: SymMatrix,
    pub check: ParamCheck,
    pub spectrum: SpectralSummary,
}

impl RunMetrics {
    pub fn horizon(&self) -> usize {
        self.rmse_pos.len()
    }
}

struct RunResult {
    sq_pos: Vec<Vec<f64>>,
    sq_vel: Vec<Vec<f64>>,
    consensus: Vec<Vec<f64>>,
    cov_error: Vec<Vec<f64>>,
    ledger: CommLedger,
    residual: f64,
    relative: f64,
    projections: usize,
}

/// `P*` of the centralized filter. A time-varying sensor schedule has no
/// single DARE, so the static split with the same noise levels stands in.
pub fn steady_state_prior(cfg: &ScenarioConfig, model: &StateSpaceModel) -> Result<SymMatrix> {
    let reference =
        if model.is_time_varying() { cfg.build_model_with(SensorAssignment::StaticSplit)? } else { model.clone() };
    dare_solve(reference.f(), &reference.stacked_h(0), reference.q(), &reference.stacked_r(), DARE_TOL, DARE_MAX_ITER)
        .map_err(HarnessError::Setup)
}

fn initial_estimates(cfg: &ScenarioConfig, model: &StateSpaceModel, seed: u64) -> Vec<(DVector<f64>, SymMatrix)> {
    let spread = if cfg.flags.noise_free { 0.0 } else { cfg.model.init_spread };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..model.n_nodes())
        .map(|_| {
            let mut x = model.x0_mean().clone();
            if spread > 0.0 {
                x += DVector::from_fn(x.len(), |_, _| rng.random_range(-spread..spread));
            }
            (x, model.p0().clone())
        })
        .collect()
}

fn single_run(cfg: &ScenarioConfig, setup: &Setup, run: usize) -> std::result::Result<RunResult, dkf_core::Error> {
    let master = cfg.run.master_seed;
    let horizon = cfg.run.horizon_steps;
    let noise = if cfg.flags.noise_free { NoiseMode::NoiseFree } else { NoiseMode::Stochastic };
    let traj = simulate_trajectory_with(&setup.model, horizon, derive_seed(master, run, 0), noise)?;
    let init = initial_estimates(cfg, &setup.model, derive_seed(master, run, 1));
    let options = EngineOptions { sub_iterated_covariance: cfg.flags.sub_iterated_covariance, ..Default::default() };
    let mut engine = DkfEngine::new(setup.model.clone(), setup.graph.clone(), setup.params, init, options)?;

    let n = setup.model.n_nodes();
    let p_norm = setup.p_star.norm();
    let mut out = RunResult {
        sq_pos: Vec::with_capacity(horizon),
        sq_vel: Vec::with_capacity(horizon),
        consensus: Vec::with_capacity(horizon),
        cov_error: Vec::with_capacity(horizon),
        ledger: CommLedger::new(),
        residual: 0.0,
        relative: 0.0,
        projections: 0,
    };
    for t in 1..=horizon {
        let report = engine.step(&traj.measurements[t])?;
        let truth = &traj.states[t];
        let mut pos = Vec::with_capacity(n);
        let mut vel = Vec::with_capacity(n);
        let mut cov = Vec::with_capacity(n);
        for s in engine.nodes() {
            let e = truth - &s.x_post;
            pos.push(e[0] * e[0] + e[1] * e[1]);
            vel.push(e[2] * e[2] + e[3] * e[3]);
            cov.push((s.p_prior.as_matrix() - setup.p_star.as_matrix()).norm() / p_norm);
        }
        out.sq_pos.push(pos);
        out.sq_vel.push(vel);
        out.cov_error.push(cov);
        out.consensus.push(report.consensus_error);
        out.projections += report.projections;
        let (res, scale) = engine.conservation_residual();
        out.residual = out.residual.max(res);
        out.relative = out.relative.max(res / scale.max(f64::MIN_POSITIVE));
    }
    out.ledger = engine.into_ledger();
    Ok(out)
}

struct Setup {
    model: StateSpaceModel,
    graph: dkf_core::graph::SensorGraph,
    params: dkf_core::dkf::ValidatedParams,
    p_star: SymMatrix,
}

fn add_into(acc: &mut [Vec<f64>], x: &[Vec<f64>]) {
    for (a, b) in acc.iter_mut().zip(x) {
        for (u, v) in a.iter_mut().zip(b) {
            *u += v;
        }
    }
}

/// Runs `n_mc_runs` independent trajectories and aggregates their metrics.
///
/// Runs execute in parallel; the reduction walks them in run order, so the
/// result does not depend on scheduling.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunMetrics> {
    cfg.check()?;
    let graph = cfg.build_graph()?;
    let spectrum = cfg.spectrum(&graph)?;
    let (params, check) = cfg.validated_params(&spectrum)?;
    let model = cfg.build_model()?;
    let p_star = steady_state_prior(cfg, &model)?;
    let setup = Setup { model, graph, params, p_star };

    let runs = cfg.run.n_mc_runs;
    let results: Vec<RunResult> = (0..runs)
        .into_par_iter()
        .map(|run| single_run(cfg, &setup, run).map_err(|source| HarnessError::Numerical { run, source }))
        .collect::<Result<_>>()?;

    let horizon = cfg.run.horizon_steps;
    let n = setup.model.n_nodes();
    let l = params.get().sub_iterations;
    let mut sq_pos = vec![vec![0.0; n]; horizon];
    let mut sq_vel = vec![vec![0.0; n]; horizon];
    let mut cov_error = vec![vec![0.0; n]; horizon];
    let mut consensus = vec![vec![0.0; l + 1]; horizon];
    let mut comm_totals = CommRecord::default();
    let mut schema_violations = 0;
    let (mut residual, mut relative, mut projections) = (0.0f64, 0.0f64, 0);
    for r in &results {
        add_into(&mut sq_pos, &r.sq_pos);
        add_into(&mut sq_vel, &r.sq_vel);
        add_into(&mut cov_error, &r.cov_error);
        add_into(&mut consensus, &r.consensus);
        let tot = r.ledger.totals();
        comm_totals.messages += tot.messages;
        comm_totals.scalars += tot.scalars;
        schema_violations += r.ledger.schema_violations();
        residual = residual.max(r.residual);
        relative = relative.max(r.relative);
        projections += r.projections;
    }
    let k = runs as f64;
    let root_mean =
        |m: Vec<Vec<f64>>| m.into_iter().map(|row| row.into_iter().map(|v| (v / k).sqrt()).collect()).collect();
    let mean = |m: Vec<Vec<f64>>| m.into_iter().map(|row| row.into_iter().map(|v| v / k).collect()).collect();

    let comm = results.into_iter().next().map(|r| r.ledger).unwrap_or_default();
    Ok(RunMetrics {
        n_nodes: n,
        n_runs: runs,
        rmse_pos: root_mean(sq_pos),
        rmse_vel: root_mean(sq_vel),
        consensus_error: mean(consensus),
        cov_error: mean(cov_error),
        comm,
        comm_totals,
        schema_violations,
        max_conservation_residual: residual,
        max_conservation_relative: relative,
        projections,
        p_star: setup.p_star,
        check,
        spectrum,
    })
}
