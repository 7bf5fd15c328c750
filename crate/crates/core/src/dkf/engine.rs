use nalgebra::DVector;
use rayon::prelude::*;

use super::node::{
    assemble_posterior, compute_gain, covariance_consensus_step, local_rhs, predict, state_correction_round, Execution,
    LocalGain, NodeState,
};
use super::params::{DkfParams, ValidatedParams};
use super::wire::{CommLedger, Wire};
use crate::graph::SensorGraph;
use crate::linalg::{HalfVec, SymMatrix};
use crate::model::StateSpaceModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineOptions {
    pub execution: Execution,
    /// Run the covariance consensus `L` times per step instead of once.
    pub sub_iterated_covariance: bool,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    pub t: usize,
    /// Mean over nodes of `‖ξ_{i,t,l} − ξ̄_{t,l}‖` for `l = 0..=L`.
    pub consensus_error: Vec<f64>,
    /// Nodes whose `Θ` had to be floored before the posterior was formed.
    pub projections: usize,
}

/// All nodes of the network, advanced one filter step at a time.
#[derive(Debug)]
pub struct DkfEngine {
    model: StateSpaceModel,
    graph: SensorGraph,
    params: DkfParams,
    options: EngineOptions,
    nodes: Vec<NodeState>,
    n_omega: Vec<HalfVec>,
    wire: Wire,
    t: usize,
}

fn scaled_local_information(model: &StateSpaceModel, t: usize) -> Result<Vec<HalfVec>> {
    let n = model.n_nodes() as f64;
    (0..model.n_nodes())
        .map(|i| {
            let mut w = model.local_information_vech(i, t)?;
            *w.as_vector_mut() *= n;
            Ok(w)
        })
        .collect()
}

fn at_node(node: usize, t: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtNode { node, t, source: Box::new(e) }
}

impl DkfEngine {
    /// `initial[i]` is node `i`'s posterior `(x̂_{i,0|0}, P_{i,0|0})`.
    pub fn new(
        model: StateSpaceModel,
        graph: SensorGraph,
        params: ValidatedParams,
        initial: Vec<(DVector<f64>, SymMatrix)>,
        options: EngineOptions,
    ) -> Result<Self> {
        let n = model.n_nodes();
        if graph.n_nodes() != n {
            return Err(Error::Dimension(format!("graph has {} nodes, model has {n}", graph.n_nodes())));
        }
        if initial.len() != n {
            return Err(Error::Dimension(format!("{} initial states for {n} nodes", initial.len())));
        }
        let n_omega = scaled_local_information(&model, 0)?;
        let nodes = initial
            .into_iter()
            .zip(&n_omega)
            .enumerate()
            .map(|(i, ((x, p), w))| NodeState::initial(i, x, p, w.clone()).map_err(at_node(i, 0)))
            .collect::<Result<Vec<_>>>()?;
        let wire = Wire::new(n, model.state_dim());
        Ok(Self { model, graph, params: *params.get(), options, nodes, n_omega, wire, t: 0 })
    }

    /// Every node starts from the model's `(x0_mean, P0)`.
    pub fn with_common_prior(
        model: StateSpaceModel,
        graph: SensorGraph,
        params: ValidatedParams,
        options: EngineOptions,
    ) -> Result<Self> {
        let init = vec![(model.x0_mean().clone(), model.p0().clone()); model.n_nodes()];
        Self::new(model, graph, params, init, options)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn model(&self) -> &StateSpaceModel {
        &self.model
    }

    pub fn graph(&self) -> &SensorGraph {
        &self.graph
    }

    pub fn params(&self) -> &DkfParams {
        &self.params
    }

    pub fn ledger(&self) -> &CommLedger {
        self.wire.ledger()
    }

    pub fn into_ledger(self) -> CommLedger {
        self.wire.into_ledger()
    }

    /// `N·ωᵢ` used by the most recent covariance step.
    pub fn scaled_information(&self) -> &[HalfVec] {
        &self.n_omega
    }

    /// `max |Σᵢ(θᵢ + ν̃ᵢ) − Σᵢ N ωᵢ|` over the entries, together with
    /// `max |Σᵢ N ωᵢ|` for scale.
    pub fn conservation_residual(&self) -> (f64, f64) {
        let len = self.n_omega[0].len();
        let mut lhs = DVector::zeros(len);
        let mut rhs = DVector::zeros(len);
        for (node, w) in self.nodes.iter().zip(&self.n_omega) {
            lhs += node.theta.as_vector() + node.nu_tilde.as_vector();
            rhs += w.as_vector();
        }
        ((lhs - &rhs).amax(), rhs.amax())
    }

    fn consensus_error(&self) -> f64 {
        let n = self.nodes.len() as f64;
        let mean = self.nodes.iter().fold(DVector::zeros(self.model.state_dim()), |a, s| a + &s.xi) / n;
        self.nodes.iter().map(|s| (&s.xi - &mean).norm()).sum::<f64>() / n
    }

    /// Runs one filter step on `measurements[i] = y_{i,t}` for `t = self.t() + 1`.
    pub fn step(&mut self, measurements: &[DVector<f64>]) -> Result<StepReport> {
        let n = self.nodes.len();
        if measurements.len() != n {
            return Err(Error::Dimension(format!("{} measurements for {n} nodes", measurements.len())));
        }
        let t = self.t + 1;
        let model = &self.model;
        let exec = self.options.execution;

        let prep = |node: &mut NodeState| -> Result<LocalGain> {
            let i = node.node_id;
            predict(node, model).map_err(at_node(i, t))?;
            node.xi = node.x_prior.clone();
            node.lambda_tilde.fill(0.0);
            let sensor = model.sensor_at(i, t);
            let (k_inv, k) = compute_gain(node, &sensor, n).map_err(at_node(i, t))?;
            let rhs = local_rhs(node, &sensor, &measurements[i], n).map_err(at_node(i, t))?;
            Ok(LocalGain { k_inv, k, rhs })
        };
        let gains: Vec<LocalGain> = match exec {
            Execution::Serial => self.nodes.iter_mut().map(prep).collect::<Result<_>>()?,
            Execution::Parallel => self.nodes.par_iter_mut().map(prep).collect::<Result<_>>()?,
        };

        let sub_iterations = self.params.sub_iterations;
        let mut consensus_error = Vec::with_capacity(sub_iterations + 1);
        consensus_error.push(self.consensus_error());
        for l in 0..sub_iterations {
            state_correction_round(&mut self.nodes, &gains, &self.graph, &self.params, &mut self.wire, t, l, exec)?;
            consensus_error.push(self.consensus_error());
        }

        if self.model.is_time_varying() {
            self.n_omega = scaled_local_information(&self.model, t)?;
        }
        let cov_rounds = if self.options.sub_iterated_covariance { sub_iterations } else { 1 };
        for _ in 0..cov_rounds {
            covariance_consensus_step(
                &mut self.nodes,
                &self.n_omega,
                &self.graph,
                &self.params,
                &mut self.wire,
                t,
                exec,
            )?;
        }

        let finish = |node: &mut NodeState| assemble_posterior(node).map_err(at_node(node.node_id, t));
        let projected: Vec<bool> = match exec {
            Execution::Serial => self.nodes.iter_mut().map(finish).collect::<Result<_>>()?,
            Execution::Parallel => self.nodes.par_iter_mut().map(finish).collect::<Result<_>>()?,
        };

        self.t = t;
        Ok(StepReport { t, consensus_error, projections: projected.iter().filter(|&&p| p).count() })
    }
}
