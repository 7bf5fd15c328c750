use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::params::DkfParams;
use super::wire::{Message, Payload, Wire};
use crate::graph::SensorGraph;
use crate::linalg::{spd_solve_vec, unvech, HalfVec, SymMatrix};
use crate::model::{information_contribution, information_vector, SensorSpec, StateSpaceModel};
use crate::{Error, Result};

/// How per-node work inside one synchronous round is scheduled. Both give
/// bit-identical results: every node reads only the round's snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Serial,
    Parallel,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub node_id: usize,
    pub x_prior: DVector<f64>,
    pub p_prior: SymMatrix,
    /// Primal state iterate `ξ_{i,t,l}`.
    pub xi: DVector<f64>,
    /// Transformed state dual `λ̃_{i,t,l}`. Never leaves the node.
    pub lambda_tilde: DVector<f64>,
    /// Estimate of `vech(Σ_j H_jᵀ R_j⁻¹ H_j)`.
    pub theta: HalfVec,
    /// Transformed covariance dual `ν̃_{i,t}`. Never leaves the node.
    pub nu_tilde: HalfVec,
    pub x_post: DVector<f64>,
    pub p_post: SymMatrix,
}

impl NodeState {
    /// State at `t = 0`: posterior `(x0, p0)`, `θ = N·ω_i`, `ν̃ = 0`.
    pub fn initial(node_id: usize, x0: DVector<f64>, p0: SymMatrix, n_omega: HalfVec) -> Result<Self> {
        let n = x0.len();
        if p0.dim() != n || n_omega.source_dim() != n {
            return Err(Error::Dimension(format!("node {node_id}: inconsistent initial dimensions")));
        }
        p0.cholesky().map_err(|_| Error::NotPositiveDefinite(format!("initial covariance of node {node_id}")))?;
        Ok(Self {
            node_id,
            x_prior: x0.clone(),
            p_prior: p0.clone(),
            xi: x0.clone(),
            lambda_tilde: DVector::zeros(n),
            nu_tilde: HalfVec::zeros(n),
            theta: n_omega,
            x_post: x0,
            p_post: p0,
        })
    }
}

/// `x_prior = F x_post`, `P_prior = F P_post Fᵀ + Q`.
pub fn predict(node: &mut NodeState, model: &StateSpaceModel) -> Result<()> {
    let f = model.f();
    node.x_prior = f * &node.x_post;
    node.p_prior = SymMatrix::new(f * node.p_post.as_matrix() * f.transpose() + model.q().as_matrix())?;
    debug_assert!(node.p_prior.is_positive_definite());
    Ok(())
}

/// Per-step quantities of one node's local MAP term.
#[derive(Debug, Clone)]
pub struct LocalGain {
    /// `HᵢᵀRᵢ⁻¹Hᵢ + (1/N) P_prior⁻¹`.
    pub k_inv: SymMatrix,
    pub k: SymMatrix,
    /// `HᵢᵀRᵢ⁻¹yᵢ + (1/N) P_prior⁻¹ x_prior`.
    pub rhs: DVector<f64>,
}

pub fn compute_gain(node: &NodeState, sensor: &SensorSpec, n_nodes: usize) -> Result<(SymMatrix, SymMatrix)> {
    let p_inv = node.p_prior.inverse()?;
    let info = information_contribution(&sensor.h, &sensor.r)?;
    let k_inv = SymMatrix::new(info.as_matrix() + p_inv.as_matrix() / n_nodes as f64)?;
    let k = k_inv.inverse().map_err(|_| Error::NotPositiveDefinite(format!("gain of node {}", node.node_id)))?;
    Ok((k_inv, k))
}

pub fn local_rhs(node: &NodeState, sensor: &SensorSpec, y: &DVector<f64>, n_nodes: usize) -> Result<DVector<f64>> {
    let p_inv_x = spd_solve_vec(&node.p_prior, &node.x_prior)?;
    Ok(information_vector(&sensor.h, &sensor.r, y)? + p_inv_x / n_nodes as f64)
}

fn for_each_node<F>(nodes: &mut [NodeState], execution: Execution, f: F) -> Result<()>
where
    F: Fn(usize, &mut NodeState) -> Result<()> + Sync + Send,
{
    match execution {
        Execution::Serial => nodes.iter_mut().enumerate().try_for_each(|(i, n)| f(i, n)),
        Execution::Parallel => nodes.par_iter_mut().enumerate().try_for_each(|(i, n)| f(i, n)),
    }
}

/// One synchronous round `l → l+1` of the state consensus.
///
/// Each node posts `ξ_{i,t,l}`, forms `dᵢ = Σ_{j∈Nᵢ}(ξᵢ − ξⱼ)` from what it
/// received, then
///
/// ```text
/// λ̃ ← λ̃ + α_λ K⁻¹ dᵢ
/// ξ ← K (bᵢ − λ̃) − μ dᵢ
/// ```
#[allow(clippy::too_many_arguments)]
pub fn state_correction_round(
    nodes: &mut [NodeState],
    gains: &[LocalGain],
    graph: &SensorGraph,
    params: &DkfParams,
    wire: &mut Wire,
    t: usize,
    l: usize,
    execution: Execution,
) -> Result<()> {
    for node in nodes.iter() {
        let msg = Message { sender: node.node_id, t, sub_iteration: Some(l), payload: Payload::State(node.xi.clone()) };
        wire.broadcast(graph, msg)?;
    }
    let snapshot = &*wire;
    let result = for_each_node(nodes, execution, |i, node| {
        let g = &gains[i];
        let d = snapshot.disagreement(graph, i, &node.xi)?;
        node.lambda_tilde += g.k_inv.as_matrix() * &d * params.alpha_lambda;
        node.xi = g.k.as_matrix() * (&g.rhs - &node.lambda_tilde) - d * params.mu;
        Ok(())
    });
    wire.end_round();
    result
}

/// One step of the covariance consensus, on the previous step's `θ`:
///
/// ```text
/// eᵢ = Σ_{j∈Nᵢ}(θᵢ − θⱼ)
/// ν̃ ← ν̃ + α_ν eᵢ
/// θ ← N ωᵢ − ν̃ − α_ν eᵢ
/// ```
pub fn covariance_consensus_step(
    nodes: &mut [NodeState],
    n_omega: &[HalfVec],
    graph: &SensorGraph,
    params: &DkfParams,
    wire: &mut Wire,
    t: usize,
    execution: Execution,
) -> Result<()> {
    for node in nodes.iter() {
        let msg = Message {
            sender: node.node_id,
            t,
            sub_iteration: None,
            payload: Payload::Covariance(node.theta.as_vector().clone()),
        };
        wire.broadcast(graph, msg)?;
    }
    let snapshot = &*wire;
    let result = for_each_node(nodes, execution, |i, node| {
        let e = snapshot.disagreement(graph, i, node.theta.as_vector())? * params.alpha_nu;
        *node.nu_tilde.as_vector_mut() += &e;
        *node.theta.as_vector_mut() = n_omega[i].as_vector() - node.nu_tilde.as_vector() - e;
        Ok(())
    });
    wire.end_round();
    result
}

/// `x_post = ξ`, `P_post = (P_prior⁻¹ + Θ)⁻¹` with `Θ = unvech(θ)`.
///
/// While the covariance consensus is still transient `Θ` may be indefinite.
/// If `P_prior⁻¹ + Θ` is not positive definite, the negative eigenvalues of
/// `Θ` are floored at zero and the sum is formed again. Returns whether
/// that projection was needed.
pub fn assemble_posterior(node: &mut NodeState) -> Result<bool> {
    let p_inv = node.p_prior.inverse()?;
    let theta = unvech(&node.theta);
    let info = SymMatrix::new(p_inv.as_matrix() + theta.as_matrix())?;
    let (info, projected) = if info.is_positive_definite() {
        (info, false)
    } else {
        let eig = SymmetricEigen::new(theta.into_inner());
        let floored = eig.eigenvalues.map(|v| v.max(0.0));
        let proj: DMatrix<f64> = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
        (SymMatrix::new(p_inv.as_matrix() + proj)?, true)
    };
    node.p_post = info
        .inverse()
        .map_err(|_| Error::NotPositiveDefinite(format!("posterior information of node {}", node.node_id)))?;
    node.x_post = node.xi.clone();
    Ok(projected)
}
