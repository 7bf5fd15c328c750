//! Centralized references for the distributed engine.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{spd_solve_vec, SymMatrix};
use crate::model::StateSpaceModel;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CentralizedState {
    pub x_hat: DVector<f64>,
    pub p: SymMatrix,
    pub p_prior: SymMatrix,
    /// Posterior information matrix, `P⁻¹`.
    pub omega: SymMatrix,
}

impl CentralizedState {
    pub fn initial(x_hat: DVector<f64>, p: SymMatrix) -> Result<Self> {
        let omega = p.inverse()?;
        Ok(Self { x_hat, p_prior: p.clone(), p, omega })
    }
}

/// One observation fed to [`information_correct`].
pub struct Observation<'a> {
    pub h: &'a DMatrix<f64>,
    pub r: &'a SymMatrix,
    pub y: &'a DVector<f64>,
}

/// Information-form correction:
/// `Ω = P_prior⁻¹ + Σ HᵢᵀRᵢ⁻¹Hᵢ`, `Ω x̂ = P_prior⁻¹ x_prior + Σ HᵢᵀRᵢ⁻¹yᵢ`.
pub fn information_correct(
    x_prior: &DVector<f64>,
    p_prior: &SymMatrix,
    obs: &[Observation<'_>],
) -> Result<CentralizedState> {
    let omega_prior = p_prior.inverse()?;
    let mut omega = omega_prior.as_matrix().clone();
    let mut info = omega_prior.as_matrix() * x_prior;
    for o in obs {
        let chol = o.r.cholesky()?;
        omega += o.h.transpose() * chol.solve(o.h);
        info += o.h.transpose() * chol.solve(o.y);
    }
    let omega = SymMatrix::new(omega)?;
    let p = omega.inverse().map_err(|_| Error::NotPositiveDefinite("centralized posterior information".into()))?;
    let x_hat = spd_solve_vec(&omega, &info)?;
    Ok(CentralizedState { x_hat, p, p_prior: p_prior.clone(), omega })
}

pub fn centralized_predict(state: &CentralizedState, model: &StateSpaceModel) -> Result<(DVector<f64>, SymMatrix)> {
    let f = model.f();
    let x_prior = f * &state.x_hat;
    let p_prior = SymMatrix::new(f * state.p.as_matrix() * f.transpose() + model.q().as_matrix())?;
    Ok((x_prior, p_prior))
}

/// Predict with `(F, Q)`, then fuse every node's measurement at step `t`.
pub fn centralized_kf_step(
    state: &CentralizedState,
    model: &StateSpaceModel,
    measurements: &[DVector<f64>],
    t: usize,
) -> Result<CentralizedState> {
    if measurements.len() != model.n_nodes() {
        return Err(Error::Dimension(format!("{} measurements for {} nodes", measurements.len(), model.n_nodes())));
    }
    let (x_prior, p_prior) = centralized_predict(state, model)?;
    let obs: Vec<Observation<'_>> = measurements
        .iter()
        .enumerate()
        .map(|(i, y)| Observation { h: model.measurement_matrix(i, t), r: model.noise_covariance(i), y })
        .collect();
    information_correct(&x_prior, &p_prior, &obs)
}

/// Inputs of one node's local MAP term at a fixed time step.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    pub x_prior: DVector<f64>,
    pub p_prior: SymMatrix,
    pub y: DVector<f64>,
    pub h: DMatrix<f64>,
    pub r: SymMatrix,
}

impl LocalProblem {
    /// `HᵀR⁻¹H + (1/N) P_prior⁻¹`.
    pub fn hessian(&self, n_nodes: usize) -> Result<SymMatrix> {
        let rh = self.r.cholesky()?.solve(&self.h);
        let p_inv = self.p_prior.inverse()?;
        SymMatrix::new(self.h.transpose() * rh + p_inv.as_matrix() / n_nodes as f64)
    }

    /// `HᵀR⁻¹y + (1/N) P_prior⁻¹ x_prior`.
    pub fn linear_term(&self, n_nodes: usize) -> Result<DVector<f64>> {
        let ry = self.r.cholesky()?.solve(&self.y);
        let p_inv_x = spd_solve_vec(&self.p_prior, &self.x_prior)?;
        Ok(self.h.transpose() * ry + p_inv_x / n_nodes as f64)
    }

    /// Gradient of the local cost at `xi`.
    pub fn gradient(&self, xi: &DVector<f64>, n_nodes: usize) -> Result<DVector<f64>> {
        Ok(self.hessian(n_nodes)?.as_matrix() * xi - self.linear_term(n_nodes)?)
    }
}

/// Minimizer of `Σᵢ fᵢ(ξ)` over a common `ξ`:
/// `(Σ Kᵢ⁻¹)⁻¹ Σ (HᵢᵀRᵢ⁻¹yᵢ + (1/N) Pᵢ⁻¹ x̂ᵢ)`.
pub fn consensus_fixed_point(nodes: &[LocalProblem], n_nodes: usize) -> Result<DVector<f64>> {
    let dim = nodes.first().map(|p| p.x_prior.len()).ok_or_else(|| Error::InvalidArgument("no nodes".into()))?;
    let mut hess = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    for p in nodes {
        hess += p.hessian(n_nodes)?.as_matrix();
        rhs += p.linear_term(n_nodes)?;
    }
    let hess = SymMatrix::new(hess)?;
    spd_solve_vec(&hess, &rhs).map_err(|_| Error::NotPositiveDefinite("aggregated consensus Hessian".into()))
}

/// Unweighted mean of the local MAP estimates `Kᵢ bᵢ`.
///
/// The primal-only state recursion conserves the plain node average of
/// `ξ` from its first round on, so this (not [`consensus_fixed_point`]) is
/// where it settles when the `Kᵢ` differ across nodes.
pub fn local_map_mean(nodes: &[LocalProblem], n_nodes: usize) -> Result<DVector<f64>> {
    let dim = nodes.first().map(|p| p.x_prior.len()).ok_or_else(|| Error::InvalidArgument("no nodes".into()))?;
    let mut acc = DVector::zeros(dim);
    for p in nodes {
        acc += spd_solve_vec(&p.hessian(n_nodes)?, &p.linear_term(n_nodes)?)?;
    }
    Ok(acc / nodes.len() as f64)
}
