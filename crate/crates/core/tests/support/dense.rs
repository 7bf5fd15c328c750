//! Monolithic reference for one filter step.
//!
//! Stacks every node into one vector and applies the state and covariance
//! recursions with explicit `𝓛 ⊗ I` Kronecker matrices and plain dense
//! inverses. Shares no code with the per-node engine beyond nalgebra.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Column-major lower-triangle half-vectorization.
pub fn vech(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for c in 0..n {
        for r in c..n {
            out.push(m[(r, c)]);
        }
    }
    DVector::from_vec(out)
}

pub fn unvech(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for c in 0..n {
        for r in c..n {
            m[(r, c)] = v[k];
            m[(c, r)] = v[k];
            k += 1;
        }
    }
    m
}

fn stack(parts: &[DVector<f64>]) -> DVector<f64> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p.iter().copied());
    }
    DVector::from_vec(out)
}

fn unstack(v: &DVector<f64>, n_nodes: usize) -> Vec<DVector<f64>> {
    let d = v.len() / n_nodes;
    (0..n_nodes).map(|i| v.rows(i * d, d).into_owned()).collect()
}

fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let total: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(total, total);
    let mut k = 0;
    for b in blocks {
        out.view_mut((k, k), b.shape()).copy_from(b);
        k += b.nrows();
    }
    out
}

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("dense oracle hit a singular matrix")
}

/// Per-node quantities carried from one step to the next.
#[derive(Debug, Clone)]
pub struct DenseState {
    pub x_post: Vec<DVector<f64>>,
    pub p_post: Vec<DMatrix<f64>>,
    pub theta: Vec<DVector<f64>>,
    pub nu_tilde: Vec<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct DenseInputs<'a> {
    pub f: &'a DMatrix<f64>,
    pub q: &'a DMatrix<f64>,
    pub h: &'a [DMatrix<f64>],
    pub r: &'a [DMatrix<f64>],
    pub y: &'a [DVector<f64>],
    pub laplacian: &'a DMatrix<f64>,
    pub alpha_lambda: f64,
    pub mu: f64,
    pub alpha_nu: f64,
    pub sub_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DenseStep {
    pub x_prior: Vec<DVector<f64>>,
    pub p_prior: Vec<DMatrix<f64>>,
    /// Stacked `ξ_l` for `l = 0..=L`.
    pub xi_rounds: Vec<DVector<f64>>,
    pub state: DenseState,
}

/// `N·vech(HᵢᵀRᵢ⁻¹Hᵢ)` for every node.
pub fn scaled_information(h: &[DMatrix<f64>], r: &[DMatrix<f64>]) -> Vec<DVector<f64>> {
    let n = h.len() as f64;
    h.iter().zip(r).map(|(h, r)| vech(&(h.transpose() * inv(r) * h)) * n).collect()
}

pub fn dense_step(prev: &DenseState, inp: &DenseInputs<'_>) -> DenseStep {
    let n_nodes = prev.x_post.len();
    let n = inp.f.nrows();
    let nf = n_nodes as f64;

    let x_prior: Vec<DVector<f64>> = prev.x_post.iter().map(|x| inp.f * x).collect();
    let p_prior: Vec<DMatrix<f64>> = prev.p_post.iter().map(|p| inp.f * p * inp.f.transpose() + inp.q).collect();

    let mut k_inv_blocks = Vec::new();
    let mut b_parts = Vec::new();
    for i in 0..n_nodes {
        let r_inv = inv(&inp.r[i]);
        let p_inv = inv(&p_prior[i]);
        k_inv_blocks.push(inp.h[i].transpose() * &r_inv * &inp.h[i] + &p_inv / nf);
        b_parts.push(inp.h[i].transpose() * &r_inv * &inp.y[i] + &p_inv * &x_prior[i] / nf);
    }
    let k_inv = block_diag(&k_inv_blocks);
    let k = inv(&k_inv);
    let b = stack(&b_parts);
    let lk = inp.laplacian.kronecker(&DMatrix::<f64>::identity(n, n));

    let mut xi = stack(&x_prior);
    let mut lam = DVector::zeros(n_nodes * n);
    let mut xi_rounds = vec![xi.clone()];
    for _ in 0..inp.sub_iterations {
        let d = &lk * &xi;
        lam += &k_inv * &d * inp.alpha_lambda;
        xi = &k * (&b - &lam) - d * inp.mu;
        xi_rounds.push(xi.clone());
    }

    let n_cov = n * (n + 1) / 2;
    let lc = inp.laplacian.kronecker(&DMatrix::<f64>::identity(n_cov, n_cov));
    let n_omega = stack(&scaled_information(inp.h, inp.r));
    let theta_prev = stack(&prev.theta);
    let e = &lc * &theta_prev * inp.alpha_nu;
    let nu = stack(&prev.nu_tilde) + &e;
    let theta = &n_omega - &nu - e;

    let thetas = unstack(&theta, n_nodes);
    let p_post: Vec<DMatrix<f64>> = (0..n_nodes).map(|i| inv(&(inv(&p_prior[i]) + unvech(&thetas[i], n)))).collect();

    DenseStep {
        x_prior,
        p_prior,
        state: DenseState { x_post: unstack(&xi, n_nodes), p_post, theta: thetas, nu_tilde: unstack(&nu, n_nodes) },
        xi_rounds,
    }
}
