//! Schur-stability of the consensus recursions, mode by mode.
//!
//! Both consensus loops are second-order linear recursions driven by the
//! Laplacian. In the Laplacian eigenbasis they split into independent 2×2
//! companion systems, one per nonzero eigenvalue. The covariance loop uses
//!
//! ```text
//! [ 1 - 2·α_ν·λ   α_ν·λ ]
//! [ 1             0     ]
//! ```
//!
//! and the state loop
//!
//! ```text
//! [ 1 - (α_λ + μ)·λ   μ·λ ]
//! [ 1                 0   ]
//! ```
//!
//! The closed-form step-size conditions (`α_ν < 2/(3 λ_max)` and
//! `α_λ + 2μ < 2/λ_max`) are sufficient; the reports here carry both those
//! flags and the exact radii.

use nalgebra::Matrix2;

use crate::graph::SpectralSummary;

pub fn covariance_mode_matrix(alpha_nu: f64, laplacian_eigenvalue: f64) -> Matrix2<f64> {
    let a = alpha_nu * laplacian_eigenvalue;
    Matrix2::new(1.0 - 2.0 * a, a, 1.0, 0.0)
}

pub fn state_mode_matrix(alpha_lambda: f64, mu: f64, laplacian_eigenvalue: f64) -> Matrix2<f64> {
    let l = laplacian_eigenvalue;
    Matrix2::new(1.0 - (alpha_lambda + mu) * l, mu * l, 1.0, 0.0)
}

/// Largest eigenvalue modulus of a real 2×2 matrix, from its trace and
/// determinant.
pub fn spectral_radius_2x2(m: &Matrix2<f64>) -> f64 {
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        ((tr + s).abs()).max((tr - s).abs()) / 2.0
    } else {
        // complex pair, |z|² = det
        det.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recursion {
    Covariance,
    State,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub recursion: Recursion,
    /// Max radius over the nonzero Laplacian modes.
    pub spectral_radius: f64,
    pub is_schur: bool,
    /// `(laplacian eigenvalue, radius)` for `λ_2 ..= λ_max`.
    pub per_mode_radii: Vec<(f64, f64)>,
    /// Left-hand side of the sufficient condition (`α_ν` or `α_λ + 2μ`).
    pub configured: f64,
    /// Right-hand side (`2/(3 λ_max)` or `2/λ_max`).
    pub bound: f64,
    pub sufficient_bound_holds: bool,
}

fn report<F>(recursion: Recursion, spectrum: &SpectralSummary, configured: f64, bound: f64, mode: F) -> StabilityReport
where
    F: Fn(f64) -> Matrix2<f64>,
{
    let per_mode_radii: Vec<(f64, f64)> =
        spectrum.nonzero_modes().iter().map(|&l| (l, spectral_radius_2x2(&mode(l)))).collect();
    let spectral_radius = per_mode_radii.iter().map(|&(_, r)| r).fold(0.0, f64::max);
    StabilityReport {
        recursion,
        spectral_radius,
        is_schur: spectral_radius < 1.0,
        per_mode_radii,
        configured,
        bound,
        sufficient_bound_holds: configured > 0.0 && configured < bound,
    }
}

pub fn check_covariance_stability(alpha_nu: f64, spectrum: &SpectralSummary) -> StabilityReport {
    report(Recursion::Covariance, spectrum, alpha_nu, 2.0 / (3.0 * spectrum.lambda_max), |l| {
        covariance_mode_matrix(alpha_nu, l)
    })
}

pub fn check_state_stability(alpha_lambda: f64, mu: f64, spectrum: &SpectralSummary) -> StabilityReport {
    let mut r = report(Recursion::State, spectrum, alpha_lambda + 2.0 * mu, 2.0 / spectrum.lambda_max, |l| {
        state_mode_matrix(alpha_lambda, mu, l)
    });
    r.sufficient_bound_holds &= alpha_lambda > 0.0 && mu > 0.0;
    r
}
