use crate::graph::SpectralSummary;
use crate::stability::{check_covariance_stability, check_state_stability, StabilityReport};
use crate::{Error, Result};

/// Step sizes and sub-iteration count of the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DkfParams {
    /// Dual step of the state consensus.
    pub alpha_lambda: f64,
    /// Quadratic penalty weight of the state consensus.
    pub mu: f64,
    /// Step of the covariance consensus.
    pub alpha_nu: f64,
    /// State-consensus rounds per time step (`L`).
    pub sub_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ParamCheck {
    pub covariance: StabilityReport,
    pub state: StabilityReport,
}

impl ParamCheck {
    pub fn sufficient_bounds_hold(&self) -> bool {
        self.covariance.sufficient_bound_holds && self.state.sufficient_bound_holds
    }
}

/// Parameters that either passed [`DkfParams::validate`] or were explicitly
/// waved through with [`DkfParams::override_guard`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams(DkfParams);

impl ValidatedParams {
    pub fn get(&self) -> &DkfParams {
        &self.0
    }
}

impl DkfParams {
    pub fn new(alpha_lambda: f64, mu: f64, alpha_nu: f64, sub_iterations: usize) -> Result<Self> {
        if !(alpha_lambda > 0.0 && mu > 0.0 && alpha_nu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step sizes must be positive (alpha_lambda {alpha_lambda}, mu {mu}, alpha_nu {alpha_nu})"
            )));
        }
        if sub_iterations == 0 {
            return Err(Error::InvalidArgument("at least one sub-iteration is required".into()));
        }
        Ok(Self { alpha_lambda, mu, alpha_nu, sub_iterations })
    }

    /// Picks step sizes inside both sufficient regions:
    /// `α_ν = 0.9·2/(3λ_max)`, `μ = 0.01·2/λ_max`, `α_λ = 0.9·2/λ_max − 2μ`.
    pub fn auto(spectrum: &SpectralSummary, sub_iterations: usize) -> Result<Self> {
        let l = spectrum.lambda_max;
        if l.is_nan() || l <= 0.0 {
            return Err(Error::InvalidArgument("graph has no edges".into()));
        }
        let mu = 0.01 * 2.0 / l;
        Self::new(0.9 * 2.0 / l - 2.0 * mu, mu, 0.9 * 2.0 / (3.0 * l), sub_iterations)
    }

    pub fn check(&self, spectrum: &SpectralSummary) -> ParamCheck {
        ParamCheck {
            covariance: check_covariance_stability(self.alpha_nu, spectrum),
            state: check_state_stability(self.alpha_lambda, self.mu, spectrum),
        }
    }

    /// Accepts the parameters only if both sufficient bounds hold.
    pub fn validate(self, spectrum: &SpectralSummary) -> Result<ValidatedParams> {
        let c = self.check(spectrum);
        if !c.covariance.sufficient_bound_holds {
            return Err(Error::StabilityGuard(format!(
                "alpha_nu = {} is not below 2/(3 lambda_max) = {}",
                c.covariance.configured, c.covariance.bound
            )));
        }
        if !c.state.sufficient_bound_holds {
            return Err(Error::StabilityGuard(format!(
                "alpha_lambda + 2 mu = {} is not below 2/lambda_max = {}",
                c.state.configured, c.state.bound
            )));
        }
        Ok(ValidatedParams(self))
    }

    /// Skips the stability guard, for boundary experiments.
    pub fn override_guard(self) -> ValidatedParams {
        ValidatedParams(self)
    }
}
