//! Text reports behind the `validate`, `spectrum` and `dare` subcommands.

use std::fmt::Write as _;

use dkf_core::dkf::ParamCheck;
use dkf_core::graph::{SensorGraph, SpectralSummary};
use dkf_core::linalg::SymMatrix;
use dkf_core::stability::StabilityReport;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::runner::steady_state_prior;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn stability_block(out: &mut String, name: &str, lhs: &str, rhs: &str, r: &StabilityReport) {
    writeln!(out, "{name}").unwrap();
    writeln!(out, "  {lhs} = {:.6}  bound {rhs} = {:.6}  {}", r.configured, r.bound, verdict(r.sufficient_bound_holds))
        .unwrap();
    writeln!(
        out,
        "  spectral radius {:.6} ({})",
        r.spectral_radius,
        if r.is_schur { "schur stable" } else { "unstable" }
    )
    .unwrap();
    writeln!(out, "  per-mode radii (laplacian eigenvalue, radius):").unwrap();
    for (lambda, rho) in &r.per_mode_radii {
        writeln!(out, "    {lambda:.6} {rho:.6}").unwrap();
    }
}

pub struct Validation {
    pub text: String,
    pub passed: bool,
}

pub fn validate_params(cfg: &ScenarioConfig) -> Result<Validation> {
    let graph = cfg.build_graph()?;
    let spectrum = cfg.spectrum(&graph)?;
    let params = cfg.params(&spectrum)?;
    let check: ParamCheck = params.check(&spectrum);
    let mut out = String::new();
    writeln!(out, "lambda_max {:.6}", spectrum.lambda_max).unwrap();
    writeln!(
        out,
        "alpha_lambda {}  mu {}  alpha_nu {}  sub_iterations {}",
        params.alpha_lambda, params.mu, params.alpha_nu, params.sub_iterations
    )
    .unwrap();
    stability_block(&mut out, "covariance consensus", "alpha_nu", "2/(3 lambda_max)", &check.covariance);
    stability_block(&mut out, "state consensus", "alpha_lambda + 2 mu", "2/lambda_max", &check.state);
    let passed = check.sufficient_bounds_hold();
    writeln!(out, "overall {}", verdict(passed)).unwrap();
    Ok(Validation { text: out, passed })
}

pub fn spectrum_report(graph: &SensorGraph, s: &SpectralSummary) -> String {
    let mut out = String::new();
    let edges = graph.edges().len();
    writeln!(out, "nodes {}  edges {}  max degree {}", graph.n_nodes(), edges, graph.max_degree()).unwrap();
    writeln!(out, "lambda_2 {:.6}", s.lambda_2).unwrap();
    writeln!(out, "lambda_max {:.6}", s.lambda_max).unwrap();
    writeln!(out, "eigenvalues:").unwrap();
    for v in &s.eigenvalues {
        writeln!(out, "  {v:.6}").unwrap();
    }
    out
}

pub fn spectrum(cfg: &ScenarioConfig) -> Result<String> {
    let graph = cfg.build_graph()?;
    let s = cfg.spectrum(&graph)?;
    Ok(spectrum_report(&graph, &s))
}

pub fn matrix_text(p: &SymMatrix) -> String {
    let mut out = String::new();
    for i in 0..p.dim() {
        let row: Vec<String> = (0..p.dim()).map(|j| format!("{:.12e}", p[(i, j)])).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

pub fn dare(cfg: &ScenarioConfig) -> Result<String> {
    let model = cfg.build_model()?;
    Ok(matrix_text(&steady_state_prior(cfg, &model)?))
}
