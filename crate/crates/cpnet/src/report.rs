//! JSON documents written by the command-line tool.
//!
//! Top-level keys of every report are stable: new keys may be added, existing
//! ones keep their name and meaning.

use cpnet_core::diagnostics::{Features, ValidationReport};
use cpnet_core::optimize::{FitReport, Termination};
use cpnet_core::{Accuracy, Evaluation, LikelihoodPath};
use serde::Serialize;

pub fn path_name(p: LikelihoodPath) -> &'static str {
    match p {
        LikelihoodPath::Exact => "exact",
        LikelihoodPath::Fast => "fast",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AccuracyJson {
    pub delta1: f64,
    pub delta2: f64,
    pub order: usize,
}

impl From<Accuracy> for AccuracyJson {
    fn from(a: Accuracy) -> Self {
        AccuracyJson { delta1: a.delta1, delta2: a.delta2, order: a.order }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitJson {
    pub version: &'static str,
    pub seed: u64,
    pub n: usize,
    pub edges: usize,
    pub kernel: String,
    pub path: &'static str,
    pub accuracy: Option<AccuracyJson>,
    pub epsilon: f64,
    pub omega: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: &'static str,
    pub final_grad_norm: f64,
    pub degree_residual: f64,
    pub logdist_residual: f64,
    pub residual_path: &'static str,
    pub omega_trace: Vec<f64>,
    /// Absent in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::GradientTolerance => "grad_tol",
        Termination::MaxIterations => "max_iters",
        Termination::LineSearchFailure => "line_search",
    }
}

impl FitJson {
    pub fn new(r: &FitReport, n: usize, edges: usize, kernel: String, path: LikelihoodPath, acc: Accuracy, seed: u64) -> Self {
        FitJson {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            n,
            edges,
            kernel,
            path: path_name(path),
            accuracy: (path == LikelihoodPath::Fast).then(|| acc.into()),
            epsilon: r.params.epsilon,
            omega: r.omega_trace.last().copied().unwrap_or(f64::NAN),
            iterations: r.iterations,
            converged: r.converged,
            termination: termination_name(r.termination),
            final_grad_norm: r.final_grad_norm,
            degree_residual: r.degree_residual,
            logdist_residual: r.logdist_residual,
            residual_path: path_name(r.residual_path),
            omega_trace: r.omega_trace.clone(),
            wall_seconds: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateJson {
    pub path: &'static str,
    pub accuracy: Option<AccuracyJson>,
    pub omega: f64,
    pub grad_theta_norm: f64,
    pub grad_theta_max: f64,
    pub grad_epsilon: f64,
    pub max_degree_residual: f64,
    pub expected_edges: f64,
}

impl EvaluateJson {
    pub fn new(ev: &Evaluation, path: LikelihoodPath, acc: Accuracy) -> Self {
        EvaluateJson {
            path: path_name(path),
            accuracy: (path == LikelihoodPath::Fast).then(|| acc.into()),
            omega: ev.omega,
            grad_theta_norm: ev.grad_theta.iter().map(|g| g * g).sum::<f64>().sqrt(),
            grad_theta_max: ev.grad_theta.iter().fold(0.0, |m, g| m.max(g.abs())),
            grad_epsilon: ev.grad_epsilon,
            max_degree_residual: ev.grad_theta.iter().fold(0.0, |m, g| m.max(g.abs())),
            expected_edges: ev.expected_degrees.iter().sum::<f64>() / 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateJson {
    pub path: &'static str,
    pub n: usize,
    pub degree_rmse: f64,
    pub degree_max_abs: f64,
    pub model_agg_logdist: f64,
    pub network_agg_logdist: f64,
    pub logdist_rel_error: f64,
    pub model_edges: f64,
    pub network_edges: usize,
    pub model_gmel: f64,
    pub network_gmel: f64,
}

impl ValidateJson {
    pub fn new(r: &ValidationReport, path: LikelihoodPath) -> Self {
        ValidateJson {
            path: path_name(path),
            n: r.degrees.len(),
            degree_rmse: r.degree_rmse,
            degree_max_abs: r.degree_max_abs,
            model_agg_logdist: r.model_agg_logdist,
            network_agg_logdist: r.network_agg_logdist,
            logdist_rel_error: (r.model_agg_logdist - r.network_agg_logdist).abs() / r.network_agg_logdist.abs(),
            model_edges: r.model_edges,
            network_edges: r.network_edges,
            model_gmel: r.model_gmel,
            network_gmel: r.network_gmel,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeaturesJson {
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl From<Features> for FeaturesJson {
    fn from(f: Features) -> Self {
        FeaturesJson { max: f.max, mean: f.mean, std: f.std, n: f.n }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
