//! Quadratic-cost log-likelihood and gradients.
//!
//! For a pair with logit `x = θ_u + θ_v − ε·ln K_uv` the edge probability is
//! `σ(x)`, `log ρ = −softplus(−x)` and `log(1 − ρ) = −softplus(x)`, so all
//! quantities stay finite for score sums far beyond the range of `exp`.
//!
//! Rows are processed independently (each unordered pair is visited from both
//! ends) and combined in row order, so results do not depend on the number of
//! worker threads.

use alloc::format;
use alloc::vec::Vec;

use crate::kernels::PairKernel;
use crate::math::{self, sigmoid, softplus, Sum};
use crate::network::{ModelParams, SpatialNetwork};
use crate::par;
use crate::{Error, Result};

/// Log-likelihood together with its derivatives and the expected quantities
/// they are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub omega: f64,
    pub grad_theta: Vec<f64>,
    pub grad_epsilon: f64,
    /// `Σ_{u≠w} ρ_wu`.
    pub expected_degrees: Vec<f64>,
    /// `Σ_{u<v} ρ_uv ln K_uv`.
    pub expected_agg_logdist: f64,
    /// `Σ_{u≠w} ρ_wu (1 − ρ_wu)`, the negated diagonal of the θ Hessian.
    pub curvature_theta: Vec<f64>,
    /// `Σ_{u<v} ρ_uv (1 − ρ_uv) (ln K_uv)²`.
    pub curvature_epsilon: f64,
    /// Number of pairs whose probability is exactly 0 or 1 against the
    /// observed adjacency; `omega` is `-inf` when this is non-zero.
    pub conflicts: usize,
}

/// Which derivatives to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// θ and ε derivatives. Requires `K_uv > 0` for every pair.
    Full,
    /// θ derivatives only; `grad_epsilon`, `expected_agg_logdist` and
    /// `curvature_epsilon` are left at zero.
    ThetaOnly,
}

/// `ε · ln K` with `0 · ln K = 0` and `ε · ln 0 = −∞` for `ε > 0`.
#[inline]
pub(crate) fn scaled_log_kernel(k: f64, epsilon: f64) -> Option<f64> {
    if epsilon == 0.0 {
        Some(0.0)
    } else if k > 0.0 {
        Some(epsilon * math::ln(k))
    } else if epsilon > 0.0 {
        Some(f64::NEG_INFINITY)
    } else {
        None
    }
}

/// `θ_u + θ_v − ε ln K`, the log-odds of an edge.
pub fn logit(theta_u: f64, theta_v: f64, k: f64, epsilon: f64) -> Result<f64> {
    match scaled_log_kernel(k, epsilon) {
        Some(s) => Ok(theta_u + theta_v - s),
        None => Err(Error::InvalidParams(format!(
            "kernel distance {k} with epsilon {epsilon} gives an undefined edge probability"
        ))),
    }
}

/// `e^{θu+θv} / (e^{θu+θv} + K^ε)`.
pub fn edge_prob(theta_u: f64, theta_v: f64, k: f64, epsilon: f64) -> Result<f64> {
    Ok(sigmoid(logit(theta_u, theta_v, k, epsilon)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    /// Pairs with `ρ ∈ {0, 1}` contradicting the adjacency (each makes the
    /// value `-inf`).
    pub conflicts: usize,
}

#[derive(Default, Clone, Copy)]
struct RowSums {
    omega: Sum,
    expected: f64,
    curv: f64,
    logdist: f64,
    curv_eps: f64,
    conflicts: usize,
}

fn check_inputs(network: &SpatialNetwork, params: &ModelParams) -> Result<()> {
    params.validate(network.n())
}

fn row<K: PairKernel + ?Sized>(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &K,
    w: usize,
    scope: Option<Scope>,
) -> Result<RowSums> {
    let theta = &params.theta;
    let eps = params.epsilon;
    let nbrs = network.neighbors(w);
    let mut next = 0;
    let mut s = RowSums::default();
    for u in 0..network.n() {
        if u == w {
            continue;
        }
        let adjacent = next < nbrs.len() && nbrs[next] == u;
        if adjacent {
            next += 1;
        }
        let k = kernel.distance(w, u);
        let x = match scaled_log_kernel(k, eps) {
            Some(sl) => theta[w] + theta[u] - sl,
            None => {
                return Err(Error::ZeroDistance(w.min(u), w.max(u), eps));
            }
        };
        let term = if adjacent { -softplus(-x) } else { -softplus(x) };
        if term == f64::NEG_INFINITY {
            s.conflicts += 1;
        }
        s.omega.add(term);
        if let Some(scope) = scope {
            let rho = sigmoid(x);
            s.expected += rho;
            s.curv += rho * (1.0 - rho);
            if scope == Scope::Full {
                if !(k > 0.0) {
                    return Err(Error::ZeroDistance(w.min(u), w.max(u), eps));
                }
                let lk = math::ln(k);
                s.logdist += rho * lk;
                s.curv_eps += rho * (1.0 - rho) * lk * lk;
            }
        }
    }
    Ok(s)
}

fn rows<K: PairKernel + ?Sized>(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &K,
    scope: Option<Scope>,
) -> Result<Vec<RowSums>> {
    par::map_range(network.n(), |w| row(network, params, kernel, w, scope))
        .into_iter()
        .collect()
}

/// Log-likelihood `Σ_{u<v} [A log ρ + (1 − A) log(1 − ρ)]`.
pub fn omega<K: PairKernel + ?Sized>(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &K,
) -> Result<LogLikelihood> {
    check_inputs(network, params)?;
    let rs = rows(network, params, kernel, None)?;
    let (mut value, mut conflicts) = (Sum::default(), 0);
    for r in &rs {
        value.add(r.omega.value());
        conflicts += r.conflicts;
    }
    Ok(LogLikelihood { value: 0.5 * value.value(), conflicts: conflicts / 2 })
}

/// Log-likelihood, gradients and expected quantities in one O(n²) pass.
pub fn evaluate<K: PairKernel + ?Sized>(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &K,
    scope: Scope,
) -> Result<Evaluation> {
    check_inputs(network, params)?;
    let agg = if scope == Scope::Full {
        aggregated_log_distance(network, kernel)?
    } else {
        0.0
    };
    let rs = rows(network, params, kernel, Some(scope))?;
    let mut ev = Evaluation {
        omega: 0.0,
        grad_theta: Vec::with_capacity(rs.len()),
        grad_epsilon: 0.0,
        expected_degrees: Vec::with_capacity(rs.len()),
        expected_agg_logdist: 0.0,
        curvature_theta: Vec::with_capacity(rs.len()),
        curvature_epsilon: 0.0,
        conflicts: 0,
    };
    let mut omega = Sum::default();
    for (w, r) in rs.iter().enumerate() {
        omega.add(r.omega.value());
        ev.conflicts += r.conflicts;
        ev.expected_degrees.push(r.expected);
        ev.grad_theta.push(network.degree(w) as f64 - r.expected);
        ev.curvature_theta.push(r.curv);
        ev.expected_agg_logdist += r.logdist;
        ev.curvature_epsilon += r.curv_eps;
    }
    ev.omega = 0.5 * omega.value();
    ev.conflicts /= 2;
    ev.expected_agg_logdist *= 0.5;
    ev.curvature_epsilon *= 0.5;
    if scope == Scope::Full {
        ev.grad_epsilon = ev.expected_agg_logdist - agg;
    }
    Ok(ev)
}

/// Full evaluation (θ and ε derivatives).
pub fn grad<K: PairKernel + ?Sized>(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &K,
) -> Result<Evaluation> {
    evaluate(network, params, kernel, Scope::Full)
}

/// `Σ_{(u,v) ∈ E} ln K_uv`.
pub fn aggregated_log_distance<K: PairKernel + ?Sized>(
    network: &SpatialNetwork,
    kernel: &K,
) -> Result<f64> {
    let mut s = 0.0;
    for &(u, v) in network.edges() {
        let k = kernel.distance(u, v);
        if !(k > 0.0) {
            return Err(Error::ZeroDistance(u, v, f64::NAN));
        }
        s += math::ln(k);
    }
    Ok(s)
}
