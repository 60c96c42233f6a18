//! Checks of a fitted model against its network, plus synthetic instances.

use alloc::vec::Vec;

use rand::Rng;

use crate::exact::{self, Scope};
use crate::fast::{Accuracy, FastLikelihood};
use crate::kernels::Kernel;
use crate::math;
use crate::network::{Coords, ModelParams, SpatialNetwork};
use crate::optimize::LikelihoodPath;
use crate::rng::stream;
use crate::tree::MetricTree;
use crate::{Error, Result};

/// Expected versus observed statistics at fitted parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub expected_degrees: Vec<f64>,
    pub degrees: Vec<f64>,
    pub degree_rmse: f64,
    pub degree_max_abs: f64,
    /// `Σ_{u<v} ρ_uv ln K_uv`.
    pub model_agg_logdist: f64,
    /// `Σ_E ln K_uv`.
    pub network_agg_logdist: f64,
    /// Expected number of edges.
    pub model_edges: f64,
    pub network_edges: usize,
    /// Geometric mean edge length under the model.
    pub model_gmel: f64,
    pub network_gmel: f64,
}

/// `exp(agg / edges)`, NaN without edges.
pub fn gmel(agg_logdist: f64, edges: f64) -> f64 {
    if edges > 0.0 {
        math::exp(agg_logdist / edges)
    } else {
        f64::NAN
    }
}

/// Compares expected and observed degrees and edge lengths.
pub fn validate(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &Kernel,
    path: LikelihoodPath,
    acc: Accuracy,
) -> Result<ValidationReport> {
    params.validate(network.n())?;
    let ev = match path {
        LikelihoodPath::Exact => exact::evaluate(network, params, &kernel.bind(network.coords())?, Scope::Full)?,
        LikelihoodPath::Fast => FastLikelihood::new(network, kernel, acc)?.evaluate(params, Scope::Full)?,
    };
    let degrees = network.degrees();
    let n = degrees.len();
    let (mut sq, mut max_abs) = (0.0, 0.0f64);
    for (e, d) in ev.expected_degrees.iter().zip(&degrees) {
        sq += (e - d) * (e - d);
        max_abs = max_abs.max((e - d).abs());
    }
    let degree_rmse = if n > 0 { math::sqrt(sq / n as f64) } else { 0.0 };
    let network_agg_logdist = exact::aggregated_log_distance(network, &kernel.bind(network.coords())?)?;
    let model_edges = ev.expected_degrees.iter().sum::<f64>() / 2.0;
    Ok(ValidationReport {
        degree_rmse,
        degree_max_abs: max_abs,
        model_agg_logdist: ev.expected_agg_logdist,
        network_agg_logdist,
        model_edges,
        network_edges: network.edge_count(),
        model_gmel: gmel(ev.expected_agg_logdist, model_edges),
        network_gmel: gmel(network_agg_logdist, network.edge_count() as f64),
        expected_degrees: ev.expected_degrees,
        degrees,
    })
}

/// Pearson correlation; NaN when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return f64::NAN;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a[..n].iter().zip(&b[..n]) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / math::sqrt(saa * sbb)
}

/// Summary of a fitted core score vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

impl Features {
    pub fn of(theta: &[f64]) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidParams("empty core score vector".into()));
        }
        let n = theta.len();
        let mean = theta.iter().sum::<f64>() / n as f64;
        let var = theta.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n as f64;
        let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Features { max, mean, std: math::sqrt(var), n })
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.max, self.mean, self.std, self.n as f64]
    }
}

/// Two-level planted instance: uniform positions in the unit cube, the first
/// `⌈core_fraction · n⌉` vertices are core with score `theta_core`, the rest
/// periphery with `theta_core − theta_gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBlock {
    pub n: usize,
    pub dim: usize,
    pub core_fraction: f64,
    pub theta_gap: f64,
    pub epsilon: f64,
}

impl Default for TwoBlock {
    fn default() -> Self {
        TwoBlock { n: 1000, dim: 2, core_fraction: 0.05, theta_gap: 1.0, epsilon: 1.0 }
    }
}

impl TwoBlock {
    pub fn core_count(&self) -> usize {
        math::ceil(self.core_fraction * self.n as f64) as usize
    }

    pub fn coords(&self, seed: u64) -> Result<Coords> {
        if self.dim == 0 || !(0.0..=1.0).contains(&self.core_fraction) {
            return Err(Error::InvalidConfig("dimension must be positive and core fraction in [0, 1]".into()));
        }
        let mut rng = stream(seed, 0);
        Coords::new(self.dim, (0..self.n * self.dim).map(|_| rng.random::<f64>()).collect())
    }

    pub fn params(&self, theta_core: f64) -> ModelParams {
        let nc = self.core_count();
        let theta = (0..self.n).map(|u| if u < nc { theta_core } else { theta_core - self.theta_gap }).collect();
        ModelParams::new(theta, self.epsilon)
    }

    /// Core score giving the requested expected average degree on `coords`,
    /// by bisection. Uses the tree code above `exact_limit` vertices.
    pub fn calibrate(&self, coords: &Coords, target_avg_degree: f64, exact_limit: usize) -> Result<f64> {
        self.calibrate_within(coords, target_avg_degree, exact_limit, 1e-10)
    }

    /// [`TwoBlock::calibrate`] stopping once the bracket is narrower than `tol`.
    ///
    /// Large instances are first calibrated exactly on their first
    /// `exact_limit` vertices; in the sparse regime degrees scale like
    /// `n e^{2θ}`, which gives a starting bracket for the tree code. Keeping
    /// the bracket narrow matters: at large scores nothing is well separated
    /// and the tree code degrades to quadratic cost.
    pub fn calibrate_within(&self, coords: &Coords, target_avg_degree: f64, exact_limit: usize, tol: f64) -> Result<f64> {
        let n = coords.len();
        if n < 2 || !(target_avg_degree > 0.0) || target_avg_degree >= (n - 1) as f64 {
            return Err(Error::InvalidConfig("target average degree out of range".into()));
        }
        if n <= exact_limit.max(2) {
            let kernel = Kernel::Euclidean;
            let bound = kernel.bind(coords)?;
            let empty = SpatialNetwork::from_edges(coords.clone(), core::iter::empty())?.0;
            let avg = |tc: f64| -> Result<f64> {
                let ev = exact::evaluate(&empty, &self.params(tc), &bound, Scope::ThetaOnly)?;
                Ok(ev.expected_degrees.iter().sum::<f64>() / n as f64)
            };
            return bisect(avg, target_avg_degree, -40.0, 40.0, tol);
        }
        let m = exact_limit.max(64).min(n - 1);
        let head = Coords::new(coords.dim(), coords.as_slice()[..m * coords.dim()].to_vec())?;
        let small = TwoBlock { n: m, ..*self };
        let guess = small.calibrate_within(&head, target_avg_degree.min((m - 2) as f64), m, 1e-6)?
            - 0.5 * math::ln((n - 1) as f64 / (m - 1) as f64);

        let mut tree = MetricTree::build(coords, &Kernel::Euclidean)?;
        let mut avg = |tc: f64| -> Result<f64> {
            let p = self.params(tc);
            tree.refresh_aggregates(&p.theta)?;
            Ok(crate::fast::expected_degrees(&tree, &p, &Accuracy::default())?.0.iter().sum::<f64>() / n as f64)
        };
        let (mut lo, mut hi) = (guess - 0.5, guess + 0.5);
        for _ in 0..40 {
            if avg(lo)? < target_avg_degree {
                break;
            }
            lo -= 1.0;
        }
        for _ in 0..40 {
            if avg(hi)? >= target_avg_degree {
                break;
            }
            hi += 1.0;
        }
        bisect(avg, target_avg_degree, lo, hi, tol)
    }
}

fn bisect<F: FnMut(f64) -> Result<f64>>(mut f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
