//! Accuracy and timing studies.

use std::time::Instant;

use cpnet_core::diagnostics::TwoBlock;
use cpnet_core::exact::{self, Scope};
use cpnet_core::fast::FastLikelihood;
use cpnet_core::sample::sample_fast;
use cpnet_core::{Accuracy, Kernel, MetricTree, ModelParams, SampleConfig, SpatialNetwork};

use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta1: f64,
    pub delta2: f64,
    pub order: usize,
    /// Root-mean-square expected-degree error against the exact path.
    pub rmse: f64,
    pub max_abs: f64,
    pub omega_rel_error: f64,
    /// Best of `reps` timed evaluations.
    pub seconds: f64,
}

fn best_of<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        let v = f()?;
        best = best.min(t.elapsed().as_secs_f64());
        out = Some(v);
    }
    Ok((out.unwrap(), best))
}

/// Tree-code error and time per gradient for each `(delta1, delta2)`.
pub fn accuracy_sweep(
    network: &SpatialNetwork,
    params: &ModelParams,
    kernel: &Kernel,
    grid: &[(f64, f64)],
    order: usize,
    reps: usize,
) -> Result<Vec<SweepRow>> {
    let exact = exact::evaluate(network, params, &kernel.bind(network.coords())?, Scope::Full)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &(delta1, delta2) in grid {
        let acc = Accuracy::new(delta1, delta2, order)?;
        let mut fl = FastLikelihood::new(network, kernel, acc)?;
        let (ev, seconds) = best_of(reps, || Ok(fl.evaluate(params, Scope::Full)?))?;
        let n = ev.expected_degrees.len() as f64;
        let (mut sq, mut mx) = (0.0, 0.0f64);
        for (a, b) in ev.expected_degrees.iter().zip(&exact.expected_degrees) {
            sq += (a - b) * (a - b);
            mx = mx.max((a - b).abs());
        }
        rows.push(SweepRow {
            delta1,
            delta2,
            order,
            rmse: (sq / n).sqrt(),
            max_abs: mx,
            omega_rel_error: (ev.omega - exact.omega).abs() / exact.omega.abs(),
            seconds,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRow {
    pub n: usize,
    pub edges: usize,
    pub theta_core: f64,
    pub build_seconds: f64,
    pub grad_seconds: f64,
    pub sample_seconds: f64,
    pub exact_grad_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleConfig {
    pub family: TwoBlock,
    pub avg_degree: f64,
    pub acc: Accuracy,
    pub seed: u64,
    /// Also time the exact gradient up to this many vertices.
    pub exact_upto: usize,
    pub reps: usize,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig { family: TwoBlock::default(), avg_degree: 10.0, acc: Accuracy::default(), seed: 0, exact_upto: 0, reps: 3 }
    }
}

/// Shortest timed unit for the gradient; faster evaluations are batched.
const MIN_BATCH_SECONDS: f64 = 0.2;

/// Builds a two-block instance of each size, samples it with the fast
/// sampler and times tree construction, sampling and one fast gradient.
/// Gradient timings run in `reps` rounds that visit every size in turn, so a
/// slow stretch of the machine hits all sizes alike; each size keeps its
/// fastest round. Runs on the caller's thread pool.
pub fn scaling(sizes: &[usize], cfg: &ScaleConfig) -> Result<Vec<ScaleRow>> {
    let kernel = Kernel::Euclidean;
    let mut rows = Vec::with_capacity(sizes.len());
    let mut instances = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let family = TwoBlock { n, ..cfg.family };
        let coords = family.coords(cfg.seed)?;
        let theta_core = family.calibrate_within(&coords, cfg.avg_degree, 2000, 1e-4)?;
        let params = family.params(theta_core);
        let (tree, build_seconds) = best_of(cfg.reps, || {
            let mut t = MetricTree::build(&coords, &kernel)?;
            t.refresh_aggregates(&params.theta)?;
            Ok(t)
        })?;
        let sc = SampleConfig { seed: cfg.seed, ..SampleConfig::default() };
        let (edges, sample_seconds) = best_of(cfg.reps, || Ok(sample_fast(&tree, &params, &sc)?))?;
        drop(tree);
        let network = SpatialNetwork::from_edges(coords, edges)?.0;
        let exact_grad_seconds = if n <= cfg.exact_upto {
            let bound = kernel.bind(network.coords())?;
            Some(best_of(cfg.reps, || Ok(exact::evaluate(&network, &params, &bound, Scope::Full)?))?.1)
        } else {
            None
        };
        rows.push(ScaleRow {
            n,
            edges: network.edge_count(),
            theta_core,
            build_seconds,
            grad_seconds: f64::INFINITY,
            sample_seconds,
            exact_grad_seconds,
        });
        instances.push((network, params));
    }
    let mut evals = Vec::with_capacity(instances.len());
    for (network, params) in &instances {
        let mut fl = FastLikelihood::new(network, &kernel, cfg.acc)?;
        let t = Instant::now();
        fl.evaluate(params, Scope::Full)?;
        let batch = (MIN_BATCH_SECONDS / t.elapsed().as_secs_f64().max(1e-9)).ceil().max(1.0) as usize;
        evals.push((fl, batch));
    }
    for _ in 0..cfg.reps.max(1) {
        for ((fl, batch), (row, (_, params))) in evals.iter_mut().zip(rows.iter_mut().zip(&instances)) {
            let t = Instant::now();
            for _ in 0..*batch {
                fl.evaluate(params, Scope::Full)?;
            }
            row.grad_seconds = row.grad_seconds.min(t.elapsed().as_secs_f64() / *batch as f64);
        }
    }
    Ok(rows)
}

/// Ratio of consecutive values, one per doubling step.
pub fn growth_factors(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] / w[0]).collect()
}
