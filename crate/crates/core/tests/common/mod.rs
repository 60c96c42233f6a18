#![allow(dead_code)]

use cpnet_core::diagnostics::TwoBlock;
use cpnet_core::sample::{sample, SampleConfig, SampleMethod};
use cpnet_core::{Coords, Kernel, ModelParams, SpatialNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-likelihood from its definition, summing `A log ρ + (1 − A) log(1 − ρ)`
/// over all pairs with compensated summation. Euclidean kernel only.
pub fn oracle_omega(net: &SpatialNetwork, p: &ModelParams) -> f64 {
    let c = net.coords();
    let n = net.n();
    let mut terms = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let k: f64 = c.point(u).iter().zip(c.point(v)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let scaled = if p.epsilon == 0.0 { 0.0 } else { p.epsilon * k.ln() };
            let x = p.theta[u] + p.theta[v] - scaled;
            // log ρ = −softplus(−x), log(1 − ρ) = −softplus(x)
            terms.push(if net.has_edge(u, v) { -softplus(-x) } else { -softplus(x) });
        }
    }
    compensated_sum(terms)
}

/// Uniform positions in the unit square and independent uniform scores.
pub fn random_params(n: usize, theta: (f64, f64), epsilon: f64, seed: u64) -> (Coords, ModelParams) {
    let mut r = rng(seed);
    let coords = Coords::new(2, (0..2 * n).map(|_| r.random()).collect()).unwrap();
    let t = (0..n).map(|_| r.random_range(theta.0..theta.1)).collect();
    (coords, ModelParams::new(t, epsilon))
}

/// Network drawn from the model itself.
pub fn draw(coords: &Coords, p: &ModelParams, seed: u64) -> SpatialNetwork {
    let cfg = SampleConfig { method: SampleMethod::Naive, seed, ..SampleConfig::default() };
    let edges = sample(coords, p, &Kernel::Euclidean, &cfg).unwrap();
    SpatialNetwork::from_edges(coords.clone(), edges).unwrap().0
}

/// Seeded two-block instance with average expected degree 10.
pub fn two_block(n: usize, seed: u64) -> (SpatialNetwork, ModelParams) {
    let tb = TwoBlock { n, ..TwoBlock::default() };
    let coords = tb.coords(seed).unwrap();
    let tc = tb.calibrate(&coords, 10.0, usize::MAX).unwrap();
    let p = tb.params(tc);
    (draw(&coords, &p, seed + 1), p)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dist(c: &Coords, u: usize, v: usize) -> f64 {
    c.point(u).iter().zip(c.point(v)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn rho(p: &ModelParams, k: f64, u: usize, v: usize) -> f64 {
    let scaled = if p.epsilon == 0.0 { 0.0 } else { p.epsilon * k.ln() };
    let x = p.theta[u] + p.theta[v] - scaled;
    1.0 / (1.0 + (-x).exp())
}

/// Expected degrees and `Σ_{u<v} ρ ln K` by direct summation. Euclidean kernel.
pub fn oracle_expectations(c: &Coords, p: &ModelParams) -> (Vec<f64>, f64) {
    let n = c.len();
    let mut deg = vec![Vec::new(); n];
    let mut agg = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let k = dist(c, u, v);
            let r = rho(p, k, u, v);
            deg[u].push(r);
            deg[v].push(r);
            agg.push(r * k.ln());
        }
    }
    (deg.into_iter().map(compensated_sum).collect(), compensated_sum(agg))
}

/// `Σ_E ln K`. Euclidean kernel.
pub fn oracle_logdist(net: &SpatialNetwork) -> f64 {
    compensated_sum(net.edges().iter().map(|&(u, v)| dist(net.coords(), u, v).ln()))
}
