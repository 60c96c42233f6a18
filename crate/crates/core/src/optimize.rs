//! Maximum likelihood fit of `(θ, ε)`.
//!
//! Limited-memory BFGS on `−Ω` over the stacked vector `(θ_1..θ_n, ε)` (or θ
//! alone when ε is fixed). The initial inverse Hessian of every two-loop
//! recursion is the diagonal `1 / c_i`, where `c_i` is the current per
//! coordinate curvature `Σ ρ(1−ρ)` (resp. `Σ ρ(1−ρ) ln² K` for ε) clamped to
//! `[1e-6, 1e6]`. Steps are found by projected backtracking with a
//! sufficient-decrease test, and scores are kept above [`THETA_FLOOR`].

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::Rng;

use crate::exact::{self, Evaluation, Scope};
use crate::fast::{Accuracy, FastLikelihood, InteractionList, ListEvaluation};
use crate::kernels::{BoundKernel, Kernel};
use crate::network::{ModelParams, SpatialNetwork};
use crate::{Error, Result};

/// Lower bound on core scores. An isolated vertex pinned here has expected
/// degree below `n · e^{-40 + max θ}`.
pub const THETA_FLOOR: f64 = -40.0;

/// Largest network for which the reported residuals use the exact path.
pub const EXACT_RESIDUAL_LIMIT: usize = 5000;

const CURVATURE_MIN: f64 = 1e-6;
const CURVATURE_MAX: f64 = 1e6;
const ARMIJO_C1: f64 = 1e-4;
/// Largest drop in Ω the line search tolerates as rounding noise.
const OMEGA_NOISE: f64 = 1e-12;
/// Relative noise floor of tree-code Ω values.
const FAST_OMEGA_NOISE: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 60;
const MAX_TRIAL_STEP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikelihoodPath {
    Exact,
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// θ = 0, ε = 1.
    Zeros,
    /// θ_u = ln((deg(u) + 1) / √(2m + n)), ε = 1.
    DegreeHeuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop once the max-norm of the (projected) gradient is below this.
    pub grad_tol: f64,
    pub path: LikelihoodPath,
    pub acc: Accuracy,
    pub fix_epsilon: Option<f64>,
    pub init: InitStrategy,
    pub history: usize,
    pub seed: u64,
    /// Number of starts; starts after the first perturb θ uniformly in ±1.
    pub restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 500,
            grad_tol: 1e-6,
            path: LikelihoodPath::Exact,
            acc: Accuracy::default(),
            fix_epsilon: None,
            init: InitStrategy::DegreeHeuristic,
            history: 10,
            seed: 0,
            restarts: 1,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if self.history == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("history and restarts must be at least 1".into()));
        }
        if let Some(e) = self.fix_epsilon {
            if !e.is_finite() {
                return Err(Error::InvalidConfig("fixed epsilon must be finite".into()));
            }
        }
        self.acc.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: ModelParams,
    pub iterations: usize,
    pub final_grad_norm: f64,
    /// Ω after every accepted step, starting with the initial point.
    pub omega_trace: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
    /// `max_w |E[deg w] − deg w|` at the returned parameters.
    pub degree_residual: f64,
    /// `|E[Σ_E ln K] − Σ_E ln K|` at the returned parameters.
    pub logdist_residual: f64,
    /// Path the residuals were computed with.
    pub residual_path: LikelihoodPath,
}

/// Something that can evaluate Ω and its gradients at given parameters.
pub trait Objective {
    fn n(&self) -> usize;

    /// Evaluation from scratch.
    fn evaluate(&mut self, params: &ModelParams, scope: Scope) -> Result<Evaluation>;

    /// Evaluation at a line-search trial point; `None` rejects the point.
    fn trial(&mut self, params: &ModelParams, scope: Scope) -> Result<Option<Evaluation>> {
        self.evaluate(params, scope).map(Some)
    }

    /// Gives objectives with internal state a chance to rebuild it at an
    /// accepted point. Returns the new evaluation there if anything changed;
    /// `force` asks for a rebuild unless the state is already current.
    fn refresh(&mut self, _params: &ModelParams, _scope: Scope, _force: bool) -> Result<Option<Evaluation>> {
        Ok(None)
    }

    /// Drop in Ω near `omega` that the line search may accept as noise.
    fn noise(&self, _omega: f64) -> f64 {
        OMEGA_NOISE
    }
}

pub struct ExactObjective<'a> {
    network: &'a SpatialNetwork,
    kernel: BoundKernel<'a>,
}

impl<'a> ExactObjective<'a> {
    pub fn new(network: &'a SpatialNetwork, kernel: &'a Kernel) -> Result<Self> {
        Ok(ExactObjective { network, kernel: kernel.bind(network.coords())? })
    }
}

impl Objective for ExactObjective<'_> {
    fn n(&self) -> usize {
        self.network.n()
    }

    fn evaluate(&mut self, params: &ModelParams, scope: Scope) -> Result<Evaluation> {
        exact::evaluate(self.network, params, &self.kernel, scope)
    }
}

/// Tree-code objective that keeps its interaction list fixed during line
/// searches, so every search sees a smooth function. At accepted points the
/// list is refined where it has stopped being admissible or where it blocked
/// a trial step.
pub struct FastObjective<'a> {
    inner: FastLikelihood<'a>,
    list: InteractionList,
    blocked: Vec<usize>,
}

impl<'a> FastObjective<'a> {
    pub fn new(network: &'a SpatialNetwork, kernel: &Kernel, acc: Accuracy) -> Result<Self> {
        Ok(FastObjective { inner: FastLikelihood::new(network, kernel, acc)?, list: InteractionList::default(), blocked: Vec::new() })
    }
}

impl Objective for FastObjective<'_> {
    fn n(&self) -> usize {
        self.inner.tree().len()
    }

    fn noise(&self, omega: f64) -> f64 {
        FAST_OMEGA_NOISE * omega.abs().max(1.0)
    }

    fn evaluate(&mut self, params: &ModelParams, scope: Scope) -> Result<Evaluation> {
        let (ev, list) = self.inner.evaluate_with_list(params, scope)?;
        self.list = list;
        self.blocked.clear();
        Ok(ev)
    }

    fn trial(&mut self, params: &ModelParams, scope: Scope) -> Result<Option<Evaluation>> {
        match self.inner.evaluate_list(params, &self.list, scope)? {
            ListEvaluation::Done(ev) => Ok(Some(ev)),
            ListEvaluation::Diverges(bad) => {
                self.blocked.extend(bad);
                Ok(None)
            }
        }
    }

    fn refresh(&mut self, params: &ModelParams, scope: Scope, _force: bool) -> Result<Option<Evaluation>> {
        self.blocked.sort_unstable();
        self.blocked.dedup();
        let refined = self.inner.refine_list(params, &self.list, &self.blocked)?;
        self.blocked.clear();
        let Some(list) = refined else {
            return Ok(None);
        };
        self.list = list;
        match self.inner.evaluate_list(params, &self.list, scope)? {
            ListEvaluation::Done(ev) => Ok(Some(ev)),
            // refinement keeps only pairs admissible at `params`
            ListEvaluation::Diverges(_) => unreachable!("refined list diverges at its own parameters"),
        }
    }
}

/// Starting point for a fit.
pub fn init_params(network: &SpatialNetwork, strategy: InitStrategy) -> ModelParams {
    let n = network.n();
    let theta = match strategy {
        InitStrategy::Zeros => alloc::vec![0.0; n],
        InitStrategy::DegreeHeuristic => {
            let scale = crate::math::sqrt((2 * network.edge_count() + n) as f64);
            (0..n)
                .map(|u| crate::math::ln((network.degree(u) + 1) as f64 / scale).max(THETA_FLOOR))
                .collect()
        }
    };
    ModelParams::new(theta, 1.0)
}

/// Fits the model to `network`.
pub fn fit(network: &SpatialNetwork, kernel: &Kernel, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    if config.path == LikelihoodPath::Fast && !kernel.is_geometric() {
        return Err(Error::UnsupportedKernel("rank"));
    }
    let mut best: Option<FitReport> = None;
    for start in 0..config.restarts {
        let mut init = init_params(network, config.init);
        if let Some(e) = config.fix_epsilon {
            init.epsilon = e;
        }
        if start > 0 {
            let mut rng = crate::rng::stream(config.seed, start as u64);
            for t in &mut init.theta {
                *t = (*t + rng.random_range(-1.0..=1.0)).max(THETA_FLOOR);
            }
        }
        let report = match config.path {
            LikelihoodPath::Exact => {
                let mut obj = ExactObjective::new(network, kernel)?;
                maximize(&mut obj, init, config)?
            }
            LikelihoodPath::Fast => {
                let mut obj = FastObjective::new(network, kernel, config.acc)?;
                maximize(&mut obj, init, config)?
            }
        };
        let better = match &best {
            None => true,
            Some(b) => report.omega_trace.last() > b.omega_trace.last(),
        };
        if better {
            best = Some(report);
        }
    }
    let mut report = best.unwrap();
    fill_residuals(network, kernel, config, &mut report)?;
    Ok(report)
}

fn fill_residuals(network: &SpatialNetwork, kernel: &Kernel, config: &FitConfig, report: &mut FitReport) -> Result<()> {
    let use_exact = network.n() <= EXACT_RESIDUAL_LIMIT || !kernel.is_geometric();
    let (ev, path) = if use_exact {
        (exact::evaluate(network, &report.params, &kernel.bind(network.coords())?, Scope::Full), LikelihoodPath::Exact)
    } else {
        let mut fl = FastLikelihood::new(network, kernel, config.acc)?;
        (fl.evaluate(&report.params, Scope::Full), LikelihoodPath::Fast)
    };
    report.residual_path = path;
    match ev {
        Ok(ev) => {
            report.degree_residual = ev.grad_theta.iter().fold(0.0, |m, g| m.max(g.abs()));
            report.logdist_residual = ev.grad_epsilon.abs();
        }
        // zero-length pairs leave the ε identity undefined
        Err(Error::ZeroDistance(..)) => {
            let ev = exact::evaluate(network, &report.params, &kernel.bind(network.coords())?, Scope::ThetaOnly)?;
            report.degree_residual = ev.grad_theta.iter().fold(0.0, |m, g| m.max(g.abs()));
            report.logdist_residual = f64::NAN;
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

struct Point {
    x: Vec<f64>,
    /// Gradient of −Ω.
    g: Vec<f64>,
    curv: Vec<f64>,
    omega: f64,
}

fn to_params(x: &[f64], n: usize, fixed: Option<f64>) -> ModelParams {
    ModelParams::new(x[..n].to_vec(), fixed.unwrap_or_else(|| x[n]))
}

fn scope_for(fixed: Option<f64>) -> Scope {
    if fixed.is_some() {
        Scope::ThetaOnly
    } else {
        Scope::Full
    }
}

fn to_point(x: Vec<f64>, ev: Evaluation, fixed: Option<f64>) -> Point {
    let mut g: Vec<f64> = ev.grad_theta.iter().map(|v| -v).collect();
    let mut curv = ev.curvature_theta;
    if fixed.is_none() {
        g.push(-ev.grad_epsilon);
        curv.push(ev.curvature_epsilon);
    }
    Point { x, g, curv, omega: ev.omega }
}

fn eval_point<O: Objective>(obj: &mut O, x: Vec<f64>, n: usize, fixed: Option<f64>) -> Result<Point> {
    let ev = obj.evaluate(&to_params(&x, n, fixed), scope_for(fixed))?;
    Ok(to_point(x, ev, fixed))
}

fn trial_point<O: Objective>(obj: &mut O, x: Vec<f64>, n: usize, fixed: Option<f64>) -> Result<Option<Point>> {
    let ev = obj.trial(&to_params(&x, n, fixed), scope_for(fixed))?;
    Ok(ev.map(|ev| to_point(x, ev, fixed)))
}

fn refresh_point<O: Objective>(obj: &mut O, p: &Point, n: usize, fixed: Option<f64>, force: bool) -> Result<Option<Point>> {
    let ev = obj.refresh(&to_params(&p.x, n, fixed), scope_for(fixed), force)?;
    Ok(ev.map(|ev| to_point(p.x.clone(), ev, fixed)))
}

/// Max-norm of the gradient with components pushing θ below the floor
/// removed.
fn projected_norm(p: &Point, n: usize) -> f64 {
    p.g.iter()
        .enumerate()
        .filter(|&(i, &gi)| !(i < n && p.x[i] <= THETA_FLOOR && gi > 0.0))
        .fold(0.0, |m, (_, gi)| m.max(gi.abs()))
}

/// Armijo on Ω, or, when the change in Ω is within rounding noise, the
/// same condition stated on slopes (`g_new·s ≤ (2c₁ − 1) g·s`).
fn sufficient_increase(cur: &Point, next: &Point, s: &[f64], gs: f64, noise: f64) -> bool {
    if -next.omega <= -cur.omega + ARMIJO_C1 * gs {
        return true;
    }
    next.omega >= cur.omega - noise && dot(&next.g, s) <= (2.0 * ARMIJO_C1 - 1.0) * gs
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the ascent from `init` on any [`Objective`]. Residual fields of the
/// report are filled from the final gradient evaluation.
pub fn maximize<O: Objective>(obj: &mut O, init: ModelParams, config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let n = obj.n();
    init.validate(n)?;
    let fixed = config.fix_epsilon;
    let mut x = init.theta.clone();
    for t in &mut x {
        *t = t.max(THETA_FLOOR);
    }
    if fixed.is_none() {
        x.push(init.epsilon);
    }
    let mut cur = eval_point(obj, x, n, fixed)?;
    if !cur.omega.is_finite() || cur.g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStart(cur.omega));
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.history);
    let mut trace = alloc::vec![cur.omega];
    let mut iterations = 0;
    let termination;
    loop {
        if projected_norm(&cur, n) < config.grad_tol {
            if let Some(p) = refresh_point(obj, &cur, n, fixed, true)? {
                cur = p;
                continue;
            }
            termination = Termination::GradientTolerance;
            break;
        }
        if iterations >= config.max_iters {
            termination = Termination::MaxIterations;
            break;
        }
        iterations += 1;

        let h0: Vec<f64> = cur.curv.iter().map(|c| 1.0 / c.clamp(CURVATURE_MIN, CURVATURE_MAX)).collect();
        let mut d = two_loop(&cur.g, &h0, &memory);
        // coordinates held at the floor stay there
        hold_floor(&cur.x[..n], &mut d[..n]);
        if !(dot(&cur.g, &d) < 0.0) {
            memory.clear();
            d = cur.g.iter().zip(&h0).map(|(g, h)| -g * h).collect();
            hold_floor(&cur.x[..n], &mut d[..n]);
        }
        let longest = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut alpha = if longest > MAX_TRIAL_STEP { MAX_TRIAL_STEP / longest } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut xt: Vec<f64> = cur.x.iter().zip(&d).map(|(x, d)| x + alpha * d).collect();
            for t in &mut xt[..n] {
                *t = t.max(THETA_FLOOR);
            }
            let s: Vec<f64> = xt.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
            let gs = dot(&cur.g, &s);
            if gs >= 0.0 {
                alpha *= 0.5;
                continue;
            }
            match trial_point(obj, xt, n, fixed) {
                Ok(Some(p)) if p.omega.is_finite() && sufficient_increase(&cur, &p, &s, gs, obj.noise(cur.omega)) => {
                    accepted = Some((p, s));
                    break;
                }
                Ok(_) | Err(Error::ZeroDistance(..)) => alpha *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((next, s)) = accepted else {
            if let Some(p) = refresh_point(obj, &cur, n, fixed, true)? {
                cur = p;
                memory.clear();
                continue;
            }
            termination = Termination::LineSearchFailure;
            break;
        };
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * crate::math::sqrt(dot(&y, &y) * dot(&s, &s)) {
            if memory.len() == config.history {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        trace.push(next.omega);
        cur = match refresh_point(obj, &next, n, fixed, false)? {
            Some(p) => p,
            None => next,
        };
    }

    let params = to_params(&cur.x, n, fixed);
    let degree_res = cur.g[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let logdist_res = if fixed.is_none() { cur.g[n].abs() } else { f64::NAN };
    Ok(FitReport {
        params,
        iterations,
        final_grad_norm: projected_norm(&cur, n),
        omega_trace: trace,
        converged: termination == Termination::GradientTolerance,
        termination,
        degree_residual: degree_res,
        logdist_residual: logdist_res,
        residual_path: LikelihoodPath::Exact,
    })
}

fn hold_floor(x: &[f64], d: &mut [f64]) {
    for (x, d) in x.iter().zip(d) {
        if *x <= THETA_FLOOR && *d < 0.0 {
            *d = 0.0;
        }
    }
}

fn two_loop(g: &[f64], h0: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut r: Vec<f64> = q.iter().zip(h0).map(|(q, h)| q * h).collect();
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}
