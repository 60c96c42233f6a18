//! Tree-code evaluation of the log-likelihood and its gradients.
//!
//! The objective is split as
//!
//! ```text
//! Ω = Σ_{(u,v) ∈ E} x_uv − Σ_{u<v} log(1 + z_uv),   z_uv = e^{θu+θv} / K_uv^ε
//! ```
//!
//! with `x_uv = ln z_uv`. The edge sum is exact. The all-pairs sum is taken
//! over the sibling pairs of a [`MetricTree`]: a node pair `(I, J)` whose balls
//! are far apart relative to their radii and whose largest possible `z` is
//! small is replaced by a truncated Maclaurin series of `log(1 + z)` on node
//! aggregates,
//!
//! ```text
//! Σ_{u∈I, v∈J} log(1 + z_uv) ≈ Σ_{t=1..T} (−1)^{t−1}/t · P_t(I) P_t(J) / K_IJ^{tε},
//! P_t(X) = Σ_{u∈X} e^{tθ_u}.
//! ```
//!
//! Otherwise the node with the larger radius is split and the halves are
//! visited separately; pairs of leaves are always evaluated exactly.
//!
//! Gradients are the exact derivatives of this approximation, so the
//! optimizer sees a consistent objective. For `w ∈ I` a far pair contributes
//! `Σ_t (−1)^{t−1} e^{tθ_w} P_t(J) / K_IJ^{tε}` to the expected degree, and
//! `ln K_IJ · Σ_t (−1)^{t−1} P_t(I) P_t(J) / K_IJ^{tε}` to the expected
//! aggregated log-distance. One traversal per sibling pair yields the scalar
//! sums and a list of terminal pairs, which are reduced in a fixed order.

use alloc::vec::Vec;

use crate::exact::{scaled_log_kernel, Evaluation, Scope};
use crate::math::{self, sigmoid, softplus};
use crate::network::{ModelParams, SpatialNetwork};
use crate::par;
use crate::tree::{MetricTree, NO_NODE};
use crate::{Error, Result};

/// Separation (`delta1`), small-`z` bound (`delta2`) and series order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub delta1: f64,
    pub delta2: f64,
    pub order: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy { delta1: 2.0, delta2: 0.2, order: 4 }
    }
}

impl Accuracy {
    pub fn new(delta1: f64, delta2: f64, order: usize) -> Result<Self> {
        let acc = Accuracy { delta1, delta2, order };
        acc.validate()?;
        Ok(acc)
    }

    /// Settings under which no node pair is ever approximated.
    pub fn exhaustive() -> Self {
        Accuracy { delta1: f64::INFINITY, delta2: f64::MIN_POSITIVE, order: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 > 0.0) || !(self.delta2 > 0.0) || self.order == 0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "accuracy needs delta1 > 0, delta2 > 0, order >= 1 (got {}, {}, {})",
                self.delta1,
                self.delta2,
                self.order
            )));
        }
        Ok(())
    }
}

/// Both acceptance tests for approximating node pair `(i, j)` at once:
/// `K_IJ / (r_I + r_J) > delta1` and `e^{max θ_I} e^{max θ_J} / K_IJ < delta2`.
pub fn well_separated(tree: &MetricTree, i: usize, j: usize, acc: &Accuracy) -> bool {
    let k = tree.center_distance(i, j);
    separated_at(tree, i, j, k, acc)
}

#[inline]
pub(crate) fn separated_at(tree: &MetricTree, i: usize, j: usize, k: f64, acc: &Accuracy) -> bool {
    let ratio = k / (tree.radius(i) + tree.radius(j));
    // evaluated in log space so large scores cannot overflow
    ratio > acc.delta1 && tree.max_theta(i) + tree.max_theta(j) - math::ln(k) < math::ln(acc.delta2)
}

/// Approximation is used only when the pair is well separated, `z` is small
/// at the center distance and every member pair has `z_uv < 1`, bounding
/// `K_uv` by the ball geometry.
#[inline]
fn admissible(tree: &MetricTree, i: usize, j: usize, k: f64, eps: f64, acc: &Accuracy) -> bool {
    separated_at(tree, i, j, k, acc) && small_z_at(tree, i, j, k, eps, acc) && series_converges(tree, i, j, k, eps)
}

/// The small-`z` bound restated with `K_IJ^ε`, which is what `z` actually
/// divides by; it only bites when `K^ε < K`.
#[inline]
pub(crate) fn small_z_at(tree: &MetricTree, i: usize, j: usize, k: f64, eps: f64, acc: &Accuracy) -> bool {
    match scaled_log_kernel(k, eps) {
        Some(sl) => tree.max_theta(i) + tree.max_theta(j) - sl < math::ln(acc.delta2),
        None => false,
    }
}

/// Node to split when `(a, b)` is not admissible: the larger radius, then the
/// larger count, then the smaller id; leaves are never split. Symmetric in
/// its arguments.
#[inline]
pub(crate) fn split_first(tree: &MetricTree, a: usize, b: usize) -> bool {
    let (na, nb) = (tree.node(a), tree.node(b));
    if na.is_leaf() {
        return false;
    }
    if nb.is_leaf() {
        return true;
    }
    match na.radius.total_cmp(&nb.radius) {
        core::cmp::Ordering::Greater => true,
        core::cmp::Ordering::Less => false,
        core::cmp::Ordering::Equal => match na.count().cmp(&nb.count()) {
            core::cmp::Ordering::Greater => true,
            core::cmp::Ordering::Less => false,
            core::cmp::Ordering::Equal => a < b,
        },
    }
}

/// Scalar sums over one traversal.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct PairSums {
    /// Approximation of `Σ log(1 + z_uv)` over the covered pairs.
    pub log1p_z: f64,
    /// `Σ ρ_uv ln K_uv` (approximate).
    pub logdist: f64,
    /// `Σ ρ(1−ρ) ln² K` (approximate).
    pub curv_eps: f64,
    /// Node pairs replaced by aggregates.
    pub far_pairs: usize,
    /// Leaf pairs evaluated exactly.
    pub exact_pairs: usize,
    /// Vertex pairs covered (`Σ |I||J|` over visited terminal pairs).
    pub covered: u64,
}

impl PairSums {
    fn add(&mut self, o: &PairSums) {
        self.log1p_z += o.log1p_z;
        self.logdist += o.logdist;
        self.curv_eps += o.curv_eps;
        self.far_pairs += o.far_pairs;
        self.exact_pairs += o.exact_pairs;
        self.covered += o.covered;
    }
}

/// Either a far node pair `(I, J)` or a leaf pair `(u, v)`, with the kernel
/// distance between the centers.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Term {
    Far(usize, usize, f64),
    Near(usize, usize, f64),
}

/// The terminal pairs of one traversal. Reusing a list at other parameters
/// gives an objective that is smooth in `(θ, ε)`; a fresh traversal may
/// switch node pairs between the far-field and exact treatments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionList {
    terms: Vec<Term>,
}

impl InteractionList {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn far_pairs(&self) -> usize {
        self.terms.iter().filter(|t| matches!(t, Term::Far(..))).count()
    }
}

/// Adds the exact contribution of the leaf pair `(u, v)`.
fn near_sums(theta: &[f64], u: usize, v: usize, k: f64, eps: f64, with_eps: bool, out: &mut PairSums) -> Result<()> {
    let sl = scaled_log_kernel(k, eps).ok_or(Error::ZeroDistance(u.min(v), u.max(v), eps))?;
    let x = theta[u] + theta[v] - sl;
    out.log1p_z += softplus(x);
    if with_eps {
        if !(k > 0.0) {
            return Err(Error::ZeroDistance(u.min(v), u.max(v), eps));
        }
        let rho = sigmoid(x);
        let lk = math::ln(k);
        out.logdist += rho * lk;
        out.curv_eps += rho * (1.0 - rho) * lk * lk;
    }
    out.exact_pairs += 1;
    out.covered += 1;
    Ok(())
}

/// Adds the series contribution of the far pair `(i, j)`.
#[allow(clippy::too_many_arguments)]
fn far_sums(tree: &MetricTree, i: usize, j: usize, k: f64, eps: f64, order: usize, with_eps: bool, out: &mut PairSums) {
    let sl = scaled_log_kernel(k, eps).unwrap_or(f64::NEG_INFINITY);
    // Σ_t (−1)^{t−1} t^p z_t for p = −1, 0, 1
    let (mut s_log, mut s_rho, mut s_curv) = (0.0, 0.0, 0.0);
    for t in 1..=order {
        let tf = t as f64;
        let z_t = tree.power_sum(i, t) * tree.power_sum(j, t) * math::exp(-tf * sl);
        let z_t = if t % 2 == 1 { z_t } else { -z_t };
        s_log += z_t / tf;
        s_rho += z_t;
        s_curv += tf * z_t;
    }
    out.log1p_z += s_log;
    if with_eps {
        let lk = math::ln(k);
        out.logdist += s_rho * lk;
        out.curv_eps += s_curv * lk * lk;
    }
    out.far_pairs += 1;
    out.covered += (tree.count(i) * tree.count(j)) as u64;
}

/// Every member pair of a far pair has `z_uv < 1`, so its series converges.
fn series_converges(tree: &MetricTree, i: usize, j: usize, k: f64, eps: f64) -> bool {
    let reach = tree.radius(i) + tree.radius(j);
    let k_bound = if eps >= 0.0 { k - reach } else { k + reach };
    match scaled_log_kernel(k_bound, eps) {
        Some(sl) => tree.max_theta(i) + tree.max_theta(j) - sl < 0.0,
        None => false,
    }
}

struct Ctx<'a> {
    tree: &'a MetricTree,
    theta: &'a [f64],
    eps: f64,
    acc: &'a Accuracy,
    with_eps: bool,
    record: bool,
}

impl Ctx<'_> {
    fn pair(&self, i: usize, j: usize, out: &mut PairSums, terms: &mut Vec<Term>) -> Result<()> {
        let tree = self.tree;
        let k = tree.center_distance(i, j);
        let (ni, nj) = (tree.node(i), tree.node(j));
        if ni.is_leaf() && nj.is_leaf() {
            let (u, v) = (tree.perm()[ni.start], tree.perm()[nj.start]);
            near_sums(self.theta, u, v, k, self.eps, self.with_eps, out)?;
            if self.record {
                terms.push(Term::Near(u, v, k));
            }
            return Ok(());
        }
        if admissible(tree, i, j, k, self.eps, self.acc) {
            far_sums(tree, i, j, k, self.eps, self.acc.order, self.with_eps, out);
            if self.record {
                terms.push(Term::Far(i, j, k));
            }
            return Ok(());
        }
        if split_first(tree, i, j) {
            self.pair(ni.left, j, out, terms)?;
            self.pair(ni.right, j, out, terms)
        } else {
            self.pair(i, nj.left, out, terms)?;
            self.pair(i, nj.right, out, terms)
        }
    }
}

const BLOCK: usize = 64;

fn check(network: &SpatialNetwork, params: &ModelParams, tree: &MetricTree, acc: &Accuracy) -> Result<()> {
    acc.validate()?;
    params.validate(network.n())?;
    if tree.len() != network.n() {
        return Err(Error::LengthMismatch { expected: network.n(), found: tree.len() });
    }
    check_order(tree, acc)
}

fn check_order(tree: &MetricTree, acc: &Accuracy) -> Result<()> {
    if tree.power_order() < acc.order {
        return Err(Error::InvalidConfig(alloc::format!(
            "tree stores {} power sums but the series order is {}",
            tree.power_order(),
            acc.order
        )));
    }
    Ok(())
}

fn traverse(
    tree: &MetricTree,
    params: &ModelParams,
    acc: &Accuracy,
    with_eps: bool,
    record: bool,
) -> Result<(PairSums, InteractionList)> {
    let ctx = Ctx { tree, theta: &params.theta, eps: params.epsilon, acc, with_eps, record };
    let internal: Vec<usize> = (0..tree.nodes().len()).filter(|&i| !tree.node(i).is_leaf()).collect();
    let parts = par::map_blocks(internal.len(), BLOCK, |range| -> Result<(PairSums, Vec<Term>)> {
        let mut s = PairSums::default();
        let mut terms = Vec::new();
        for &p in &internal[range] {
            let nd = tree.node(p);
            ctx.pair(nd.left, nd.right, &mut s, &mut terms)?;
        }
        Ok((s, terms))
    });
    let mut total = PairSums::default();
    let mut terms = Vec::new();
    for p in parts {
        let (s, t) = p?;
        total.add(&s);
        terms.extend(t);
    }
    Ok((total, InteractionList { terms }))
}

/// Sums over a stored list, or the positions of the far pairs whose series
/// would diverge at `params`.
fn sum_list(
    tree: &MetricTree,
    params: &ModelParams,
    order: usize,
    list: &InteractionList,
    with_eps: bool,
) -> Result<core::result::Result<PairSums, Vec<usize>>> {
    let (theta, eps) = (&params.theta[..], params.epsilon);
    let parts = par::map_blocks(list.terms.len(), 4096, |range| -> Result<(PairSums, Vec<usize>)> {
        let mut s = PairSums::default();
        let mut bad = Vec::new();
        for (idx, t) in range.clone().zip(&list.terms[range]) {
            match *t {
                Term::Near(u, v, k) => near_sums(theta, u, v, k, eps, with_eps, &mut s)?,
                Term::Far(i, j, k) => {
                    if series_converges(tree, i, j, k, eps) {
                        far_sums(tree, i, j, k, eps, order, with_eps, &mut s);
                    } else {
                        bad.push(idx);
                    }
                }
            }
        }
        Ok((s, bad))
    });
    let mut total = PairSums::default();
    let mut bad = Vec::new();
    for p in parts {
        let (s, b) = p?;
        total.add(&s);
        bad.extend(b);
    }
    Ok(if bad.is_empty() { Ok(total) } else { Err(bad) })
}

/// Refines `list` at `params`: far pairs that are no longer admissible, and
/// those at the positions in `split`, are replaced by the traversal of their
/// children. Pairs are never merged back, so repeated refinement terminates.
/// Returns `None` when nothing changed. `tree` must have been refreshed with
/// `params.theta`.
pub fn refine_list(
    tree: &MetricTree,
    params: &ModelParams,
    acc: &Accuracy,
    list: &InteractionList,
    split: &[usize],
) -> Result<Option<InteractionList>> {
    let ctx = Ctx { tree, theta: &params.theta, eps: params.epsilon, acc, with_eps: false, record: true };
    let mut scratch = PairSums::default();
    let mut terms = Vec::with_capacity(list.terms.len());
    let mut changed = false;
    for (idx, t) in list.terms.iter().enumerate() {
        match *t {
            Term::Far(i, j, k) if split.contains(&idx) || !admissible(tree, i, j, k, params.epsilon, acc) => {
                changed = true;
                let (ni, nj) = (tree.node(i), tree.node(j));
                if split_first(tree, i, j) {
                    ctx.pair(ni.left, j, &mut scratch, &mut terms)?;
                    ctx.pair(ni.right, j, &mut scratch, &mut terms)?;
                } else {
                    ctx.pair(i, nj.left, &mut scratch, &mut terms)?;
                    ctx.pair(i, nj.right, &mut scratch, &mut terms)?;
                }
            }
            other => terms.push(other),
        }
    }
    Ok(if changed { Some(InteractionList { terms }) } else { None })
}

/// Approximate `Σ_{u<v} log(1 + z_uv)` and ε terms over all sibling pairs.
/// `tree` must have been refreshed with `params.theta`.
pub fn pair_sums(
    tree: &MetricTree,
    params: &ModelParams,
    acc: &Accuracy,
    with_eps: bool,
) -> Result<PairSums> {
    check_order(tree, acc)?;
    Ok(traverse(tree, params, acc, with_eps, false)?.0)
}

/// θ derivatives of the approximate pair sum. A far pair `(I, J)` adds
/// `Σ_t (−1)^{t−1} P_t(J) K_IJ^{−tε} e^{tθ_w}` to every `w ∈ I`; these
/// coefficients are stored per node, summed down the tree and expanded once
/// per vertex.
fn degrees_from_list(tree: &MetricTree, params: &ModelParams, order: usize, list: &InteractionList) -> (Vec<f64>, Vec<f64>) {
    let (theta, eps) = (&params.theta[..], params.epsilon);
    let n = tree.len();
    let nodes = tree.nodes().len();
    let mut coef = alloc::vec![0.0; nodes * order];
    let mut expected = alloc::vec![0.0; n];
    let mut curv = alloc::vec![0.0; n];
    for term in &list.terms {
        match *term {
            Term::Far(i, j, k) => {
                let sl = scaled_log_kernel(k, eps).unwrap_or(f64::NEG_INFINITY);
                for t in 1..=order {
                    let s = math::exp(-(t as f64) * sl);
                    let s = if t % 2 == 1 { s } else { -s };
                    coef[i * order + t - 1] += s * tree.power_sum(j, t);
                    coef[j * order + t - 1] += s * tree.power_sum(i, t);
                }
            }
            Term::Near(u, v, k) => {
                // validity was checked when the sums were taken
                let sl = scaled_log_kernel(k, eps).unwrap_or(f64::NEG_INFINITY);
                let rho = sigmoid(theta[u] + theta[v] - sl);
                expected[u] += rho;
                expected[v] += rho;
                curv[u] += rho * (1.0 - rho);
                curv[v] += rho * (1.0 - rho);
            }
        }
    }
    // children follow their parent in preorder
    for id in 0..nodes {
        let p = tree.node(id).parent;
        if p != NO_NODE {
            for t in 0..order {
                coef[id * order + t] += coef[p * order + t];
            }
        }
    }
    let far = par::map_range(n, |w| {
        let c = &coef[tree.leaf_of(w) * order..][..order];
        let (mut e, mut h) = (0.0, 0.0);
        for (t, &ct) in c.iter().enumerate() {
            if ct != 0.0 {
                let v = ct * math::exp((t + 1) as f64 * theta[w]);
                e += v;
                h += (t + 1) as f64 * v;
            }
        }
        (e, h)
    });
    for (w, (e, h)) in far.into_iter().enumerate() {
        expected[w] += e;
        curv[w] += h;
    }
    (expected, curv)
}

/// Approximate expected degrees and θ curvatures.
/// `tree` must have been refreshed with `params.theta`.
pub fn expected_degrees(tree: &MetricTree, params: &ModelParams, acc: &Accuracy) -> Result<(Vec<f64>, Vec<f64>)> {
    acc.validate()?;
    params.validate(tree.len())?;
    check_order(tree, acc)?;
    let (_, list) = traverse(tree, params, acc, false, true)?;
    Ok(degrees_from_list(tree, params, acc.order, &list))
}

/// `(Σ_E x_uv, Σ_E ln K_uv)` computed exactly over the edge list.
fn edge_terms(network: &SpatialNetwork, params: &ModelParams, tree: &MetricTree, with_eps: bool) -> Result<(f64, f64)> {
    let kernel = tree.kernel();
    let coords = network.coords();
    let (mut xs, mut lks) = (0.0, 0.0);
    for &(u, v) in network.edges() {
        let k = kernel.point_distance(coords.point(u), coords.point(v)).unwrap();
        let sl = scaled_log_kernel(k, params.epsilon).ok_or(Error::ZeroDistance(u, v, params.epsilon))?;
        xs += params.theta[u] + params.theta[v] - sl;
        if with_eps {
            if !(k > 0.0) {
                return Err(Error::ZeroDistance(u, v, params.epsilon));
            }
            lks += math::ln(k);
        }
    }
    Ok((xs, lks))
}

fn combine(edge_x: f64, pairs: f64) -> (f64, usize) {
    let omega = edge_x - pairs;
    if omega.is_nan() || omega == f64::NEG_INFINITY {
        // coincident positions: probability one somewhere
        (f64::NEG_INFINITY, 1)
    } else {
        (omega, 0)
    }
}

/// Tree-code log-likelihood. `tree` must have been refreshed with
/// `params.theta`.
pub fn omega_fast(
    network: &SpatialNetwork,
    params: &ModelParams,
    tree: &MetricTree,
    acc: &Accuracy,
) -> Result<f64> {
    check(network, params, tree, acc)?;
    let (edge_x, _) = edge_terms(network, params, tree, false)?;
    let sums = pair_sums(tree, params, acc, false)?;
    Ok(combine(edge_x, sums.log1p_z).0)
}

fn assemble(
    network: &SpatialNetwork,
    params: &ModelParams,
    tree: &MetricTree,
    order: usize,
    with_eps: bool,
    sums: &PairSums,
    list: &InteractionList,
) -> Result<Evaluation> {
    let (edge_x, edge_lk) = edge_terms(network, params, tree, with_eps)?;
    let (expected, curv) = degrees_from_list(tree, params, order, list);
    let (omega, conflicts) = combine(edge_x, sums.log1p_z);
    let grad_theta = expected.iter().enumerate().map(|(w, e)| network.degree(w) as f64 - e).collect();
    Ok(Evaluation {
        omega,
        grad_theta,
        grad_epsilon: if with_eps { sums.logdist - edge_lk } else { 0.0 },
        expected_degrees: expected,
        expected_agg_logdist: if with_eps { sums.logdist } else { 0.0 },
        curvature_theta: curv,
        curvature_epsilon: if with_eps { sums.curv_eps } else { 0.0 },
        conflicts,
    })
}

/// Tree-code log-likelihood and gradients, together with the interaction
/// list the traversal settled on. `tree` must have been refreshed with
/// `params.theta`.
pub fn evaluate_fast_with_list(
    network: &SpatialNetwork,
    params: &ModelParams,
    tree: &MetricTree,
    acc: &Accuracy,
    scope: Scope,
) -> Result<(Evaluation, InteractionList)> {
    check(network, params, tree, acc)?;
    let with_eps = scope == Scope::Full;
    let (sums, list) = traverse(tree, params, acc, with_eps, true)?;
    let ev = assemble(network, params, tree, acc.order, with_eps, &sums, &list)?;
    Ok((ev, list))
}

/// Tree-code log-likelihood and gradients. `tree` must have been refreshed
/// with `params.theta`.
pub fn evaluate_fast(
    network: &SpatialNetwork,
    params: &ModelParams,
    tree: &MetricTree,
    acc: &Accuracy,
    scope: Scope,
) -> Result<Evaluation> {
    Ok(evaluate_fast_with_list(network, params, tree, acc, scope)?.0)
}

/// Result of evaluating over a stored list.
#[derive(Debug, Clone, PartialEq)]
pub enum ListEvaluation {
    Done(Evaluation),
    /// Positions of far pairs whose series diverges at these parameters.
    Diverges(Vec<usize>),
}

/// Evaluation over a list from an earlier traversal. `tree` must have been
/// refreshed with `params.theta`.
pub fn evaluate_list(
    network: &SpatialNetwork,
    params: &ModelParams,
    tree: &MetricTree,
    acc: &Accuracy,
    list: &InteractionList,
    scope: Scope,
) -> Result<ListEvaluation> {
    check(network, params, tree, acc)?;
    let with_eps = scope == Scope::Full;
    match sum_list(tree, params, acc.order, list, with_eps)? {
        Ok(sums) => Ok(ListEvaluation::Done(assemble(network, params, tree, acc.order, with_eps, &sums, list)?)),
        Err(bad) => Ok(ListEvaluation::Diverges(bad)),
    }
}

/// Full tree-code evaluation (θ and ε derivatives).
pub fn grad_fast(
    network: &SpatialNetwork,
    params: &ModelParams,
    tree: &MetricTree,
    acc: &Accuracy,
) -> Result<Evaluation> {
    evaluate_fast(network, params, tree, acc, Scope::Full)
}

/// Owns a tree over a network's positions and refreshes its aggregates
/// before every evaluation.
#[derive(Debug, Clone)]
pub struct FastLikelihood<'a> {
    network: &'a SpatialNetwork,
    tree: MetricTree,
    acc: Accuracy,
}

impl<'a> FastLikelihood<'a> {
    pub fn new(network: &'a SpatialNetwork, kernel: &crate::kernels::Kernel, acc: Accuracy) -> Result<Self> {
        acc.validate()?;
        let mut tree = MetricTree::build(network.coords(), kernel)?;
        if acc.order != tree.power_order() {
            let zeros = alloc::vec![0.0; network.n()];
            tree.set_power_order(acc.order, &zeros)?;
        }
        Ok(FastLikelihood { network, tree, acc })
    }

    pub fn tree(&self) -> &MetricTree {
        &self.tree
    }

    pub fn accuracy(&self) -> &Accuracy {
        &self.acc
    }

    pub fn omega(&mut self, params: &ModelParams) -> Result<f64> {
        params.validate(self.network.n())?;
        self.tree.refresh_aggregates(&params.theta)?;
        omega_fast(self.network, params, &self.tree, &self.acc)
    }

    pub fn evaluate(&mut self, params: &ModelParams, scope: Scope) -> Result<Evaluation> {
        params.validate(self.network.n())?;
        self.tree.refresh_aggregates(&params.theta)?;
        evaluate_fast(self.network, params, &self.tree, &self.acc, scope)
    }

    /// Evaluation together with the interaction list it used.
    pub fn evaluate_with_list(&mut self, params: &ModelParams, scope: Scope) -> Result<(Evaluation, InteractionList)> {
        params.validate(self.network.n())?;
        self.tree.refresh_aggregates(&params.theta)?;
        evaluate_fast_with_list(self.network, params, &self.tree, &self.acc, scope)
    }

    /// Evaluation over a fixed list; see [`evaluate_list`].
    pub fn evaluate_list(&mut self, params: &ModelParams, list: &InteractionList, scope: Scope) -> Result<ListEvaluation> {
        params.validate(self.network.n())?;
        self.tree.refresh_aggregates(&params.theta)?;
        evaluate_list(self.network, params, &self.tree, &self.acc, list, scope)
    }

    /// See [`refine_list`].
    pub fn refine_list(&mut self, params: &ModelParams, list: &InteractionList, split: &[usize]) -> Result<Option<InteractionList>> {
        params.validate(self.network.n())?;
        self.tree.refresh_aggregates(&params.theta)?;
        refine_list(&self.tree, params, &self.acc, list, split)
    }

    /// Traversal statistics at `params`.
    pub fn stats(&mut self, params: &ModelParams) -> Result<PairSums> {
        params.validate(self.network.n())?;
        self.tree.refresh_aggregates(&params.theta)?;
        pair_sums(&self.tree, params, &self.acc, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;
    use crate::kernels::Kernel;
    use crate::network::Coords;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn instance(n: usize, m: usize, seed: u64) -> SpatialNetwork {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coords = Coords::new(2, (0..2 * n).map(|_| rng.random()).collect()).unwrap();
        let edges: Vec<_> = (0..m).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        SpatialNetwork::from_edges(coords, edges).unwrap().0
    }

    #[test]
    fn list_gradient_matches_finite_differences() {
        for (seed, eps) in [(1u64, 1.0), (2, 3.0), (3, 0.5)] {
            let net = instance(300, 900, seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed + 10);
            let theta: Vec<f64> = (0..300).map(|_| rng.random_range(-4.0..-2.0)).collect();
            let mut fl = FastLikelihood::new(&net, &Kernel::Euclidean, Accuracy::default()).unwrap();
            let p0 = ModelParams::new(theta, eps);
            let (ev, list) = fl.evaluate_with_list(&p0, Scope::Full).unwrap();
            assert!(list.far_pairs() > 0);
            let f = |fl: &mut FastLikelihood, p: &ModelParams| match fl.evaluate_list(p, &list, Scope::Full).unwrap() {
                ListEvaluation::Done(ev) => ev.omega,
                ListEvaluation::Diverges(_) => panic!("list diverges"),
            };
            let h = 1e-5;
            for w in [0usize, 17, 123, 299] {
                let (mut a, mut b) = (p0.clone(), p0.clone());
                a.theta[w] += h;
                b.theta[w] -= h;
                let fd = (f(&mut fl, &a) - f(&mut fl, &b)) / (2.0 * h);
                assert!((fd - ev.grad_theta[w]).abs() < 1e-5 * (1.0 + fd.abs()), "seed {seed} w {w}: {fd} vs {}", ev.grad_theta[w]);
            }
            let (mut a, mut b) = (p0.clone(), p0.clone());
            a.epsilon += h;
            b.epsilon -= h;
            let fd = (f(&mut fl, &a) - f(&mut fl, &b)) / (2.0 * h);
            assert!((fd - ev.grad_epsilon).abs() < 1e-5 * (1.0 + fd.abs()), "seed {seed} eps: {fd} vs {}", ev.grad_epsilon);
        }
    }

    #[test]
    fn singleton_nodes_with_tiny_scores_are_separated() {
        let c = Coords::new(2, vec![0.0, 0.0, 10.0, 0.0]).unwrap();
        let mut t = MetricTree::build(&c, &Kernel::Euclidean).unwrap();
        t.refresh_aggregates(&[-30.0, -30.0]).unwrap();
        let (l, r) = (t.node(0).left, t.node(0).right);
        assert!(well_separated(&t, l, r, &Accuracy::default()));
    }

    #[test]
    fn overlapping_balls_are_not_separated() {
        let c = Coords::new(1, vec![0.0, 1.0, 2.0, 3.0, 1.5, 2.5]).unwrap();
        let mut t = MetricTree::build(&c, &Kernel::Euclidean).unwrap();
        t.refresh_aggregates(&[-50.0; 6]).unwrap();
        for (a, b, _) in t.sibling_pairs() {
            let k = t.center_distance(a, b);
            if k < t.radius(a) + t.radius(b) {
                assert!(!well_separated(&t, a, b, &Accuracy::default()));
            }
        }
        let (l, r) = (t.node(0).left, t.node(0).right);
        assert!(t.center_distance(l, r) < t.radius(l) + t.radius(r) * 2.0);
    }

    #[test]
    fn separation_matches_direct_inequalities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let net = instance(300, 0, 12);
        let mut t = MetricTree::build(net.coords(), &Kernel::Euclidean).unwrap();
        let mut agree = 0;
        for trial in 0..20 {
            let theta: Vec<f64> = (0..300).map(|_| rng.random_range(-6.0..0.0)).collect();
            t.refresh_aggregates(&theta).unwrap();
            let acc = Accuracy::new(rng.random_range(0.5..4.0), rng.random_range(0.01..1.0), 4).unwrap();
            for _ in 0..200 {
                let a = rng.random_range(0..t.nodes().len());
                let b = rng.random_range(0..t.nodes().len());
                let k = t.center_distance(a, b);
                let c1 = k / (t.radius(a) + t.radius(b)) > acc.delta1;
                let c2 = t.max_theta(a).exp() * t.max_theta(b).exp() / k < acc.delta2;
                assert_eq!(well_separated(&t, a, b, &acc), c1 && c2, "trial {trial}");
                agree += 1;
            }
        }
        assert_eq!(agree, 4000);
    }

    #[test]
    fn exhaustive_settings_reproduce_exact() {
        let net = instance(120, 400, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let params = ModelParams::new((0..120).map(|_| rng.random_range(-3.0..1.0)).collect(), 0.8);
        let k = Kernel::Euclidean;
        let mut fl = FastLikelihood::new(&net, &k, Accuracy::exhaustive()).unwrap();
        let fast = fl.evaluate(&params, Scope::Full).unwrap();
        let ex = exact::grad(&net, &params, &k.bind(net.coords()).unwrap()).unwrap();
        assert_relative_eq!(fast.omega, ex.omega, max_relative = 1e-10);
        assert_relative_eq!(fast.grad_epsilon, ex.grad_epsilon, max_relative = 1e-10);
        for w in 0..120 {
            assert_relative_eq!(fast.expected_degrees[w], ex.expected_degrees[w], max_relative = 1e-10);
            assert_relative_eq!(fast.curvature_theta[w], ex.curvature_theta[w], max_relative = 1e-10);
        }
        let st = fl.stats(&params).unwrap();
        assert_eq!(st.far_pairs, 0);
        assert_eq!(st.exact_pairs, 120 * 119 / 2);
    }

    #[test]
    fn pair_coverage_is_exact() {
        for (n, seed) in [(2usize, 1u64), (17, 2), (200, 3)] {
            let net = instance(n, 0, seed);
            let params = ModelParams::new(vec![-4.0; n], 1.0);
            let mut fl = FastLikelihood::new(&net, &Kernel::Euclidean, Accuracy::default()).unwrap();
            let st = fl.stats(&params).unwrap();
            assert_eq!(st.covered, (n * (n - 1) / 2) as u64);
        }
    }

    #[test]
    fn vanishing_scores_give_degree_gradient() {
        let net = instance(300, 900, 5);
        let params = ModelParams::new(vec![-20.0; 300], 1.0);
        let mut fl = FastLikelihood::new(&net, &Kernel::Euclidean, Accuracy::default()).unwrap();
        let ev = fl.evaluate(&params, Scope::Full).unwrap();
        for w in 0..300 {
            assert!((ev.grad_theta[w] - net.degree(w) as f64).abs() < 1e-6);
        }
        // both Ω paths collapse to the edge term
        let ex = exact::omega(&net, &params, &Kernel::Euclidean.bind(net.coords()).unwrap()).unwrap().value;
        assert_relative_eq!(ev.omega, ex, max_relative = 1e-9);
    }

    #[test]
    fn far_field_error_within_alternating_series_bound() {
        // two tight clusters far apart so only truncation error remains
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..50 {
            let m1 = rng.random_range(2..30);
            let m2 = m1;
            let sep = rng.random_range(50.0..500.0);
            let mut pts = Vec::new();
            for _ in 0..m1 {
                pts.extend([rng.random_range(0.0..1e-9), rng.random_range(0.0..1e-9)]);
            }
            for _ in 0..m2 {
                pts.extend([sep + rng.random_range(0.0..1e-9), rng.random_range(0.0..1e-9)]);
            }
            let c = Coords::new(2, pts).unwrap();
            let n = m1 + m2;
            let acc = Accuracy::default();
            let cap = (acc.delta2 * sep).ln() / 2.0;
            let theta: Vec<f64> = (0..n).map(|_| cap - rng.random_range(0.01..3.0)).collect();
            let mut t = MetricTree::build(&c, &Kernel::Euclidean).unwrap();
            t.refresh_aggregates(&theta).unwrap();
            // the root split separates the two clusters
            let (l, r) = (t.node(0).left, t.node(0).right);
            assert!(t.members(l).iter().all(|&u| u < m1));
            assert!(well_separated(&t, l, r, &acc), "trial {trial}");
            let params = ModelParams::new(theta.clone(), 1.0);
            let ctx = Ctx { tree: &t, theta: &params.theta, eps: 1.0, acc: &acc, with_eps: false, record: false };
            let mut s = PairSums::default();
            ctx.pair(l, r, &mut s, &mut Vec::new()).unwrap();
            assert_eq!(s.far_pairs, 1);
            let mut exact_sum = 0.0;
            for &u in t.members(l) {
                for &v in t.members(r) {
                    let k = crate::kernels::euclidean(c.point(u), c.point(v)).unwrap();
                    exact_sum += (theta[u] + theta[v] - k.ln()).exp().ln_1p();
                }
            }
            let bound = 2.0 * exact_sum.abs() * acc.delta2.powi(acc.order as i32) / (acc.order as f64 + 1.0);
            assert!((s.log1p_z - exact_sum).abs() < bound, "trial {trial}");
        }
    }

    #[test]
    fn rejects_short_power_sums() {
        let net = instance(10, 5, 1);
        let params = ModelParams::new(vec![0.0; 10], 1.0);
        let t = MetricTree::build(net.coords(), &Kernel::Euclidean).unwrap();
        let acc = Accuracy { order: 6, ..Accuracy::default() };
        assert!(omega_fast(&net, &params, &t, &acc).is_err());
        assert!(Accuracy::new(0.0, 0.2, 4).is_err());
    }
}
