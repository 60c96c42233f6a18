//! Binary ball tree over vertex positions.
//!
//! Every internal node is split at the median of its members along the axis
//! of largest coordinate spread, so the two children differ in size by at most
//! one and leaves hold exactly one vertex. Great-circle positions are split in
//! their unit-sphere embedding, while centers and radii are measured with the
//! great-circle distance itself.
//!
//! Besides geometry each node carries θ-aggregates (count, max θ and the power
//! sums `Σ e^{tθ}` for `t = 1..=order`) which [`MetricTree::refresh_aggregates`]
//! recomputes bottom-up in O(n · order).

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::kernels::Kernel;
use crate::math;
use crate::network::Coords;
use crate::{Error, Result};

pub const NO_NODE: usize = usize::MAX;

/// Default number of stored power sums (matches the default series order).
pub const DEFAULT_POWER_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Member range in [`MetricTree::perm`].
    pub start: usize,
    pub end: usize,
    pub left: usize,
    pub right: usize,
    pub parent: usize,
    pub level: u32,
    pub radius: f64,
}

impl Node {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.left == NO_NODE
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone)]
pub struct MetricTree {
    kernel: Kernel,
    dim: usize,
    nodes: Vec<Node>,
    centers: Vec<f64>,
    perm: Vec<usize>,
    leaf_of: Vec<usize>,
    power_order: usize,
    max_theta: Vec<f64>,
    power_sums: Vec<f64>,
}

impl MetricTree {
    /// Builds the tree. The rank kernel is refused since it has no positions
    /// to bisect.
    pub fn build(coords: &Coords, kernel: &Kernel) -> Result<Self> {
        if !kernel.is_geometric() {
            return Err(Error::UnsupportedKernel("rank"));
        }
        kernel.check(coords)?;
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("cannot build a tree over zero vertices".into()));
        }

        // Splitting space: raw coordinates, or unit vectors for the sphere.
        let split_pts: Vec<f64> = match kernel {
            Kernel::GreatCircle { .. } => {
                let mut v = Vec::with_capacity(3 * n);
                for i in 0..n {
                    v.extend_from_slice(&unit_vector(coords.point(i)));
                }
                v
            }
            _ => coords.as_slice().to_vec(),
        };
        let split_dim = split_pts.len() / n;

        let mut tree = MetricTree {
            kernel: kernel.clone(),
            dim: coords.dim(),
            nodes: Vec::with_capacity(2 * n - 1),
            centers: Vec::with_capacity((2 * n - 1) * coords.dim()),
            perm: (0..n).collect(),
            leaf_of: alloc::vec![NO_NODE; n],
            power_order: DEFAULT_POWER_ORDER,
            max_theta: Vec::new(),
            power_sums: Vec::new(),
        };

        // Preorder construction with an explicit stack of (node, start, end).
        tree.push_node(0, n, NO_NODE, 0, coords, &split_pts, split_dim);
        let mut stack = alloc::vec![0usize];
        while let Some(id) = stack.pop() {
            let (start, end, level) = {
                let nd = &tree.nodes[id];
                (nd.start, nd.end, nd.level)
            };
            if end - start == 1 {
                tree.leaf_of[tree.perm[start]] = id;
                continue;
            }
            let axis = widest_axis(&tree.perm[start..end], &split_pts, split_dim);
            let k = (end - start) / 2;
            tree.perm[start..end].select_nth_unstable_by(k, |&a, &b| {
                split_pts[a * split_dim + axis]
                    .total_cmp(&split_pts[b * split_dim + axis])
                    .then(a.cmp(&b))
            });
            let left = tree.push_node(start, start + k, id, level + 1, coords, &split_pts, split_dim);
            let right = tree.push_node(start + k, end, id, level + 1, coords, &split_pts, split_dim);
            tree.nodes[id].left = left;
            tree.nodes[id].right = right;
            stack.push(right);
            stack.push(left);
        }

        let zeros = alloc::vec![0.0; n];
        tree.refresh_aggregates(&zeros)?;
        Ok(tree)
    }

    #[allow(clippy::too_many_arguments)]
    fn push_node(
        &mut self,
        start: usize,
        end: usize,
        parent: usize,
        level: u32,
        coords: &Coords,
        split_pts: &[f64],
        split_dim: usize,
    ) -> usize {
        let members = &self.perm[start..end];
        let center = match self.kernel {
            _ if members.len() == 1 => coords.point(members[0]).to_vec(),
            Kernel::GreatCircle { .. } => {
                let mut m = [0.0; 3];
                for &u in members {
                    for k in 0..3 {
                        m[k] += split_pts[u * split_dim + k];
                    }
                }
                let norm = math::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
                if norm > 1e-12 * members.len() as f64 {
                    let ll = lat_lon(m[0] / norm, m[1] / norm, m[2] / norm);
                    alloc::vec![ll.0, ll.1]
                } else {
                    coords.point(members[0]).to_vec()
                }
            }
            _ => {
                let mut c = alloc::vec![0.0; self.dim];
                for &u in members {
                    for (ck, x) in c.iter_mut().zip(coords.point(u)) {
                        *ck += x;
                    }
                }
                let inv = 1.0 / members.len() as f64;
                c.iter_mut().for_each(|x| *x *= inv);
                c
            }
        };
        let radius = members
            .iter()
            .map(|&u| self.kernel.point_distance(&center, coords.point(u)).unwrap())
            .fold(0.0, f64::max);
        self.centers.extend_from_slice(&center);
        self.nodes.push(Node { start, end, left: NO_NODE, right: NO_NODE, parent, level, radius });
        self.nodes.len() - 1
    }

    /// Sets how many power sums each node stores and recomputes them for
    /// the θ used in the last refresh.
    pub fn set_power_order(&mut self, order: usize, theta: &[f64]) -> Result<()> {
        if order == 0 {
            return Err(Error::InvalidConfig("power order must be at least 1".into()));
        }
        self.power_order = order;
        self.refresh_aggregates(theta)
    }

    pub fn power_order(&self) -> usize {
        self.power_order
    }

    /// Recomputes count/max/power-sum aggregates for `theta` (indexed by
    /// original vertex id).
    pub fn refresh_aggregates(&mut self, theta: &[f64]) -> Result<()> {
        let n = self.perm.len();
        if theta.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: theta.len() });
        }
        let order = self.power_order;
        let m = self.nodes.len();
        self.max_theta.clear();
        self.max_theta.resize(m, f64::NEG_INFINITY);
        self.power_sums.clear();
        self.power_sums.resize(m * order, 0.0);
        // Children always follow their parent in preorder.
        for id in (0..m).rev() {
            let nd = &self.nodes[id];
            if nd.is_leaf() {
                let t = theta[self.perm[nd.start]];
                self.max_theta[id] = t;
                let e = math::exp(t);
                let mut p = e;
                for k in 0..order {
                    self.power_sums[id * order + k] = p;
                    p *= e;
                }
            } else {
                let (l, r) = (nd.left, nd.right);
                self.max_theta[id] = self.max_theta[l].max(self.max_theta[r]);
                for k in 0..order {
                    self.power_sums[id * order + k] =
                        self.power_sums[l * order + k] + self.power_sums[r * order + k];
                }
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    #[inline]
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    /// Tree order → vertex id.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn members(&self, id: usize) -> &[usize] {
        let nd = &self.nodes[id];
        &self.perm[nd.start..nd.end]
    }

    #[inline]
    pub fn leaf_of(&self, vertex: usize) -> usize {
        self.leaf_of[vertex]
    }

    #[inline]
    pub fn center(&self, id: usize) -> &[f64] {
        &self.centers[id * self.dim..(id + 1) * self.dim]
    }

    #[inline]
    pub fn radius(&self, id: usize) -> f64 {
        self.nodes[id].radius
    }

    #[inline]
    pub fn count(&self, id: usize) -> usize {
        self.nodes[id].count()
    }

    #[inline]
    pub fn max_theta(&self, id: usize) -> f64 {
        self.max_theta[id]
    }

    #[inline]
    pub fn sum_exp_theta(&self, id: usize) -> f64 {
        self.power_sums[id * self.power_order]
    }

    /// `Σ_{u ∈ node} e^{t θ_u}` for `1 <= t <= power_order`.
    #[inline]
    pub fn power_sum(&self, id: usize, t: usize) -> f64 {
        debug_assert!(t >= 1 && t <= self.power_order);
        self.power_sums[id * self.power_order + t - 1]
    }

    /// Kernel distance between two node centers.
    #[inline]
    pub fn center_distance(&self, a: usize, b: usize) -> f64 {
        self.kernel.point_distance(self.center(a), self.center(b)).unwrap()
    }

    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    /// One `(left, right, level)` triple per internal node; `level` is the
    /// depth of the two children. The member cross products of all pairs
    /// partition the set of unordered vertex pairs.
    pub fn sibling_pairs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.nodes
            .iter()
            .filter(|n| !n.is_leaf())
            .map(|n| (n.left, n.right, n.level + 1))
    }
}

fn widest_axis(members: &[usize], pts: &[f64], dim: usize) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..dim {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &u in members {
            let x = pts[u * dim + k];
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if hi - lo > best.1 {
            best = (k, hi - lo);
        }
    }
    best.0
}

fn unit_vector(ll: &[f64]) -> [f64; 3] {
    let (lat, lon) = (ll[0] * PI / 180.0, ll[1] * PI / 180.0);
    let cl = math::cos(lat);
    [cl * math::cos(lon), cl * math::sin(lon), math::sin(lat)]
}

fn lat_lon(x: f64, y: f64, z: f64) -> (f64, f64) {
    let lat = math::asin(z.clamp(-1.0, 1.0)) * 180.0 / PI;
    let lon = math::atan2(y, x) * 180.0 / PI;
    (lat.clamp(-90.0, 90.0), lon.clamp(-180.0, 180.0))
}
