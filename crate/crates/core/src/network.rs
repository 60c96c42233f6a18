//! Graph, position and parameter containers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// Row-major table of `n` positions in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords {
    dim: usize,
    data: Vec<f64>,
}

impl Coords {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidNetwork("coordinate dimension must be at least 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch { expected: dim, found: data.len() % dim });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidNetwork(format!("non-finite coordinate for vertex {}", i / dim)));
        }
        Ok(Coords { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Coords::new(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Groups of vertex ids that share a bit-identical position.
    pub fn collisions(&self) -> Vec<Vec<usize>> {
        let mut by_pos: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
        for i in 0..self.len() {
            // +0.0 and -0.0 are the same position
            let key = self.point(i).iter().map(|x| (x + 0.0).to_bits()).collect();
            by_pos.entry(key).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = by_pos.into_values().filter(|g| g.len() > 1).collect();
        groups.sort();
        groups
    }

    /// Adds uniform noise in `[-magnitude, magnitude]` to every coordinate of
    /// each vertex that shares its exact position with another vertex.
    /// Repeats until all positions are distinct. Returns the number of
    /// vertices moved.
    pub fn jitter_collisions<R: Rng>(&mut self, magnitude: f64, rng: &mut R) -> usize {
        let mut moved = 0;
        if !(magnitude > 0.0) {
            return 0;
        }
        loop {
            let groups = self.collisions();
            if groups.is_empty() {
                return moved;
            }
            for g in groups {
                for &i in &g {
                    for k in 0..self.dim {
                        let noise: f64 = rng.random_range(-magnitude..=magnitude);
                        self.data[i * self.dim + k] += noise;
                    }
                    moved += 1;
                }
            }
        }
    }
}

/// Undirected simple graph with a position per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialNetwork {
    coords: Coords,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl SpatialNetwork {
    /// Builds a network, dropping self-loops and duplicate edges. Returns the
    /// network and the number of dropped input edges.
    pub fn from_edges<I>(coords: Coords, edges: I) -> Result<(Self, usize)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("network has no vertices".into()));
        }
        let mut raw = 0usize;
        let mut list = Vec::new();
        for (u, v) in edges {
            raw += 1;
            if u >= n || v >= n {
                return Err(Error::InvalidNetwork(format!("edge ({u}, {v}) references a vertex >= {n}")));
            }
            if u != v {
                list.push(if u < v { (u, v) } else { (v, u) });
            }
        }
        list.sort_unstable();
        list.dedup();
        let dropped = raw - list.len();

        let mut degree = alloc::vec![0usize; n];
        for &(u, v) in &list {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = alloc::vec![0usize; offsets[n]];
        for &(u, v) in &list {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for u in 0..n {
            neighbors[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Ok((SpatialNetwork { coords, edges: list, offsets, neighbors, labels: None }, dropped))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &Coords {
        &self.coords
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|u| self.degree(u) as f64).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Same graph with vertex `u` renamed to `perm[u]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: perm.len() });
        }
        let mut rows = alloc::vec![0.0; n * self.coords.dim()];
        let d = self.coords.dim();
        for u in 0..n {
            rows[perm[u] * d..(perm[u] + 1) * d].copy_from_slice(self.coords.point(u));
        }
        let coords = Coords::new(d, rows)?;
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v]));
        Ok(SpatialNetwork::from_edges(coords, edges)?.0)
    }
}

/// Core scores and kernel exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: Vec<f64>,
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(theta: Vec<f64>, epsilon: f64) -> Self {
        ModelParams { theta, epsilon }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.theta.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: self.theta.len() });
        }
        if let Some(i) = self.theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidParams(format!("theta[{i}] is not finite")));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::InvalidParams("epsilon is not finite".into()));
        }
        Ok(())
    }
}
