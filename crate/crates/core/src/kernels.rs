//! Kernel distances `K_uv`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::network::Coords;
use crate::{Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Symmetric non-negative distance between two vertices.
///
/// Implemented for [`BoundKernel`] and for any `Fn(usize, usize) -> f64`, so
/// the exact likelihood and the naive sampler accept arbitrary user kernels.
pub trait PairKernel: Sync {
    fn distance(&self, u: usize, v: usize) -> f64;
}

impl<F> PairKernel for F
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    #[inline]
    fn distance(&self, u: usize, v: usize) -> f64 {
        self(u, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Euclidean,
    GreatCircle,
    Rank,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Euclidean => "euclidean",
            KernelKind::GreatCircle => "greatcircle",
            KernelKind::Rank => "rank",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Euclidean,
    /// Haversine distance on a sphere; positions are `(lat, lon)` in degrees.
    GreatCircle { radius: f64 },
    Rank(RankTable),
}

impl Kernel {
    pub fn great_circle() -> Self {
        Kernel::GreatCircle { radius: EARTH_RADIUS_KM }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            Kernel::Euclidean => KernelKind::Euclidean,
            Kernel::GreatCircle { .. } => KernelKind::GreatCircle,
            Kernel::Rank(_) => KernelKind::Rank,
        }
    }

    /// True for kernels that are metrics on positions (tree code eligible).
    pub fn is_geometric(&self) -> bool {
        !matches!(self, Kernel::Rank(_))
    }

    /// Checks that `coords` are admissible input for this kernel.
    pub fn check(&self, coords: &Coords) -> Result<()> {
        match self {
            Kernel::Euclidean => Ok(()),
            Kernel::GreatCircle { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidConfig(format!("earth radius must be positive, got {radius}")));
                }
                if coords.dim() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, found: coords.dim() });
                }
                for i in 0..coords.len() {
                    let p = coords.point(i);
                    check_lat_lon(p[0], p[1])?;
                }
                Ok(())
            }
            Kernel::Rank(t) => {
                if t.n() != coords.len() {
                    return Err(Error::LengthMismatch { expected: coords.len(), found: t.n() });
                }
                Ok(())
            }
        }
    }

    /// Distance between two positions. `None` for the rank kernel, which is
    /// only defined on vertex pairs.
    #[inline]
    pub fn point_distance(&self, a: &[f64], b: &[f64]) -> Option<f64> {
        match self {
            Kernel::Euclidean => Some(euclidean_unchecked(a, b)),
            Kernel::GreatCircle { radius } => Some(haversine(a[0], a[1], b[0], b[1], *radius)),
            Kernel::Rank(_) => None,
        }
    }

    pub fn bind<'a>(&'a self, coords: &'a Coords) -> Result<BoundKernel<'a>> {
        self.check(coords)?;
        Ok(BoundKernel { kernel: self, coords })
    }
}

/// A kernel paired with the positions it is evaluated on.
#[derive(Debug, Clone, Copy)]
pub struct BoundKernel<'a> {
    kernel: &'a Kernel,
    coords: &'a Coords,
}

impl PairKernel for BoundKernel<'_> {
    #[inline]
    fn distance(&self, u: usize, v: usize) -> f64 {
        match self.kernel {
            Kernel::Rank(t) => t.get(u, v),
            k => k.point_distance(self.coords.point(u), self.coords.point(v)).unwrap(),
        }
    }
}

#[inline]
pub(crate) fn euclidean_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    math::sqrt(s)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    Ok(euclidean_unchecked(a, b))
}

fn check_lat_lon(lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(Error::CoordinateRange(format!("latitude {lat} outside [-90, 90]")));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(Error::CoordinateRange(format!("longitude {lon} outside [-180, 180]")));
    }
    Ok(())
}

#[inline]
fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64, radius: f64) -> f64 {
    let to_rad = PI / 180.0;
    let (p1, p2) = (lat1 * to_rad, lat2 * to_rad);
    let dp = (lat2 - lat1) * to_rad;
    let dl = (lon2 - lon1) * to_rad;
    let sp = math::sin(dp / 2.0);
    let sl = math::sin(dl / 2.0);
    let h = sp * sp + math::cos(p1) * math::cos(p2) * sl * sl;
    2.0 * radius * math::asin(math::sqrt(h.clamp(0.0, 1.0)))
}

/// Haversine distance between `(lat, lon)` points given in degrees.
pub fn great_circle(p: (f64, f64), q: (f64, f64), radius: f64) -> Result<f64> {
    check_lat_lon(p.0, p.1)?;
    check_lat_lon(q.0, q.1)?;
    Ok(haversine(p.0, p.1, q.0, q.1, radius))
}

/// Symmetric rank distance table, `n * n`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    n: usize,
    data: Vec<f64>,
}

impl RankTable {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }
}

/// Builds the symmetric rank distance: `rank_u(v)` is the 1-based position of
/// `v` when the other vertices are ordered by base distance from `u` (ties by
/// vertex index), and the table holds `(rank_u(v) + rank_v(u)) / 2`.
pub fn build_rank_table(coords: &Coords, base: &Kernel) -> Result<RankTable> {
    if !base.is_geometric() {
        return Err(Error::UnsupportedKernel("rank"));
    }
    base.check(coords)?;
    if let Some(g) = coords.collisions().first() {
        return Err(Error::CoincidentPositions(g[0], g[1]));
    }
    let n = coords.len();
    let ranks: Vec<Vec<u32>> = crate::par::map_range(n, |u| {
        let pu = coords.point(u);
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&w| w != u)
            .map(|w| (base.point_distance(pu, coords.point(w)).unwrap(), w))
            .collect();
        order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut row = alloc::vec![0u32; n];
        for (pos, &(_, w)) in order.iter().enumerate() {
            row[w] = pos as u32 + 1;
        }
        row
    });
    let mut data = alloc::vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                data[u * n + v] = 0.5 * (ranks[u][v] as f64 + ranks[v][u] as f64);
            }
        }
    }
    Ok(RankTable { n, data })
}
