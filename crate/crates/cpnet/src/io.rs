//! Text formats.
//!
//! - edge list: `<id> <id>` per line
//! - coordinates: `<id> <x1> .. <xd>` per line
//! - parameters: `<label>\t<theta>` per vertex, then `epsilon\t<value>`
//!
//! Fields are separated by any whitespace, lines may end in LF or CRLF, and
//! blank lines or lines starting with `#` are skipped. Ids are dense integers
//! when the coordinate file lists exactly `0..n` (in any order); otherwise
//! every id is a string indexed in order of first appearance in the
//! coordinate file.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use cpnet_core::{Coords, ModelParams, SpatialNetwork};

use crate::{Error, Result};

/// Default jitter magnitude in coordinate units.
pub const DEFAULT_JITTER: f64 = 1e-6;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('#')).then_some((i + 1, t))
    })
}

/// Vertex ids from a coordinate file mapped to dense indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    fn build(ids: &[String], path: &Path, lines: &[usize]) -> Result<Self> {
        let n = ids.len();
        let mut numeric: Vec<Option<usize>> = ids.iter().map(|s| s.parse::<usize>().ok()).collect();
        let mut seen = vec![false; n];
        let dense = numeric.iter().all(|x| x.is_some_and(|v| v < n && !std::mem::replace(&mut seen[v], true)));
        if !dense {
            numeric.iter_mut().for_each(|x| *x = None);
        }
        let mut index = HashMap::with_capacity(n);
        let mut labels = vec![String::new(); n];
        for (k, id) in ids.iter().enumerate() {
            let slot = numeric[k].unwrap_or(k);
            if index.insert(id.clone(), slot).is_some() {
                return Err(Error::parse(path, lines[k], format!("duplicate vertex id `{id}`")));
            }
            labels[slot] = id.clone();
        }
        Ok(IdMap { labels, index })
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Parses a coordinate table.
pub fn parse_coords(text: &str, path: &Path) -> Result<(IdMap, Coords)> {
    let mut ids = Vec::new();
    let mut lines = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    for (ln, line) in data_lines(text) {
        let mut f = line.split_whitespace();
        let id = f.next().unwrap();
        let start = data.len();
        for tok in f {
            let x: f64 = tok.parse().map_err(|_| Error::parse(path, ln, format!("`{tok}` is not a number")))?;
            if !x.is_finite() {
                return Err(Error::parse(path, ln, format!("coordinate `{tok}` is not finite")));
            }
            data.push(x);
        }
        let d = data.len() - start;
        match dim {
            None if d == 0 => return Err(Error::parse(path, ln, format!("vertex `{id}` has no coordinates"))),
            None => dim = Some(d),
            Some(e) if e != d => {
                return Err(Error::parse(path, ln, format!("vertex `{id}` has {d} coordinates, earlier lines have {e}")))
            }
            _ => {}
        }
        ids.push(id.to_string());
        lines.push(ln);
    }
    let Some(dim) = dim else {
        return Err(Error::Empty { path: path.to_path_buf() });
    };
    let map = IdMap::build(&ids, path, &lines)?;
    // rows in dense index order
    let mut rows = vec![0.0; data.len()];
    for (k, id) in ids.iter().enumerate() {
        let slot = map.index[id];
        rows[slot * dim..(slot + 1) * dim].copy_from_slice(&data[k * dim..(k + 1) * dim]);
    }
    Ok((map, Coords::new(dim, rows)?))
}

/// Edge list as index pairs.
pub fn parse_edges(text: &str, path: &Path, ids: &IdMap) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (ln, line) in data_lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::parse(path, ln, format!("expected two vertex ids, found {} fields", f.len())));
        }
        let look = |id: &str| ids.get(id).ok_or_else(|| Error::parse(path, ln, format!("unknown vertex id `{id}`")));
        out.push((look(f[0])?, look(f[1])?));
    }
    if out.is_empty() {
        return Err(Error::Empty { path: path.to_path_buf() });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Noise magnitude for vertices sharing a position; `None` leaves them.
    pub jitter: Option<f64>,
    pub seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { jitter: Some(DEFAULT_JITTER), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub network: SpatialNetwork,
    pub ids: IdMap,
    /// Edge lines read.
    pub raw_edges: usize,
    /// Self-loops and repeated edges dropped.
    pub dropped_edges: usize,
    /// Vertices moved by jitter.
    pub jittered: usize,
}

pub fn load_network(edge_path: &Path, coord_path: &Path, opts: LoadOptions) -> Result<Loaded> {
    let (ids, mut coords) = parse_coords(&read_text(coord_path)?, coord_path)?;
    let edges = parse_edges(&read_text(edge_path)?, edge_path, &ids)?;
    let jittered = match opts.jitter {
        Some(m) => coords.jitter_collisions(m, &mut cpnet_core::rng::stream(opts.seed, u64::MAX)),
        None => 0,
    };
    let raw_edges = edges.len();
    let (network, dropped_edges) = SpatialNetwork::from_edges(coords, edges)?;
    let network = network.with_labels(ids.labels().to_vec())?;
    Ok(Loaded { network, ids, raw_edges, dropped_edges, jittered })
}

/// Loads positions only, for commands that need no edges.
pub fn load_coords(coord_path: &Path, opts: LoadOptions) -> Result<(IdMap, Coords, usize)> {
    let (ids, mut coords) = parse_coords(&read_text(coord_path)?, coord_path)?;
    let jittered = match opts.jitter {
        Some(m) => coords.jitter_collisions(m, &mut cpnet_core::rng::stream(opts.seed, u64::MAX)),
        None => 0,
    };
    Ok((ids, coords, jittered))
}

/// Round-trip exact text form of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_params<W: Write>(params: &ModelParams, labels: Option<&[String]>, mut w: W) -> std::io::Result<()> {
    for (u, t) in params.theta.iter().enumerate() {
        match labels {
            Some(l) => writeln!(w, "{}\t{}", l[u], fmt_f64(*t))?,
            None => writeln!(w, "{u}\t{}", fmt_f64(*t))?,
        }
    }
    writeln!(w, "epsilon\t{}", fmt_f64(params.epsilon))?;
    w.flush()
}

/// Parses a parameter file into labels and values in file order.
pub fn parse_params(text: &str, path: &Path) -> Result<(Vec<String>, ModelParams)> {
    let mut rows: Vec<(usize, String, f64)> = Vec::new();
    for (ln, line) in data_lines(text) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::parse(path, ln, format!("expected `label value`, found {} fields", f.len())));
        }
        let x: f64 = f[1].parse().map_err(|_| Error::parse(path, ln, format!("`{}` is not a number", f[1])))?;
        if !x.is_finite() {
            return Err(Error::parse(path, ln, format!("`{}` is not finite", f[1])));
        }
        rows.push((ln, f[0].to_string(), x));
    }
    let Some((ln, last, epsilon)) = rows.pop() else {
        return Err(Error::Empty { path: path.to_path_buf() });
    };
    if last != "epsilon" {
        return Err(Error::parse(path, ln, "last line must be `epsilon <value>`"));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, ln, "no core scores before the epsilon line"));
    }
    let (labels, theta) = rows.into_iter().map(|(_, l, t)| (l, t)).unzip();
    Ok((labels, ModelParams::new(theta, epsilon)))
}

pub fn read_params(path: &Path) -> Result<(Vec<String>, ModelParams)> {
    parse_params(&read_text(path)?, path)
}

/// Reorders parameters read from `path` to the vertex order of `ids`.
pub fn align_params(labels: &[String], params: ModelParams, ids: &IdMap, path: &Path) -> Result<ModelParams> {
    if labels.len() != ids.len() {
        return Err(Error::invalid(path, format!("{} core scores for {} vertices", labels.len(), ids.len())));
    }
    if labels == ids.labels() {
        return Ok(params);
    }
    let mut theta = vec![f64::NAN; ids.len()];
    for (l, t) in labels.iter().zip(&params.theta) {
        match ids.get(l) {
            Some(u) if theta[u].is_nan() => theta[u] = *t,
            Some(_) => return Err(Error::invalid(path, format!("vertex `{l}` listed twice"))),
            None => return Err(Error::invalid(path, format!("vertex `{l}` is not in the coordinate file"))),
        }
    }
    Ok(ModelParams::new(theta, params.epsilon))
}

pub fn write_edges<W: Write>(edges: &[(usize, usize)], labels: Option<&[String]>, mut w: W) -> std::io::Result<()> {
    for &(u, v) in edges {
        match labels {
            Some(l) => writeln!(w, "{}\t{}", l[u], l[v])?,
            None => writeln!(w, "{u}\t{v}")?,
        }
    }
    w.flush()
}

pub fn write_coords<W: Write>(coords: &Coords, labels: Option<&[String]>, mut w: W) -> std::io::Result<()> {
    for u in 0..coords.len() {
        match labels {
            Some(l) => write!(w, "{}", l[u])?,
            None => write!(w, "{u}")?,
        }
        for x in coords.point(u) {
            write!(w, "\t{}", fmt_f64(*x))?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Tab-separated table with a header row.
pub fn write_tsv<W: Write>(header: &[&str], rows: &[Vec<String>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", header.join("\t"))?;
    for r in rows {
        writeln!(w, "{}", r.join("\t"))?;
    }
    w.flush()
}

/// Writes to `path`, mapping failures to an error naming it.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).map_err(|e| Error::io(path, e))
}
