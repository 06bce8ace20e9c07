//! Adjacency structure, subset statistics, BFS and diameter.

use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::EdgeList;
use crate::rng::{stream_rng, STREAM_SAMPLING};
use crate::torus::{ModelParams, Torus, VertexId};

/// Graphs at or below this size fall back to bit-parallel all-sources BFS when
/// iFUB does not settle quickly.
pub const ALL_SOURCES_MAX_VERTICES: usize = 1 << 15;

const UNREACHED: u32 = u32::MAX;

/// Simple undirected connected graph in compressed neighbour-list form.
///
/// For torus graphs each list holds the `2d` torus neighbours (ascending)
/// followed by the long-edge neighbours (ascending). A long edge that joins
/// two torus neighbours is absorbed into the torus edge, keeping the graph
/// simple.
#[derive(Clone, Debug)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    torus_split: Vec<u32>,
    edge_count: u64,
    torus: Option<Torus>,
    params: Option<ModelParams>,
}

impl Graph {
    /// Torus edges plus the long edges of `edges`.
    pub fn build(edges: &EdgeList) -> Result<Graph> {
        edges.validate()?;
        let torus = edges.torus();
        let count = torus.vertex_count();
        let torus_nbrs: Vec<Vec<u32>> = (0..count as u32)
            .into_par_iter()
            .map(|u| torus.neighbors(VertexId(u)).into_iter().map(|v| v.0).collect())
            .collect();

        let mut long: Vec<Vec<u32>> = vec![Vec::new(); count];
        for &(u, v) in &edges.long_edges {
            if torus_nbrs[u.index()].binary_search(&v.0).is_ok() {
                continue;
            }
            long[u.index()].push(v.0);
            long[v.index()].push(u.0);
        }

        let mut offsets = Vec::with_capacity(count + 1);
        let mut neighbors = Vec::new();
        let mut torus_split = Vec::with_capacity(count);
        offsets.push(0);
        for (t, mut l) in torus_nbrs.into_iter().zip(long) {
            l.sort_unstable();
            torus_split.push(t.len() as u32);
            neighbors.extend_from_slice(&t);
            neighbors.extend_from_slice(&l);
            offsets.push(neighbors.len());
        }
        let g = Graph {
            edge_count: neighbors.len() as u64 / 2,
            offsets,
            neighbors,
            torus_split,
            torus: Some(torus),
            params: edges.params().copied(),
        };
        Ok(g)
    }

    /// Arbitrary simple graph; duplicate edges are merged. Every edge counts as
    /// a long edge since there is no torus.
    pub fn from_edges(vertex_count: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        if vertex_count < 2 || vertex_count > u32::MAX as usize {
            return Err(Error::InvalidParams(format!(
                "graph needs between 2 and {} vertices, got {vertex_count}",
                u32::MAX
            )));
        }
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); vertex_count];
        for &(u, v) in edges {
            if u as usize >= vertex_count || v as usize >= vertex_count {
                return Err(Error::VertexOutOfRange {
                    index: u.max(v) as u64,
                    vertex_count: vertex_count as u64,
                });
            }
            if u == v {
                return Err(Error::MalformedEdges(format!("self-loop at {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut list in adj {
            list.sort_unstable();
            list.dedup();
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        let g = Graph {
            edge_count: neighbors.len() as u64 / 2,
            offsets,
            neighbors,
            torus_split: vec![0; vertex_count],
            torus: None,
            params: None,
        };
        if g.bfs_ecc(0).1 != vertex_count {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.torus_split.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    /// `2|E|`, the normalizer of the stationary distribution.
    pub fn total_degree(&self) -> u64 {
        self.neighbors.len() as u64
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn torus_neighbors(&self, u: usize) -> &[u32] {
        let start = self.offsets[u];
        &self.neighbors[start..start + self.torus_split[u] as usize]
    }

    pub fn long_neighbors(&self, u: usize) -> &[u32] {
        let start = self.offsets[u] + self.torus_split[u] as usize;
        &self.neighbors[start..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> u32 {
        (self.offsets[u + 1] - self.offsets[u]) as u32
    }

    pub fn long_degree(&self, u: usize) -> u32 {
        self.degree(u) - self.torus_split[u]
    }

    pub fn long_edge_count(&self) -> u64 {
        (0..self.vertex_count()).map(|u| self.long_degree(u) as u64).sum::<u64>() / 2
    }

    pub fn torus(&self) -> Option<Torus> {
        self.torus
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    pub fn min_degree(&self) -> u32 {
        (0..self.vertex_count()).map(|u| self.degree(u)).min().unwrap_or(0)
    }

    /// All edges as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.vertex_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    pub fn check(&self, v: VertexId) -> Result<()> {
        if v.index() < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                index: v.0 as u64,
                vertex_count: self.vertex_count() as u64,
            })
        }
    }

    /// BFS from `source`; returns (eccentricity, vertices reached, farthest
    /// vertex with smallest index).
    fn bfs_ecc(&self, source: usize) -> (u32, usize, usize) {
        let mut dist = vec![UNREACHED; self.vertex_count()];
        let mut queue = Vec::with_capacity(self.vertex_count());
        self.bfs_into(source, &mut dist, &mut queue)
    }

    fn bfs_into(&self, source: usize, dist: &mut [u32], queue: &mut Vec<u32>) -> (u32, usize, usize) {
        dist.fill(UNREACHED);
        queue.clear();
        dist[source] = 0;
        queue.push(source as u32);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head] as usize;
            head += 1;
            let du = dist[u] + 1;
            for &v in self.neighbors(u) {
                if dist[v as usize] == UNREACHED {
                    dist[v as usize] = du;
                    queue.push(v);
                }
            }
        }
        let ecc = dist[*queue.last().unwrap() as usize];
        let farthest = queue
            .iter()
            .filter(|&&v| dist[v as usize] == ecc)
            .min()
            .copied()
            .unwrap() as usize;
        (ecc, queue.len(), farthest)
    }
}

/// `Δ(G)`.
pub fn max_degree(g: &Graph) -> u32 {
    (0..g.vertex_count()).map(|u| g.degree(u)).max().unwrap_or(0)
}

/// Boundary statistics of a vertex subset `S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutStats {
    pub subset_size: u64,
    pub volume: u64,
    pub edge_cut: u64,
    pub long_cut: u64,
    pub stationary_mass: f64,
}

fn cut_stats_with(g: &Graph, members: impl Iterator<Item = usize> + Clone, inside: impl Fn(usize) -> bool) -> CutStats {
    let mut size = 0;
    let mut volume = 0;
    let mut edge_cut = 0;
    let mut long_cut = 0;
    for u in members {
        size += 1;
        volume += g.degree(u) as u64;
        edge_cut += g.torus_neighbors(u).iter().filter(|&&v| !inside(v as usize)).count() as u64;
        let crossing_long = g.long_neighbors(u).iter().filter(|&&v| !inside(v as usize)).count() as u64;
        edge_cut += crossing_long;
        long_cut += crossing_long;
    }
    CutStats {
        subset_size: size,
        volume,
        edge_cut,
        long_cut,
        stationary_mass: volume as f64 / g.total_degree() as f64,
    }
}

/// `|S|`, `Vol(S)`, `𝔈(S, S^c)`, `𝔏(S, S^c)` and `π(S)` for a nonempty proper subset.
pub fn cut_stats(g: &Graph, subset: &[VertexId]) -> Result<CutStats> {
    let count = g.vertex_count();
    let mut inside = vec![false; count];
    for &v in subset {
        g.check(v)?;
        if std::mem::replace(&mut inside[v.index()], true) {
            return Err(Error::InvalidParams(format!("vertex {v} repeated in subset")));
        }
    }
    if subset.is_empty() || subset.len() == count {
        return Err(Error::InvalidParams("subset must be nonempty and proper".into()));
    }
    Ok(cut_stats_with(g, subset.iter().map(|v| v.index()), |v| inside[v]))
}

/// [`cut_stats`] for graphs with at most 64 vertices, `S` given as a bitmask.
pub fn cut_stats_mask(g: &Graph, mask: u64) -> Result<CutStats> {
    let count = g.vertex_count();
    if count > 64 {
        return Err(Error::ResourceCap(format!("bitmask subsets need <= 64 vertices, got {count}")));
    }
    let full = if count == 64 { u64::MAX } else { (1u64 << count) - 1 };
    if mask == 0 || mask & full == full || mask & !full != 0 {
        return Err(Error::InvalidParams("subset must be nonempty and proper".into()));
    }
    let members = (0..count).filter(move |&u| mask >> u & 1 == 1);
    Ok(cut_stats_with(g, members, |v| mask >> v & 1 == 1))
}

/// Hop distances from `source` to every vertex.
pub fn bfs_distances(g: &Graph, source: VertexId) -> Result<Vec<u32>> {
    g.check(source)?;
    let mut dist = vec![UNREACHED; g.vertex_count()];
    let mut queue = Vec::with_capacity(g.vertex_count());
    g.bfs_into(source.index(), &mut dist, &mut queue);
    Ok(dist)
}

pub fn eccentricity(g: &Graph, v: VertexId) -> Result<u32> {
    g.check(v)?;
    Ok(g.bfs_ecc(v.index()).0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DiameterMode {
    Exact,
    /// Maximum eccentricity over `sources` random vertices: a lower bound.
    Sampled { sources: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diameter {
    pub value: u32,
    /// False whenever the value came from sampled sources.
    pub exact: bool,
    pub bfs_runs: u64,
}

pub fn diameter(g: &Graph, mode: DiameterMode) -> Diameter {
    match mode {
        DiameterMode::Exact => diameter_exact(g),
        DiameterMode::Sampled { sources, seed } => {
            let picked = sample_vertices(g.vertex_count(), sources, seed);
            let value = picked
                .par_iter()
                .map(|&v| g.bfs_ecc(v as usize).0)
                .max()
                .unwrap_or(0);
            Diameter {
                value,
                exact: false,
                bfs_runs: picked.len() as u64,
            }
        }
    }
}

/// `k` distinct vertices drawn without replacement, ascending.
pub(crate) fn sample_vertices(count: usize, k: usize, seed: u64) -> Vec<u32> {
    let k = k.min(count);
    let mut rng = stream_rng(seed, STREAM_SAMPLING);
    let mut picked: Vec<u32> = sample(&mut rng, count, k).into_iter().map(|v| v as u32).collect();
    picked.sort_unstable();
    picked
}

/// [`DiameterMode::Sampled`] source set for `count` vertices.
pub fn sample_sources(count: usize, k: usize, seed: u64) -> Vec<VertexId> {
    sample_vertices(count, k, seed).into_iter().map(VertexId).collect()
}

fn diameter_exact(g: &Graph) -> Diameter {
    let count = g.vertex_count();
    if count <= ALL_SOURCES_MAX_VERTICES {
        let budget = 64.max(count as u64 / 16);
        if let Some((value, runs)) = diameter_ifub(g, Some(budget)) {
            return Diameter {
                value,
                exact: true,
                bfs_runs: runs,
            };
        }
        let ecc = all_eccentricities(g);
        return Diameter {
            value: ecc.into_iter().max().unwrap_or(0),
            exact: true,
            bfs_runs: count as u64,
        };
    }
    let (value, runs) = diameter_ifub(g, None).expect("unbounded iFUB always finishes");
    Diameter {
        value,
        exact: true,
        bfs_runs: runs,
    }
}

/// Endpoint of a double sweep from the maximum-degree vertex: a vertex of
/// (near) maximal eccentricity.
pub fn double_sweep_endpoint(g: &Graph) -> VertexId {
    let start = (0..g.vertex_count()).max_by_key(|&u| (g.degree(u), std::cmp::Reverse(u))).unwrap_or(0);
    let (_, _, a) = g.bfs_ecc(start);
    VertexId(a as u32)
}

/// Exact diameter by iFUB: a double sweep gives a lower bound and a central
/// vertex `u`; fringe levels of the BFS tree from `u` are then swept from the
/// outside in until the certified upper bound `2(i - 1)` drops to the lower
/// bound. Returns `None` if more than `budget` BFS runs would be needed.
pub fn diameter_ifub(g: &Graph, budget: Option<u64>) -> Option<(u32, u64)> {
    let count = g.vertex_count();
    let mut dist = vec![UNREACHED; count];
    let mut queue = Vec::with_capacity(count);
    let mut runs = 0u64;

    let start = (0..count).max_by_key(|&u| (g.degree(u), std::cmp::Reverse(u))).unwrap_or(0);
    let (_, _, a) = g.bfs_into(start, &mut dist, &mut queue);
    let (ecc_a, _, b) = g.bfs_into(a, &mut dist, &mut queue);
    let dist_a = dist.clone();
    let (ecc_b, _, _) = g.bfs_into(b, &mut dist, &mut queue);
    runs += 3;
    let mut lower = ecc_a.max(ecc_b);

    // midpoint of the a-b geodesic
    let half = ecc_a / 2;
    let center = (0..count)
        .find(|&v| dist_a[v] == half && dist_a[v] + dist[v] == ecc_a)
        .unwrap_or(a);
    let (ecc_c, _, _) = g.bfs_into(center, &mut dist, &mut queue);
    runs += 1;
    lower = lower.max(ecc_c);

    let mut levels: Vec<Vec<u32>> = vec![Vec::new(); ecc_c as usize + 1];
    for (v, &d) in dist.iter().enumerate() {
        levels[d as usize].push(v as u32);
    }

    let mut level = ecc_c;
    let mut upper = 2 * ecc_c;
    while upper > lower && level > 0 {
        let fringe = &levels[level as usize];
        if let Some(cap) = budget {
            if runs + fringe.len() as u64 > cap {
                return None;
            }
        }
        let fringe_ecc = fringe.par_iter().map(|&v| g.bfs_ecc(v as usize).0).max().unwrap_or(0);
        runs += fringe.len() as u64;
        lower = lower.max(fringe_ecc);
        if lower > 2 * (level - 1) {
            return Some((lower, runs));
        }
        upper = 2 * (level - 1);
        level -= 1;
    }
    Some((lower, runs))
}

struct BatchSweep {
    ecc: Vec<(u32, u32)>,
    histogram: Vec<u64>,
}

/// Bit-parallel BFS from up to 64 sources at once.
fn sweep_batch(g: &Graph, sources: &[u32]) -> BatchSweep {
    debug_assert!(sources.len() <= 64);
    let count = g.vertex_count();
    let full = if sources.len() == 64 {
        u64::MAX
    } else {
        (1u64 << sources.len()) - 1
    };
    let mut visited = vec![0u64; count];
    let mut frontier = vec![0u64; count];
    let mut next = vec![0u64; count];
    for (k, &s) in sources.iter().enumerate() {
        visited[s as usize] |= 1 << k;
        frontier[s as usize] |= 1 << k;
    }
    let mut ecc = vec![0u32; sources.len()];
    let mut histogram = vec![sources.len() as u64];
    let mut level = 0u32;
    loop {
        let mut any = 0u64;
        let mut reached = 0u64;
        for v in 0..count {
            let seen = visited[v];
            if seen == full {
                next[v] = 0;
                continue;
            }
            let mut acc = 0u64;
            for &w in g.neighbors(v) {
                acc |= frontier[w as usize];
            }
            acc &= !seen;
            next[v] = acc;
            any |= acc;
            reached += acc.count_ones() as u64;
        }
        if any == 0 {
            break;
        }
        level += 1;
        histogram.push(reached);
        let mut bits = any;
        while bits != 0 {
            ecc[bits.trailing_zeros() as usize] = level;
            bits &= bits - 1;
        }
        for v in 0..count {
            visited[v] |= next[v];
        }
        std::mem::swap(&mut frontier, &mut next);
    }
    BatchSweep {
        ecc: sources.iter().copied().zip(ecc).collect(),
        histogram,
    }
}

fn sweep_sources(g: &Graph, sources: &[u32]) -> Vec<BatchSweep> {
    sources.par_chunks(64).map(|batch| sweep_batch(g, batch)).collect()
}

/// Eccentricity of every vertex (all-sources BFS, 64 sources per pass).
pub fn all_eccentricities(g: &Graph) -> Vec<u32> {
    let sources: Vec<u32> = (0..g.vertex_count() as u32).collect();
    let mut ecc = vec![0; g.vertex_count()];
    for batch in sweep_sources(g, &sources) {
        for (v, e) in batch.ecc {
            ecc[v as usize] = e;
        }
    }
    ecc
}

/// Counts of ordered pairs `(s, v)`, `s` in `sources`, by hop distance.
pub fn distance_histogram(g: &Graph, sources: &[VertexId]) -> Result<Vec<u64>> {
    for &s in sources {
        g.check(s)?;
    }
    let raw: Vec<u32> = sources.iter().map(|v| v.0).collect();
    let mut hist: Vec<u64> = Vec::new();
    for batch in sweep_sources(g, &raw) {
        if hist.len() < batch.histogram.len() {
            hist.resize(batch.histogram.len(), 0);
        }
        for (slot, c) in hist.iter_mut().zip(batch.histogram) {
            *slot += c;
        }
    }
    Ok(hist)
}

/// `distance,count` CSV.
pub fn write_histogram_csv<W: Write>(hist: &[u64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "distance,count")?;
    for (d, c) in hist.iter().enumerate() {
        writeln!(out, "{d},{c}")?;
    }
    out.flush()
}
