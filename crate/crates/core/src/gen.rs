//! Sampling the modified Newman–Watts graph and the original NW baseline.
//!
//! Torus edges are implicit: an [`EdgeList`] stores only the random long edges,
//! and the torus is rebuilt from the model parameters on load.

use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng, STREAM_EDGE_COUNT, STREAM_PAIRS, STREAM_REFERENCE};
use crate::torus::{annulus_offsets, annulus_size, DistanceWindow, ModelParams, Torus, VertexId};

/// Pair draws per parallel chunk. Fixed so that output never depends on the
/// number of worker threads.
const PAIR_CHUNK: u64 = 1 << 14;
/// Largest eligible-pair count the exhaustive samplers will walk.
const DENSE_PAIR_CAP: u64 = 1 << 30;
const REFERENCE_PAIR_CAP: u64 = 1 << 22;

/// Parameters of the original NW ring in Durrett's setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginalNwParams {
    pub n: u32,
    pub p: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Model {
    ModifiedNw(ModelParams),
    OriginalNw(OriginalNwParams),
}

/// Long edges of one sampled graph, each stored once as `(u, v)` with `u < v`,
/// sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList {
    pub model: Model,
    pub torus_edge_count: u64,
    pub long_edges: Vec<(VertexId, VertexId)>,
    /// Shortcut stubs drawn before loops and duplicates were collapsed
    /// (original NW only).
    pub raw_stub_count: Option<u64>,
}

impl EdgeList {
    pub fn torus(&self) -> Torus {
        match self.model {
            Model::ModifiedNw(p) => p.torus(),
            Model::OriginalNw(p) => Torus { d: 1, n: p.n },
        }
    }

    pub fn params(&self) -> Option<&ModelParams> {
        match &self.model {
            Model::ModifiedNw(p) => Some(p),
            Model::OriginalNw(_) => None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.torus().vertex_count()
    }

    /// Wraps caller-supplied long edges for a modified-NW model, normalizing
    /// orientation and order and rejecting anything the sampler could not
    /// have produced.
    pub fn from_long_edges(params: ModelParams, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Result<Self> {
        params.validate()?;
        let mut long_edges: Vec<_> = edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        long_edges.sort_unstable();
        let list = EdgeList {
            model: Model::ModifiedNw(params),
            torus_edge_count: torus_edge_count(&params.torus()),
            long_edges,
            raw_stub_count: None,
        };
        list.validate()?;
        Ok(list)
    }

    pub fn validate(&self) -> Result<()> {
        let torus = self.torus();
        let window = self.params().map(|p| p.window());
        for pair in self.long_edges.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::MalformedEdges(format!(
                    "edges not strictly ascending or duplicated at {} {}",
                    pair[1].0, pair[1].1
                )));
            }
        }
        for &(u, v) in &self.long_edges {
            torus.check(u)?;
            torus.check(v)?;
            if u >= v {
                return Err(Error::MalformedEdges(format!("edge {u} {v} must satisfy u < v")));
            }
            if let Some(w) = window {
                let dist = torus.distance(u, v);
                if !w.contains(dist) {
                    return Err(Error::MalformedEdges(format!(
                        "edge {u} {v} has torus distance {dist} outside [{}, {}]",
                        w.lo, w.hi
                    )));
                }
            }
        }
        Ok(())
    }
}

fn torus_edge_count(torus: &Torus) -> u64 {
    torus.d as u64 * torus.vertex_count() as u64
}

/// Number of unordered eligible pairs `N(V_n, V_n) = n^d |Λ_n| / 2`.
pub fn eligible_pair_count(params: &ModelParams) -> u64 {
    params.vertex_count() as u64 * annulus_size(params) / 2
}

#[inline]
fn pair_key(u: u32, v: u32) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

#[inline]
fn unpack(key: u64) -> (VertexId, VertexId) {
    (VertexId((key >> 32) as u32), VertexId(key as u32))
}

/// Draws a uniformly random ordered (vertex, eligible partner) pair. Every
/// unordered eligible pair is hit with probability `2 / (n^d |Λ_n|)`.
struct PairSampler {
    torus: Torus,
    window: DistanceWindow,
    vertex_count: u32,
}

impl PairSampler {
    fn new(params: &ModelParams) -> Self {
        PairSampler {
            torus: params.torus(),
            window: params.window(),
            vertex_count: params.vertex_count() as u32,
        }
    }

    fn draw(&self, rng: &mut StreamRng, delta: &mut [i64]) -> u64 {
        let u = VertexId(rng.random_range(0..self.vertex_count));
        let (lo, hi) = (self.window.lo as i64, self.window.hi as i64);
        if delta.len() == 1 {
            let k = rng.random_range(0..2 * (hi - lo + 1));
            let mag = lo + k / 2;
            delta[0] = if k % 2 == 0 { mag } else { -mag };
        } else {
            loop {
                let mut max = 0;
                for slot in delta.iter_mut() {
                    *slot = rng.random_range(-hi..=hi);
                    max = max.max(slot.abs());
                }
                if max >= lo {
                    break;
                }
            }
        }
        let v = self.torus.translate(u, delta);
        pair_key(u.0, v.0)
    }
}

/// Samples `G_n`: draws the long-edge count `K ~ Binomial(N, p_n)` and then a
/// uniformly random `K`-subset of the eligible pairs, which matches independent
/// Bernoulli(`p_n`) edges in distribution.
pub fn generate(params: &ModelParams) -> Result<EdgeList> {
    params.validate()?;
    let total = eligible_pair_count(params);
    let p = params.p_n();
    let k = if total == 0 || p == 0.0 {
        0
    } else if p >= 1.0 {
        total
    } else {
        let mut rng = stream_rng(params.seed, STREAM_EDGE_COUNT);
        Binomial::new(total, p)
            .map_err(|e| Error::InvalidParams(format!("binomial({total}, {p}): {e}")))?
            .sample(&mut rng)
    };

    let long_edges = if k == 0 {
        Vec::new()
    } else if k > total / 2 {
        select_dense(params, total, k)?
    } else {
        draw_sparse(params, k)
    };

    Ok(EdgeList {
        model: Model::ModifiedNw(*params),
        torus_edge_count: torus_edge_count(&params.torus()),
        long_edges,
        raw_stub_count: None,
    })
}

/// Calls `f(u, v)` for each eligible pair `u < v`, in ascending order.
fn for_each_eligible_pair(params: &ModelParams, mut f: impl FnMut(VertexId, VertexId)) {
    let torus = params.torus();
    let offsets = annulus_offsets(params.d, params.window());
    let mut partners = Vec::with_capacity(offsets.len());
    for u in 0..params.vertex_count() as u32 {
        let u = VertexId(u);
        partners.clear();
        partners.extend(offsets.iter().map(|delta| torus.translate(u, delta)).filter(|&v| v > u));
        partners.sort_unstable();
        for &v in &partners {
            f(u, v);
        }
    }
}

/// Selection sampling (exactly `k` of `total`) over the canonical pair order.
fn select_dense(params: &ModelParams, total: u64, k: u64) -> Result<Vec<(VertexId, VertexId)>> {
    if total > DENSE_PAIR_CAP {
        return Err(Error::ResourceCap(format!(
            "dense long-edge selection over {total} eligible pairs (cap {DENSE_PAIR_CAP})"
        )));
    }
    let mut rng = stream_rng(params.seed, STREAM_PAIRS);
    let mut out = Vec::with_capacity(k as usize);
    let mut seen = 0u64;
    for_each_eligible_pair(params, |u, v| {
        let remaining_needed = k - out.len() as u64;
        let remaining_pool = total - seen;
        if remaining_needed > 0 && rng.random_range(0..remaining_pool) < remaining_needed {
            out.push((u, v));
        }
        seen += 1;
    });
    debug_assert_eq!(out.len() as u64, k);
    Ok(out)
}

/// Distinct uniform pair draws, split into fixed-size chunks with one stream
/// per chunk. Chunk outputs are merged in chunk order, cross-chunk duplicates
/// dropped, and the shortfall topped up from a final stream.
fn draw_sparse(params: &ModelParams, k: u64) -> Vec<(VertexId, VertexId)> {
    let sampler = PairSampler::new(params);
    let chunks = k.div_ceil(PAIR_CHUNK);
    let per_chunk: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let quota = PAIR_CHUNK.min(k - c * PAIR_CHUNK) as usize;
            let mut rng = stream_rng(params.seed, STREAM_PAIRS + c);
            let mut delta = vec![0i64; params.d as usize];
            let mut local = HashSet::with_capacity(quota);
            let mut order = Vec::with_capacity(quota);
            while order.len() < quota {
                let key = sampler.draw(&mut rng, &mut delta);
                if local.insert(key) {
                    order.push(key);
                }
            }
            order
        })
        .collect();

    let mut all: HashSet<u64> = HashSet::with_capacity(k as usize);
    let mut keys = Vec::with_capacity(k as usize);
    for key in per_chunk.into_iter().flatten() {
        if all.insert(key) {
            keys.push(key);
        }
    }
    let mut rng = stream_rng(params.seed, STREAM_PAIRS + chunks);
    let mut delta = vec![0i64; params.d as usize];
    while (keys.len() as u64) < k {
        let key = sampler.draw(&mut rng, &mut delta);
        if all.insert(key) {
            keys.push(key);
        }
    }
    keys.sort_unstable();
    keys.into_iter().map(unpack).collect()
}

/// Reference sampler: one Bernoulli(`p_n`) trial per eligible pair. Only for
/// small tori; used as the distributional oracle for [`generate`].
pub fn generate_reference(params: &ModelParams) -> Result<EdgeList> {
    params.validate()?;
    let total = eligible_pair_count(params);
    if total > REFERENCE_PAIR_CAP {
        return Err(Error::ResourceCap(format!(
            "per-pair reference sampler over {total} pairs (cap {REFERENCE_PAIR_CAP})"
        )));
    }
    let p = params.p_n();
    let mut rng = stream_rng(params.seed, STREAM_REFERENCE);
    let mut long_edges = Vec::new();
    for_each_eligible_pair(params, |u, v| {
        if rng.random::<f64>() < p {
            long_edges.push((u, v));
        }
    });
    Ok(EdgeList {
        model: Model::ModifiedNw(*params),
        torus_edge_count: torus_edge_count(&params.torus()),
        long_edges,
        raw_stub_count: None,
    })
}

/// Original NW ring: each site `x` emits `ξ_x ~ Poisson(p)` shortcut stubs whose
/// far ends are uniform on the ring. Loops and repeated shortcuts are collapsed;
/// the raw stub total is kept in [`EdgeList::raw_stub_count`].
pub fn generate_original_nw(n: u32, p: f64, seed: u64) -> Result<EdgeList> {
    let torus = Torus::new(1, n)?;
    if !p.is_finite() || p < 0.0 {
        return Err(Error::InvalidParams(format!("shortcut mean p must be finite and >= 0, got {p}")));
    }
    let mut rng = stream_rng(seed, STREAM_PAIRS);
    let poisson = if p > 0.0 {
        Some(Poisson::new(p).map_err(|e| Error::InvalidParams(format!("poisson({p}): {e}")))?)
    } else {
        None
    };
    let mut raw = 0u64;
    let mut set = BTreeSet::new();
    for x in 0..n {
        let stubs = poisson.as_ref().map_or(0, |d| d.sample(&mut rng) as u64);
        for _ in 0..stubs {
            raw += 1;
            let y = rng.random_range(0..n);
            if y != x {
                set.insert(pair_key(x, y));
            }
        }
    }
    Ok(EdgeList {
        model: Model::OriginalNw(OriginalNwParams { n, p, seed }),
        torus_edge_count: torus_edge_count(&torus),
        long_edges: set.into_iter().map(unpack).collect(),
        raw_stub_count: Some(raw),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: u32, n: u32, sigma: f64, zeta: f64, seed: u64) -> ModelParams {
        ModelParams::new(d, n, 0.1, 0.4, sigma, zeta, seed).unwrap()
    }

    fn brute_pair_count(params: &ModelParams) -> u64 {
        let t = params.torus();
        let w = params.window();
        let count = t.vertex_count() as u32;
        let mut total = 0;
        for u in 0..count {
            for v in (u + 1)..count {
                if w.contains(t.distance(VertexId(u), VertexId(v))) {
                    total += 1;
                }
            }
        }
        total
    }

    #[test]
    fn eligible_pair_count_examples() {
        let a = p(1, 100, 0.0, 0.0, 0);
        assert_eq!(eligible_pair_count(&a), 3100);
        assert_eq!(brute_pair_count(&a), 3100);
        let b = p(2, 10, 0.0, 0.0, 0);
        assert_eq!(eligible_pair_count(&b), 4000);
        assert_eq!(brute_pair_count(&b), 4000);
        let empty = ModelParams::new(1, 3, 0.4, 0.45, 0.0, 0.0, 0).unwrap();
        assert_eq!(eligible_pair_count(&empty), 0);
    }

    #[test]
    fn sigma_zero_is_pure_torus() {
        let e = generate(&p(2, 20, 0.0, 0.0, 3)).unwrap();
        assert!(e.long_edges.is_empty());
        assert_eq!(e.torus_edge_count, 2 * 400);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&p(1, 500, 2.0, 1.0, 11)).unwrap();
        let b = generate(&p(1, 500, 2.0, 1.0, 11)).unwrap();
        let c = generate(&p(1, 500, 2.0, 1.0, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.long_edges, c.long_edges);
        a.validate().unwrap();
    }

    #[test]
    fn generation_is_thread_count_invariant() {
        // large enough that several pair chunks are drawn
        let params = ModelParams::new(2, 300, 0.1, 0.4, 40.0, 0.0, 5).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| generate(&params)).unwrap();
        let b = many.install(|| generate(&params)).unwrap();
        assert!(a.long_edges.len() as u64 > 2 * PAIR_CHUNK);
        assert_eq!(a, b);
    }

    #[test]
    fn mean_long_edge_count_matches() {
        // d=1, n=100, p_n = 0.01: E|long| = 3100 * 0.01 = 31
        let trials = 10_000u64;
        let mut sum = 0.0;
        for seed in 0..trials {
            sum += generate(&p(1, 100, 1.0, 0.0, seed)).unwrap().long_edges.len() as f64;
        }
        let mean = sum / trials as f64;
        let se = (3100.0 * 0.01 * 0.99 / trials as f64).sqrt();
        assert!((mean - 31.0).abs() <= 3.0 * se, "mean {mean}");
    }

    #[test]
    fn dense_regime_selects_every_pair_when_p_is_one() {
        // p_n = sigma / n = 1
        let params = ModelParams::new(1, 20, 0.2, 0.4, 20.0, 0.0, 1).unwrap();
        let e = generate(&params).unwrap();
        assert_eq!(e.long_edges.len() as u64, eligible_pair_count(&params));
        e.validate().unwrap();
        // p_n = 0.75 goes through selection sampling
        let params = ModelParams::new(1, 20, 0.2, 0.4, 15.0, 0.0, 1).unwrap();
        let e = generate(&params).unwrap();
        e.validate().unwrap();
    }

    #[test]
    fn reference_sampler_respects_window() {
        let params = ModelParams::new(1, 16, 0.1, 0.4, 4.0, 0.0, 9).unwrap();
        let e = generate_reference(&params).unwrap();
        e.validate().unwrap();
        assert!(!e.long_edges.is_empty());
        assert!(generate_reference(&ModelParams::new(2, 400, 0.1, 0.4, 1.0, 0.0, 0).unwrap()).is_err());
    }

    #[test]
    fn from_long_edges_rejects_bad_input() {
        let params = p(1, 100, 1.0, 0.0, 0);
        assert!(EdgeList::from_long_edges(params, [(VertexId(0), VertexId(1))]).is_err());
        assert!(EdgeList::from_long_edges(params, [(VertexId(0), VertexId(30)), (VertexId(30), VertexId(0))]).is_err());
        let ok = EdgeList::from_long_edges(params, [(VertexId(30), VertexId(0))]).unwrap();
        assert_eq!(ok.long_edges, vec![(VertexId(0), VertexId(30))]);
    }

    #[test]
    fn original_nw_examples() {
        let ring = generate_original_nw(50, 0.0, 1).unwrap();
        assert!(ring.long_edges.is_empty());
        assert_eq!(ring.raw_stub_count, Some(0));
        assert_eq!(generate_original_nw(1000, 0.5, 4).unwrap(), generate_original_nw(1000, 0.5, 4).unwrap());
        assert!(generate_original_nw(2, 0.5, 0).is_err());
        assert!(generate_original_nw(10, -0.5, 0).is_err());

        let trials = 2000u64;
        let total: u64 = (0..trials)
            .map(|s| generate_original_nw(1000, 0.5, s).unwrap().raw_stub_count.unwrap())
            .sum();
        let mean = total as f64 / trials as f64;
        // sum of 1000 Poisson(0.5): variance 500
        let se = (500.0 / trials as f64).sqrt();
        assert!((mean - 500.0).abs() <= 3.0 * se, "mean {mean}");
    }
}
