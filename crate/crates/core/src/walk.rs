//! The lazy random walk: `P(u,u) = 1/2`, `P(u,v) = 1/(2 d(u))` for `u ~ v`.
//!
//! Covers distribution evolution, total-variation distance, measured mixing
//! time, and the spectral gap `1 - λ₁` by deflated power iteration.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{double_sweep_endpoint, sample_vertices, Graph};
use crate::rng::{stream_rng, STREAM_POWER};
use crate::torus::VertexId;

/// Worst-start TV threshold defining `T_mix`.
pub const MIXING_THRESHOLD: f64 = 1.0 / std::f64::consts::E;
/// Steps between renormalizations of an evolving distribution.
pub const RENORMALIZE_EVERY: u64 = 1024;
/// Vertex count above which a single kernel step is split across threads.
const PARALLEL_STEP_MIN: usize = 1 << 14;

/// Probability vector over vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionVector(Vec<f64>);

impl DistributionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParams("distribution over zero vertices".into()));
        }
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParams("distribution entries must be finite and >= 0".into()));
        }
        let sum = neumaier_sum(&values);
        let tol = 1e-12f64.max(values.len() as f64 * 4.0 * f64::EPSILON);
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidParams(format!("distribution sums to {sum}, not 1")));
        }
        Ok(DistributionVector(values))
    }

    pub fn point_mass(len: usize, at: VertexId) -> Self {
        let mut values = vec![0.0; len];
        values[at.index()] = 1.0;
        DistributionVector(values)
    }

    pub fn uniform(len: usize) -> Self {
        DistributionVector(vec![1.0 / len as f64; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `π(u) = d(u) / D` with `D = Σ d(v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    pub total_degree: u64,
}

impl StationaryDistribution {
    pub fn of(g: &Graph) -> Self {
        let total = g.total_degree();
        let pi = (0..g.vertex_count()).map(|u| g.degree(u) as f64 / total as f64).collect();
        StationaryDistribution {
            pi,
            total_degree: total,
        }
    }

    pub fn min(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn to_distribution(&self) -> DistributionVector {
        DistributionVector(self.pi.clone())
    }
}

/// Precomputed `1 / (2 d(u))`.
struct Kernel<'g> {
    g: &'g Graph,
    half_inv_degree: Vec<f64>,
}

impl<'g> Kernel<'g> {
    fn new(g: &'g Graph) -> Self {
        let half_inv_degree = (0..g.vertex_count()).map(|u| 0.5 / g.degree(u) as f64).collect();
        Kernel { g, half_inv_degree }
    }

    /// `out(v) = μ(v)/2 + Σ_{u~v} μ(u) / (2 d(u))`. `scratch` receives the
    /// per-vertex outflow. Each entry is summed in a fixed order, so the
    /// result does not depend on thread count.
    fn step(&self, mu: &[f64], out: &mut [f64], scratch: &mut [f64], parallel: bool) {
        let g = self.g;
        let cell = |v: usize, scratch: &[f64]| {
            let mut acc = 0.5 * mu[v];
            for &u in g.neighbors(v) {
                acc += scratch[u as usize];
            }
            acc
        };
        if parallel {
            scratch
                .par_iter_mut()
                .zip(mu.par_iter().zip(self.half_inv_degree.par_iter()))
                .for_each(|(s, (m, h))| *s = m * h);
            let scratch: &[f64] = scratch;
            out.par_iter_mut().enumerate().for_each(|(v, o)| *o = cell(v, scratch));
        } else {
            for ((s, m), h) in scratch.iter_mut().zip(mu).zip(&self.half_inv_degree) {
                *s = m * h;
            }
            for (v, o) in out.iter_mut().enumerate() {
                *o = cell(v, scratch);
            }
        }
    }
}

/// A single distribution being pushed through the kernel.
struct Evolution<'k, 'g> {
    kernel: &'k Kernel<'g>,
    current: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
    t: u64,
    parallel: bool,
}

impl<'k, 'g> Evolution<'k, 'g> {
    fn new(kernel: &'k Kernel<'g>, start: Vec<f64>, parallel: bool) -> Self {
        let len = start.len();
        Evolution {
            kernel,
            current: start,
            next: vec![0.0; len],
            scratch: vec![0.0; len],
            t: 0,
            parallel,
        }
    }

    fn advance(&mut self) {
        self.kernel
            .step(&self.current, &mut self.next, &mut self.scratch, self.parallel);
        std::mem::swap(&mut self.current, &mut self.next);
        self.t += 1;
        if self.t % RENORMALIZE_EVERY == 0 {
            let sum = neumaier_sum(&self.current);
            log::debug!("t={} mass drift {:e}", self.t, sum - 1.0);
            for x in &mut self.current {
                *x /= sum;
            }
        }
    }

    fn advance_to(&mut self, t: u64) {
        while self.t < t {
            self.advance();
        }
    }
}

/// One step of the lazy walk applied to `mu`.
pub fn kernel_step(g: &Graph, mu: &DistributionVector) -> Result<DistributionVector> {
    if mu.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            actual: mu.len(),
        });
    }
    let kernel = Kernel::new(g);
    let mut out = vec![0.0; mu.len()];
    let mut scratch = vec![0.0; mu.len()];
    kernel.step(mu.as_slice(), &mut out, &mut scratch, mu.len() >= PARALLEL_STEP_MIN);
    Ok(DistributionVector(out))
}

/// `½ Σ |μ(v) - ν(v)|`.
pub fn tv_distance(mu: &DistributionVector, nu: &DistributionVector) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            actual: nu.len(),
        });
    }
    Ok(tv_slices(mu.as_slice(), nu.as_slice()))
}

fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `‖P^t(start, ·) - π‖_TV` for `t = 0..=t_max`.
pub fn tv_curve(g: &Graph, start: VertexId, t_max: u64) -> Result<Vec<f64>> {
    g.check(start)?;
    let pi = StationaryDistribution::of(g).pi;
    let kernel = Kernel::new(g);
    let start = DistributionVector::point_mass(g.vertex_count(), start).into_inner();
    let mut evo = Evolution::new(&kernel, start, g.vertex_count() >= PARALLEL_STEP_MIN);
    let mut curve = Vec::with_capacity(t_max as usize + 1);
    curve.push(tv_slices(&evo.current, &pi));
    for _ in 0..t_max {
        evo.advance();
        curve.push(tv_slices(&evo.current, &pi));
    }
    Ok(curve)
}

/// `t,tv` CSV.
pub fn write_tv_curve_csv<W: Write>(curve: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,tv")?;
    for (t, tv) in curve.iter().enumerate() {
        writeln!(out, "{t},{tv}")?;
    }
    out.flush()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Starts {
    All,
    /// `k` random starts plus the far endpoint of a double sweep.
    Sample { k: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    /// Give up once `t` would exceed this.
    pub max_steps: u64,
    /// `Starts::All` is refused above this many vertices.
    pub all_starts_max_vertices: usize,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            max_steps: 1 << 24,
            all_starts_max_vertices: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "vertices")]
pub enum StartsEvaluated {
    All,
    Sampled(Vec<VertexId>),
}

/// Measured mixing time. With sampled starts `t_mix` is only a lower bound on
/// the true `T_mix` and `exact` is false.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingResult {
    pub t_mix: u64,
    pub exact: bool,
    pub starts_evaluated: StartsEvaluated,
    pub worst_start: VertexId,
    /// Worst-start TV at `t_mix` (below `1/e`).
    pub tv_at_t_mix: f64,
    /// Worst-start TV at `t_mix - 1` (at least `1/e`).
    pub tv_before_t_mix: f64,
}

fn resolve_starts(g: &Graph, starts: &Starts, opts: &MixingOptions) -> Result<(Vec<u32>, StartsEvaluated)> {
    match starts {
        Starts::All => {
            if g.vertex_count() > opts.all_starts_max_vertices {
                return Err(Error::ResourceCap(format!(
                    "all-starts mixing time on {} vertices (cap {})",
                    g.vertex_count(),
                    opts.all_starts_max_vertices
                )));
            }
            Ok(((0..g.vertex_count() as u32).collect(), StartsEvaluated::All))
        }
        Starts::Sample { k, seed } => {
            let mut picked = sample_vertices(g.vertex_count(), *k, *seed);
            picked.push(double_sweep_endpoint(g).0);
            picked.sort_unstable();
            picked.dedup();
            let listed = picked.iter().map(|&v| VertexId(v)).collect();
            Ok((picked, StartsEvaluated::Sampled(listed)))
        }
    }
}

/// Largest TV at time `t` over `starts`, with the smallest start index among ties.
fn worst_tv_at(kernel: &Kernel, pi: &[f64], starts: &[u32], t: u64) -> (f64, u32) {
    let count = pi.len();
    starts
        .par_iter()
        .map(|&s| {
            let mut evo = Evolution::new(kernel, DistributionVector::point_mass(count, VertexId(s)).into_inner(), false);
            evo.advance_to(t);
            (tv_slices(&evo.current, pi), s)
        })
        .reduce(|| (f64::NEG_INFINITY, u32::MAX), |a, b| {
            if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                a
            } else {
                b
            }
        })
}

/// `T_mix = min{t : max_u ‖P^t(u,·) - π‖_TV < 1/e}`.
///
/// Doubles `t` until the worst-start TV falls below `1/e`, then binary
/// searches the last doubling interval. Relies on the worst-start TV being
/// non-increasing in `t`.
pub fn mixing_time(g: &Graph, starts: &Starts, opts: &MixingOptions) -> Result<MixingResult> {
    let (start_list, evaluated) = resolve_starts(g, starts, opts)?;
    let pi = StationaryDistribution::of(g).pi;
    let kernel = Kernel::new(g);
    let mut cache: BTreeMap<u64, (f64, u32)> = BTreeMap::new();
    let mut worst = |t: u64| *cache.entry(t).or_insert_with(|| worst_tv_at(&kernel, &pi, &start_list, t));

    let mut lo = 0u64;
    let mut hi = 1u64;
    while worst(hi).0 >= MIXING_THRESHOLD {
        lo = hi;
        hi *= 2;
        if hi > opts.max_steps {
            return Err(Error::NoConvergence {
                what: "walk steps",
                cap: opts.max_steps,
            });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if worst(mid).0 < MIXING_THRESHOLD {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (tv_at, _) = worst(hi);
    let (tv_before, worst_start) = worst(hi - 1);
    Ok(MixingResult {
        t_mix: hi,
        exact: matches!(evaluated, StartsEvaluated::All),
        starts_evaluated: evaluated,
        worst_start: VertexId(worst_start),
        tv_at_t_mix: tv_at,
        tv_before_t_mix: tv_before,
    })
}

/// Worst-start TV for `t = 0..=t_max`, all starts evolved in lockstep.
pub fn worst_tv_curve(g: &Graph, starts: &Starts, t_max: u64, opts: &MixingOptions) -> Result<Vec<f64>> {
    let (start_list, _) = resolve_starts(g, starts, opts)?;
    let pi = StationaryDistribution::of(g).pi;
    let kernel = Kernel::new(g);
    let count = g.vertex_count();
    let per_start: Vec<Vec<f64>> = start_list
        .par_iter()
        .map(|&s| {
            let mut evo = Evolution::new(&kernel, DistributionVector::point_mass(count, VertexId(s)).into_inner(), false);
            let mut curve = vec![tv_slices(&evo.current, &pi)];
            for _ in 0..t_max {
                evo.advance();
                curve.push(tv_slices(&evo.current, &pi));
            }
            curve
        })
        .collect();
    Ok((0..=t_max as usize)
        .map(|t| per_start.iter().map(|c| c[t]).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Linear scan for `T_mix`: the first `t` whose worst-start TV is below `1/e`.
pub fn mixing_time_linear(g: &Graph, starts: &Starts, opts: &MixingOptions) -> Result<u64> {
    let mut horizon = 16u64;
    loop {
        let curve = worst_tv_curve(g, starts, horizon, opts)?;
        if let Some(t) = curve.iter().position(|&tv| tv < MIXING_THRESHOLD) {
            return Ok(t as u64);
        }
        horizon *= 2;
        if horizon > opts.max_steps {
            return Err(Error::NoConvergence {
                what: "walk steps",
                cap: opts.max_steps,
            });
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOptions {
    /// Target relative error on the gap.
    pub tol: f64,
    pub max_iterations: u64,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            tol: 1e-9,
            max_iterations: 200_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    pub gap: f64,
    pub lambda1: f64,
    pub iterations: u64,
    /// Approximate eigenfunction for `λ₁`, π-orthogonal to constants.
    #[serde(skip)]
    pub eigenfunction: Vec<f64>,
}

/// `⟨f, g⟩_π`, summed sequentially.
fn pi_dot(pi: &[f64], f: &[f64], g: &[f64]) -> f64 {
    pi.iter().zip(f).zip(g).map(|((p, a), b)| p * a * b).sum()
}

/// Removes the constant component: `f ← f - ⟨f, 1⟩_π`.
fn deflate(pi: &[f64], f: &mut [f64]) {
    let mean: f64 = pi.iter().zip(f.iter()).map(|(p, x)| p * x).sum();
    for x in f.iter_mut() {
        *x -= mean;
    }
}

/// `(Pf)(u) = f(u)/2 + Σ_{v~u} f(v) / (2 d(u))`.
fn apply_kernel(g: &Graph, f: &[f64], out: &mut [f64]) {
    let cell = |(u, o): (usize, &mut f64)| {
        let sum: f64 = g.neighbors(u).iter().map(|&v| f[v as usize]).sum();
        *o = 0.5 * f[u] + sum * 0.5 / g.degree(u) as f64;
    };
    if f.len() >= PARALLEL_STEP_MIN {
        out.par_iter_mut().enumerate().for_each(cell);
    } else {
        out.iter_mut().enumerate().for_each(cell);
    }
}

/// Spectral gap `1 - λ₁` of the lazy kernel with relative error about `tol`.
///
/// The kernel is self-adjoint in `ℓ²(π)` and its spectrum is nonnegative, so
/// power iteration restricted to the π-orthogonal complement of the constants
/// converges to `λ₁`. The constant component is projected out after every
/// application. Convergence is judged from the Rayleigh quotient, whose
/// remaining error is extrapolated from the ratio of successive increments.
pub fn spectral_gap(g: &Graph, tol: f64) -> Result<SpectralGap> {
    spectral_gap_with(
        g,
        &PowerOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn spectral_gap_with(g: &Graph, opts: &PowerOptions) -> Result<SpectralGap> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let pi = StationaryDistribution::of(g).pi;
    let count = g.vertex_count();
    let mut rng = stream_rng(opts.seed, STREAM_POWER);
    let mut f: Vec<f64> = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
    deflate(&pi, &mut f);
    let norm = pi_dot(&pi, &f, &f).sqrt();
    f.iter_mut().for_each(|x| *x /= norm);

    let mut next = vec![0.0; count];
    let mut prev_rho: Option<f64> = None;
    let mut prev_delta: Option<f64> = None;
    for iteration in 1..=opts.max_iterations {
        apply_kernel(g, &f, &mut next);
        deflate(&pi, &mut next);
        let rho = pi_dot(&pi, &f, &next);
        let norm = pi_dot(&pi, &next, &next).sqrt();
        if norm <= 1e-150 {
            // P annihilates the complement: λ₁ = 0
            return Ok(SpectralGap {
                gap: 1.0,
                lambda1: 0.0,
                iterations: iteration,
                eigenfunction: f,
            });
        }
        for (x, y) in f.iter_mut().zip(&next) {
            *x = y / norm;
        }
        let done = match (prev_rho, prev_delta) {
            (Some(p), Some(pd)) => {
                let delta = rho - p;
                let converged = if delta.abs() <= 8.0 * f64::EPSILON {
                    true
                } else if pd > 0.0 && delta > 0.0 && delta < pd {
                    let ratio = delta / pd;
                    delta * ratio / (1.0 - ratio) <= opts.tol * (1.0 - rho)
                } else {
                    false
                };
                prev_delta = Some(delta);
                converged
            }
            (Some(p), None) => {
                prev_delta = Some(rho - p);
                false
            }
            _ => false,
        };
        prev_rho = Some(rho);
        if done {
            let lambda1 = rho.clamp(0.0, 1.0);
            return Ok(SpectralGap {
                gap: 1.0 - lambda1,
                lambda1,
                iterations: iteration,
                eigenfunction: f,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "power iterations",
        cap: opts.max_iterations,
    })
}

/// `ln(e / π_min) / (1 - λ₁)`, an upper bound on `T_mix`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingBound {
    pub bound: f64,
    pub pi_min: f64,
    pub gap: f64,
}

pub fn upper_bound_tmix(g: &Graph) -> Result<MixingBound> {
    let gap = spectral_gap(g, PowerOptions::default().tol)?.gap;
    Ok(upper_bound_from_gap(g, gap))
}

pub fn upper_bound_from_gap(g: &Graph, gap: f64) -> MixingBound {
    let pi_min = StationaryDistribution::of(g).min();
    MixingBound {
        bound: (std::f64::consts::E / pi_min).ln() / gap,
        pi_min,
        gap,
    }
}
