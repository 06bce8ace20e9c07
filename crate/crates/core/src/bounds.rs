//! Inequality toolkit: binomial large-deviation rates and exact tails,
//! conductance and edge isoperimetry, the isoperimetric diameter bound, and
//! the empty-box probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::gen::EdgeList;
use crate::graph::{diameter, max_degree, DiameterMode, Graph};
use crate::torus::{snap, VertexId};
use crate::walk::{spectral_gap, PowerOptions, SpectralGap};

/// Largest vertex count accepted by the subset enumerators.
pub const BRUTE_MAX_VERTICES: usize = 24;
/// Largest `n` for exact tail summation.
pub const TAIL_MAX_TRIALS: u64 = 100_000;

fn check_unit_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// `I(z) = z ln(zq / ((1-z)p)) - ln(q / (1-z))` with `q = 1 - p`.
pub fn rate_i(z: f64, p: f64) -> Result<f64> {
    check_unit_open("z", z)?;
    check_unit_open("p", p)?;
    let q = 1.0 - p;
    Ok(z * (z * q / ((1.0 - z) * p)).ln() - (q / (1.0 - z)).ln())
}

/// `γ(z) = z ln z - z + 1`.
pub fn gamma_rate(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InvalidParams(format!("z must be positive, got {z}")));
    }
    Ok(z * z.ln() - z + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `P(Z >= k)`
    Upper,
    /// `P(Z <= k)`
    Lower,
}

fn ln_pmf(n: u64, p: f64, j: u64) -> f64 {
    let success = if j == 0 { 0.0 } else { j as f64 * p.ln() };
    let failure = if j == n { 0.0 } else { (n - j) as f64 * (1.0 - p).ln() };
    ln_binomial(n, j) + success + failure
}

/// `ln P(Z >= k)` or `ln P(Z <= k)` for `Z ~ Binomial(n, p)`, summed exactly in
/// log space.
pub fn ln_binomial_tail_count(n: u64, p: f64, k: i64, side: Tail) -> Result<f64> {
    if n > TAIL_MAX_TRIALS {
        return Err(Error::ResourceCap(format!(
            "exact tail summation needs n <= {TAIL_MAX_TRIALS}, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("p must lie in [0, 1], got {p}")));
    }
    let (from, to) = match side {
        Tail::Upper => (k.max(0), n as i64),
        Tail::Lower => (0, k.min(n as i64)),
    };
    if from > to {
        return Ok(f64::NEG_INFINITY);
    }
    let terms: Vec<f64> = (from as u64..=to as u64).map(|j| ln_pmf(n, p, j)).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(top);
    }
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    Ok((top + sum.ln()).min(0.0))
}

/// Threshold count for `P(Z >= zn)` or `P(Z <= zn)`, with `zn` snapped to an
/// integer when it is one up to rounding.
fn threshold(n: u64, z: f64, side: Tail) -> i64 {
    let x = snap(z * n as f64);
    match side {
        Tail::Upper => x.ceil() as i64,
        Tail::Lower => x.floor() as i64,
    }
}

/// `ln P(Z >= zn)` (upper) or `ln P(Z <= zn)` (lower).
pub fn ln_binomial_tail(n: u64, p: f64, z: f64, side: Tail) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidParams(format!("z must be finite, got {z}")));
    }
    ln_binomial_tail_count(n, p, threshold(n, z, side), side)
}

pub fn binomial_tail(n: u64, p: f64, z: f64, side: Tail) -> Result<f64> {
    ln_binomial_tail(n, p, z, side).map(f64::exp)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdForm {
    /// `P(Z >= zn) <= exp(-I(z) n)` for `z > p`.
    RateUpper,
    /// `P(Z <= zn) <= exp(-I(z) n)` for `z < p`.
    RateLower,
    /// `P(Z >= zpn) <= exp(-γ(z) pn)` for `z > 1`.
    PoissonUpper,
    /// `P(Z <= zpn) <= exp(-γ(z) pn / 2)` for `0 < z < 1`.
    PoissonLower,
    /// `P(Z >= zpn) <= exp(-zpn)` for large `z`.
    LargeZ,
}

/// Grid for [`check_ld_bounds`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LdGrid {
    pub trials: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// Interior points per `z` range.
    pub points: usize,
    /// The `γ` forms are asserted for `p` in this closed range.
    pub small_p_range: (f64, f64),
    /// The `exp(-zpn)` form is asserted for `z` at least this.
    pub large_z_min: f64,
    /// Relative slack on the log bound.
    pub log_tolerance: f64,
}

impl Default for LdGrid {
    fn default() -> Self {
        LdGrid {
            trials: vec![10, 100, 1_000, 10_000],
            probabilities: vec![0.5, 0.1, 0.01, 0.001],
            points: 21,
            small_p_range: (0.001, 0.01),
            large_z_min: 4.0,
            log_tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdCheck {
    pub form: LdForm,
    pub n: u64,
    pub p: f64,
    /// Fraction of `n` for the rate forms, multiple of `p` for the others.
    pub z: f64,
    pub ln_tail: f64,
    pub ln_bound: f64,
    pub violated: bool,
    pub asserted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdFormSummary {
    pub form: LdForm,
    pub evaluated: usize,
    pub violations: usize,
    pub asserted: usize,
    pub asserted_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdReport {
    pub summaries: Vec<LdFormSummary>,
    /// Smallest grid multiplier with `γ(z) >= z`, if any.
    pub large_z_crossover: Option<f64>,
    pub checks: Vec<LdCheck>,
}

impl LdReport {
    pub fn summary(&self, form: LdForm) -> Option<&LdFormSummary> {
        self.summaries.iter().find(|s| s.form == form)
    }

    pub fn asserted_violations(&self) -> usize {
        self.summaries.iter().map(|s| s.asserted_violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.asserted_violations() == 0
    }
}

fn interior(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    (1..=points).map(move |i| lo + (hi - lo) * i as f64 / (points + 1) as f64)
}

/// Compares exact binomial tails against each large-deviation bound over the
/// grid. Every rate-form point is asserted. The `γ` forms are asserted inside
/// `small_p_range` and the `exp(-zpn)` form at `z >= large_z_min`; all other
/// points are evaluated and reported only.
pub fn check_ld_bounds(grid: &LdGrid) -> Result<LdReport> {
    if grid.points == 0 {
        return Err(Error::InvalidParams("LD grid needs at least one z point".into()));
    }
    for &p in &grid.probabilities {
        check_unit_open("p", p)?;
    }
    let mut cases: Vec<(LdForm, u64, f64, f64)> = Vec::new();
    for &n in &grid.trials {
        for &p in &grid.probabilities {
            for z in interior(p, 1.0, grid.points) {
                cases.push((LdForm::RateUpper, n, p, z));
            }
            for z in interior(0.0, p, grid.points) {
                cases.push((LdForm::RateLower, n, p, z));
            }
            for z in interior(1.0, 1.0 / p, grid.points) {
                cases.push((LdForm::PoissonUpper, n, p, z));
                cases.push((LdForm::LargeZ, n, p, z));
            }
            for z in interior(0.0, 1.0, grid.points) {
                cases.push((LdForm::PoissonLower, n, p, z));
            }
        }
    }
    let (small_lo, small_hi) = grid.small_p_range;
    let checks = cases
        .par_iter()
        .map(|&(form, n, p, z)| -> Result<LdCheck> {
            let mean = p * n as f64;
            let (ln_tail, ln_bound, asserted) = match form {
                LdForm::RateUpper => (
                    ln_binomial_tail(n, p, z, Tail::Upper)?,
                    -rate_i(z, p)? * n as f64,
                    true,
                ),
                LdForm::RateLower => (
                    ln_binomial_tail(n, p, z, Tail::Lower)?,
                    -rate_i(z, p)? * n as f64,
                    true,
                ),
                LdForm::PoissonUpper => (
                    ln_binomial_tail(n, p, z * p, Tail::Upper)?,
                    -gamma_rate(z)? * mean,
                    (small_lo..=small_hi).contains(&p),
                ),
                LdForm::PoissonLower => (
                    ln_binomial_tail(n, p, z * p, Tail::Lower)?,
                    -0.5 * gamma_rate(z)? * mean,
                    (small_lo..=small_hi).contains(&p),
                ),
                LdForm::LargeZ => (
                    ln_binomial_tail(n, p, z * p, Tail::Upper)?,
                    -z * mean,
                    z >= grid.large_z_min,
                ),
            };
            let slack = grid.log_tolerance * ln_bound.abs().max(1.0);
            Ok(LdCheck {
                form,
                n,
                p,
                z,
                ln_tail,
                ln_bound,
                violated: ln_tail > ln_bound + slack,
                asserted,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let forms = [
        LdForm::RateUpper,
        LdForm::RateLower,
        LdForm::PoissonUpper,
        LdForm::PoissonLower,
        LdForm::LargeZ,
    ];
    let summaries = forms
        .iter()
        .map(|&form| {
            let of_form = checks.iter().filter(|c| c.form == form);
            LdFormSummary {
                form,
                evaluated: of_form.clone().count(),
                violations: of_form.clone().filter(|c| c.violated).count(),
                asserted: of_form.clone().filter(|c| c.asserted).count(),
                asserted_violations: of_form.filter(|c| c.violated && c.asserted).count(),
            }
        })
        .collect();
    let large_z_crossover = checks
        .iter()
        .filter(|c| c.form == LdForm::LargeZ && gamma_rate(c.z).map_or(false, |g| g >= c.z))
        .map(|c| c.z)
        .fold(None, |acc: Option<f64>, z| Some(acc.map_or(z, |a| a.min(z))));
    Ok(LdReport {
        summaries,
        large_z_crossover,
        checks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsoperimetryMethod {
    Brute,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    Upper,
}

/// Conductance `h` or isoperimetric constant `ι` with the subset attaining it.
/// `value` is `cut / denominator`, halved for conductance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetryResult {
    pub value: f64,
    pub subset: Vec<VertexId>,
    pub method: IsoperimetryMethod,
    pub kind: BoundKind,
    pub cut: u64,
    pub denominator: u64,
}

#[derive(Clone, Copy)]
enum Objective {
    /// `𝔈(S, S^c) / Vol(S)` over `2 Vol(S) <= D`.
    Conductance,
    /// `𝔈(S, S^c) / |S|` over `2|S| <= |V|`.
    Isoperimetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Candidate {
    cut: u64,
    denominator: u64,
    mask: u64,
}

impl Candidate {
    /// Smaller ratio wins, then smaller mask.
    fn better(self, other: Candidate) -> Candidate {
        let lhs = self.cut as u128 * other.denominator as u128;
        let rhs = other.cut as u128 * self.denominator as u128;
        if lhs < rhs || (lhs == rhs && self.mask < other.mask) {
            self
        } else {
            other
        }
    }
}

fn brute_force(g: &Graph, objective: Objective) -> Result<Candidate> {
    let count = g.vertex_count();
    if count > BRUTE_MAX_VERTICES {
        return Err(Error::ResourceCap(format!(
            "subset enumeration needs <= {BRUTE_MAX_VERTICES} vertices, got {count}"
        )));
    }
    let neighbor_mask: Vec<u64> = (0..count)
        .map(|u| g.neighbors(u).iter().fold(0u64, |m, &v| m | 1 << v))
        .collect();
    let degree: Vec<u64> = (0..count).map(|u| g.degree(u) as u64).collect();
    let total = g.total_degree();

    let high_bits = count.min(6);
    let low_bits = count - high_bits;
    let feasible = |size: u64, volume: u64| {
        size > 0
            && match objective {
                Objective::Conductance => 2 * volume <= total,
                Objective::Isoperimetric => 2 * size as usize <= count,
            }
    };
    let denominator = |size: u64, volume: u64| match objective {
        Objective::Conductance => volume,
        Objective::Isoperimetric => size,
    };

    let best = (0u64..1 << high_bits)
        .into_par_iter()
        .map(|prefix| {
            let mut mask = prefix << low_bits;
            let (mut size, mut volume, mut cut) = (0u64, 0u64, 0u64);
            for u in 0..count {
                if mask >> u & 1 == 1 {
                    size += 1;
                    volume += degree[u];
                    cut += (neighbor_mask[u] & !mask).count_ones() as u64;
                }
            }
            let mut best: Option<Candidate> = None;
            let mut consider = |mask: u64, size: u64, volume: u64, cut: u64| {
                if feasible(size, volume) {
                    let c = Candidate {
                        cut,
                        denominator: denominator(size, volume),
                        mask,
                    };
                    best = Some(best.map_or(c, |b| b.better(c)));
                }
            };
            consider(mask, size, volume, cut);
            for step in 1u64..1 << low_bits {
                let u = step.trailing_zeros() as usize;
                let bit = 1u64 << u;
                let inside = (neighbor_mask[u] & mask & !bit).count_ones() as u64;
                if mask & bit == 0 {
                    mask |= bit;
                    size += 1;
                    volume += degree[u];
                    cut = cut + degree[u] - 2 * inside;
                } else {
                    mask &= !bit;
                    size -= 1;
                    volume -= degree[u];
                    cut = cut + 2 * inside - degree[u];
                }
                consider(mask, size, volume, cut);
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(a), Some(b)) => Some(a.better(b)),
                (a, None) => a,
                (None, b) => b,
            },
        );
    best.ok_or_else(|| Error::InvalidParams("graph has no admissible subset".into()))
}

fn mask_vertices(mask: u64) -> Vec<VertexId> {
    (0..64).filter(|u| mask >> u & 1 == 1).map(VertexId).collect()
}

/// Exact conductance `h = ½ min_{π(S) <= 1/2} 𝔈(S, S^c) / Vol(S)`.
pub fn conductance_exact(g: &Graph) -> Result<IsoperimetryResult> {
    let best = brute_force(g, Objective::Conductance)?;
    Ok(IsoperimetryResult {
        value: best.cut as f64 / (2 * best.denominator) as f64,
        subset: mask_vertices(best.mask),
        method: IsoperimetryMethod::Brute,
        kind: BoundKind::Exact,
        cut: best.cut,
        denominator: best.denominator,
    })
}

/// Exact edge isoperimetric constant `ι = min_{|S| <= |V|/2} 𝔈(S, S^c) / |S|`.
pub fn isoperimetric_exact(g: &Graph) -> Result<IsoperimetryResult> {
    let best = brute_force(g, Objective::Isoperimetric)?;
    Ok(IsoperimetryResult {
        value: best.cut as f64 / best.denominator as f64,
        subset: mask_vertices(best.mask),
        method: IsoperimetryMethod::Brute,
        kind: BoundKind::Exact,
        cut: best.cut,
        denominator: best.denominator,
    })
}

/// Bracket `lower <= h <= upper.value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductanceBracket {
    pub lower: f64,
    pub upper: IsoperimetryResult,
    pub gap: f64,
}

pub fn conductance_sweep(g: &Graph) -> Result<ConductanceBracket> {
    let tol = PowerOptions::default().tol;
    let spectral = spectral_gap(g, tol)?;
    Ok(conductance_sweep_with(g, &spectral, tol))
}

/// Sweep over prefixes of the vertices ordered by the approximate second
/// eigenfunction. The lower end is `(1 - λ₁)/2`, shrunk by the relative
/// accuracy of the gap estimate.
pub fn conductance_sweep_with(g: &Graph, spectral: &SpectralGap, tol: f64) -> ConductanceBracket {
    let count = g.vertex_count();
    let f = &spectral.eigenfunction;
    let mut order: Vec<u32> = (0..count as u32).collect();
    order.sort_by(|&a, &b| f[a as usize].total_cmp(&f[b as usize]).then(a.cmp(&b)));
    let mut rank = vec![0u32; count];
    for (i, &v) in order.iter().enumerate() {
        rank[v as usize] = i as u32;
    }
    let total = g.total_degree();
    let (mut volume, mut cut) = (0u64, 0u64);
    let mut best: Option<(Candidate, usize, bool)> = None;
    for (k, &v) in order.iter().enumerate().take(count - 1) {
        let v = v as usize;
        let inside = g.neighbors(v).iter().filter(|&&w| rank[w as usize] < k as u32).count() as u64;
        volume += g.degree(v) as u64;
        cut = cut + g.degree(v) as u64 - 2 * inside;
        let prefix_small = 2 * volume <= total;
        let c = Candidate {
            cut,
            denominator: if prefix_small { volume } else { total - volume },
            mask: k as u64,
        };
        best = Some(match best {
            Some((b, bk, bs)) if b.better(c) == b => (b, bk, bs),
            _ => (c, k, prefix_small),
        });
    }
    let (c, k, prefix_small) = best.expect("graph has at least two vertices");
    let mut subset: Vec<VertexId> = if prefix_small {
        order[..=k].iter().map(|&v| VertexId(v)).collect()
    } else {
        order[k + 1..].iter().map(|&v| VertexId(v)).collect()
    };
    subset.sort_unstable();
    ConductanceBracket {
        lower: spectral.gap / 2.0 * (1.0 - 4.0 * tol),
        upper: IsoperimetryResult {
            value: c.cut as f64 / (2 * c.denominator) as f64,
            subset,
            method: IsoperimetryMethod::Sweep,
            kind: BoundKind::Upper,
            cut: c.cut,
            denominator: c.denominator,
        },
        gap: spectral.gap,
    }
}

/// `diam <= 4Δ/ι · ln|V|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterBoundReport {
    pub diameter: u32,
    pub diameter_exact: bool,
    pub max_degree: u32,
    pub iota: f64,
    /// False when `iota` is the spectral lower bound `(1 - λ₁) δ_min`.
    pub iota_exact: bool,
    pub vertex_count: usize,
    pub bound: f64,
    pub holds: bool,
}

pub fn diameter_bound_check(g: &Graph) -> Result<DiameterBoundReport> {
    let (iota, iota_exact) = if g.vertex_count() <= BRUTE_MAX_VERTICES {
        (isoperimetric_exact(g)?.value, true)
    } else {
        // every S with |S| <= |V|/2 has a side of volume <= D/2 and at least |S| vertices
        let tol = PowerOptions::default().tol;
        let gap = spectral_gap(g, tol)?.gap;
        (gap * (1.0 - 4.0 * tol) * g.min_degree() as f64, false)
    };
    Ok(diameter_bound_from(g, iota, iota_exact))
}

pub fn diameter_bound_from(g: &Graph, iota: f64, iota_exact: bool) -> DiameterBoundReport {
    let diam = diameter(g, DiameterMode::Exact);
    let delta = max_degree(g);
    let bound = 4.0 * delta as f64 / iota * (g.vertex_count() as f64).ln();
    DiameterBoundReport {
        diameter: diam.value,
        diameter_exact: diam.exact,
        max_degree: delta,
        iota,
        iota_exact,
        vertex_count: g.vertex_count(),
        bound,
        holds: diam.value as f64 <= bound,
    }
}

/// Box origins whose side-`side` box has no long edge leaving it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxScan {
    pub r: f64,
    pub side: u32,
    pub total_origins: u64,
    pub origins: Vec<VertexId>,
}

impl BoxScan {
    pub fn exists(&self) -> bool {
        !self.origins.is_empty()
    }
}

/// `⌈2 ln^r n⌉`.
pub fn box_side(n: u32, r: f64) -> Result<u32> {
    if !r.is_finite() {
        return Err(Error::InvalidParams(format!("r must be finite, got {r}")));
    }
    let side = snap(2.0 * (n as f64).ln().powf(r)).ceil();
    if side >= n as f64 {
        return Err(Error::InvalidParams(format!(
            "box side {side} must be smaller than n = {n}"
        )));
    }
    Ok(side.max(1.0) as u32)
}

/// Every origin `o` names the box `{x : (x_i - o_i) mod n < side}`. A box
/// qualifies when no long edge has exactly one endpoint inside it.
pub fn empty_box_scan(edges: &EdgeList, r: f64) -> Result<BoxScan> {
    let torus = edges.torus();
    let side = box_side(torus.n, r)?;
    let n = torus.n;
    let d = torus.d as usize;
    let count = torus.vertex_count();
    let mut qualifies = vec![true; count];

    let in_box = |origin: &[u32], x: &[u32]| origin.iter().zip(x).all(|(&o, &c)| (c + n - o) % n < side);
    let mut cu = vec![0u32; d];
    let mut cv = vec![0u32; d];
    let mut origin = vec![0u32; d];
    let offsets = (side as usize).pow(d as u32);
    for &(u, v) in &edges.long_edges {
        torus.decode_into(u, &mut cu);
        torus.decode_into(v, &mut cv);
        for (this, other) in [(&cu, &cv), (&cv, &cu)] {
            for k in 0..offsets {
                let mut rest = k;
                for i in (0..d).rev() {
                    let step = (rest % side as usize) as u32;
                    rest /= side as usize;
                    origin[i] = (this[i] + n - step) % n;
                }
                if !in_box(&origin, other) {
                    let idx = origin.iter().fold(0usize, |acc, &c| acc * n as usize + c as usize);
                    qualifies[idx] = false;
                }
            }
        }
    }
    Ok(BoxScan {
        r,
        side,
        total_origins: count as u64,
        origins: (0..count as u32).filter(|&o| qualifies[o as usize]).map(VertexId).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::generate;
    use crate::graph::cut_stats_mask;
    use crate::torus::ModelParams;
    use proptest::prelude::*;

    fn ring(n: u32) -> Graph {
        let p = ModelParams::new(1, n, 0.1, 0.4, 0.0, 0.0, 0).unwrap();
        Graph::build(&generate(&p).unwrap()).unwrap()
    }

    fn complete(k: u32) -> Graph {
        let edges: Vec<(u32, u32)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        Graph::from_edges(k as usize, &edges).unwrap()
    }

    /// Second enumerator: plain mask loop through `cut_stats_mask`, floating ratios.
    fn scan_min(g: &Graph, conductance: bool) -> f64 {
        let count = g.vertex_count();
        let total = g.total_degree();
        let mut best = f64::INFINITY;
        for mask in 1u64..(1 << count) - 1 {
            let s = cut_stats_mask(g, mask).unwrap();
            let ok = if conductance {
                2 * s.volume <= total
            } else {
                2 * s.subset_size as usize <= count
            };
            if ok {
                let den = if conductance { s.volume } else { s.subset_size };
                best = best.min(s.edge_cut as f64 / den as f64);
            }
        }
        if conductance {
            best / 2.0
        } else {
            best
        }
    }

    /// Relative entropy of Bernoulli(z) from Bernoulli(p).
    fn kl(z: f64, p: f64) -> f64 {
        z * (z / p).ln() + (1.0 - z) * ((1.0 - z) / (1.0 - p)).ln()
    }

    /// Direct summation of the binomial pmf with running products.
    fn tail_by_products(n: u64, p: f64, from: u64, to: u64) -> f64 {
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut sum = 0.0;
        for j in 0..=n {
            if j >= from && j <= to {
                sum += pmf;
            }
            pmf *= (n - j) as f64 / (j + 1) as f64 * p / (1.0 - p);
        }
        sum
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_i(0.3, 0.3).unwrap().abs() < 1e-15, true);
        let v = rate_i(0.5, 0.25).unwrap();
        assert!((v - kl(0.5, 0.25)).abs() < 1e-15);
        assert!((v - 0.143841036225890).abs() < 1e-12);
        for i in 1..40 {
            let z = i as f64 / 40.0;
            if (z - 0.3).abs() > 1e-9 {
                assert!(rate_i(z, 0.3).unwrap() > 0.0);
            }
        }
        assert!(rate_i(0.0, 0.3).is_err());
        assert!(rate_i(0.5, 1.0).is_err());
    }

    #[test]
    fn rate_matches_relative_entropy_on_grid() {
        for i in 1..100 {
            for j in 1..100 {
                let (z, p) = (i as f64 / 100.0, j as f64 / 100.0);
                assert!((rate_i(z, p).unwrap() - kl(z, p)).abs() <= 1e-12, "z={z} p={p}");
            }
        }
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_rate(1.0).unwrap(), 0.0);
        assert!((gamma_rate(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        // series: 2 ln 2 = 2 Σ 1/(k 2^k)
        let ln2: f64 = (1..60).map(|k| 1.0 / (k as f64 * 2f64.powi(k))).sum();
        assert!((gamma_rate(2.0).unwrap() - (2.0 * ln2 - 1.0)).abs() < 1e-14);
        assert!((gamma_rate(2.0).unwrap() - 0.3863).abs() < 1e-4);
        assert!(gamma_rate(0.0).is_err());
        assert!(gamma_rate(-1.0).is_err());
    }

    #[test]
    fn tail_examples() {
        assert!((binomial_tail(10, 0.5, 0.5, Tail::Upper).unwrap() - 0.623046875).abs() < 1e-14);
        assert!((tail_by_products(10, 0.5, 5, 10) - 0.623046875).abs() < 1e-14);
        assert_eq!(binomial_tail(10, 0.5, 1.1, Tail::Upper).unwrap(), 0.0);
        assert!((binomial_tail(4, 0.5, 0.0, Tail::Lower).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        assert!(binomial_tail(TAIL_MAX_TRIALS + 1, 0.5, 0.5, Tail::Upper).is_err());
        // 0.3 * 10 is 3.0000000000000004 in floating point
        assert!((binomial_tail(10, 0.5, 0.3, Tail::Upper).unwrap() - tail_by_products(10, 0.5, 3, 10)).abs() < 1e-14);
    }

    #[test]
    fn tails_match_direct_summation() {
        for &(n, p) in &[(50u64, 0.3), (200, 0.05), (500, 0.5)] {
            for k in (0..=n).step_by(7) {
                let up = ln_binomial_tail_count(n, p, k as i64, Tail::Upper).unwrap().exp();
                let lo = ln_binomial_tail_count(n, p, k as i64, Tail::Lower).unwrap().exp();
                let up_ref = tail_by_products(n, p, k, n);
                let lo_ref = tail_by_products(n, p, 0, k);
                assert!((up - up_ref).abs() <= 1e-12 * up_ref.max(1e-300) + 1e-300, "n={n} k={k}");
                assert!((lo - lo_ref).abs() <= 1e-12 * lo_ref.max(1e-300) + 1e-300, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn ld_examples() {
        let tail = ln_binomial_tail(100, 0.5, 0.7, Tail::Upper).unwrap();
        assert!(tail <= -rate_i(0.7, 0.5).unwrap() * 100.0);
        let tail = ln_binomial_tail(10_000, 0.001, 0.5 * 0.001, Tail::Lower).unwrap();
        assert!(tail <= -0.5 * gamma_rate(0.5).unwrap() * 10.0);
    }

    #[test]
    fn large_z_form_holds_past_crossover() {
        // γ(z) >= z from z ≈ 6.3 on, and the exact tail sits below the Chernoff bound
        for &(n, p) in &[(1_000u64, 0.01), (10_000, 0.01), (10_000, 0.001)] {
            for z in [6.4, 8.0, 20.0, 60.0] {
                if z * p < 1.0 {
                    let tail = ln_binomial_tail(n, p, z * p, Tail::Upper).unwrap();
                    assert!(tail <= -z * p * n as f64, "n={n} p={p} z={z}");
                }
            }
        }
    }

    #[test]
    fn default_grid_rate_and_poisson_forms() {
        let report = check_ld_bounds(&LdGrid::default()).unwrap();
        for form in [LdForm::RateUpper, LdForm::RateLower, LdForm::PoissonUpper, LdForm::PoissonLower] {
            let s = report.summary(form).unwrap();
            assert_eq!(s.violations, 0, "{form:?}");
        }
        assert_eq!(report.summary(LdForm::RateUpper).unwrap().evaluated, 4 * 4 * 21);
        assert!(report.large_z_crossover.unwrap() > 6.0);
    }

    #[test]
    fn conductance_examples() {
        let c4 = conductance_exact(&ring(4)).unwrap();
        assert_eq!(c4.value, 0.25);
        assert_eq!(c4.subset, vec![VertexId(0), VertexId(1)]);

        let two = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(conductance_exact(&two).unwrap().value, 0.5);

        // K4: a pair has cut 4 over volume 6
        let k4 = complete(4);
        let h = conductance_exact(&k4).unwrap();
        assert!((h.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.value, scan_min(&k4, true));
        assert_eq!(isoperimetric_exact(&k4).unwrap().value, scan_min(&k4, false));

        assert!(matches!(conductance_exact(&ring(25)), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn isoperimetric_examples() {
        let c4 = isoperimetric_exact(&ring(4)).unwrap();
        assert_eq!(c4.value, 1.0);
        assert_eq!(c4.subset.len(), 2);
        assert_eq!(isoperimetric_exact(&ring(8)).unwrap().value, 0.5);
        let plus = Graph::from_edges(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4)]).unwrap();
        assert!(isoperimetric_exact(&plus).unwrap().value >= 0.5);
    }

    #[test]
    fn regular_tori_relate_h_and_iota() {
        for (d, n) in [(1u32, 8u32), (1, 13), (1, 24), (2, 4)] {
            let p = ModelParams::new(d, n, 0.1, 0.4, 0.0, 0.0, 0).unwrap();
            let g = Graph::build(&generate(&p).unwrap()).unwrap();
            let h = conductance_exact(&g).unwrap().value;
            let iota = isoperimetric_exact(&g).unwrap().value;
            assert!((h - iota / (2.0 * 2.0 * d as f64)).abs() < 1e-15, "d={d} n={n}");
        }
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (3usize..=12, any::<u64>()).prop_map(|(v, seed)| {
            // random spanning tree plus extra edges
            let mut state = seed | 1;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state
            };
            let mut edges = std::collections::BTreeSet::new();
            for u in 1..v as u32 {
                let w = (next() % u as u64) as u32;
                edges.insert((w, u));
            }
            for _ in 0..v {
                let a = (next() % v as u64) as u32;
                let b = (next() % v as u64) as u32;
                if a != b {
                    edges.insert((a.min(b), a.max(b)));
                }
            }
            Graph::from_edges(v, &edges.into_iter().collect::<Vec<_>>()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn enumerators_agree(g in arb_graph()) {
            prop_assert_eq!(conductance_exact(&g).unwrap().value, scan_min(&g, true));
            prop_assert_eq!(isoperimetric_exact(&g).unwrap().value, scan_min(&g, false));
        }

        #[test]
        fn sweep_brackets_exact(g in arb_graph()) {
            let h = conductance_exact(&g).unwrap().value;
            let b = conductance_sweep(&g).unwrap();
            prop_assert!(b.lower <= b.upper.value);
            prop_assert!(b.lower <= h && h <= b.upper.value);
            prop_assert_eq!(b.upper.subset.len() as u64, cut_stats_for(&g, &b.upper.subset).0);
        }
    }

    fn cut_stats_for(g: &Graph, s: &[VertexId]) -> (u64, u64) {
        let st = crate::graph::cut_stats(g, s).unwrap();
        (st.subset_size, st.edge_cut)
    }

    #[test]
    fn sweep_examples() {
        let c4 = conductance_sweep(&ring(4)).unwrap();
        assert!(c4.lower <= 0.25 && 0.25 <= c4.upper.value);
        let g = ring(24);
        let h = conductance_exact(&g).unwrap().value;
        let b = conductance_sweep(&g).unwrap();
        assert!(b.lower <= h && h <= b.upper.value);
        assert_eq!(b.upper.kind, BoundKind::Upper);
    }

    #[test]
    fn diameter_bound_examples() {
        let c4 = diameter_bound_check(&ring(4)).unwrap();
        assert_eq!((c4.diameter, c4.max_degree, c4.iota), (2, 2, 1.0));
        assert!((c4.bound - 8.0 * 4f64.ln()).abs() < 1e-12 && c4.holds);
        let two = diameter_bound_check(&Graph::from_edges(2, &[(0, 1)]).unwrap()).unwrap();
        assert!((two.bound - 4.0 * 2f64.ln()).abs() < 1e-12 && two.holds);
        for seed in 0..20 {
            let p = ModelParams::new(1, 8 + seed as u32 % 17, 0.1, 0.4, 2.0, 1.0, seed).unwrap();
            let g = Graph::build(&generate(&p).unwrap()).unwrap();
            let r = diameter_bound_check(&g).unwrap();
            assert!(r.iota_exact && r.holds);
        }
        let big = diameter_bound_check(&ring(100)).unwrap();
        assert!(!big.iota_exact && big.holds);
    }

    #[test]
    fn box_side_rules() {
        assert_eq!(box_side(1 << 14, 0.5).unwrap(), 7);
        assert_eq!(box_side(1 << 10, 0.5).unwrap(), 6);
        assert!(box_side(10, 3.0).is_err());
        assert!(box_side(10, f64::NAN).is_err());
    }

    #[test]
    fn empty_box_examples() {
        let p = ModelParams::new(2, 12, 0.1, 0.4, 0.0, 0.0, 0).unwrap();
        let scan = empty_box_scan(&generate(&p).unwrap(), 0.5).unwrap();
        assert_eq!(scan.origins.len(), 144);

        let p = ModelParams::new(1, 100, 0.1, 0.4, 0.0, 0.0, 0).unwrap();
        let e = EdgeList::from_long_edges(p, [(VertexId(10), VertexId(40))]).unwrap();
        let scan = empty_box_scan(&e, 0.5).unwrap();
        let s = scan.side;
        assert_eq!(s, 5);
        // boxes containing exactly one of 10, 40
        for o in 0..100u32 {
            let has = |x: u32| (x + 100 - o) % 100 < s;
            assert_eq!(scan.origins.contains(&VertexId(o)), has(10) == has(40), "origin {o}");
        }
        assert_eq!(scan.origins.len(), 100 - 2 * 5);
    }

    #[test]
    fn empty_box_brute_oracle_2d() {
        let p = ModelParams::new(2, 9, 0.2, 0.4, 3.0, 0.0, 4).unwrap();
        let e = generate(&p).unwrap();
        let scan = empty_box_scan(&e, 0.3).unwrap();
        let t = e.torus();
        let s = scan.side;
        let inside = |o: &[u32], x: VertexId| {
            let c = t.decode(x);
            o.iter().zip(&c).all(|(&a, &b)| (b + t.n - a) % t.n < s)
        };
        let expected: Vec<VertexId> = (0..t.vertex_count() as u32)
            .map(VertexId)
            .filter(|&o| {
                let oc = t.decode(o);
                e.long_edges.iter().all(|&(u, v)| inside(&oc, u) == inside(&oc, v))
            })
            .collect();
        assert_eq!(scan.origins, expected);
    }
}
