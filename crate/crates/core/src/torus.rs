//! Geometry of the d-dimensional lattice torus.
//!
//! Vertices are the points of `[0, n)^d` with every coordinate taken mod `n`,
//! encoded row-major (the last coordinate varies fastest). Distances use the
//! wrapped l∞ metric `max_s min(|x_s - y_s|, n - |x_s - y_s|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major index of a torus vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for VertexId {
    fn from(v: u32) -> Self {
        VertexId(v)
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Rounds values within floating-point noise of an integer onto that integer,
/// so that products such as `0.1 * 100` land on the intended lattice point.
pub(crate) fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// Parameters of the modified Newman–Watts graph `G_n(α, β, σ, ζ)` on `T_n^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: u32,
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub zeta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ModelParams {
    pub fn new(d: u32, n: u32, alpha: f64, beta: f64, sigma: f64, zeta: f64, seed: u64) -> Result<Self> {
        let params = ModelParams {
            d,
            n,
            alpha,
            beta,
            sigma,
            zeta,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        Torus::new(self.d, self.n)?;
        let finite = [self.alpha, self.beta, self.sigma, self.zeta]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("alpha, beta, sigma and zeta must be finite".into()));
        }
        if !(0.0 < self.alpha && self.alpha < self.beta && self.beta < 0.5) {
            return Err(Error::InvalidParams(format!(
                "need 0 < alpha < beta < 1/2, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        let p = self.p_n();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!(
                "p_n = sigma n^-d ln^zeta n = {p} lies outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// Long-edge probability `σ n^{-d} ln^ζ n`.
    pub fn p_n(&self) -> f64 {
        let n = self.n as f64;
        self.sigma * n.powi(-(self.d as i32)) * n.ln().powf(self.zeta)
    }

    /// `Γ = (2β)^d - (2α)^d`.
    pub fn gamma(&self) -> f64 {
        (2.0 * self.beta).powi(self.d as i32) - (2.0 * self.alpha).powi(self.d as i32)
    }

    pub fn gamma_gt_half(&self) -> bool {
        self.gamma() > 0.5
    }

    pub fn torus(&self) -> Torus {
        Torus {
            d: self.d,
            n: self.n,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.torus().vertex_count()
    }

    /// Integer distances admitted for long edges: `[⌈αn⌉, ⌊βn⌋]`.
    pub fn window(&self) -> DistanceWindow {
        let n = self.n as f64;
        let lo = snap(self.alpha * n).ceil() as u32;
        let hi = snap(self.beta * n).floor() as u32;
        DistanceWindow { lo, hi }
    }
}

/// Closed integer interval of l∞ distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceWindow {
    pub lo: u32,
    pub hi: u32,
}

impl DistanceWindow {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, dist: u32) -> bool {
        self.lo <= dist && dist <= self.hi
    }
}

/// Shape of `T_n^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Torus {
    pub d: u32,
    pub n: u32,
}

impl Torus {
    pub fn new(d: u32, n: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("dimension d must be >= 1".into()));
        }
        if n < 3 {
            return Err(Error::InvalidParams(format!("side length n must be >= 3, got {n}")));
        }
        let count = (n as u128).checked_pow(d);
        match count {
            Some(c) if c <= u32::MAX as u128 => Ok(Torus { d, n }),
            _ => Err(Error::InvalidParams(format!(
                "n^d = {n}^{d} exceeds the supported vertex count {}",
                u32::MAX
            ))),
        }
    }

    pub fn vertex_count(&self) -> usize {
        (self.n as usize).pow(self.d)
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

    pub fn encode(&self, coords: &[u32]) -> Result<VertexId> {
        if coords.len() != self.d as usize {
            return Err(Error::DimensionMismatch {
                expected: self.d as usize,
                actual: coords.len(),
            });
        }
        let mut index: u64 = 0;
        for &x in coords {
            if x >= self.n {
                return Err(Error::InvalidParams(format!("coordinate {x} out of range [0, {})", self.n)));
            }
            index = index * self.n as u64 + x as u64;
        }
        Ok(VertexId(index as u32))
    }

    pub fn decode(&self, v: VertexId) -> Vec<u32> {
        let mut coords = vec![0; self.d as usize];
        self.decode_into(v, &mut coords);
        coords
    }

    pub fn decode_into(&self, v: VertexId, coords: &mut [u32]) {
        let mut rest = v.0;
        for slot in coords.iter_mut().rev() {
            *slot = rest % self.n;
            rest /= self.n;
        }
    }

    /// Wrapped per-axis distance.
    #[inline]
    pub fn axis_distance(&self, a: u32, b: u32) -> u32 {
        let diff = a.abs_diff(b);
        diff.min(self.n - diff)
    }

    /// Wrapped l∞ distance; both vertices must be in range.
    pub fn distance(&self, u: VertexId, v: VertexId) -> u32 {
        let (mut a, mut b) = (u.0, v.0);
        let mut best = 0;
        for _ in 0..self.d {
            best = best.max(self.axis_distance(a % self.n, b % self.n));
            a /= self.n;
            b /= self.n;
        }
        best
    }

    /// `v + delta` with coordinates taken mod n.
    pub fn translate(&self, v: VertexId, delta: &[i64]) -> VertexId {
        debug_assert_eq!(delta.len(), self.d as usize);
        let n = self.n as i64;
        let mut rest = v.0 as i64;
        let mut index = 0i64;
        let mut stride = 1i64;
        for &dx in delta.iter().rev() {
            let x = rest % n;
            rest /= n;
            index += (x + dx).rem_euclid(n) * stride;
            stride *= n;
        }
        VertexId(index as u32)
    }

    /// The `2d` nearest neighbours of `v`, ascending. Distinct because `n >= 3`.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let n = self.n;
        let mut out = Vec::with_capacity(2 * self.d as usize);
        let mut stride = 1u32;
        let mut rest = v.0;
        for _ in 0..self.d {
            let x = rest % n;
            rest /= n;
            let base = v.0 - x * stride;
            out.push(VertexId(base + ((x + 1) % n) * stride));
            out.push(VertexId(base + ((x + n - 1) % n) * stride));
            stride = stride.wrapping_mul(n);
        }
        out.sort_unstable();
        out
    }
}

/// Wrapped l∞ distance between two vertices of the model's torus.
pub fn torus_distance(u: VertexId, v: VertexId, params: &ModelParams) -> Result<u32> {
    let torus = params.torus();
    torus.check(u)?;
    torus.check(v)?;
    Ok(torus.distance(u, v))
}

/// Offsets `δ ∈ [-hi, hi]^d` with `lo <= max_s |δ_s|`, in lexicographic order.
pub(crate) fn annulus_offsets(d: u32, window: DistanceWindow) -> Vec<Vec<i64>> {
    if window.is_empty() {
        return Vec::new();
    }
    let hi = window.hi as i64;
    let lo = window.lo as i64;
    let side = (2 * hi + 1) as usize;
    let total = side.pow(d);
    let mut out = Vec::new();
    let mut delta = vec![0i64; d as usize];
    for mut k in 0..total {
        for slot in delta.iter_mut().rev() {
            *slot = (k % side) as i64 - hi;
            k /= side;
        }
        if delta.iter().map(|x| x.abs()).max().unwrap_or(0) >= lo {
            out.push(delta.clone());
        }
    }
    out
}

/// `Λ_n(u)`: every vertex whose distance from `u` lies in the long-edge window,
/// in ascending index order.
pub fn annulus(u: VertexId, params: &ModelParams) -> Result<Vec<VertexId>> {
    params.validate()?;
    let torus = params.torus();
    torus.check(u)?;
    let mut out: Vec<VertexId> = annulus_offsets(params.d, params.window())
        .iter()
        .map(|delta| torus.translate(u, delta))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// `|Λ_n(u)| = (2⌊βn⌋+1)^d - (2⌈αn⌉-1)^d`, the same for every `u`.
pub fn annulus_size(params: &ModelParams) -> u64 {
    let w = params.window();
    if w.is_empty() {
        return 0;
    }
    let outer = (2 * w.hi as u64 + 1).pow(params.d);
    let inner = (2 * w.lo as u64 - 1).pow(params.d);
    outer - inner
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(d: u32, n: u32, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::new(d, n, alpha, beta, 0.0, 0.0, 0).unwrap()
    }

    /// Counts partners by scanning every vertex.
    fn brute_annulus(u: VertexId, p: &ModelParams) -> Vec<VertexId> {
        let t = p.torus();
        let (a, b) = (p.alpha * p.n as f64, p.beta * p.n as f64);
        (0..t.vertex_count() as u32)
            .map(VertexId)
            .filter(|&v| {
                let dist = t.distance(u, v) as f64;
                a <= dist + 1e-9 && dist <= b + 1e-9
            })
            .collect()
    }

    #[test]
    fn distance_examples() {
        let p = params(1, 10, 0.1, 0.4);
        assert_eq!(torus_distance(VertexId(2), VertexId(9), &p).unwrap(), 3);
        assert_eq!(torus_distance(VertexId(4), VertexId(4), &p).unwrap(), 0);

        let p = params(2, 8, 0.1, 0.4);
        let t = p.torus();
        let u = t.encode(&[0, 0]).unwrap();
        let v = t.encode(&[4, 5]).unwrap();
        assert_eq!(torus_distance(u, v, &p).unwrap(), 4);
    }

    #[test]
    fn distance_rejects_out_of_range() {
        let p = params(1, 10, 0.1, 0.4);
        assert!(matches!(
            torus_distance(VertexId(10), VertexId(0), &p),
            Err(Error::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn annulus_examples_match_enumeration() {
        let p = params(1, 100, 0.1, 0.4);
        let ann = annulus(VertexId(17), &p).unwrap();
        assert_eq!(ann.len(), 62);
        assert_eq!(ann, brute_annulus(VertexId(17), &p));
        assert_eq!(annulus_size(&p), 62);

        let p = params(2, 10, 0.1, 0.4);
        let ann = annulus(VertexId(0), &p).unwrap();
        assert_eq!(ann.len(), 80);
        assert_eq!(ann, brute_annulus(VertexId(0), &p));
        assert_eq!(annulus_size(&p), 80);
    }

    #[test]
    fn empty_window() {
        let p = params(1, 3, 0.4, 0.45);
        assert!(p.window().is_empty());
        assert!(annulus(VertexId(0), &p).unwrap().is_empty());
        assert_eq!(annulus_size(&p), 0);
    }

    #[test]
    fn annulus_density_approaches_gamma() {
        for n in [100u32, 1000, 10000] {
            let p = params(1, n, 0.1, 0.4);
            let ratio = annulus_size(&p) as f64 / n as f64;
            assert!((ratio - p.gamma()).abs() <= 4.0 / n as f64, "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(1, 2, 0.1, 0.4, 1.0, 0.0, 0).is_err());
        assert!(ModelParams::new(1, 10, 0.4, 0.1, 1.0, 0.0, 0).is_err());
        assert!(ModelParams::new(1, 10, 0.1, 0.5, 1.0, 0.0, 0).is_err());
        assert!(ModelParams::new(1, 10, 0.1, 0.4, -1.0, 0.0, 0).is_err());
        // p_n = 100 / 10 > 1
        assert!(ModelParams::new(1, 10, 0.1, 0.4, 100.0, 0.0, 0).is_err());
        assert!(ModelParams::new(0, 10, 0.1, 0.4, 1.0, 0.0, 0).is_err());
        assert!(ModelParams::new(3, 2000, 0.1, 0.4, 1.0, 0.0, 0).is_err());
        let p = ModelParams::new(1, 100, 0.1, 0.4, 1.0, 0.0, 0).unwrap();
        assert!((p.p_n() - 0.01).abs() < 1e-15);
        assert!((p.gamma() - 0.6).abs() < 1e-12);
        assert!(p.gamma_gt_half());
    }

    #[test]
    fn neighbors_small_tori() {
        let t = Torus::new(1, 3).unwrap();
        assert_eq!(t.neighbors(VertexId(0)), vec![VertexId(1), VertexId(2)]);
        let t = Torus::new(2, 4).unwrap();
        let nb = t.neighbors(t.encode(&[0, 0]).unwrap());
        let expect: Vec<VertexId> = [[0, 1], [0, 3], [1, 0], [3, 0]]
            .iter()
            .map(|c| t.encode(c).unwrap())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(nb, expect);
    }

    fn small_params() -> impl Strategy<Value = ModelParams> {
        (1u32..=3, 3u32..=256, 0.01f64..0.45, 0.0f64..1.0).prop_filter_map("valid", |(d, n, a, frac)| {
            let n = match d {
                1 => n,
                2 => n.min(40),
                _ => n.min(12),
            };
            let b = a + (0.4999 - a) * frac;
            ModelParams::new(d, n, a, b, 0.0, 0.0, 0).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn encode_decode_roundtrip(p in small_params(), raw in any::<u32>()) {
            let t = p.torus();
            let v = VertexId(raw % t.vertex_count() as u32);
            prop_assert_eq!(t.encode(&t.decode(v)).unwrap(), v);
        }

        #[test]
        fn distance_symmetric_and_bounded(p in small_params(), a in any::<u32>(), b in any::<u32>()) {
            let t = p.torus();
            let count = t.vertex_count() as u32;
            let (u, v) = (VertexId(a % count), VertexId(b % count));
            let duv = t.distance(u, v);
            prop_assert_eq!(duv, t.distance(v, u));
            prop_assert!(duv <= p.n / 2);
            prop_assert_eq!(duv == 0, u == v);
        }

        #[test]
        fn annulus_size_matches_every_start(p in small_params(), a in any::<u32>(), b in any::<u32>()) {
            let count = p.vertex_count() as u32;
            let (u, v) = (VertexId(a % count), VertexId(b % count));
            let ann_u = annulus(u, &p).unwrap();
            prop_assert_eq!(ann_u.len() as u64, annulus_size(&p));
            prop_assert!(!ann_u.contains(&u));
            let ann_v = annulus(v, &p).unwrap();
            prop_assert_eq!(ann_u.binary_search(&v).is_ok(), ann_v.binary_search(&u).is_ok());
        }
    }
}
