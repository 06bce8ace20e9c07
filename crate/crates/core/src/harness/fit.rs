use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::records::{same_cell, ScalingRecord};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, STREAM_BOOTSTRAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Diameter,
    Tmix,
}

impl Response {
    fn of(self, r: &ScalingRecord) -> Option<f64> {
        match self {
            Response::Diameter => r.diameter.map(f64::from),
            Response::Tmix => r.t_mix.map(|t| t as f64),
        }
    }

    fn exact(self, r: &ScalingRecord) -> Option<bool> {
        match self {
            Response::Diameter => r.diameter_exact,
            Response::Tmix => r.t_mix_exact,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub resamples: u32,
    pub seed: u64,
    pub min_distinct_n: usize,
    pub min_replicates: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            resamples: 1000,
            seed: 0,
            min_distinct_n: 4,
            min_replicates: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: u32,
    pub replicates: usize,
    pub median: f64,
    /// False if any contributing value is a lower bound.
    pub exact: bool,
}

/// `ln(median response) ≈ intercept + slope · ln ln n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolylogFit {
    pub response: Response,
    pub slope: f64,
    pub intercept: f64,
    /// 2.5 and 97.5 percentiles of the bootstrap slopes.
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: u32,
    pub points: Vec<FitPoint>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Ordinary least squares `(slope, intercept)`.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Linear-interpolated percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Fits the polylog exponent of `response` across `n`, with a bootstrap
/// confidence interval that resamples replicates within each `n`.
///
/// All records must come from the same `(d, α, β, σ, ζ)`.
pub fn fit_polylog_exponent(records: &[ScalingRecord], response: Response, opts: &FitOptions) -> Result<PolylogFit> {
    let Some(first) = records.first() else {
        return Err(Error::InsufficientData("no records".into()));
    };
    let reference = first.cell();
    for r in records {
        let mut c = r.cell();
        c.n = reference.n;
        if !same_cell(&c, &reference) {
            return Err(Error::InvalidParams(
                "records mix cells with different d, alpha, beta, sigma or zeta".into(),
            ));
        }
    }
    let mut groups: BTreeMap<u32, (Vec<f64>, bool)> = BTreeMap::new();
    for r in records {
        if let Some(v) = response.of(r) {
            if !(v > 0.0) {
                return Err(Error::InvalidParams(format!("response must be positive, got {v}")));
            }
            let entry = groups.entry(r.n).or_insert((Vec::new(), true));
            entry.0.push(v);
            entry.1 &= response.exact(r).unwrap_or(false);
        }
    }
    if groups.len() < opts.min_distinct_n {
        return Err(Error::InsufficientData(format!(
            "need {} distinct n, have {}",
            opts.min_distinct_n,
            groups.len()
        )));
    }
    if let Some((n, (v, _))) = groups.iter().find(|(_, (v, _))| v.len() < opts.min_replicates) {
        return Err(Error::InsufficientData(format!(
            "n = {n} has {} replicates, need {}",
            v.len(),
            opts.min_replicates
        )));
    }
    if groups.keys().any(|&n| n < 3) {
        return Err(Error::InvalidParams("ln ln n needs n >= 3".into()));
    }

    let xs: Vec<f64> = groups.keys().map(|&n| (n as f64).ln().ln()).collect();
    let points: Vec<FitPoint> = groups
        .iter()
        .map(|(&n, (v, exact))| FitPoint {
            n,
            replicates: v.len(),
            median: median(&mut v.clone()),
            exact: *exact,
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median.ln()).collect();
    let (slope, intercept) = ols(&xs, &ys);

    let mut rng = stream_rng(opts.seed, STREAM_BOOTSTRAP);
    let mut slopes = Vec::with_capacity(opts.resamples as usize);
    let mut buf = Vec::new();
    for _ in 0..opts.resamples {
        let ys: Vec<f64> = groups
            .values()
            .map(|(v, _)| {
                buf.clear();
                buf.extend((0..v.len()).map(|_| v[rng.random_range(0..v.len())]));
                median(&mut buf).ln()
            })
            .collect();
        slopes.push(ols(&xs, &ys).0);
    }
    slopes.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = if slopes.is_empty() {
        (slope, slope)
    } else {
        (percentile(&slopes, 0.025), percentile(&slopes, 0.975))
    };
    Ok(PolylogFit {
        response,
        slope,
        intercept,
        ci_low,
        ci_high,
        resamples: opts.resamples,
        points,
    })
}
