use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::records::{same_cell, write_records, RecordWriter, ScalingRecord};
use crate::bounds::{box_side, empty_box_scan};
use crate::error::{Error, Result};
use crate::gen::generate;
use crate::graph::{diameter, max_degree, DiameterMode, Graph};
use crate::rng::derive_seed;
use crate::torus::ModelParams;
use crate::walk::{mixing_time, spectral_gap_with, MixingOptions, PowerOptions, Starts};

/// `base ⊕ hash(cell, replicate)`.
pub fn replicate_seed(base: u64, cell: &ModelParams, replicate: u32) -> u64 {
    derive_seed(
        base,
        &[
            cell.d as u64,
            cell.n as u64,
            cell.alpha.to_bits(),
            cell.beta.to_bits(),
            cell.sigma.to_bits(),
            cell.zeta.to_bits(),
            replicate as u64,
        ],
    )
}

/// A measurement that could not run. Strict mode turns it into an error.
fn skip(notes: &mut Vec<String>, strict: bool, err: Error, what: &str) -> Result<()> {
    match err {
        Error::ResourceCap(_) | Error::NoConvergence { .. } if !strict => {
            notes.push(format!("{what} skipped: {err}"));
            Ok(())
        }
        Error::NoConvergence { .. } => Err(Error::ResourceCap(format!("{what}: {err}"))),
        other => Err(other),
    }
}

/// Generates one replicate of `cell` and runs the configured measurements.
pub fn measure_replicate(config: &ExperimentConfig, cell: &ModelParams, replicate: u32) -> Result<ScalingRecord> {
    let started = Instant::now();
    let caps = &config.caps;
    let m = &config.measure;
    let seed = replicate_seed(config.base_seed, cell, replicate);
    let params = cell.with_seed(seed);
    let edges = generate(&params)?;
    let g = Graph::build(&edges)?;
    let count = g.vertex_count();
    let mut notes = Vec::new();

    let mut record = ScalingRecord {
        d: cell.d,
        n: cell.n,
        alpha: cell.alpha,
        beta: cell.beta,
        sigma: cell.sigma,
        zeta: cell.zeta,
        replicate,
        seed,
        vertex_count: count as u64,
        long_edges: edges.long_edges.len() as u64,
        diameter: None,
        diameter_exact: None,
        t_mix: None,
        t_mix_exact: None,
        gap: None,
        max_degree: None,
        boxes: String::new(),
        note: String::new(),
        wall_ms: 0,
    };

    if m.diameter {
        let mode = if count <= caps.diameter_exact_max_vertices {
            DiameterMode::Exact
        } else {
            notes.push(format!("diameter sampled from {} sources", caps.diameter_sample_sources));
            DiameterMode::Sampled {
                sources: caps.diameter_sample_sources,
                seed,
            }
        };
        let diam = diameter(&g, mode);
        record.diameter = Some(diam.value);
        record.diameter_exact = Some(diam.exact);
    }

    if m.mixing {
        if count > caps.mixing_max_vertices {
            skip(
                &mut notes,
                caps.strict,
                Error::ResourceCap(format!("{count} vertices above mixing cap {}", caps.mixing_max_vertices)),
                "mixing",
            )?;
        } else {
            let starts = if count <= caps.mixing_all_starts_max_vertices {
                Starts::All
            } else {
                Starts::Sample {
                    k: caps.mixing_sample_starts,
                    seed,
                }
            };
            let opts = MixingOptions {
                max_steps: caps.mixing_max_steps,
                all_starts_max_vertices: caps.mixing_all_starts_max_vertices,
            };
            match mixing_time(&g, &starts, &opts) {
                Ok(r) => {
                    record.t_mix = Some(r.t_mix);
                    record.t_mix_exact = Some(r.exact);
                }
                Err(e) => skip(&mut notes, caps.strict, e, "mixing")?,
            }
        }
    }

    if m.gap {
        if count > caps.gap_max_vertices {
            skip(
                &mut notes,
                caps.strict,
                Error::ResourceCap(format!("{count} vertices above gap cap {}", caps.gap_max_vertices)),
                "gap",
            )?;
        } else {
            let opts = PowerOptions {
                tol: caps.gap_tolerance,
                max_iterations: caps.gap_max_iterations,
                seed,
            };
            match spectral_gap_with(&g, &opts) {
                Ok(s) => record.gap = Some(s.gap),
                Err(e) => skip(&mut notes, caps.strict, e, "gap")?,
            }
        }
    }

    if m.max_degree {
        record.max_degree = Some(max_degree(&g));
    }

    let mut boxes = Vec::new();
    for &r in &m.boxes {
        match empty_box_scan(&edges, r) {
            Ok(scan) => boxes.push(format!("{r}={}", scan.origins.len())),
            Err(e) => notes.push(format!("boxes r={r} skipped: {e}")),
        }
    }
    record.boxes = boxes.join(";");
    record.note = notes.join(";");
    record.wall_ms = started.elapsed().as_millis() as u64;
    Ok(record)
}

fn run_cell(config: &ExperimentConfig, cell: &ModelParams) -> Result<Vec<ScalingRecord>> {
    log::info!("cell d={} n={} sigma={} zeta={}", cell.d, cell.n, cell.sigma, cell.zeta);
    (0..config.replicates)
        .into_par_iter()
        .map(|rep| measure_replicate(config, cell, rep))
        .collect()
}

/// Runs every cell in canonical order and returns one record per
/// (cell, replicate).
pub fn run_scan(config: &ExperimentConfig) -> Result<Vec<ScalingRecord>> {
    config.validate()?;
    let mut out = Vec::new();
    for cell in config.cells()? {
        out.extend(run_cell(config, &cell)?);
    }
    Ok(out)
}

fn complete(records: &[ScalingRecord], cell: &ModelParams, replicates: u32) -> bool {
    (0..replicates).all(|rep| records.iter().any(|r| r.replicate == rep && same_cell(&r.cell(), cell)))
}

/// [`run_scan`] writing to a records CSV. Cells already complete in an
/// existing file are not rerun; each new cell is appended in one write.
/// Rows of incomplete cells left by an interrupted run are dropped first.
pub fn run_scan_to(config: &ExperimentConfig, path: &Path) -> Result<Vec<ScalingRecord>> {
    config.validate()?;
    let cells = config.cells()?;
    let (writer, existing) = RecordWriter::open(path)?;
    let keep: Vec<ScalingRecord> = existing
        .iter()
        .filter(|r| {
            let c = r.cell();
            !cells.iter().any(|cell| same_cell(cell, &c)) || complete(&existing, &c, config.replicates)
        })
        .cloned()
        .collect();
    let mut writer = if keep.len() != existing.len() {
        drop(writer);
        let tmp = path.with_extension("csv.tmp");
        let file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        write_records(&keep, std::io::BufWriter::new(file))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
        RecordWriter::open(path)?.0
    } else {
        writer
    };

    let mut out = Vec::new();
    for cell in &cells {
        if complete(&keep, cell, config.replicates) {
            let mut done: Vec<ScalingRecord> = keep
                .iter()
                .filter(|r| same_cell(&r.cell(), cell) && r.replicate < config.replicates)
                .cloned()
                .collect();
            done.sort_by_key(|r| r.replicate);
            done.dedup_by_key(|r| r.replicate);
            out.extend(done);
            continue;
        }
        let fresh = run_cell(config, cell)?;
        writer.append_cell(&fresh)?;
        out.extend(fresh);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxFrequency {
    pub params: ModelParams,
    pub r: f64,
    pub side: u32,
    pub trials: u32,
    pub successes: u32,
    pub frequency: f64,
}

/// Fraction of `trials` independent graphs with at least one empty box.
/// Trial `t` uses seed `params.seed ⊕ hash(t)`.
pub fn empty_box_frequency(params: &ModelParams, r: f64, trials: u32) -> Result<BoxFrequency> {
    params.validate()?;
    let side = box_side(params.n, r)?;
    if trials == 0 {
        return Err(Error::InvalidParams("need at least one trial".into()));
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u32> {
            let edges = generate(&params.with_seed(derive_seed(params.seed, &[t as u64])))?;
            Ok(empty_box_scan(&edges, r)?.exists() as u32)
        })
        .collect::<Result<Vec<u32>>>()?
        .into_iter()
        .sum::<u32>();
    Ok(BoxFrequency {
        params: *params,
        r,
        side,
        trials,
        successes,
        frequency: successes as f64 / trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::all_eccentricities;
    use crate::harness::read_records;

    fn config(toml_text: &str) -> ExperimentConfig {
        toml::from_str(toml_text).unwrap()
    }

    const TORI: &str = r#"
        replicates = 2
        base_seed = 5
        [grid]
        d = [1, 2]
        n = [9, 16]
        alpha = [0.1]
        beta = [0.4]
        sigma = [0.0]
        zeta = [0.0]
    "#;

    #[test]
    fn pure_torus_diameter_is_d_half_n() {
        let records = run_scan(&config(TORI)).unwrap();
        assert_eq!(records.len(), 8);
        for r in &records {
            let p = r.cell();
            let g = Graph::build(&generate(&p).unwrap()).unwrap();
            let oracle = all_eccentricities(&g).into_iter().max().unwrap();
            assert_eq!(r.diameter, Some(oracle));
            assert_eq!(r.diameter, Some(r.d * (r.n / 2)));
            assert_eq!(r.diameter_exact, Some(true));
            assert_eq!(r.max_degree, Some(2 * r.d));
        }
    }

    #[test]
    fn empty_grid_gives_nothing() {
        let c = config(&TORI.replace("n = [9, 16]", "n = []"));
        assert!(run_scan(&c).unwrap().is_empty());
    }

    fn strip_wall(mut rs: Vec<ScalingRecord>) -> Vec<ScalingRecord> {
        rs.iter_mut().for_each(|r| r.wall_ms = 0);
        rs
    }

    const SMALL: &str = r#"
        replicates = 3
        base_seed = 17
        [grid]
        n = [40, 64]
        alpha = [0.1]
        beta = [0.4]
        sigma = [2.0]
        zeta = [1.0]
        [measure]
        mixing = true
        gap = true
        boxes = [0.5, 5.0]
    "#;

    #[test]
    fn rerun_is_identical_and_resumes() {
        let c = config(SMALL);
        let a = strip_wall(run_scan(&c).unwrap());
        let b = strip_wall(run_scan(&c).unwrap());
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.t_mix_exact == Some(true) && r.gap.is_some()));
        assert!(a[0].note.contains("boxes r=5 skipped"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let first = strip_wall(run_scan_to(&c, &path).unwrap());
        assert_eq!(first, a);
        let bytes = std::fs::read(&path).unwrap();
        // rerun touches nothing
        let second = strip_wall(run_scan_to(&c, &path).unwrap());
        assert_eq!(second, a);
        assert_eq!(std::fs::read(&path).unwrap(), bytes);

        // torn last cell is rerun
        let mut rows = read_records(&path).unwrap();
        rows.truncate(4);
        write_records(&rows, std::fs::File::create(&path).unwrap()).unwrap();
        let third = strip_wall(run_scan_to(&c, &path).unwrap());
        assert_eq!(third, a);
        assert_eq!(strip_wall(read_records(&path).unwrap()), a);
    }

    #[test]
    fn caps_skip_or_fail() {
        let lenient = config(&format!("{SMALL}\n[caps]\nmixing_max_vertices = 50\n"));
        let rs = run_scan(&lenient).unwrap();
        assert!(rs.iter().filter(|r| r.n == 64).all(|r| r.t_mix.is_none() && r.note.contains("mixing skipped")));
        assert!(rs.iter().filter(|r| r.n == 40).all(|r| r.t_mix.is_some()));

        let strict = config(&format!("{SMALL}\n[caps]\nmixing_max_vertices = 50\nstrict = true\n"));
        assert!(matches!(run_scan(&strict), Err(Error::ResourceCap(_))));

        let sampled = config(&format!("{SMALL}\n[caps]\nmixing_all_starts_max_vertices = 50\ndiameter_exact_max_vertices = 50\n"));
        for r in run_scan(&sampled).unwrap().iter().filter(|r| r.n == 64) {
            assert_eq!(r.t_mix_exact, Some(false));
            assert_eq!(r.diameter_exact, Some(false));
        }
    }

    #[test]
    fn box_frequency_extremes() {
        let quiet = ModelParams::new(1, 256, 0.1, 0.4, 0.0, 0.0, 3).unwrap();
        assert_eq!(empty_box_frequency(&quiet, 0.5, 10).unwrap().frequency, 1.0);
        // about 100 long edges per vertex
        let busy = ModelParams::new(1, 256, 0.1, 0.4, 150.0, 0.0, 3).unwrap();
        assert_eq!(empty_box_frequency(&busy, 0.5, 10).unwrap().frequency, 0.0);
        assert!(empty_box_frequency(&quiet, 10.0, 10).is_err());
    }
}
