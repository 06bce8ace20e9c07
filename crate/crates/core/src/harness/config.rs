use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::ModelParams;

/// Lists of parameter values; cells are their Cartesian product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(default = "one")]
    pub d: Vec<u32>,
    pub n: Vec<u32>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub zeta: Vec<f64>,
}

fn one() -> Vec<u32> {
    vec![1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Measurements {
    pub diameter: bool,
    pub mixing: bool,
    pub gap: bool,
    pub max_degree: bool,
    /// Box exponents `r` for the empty-box probe.
    pub boxes: Vec<f64>,
}

impl Default for Measurements {
    fn default() -> Self {
        Measurements {
            diameter: true,
            mixing: false,
            gap: false,
            max_degree: true,
            boxes: Vec::new(),
        }
    }
}

/// Vertex-count limits per measurement. Above a limit a measurement is either
/// downgraded to a sampled lower bound or skipped; in strict mode either one
/// is an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub diameter_exact_max_vertices: usize,
    pub diameter_sample_sources: usize,
    pub mixing_all_starts_max_vertices: usize,
    pub mixing_max_vertices: usize,
    pub mixing_sample_starts: usize,
    pub mixing_max_steps: u64,
    pub gap_max_vertices: usize,
    pub gap_max_iterations: u64,
    pub gap_tolerance: f64,
    pub strict: bool,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            diameter_exact_max_vertices: 1 << 22,
            diameter_sample_sources: 32,
            mixing_all_starts_max_vertices: 4096,
            mixing_max_vertices: 1 << 18,
            mixing_sample_starts: 32,
            mixing_max_steps: 1 << 24,
            gap_max_vertices: 1 << 18,
            gap_max_iterations: 200_000,
            gap_tolerance: 1e-9,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: Grid,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub measure: Measurements,
    #[serde(default)]
    pub caps: Caps,
    /// Records CSV; resumed if it already exists.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_replicates() -> u32 {
    1
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.measure.boxes.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("box exponents must be finite".into()));
        }
        self.cells().map(|_| ())
    }

    /// Grid cells in canonical order (`d` outermost, `ζ` innermost), each
    /// validated. Cell seeds are left at zero.
    pub fn cells(&self) -> Result<Vec<ModelParams>> {
        let g = &self.grid;
        let mut cells = Vec::new();
        for &d in &g.d {
            for &n in &g.n {
                for &alpha in &g.alpha {
                    for &beta in &g.beta {
                        for &sigma in &g.sigma {
                            for &zeta in &g.zeta {
                                let cell = ModelParams {
                                    d,
                                    n,
                                    alpha,
                                    beta,
                                    sigma,
                                    zeta,
                                    seed: 0,
                                };
                                cell.validate()?;
                                cells.push(cell);
                            }
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}
