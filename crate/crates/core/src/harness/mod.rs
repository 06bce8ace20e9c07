//! Experiment runner: parameter sweeps, scaling records, polylog fits and the
//! empty-box frequency study.

mod config;
mod fit;
mod records;
mod scan;

pub use config::{Caps, ExperimentConfig, Grid, Measurements};
pub use fit::{fit_polylog_exponent, median, FitOptions, PolylogFit, Response};
pub use records::{read_records, write_records, RecordWriter, ScalingRecord, RECORDS_VERSION_LINE};
pub use scan::{empty_box_frequency, measure_replicate, replicate_seed, run_scan, run_scan_to, BoxFrequency};
