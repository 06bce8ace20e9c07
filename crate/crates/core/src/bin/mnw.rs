use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mnw_core::bounds::{
    check_ld_bounds, conductance_exact, conductance_sweep_with, diameter_bound_from, empty_box_scan,
    isoperimetric_exact, LdGrid, BRUTE_MAX_VERTICES,
};
use mnw_core::format::{load_edge_list, write_edge_list};
use mnw_core::gen::{generate, generate_original_nw, generate_reference};
use mnw_core::graph::{diameter, distance_histogram, write_histogram_csv, DiameterMode, Graph};
use mnw_core::harness::{
    empty_box_frequency, fit_polylog_exponent, read_records, run_scan, run_scan_to, write_records, ExperimentConfig,
    FitOptions, Response,
};
use mnw_core::torus::{ModelParams, VertexId};
use mnw_core::walk::{
    mixing_time, spectral_gap_with, tv_curve, upper_bound_from_gap, write_tv_curve_csv, MixingOptions, PowerOptions,
    Starts,
};
use mnw_core::{Error, Result};

/// Modified Newman-Watts small-world graphs: generation, diameter, lazy-walk
/// mixing, isoperimetric bounds and scaling sweeps.
#[derive(Parser)]
#[command(name = "mnw", version)]
struct Cli {
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "MNW_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph and write its edge list.
    Generate(GenerateArgs),
    /// Hop diameter of a graph file.
    Diameter(DiameterArgs),
    /// Mixing time of the lazy random walk.
    Mix(MixArgs),
    /// Spectral gap and the mixing-time upper bound it implies.
    Spectral(SpectralArgs),
    /// Conductance, isoperimetric constant and the diameter bound.
    Bounds(BoundsArgs),
    /// Empty-box scan of one graph, or existence frequency over many.
    Boxes(BoxesArgs),
    /// Run an experiment config and write scaling records.
    Scan(ScanArgs),
    /// Fit the polylog exponent of a response in a records file.
    Fit(FitArgs),
    /// Compare exact binomial tails with large-deviation bounds.
    Ldcheck(LdcheckArgs),
}

#[derive(Args, Default)]
struct ModelArgs {
    /// TOML or JSON file with model parameters; flags override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelParams> {
        let mut p = match &self.params {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                if path.extension().is_some_and(|e| e == "json") {
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                } else {
                    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
            }
            None => {
                let missing = |name: &str| Error::Config(format!("missing --{name} (or --params)"));
                ModelParams {
                    d: self.d.unwrap_or(1),
                    n: self.n.ok_or_else(|| missing("n"))?,
                    alpha: self.alpha.ok_or_else(|| missing("alpha"))?,
                    beta: self.beta.ok_or_else(|| missing("beta"))?,
                    sigma: self.sigma.ok_or_else(|| missing("sigma"))?,
                    zeta: self.zeta.ok_or_else(|| missing("zeta"))?,
                    seed: 0,
                }
            }
        };
        p.d = self.d.unwrap_or(p.d);
        p.n = self.n.unwrap_or(p.n);
        p.alpha = self.alpha.unwrap_or(p.alpha);
        p.beta = self.beta.unwrap_or(p.beta);
        p.sigma = self.sigma.unwrap_or(p.sigma);
        p.zeta = self.zeta.unwrap_or(p.zeta);
        p.seed = self.seed.unwrap_or(p.seed);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum ModelKind {
    #[default]
    Modified,
    Original,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum Sampler {
    #[default]
    Fast,
    Reference,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value_t)]
    kind: ModelKind,
    /// Poisson mean per vertex for `--kind original`.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    sampler: Sampler,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Default, PartialEq)]
enum Mode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Args)]
struct DiameterArgs {
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    mode: Mode,
    /// Sources for sampled mode.
    #[arg(long, default_value_t = 32)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a `distance,count` histogram over all (exact) or sampled sources.
    #[arg(long)]
    hist: Option<PathBuf>,
    /// JSON report; the bare value is printed otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Default, PartialEq)]
enum StartsArg {
    #[default]
    All,
    Sample,
}

#[derive(Args)]
struct MixArgs {
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    starts: StartsArg,
    #[arg(long, default_value_t = 32)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1 << 24)]
    max_steps: u64,
    #[arg(long, default_value_t = 4096)]
    all_starts_max_vertices: usize,
    /// Write the `t,tv` curve of the worst start up to `T_mix`.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectralArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iterations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iterations: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoxesArgs {
    /// Graph file to scan. Without it, `--trials` graphs are sampled.
    graph: Option<PathBuf>,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    trials: Option<u32>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    params: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Records CSV, resumed if present. Falls back to the config's output,
    /// then to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail instead of skipping measurements that hit a resource cap.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResponseArg {
    Diameter,
    Tmix,
}

#[derive(Args)]
struct FitArgs {
    records: PathBuf,
    #[arg(long, value_enum)]
    response: ResponseArg,
    #[arg(long, default_value_t = 1000)]
    resamples: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LdcheckArgs {
    /// Grid file (TOML or JSON); the default grid otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Include every grid point in the JSON, not only the summaries.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Writes pretty JSON to `out`, or to stdout.
fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{text}").and_then(|_| w.flush()).map_err(io_err(path))
        }
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}").and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_err(Path::new("<stdout>"))(e)),
                _ => Ok(()),
            }
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    Graph::build(&load_edge_list(path)?)
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let edges = match args.kind {
        ModelKind::Original => {
            let n = args.model.n.ok_or_else(|| Error::Config("missing --n".into()))?;
            let p = args.p.ok_or_else(|| Error::Config("missing --p".into()))?;
            generate_original_nw(n, p, args.model.seed.unwrap_or(0))?
        }
        ModelKind::Modified => {
            let params = args.model.resolve()?;
            match args.sampler {
                Sampler::Fast => generate(&params)?,
                Sampler::Reference => generate_reference(&params)?,
            }
        }
    };
    match &args.out {
        Some(path) => write_edge_list(&edges, create(path)?).map_err(io_err(path)),
        None => write_edge_list(&edges, std::io::stdout().lock()).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn cmd_diameter(args: &DiameterArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let mode = match args.mode {
        Mode::Exact => DiameterMode::Exact,
        Mode::Sampled => DiameterMode::Sampled {
            sources: args.k,
            seed: args.seed,
        },
    };
    let diam = diameter(&g, mode);
    if let Some(path) = &args.hist {
        let sources: Vec<VertexId> = match args.mode {
            Mode::Exact => (0..g.vertex_count() as u32).map(VertexId).collect(),
            Mode::Sampled => mnw_core::graph::sample_sources(g.vertex_count(), args.k, args.seed),
        };
        let hist = distance_histogram(&g, &sources)?;
        write_histogram_csv(&hist, create(path)?).map_err(io_err(path))?;
    }
    match &args.out {
        Some(path) => emit_json(&diam, Some(path)),
        None => {
            println!("{}", diam.value);
            Ok(())
        }
    }
}

fn cmd_mix(args: &MixArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let starts = match args.starts {
        StartsArg::All => Starts::All,
        StartsArg::Sample => Starts::Sample {
            k: args.k,
            seed: args.seed,
        },
    };
    let opts = MixingOptions {
        max_steps: args.max_steps,
        all_starts_max_vertices: args.all_starts_max_vertices,
    };
    let result = mixing_time(&g, &starts, &opts)?;
    if let Some(path) = &args.curve {
        let curve = tv_curve(&g, result.worst_start, result.t_mix)?;
        write_tv_curve_csv(&curve, create(path)?).map_err(io_err(path))?;
    }
    match &args.out {
        Some(path) => emit_json(&result, Some(path)),
        None => {
            let label = if result.exact { "" } else { " (lower bound)" };
            println!("{}{label}", result.t_mix);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SpectralReport {
    gap: f64,
    lambda1: f64,
    iterations: u64,
    pi_min: f64,
    t_mix_upper_bound: f64,
}

fn cmd_spectral(args: &SpectralArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let s = spectral_gap_with(
        &g,
        &PowerOptions {
            tol: args.tol,
            max_iterations: args.max_iterations,
            seed: args.seed,
        },
    )?;
    let bound = upper_bound_from_gap(&g, s.gap);
    emit_json(
        &SpectralReport {
            gap: s.gap,
            lambda1: s.lambda1,
            iterations: s.iterations,
            pi_min: bound.pi_min,
            t_mix_upper_bound: bound.bound,
        },
        args.out.as_deref(),
    )
}

#[derive(Serialize)]
struct BoundsReport {
    vertex_count: usize,
    gap: f64,
    conductance_exact: Option<mnw_core::bounds::IsoperimetryResult>,
    isoperimetric_exact: Option<mnw_core::bounds::IsoperimetryResult>,
    conductance_bracket: mnw_core::bounds::ConductanceBracket,
    cheeger_lower: f64,
    cheeger_upper: f64,
    diameter_bound: mnw_core::bounds::DiameterBoundReport,
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let spectral = spectral_gap_with(
        &g,
        &PowerOptions {
            tol: args.tol,
            max_iterations: args.max_iterations,
            seed: 0,
        },
    )?;
    let small = g.vertex_count() <= BRUTE_MAX_VERTICES;
    let h = small.then(|| conductance_exact(&g)).transpose()?;
    let iota = small.then(|| isoperimetric_exact(&g)).transpose()?;
    let bracket = conductance_sweep_with(&g, &spectral, args.tol);
    let h_for_cheeger = h.as_ref().map_or(bracket.upper.value, |h| h.value);
    let diameter_bound = match &iota {
        Some(i) => diameter_bound_from(&g, i.value, true),
        None => diameter_bound_from(&g, spectral.gap * (1.0 - 4.0 * args.tol) * g.min_degree() as f64, false),
    };
    emit_json(
        &BoundsReport {
            vertex_count: g.vertex_count(),
            gap: spectral.gap,
            cheeger_lower: h_for_cheeger * h_for_cheeger / 2.0,
            cheeger_upper: 2.0 * h_for_cheeger,
            conductance_exact: h,
            isoperimetric_exact: iota,
            conductance_bracket: bracket,
            diameter_bound,
        },
        args.out.as_deref(),
    )
}

fn cmd_boxes(args: &BoxesArgs) -> Result<()> {
    match (&args.graph, args.trials) {
        (Some(path), None) => emit_json(&empty_box_scan(&load_edge_list(path)?, args.r)?, args.out.as_deref()),
        (None, Some(trials)) => {
            let params = args.model.resolve()?;
            emit_json(&empty_box_frequency(&params, args.r, trials)?, args.out.as_deref())
        }
        _ => Err(Error::Config("give either a graph file or --trials".into())),
    }
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.params)?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    config.caps.strict |= args.strict;
    match args.out.clone().or_else(|| config.output.clone()) {
        Some(path) => run_scan_to(&config, &path).map(|_| ()),
        None => write_records(&run_scan(&config)?, std::io::stdout().lock()),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let records = read_records(&args.records)?;
    let response = match args.response {
        ResponseArg::Diameter => Response::Diameter,
        ResponseArg::Tmix => Response::Tmix,
    };
    let opts = FitOptions {
        resamples: args.resamples,
        seed: args.seed,
        ..FitOptions::default()
    };
    emit_json(&fit_polylog_exponent(&records, response, &opts)?, args.out.as_deref())
}

fn cmd_ldcheck(args: &LdcheckArgs) -> Result<()> {
    let grid: LdGrid = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            if path.extension().is_some_and(|e| e == "json") {
                serde_json::from_str(&text)?
            } else {
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
        }
        None => LdGrid::default(),
    };
    let mut report = check_ld_bounds(&grid)?;
    if !args.full {
        report.checks.retain(|c| c.violated);
    }
    for s in &report.summaries {
        eprintln!(
            "{:?}: {} evaluated, {} violations, {} of {} asserted points violated",
            s.form, s.evaluated, s.violations, s.asserted_violations, s.asserted
        );
    }
    emit_json(&report, args.out.as_deref())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_validation() => 2,
        Error::ResourceCap(_) | Error::NoConvergence { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Diameter(a) => cmd_diameter(a),
        Command::Mix(a) => cmd_mix(a),
        Command::Spectral(a) => cmd_spectral(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Boxes(a) => cmd_boxes(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Ldcheck(a) => cmd_ldcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
