//! `sparse-landscape`: sample, recover and analyse variational cost
//! landscapes from the command line.
//!
//! Structured artifacts are JSON, plot data is CSV, and a one-line summary
//! goes to stdout. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sparse_landscape::circuit::{parse_basis_state, GenericCircuit, Observable};
use sparse_landscape::clifford::{closed_form_cost, DEFAULT_MAX_ROTATIONS};
use sparse_landscape::experiments::{
    concentration_bounds, gd_enhancement_experiment, gorge_experiment, oos_relative_mse, random_test_points,
    sparsity_scaling_experiment, EnhanceConfig, GdConfig, GorgeConfig, OptMode, OptRow, RecoveryRow, SparsityConfig,
    DEFAULT_TEST_POINTS,
};
use sparse_landscape::qaoa::{random_regular_graph, Graph, LatticeBound, QaoaInstance, QaoaOracle};
use sparse_landscape::sparse_recovery::{random_sample_grid, recover_from_samples, RecoverConfig, SampleSet};
use sparse_landscape::spectral::{sample_full_grid, sparsity, NyquistGrid, SampleFile, DEFAULT_GRID_BUDGET};
use sparse_landscape::statevector::DEFAULT_QUBIT_LIMIT;
use sparse_landscape::{Error, TrigPoly};

#[derive(Parser)]
#[command(name = "sparse-landscape", version, about = "Sparse recovery of variational cost landscapes")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random regular graph as JSON.
    Graph(GraphArgs),
    /// Sample a QAOA MaxCut landscape on its Nyquist grid.
    Sample(SampleArgs),
    /// Recover a trigonometric polynomial from a sample file.
    Recover(RecoverArgs),
    /// Sparsity of exact QAOA landscapes across sizes (CSV).
    Sparsity(SparsityArgs),
    /// Out-of-sample error of a polynomial against the QAOA oracle.
    Evaluate(EvaluateArgs),
    /// Gradient descent from a recovered optimum against random restarts.
    Optimize(OptimizeArgs),
    /// Narrow-gorge diagnostics on synthetic spikes.
    Gorge(GorgeArgs),
    /// Closed-form cost of a Clifford + rotation circuit.
    Clifford(CliffordArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Bound {
    Superset,
    Exact,
}

impl From<Bound> for LatticeBound {
    fn from(b: Bound) -> Self {
        match b {
            Bound::Superset => LatticeBound::Superset,
            Bound::Exact => LatticeBound::Exact,
        }
    }
}

#[derive(Args)]
struct QaoaArgs {
    /// Graph JSON file.
    #[arg(long)]
    graph: PathBuf,
    /// QAOA layers.
    #[arg(long)]
    p: usize,
    #[arg(long, value_enum, default_value_t = Bound::Superset)]
    bound: Bound,
    #[arg(long, default_value_t = DEFAULT_QUBIT_LIMIT)]
    qubit_limit: usize,
}

impl QaoaArgs {
    fn instance(&self) -> anyhow::Result<QaoaInstance> {
        let graph = Graph::from_json(&read(&self.graph)?).map_err(usage)?;
        QaoaInstance::with_qubit_limit(graph, self.p, self.qubit_limit).map_err(usage)
    }
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleMode {
    Grid,
    Random,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    qaoa: QaoaArgs,
    #[arg(long, value_enum)]
    mode: SampleMode,
    /// Number of random points (random mode).
    #[arg(long)]
    m: Option<usize>,
    /// Shots per point; exact expectation values when absent.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRID_BUDGET)]
    budget: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    samples: PathBuf,
    /// RecoverConfig JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    m_init: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    accept_ratio: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_scale: Option<f64>,
    #[arg(long)]
    n_fista: Option<usize>,
    #[arg(long)]
    alpha_fista: Option<f64>,
    /// TrigPoly JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Diagnostics JSON output.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct SparsityArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    p_list: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    graphs: usize,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = Bound::Superset)]
    bound: Bound,
    #[arg(long, default_value_t = DEFAULT_GRID_BUDGET)]
    budget: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    qaoa: QaoaArgs,
    /// TrigPoly JSON.
    #[arg(long)]
    poly: PathBuf,
    /// Training samples to keep out of the test set.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TEST_POINTS)]
    test_points: usize,
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
    #[arg(long)]
    seed: u64,
    /// Recovery-row CSV output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    qaoa: QaoaArgs,
    /// Recovery sample budget.
    #[arg(long, default_value_t = 400)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: u64,
    /// Optimisation-row CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Full report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GorgeArgs {
    #[arg(long, default_value_t = 2048)]
    max_freq: u32,
    #[arg(long, value_delimiter = ',')]
    bandwidths: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: u64,
    /// Gorge-row CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Concentration-bound check JSON (t = 2 and 5).
    #[arg(long)]
    concentration: Option<PathBuf>,
}

#[derive(Args)]
struct CliffordArgs {
    /// GenericCircuit JSON.
    #[arg(long)]
    circuit: PathBuf,
    /// Observable JSON.
    #[arg(long)]
    observable: PathBuf,
    /// Computational basis input; character q is qubit q. All zeros if absent.
    #[arg(long)]
    input: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_ROTATIONS)]
    max_rotations: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Marks an error as a usage error (exit code 2).
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<E: Into<anyhow::Error>>(e: E) -> anyhow::Error {
    anyhow::Error::new(Usage(e.into()))
}

/// Library errors that signal bad input rather than a failed computation.
fn classify(e: Error) -> anyhow::Error {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::Json(_)
        | Error::OffGrid(_)
        | Error::NonUnitPhase
        | Error::FrequencyOutOfRange(_)
        | Error::LatticeTooLarge { .. }
        | Error::TooManyQubits { .. } => usage(e),
        other => other.into(),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage(anyhow::anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Graph(a) => cmd_graph(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Sparsity(a) => cmd_sparsity(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Gorge(a) => cmd_gorge(a),
        Command::Clifford(a) => cmd_clifford(a),
    }
}

fn cmd_graph(a: GraphArgs) -> anyhow::Result<()> {
    let g = random_regular_graph(a.n, a.degree, a.seed).map_err(classify)?;
    write(&a.out, &g.to_json()?)?;
    println!("graph: {} vertices, {} edges", g.num_vertices(), g.num_edges());
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> anyhow::Result<()> {
    let inst = a.qaoa.instance()?;
    let lattice = inst.lattice(a.qaoa.bound.into()).map_err(classify)?;
    if a.shots == Some(0) {
        return Err(usage(anyhow::anyhow!("--shots must be positive")));
    }
    let oracle = QaoaOracle {
        instance: &inst,
        shots: a.shots,
        seed: a.seed,
    };
    let file = match a.mode {
        SampleMode::Grid => {
            let grid = NyquistGrid::new(lattice);
            let data = sample_full_grid(&oracle, &grid, a.budget).map_err(classify)?;
            SampleFile::from_grid(&data, a.shots, Some(a.seed))
        }
        SampleMode::Random => {
            let m = a.m.ok_or_else(|| usage(anyhow::anyhow!("random mode needs --m")))?;
            let idx = random_sample_grid(&lattice, m, a.seed).map_err(classify)?;
            SampleSet::from_oracle(&oracle, lattice, idx).map_err(classify)?.to_file(Some(a.seed))
        }
    };
    write(&a.out, &file.to_json()?)?;
    println!("sample: {} values", file.values.len());
    Ok(())
}

fn cmd_recover(a: RecoverArgs) -> anyhow::Result<()> {
    let mut config: RecoverConfig = match &a.config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(usage)?,
        None => RecoverConfig::default(),
    };
    if let Some(v) = a.m_init {
        config.m_init = v;
    }
    if let Some(v) = a.m_max {
        config.m_max = v;
    }
    if let Some(v) = a.holdout {
        config.holdout = v;
    }
    if let Some(v) = a.accept_ratio {
        config.accept_ratio = v;
    }
    if a.lambda.is_some() {
        config.bpdn.lambda = a.lambda;
    }
    if let Some(v) = a.lambda_scale {
        config.bpdn.lambda_scale = v;
    }
    if let Some(v) = a.n_fista {
        config.bpdn.n_fista = v;
    }
    if let Some(v) = a.alpha_fista {
        config.bpdn.alpha_fista = v;
    }
    config.bpdn.validate().map_err(classify)?;
    let file = SampleFile::from_json(&read(&a.samples)?).map_err(classify)?;
    let samples = SampleSet::from_file(&file).map_err(classify)?;
    let result = recover_from_samples(&samples, &config, a.seed).map_err(classify)?;
    write(&a.out, &result.poly.to_json()?)?;
    if let Some(d) = &a.diagnostics {
        write(d, &to_json(&result.diagnostics(&config, a.seed))?)?;
    }
    println!(
        "recover: m_used {} s {} oos_mse_rel {:.3e} accepted {}",
        result.m_used, result.support_size, result.oos_mse_rel, result.accepted
    );
    Ok(())
}

fn cmd_sparsity(a: SparsityArgs) -> anyhow::Result<()> {
    let mut config = SparsityConfig {
        degree: a.degree,
        bound: a.bound.into(),
        budget: a.budget,
        ..Default::default()
    };
    if let Some(t) = a.threshold {
        config.threshold = t;
    }
    if !(config.threshold > 0.0 && config.threshold < 1.0) {
        return Err(usage(anyhow::anyhow!("--threshold must lie in (0, 1)")));
    }
    let rows = sparsity_scaling_experiment(&a.n_list, &a.p_list, a.graphs, a.seed, &config).map_err(classify)?;
    write_csv(&a.out, &rows)?;
    println!("sparsity: {} rows", rows.len());
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let inst = a.qaoa.instance()?;
    let lattice = inst.lattice(a.qaoa.bound.into()).map_err(classify)?;
    let poly = TrigPoly::from_json(&read(&a.poly)?).map_err(classify)?;
    if poly.dims() != inst.num_params() {
        return Err(usage(anyhow::anyhow!(
            "polynomial has {} parameters, the instance {}",
            poly.dims(),
            inst.num_params()
        )));
    }
    let (exclude, m) = match &a.samples {
        Some(p) => {
            let file = SampleFile::from_json(&read(p)?).map_err(classify)?;
            let set = SampleSet::from_file(&file).map_err(classify)?;
            if set.lattice() != &lattice {
                return Err(usage(anyhow::anyhow!("sample file lattice differs from --bound")));
            }
            (set.indices().to_vec(), set.len())
        }
        None => (Vec::new(), 0),
    };
    let points = random_test_points(&lattice, a.test_points, &exclude, a.seed).map_err(classify)?;
    let oracle = QaoaOracle {
        instance: &inst,
        shots: None,
        seed: a.seed,
    };
    let (mse_rel, baseline_rel) = oos_relative_mse(&poly, &oracle, &points).map_err(classify)?;
    let row = RecoveryRow {
        n_qubits: inst.graph().num_vertices(),
        p: inst.layers(),
        m,
        mse_rel,
        baseline_rel,
        s: sparsity(&poly, a.threshold).map_err(classify)?,
        seed: a.seed,
    };
    write_csv(&a.out, &[row])?;
    println!("evaluate: mse_rel {mse_rel:.3e} baseline_rel {baseline_rel}");
    Ok(())
}

fn cmd_optimize(a: OptimizeArgs) -> anyhow::Result<()> {
    let inst = a.qaoa.instance()?;
    let mut gd = GdConfig::default();
    if let Some(s) = a.step {
        gd.step = s;
    }
    if let Some(i) = a.iters {
        gd.iters = i;
    }
    if !(gd.step > 0.0) || gd.iters == 0 || a.restarts == 0 || a.m == 0 {
        return Err(usage(anyhow::anyhow!("--step, --iters, --restarts and --m must be positive")));
    }
    let config = EnhanceConfig {
        m: a.m,
        restarts: a.restarts,
        gd,
        bound: a.qaoa.bound.into(),
        ..Default::default()
    };
    let report = gd_enhancement_experiment(&inst, &config, a.seed).map_err(classify)?;
    let mut rows = report.random_runs.clone();
    rows.push(OptRow {
        mode: OptMode::RecoveredPoly,
        restart: 0,
        rel_error: report.recovered_rel_error,
        quantum_calls: report.recovered_calls,
    });
    write_csv(&a.out, &rows)?;
    if let Some(p) = &a.report {
        write(p, &to_json(&report)?)?;
    }
    println!(
        "optimize: random median {:.3e}, recovered {:.3e}, refined {:.3e}",
        report.random_median, report.recovered_rel_error, report.refined.rel_error
    );
    Ok(())
}

fn cmd_gorge(a: GorgeArgs) -> anyhow::Result<()> {
    let mut config = GorgeConfig {
        max_freq: a.max_freq,
        trials: a.trials,
        n_shots: a.shots,
        ..Default::default()
    };
    if let Some(b) = a.bandwidths {
        config.bandwidths = b;
    }
    if let Some(m) = a.m_list {
        config.sample_sizes = m;
    }
    if config.bandwidths.iter().any(|&w| w > config.max_freq) {
        return Err(usage(anyhow::anyhow!("bandwidths must not exceed --max-freq")));
    }
    let rows = gorge_experiment(&config, a.seed).map_err(classify)?;
    write_csv(&a.out, &rows)?;
    if let Some(p) = &a.concentration {
        let checks = [2.0, 5.0]
            .iter()
            .enumerate()
            .map(|(i, &t)| concentration_bounds(50, 1.0, t, 10_000, a.seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(classify)?;
        write(p, &to_json(&checks)?)?;
    }
    let met = rows.iter().filter(|r| r.condition_met).count();
    println!("gorge: {} trials, condition met in {met}", rows.len());
    Ok(())
}

fn cmd_clifford(a: CliffordArgs) -> anyhow::Result<()> {
    let circuit = GenericCircuit::from_json(&read(&a.circuit)?).map_err(classify)?;
    let obs = Observable::from_json(&read(&a.observable)?).map_err(classify)?;
    let bits = match &a.input {
        Some(s) => {
            let (n, bits) = parse_basis_state(s).map_err(classify)?;
            if n != circuit.num_qubits() {
                return Err(usage(anyhow::anyhow!(
                    "input has {n} qubits, the circuit {}",
                    circuit.num_qubits()
                )));
            }
            bits
        }
        None => 0,
    };
    let poly = closed_form_cost(&circuit, &obs, bits, a.max_rotations).map_err(classify)?;
    write(&a.out, &poly.to_json()?)?;
    println!("clifford: {} stored coefficients", poly.num_stored());
    Ok(())
}
