use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use modal_probe::harness::instances::{generate_instance, random_band_pmf, InstanceKind, PairKind};
use modal_probe::harness::{calibrate, run_experiment, sweep, ExperimentConfig, TrialReport};
use modal_probe::kmodal::flat_decomposition_from_masses;
use modal_probe::lowerbound::{lift, simulate_sample, support_size_bound, MATERIALIZE_LIMIT};
use modal_probe::{
    construct_flat_decomposition, flatness_error, Family, IntervalPartition, LbTransform,
    Monotonicity, Pmf, PmfSampler, ProblemSpec, QMode, ReductionConfig, SampleSource, Task,
    TesterBudget,
};

/// Lifted outputs up to this size are embedded in JSON reports.
const EMBED_LIMIT: u64 = 1 << 20;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<modal_probe::Error> for CliError {
    fn from(e: modal_probe::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "modal-probe",
    version,
    about = "Identity testing and L1 estimation for monotone and k-modal distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo trials of the identity tester.
    Test(ExperimentArgs),
    /// Monte-Carlo trials of the L1 distance estimator.
    Estimate(ExperimentArgs),
    /// Flat interval decomposition of one distribution.
    Decompose(DecomposeArgs),
    /// Lift a band-limited distribution to a 2(k-1)-modal one.
    Lift(LiftArgs),
    /// Emit samples, one integer per line.
    Simulate(SimulateArgs),
    /// Sample counts of the reduction across domain sizes.
    Sweep(SweepArgs),
    /// Empirical completeness and soundness of the base testers.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    MonotoneInc,
    MonotoneDec,
    Kmodal,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// `q` is given explicitly.
    Known,
    /// `q` is only available through samples.
    Unknown,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    Same,
    Far,
}

#[derive(Clone, Copy, ValueEnum)]
enum InstanceArg {
    /// Random member of the chosen family.
    Natural,
    UniformHalfHard,
    Lifted,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Identity,
    Estimate,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_enum, default_value = "monotone-dec")]
    family: FamilyArg,
    /// Modality bound for the k-modal family.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value = "known")]
    variant: VariantArg,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

impl ProblemArgs {
    fn family(&self) -> Family {
        match self.family {
            FamilyArg::MonotoneInc => Family::MonotoneNonDecreasing,
            FamilyArg::MonotoneDec => Family::MonotoneNonIncreasing,
            FamilyArg::Kmodal => Family::Kmodal(self.k),
        }
    }

    fn q_mode(&self) -> QMode {
        match self.variant {
            VariantArg::Known => QMode::Explicit,
            VariantArg::Unknown => QMode::Sampled,
        }
    }

    fn spec(&self, task: Task) -> CliResult<ProblemSpec> {
        Ok(ProblemSpec::new(
            self.family(),
            task,
            self.q_mode(),
            self.eps,
            self.delta,
        )?)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "same")]
    pair: PairArg,
    /// Minimum distance of a far pair; defaults to `eps`.
    #[arg(long)]
    min_tv: Option<f64>,
    #[arg(long, value_enum, default_value = "natural")]
    instance: InstanceArg,
    /// Inner domain size of a lifted instance.
    #[arg(long, default_value_t = 4)]
    inner_n: usize,
    /// Transform parameter k of a lifted instance (output is 2(k-1)-modal).
    #[arg(long, default_value_t = 2)]
    lift_k: usize,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write zeros in the wall_ms column for byte-reproducible output.
    #[arg(long)]
    no_timing: bool,
    /// Read the whole experiment from a JSON file instead of flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// JSON distribution `{"n": .., "mass": [..]}`; a random one is generated otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decompose from the exact masses rather than from samples (k-modal only).
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct LiftArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Lower end of the band; defaults to 1/(2n).
    #[arg(long)]
    p_min: Option<f64>,
    /// Upper end of the band; defaults to 3/(2n).
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "monotone-dec")]
    family: FamilyArg,
    #[arg(long, default_value_t = 1_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Number of samples.
    #[arg(long, default_value_t = 1_000)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Push every sample through the lift with band [p-min, p-max].
    #[arg(long)]
    lift: bool,
    #[arg(long, default_value_t = 2)]
    lift_k: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "identity")]
    task: TaskArg,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1024,16384,262144,4194304"
    )]
    ns: Vec<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum, default_value = "identity")]
    task: TaskArg,
    #[arg(long, value_enum, default_value = "known")]
    variant: VariantArg,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256,1024")]
    ells: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the leading constant of the selected tester's budget.
    #[arg(long)]
    constant: Option<f64>,
    /// Overrides the estimator's inflation factor.
    #[arg(long)]
    inflation: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

fn task_of(t: TaskArg) -> Task {
    match t {
        TaskArg::Identity => Task::Identity,
        TaskArg::Estimate => Task::L1Estimate,
    }
}

fn sink(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_pmf(path: &Path) -> CliResult<Pmf> {
    let text = std::fs::read_to_string(path)?;
    Ok(Pmf::from_json(&text)?)
}

fn default_band(n: usize, p_min: Option<f64>, p_max: Option<f64>) -> (f64, f64) {
    let nf = n as f64;
    (p_min.unwrap_or(0.5 / nf), p_max.unwrap_or(1.5 / nf))
}

fn experiment_config(args: &ExperimentArgs, task: Task) -> CliResult<ExperimentConfig> {
    if let Some(path) = &args.config {
        let mut cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.problem.task = task;
        return Ok(cfg);
    }
    let problem = args.problem.spec(task)?;
    let instance = match args.instance {
        InstanceArg::Natural => ExperimentConfig::natural_instance(problem.family),
        InstanceArg::UniformHalfHard => InstanceKind::UniformHalfHard,
        InstanceArg::Lifted => {
            let (p_min, p_max) = default_band(args.inner_n, args.p_min, args.p_max);
            InstanceKind::Lifted {
                inner_n: args.inner_n,
                k: args.lift_k,
                p_min,
                p_max,
            }
        }
    };
    let pair = match args.pair {
        PairArg::Same => PairKind::Same,
        PairArg::Far => PairKind::Far {
            min_tv: args.min_tv.unwrap_or(problem.eps),
        },
    };
    Ok(ExperimentConfig {
        problem,
        n: args.n,
        trials: args.trials,
        seed: args.seed,
        instance,
        pair,
        reduction: ReductionConfig::default(),
        record_timing: !args.no_timing,
        threads: args.threads,
    })
}

fn summarize(report: &TrialReport) {
    let mut line = format!(
        "{} trials, mean samples {:.0}",
        report.rows.len(),
        report.mean_samples
    );
    if let Some(rate) = report.acceptance_rate {
        line += &format!(", acceptance rate {rate:.3}");
    }
    if let (Some(err), Some(cov)) = (report.mean_abs_error, report.coverage) {
        line += &format!(", mean |error| {err:.4}, coverage {cov:.3}");
    }
    line += &format!(
        ", max flatness p/q {:.4}/{:.4}",
        report.max_flatness_p, report.max_flatness_q
    );
    eprintln!("{line}");
}

fn run_trials(args: &ExperimentArgs, task: Task) -> CliResult<()> {
    let cfg = experiment_config(args, task)?;
    let report = run_experiment(&cfg)?;
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        FormatArg::Csv => report.write_csv(&mut w)?,
        FormatArg::Json => {
            report.write_json(&mut w)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    summarize(&report);
    Ok(())
}

fn write_partition_csv(w: &mut dyn Write, p: &Pmf, part: &IntervalPartition) -> CliResult<()> {
    writeln!(w, "lo,hi,mass")?;
    for iv in part.intervals() {
        writeln!(w, "{},{},{}", iv.lo(), iv.hi(), p.mass_of(*iv))?;
    }
    Ok(())
}

fn decompose(args: &DecomposeArgs) -> CliResult<()> {
    let family = args.problem.family();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let p = match &args.input {
        Some(path) => read_pmf(path)?,
        None => generate_instance(ExperimentConfig::natural_instance(family), args.n, &mut rng)?,
    };
    let n = p.len();
    let eps = args.problem.eps;
    let cfg = ReductionConfig::default();
    let (partition, extra) = match family {
        Family::Kmodal(k) => {
            let d = if args.exact {
                flat_decomposition_from_masses(&p, eps, k, &cfg.birge)?
            } else {
                let mut src = PmfSampler::new(&p, rng);
                construct_flat_decomposition(&mut src, n, eps, args.problem.delta, k, &cfg.birge)?
            };
            let verdicts: Vec<String> = d
                .verdicts
                .iter()
                .map(|v| format!("{v:?}").to_lowercase())
                .collect();
            let extra = json!({
                "samples_drawn": d.samples_drawn,
                "atomic_intervals": d.atomic.len(),
                "heavy_points": d.classification.heavy_points.len(),
                "verdicts": verdicts,
            });
            (d.partition, extra)
        }
        other => {
            let orientation: Monotonicity = other.monotonicity().expect("monotone family");
            (
                cfg.birge.partition(n, eps, orientation)?,
                json!({ "samples_drawn": 0 }),
            )
        }
    };
    let flatness = flatness_error(&p, &partition)?;
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        FormatArg::Csv => write_partition_csv(&mut *w, &p, &partition)?,
        FormatArg::Json => {
            let intervals: Vec<[usize; 2]> = partition
                .intervals()
                .iter()
                .map(|iv| [iv.lo(), iv.hi()])
                .collect();
            let doc = json!({
                "n": n,
                "eps": eps,
                "size": partition.len(),
                "flatness_error": flatness,
                "intervals": intervals,
                "details": extra,
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    eprintln!(
        "{} intervals, flatness error {flatness:.6}",
        partition.len()
    );
    Ok(())
}

fn lift_cmd(args: &LiftArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let n = match &args.input {
        Some(path) => read_pmf(path)?.len(),
        None => args.n,
    };
    let (p_min, p_max) = default_band(n, args.p_min, args.p_max);
    let p = match &args.input {
        Some(path) => read_pmf(path)?,
        None => random_band_pmf(n, p_min, p_max, &mut rng)?,
    };
    let t = LbTransform::new(n, args.eps, p_min, p_max, args.k)?;
    let support = t.support_size();
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        FormatArg::Csv => {
            if support > MATERIALIZE_LIMIT {
                return Err(CliError::Config(format!(
                    "support {support} is too large to write out; use --format json"
                )));
            }
            let g = lift(&p, &t)?;
            writeln!(w, "index,mass")?;
            for (i, m) in g.masses().iter().enumerate() {
                writeln!(w, "{},{m}", i + 1)?;
            }
        }
        FormatArg::Json => {
            let lifted = if support <= EMBED_LIMIT {
                Some(lift(&p, &t)?.into_masses())
            } else {
                None
            };
            let doc = json!({
                "transform": t,
                "support_bound": support_size_bound(&t),
                "input": p.masses(),
                "lifted": lifted,
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    eprintln!("c = {}, m = {}, r = {}, N = {support}", t.c(), t.m(), t.r());
    Ok(())
}

fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let p = match &args.input {
        Some(path) => read_pmf(path)?,
        None if args.lift => {
            let (lo, hi) = default_band(args.n, args.p_min, args.p_max);
            random_band_pmf(args.n, lo, hi, &mut rng)?
        }
        None => {
            let family = ProblemArgs {
                family: args.family,
                k: args.k,
                variant: VariantArg::Known,
                eps: args.eps,
                delta: 0.1,
            }
            .family();
            generate_instance(ExperimentConfig::natural_instance(family), args.n, &mut rng)?
        }
    };
    let transform = if args.lift {
        let (lo, hi) = default_band(p.len(), args.p_min, args.p_max);
        Some(LbTransform::new(p.len(), args.eps, lo, hi, args.lift_k)?)
    } else {
        None
    };
    let mut lift_rng = ChaCha8Rng::seed_from_u64(args.seed);
    lift_rng.set_stream(1);
    let mut src = PmfSampler::new(&p, rng);
    let mut w = sink(args.out.as_deref())?;
    for _ in 0..args.m {
        let i = src.draw()?;
        match &transform {
            Some(t) => writeln!(w, "{}", simulate_sample(i, t, &mut lift_rng)?)?,
            None => writeln!(w, "{i}")?,
        }
    }
    w.flush()?;
    Ok(())
}

fn sweep_cmd(args: &SweepArgs) -> CliResult<()> {
    let spec = args.problem.spec(task_of(args.task))?;
    let rows = sweep(&spec, &ReductionConfig::default(), &args.ns)?;
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        FormatArg::Csv => {
            writeln!(w, "n,partition_size,samples,naive_samples")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.n, r.partition_size, r.samples, r.naive_samples
                )?;
            }
        }
        FormatArg::Json => {
            serde_json::to_writer_pretty(&mut w, &json!({ "problem": spec, "rows": rows }))?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn calibrate_cmd(args: &CalibrateArgs) -> CliResult<()> {
    let task = task_of(args.task);
    let q_mode = match args.variant {
        VariantArg::Known => QMode::Explicit,
        VariantArg::Unknown => QMode::Sampled,
    };
    let mut budget = TesterBudget::default();
    if let Some(c) = args.constant {
        match (task, q_mode) {
            (Task::Identity, QMode::Explicit) => budget.s_ik_constant = c,
            (Task::Identity, QMode::Sampled) => budget.s_iu_constant = c,
            (Task::L1Estimate, _) => budget.s_e_constant = c,
        }
    }
    if let Some(f) = args.inflation {
        budget.estimate_inflation = f;
    }
    budget.validate()?;
    let rows = calibrate(
        task,
        q_mode,
        &budget,
        &args.ells,
        args.eps,
        args.delta,
        args.trials,
        args.seed,
    )?;
    let mut w = sink(args.output.out.as_deref())?;
    match args.output.format {
        FormatArg::Csv => {
            writeln!(w, "ell,samples,completeness,soundness")?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    r.ell, r.samples, r.completeness, r.soundness
                )?;
            }
        }
        FormatArg::Json => {
            serde_json::to_writer_pretty(
                &mut w,
                &json!({ "budget": budget, "eps": args.eps, "delta": args.delta, "rows": rows }),
            )?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Test(a) => run_trials(a, Task::Identity),
        Command::Estimate(a) => run_trials(a, Task::L1Estimate),
        Command::Decompose(a) => decompose(a),
        Command::Lift(a) => lift_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Calibrate(a) => calibrate_cmd(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("modal-probe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
