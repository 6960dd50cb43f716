use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use disfom::estimator::estimate_sigma_inf;
use disfom::problem::{read_instance, write_instance, StochasticProblem, SyntheticQP};
use disfom::rng::substream;
use disfom::solvers::{
    preset_case1_minibatch, preset_case1_vr, preset_case2_minibatch, preset_case2_vr, run_disfom_with_sink, IterRecord,
    PresetInputs,
};
use disfom_bench::output::{read_summary, write_results, ResultRow};
use disfom_bench::plot::{render_svg, Metric};
use disfom_bench::runner::{run_seed, run_solver, Reference};
use disfom_bench::spec::{EstimatorName, Method, ProblemParams, ProxName, SolverSpec, SweepSpec};
use disfom_bench::sweep::{run_sweep, write_sweep};
use disfom_bench::{BenchError, Result};

#[derive(Parser)]
#[command(name = "disfom", version, about = "Stochastic first-order methods on synthetic nonconvex quadratics")]
struct Cli {
    /// Worker threads (0 = one per core). DISFOM_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and write it in binary form.
    Generate {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver and print per-iteration records as CSV.
    Run(RunArgs),
    /// Run every solver of a config file over its dimension grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chart a summary CSV as SVG.
    Plot {
        summary: PathBuf,
        #[arg(long, default_value = "residual")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Disfom,
    Sgd,
    Svrg,
    Smd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Case1Mb,
    Case1Vr,
    Case2Mb,
    Case2Vr,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Minibatch,
    Vr,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Instance file; otherwise one is generated from --d and --seed.
    #[arg(long, conflicts_with = "d")]
    instance: Option<PathBuf>,
    #[arg(long, required_unless_present = "instance")]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    solver: SolverArg,
    /// Parameter preset for disfom; requires --epsilon.
    #[arg(long, value_enum, requires = "epsilon")]
    preset: Option<PresetArg>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    checkpoint_batch: Option<usize>,
    #[arg(long)]
    interval: Option<usize>,
    #[arg(long)]
    rho_hat: Option<f64>,
    /// Use the ℓ1-ball proximal term of this radius instead of the squared ℓ1 penalty.
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    step_scale: Option<f64>,
    #[arg(long)]
    epsilon_hat: Option<f64>,
    /// Value of the replication column.
    #[arg(long, default_value_t = 0)]
    replication: usize,
    /// Record wall-clock milliseconds (output is then no longer reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads(flag: usize) -> Result<usize> {
    match std::env::var("DISFOM_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| BenchError::Usage(format!("DISFOM_THREADS={v:?} is not a thread count"))),
        Err(_) => Ok(flag),
    }
}

fn solver_spec(args: &RunArgs) -> SolverSpec {
    let method = match args.solver {
        SolverArg::Disfom => Method::Disfom,
        SolverArg::Sgd => Method::Sgd,
        SolverArg::Svrg => Method::Svrg,
        SolverArg::Smd => Method::Smd,
    };
    let vr = match args.estimator {
        Some(EstimatorArg::Vr) => true,
        Some(EstimatorArg::Minibatch) => false,
        None => method == Method::Svrg,
    };
    let prox = match (method, args.psi) {
        (Method::Disfom, Some(_)) => Some(ProxName::L1Ball),
        (Method::Disfom, None) => Some(ProxName::L1Squared),
        _ => None,
    };
    SolverSpec {
        method,
        estimator: if vr { EstimatorName::Vr } else { EstimatorName::Minibatch },
        iterations: args.iterations.unwrap_or(if vr { 1350 } else { 300 }),
        batch: args.batch.unwrap_or(if vr { 100 } else { 1000 }),
        checkpoint_batch: Some(args.checkpoint_batch.unwrap_or(1000)),
        interval: Some(args.interval.unwrap_or(9)),
        step_scale: args.step_scale,
        prox,
        rho_hat: Some(args.rho_hat.unwrap_or(if vr { 128.0 } else { 2.0 })),
        psi: args.psi,
        epsilon_hat: args.epsilon_hat.unwrap_or(1e-6),
        admm_penalty: 1.0,
        admm_max_iter: 10_000,
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let problem = match (&args.instance, args.d) {
        (Some(path), _) => read_instance(BufReader::new(File::open(path)?))?,
        (None, Some(d)) => {
            let p = ProblemParams::default();
            SyntheticQP::generate(d, args.seed, p.radius, p.truncation, p.lambda_reg)?
        }
        (None, None) => return Err(BenchError::Usage("either --instance or --d is required".into())),
    };
    let d = problem.dim();
    let x1 = vec![0.0; d];
    let reference = Reference::compute(&problem, &x1)?;
    let mut history: Vec<IterRecord> = Vec::new();

    let (label, seed) = if let Some(preset) = args.preset {
        if !matches!(args.solver, SolverArg::Disfom) {
            return Err(BenchError::Usage("--preset applies to --solver disfom only".into()));
        }
        let label = match preset {
            PresetArg::Case1Mb => "disfom_case1_mb",
            PresetArg::Case1Vr => "disfom_case1_vr",
            PresetArg::Case2Mb => "disfom_case2_mb",
            PresetArg::Case2Vr => "disfom_case2_vr",
        };
        let seed = run_seed(args.seed, label);
        let sigma_inf = estimate_sigma_inf(&problem, &x1, 1000, &mut substream(seed, 3))?;
        let inputs = PresetInputs {
            epsilon: args.epsilon.unwrap_or_default(),
            delta: reference.delta,
            lipschitz: problem.lipschitz(),
            dim: d,
            sigma_inf,
        };
        let mut cfg = match preset {
            PresetArg::Case1Mb => preset_case1_minibatch(&inputs, args.rho_hat.unwrap_or(2.0))?,
            PresetArg::Case1Vr => preset_case1_vr(&inputs)?,
            PresetArg::Case2Mb => preset_case2_minibatch(&inputs)?,
            PresetArg::Case2Vr => preset_case2_vr(&inputs)?,
        };
        if let Some(k) = args.iterations {
            cfg.iterations = k;
        }
        cfg.seed = seed;
        cfg.timing = args.timing;
        run_disfom_with_sink(&problem, &cfg, &x1, &mut history)?;
        (label.to_string(), seed)
    } else {
        let spec = solver_spec(args);
        let label = match args.solver {
            SolverArg::Disfom => "disfom",
            SolverArg::Sgd => "sgd",
            SolverArg::Svrg => "svrg",
            SolverArg::Smd => "smd",
        };
        let seed = run_seed(args.seed, label);
        run_solver(&problem, &spec, seed, &x1, args.timing, &mut history)?;
        (label.to_string(), seed)
    };

    let rows: Vec<ResultRow> = history
        .iter()
        .map(|h| ResultRow {
            solver: label.clone(),
            d,
            replication: args.replication,
            k: h.k,
            f_gap: reference.gap(h.f_value),
            residual: h.residual,
            sfo_calls: h.sfo_calls,
            wall_ms: h.wall_ms,
            seed,
        })
        .collect();
    match &args.out {
        Some(path) => write_results(&rows, BufWriter::new(File::create(path)?)),
        None => write_results(&rows, io::stdout().lock()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let threads = threads(cli.threads)?;
    match cli.command {
        Command::Generate { d, seed, out } => {
            let p = ProblemParams::default();
            let qp = SyntheticQP::generate(d, seed, p.radius, p.truncation, p.lambda_reg)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_instance(&qp, &mut w)?;
            w.flush()?;
        }
        Command::Run(args) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| BenchError::Usage(format!("thread pool: {e}")))?
                .install(|| cmd_run(&args))?;
        }
        Command::Sweep { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let spec = SweepSpec::from_toml(&text)?;
            let result = run_sweep(&spec, threads)?;
            let dir = out.unwrap_or_else(|| spec.output_dir.clone());
            let (rows, summary) = write_sweep(&result, &dir)?;
            eprintln!("wrote {} and {}", rows.display(), summary.display());
        }
        Command::Plot { summary, metric, out } => {
            let metric = Metric::parse(&metric)?;
            let rows = read_summary(BufReader::new(File::open(&summary)?))?;
            std::fs::write(&out, render_svg(&rows, metric)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
