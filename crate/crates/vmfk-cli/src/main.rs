//! `vmfk` — estimate von Mises-Fisher concentrations, solve the ML
//! equation directly, verify the Turan-type inequalities behind the
//! fixed-point contraction, and draw vMF samples.
//!
//! Every error path emits a single JSON object on stderr with a stable
//! `code` field. Exit codes: 0 success, 2 parse/validation, 3 degenerate
//! data, 4 non-convergence, 5 verification failure, 6 i/o.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use vmfk::solver::{
    cross_validate, solve_bracket, solve_fixed_point, EstimationProblem, InitialGuess,
    SolveResult, SolverOptions,
};
use vmfk::{
    fit_mle, load_samples, sample_vmf, sweep, Error, Inequality, MleFit, SampleFormat, SampleSet,
    SweepGrid,
};

#[derive(Parser, Debug)]
#[command(name = "vmfk", version, about = "von Mises-Fisher concentration estimation and Bessel-ratio inequality verification")]
#[command(propagate_version = true, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Relative step tolerance for solvers.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_x: f64,

    /// Residual tolerance |rho_nu(kappa) - rbar| for solvers.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol_residual: f64,

    /// Iteration cap for solvers.
    #[arg(long, global = true, default_value_t = 500)]
    max_iter: usize,

    /// Include the full iteration trace in solver output.
    #[arg(long, global = true)]
    trace: bool,

    /// Output format for stdout reports.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    output_format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Fixed point for nu >= 1/2, bracketing below.
    Auto,
    FixedPoint,
    Bracket,
}

#[derive(Subcommand, Debug)]
#[command(allow_negative_numbers = true)]
enum Command {
    /// Fit mean direction and concentration from a file of unit vectors.
    Estimate {
        /// Input path; `-` reads stdin.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
        format: InputFormat,
        /// Rescale rows to unit norm instead of rejecting them.
        #[arg(long)]
        normalize: bool,
        /// Skip one CSV header line.
        #[arg(long)]
        skip_header: bool,
    },
    /// Solve rho_nu(kappa) = rbar for a given order and resultant length.
    #[command(allow_negative_numbers = true)]
    Solve {
        /// Sample dimension p (order nu = p/2). Mutually exclusive with --nu.
        #[arg(long, conflicts_with = "nu")]
        p: Option<usize>,
        /// Real order nu > 0. Mutually exclusive with --p.
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        rbar: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Initial guess for the fixed-point iteration (default: heuristic).
        #[arg(long)]
        x0: Option<f64>,
        /// Also run the other solver and report the distance between them.
        #[arg(long)]
        cross_validate: bool,
    },
    /// Sweep the Turan-type inequalities and write CSV + JSON reports.
    #[command(allow_negative_numbers = true)]
    Verify {
        /// One inequality id (eq2_right, eq4, baricz_upper, segura_lower,
        /// turan_left_positive). Mutually exclusive with --all.
        #[arg(long, conflicts_with = "all")]
        inequality: Option<String>,
        /// Sweep every inequality.
        #[arg(long)]
        all: bool,
        /// Smallest order in the sweep grid (default: each inequality's
        /// asserted domain).
        #[arg(long)]
        nu_min: Option<f64>,
        #[arg(long)]
        nu_max: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        x_min: f64,
        #[arg(long, default_value_t = 1e4)]
        x_max: f64,
        #[arg(long, default_value_t = 40)]
        per_decade: usize,
        /// Directory for sweep_<id>.csv and sweep_<id>_summary.json files.
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Draw unit vectors from vMF(mu, kappa) and write them as CSV.
    #[command(allow_negative_numbers = true)]
    Sample {
        /// Dimension p >= 2.
        #[arg(long)]
        p: usize,
        #[arg(long)]
        kappa: f64,
        /// Mean direction as comma-separated floats (default: first axis).
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("VMFK_LOG")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            emit_error("validation", &e.to_string());
            return ExitCode::from(2);
        }
    };

    let opts = SolverOptions {
        tol_x: cli.tol_x,
        tol_residual: cli.tol_residual,
        max_iter: cli.max_iter,
        initial_guess: InitialGuess::Heuristic,
    };

    let outcome = match &cli.command {
        Command::Estimate { input, format, normalize, skip_header } => {
            cmd_estimate(&cli, opts, input, *format, *normalize, *skip_header)
        }
        Command::Solve { p, nu, rbar, method, x0, cross_validate } => {
            cmd_solve(&cli, opts, *p, *nu, *rbar, *method, *x0, *cross_validate)
        }
        Command::Verify { inequality, all, nu_min, nu_max, x_min, x_max, per_decade, output_dir } => {
            cmd_verify(
                &cli,
                inequality.as_deref(),
                *all,
                *nu_min,
                *nu_max,
                *x_min,
                *x_max,
                *per_decade,
                output_dir,
            )
        }
        Command::Sample { p, kappa, mu, n, seed, output } => {
            cmd_sample(*p, *kappa, mu.as_deref(), *n, *seed, output.as_deref())
        }
    };

    match outcome {
        Ok(code) => code,
        Err(err) => {
            emit_error(err.code(), &err.to_string());
            ExitCode::from(exit_for(&err))
        }
    }
}

fn emit_error(code: &str, message: &str) {
    eprintln!("{}", json!({ "code": code, "message": message }));
}

fn exit_for(err: &Error) -> u8 {
    match err.code() {
        "domain" | "parse" | "norm" => 2,
        "degenerate_data" | "saturated_data" => 3,
        "non_convergence" | "kernel_accuracy" | "classification" => 4,
        "io" => 6,
        _ => 2,
    }
}

fn cmd_estimate(
    cli: &Cli,
    opts: SolverOptions,
    input: &Path,
    format: InputFormat,
    normalize: bool,
    skip_header: bool,
) -> Result<ExitCode, Error> {
    let sample_format = match format {
        InputFormat::Csv => SampleFormat::Csv { skip_header },
        InputFormat::Json => SampleFormat::Json,
    };
    let samples = if input == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        load_samples(buf.as_slice(), sample_format, normalize)?
    } else {
        let file = File::open(input)?;
        load_samples(file, sample_format, normalize)?
    };
    log::debug!("loaded {} samples of dimension {}", samples.n(), samples.dimension());

    let fit = fit_mle(&samples, opts)?;
    print_fit(cli, samples.dimension(), &fit);
    Ok(ExitCode::SUCCESS)
}

fn print_fit(cli: &Cli, p: usize, fit: &MleFit) {
    match cli.output_format {
        OutputFormat::Json => {
            let mut obj = json!({
                "p": p,
                "n": fit.n,
                "rbar": fit.rbar,
                "mu_hat": fit.mu_hat,
                "kappa_hat": fit.kappa_hat,
                "iterations": fit.solve.iterations,
                "method": fit.solve.method,
            });
            if cli.trace {
                obj["trace"] = json!(fit.solve.trace);
            }
            println!("{obj}");
        }
        OutputFormat::Csv => {
            println!("p,n,rbar,kappa_hat,iterations,method,mu_hat");
            let mu: Vec<String> = fit.mu_hat.iter().map(|v| format!("{v}")).collect();
            println!(
                "{},{},{},{},{},{},{}",
                p,
                fit.n,
                fit.rbar,
                fit.kappa_hat,
                fit.solve.iterations,
                fit.solve.method,
                mu.join(" ")
            );
        }
        OutputFormat::Plain => {
            println!("p          = {p}");
            println!("n          = {}", fit.n);
            println!("rbar       = {}", fit.rbar);
            println!("kappa_hat  = {}", fit.kappa_hat);
            println!("mu_hat     = {:?}", fit.mu_hat);
            println!("method     = {}", fit.solve.method);
            println!("iterations = {}", fit.solve.iterations);
            if cli.trace {
                println!("trace      = {:?}", fit.solve.trace);
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    cli: &Cli,
    mut opts: SolverOptions,
    p: Option<usize>,
    nu: Option<f64>,
    rbar: f64,
    method: MethodArg,
    x0: Option<f64>,
    with_cross: bool,
) -> Result<ExitCode, Error> {
    // Out-of-range rbar is a flag violation here, not a data condition.
    let as_flag_violation = |e: Error| match e {
        Error::DegenerateData(m) | Error::SaturatedData(m) => {
            Error::Domain(format!("--rbar out of range: {m}"))
        }
        other => other,
    };
    let prob = match (p, nu) {
        (Some(p), None) => EstimationProblem::from_dimension(p, rbar).map_err(as_flag_violation)?,
        (None, Some(nu)) => EstimationProblem::from_order(nu, rbar).map_err(as_flag_violation)?,
        _ => return Err(Error::Domain("exactly one of --p or --nu is required".into())),
    };
    if let Some(x0) = x0 {
        opts.initial_guess = InitialGuess::User(x0);
    }

    let result = match method {
        MethodArg::FixedPoint => solve_fixed_point(prob, opts)?,
        MethodArg::Bracket => solve_bracket(prob, opts)?,
        MethodArg::Auto => {
            if prob.nu() >= 0.5 {
                solve_fixed_point(prob, opts)?
            } else {
                solve_bracket(prob, opts)?
            }
        }
    };
    log::debug!(
        "solved nu={} rbar={} via {} in {} iterations",
        prob.nu(),
        prob.rbar(),
        result.method,
        result.iterations
    );

    let cross = if with_cross { Some(cross_validate(prob, opts)?) } else { None };
    print_solve(cli, &prob, &result, cross);
    Ok(ExitCode::SUCCESS)
}

fn print_solve(cli: &Cli, prob: &EstimationProblem, r: &SolveResult, cross: Option<f64>) {
    match cli.output_format {
        OutputFormat::Json => {
            let mut obj = json!({
                "nu": prob.nu(),
                "rbar": prob.rbar(),
                "kappa_hat": r.kappa_hat,
                "method": r.method,
                "iterations": r.iterations,
                "residual": r.residual,
            });
            if cli.trace {
                obj["trace"] = json!(r.trace);
            }
            if let Some(d) = cross {
                obj["cross_method_difference"] = json!(d);
            }
            println!("{obj}");
        }
        OutputFormat::Csv => {
            println!("nu,rbar,kappa_hat,method,iterations,residual");
            println!(
                "{},{},{},{},{},{}",
                prob.nu(),
                prob.rbar(),
                r.kappa_hat,
                r.method,
                r.iterations,
                r.residual
            );
        }
        OutputFormat::Plain => {
            println!("nu         = {}", prob.nu());
            println!("rbar       = {}", prob.rbar());
            println!("kappa_hat  = {}", r.kappa_hat);
            println!("method     = {}", r.method);
            println!("iterations = {}", r.iterations);
            println!("residual   = {}", r.residual);
            if cli.trace {
                println!("trace      = {:?}", r.trace);
            }
            if let Some(d) = cross {
                println!("cross_method_difference = {d}");
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    cli: &Cli,
    inequality: Option<&str>,
    all: bool,
    nu_min: Option<f64>,
    nu_max: Option<f64>,
    x_min: f64,
    x_max: f64,
    per_decade: usize,
    output_dir: &Path,
) -> Result<ExitCode, Error> {
    let targets: Vec<Inequality> = if all {
        Inequality::ALL.to_vec()
    } else if let Some(id) = inequality {
        vec![id.parse()?]
    } else {
        return Err(Error::Domain("one of --inequality or --all is required".into()));
    };
    if !(x_min > 0.0 && x_max > x_min) || per_decade == 0 {
        return Err(Error::Domain("invalid sweep grid flags".into()));
    }

    let xs = vmfk::log_spaced(x_min, x_max, per_decade);
    let default_nus = SweepGrid::default_grid().nu_values().to_vec();

    std::fs::create_dir_all(output_dir)?;
    let mut summaries = Vec::new();
    let mut all_upheld = true;
    for ineq in targets {
        // With no explicit --nu-min the grid is clipped to the inequality's
        // valid domain; an explicit value is taken literally so that
        // out-of-domain requests fail loudly.
        let lo = nu_min.unwrap_or_else(|| ineq.min_nu());
        let nus: Vec<f64> = default_nus
            .iter()
            .copied()
            .filter(|&n| n >= lo && nu_max.is_none_or(|hi| n <= hi))
            .collect();
        let grid = SweepGrid::new(nus, xs.clone())?;
        log::info!("sweeping {ineq} over {} orders x {} arguments", grid.nu_values().len(), grid.x_values().len());
        let report = sweep(ineq, &grid)?;

        let csv_path = output_dir.join(format!("sweep_{ineq}.csv"));
        report.write_csv(BufWriter::new(File::create(&csv_path)?))?;
        let summary = report.summary();
        let json_path = output_dir.join(format!("sweep_{ineq}_summary.json"));
        let mut f = File::create(&json_path)?;
        writeln!(f, "{}", serde_json::to_string_pretty(&summary).expect("summary serializes"))?;

        all_upheld &= summary.claim_upheld;
        summaries.push(summary);
    }

    match cli.output_format {
        OutputFormat::Json => println!("{}", serde_json::to_string(&summaries).expect("serializes")),
        OutputFormat::Csv => {
            println!("inequality,records,counterexamples,min_margin,argmin_nu,argmin_x,claim_upheld");
            for s in &summaries {
                println!(
                    "{},{},{},{},{},{},{}",
                    s.inequality, s.records, s.counterexamples, s.min_margin, s.argmin_nu, s.argmin_x, s.claim_upheld
                );
            }
        }
        OutputFormat::Plain => {
            for s in &summaries {
                println!(
                    "{}: {} records, {} counterexamples, min margin {:.3e} at (nu={}, x={:.4}) -> {}",
                    s.inequality,
                    s.records,
                    s.counterexamples,
                    s.min_margin,
                    s.argmin_nu,
                    s.argmin_x,
                    if s.claim_upheld { "claim upheld" } else { "CLAIM VIOLATED" }
                );
            }
        }
    }

    if all_upheld {
        Ok(ExitCode::SUCCESS)
    } else {
        emit_error("verification", "an inequality expected to hold failed numerically");
        Ok(ExitCode::from(5))
    }
}

fn cmd_sample(
    p: usize,
    kappa: f64,
    mu: Option<&str>,
    n: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<ExitCode, Error> {
    let mu: Vec<f64> = match mu {
        Some(text) => text
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("--mu component is not a number: {f:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => {
            let mut e1 = vec![0.0; p];
            if p > 0 {
                e1[0] = 1.0;
            }
            e1
        }
    };
    if mu.len() != p {
        return Err(Error::Domain(format!(
            "--mu has {} components but --p is {p}",
            mu.len()
        )));
    }

    let samples: SampleSet = sample_vmf(&mu, kappa, n, seed)?;
    match output {
        Some(path) => {
            let f = File::create(path)?;
            samples.write_csv(BufWriter::new(f))?;
        }
        None => {
            let stdout = std::io::stdout();
            samples.write_csv(stdout.lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
