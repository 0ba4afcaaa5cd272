use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ltest::competitors::Method;
use ltest_harness::dataset::{one_shot_test, read_observations};
use ltest_harness::output::manifest_path;
use ltest_harness::verify::{run_verify, VerifyConfig};
use ltest_harness::{emit_csv, run_power_experiment, run_size_experiment, size_gate, Design, ExperimentSpec, Manifest, RunOptions};

#[derive(Parser)]
#[command(name = "ltest", version, about = "Adaptive top-k L-statistic tests: experiments and one-shot testing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical size under the null over the (n, p, design) grid.
    Size(ExperimentArgs),
    /// Power against sparse-to-dense alternatives.
    Power(ExperimentArgs),
    /// Run the limit-law probes.
    Verify(VerifyArgs),
    /// Test H0: beta_b = 0 on a CSV dataset with columns y,x1..xp.
    Test(TestArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config whose keys are ExperimentSpec field names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Results CSV; the manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use 1000 replications and B = 500.
    #[arg(long)]
    full_scale: bool,
    /// Write real wall times instead of 0 (output is then not byte-reproducible).
    #[arg(long)]
    record_timing: bool,
    #[arg(long)]
    replications: Option<usize>,
    /// Bootstrap replicates per test.
    #[arg(long = "B", value_name = "B")]
    b: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    designs: Option<Vec<Design>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Sparsity levels of the power sweep.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<usize>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    signal_norm_sq: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Small sample sizes; finishes in seconds.
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct TestArgs {
    /// CSV with header y,x1,...,xp.
    #[arg(long)]
    data: PathBuf,
    /// Number of leading columns treated as nuisance.
    #[arg(long)]
    q: usize,
    #[arg(long = "B", value_name = "B", default_value_t = 500)]
    b: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    /// Print the reports as JSON.
    #[arg(long)]
    json: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn build_spec(args: &ExperimentArgs, power: bool) -> Result<ExperimentSpec> {
    let mut spec = if power {
        ExperimentSpec::power_default()
    } else {
        ExperimentSpec::default()
    };
    spec.workers = default_workers();
    if let Some(path) = &args.config {
        spec = ExperimentSpec::load(path, &spec)?;
    }
    if args.full_scale {
        spec = spec.full_scale();
    }
    macro_rules! set {
        ($field:ident, $arg:expr) => {
            if let Some(v) = $arg.clone() {
                spec.$field = v;
            }
        };
    }
    set!(master_seed, args.seed);
    set!(workers, args.workers);
    set!(replications, args.replications);
    set!(b, args.b);
    set!(n_list, args.n);
    set!(p_list, args.p);
    set!(q, args.q);
    set!(design_list, args.designs);
    set!(methods, args.methods);
    set!(s_list, args.s);
    set!(alpha, args.alpha);
    set!(rho, args.rho);
    set!(signal_norm_sq, args.signal_norm_sq);
    spec.validate()?;
    Ok(spec)
}

fn experiment(args: ExperimentArgs, power: bool) -> Result<ExitCode> {
    let spec = build_spec(&args, power)?;
    let command = if power { "power" } else { "size" };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{command}.csv")));
    let opts = RunOptions {
        record_timing: args.record_timing,
    };
    eprintln!(
        "{command}: {} rows, {} replications, B = {}, {} workers",
        spec.row_count(),
        spec.replications,
        spec.b,
        spec.workers
    );
    let start = Instant::now();
    let rows = if power {
        run_power_experiment(&spec, &opts)?
    } else {
        run_size_experiment(&spec, &opts)?
    };
    let wall = start.elapsed().as_secs_f64();
    emit_csv(&rows, &out)?;
    let manifest = manifest_path(&out);
    Manifest::new(command, &spec, rows.len(), &out, wall).write(&manifest)?;
    eprintln!("wrote {} and {} ({wall:.1} s)", out.display(), manifest.display());

    let violations = size_gate(&rows, spec.alpha);
    if violations.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for v in &violations {
        eprintln!(
            "size gate: {} at n={} p={} design {} has size {:.4} > {:.4}",
            v.row.method, v.row.n, v.row.p, v.row.design, v.row.rejection_rate, v.limit
        );
    }
    Ok(ExitCode::from(2))
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let base = if args.quick {
        VerifyConfig::quick()
    } else {
        VerifyConfig::default()
    };
    let cfg = VerifyConfig {
        master_seed: args.seed,
        workers: args.workers.unwrap_or_else(default_workers),
        ..base
    };
    let report = run_verify(&cfg)?;
    for p in &report.probes {
        println!("{}", p.line());
    }
    println!(
        "mu/m = {:.6} +- {:.6}, sigma_gg = {:.6}, m = {}",
        report.normality.mu_over_m, report.normality.mu_se_over_m, report.normality.sigma_gg, report.independence.m
    );
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&report)?;
        std::fs::write(out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn test(args: TestArgs) -> Result<ExitCode> {
    let obs = read_observations(&args.data)?;
    let reports = one_shot_test(&obs, args.q, args.b, args.alpha, args.seed)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!("n = {}, p = {}, q = {}, B = {}", obs.x.rows(), obs.x.cols(), args.q, args.b);
    println!("{:<9} {:>14} {:>10}  reject", "method", "statistic", "p-value");
    for r in &reports {
        println!("{:<9} {:>14.6} {:>10.6}  {}", r.method.label(), r.statistic, r.p_value, r.reject);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Size(a) => experiment(a, false),
        Command::Power(a) => experiment(a, true),
        Command::Verify(a) => verify(a),
        Command::Test(a) => test(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
