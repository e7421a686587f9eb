use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use contract_sched::advice::{evaluate, sel_for_epsilon, sel_n};
use contract_sched::emd::emd;
use contract_sched::multi::{
    average_consistency, bound_multi, mult_exact, mult_gap, PredictionSet,
};
use contract_sched::GeometricSchedule;
use contract_sched_harness::dist_spec::parse_distribution;
use contract_sched_harness::{list_experiments, run, HarnessError, Result, SpecOverrides};

#[derive(Parser)]
#[command(
    name = "contract-sched",
    version,
    about = "Learning-augmented contract scheduling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered experiment and write its CSV.
    Run(RunArgs),
    /// List registered experiments with their parameters and columns.
    List,
    /// Consistency of one schedule, or the best of a portfolio, under some advice.
    Eval(EvalArgs),
    /// Best schedule for a set of predicted interruption times.
    Mult {
        /// Comma-separated predictions, e.g. 2,3,700.
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
    },
    /// Earth Mover's distance between two distributions.
    Emd {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    experiment: Option<String>,
    /// Parameter override, KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "schedule")]
struct Choice {
    /// Evaluate X(lambda).
    #[arg(long)]
    lambda: Option<f64>,
    /// Best of the portfolio X(j/n), j < n.
    #[arg(long)]
    n: Option<usize>,
    /// Smallest portfolio whose guarantee is within epsilon of 4 ln 2.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// points:T@W,..  uniform:LO,HI  normal:M,SIGMA  adversarial:D  adversarial-discrete:L0,L1,..
    #[arg(long)]
    dist: String,
    #[command(flatten)]
    choice: Choice,
}

fn run_command(args: RunArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => SpecOverrides::read_config(path)?,
        None => SpecOverrides::default(),
    };
    let mut flags = SpecOverrides {
        name: args.experiment,
        seed: args.seed,
        trials: args.trials,
        output: args.out,
        threads: args.threads,
        ..Default::default()
    };
    for pair in &args.set {
        flags.set_pair(pair)?;
    }
    let spec = base.merged(flags).into_spec()?;
    let table = run(&spec)?;
    match &spec.output {
        Some(path) => {
            table.write_csv(path)?;
            eprintln!(
                "{}: {} rows -> {}",
                spec.name,
                table.rows.len(),
                path.display()
            );
        }
        None => std::io::stdout()
            .write_all(table.to_csv().as_bytes())
            .map_err(|e| HarnessError::Io {
                path: "<stdout>".into(),
                source: e,
            })?,
    }
    Ok(())
}

fn eval_command(args: EvalArgs) -> Result<()> {
    let mu = parse_distribution(&args.dist)?;
    let report = match (args.choice.lambda, args.choice.n, args.choice.epsilon) {
        (Some(l), _, _) => evaluate(&mu, &GeometricSchedule::new(l)?)?,
        (_, Some(n), _) => sel_n(&mu, n)?,
        (_, _, Some(e)) => sel_for_epsilon(&mu, e)?,
        _ => unreachable!("clap requires one choice"),
    };
    println!("lambda={:.16e}", report.lambda);
    if let Some(n) = report.n {
        println!("n={n}");
    }
    println!("consistency={:.16e}", report.consistency);
    println!("guarantee={:.16e}", report.guarantee);
    println!("mean={:.16e}", report.expected_value);
    println!("expected_profit={:.16e}", report.expected_profit);
    Ok(())
}

fn mult_command(taus: Vec<f64>) -> Result<()> {
    let p = PredictionSet::new(taus)?;
    let exact = mult_exact(&p)?;
    let gap = mult_gap(&p)?;
    println!("k={}", p.k());
    println!("phase={:.16e}", exact.phase);
    println!("lambda={:.16e}", exact.schedule.lambda());
    println!("consistency={:.16e}", exact.consistency);
    println!(
        "average_consistency={:.16e}",
        average_consistency(&exact.schedule, &p)
    );
    println!("gap_consistency={:.16e}", gap.consistency);
    println!("bound={:.16e}", bound_multi(p.k())?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::List => {
            print!("{}", list_experiments());
            Ok(())
        }
        Command::Eval(args) => eval_command(args),
        Command::Mult { taus } => mult_command(taus),
        Command::Emd { a, b } => parse_distribution(&a).and_then(|a| {
            let b = parse_distribution(&b)?;
            println!("{:.16e}", emd(&a, &b).value());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
