use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riskgrid::pipeline::{self, Overrides, PResult, PipelineError, Scenario};
use riskgrid::planner::{read_path_csv, surprise};
use riskgrid::terrain::{read_label_map, read_label_map_csv, ClassCost, CostMapping, LabelMap};

#[derive(Parser)]
#[command(name = "riskgrid", version, about = "Risk-aware path assignment on uncertain semantic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory shared by all stages.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage.
    Run(StageArgs),
    /// Generate or import the sample stack (and ground truth).
    Synth(StageArgs),
    /// Label, uncertainty and per-lambda cost maps.
    Costmap(StageArgs),
    /// Candidate paths for every vehicle, demand and lambda.
    Paths(StageArgs),
    /// Monte Carlo efficiency matrix.
    Sample(StageArgs),
    /// CVaR path assignment, from a scenario's output directory or from a
    /// standalone efficiency CSV.
    Assign {
        #[arg(long, required_unless_present = "efficiency", conflicts_with = "efficiency")]
        scenario: Option<PathBuf>,
        /// Efficiency CSV (i,j,k,draw,efficiency) to assign from directly.
        #[arg(long)]
        efficiency: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Truth-minus-predicted label cost along a path.
    EvalSurprise {
        /// Path CSV written by `paths`.
        #[arg(long)]
        path: PathBuf,
        /// Ground-truth label map (.rlbl or .csv).
        #[arg(long)]
        truth: PathBuf,
        /// Predicted label map (.rlbl or .csv).
        #[arg(long)]
        predicted: PathBuf,
        /// Scenario whose class costs to use.
        #[arg(long, required_unless_present = "costs", conflicts_with = "costs")]
        scenario: Option<PathBuf>,
        /// Comma-separated class costs; `impassable` allowed.
        #[arg(long)]
        costs: Option<String>,
    },
}

fn load(args: &StageArgs) -> PResult<Scenario> {
    let mut sc = Scenario::load(&args.scenario)?;
    sc.apply(&Overrides {
        seed: args.seed,
        draws: args.draws,
        alpha: args.alpha,
    })?;
    Ok(sc)
}

fn parse_costs(text: &str) -> PResult<CostMapping> {
    let invalid = |message: String| PipelineError::Scenario {
        field: "--costs".into(),
        message,
    };
    let costs = text
        .split(',')
        .map(str::trim)
        .map(|c| {
            if c.eq_ignore_ascii_case("impassable") {
                Ok(ClassCost::Impassable)
            } else {
                c.parse::<f64>()
                    .map(ClassCost::Finite)
                    .map_err(|e| invalid(format!("{c:?}: {e}")))
            }
        })
        .collect::<PResult<Vec<_>>>()?;
    CostMapping::new(costs, 0.0).map_err(|e| invalid(e.to_string()))
}

fn read_labels(file: &Path, num_classes: usize) -> PResult<LabelMap> {
    let labels = if file.extension().is_some_and(|e| e == "csv") {
        read_label_map_csv(file, num_classes)?
    } else {
        read_label_map(file)?
    };
    Ok(labels)
}

fn run(cli: Cli) -> PResult<()> {
    match cli.command {
        Command::Run(a) => {
            let report = pipeline::run_pipeline(&load(&a)?, &a.out)?;
            println!(
                "assigned {} tuples, tau* = {}, H = {}",
                report.assignments.len(),
                report.tau_star,
                report.h_value
            );
        }
        Command::Synth(a) => pipeline::stage_synth(&load(&a)?, &a.out)?,
        Command::Costmap(a) => pipeline::stage_costmap(&load(&a)?, &a.out)?,
        Command::Paths(a) => {
            pipeline::stage_paths(&load(&a)?, &a.out)?;
        }
        Command::Sample(a) => {
            pipeline::stage_sample(&load(&a)?, &a.out)?;
        }
        Command::Assign {
            scenario,
            efficiency,
            out,
            seed,
            draws,
            alpha,
            gamma,
            delta,
        } => {
            let report = match (scenario, efficiency) {
                (Some(scenario), _) => {
                    let mut sc = load(&StageArgs {
                        scenario,
                        out: out.clone(),
                        seed,
                        draws,
                        alpha,
                    })?;
                    if gamma.is_some() {
                        sc.gamma = gamma;
                    }
                    if delta.is_some() {
                        sc.delta = delta;
                    }
                    sc.validate()?;
                    pipeline::stage_assign(&sc, &out)?
                }
                (None, Some(efficiency)) => {
                    let alpha = alpha.ok_or_else(|| PipelineError::Scenario {
                        field: "--alpha".into(),
                        message: "required with --efficiency".into(),
                    })?;
                    pipeline::assign_from_matrix(&efficiency, alpha, gamma, delta, seed, &out)?
                }
                (None, None) => unreachable!("clap requires one of the inputs"),
            };
            println!(
                "assigned {} tuples, tau* = {}, H = {}",
                report.assignments.len(),
                report.tau_star,
                report.h_value
            );
        }
        Command::EvalSurprise {
            path,
            truth,
            predicted,
            scenario,
            costs,
        } => {
            let mapping = match (scenario, costs) {
                (Some(s), _) => Scenario::load(s)?.mapping()?,
                (None, Some(c)) => parse_costs(&c)?,
                (None, None) => unreachable!("clap requires one of the inputs"),
            };
            let classes = mapping.class_costs().len();
            let record = read_path_csv(&path)?;
            let truth = read_labels(&truth, classes)?;
            let predicted = read_labels(&predicted, classes)?;
            let s = surprise(&record.path, &truth, &predicted, &mapping)?;
            println!("surprise {}", s.value);
            if s.impassable_encountered {
                println!("impassable_encountered true");
            }
            println!("row,col,truth_class,predicted_class,difference");
            for b in &s.breakdown {
                let diff = b
                    .difference()
                    .map_or_else(|| "impassable".to_string(), |d| d.to_string());
                println!(
                    "{},{},{},{},{}",
                    b.pixel.row, b.pixel.col, b.truth_class, b.predicted_class, diff
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Some(threads) = std::env::var("RISKGRID_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        riskgrid::init_thread_pool(threads);
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
