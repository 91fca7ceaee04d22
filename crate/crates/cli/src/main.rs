use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Parser, Subcommand};
use netcoal_core::bench::{aggregate, run_benchmark, write_records, BenchConfig};
use netcoal_core::energy::{DEFAULT_EPSILON, DEFAULT_KAPPA, DEFAULT_TIMESTEPS};
use netcoal_core::exact::IDP_CAP;
use netcoal_core::isg::{DEFAULT_DENSITY, DEFAULT_SIGMA, FIT_CAP};
use netcoal_core::pipeline::{default_tolerance, save_structure};
use netcoal_core::solvers::SOLVER_NAMES;
use netcoal_core::{
    fit_isg, generate_scenario, idp_solve, iterative_split, random_isg, IsgInstance, Scenario, ScenarioConfig,
    SolverParams, ValueOracle,
};

/// Coalition formation for net-metered energy communities.
#[derive(Parser, Debug)]
#[command(name = "netcoal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a prosumer scenario (JSON).
    GenScenario {
        /// Number of agents.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_TIMESTEPS)]
        timesteps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Power flexibility around the initial profile.
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        /// Dispersion penalty per unit distance.
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a random pairwise-weight instance (JSON).
    GenIsg {
        #[arg(long)]
        n: usize,
        /// Std-dev of the Gaussian weights.
        #[arg(long, default_value_t = DEFAULT_SIGMA)]
        sigma: f64,
        /// Probability that a pair carries a weight.
        #[arg(long, default_value_t = DEFAULT_DENSITY)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Least-squares pairwise fit of a scenario's coalition values (n <= 20).
    Fit {
        #[arg(long)]
        scenario: PathBuf,
        /// Where to write the fitted instance; omit to only print the residual.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split the grand coalition of an instance with a QUBO solver.
    Split {
        #[arg(long)]
        isg: PathBuf,
        #[arg(long, default_value = "tabu", value_parser = clap::builder::PossibleValuesParser::new(SOLVER_NAMES))]
        solver: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Structure JSON; omit to only print the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal coalition structure by dynamic programming (n <= 22).
    #[command(group(ArgGroup::new("input").required(true).args(["isg", "scenario"])))]
    Exact {
        #[arg(long)]
        isg: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark matrix described by a TOML config; writes CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenScenario { n, timesteps, seed, epsilon, kappa, out } => {
            let config = ScenarioConfig { epsilon, kappa, ..ScenarioConfig::default() };
            let scenario = generate_scenario(n, timesteps, seed, &config)?;
            scenario.save(&out)?;
        }
        Command::GenIsg { n, sigma, density, seed, out } => {
            random_isg(n, sigma, density, seed)?.save(&out)?;
        }
        Command::Fit { scenario, out } => {
            let scenario = Scenario::load(&scenario)?;
            if scenario.n() > FIT_CAP {
                bail!("fit requires n <= {FIT_CAP} (scenario has n = {})", scenario.n());
            }
            let oracle = ValueOracle::new(scenario)?;
            let fitted = fit_isg(&oracle)?;
            if let Some(out) = out {
                fitted.save(&out)?;
            }
            println!("residual {}", fitted.meta.residual.unwrap_or(0.0));
        }
        Command::Split { isg, solver, seed, out } => {
            let instance = IsgInstance::load(&isg)?;
            let params = SolverParams::by_name(&solver).context("unknown solver")?;
            let (structure, trace) = iterative_split(&instance, &params, seed, default_tolerance(&instance))?;
            if let Some(out) = out {
                save_structure(&out, &structure, Some(&trace))?;
            }
            println!(
                "value {} coalitions {} qubo_solves {}",
                structure.value,
                structure.coalitions.len(),
                trace.qubo_solves()
            );
        }
        Command::Exact { isg, scenario, out } => {
            let solution = match (isg, scenario) {
                (Some(path), _) => {
                    let instance = IsgInstance::load(&path)?;
                    check_exact_cap(instance.n())?;
                    idp_solve(&instance)?
                }
                (None, Some(path)) => {
                    let scenario = Scenario::load(&path)?;
                    check_exact_cap(scenario.n())?;
                    idp_solve(&ValueOracle::new(scenario)?)?
                }
                (None, None) => bail!("one of --isg or --scenario is required"),
            };
            if let Some(out) = out {
                save_structure(&out, &solution.structure, None)?;
            }
            println!("value {} coalitions {}", solution.value, solution.structure.coalitions.len());
        }
        Command::Bench { config, out, jobs } => {
            let config = BenchConfig::load(&config)?;
            let out = out.or_else(|| config.output.clone()).context("no output path: pass --out or set `output`")?;
            let records = run_benchmark(&config, jobs)?;
            write_records(&records, &out)?;
            for row in aggregate(&records)? {
                let ratio = row.ratio_mean.map_or("undefined".to_string(), |m| format!("{m:.4}"));
                println!("n={} solver={} quality={} runtime_ms={:.3}", row.n, row.solver, ratio, row.runtime_mean_ms);
            }
        }
    }
    Ok(())
}

fn check_exact_cap(n: usize) -> Result<()> {
    if n > IDP_CAP {
        bail!("exact requires n <= {IDP_CAP} (input has n = {n})");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
