use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use propfair::audit::ser_sig9;
use propfair::baselines::{hybrid_prune, kmeanspp_best_of};
use propfair::fixtures::{self, SurrogateSpec};
use propfair::greedy::{greedy_capture_with, GreedyOptions};
use propfair::local::{local_capture, min_rho_search, DEFAULT_PASSES};
use propfair::lp::constrained_kmedian_run;
use propfair::sampling::{epsilon_delta_audit, SamplePlan};
use propfair::{audit_exact, nearest_assignment, Instance, Objective, Solution};
use propfair_cli::data::{load_instance, read_solution, write_matrix, write_points_csv, ScaleMode};
use propfair_cli::experiment::{run_experiment, Algorithm, ExperimentConfig};
use propfair_cli::report::emit_report;
use serde::Serialize;

/// Proportionally fair clustering: solve, audit and run experiments.
#[derive(Parser)]
#[command(name = "propfair", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a clustering and write it as JSON.
    Cluster {
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        k: Option<usize>,
        /// Target ρ for local (skips the search) and lp.
        #[arg(long)]
        rho: Option<f64>,
        /// LP covering factor; lp uses ρ = γ − 1 when given.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PASSES)]
        passes: usize,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "min-max")]
        scale: ScaleMode,
        /// Greedy event log, local probe log (CSV) or LP rounding trace (JSON).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Audit a solution exactly, or on a sample when --epsilon is given.
    Audit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "min-max")]
        scale: ScaleMode,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        sample_constant: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include ρ_y for every center.
        #[arg(long)]
        detailed: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a TOML-configured sweep and write the report.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Union of Local Capture and k-means++ centers, pruned under factor bounds.
    Hybrid {
        #[arg(long, default_value_t = 1.2)]
        alpha: f64,
        #[arg(long, default_value_t = 1.5)]
        beta: f64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "min-max")]
        scale: ScaleMode,
    },
    /// Write a built-in instance in the distance-matrix format.
    Fixture {
        /// figure1, example1, claim1, claim2, theorem1-tightness, intro-spheres or kdd-surrogate.
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write coordinates as CSV instead (point-set fixtures only).
        #[arg(long)]
        points: bool,
    },
}

/// Non-convergence is reported through the exit code, after outputs are written.
enum Outcome {
    Done,
    NotConverged,
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    algorithm: &'a str,
    k: usize,
    open: &'a [usize],
    #[serde(serialize_with = "ser_sig9")]
    rho: f64,
    #[serde(serialize_with = "ser_sig9")]
    kmedian: f64,
    #[serde(serialize_with = "ser_sig9")]
    kmeans: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[allow(clippy::too_many_arguments)]
fn cluster(
    algo: Algorithm,
    inst: &Instance,
    rho: Option<f64>,
    gamma: Option<f64>,
    seed: u64,
    passes: usize,
    output: &Path,
    log: Option<&Path>,
) -> Result<Outcome> {
    let mut converged = None;
    let solution: Solution = match algo {
        Algorithm::Greedy => {
            let run = greedy_capture_with(inst, &GreedyOptions::default())?;
            if let Some(p) = log {
                let mut buf = Vec::new();
                run.write_log(&mut buf)?;
                fs::write(p, buf)?;
            }
            run.solution
        }
        Algorithm::Local => match rho {
            Some(rho) => {
                let run = local_capture(inst, rho, passes, seed)?;
                converged = Some(run.converged);
                run.solution
            }
            None => {
                let search = min_rho_search(inst, 1.0, 3.0, 1e-3, passes, seed)?;
                if let Some(p) = log {
                    let mut buf = Vec::new();
                    search.write_probes(&mut buf)?;
                    fs::write(p, buf)?;
                }
                converged = Some(search.best.is_some());
                match search.best {
                    Some((_, s)) => s,
                    None => local_capture(inst, 3.0, passes, seed)?.solution,
                }
            }
        },
        Algorithm::Lp => {
            let rho = match (rho, gamma) {
                (Some(r), _) => r,
                (None, Some(g)) => g - 1.0,
                (None, None) => bail!("lp needs --rho or --gamma"),
            };
            let run = constrained_kmedian_run(inst, rho)?;
            if let Some(p) = log {
                write(p, &run.trace.to_json())?;
            }
            run.solution
        }
        Algorithm::Kmeanspp => kmeanspp_best_of(inst, inst.k(), 300, seed, 10)?.solution,
        Algorithm::Hybrid => bail!("use the hybrid subcommand"),
    };
    let out = ClusterOutput {
        algorithm: algo.id(),
        k: inst.k(),
        open: solution.open(),
        rho: audit_exact(inst, &solution)?.rho,
        kmedian: solution.objective(Objective::KMedian),
        kmeans: solution.objective(Objective::KMeans),
        converged,
    };
    write(output, &json(&out))?;
    Ok(if converged == Some(false) {
        Outcome::NotConverged
    } else {
        Outcome::Done
    })
}

fn fixture(name: &str, epsilon: f64, seed: u64, points: bool) -> Result<String> {
    let inst = match name {
        "figure1" => fixtures::figure1_instance(),
        "example1" => fixtures::example1_instance(),
        "claim1" => fixtures::claim1_instance(),
        "claim2" => fixtures::claim2_instance(),
        "theorem1-tightness" => fixtures::theorem1_tightness(epsilon)?,
        "intro-spheres" => fixtures::intro_spheres(50.0, 0.5, 500.0, 100, seed)?,
        "kdd-surrogate" => fixtures::outlier_surrogate(&SurrogateSpec {
            seed,
            ..Default::default()
        })?,
        _ => bail!("unknown fixture {name:?}"),
    };
    if points {
        match inst.point_coords() {
            Some(p) if inst.sites().is_some() => write_points_csv(p),
            _ => bail!("{name} is not a point set with N = M"),
        }
    } else {
        Ok(write_matrix(&inst))
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Cluster {
            algo,
            k,
            rho,
            gamma,
            seed,
            passes,
            input,
            output,
            scale,
            log,
        } => {
            let inst = load_instance(&input, k, scale)?;
            cluster(
                algo,
                &inst,
                rho,
                gamma,
                seed,
                passes,
                &output,
                log.as_deref(),
            )
        }
        Command::Audit {
            input,
            solution,
            k,
            scale,
            epsilon,
            delta,
            sample_constant,
            seed,
            detailed,
            output,
        } => {
            let inst = load_instance(&input, k, scale)?;
            let sol = nearest_assignment(&inst, &read_solution(&solution)?)?;
            let body = match epsilon {
                Some(eps) => {
                    let plan = SamplePlan::new(eps, delta, sample_constant, seed)?;
                    json(&epsilon_delta_audit(&inst, &sol, &plan)?)
                }
                None if detailed => propfair::audit::audit_detailed(&inst, &sol)?.to_json() + "\n",
                None => audit_exact(&inst, &sol)?.to_json() + "\n",
            };
            match output {
                Some(p) => write(&p, &body)?,
                None => print!("{body}"),
            }
            Ok(Outcome::Done)
        }
        Command::Experiment { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let records = run_experiment(&cfg)?;
            for f in emit_report(&records, &cfg.format, &cfg.out_dir)? {
                println!("{}", f.display());
            }
            Ok(if records.iter().any(|r| r.converged == Some(false)) {
                Outcome::NotConverged
            } else {
                Outcome::Done
            })
        }
        Command::Hybrid {
            alpha,
            beta,
            k,
            seed,
            input,
            output,
            scale,
        } => {
            let inst = load_instance(&input, k, scale)?;
            let search = min_rho_search(&inst, 1.0, 3.0, 1e-3, DEFAULT_PASSES, seed)?;
            let Some((_, local)) = search.best else {
                eprintln!("local capture did not converge below rho = 3");
                return Ok(Outcome::NotConverged);
            };
            let km = kmeanspp_best_of(&inst, inst.k(), 300, seed, 10)?;
            let out = hybrid_prune(&inst, &local, &km.solution, alpha, beta)?;
            write(&output, &json(&out))?;
            Ok(Outcome::Done)
        }
        Command::Fixture {
            name,
            out,
            epsilon,
            seed,
            points,
        } => {
            write(&out, &fixture(&name, epsilon, seed, points)?)?;
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
