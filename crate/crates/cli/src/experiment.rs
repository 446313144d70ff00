//! Sweeps over `k` for several algorithms and datasets, auditing every output.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use propfair::audit::ser_sig9;
use propfair::baselines::{hybrid_prune, kmeanspp_best_of};
use propfair::fixtures::{self, SurrogateSpec};
use propfair::local::{local_capture, min_rho_search, LocalOutcome, DEFAULT_PASSES};
use propfair::lp::constrained_kmedian;
use propfair::{audit_exact, greedy_capture, Instance, Objective, Solution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{read_points, ScaleMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Greedy,
    Local,
    Lp,
    Kmeanspp,
    Hybrid,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Self::Greedy => "greedy",
            Self::Local => "local",
            Self::Lp => "lp",
            Self::Kmeanspp => "kmeanspp",
            Self::Hybrid => "hybrid",
        }
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "greedy" => Self::Greedy,
            "local" => Self::Local,
            "lp" => Self::Lp,
            "kmeanspp" => Self::Kmeanspp,
            "hybrid" => Self::Hybrid,
            _ => bail!("unknown algorithm {s:?}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalParams {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub tol: f64,
    pub passes: usize,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            rho_lo: 1.0,
            rho_hi: 3.0,
            tol: 1e-3,
            passes: DEFAULT_PASSES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansParams {
    pub iters: usize,
    pub restarts: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            iters: 300,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for HybridParams {
    fn default() -> Self {
        Self {
            alpha: 1.2,
            beta: 1.5,
        }
    }
}

/// Everything an algorithm run needs besides the instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub local: LocalParams,
    pub kmeans: KmeansParams,
    pub hybrid: HybridParams,
    /// Target ρ for `local` (single run instead of a search) and `lp`.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub solution: Solution,
    /// `None` for algorithms that always terminate.
    pub converged: Option<bool>,
    pub extra_centers: Option<i64>,
    /// Every converged Local Capture run behind the result.
    pub local_runs: Vec<LocalOutcome>,
}

impl RunResult {
    fn plain(solution: Solution) -> Self {
        Self {
            solution,
            converged: None,
            extra_centers: None,
            local_runs: Vec::new(),
        }
    }
}

fn run_local(inst: &Instance, p: &RunParams, seed: u64) -> Result<RunResult> {
    if let Some(rho) = p.rho {
        let run = local_capture(inst, rho, p.local.passes, seed)?;
        return Ok(RunResult {
            solution: run.solution.clone(),
            converged: Some(run.converged),
            extra_centers: None,
            local_runs: if run.converged { vec![run] } else { Vec::new() },
        });
    }
    let l = p.local;
    let search = min_rho_search(inst, l.rho_lo, l.rho_hi, l.tol, l.passes, seed)?;
    let (solution, converged) = match search.best {
        Some((_, s)) => (s, true),
        None => (
            local_capture(inst, l.rho_hi, l.passes, seed)?.solution,
            false,
        ),
    };
    Ok(RunResult {
        solution,
        converged: Some(converged),
        extra_centers: None,
        local_runs: search.converged_runs,
    })
}

pub fn run_algorithm(
    inst: &Instance,
    algo: Algorithm,
    p: &RunParams,
    seed: u64,
) -> Result<RunResult> {
    let k = inst.k();
    Ok(match algo {
        Algorithm::Greedy => RunResult::plain(greedy_capture(inst)?),
        Algorithm::Local => run_local(inst, p, seed)?,
        Algorithm::Lp => {
            let rho = p.rho.context("the lp algorithm needs a target rho")?;
            RunResult::plain(constrained_kmedian(inst, rho)?)
        }
        Algorithm::Kmeanspp => RunResult::plain(
            kmeanspp_best_of(inst, k, p.kmeans.iters, seed, p.kmeans.restarts)?.solution,
        ),
        Algorithm::Hybrid => {
            let local = run_local(inst, p, seed)?;
            let km = kmeanspp_best_of(inst, k, p.kmeans.iters, seed, p.kmeans.restarts)?;
            let out = hybrid_prune(
                inst,
                &local.solution,
                &km.solution,
                p.hybrid.alpha,
                p.hybrid.beta,
            )?;
            RunResult {
                solution: out.solution,
                converged: local.converged,
                extra_centers: Some(out.extra),
                local_runs: local.local_runs,
            }
        }
    })
}

/// Where a dataset's points come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    pub path: Option<PathBuf>,
    /// `kdd-surrogate` or `intro-spheres`.
    pub fixture: Option<String>,
    #[serde(default)]
    pub scale: ScaleMode,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub algorithms: Vec<Algorithm>,
    pub k_min: usize,
    pub k_max: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default)]
    pub params: RunParams,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("report")
}

fn default_format() -> String {
    "csv".into()
}

impl ExperimentConfig {
    /// Reads a TOML config; relative paths are taken from the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            if let Some(p) = d.path.as_mut().filter(|p| p.is_relative()) {
                *p = base.join(&*p);
            }
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub k: usize,
    pub seed: u64,
    pub scale: ScaleMode,
    #[serde(serialize_with = "ser_sig9")]
    pub rho: f64,
    #[serde(serialize_with = "ser_sig9")]
    pub kmeans: f64,
    #[serde(serialize_with = "ser_sig9")]
    pub kmedian: f64,
    pub wall_ms: u64,
    pub converged: Option<bool>,
    pub extra_centers: Option<i64>,
    pub open: Vec<usize>,
}

/// Base instance (with `k = 1`) for a dataset.
pub fn load_dataset(spec: &DatasetSpec) -> Result<Instance> {
    match (&spec.path, spec.fixture.as_deref()) {
        (Some(path), None) => Ok(Instance::euclidean_shared(
            read_points(path, spec.scale)?,
            1,
        )?),
        (None, Some("kdd-surrogate")) => Ok(fixtures::outlier_surrogate(&SurrogateSpec {
            k: 1,
            seed: spec.seed,
            ..Default::default()
        })?),
        (None, Some("intro-spheres")) => {
            Ok(fixtures::intro_spheres(50.0, 0.5, 500.0, 100, spec.seed)?.with_k(1)?)
        }
        (None, Some(other)) => bail!("dataset {}: unknown fixture {other:?}", spec.id),
        _ => bail!(
            "dataset {} needs exactly one of `path` and `fixture`",
            spec.id
        ),
    }
}

/// One audited run.
pub fn record(
    dataset: &str,
    scale: ScaleMode,
    inst: &Instance,
    algo: Algorithm,
    params: &RunParams,
    seed: u64,
) -> Result<(ExperimentRecord, RunResult)> {
    let start = Instant::now();
    let res = run_algorithm(inst, algo, params, seed)
        .with_context(|| format!("{} on {dataset} with k = {}", algo.id(), inst.k()))?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let rho = audit_exact(inst, &res.solution)?.rho;
    let rec = ExperimentRecord {
        dataset: dataset.to_owned(),
        algorithm: algo,
        k: inst.k(),
        seed,
        scale,
        rho,
        kmeans: res.solution.objective(Objective::KMeans),
        kmedian: res.solution.objective(Objective::KMedian),
        wall_ms,
        converged: res.converged,
        extra_centers: res.extra_centers,
        open: res.solution.open().to_vec(),
    };
    Ok((rec, res))
}

/// All `(dataset, algorithm, k, seed)` cells, run in parallel, in that order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    if cfg.k_min == 0 || cfg.k_min > cfg.k_max {
        bail!("need 1 <= k_min <= k_max, got {}..{}", cfg.k_min, cfg.k_max);
    }
    let mut out = Vec::new();
    for spec in &cfg.datasets {
        let base = load_dataset(spec)?;
        let cells: Vec<(Algorithm, usize, u64)> = cfg
            .algorithms
            .iter()
            .flat_map(|&a| {
                (cfg.k_min..=cfg.k_max).flat_map(move |k| cfg.seeds.iter().map(move |&s| (a, k, s)))
            })
            .collect();
        let recs = cells
            .par_iter()
            .map(|&(algo, k, seed)| {
                let inst = base.with_k(k)?;
                Ok(record(&spec.id, spec.scale, &inst, algo, &cfg.params, seed)?.0)
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(recs);
    }
    Ok(out)
}
