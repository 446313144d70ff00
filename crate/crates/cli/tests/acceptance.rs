//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Reference values come from oracles written here (naive audits, plain
//! enumeration, direct radius computation), not from the library's own audit.

use std::f64::consts::SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use itertools::Itertools;
use propfair::baselines::{hybrid_prune, kmeanspp_best_of};
use propfair::fixtures::{self, SurrogateSpec};
use propfair::greedy::{greedy_capture_with, GreedyOptions};
use propfair::local::{local_capture, min_rho_search, LocalOutcome};
use propfair::lp::constrained_kmedian_run;
use propfair::sampling::{sample_indices, SamplePlan};
use propfair::{
    audit_exact, brute_force_min_rho, greedy_capture, nearest_assignment, Instance, Objective,
};
use propfair_cli::data::{read_points, ScaleMode};
use propfair_cli::experiment::{
    run_experiment, Algorithm, DatasetSpec, ExperimentConfig, ExperimentRecord, KmeansParams,
    RunParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

// ---------------------------------------------------------------- oracles

fn coalition(n: usize, k: usize) -> usize {
    n.div_ceil(k)
}

fn oracle_ratio(current: f64, alt: f64) -> f64 {
    if alt == 0.0 {
        if current > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    } else if alt.is_infinite() {
        0.0
    } else {
        current / alt
    }
}

fn oracle_nearest(inst: &Instance, open: &[usize]) -> Vec<f64> {
    (0..inst.n())
        .map(|i| {
            open.iter()
                .map(|&c| inst.dist(i, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Smallest ρ ≥ 1 such that no `⌈n/k⌉` points all improve by more than ρ.
fn oracle_rho(inst: &Instance, open: &[usize]) -> f64 {
    let d = oracle_nearest(inst, open);
    let t = coalition(inst.n(), inst.k());
    let mut best = 1.0f64;
    for y in 0..inst.m() {
        let mut r: Vec<f64> = (0..inst.n())
            .map(|i| oracle_ratio(d[i], inst.dist(i, y)))
            .collect();
        r.sort_by(|a, b| b.total_cmp(a));
        best = best.max(r[t - 1]);
    }
    best
}

fn oracle_kmedian(inst: &Instance, open: &[usize]) -> f64 {
    oracle_nearest(inst, open).iter().sum()
}

fn oracle_radius(inst: &Instance, j: usize) -> f64 {
    let mut col: Vec<f64> = (0..inst.n()).map(|i| inst.dist(i, j)).collect();
    col.sort_by(f64::total_cmp);
    col[coalition(inst.n(), inst.k()) - 1]
}

fn center_gap(inst: &Instance, j: usize, open: &[usize]) -> f64 {
    open.iter()
        .map(|&x| inst.center_dist(j, x).expect("center distances"))
        .fold(f64::INFINITY, f64::min)
}

// ------------------------------------------------------------- generators

fn blob_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    if rng.random_bool(0.5) {
        return (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(0.0..100.0)).collect())
            .collect();
    }
    let blobs: Vec<(Vec<f64>, f64)> = (0..rng.random_range(1..=6))
        .map(|_| {
            (
                (0..dim).map(|_| rng.random_range(0.0..100.0)).collect(),
                rng.random_range(0.5..15.0),
            )
        })
        .collect();
    (0..n)
        .map(|_| {
            let (c, s) = &blobs[rng.random_range(0..blobs.len())];
            c.iter()
                .map(|&x| x + s * (rng.random::<f64>() - 0.5))
                .collect()
        })
        .collect()
}

/// Random L2 instance; about a third share N = M.
fn random_l2(seed: u64, max_n: usize, max_m: usize, max_k: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=3);
    let n = rng.random_range(2..=max_n);
    if rng.random_bool(1.0 / 3.0) {
        let pts = blob_points(&mut rng, n.min(max_m), dim);
        let k = rng.random_range(1..=max_k.min(pts.len()));
        return Instance::euclidean_shared(pts, k).unwrap();
    }
    let m = rng.random_range(1..=max_m);
    let pts = blob_points(&mut rng, n, dim);
    let ctrs = blob_points(&mut rng, m, dim);
    let k = rng.random_range(1..=max_k.min(m));
    Instance::euclidean(pts, ctrs, k).unwrap()
}

// --------------------------------------------------------------- criteria

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn c1_greedy_guarantee() -> Verdict {
    let bound = 1.0 + SQRT_2 + TOL;
    let (mut worst, mut violations, mut mismatches) = (1.0f64, 0, 0);
    for seed in 0..1000 {
        let inst = random_l2(seed, 200, 100, 10);
        let sol = greedy_capture(&inst).unwrap();
        let rho = audit_exact(&inst, &sol).unwrap().rho;
        if seed % 10 == 0 && (oracle_rho(&inst, sol.open()) - rho).abs() > TOL * rho.max(1.0) {
            mismatches += 1;
        }
        worst = worst.max(rho);
        if rho > bound {
            violations += 1;
        }
    }
    verdict(
        violations == 0 && mismatches == 0,
        format!("1000 instances, max rho {worst:.6}, {violations} above 1+sqrt2, {mismatches} oracle mismatches"),
    )
}

fn c2_lower_bounds() -> Verdict {
    let c1 = fixtures::claim1_instance();
    let (_, r1) = brute_force_min_rho(&c1).unwrap();
    let enum1 = (0..6)
        .combinations(3)
        .map(|x| oracle_rho(&c1, &x))
        .fold(f64::INFINITY, f64::min);
    let c2 = fixtures::claim2_instance();
    let (s2, r2) = brute_force_min_rho(&c2).unwrap();
    let check2 = oracle_rho(&c2, s2.open());
    let pass = (r1 - 2.0).abs() <= TOL
        && (enum1 - 2.0).abs() <= TOL
        && (r2 - 1.5).abs() <= TOL
        && (check2 - r2).abs() <= TOL;
    verdict(
        pass,
        format!("claim1 {r1} (plain enumeration {enum1}), claim2 {r2} (witness re-audit {check2})"),
    )
}

fn c3_tightness() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for eps in [0.1, 0.01, 0.001] {
        let inst = fixtures::theorem1_tightness(eps).unwrap();
        let run = greedy_capture_with(&inst, &GreedyOptions::default()).unwrap();
        let rho = audit_exact(&inst, &run.solution).unwrap().rho;
        let want = (1.0 - eps) * (1.0 + SQRT_2);
        let ok = (rho - want).abs() <= TOL
            && (oracle_rho(&inst, run.solution.open()) - want).abs() <= TOL;
        pass &= ok && run.opened == [1, 3];
        parts.push(format!("eps {eps}: {rho:.9}"));
    }
    verdict(pass, parts.join(", "))
}

fn c4_example1() -> Verdict {
    let inst = fixtures::example1_instance();
    let (mut fair, mut finite, mut bad) = (0, 0, 0);
    for x in (0..6).combinations(3) {
        let rho = oracle_rho(&inst, &x);
        let cost = oracle_kmedian(&inst, &x);
        let lib = audit_exact(&inst, &nearest_assignment(&inst, &x).unwrap())
            .unwrap()
            .rho;
        if rho != lib {
            bad += 1;
        }
        if rho <= 1.0 {
            fair += 1;
            if cost.is_finite() {
                bad += 1;
            }
        }
        if cost.is_finite() {
            finite += 1;
            if rho.is_finite() {
                bad += 1;
            }
        }
    }
    verdict(
        bad == 0 && fair > 0 && finite > 0,
        format!("{fair} proportional subsets all with unbounded cost, {finite} finite-cost subsets all with unbounded rho"),
    )
}

fn c5_lp_chain() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut done, mut violations) = (0, Vec::new());
    let mut fractional = 0;
    let mut worst_ratio = 0.0f64;
    while done < 50 {
        let n = rng.random_range(6..=60);
        let k = rng.random_range(2..=5usize.min(n));
        if propfair::audit::binomial(n, k) > 20_000 {
            continue;
        }
        let pts: Vec<Vec<f64>> = blob_points(&mut rng, n, 2);
        let inst = Instance::euclidean_shared(pts, k).unwrap();
        let (_, rho) = brute_force_min_rho(&inst).unwrap();
        let run = constrained_kmedian_run(&inst, rho).unwrap();
        let gamma = rho + 1.0;
        let lp = run.fractional.objective;
        if !run.fractional.is_integral() {
            fractional += 1;
        }
        let open = run.solution.open();
        let cost = oracle_kmedian(&inst, open);
        let best_fair = (0..n)
            .combinations(k)
            .filter(|x| oracle_rho(&inst, x) <= rho)
            .map(|x| oracle_kmedian(&inst, &x))
            .fold(f64::INFINITY, f64::min);
        let slack = 1e-7 * best_fair.max(1.0);
        if open.len() != k || cost > 8.0 * lp + slack || lp > best_fair + slack {
            violations.push(format!("#{done} cost {cost} lp {lp} fair {best_fair}"));
        }
        if lp > 0.0 {
            worst_ratio = worst_ratio.max(cost / lp);
        }
        for j in 0..n {
            if center_gap(&inst, j, open) > 27.0 * gamma * oracle_radius(&inst, j) + TOL {
                violations.push(format!("#{done} center {j} uncovered"));
            }
        }
        done += 1;
    }
    verdict(
        violations.is_empty(),
        format!(
            "50 instances ({fractional} with fractional LP), max cost/LP {worst_ratio:.3}, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(": {v}")).unwrap_or_default()
        ),
    )
}

fn c6_lemma1() -> Verdict {
    let (mut a_tested, mut b_tested, mut failures) = (0, 0, 0);
    for seed in 0..500u64 {
        let inst = random_l2(10_000 + seed, 60, 30, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = rng.random_range(1..=inst.k());
        let open: Vec<usize> = rand::seq::index::sample(&mut rng, inst.m(), size).into_vec();
        let gamma = rng.random_range(1.0..4.0);
        let rho = oracle_rho(&inst, &open);
        let r: Vec<f64> = (0..inst.m()).map(|j| oracle_radius(&inst, j)).collect();
        let covered = |g: f64| (0..inst.m()).all(|j| center_gap(&inst, j, &open) <= g * r[j] + TOL);
        // (a) at the drawn γ and at the smallest γ making the premise true.
        let tight = (0..inst.m())
            .map(|j| {
                if r[j] > 0.0 {
                    center_gap(&inst, j, &open) / r[j]
                } else {
                    1.0
                }
            })
            .fold(1.0f64, f64::max)
            * (1.0 + 1e-12);
        for g in [gamma, tight] {
            if g.is_finite() && covered(g) {
                a_tested += 1;
                failures += usize::from(rho > 1.0 + g + TOL);
            }
        }
        // (b) at the drawn γ and at γ = ρ(X); the lemma is about finite γ.
        for g in [gamma, rho] {
            if g.is_finite() && rho <= g {
                b_tested += 1;
                failures += usize::from(!covered(1.0 + g));
            }
        }
    }
    verdict(
        failures == 0,
        format!("500 triples; forward direction exercised {a_tested}x, converse {b_tested}x, {failures} failures"),
    )
}

fn c7_sampling() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (eps, delta) in [(0.5, 0.1), (0.25, 0.05)] {
        for (m, k) in [(50usize, 2usize), (30, 3)] {
            let mut rng = ChaCha8Rng::seed_from_u64((m * 100 + k) as u64);
            let pts = blob_points(&mut rng, 5000, 2);
            let ctrs: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, 5000, m)
                .iter()
                .map(|i| pts[i].clone())
                .collect();
            let inst = Instance::euclidean(pts, ctrs, k).unwrap();
            let mut solutions: Vec<Vec<usize>> = (0..8)
                .map(|_| rand::seq::index::sample(&mut rng, m, k).into_vec())
                .collect();
            solutions.push(greedy_capture(&inst).unwrap().open().to_vec());
            // Membership vectors of every (X, y, ρ) improving set on the full instance.
            let mut sets: Vec<(Vec<bool>, f64)> = Vec::new();
            for x in &solutions {
                let d = oracle_nearest(&inst, x);
                for y in 0..m {
                    for rho in [1.0, 1.5, 2.0] {
                        let hit: Vec<bool> = (0..5000)
                            .map(|i| oracle_ratio(d[i], inst.dist(i, y)) > rho)
                            .collect();
                        let frac = hit.iter().filter(|&&h| h).count() as f64 / 5000.0;
                        sets.push((hit, frac));
                    }
                }
            }
            let size = SamplePlan::new(eps, delta, 1.0, 0)
                .unwrap()
                .sample_size(&inst);
            let bound = eps / k as f64;
            let mut ok = 0;
            let mut worst = 0.0f64;
            for trial in 0..200u64 {
                let s = sample_indices(5000, size, 7_000 + trial);
                let dev = sets
                    .iter()
                    .map(|(hit, full)| {
                        (s.iter().filter(|&&i| hit[i]).count() as f64 / s.len() as f64 - full).abs()
                    })
                    .fold(0.0, f64::max);
                worst = worst.max(dev);
                ok += usize::from(dev <= bound);
            }
            let need = ((1.0 - delta) * 200.0).ceil() as usize;
            pass &= ok >= need && size < 5000;
            parts.push(format!("(eps {eps}, delta {delta}, m {m}, k {k}): sample {size}, {ok}/200 within {bound:.3}, max dev {worst:.4}"));
        }
    }
    verdict(pass, parts.join("; "))
}

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn sweep(id: &str, path: PathBuf, algorithms: Vec<Algorithm>) -> Vec<ExperimentRecord> {
    let cfg = ExperimentConfig {
        datasets: vec![DatasetSpec {
            id: id.into(),
            path: Some(path),
            fixture: None,
            scale: ScaleMode::MinMax,
            seed: 0,
        }],
        algorithms,
        k_min: 2,
        k_max: 10,
        seeds: vec![0],
        out_dir: PathBuf::new(),
        format: "csv".into(),
        params: RunParams::default(),
    };
    run_experiment(&cfg).unwrap()
}

/// Re-audits every record from its stored centers; returns the mismatches.
fn round_trip(path: &Path, records: &[ExperimentRecord]) -> usize {
    let pts = read_points(path, ScaleMode::MinMax).unwrap();
    let base = Instance::euclidean_shared(pts, 1).unwrap();
    records
        .iter()
        .filter(|r| {
            let inst = base.with_k(r.k).unwrap();
            (oracle_rho(&inst, &r.open) - r.rho).abs() > TOL * r.rho.max(1.0)
        })
        .count()
}

fn local_runs_for(
    path: &Path,
    ks: std::ops::RangeInclusive<usize>,
    runs: &mut Runs,
) -> Vec<Option<f64>> {
    let pts = read_points(path, ScaleMode::MinMax).unwrap();
    let base = Instance::euclidean_shared(pts, 1).unwrap();
    let p = RunParams::default().local;
    ks.map(|k| {
        let inst = base.with_k(k).unwrap();
        let s = min_rho_search(&inst, p.rho_lo, p.rho_hi, p.tol, p.passes, 0).unwrap();
        runs.extend(s.converged_runs.iter().cloned().map(|r| (inst.clone(), r)));
        s.rho()
    })
    .collect()
}

fn c8_iris(runs: &mut Runs) -> Verdict {
    let path = data_path("iris.csv");
    let n = read_points(&path, ScaleMode::None).unwrap().len();
    let recs = sweep(
        "iris",
        path.clone(),
        vec![Algorithm::Local, Algorithm::Kmeanspp],
    );
    local_runs_for(&path, 2..=10, runs);
    let all_one = recs.iter().all(|r| r.rho <= 1.0 + TOL);
    let (mut worst_ratio, mut worst_k) = (1.0f64, 2);
    for k in 2..=10 {
        let get = |a| {
            recs.iter()
                .find(|r| r.k == k && r.algorithm == a)
                .unwrap()
                .kmeans
        };
        let (l, m) = (get(Algorithm::Local), get(Algorithm::Kmeanspp));
        if l.max(m) / l.min(m) > worst_ratio {
            (worst_ratio, worst_k) = (l.max(m) / l.min(m), k);
        }
    }
    let mismatches = round_trip(&path, &recs);
    let bad: Vec<String> = recs
        .iter()
        .filter(|r| r.rho > 1.0 + TOL)
        .map(|r| format!("{}@k={}: {}", r.algorithm.id(), r.k, r.rho))
        .collect();
    verdict(
        n == 150 && all_one && worst_ratio <= 2.0 && mismatches == 0,
        format!(
            "n = {n}, {} runs with rho = 1 of {}{}, worst k-means ratio {worst_ratio:.3} at k = {worst_k}, {mismatches} re-audit mismatches",
            recs.len() - bad.len(),
            recs.len(),
            if bad.is_empty() { String::new() } else { format!(" (above 1: {})", bad.join(", ")) }
        ),
    )
}

fn c9_diabetes(runs: &mut Runs) -> Verdict {
    let full = data_path("diabetes.csv");
    let (path, label) = if full.exists() {
        (full, "diabetes.csv")
    } else {
        (
            data_path("pima_mass532.csv"),
            "fallback: MASS Pima 532 complete cases, the 768-row file is unavailable",
        )
    };
    let n = read_points(&path, ScaleMode::None).unwrap().len();
    let local = local_runs_for(&path, 2..=10, runs);
    let recs = sweep("diabetes", path.clone(), vec![Algorithm::Kmeanspp]);
    let local_ok = local.iter().all(|r| r.is_some_and(|r| r <= 1.01));
    let km_above = recs
        .iter()
        .filter(|r| r.rho > 1.0 + TOL)
        .map(|r| r.k)
        .collect::<Vec<_>>();
    let n_ok = label != "diabetes.csv" || n == 768;
    let fmt = |r: &Option<f64>| r.map_or("none".into(), |v| format!("{v:.4}"));
    verdict(
        local_ok && !km_above.is_empty() && n_ok && round_trip(&path, &recs) == 0,
        format!(
            "[{label}] n = {n}, local rho* per k [{}], kmeanspp rho > 1 at k = {km_above:?}",
            local.iter().map(fmt).join(", ")
        ),
    )
}

fn c10_hybrid(runs: &mut Runs) -> Verdict {
    let base = fixtures::outlier_surrogate(&SurrogateSpec {
        k: 1,
        ..Default::default()
    })
    .unwrap();
    let p = RunParams::default();
    let KmeansParams { iters, restarts } = p.kmeans;
    let mut parts = Vec::new();
    let mut pass = true;
    let mut gaps = Vec::new();
    for k in 1..=10 {
        let inst = base.with_k(k).unwrap();
        let s = min_rho_search(
            &inst,
            p.local.rho_lo,
            p.local.rho_hi,
            p.local.tol,
            p.local.passes,
            0,
        )
        .unwrap();
        runs.extend(s.converged_runs.iter().cloned().map(|r| (inst.clone(), r)));
        let Some((_, local)) = s.best else {
            pass = false;
            parts.push(format!("k={k}: local search did not converge"));
            continue;
        };
        let km = kmeanspp_best_of(&inst, k, iters, 0, restarts).unwrap();
        let out = hybrid_prune(&inst, &local, &km.solution, 1.2, 1.5).unwrap();
        let rho_local = oracle_rho(&inst, local.open());
        let rho_km = oracle_rho(&inst, km.solution.open());
        let rho = oracle_rho(&inst, &out.open);
        let kmeans = out.solution.objective(Objective::KMeans);
        let ok = rho <= 1.2 * rho_local + TOL
            && kmeans <= 1.5 * km.solution.objective(Objective::KMeans) * (1.0 + TOL);
        pass &= ok;
        gaps.push(rho_km / rho_local);
        parts.push(format!("k={k}: extra {} rho {rho:.3}", out.extra));
    }
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    verdict(
        pass,
        format!(
            "{}; kmeans++/local rho up to {max_gap:.2}x",
            parts.join(", ")
        ),
    )
}

fn c11_local_contract(runs: &mut Runs) -> Verdict {
    for seed in 0..200u64 {
        let inst = random_l2(20_000 + seed, 80, 40, 6);
        let rho = ChaCha8Rng::seed_from_u64(seed).random_range(1.0..3.0);
        let out = local_capture(&inst, rho, 50, seed).unwrap();
        if out.converged {
            runs.push((inst, out));
        }
    }
    let violations: Vec<String> = runs
        .iter()
        .filter(|(inst, r)| oracle_rho(inst, r.solution.open()) > r.rho + TOL)
        .map(|(_, r)| format!("target {} audited {}", r.rho, r.audited_rho))
        .collect();
    verdict(
        violations.is_empty(),
        format!(
            "{} converged runs checked, {} violations",
            runs.len(),
            violations.len()
        ),
    )
}

type Runs = Vec<(Instance, LocalOutcome)>;
type Criterion = Box<dyn FnMut(&mut Runs) -> Verdict>;

fn main() {
    let mut runs: Runs = Vec::new();
    let mut criteria: Vec<(&str, Criterion, Duration)> = vec![
        (
            "greedy capture is (1+sqrt2)-proportional",
            Box::new(|_| c1_greedy_guarantee()),
            Duration::from_secs(120),
        ),
        (
            "lower-bound fixtures",
            Box::new(|_| c2_lower_bounds()),
            Duration::from_secs(300),
        ),
        (
            "greedy tightness instance",
            Box::new(|_| c3_tightness()),
            Duration::MAX,
        ),
        (
            "fairness/optimality dichotomy",
            Box::new(|_| c4_example1()),
            Duration::MAX,
        ),
        (
            "LP chain: 8x cost and 27 gamma R covering",
            Box::new(|_| c5_lp_chain()),
            Duration::from_secs(600),
        ),
        (
            "covering lemma, both directions",
            Box::new(|_| c6_lemma1()),
            Duration::MAX,
        ),
        (
            "sampling concentration",
            Box::new(|_| c7_sampling()),
            Duration::MAX,
        ),
        (
            "Iris: local and k-means++ exactly proportional",
            Box::new(c8_iris),
            Duration::from_secs(60),
        ),
        (
            "Diabetes: local below 1.01, k-means++ above 1",
            Box::new(c9_diabetes),
            Duration::MAX,
        ),
        (
            "hybrid pruning on the outlier surrogate",
            Box::new(c10_hybrid),
            Duration::MAX,
        ),
        (
            "local capture contract on every convergence",
            Box::new(c11_local_contract),
            Duration::MAX,
        ),
    ];
    let mut passed = 0;
    for (idx, (name, f, budget)) in criteria.iter_mut().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| f(&mut runs))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = v.pass && in_time;
        passed += usize::from(pass);
        let timing = if in_time {
            format!("{:.1}s", took.as_secs_f64())
        } else {
            format!("{:.1}s, over budget", took.as_secs_f64())
        };
        println!(
            "{} {:>2} {name}: {} ({timing})",
            if pass { "PASS" } else { "FAIL" },
            idx + 1,
            v.detail
        );
    }
    println!("acceptance: {passed}/{} criteria pass", criteria.len());
}
