//! Objective-driven baselines: k-means++ seeding with Lloyd iterations, and
//! the union-and-prune hybrid that trades proportionality against k-means.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::audit::{rho_with_threshold, ser_sig9};
use crate::error::{Error, Result};
use crate::instance::{nearest_assignment, Instance, Objective, Solution};

/// Lloyd stops once the objective improves by less than this fraction.
pub const LLOYD_REL_TOL: f64 = 1e-6;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: the first seed uniformly, each further seed with
/// probability proportional to its squared distance to the nearest seed.
/// Returns indices into `points`; repeats are possible only when every
/// point already coincides with a seed.
pub fn dsquared_seeds<R: Rng>(points: &[Vec<f64>], count: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let mut seeds = Vec::with_capacity(count);
    if n == 0 || count == 0 {
        return seeds;
    }
    seeds.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points.iter().map(|p| sq(p, &points[seeds[0]])).collect();
    while seeds.len() < count {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            Err(_) => rng.random_range(0..n),
        };
        seeds.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq(p, &points[next]));
        }
    }
    seeds
}

#[derive(Debug, Clone)]
pub struct KmeansRun {
    /// Centroids snapped to distinct candidate centers.
    pub solution: Solution,
    /// Continuous centroids before snapping.
    pub centroids: Vec<Vec<f64>>,
    /// k-means objective of the continuous centroids after each assignment.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// k-means++ seeding followed by Lloyd's algorithm. Centroids are snapped, in
/// order, to the nearest candidate center not already taken.
pub fn kmeanspp(instance: &Instance, k: usize, max_iters: usize, seed: u64) -> Result<KmeansRun> {
    let (Some(points), Some(centers)) = (instance.point_coords(), instance.center_coords()) else {
        return Err(Error::Unsupported(
            "k-means++ needs a Euclidean instance".into(),
        ));
    };
    if k == 0 || k > instance.m() {
        return Err(Error::InvalidBudget { k, m: instance.m() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = dsquared_seeds(points, k, &mut rng)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    let dim = points[0].len();
    let mut label = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters.max(1) {
        iterations += 1;
        let mut obj = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(c, x)| (c, sq(p, x)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            label[i] = best;
            obj += d;
        }
        let prev = history.last().copied();
        history.push(obj);
        if let Some(prev) = prev {
            if prev - obj <= LLOYD_REL_TOL * prev {
                converged = true;
                break;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&label) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }

    let mut taken = vec![false; centers.len()];
    let mut open = Vec::with_capacity(k);
    for x in &centroids {
        let j = (0..centers.len())
            .filter(|&j| !taken[j])
            .map(|j| (j, sq(x, &centers[j])))
            .fold(
                (usize::MAX, f64::INFINITY),
                |a, b| if b.1 < a.1 { b } else { a },
            )
            .0;
        taken[j] = true;
        open.push(j);
    }
    Ok(KmeansRun {
        solution: nearest_assignment(instance, &open)?,
        centroids,
        history,
        iterations,
        converged,
    })
}

/// Best of several k-means++ runs by snapped k-means objective.
pub fn kmeanspp_best_of(
    instance: &Instance,
    k: usize,
    max_iters: usize,
    seed: u64,
    restarts: usize,
) -> Result<KmeansRun> {
    let mut best: Option<KmeansRun> = None;
    for r in 0..restarts.max(1) {
        let run = kmeanspp(instance, k, max_iters, seed.wrapping_add(r as u64))?;
        let obj = run.solution.objective(Objective::KMeans);
        if best
            .as_ref()
            .is_none_or(|b| obj < b.solution.objective(Objective::KMeans))
        {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridOutcome {
    #[serde(skip)]
    pub solution: Solution,
    pub open: Vec<usize>,
    /// Removals in the order they happened.
    pub removed: Vec<usize>,
    /// `|Z| − k`.
    pub extra: i64,
    #[serde(serialize_with = "ser_sig9")]
    pub rho: f64,
    #[serde(serialize_with = "ser_sig9")]
    pub rho_bound: f64,
    #[serde(serialize_with = "ser_sig9")]
    pub kmeans: f64,
    #[serde(serialize_with = "ser_sig9")]
    pub kmeans_bound: f64,
}

/// Start from `X_local ∪ X_kmeans` and remove centers, scanning ascending,
/// while the audited ρ stays within `alpha · ρ(X_local)` and the k-means
/// objective within `beta · kmeans(X_kmeans)`. Coalition size stays `⌈n/k⌉`
/// for the instance's `k` even though more than `k` centers may be open.
pub fn hybrid_prune(
    instance: &Instance,
    x_local: &Solution,
    x_kmeans: &Solution,
    alpha: f64,
    beta: f64,
) -> Result<HybridOutcome> {
    if !(alpha >= 1.0 && beta >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha and beta must be >= 1, got {alpha} and {beta}"
        )));
    }
    let t = instance.coalition().threshold;
    let rho_of = |s: &Solution| rho_with_threshold(instance, s.nearest(), t);
    let rho_bound = alpha * rho_of(x_local);
    let kmeans_bound = beta * x_kmeans.objective(Objective::KMeans);

    let mut z: Vec<usize> = x_local
        .open()
        .iter()
        .chain(x_kmeans.open())
        .copied()
        .collect();
    z.sort_unstable();
    z.dedup();
    let mut current = nearest_assignment(instance, &z)?;
    let mut removed = Vec::new();
    let mut changed = true;
    while changed && current.len() > 1 {
        changed = false;
        for &c in current.open().to_vec().iter() {
            if current.len() == 1 {
                break;
            }
            let rest: Vec<usize> = current.open().iter().copied().filter(|&x| x != c).collect();
            let cand = nearest_assignment(instance, &rest)?;
            if cand.objective(Objective::KMeans) <= kmeans_bound && rho_of(&cand) <= rho_bound {
                current = cand;
                removed.push(c);
                changed = true;
            }
        }
    }
    let rho = rho_of(&current);
    let kmeans = current.objective(Objective::KMeans);
    debug_assert!(rho <= rho_bound && kmeans <= kmeans_bound);
    Ok(HybridOutcome {
        open: current.open().to_vec(),
        extra: current.len() as i64 - instance.k() as i64,
        solution: current,
        removed,
        rho,
        rho_bound,
        kmeans,
        kmeans_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::Normal;

    #[test]
    fn identical_points() {
        let inst = Instance::euclidean_shared(vec![vec![2.0, 2.0]; 9], 3).unwrap();
        let run = kmeanspp(&inst, 3, 50, 1).unwrap();
        assert_eq!(run.history.last().copied(), Some(0.0));
        assert_eq!(run.solution.objective(Objective::KMeans), 0.0);
        assert_eq!(run.solution.len(), 3);
    }

    #[test]
    fn tables_are_rejected() {
        let inst = Instance::table(vec![vec![0.0, 1.0]], 1).unwrap();
        assert!(matches!(
            kmeanspp(&inst, 1, 10, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn separated_clusters_and_monotone_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut pts = Vec::new();
        for &cx in &[0.0, 100.0] {
            for _ in 0..200 {
                pts.push(vec![cx + noise.sample(&mut rng), noise.sample(&mut rng)]);
            }
        }
        let inst = Instance::euclidean_shared(pts, 2).unwrap();
        let run = kmeanspp(&inst, 2, 100, 3).unwrap();
        assert!(run.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        // Two unit-variance dimensions, 400 points: expected within-cluster sum 800.
        let obj = run.solution.objective(Objective::KMeans);
        let analytic = 400.0 * 2.0;
        assert!((obj - analytic).abs() <= 0.05 * analytic, "objective {obj}");
    }

    #[test]
    fn prune_same_sets() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 6) as f64, (i / 6) as f64])
            .collect();
        let inst = Instance::euclidean_shared(pts, 3).unwrap();
        let x = nearest_assignment(&inst, &[2, 14, 27]).unwrap();
        let out = hybrid_prune(&inst, &x, &x, 1.0, 1.0).unwrap();
        assert_eq!(out.open, vec![2, 14, 27]);
        assert_eq!(out.extra, 0);
    }

    #[test]
    fn prune_unconstrained() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i % 6) as f64, (i / 6) as f64])
            .collect();
        let inst = Instance::euclidean_shared(pts, 3).unwrap();
        let a = nearest_assignment(&inst, &[2, 14, 27]).unwrap();
        let b = nearest_assignment(&inst, &[0, 7, 29]).unwrap();
        let out = hybrid_prune(&inst, &a, &b, f64::INFINITY, f64::INFINITY).unwrap();
        assert_eq!(out.open.len(), 1);
        assert_eq!(out.extra, -2);
        assert!(hybrid_prune(&inst, &a, &b, 0.5, 1.0).is_err());
    }
}
