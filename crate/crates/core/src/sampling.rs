//! Uniform point sampling for fast audits and fast Greedy Capture.
//!
//! A uniform sample of `C·(k³/ε²)·ln(m/δ)` points preserves, for every
//! solution `X` and deviation target `y`, the fraction of points that would
//! improve by more than ρ at `y` to within `ε/k`, with probability `1 − δ`.
//! Auditing or clustering on the sample therefore certifies proportionality
//! against coalitions of size `⌈(1+ε)·n/k⌉` on the full instance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::audit::{audit_nearest, check_solution, improves, AuditReport};
use crate::error::{Error, Result};
use crate::greedy::greedy_capture;
use crate::instance::{nearest_assignment, CoalitionSize, Instance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePlan {
    pub epsilon: f64,
    pub delta: f64,
    /// Constant in front of the sample-size bound.
    pub constant_c: f64,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(epsilon: f64, delta: f64, constant_c: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be in (0, 1], got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be in (0, 1], got {delta}"
            )));
        }
        if !(constant_c > 0.0 && constant_c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample constant must be positive, got {constant_c}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            constant_c,
            seed,
        })
    }

    /// `⌈C·(k³/ε²)·ln(m/δ)⌉`, at least 1, before capping at `n`.
    pub fn uncapped_size(&self, k: usize, m: usize) -> usize {
        let k = k as f64;
        let raw = self.constant_c * k * k * k / (self.epsilon * self.epsilon)
            * (m as f64 / self.delta).ln();
        raw.ceil().max(1.0) as usize
    }

    pub fn sample_size(&self, instance: &Instance) -> usize {
        self.uncapped_size(instance.k(), instance.m())
            .min(instance.n())
    }
}

/// Ascending indices of a uniform sample without replacement.
pub fn sample_indices(n: usize, size: usize, seed: u64) -> Vec<usize> {
    let size = size.min(n);
    if size == n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, size).into_vec();
    idx.sort_unstable();
    idx
}

/// Sub-instance on the sampled points with the same centers and `k`, plus
/// the original indices of the sampled points.
pub fn draw_sample(instance: &Instance, plan: &SamplePlan) -> Result<(Instance, Vec<usize>)> {
    let size = plan.sample_size(instance);
    if size == instance.n() {
        return Ok((instance.clone(), (0..size).collect()));
    }
    let idx = sample_indices(instance.n(), size, plan.seed);
    Ok((instance.restrict_points(&idx)?, idx))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledAudit {
    /// Audit on the sample, with the witness coalition in original indices.
    pub report: AuditReport,
    pub sample_size: usize,
    pub epsilon: f64,
    pub delta: f64,
}

/// Audit on a uniform sample. With probability `1 − δ` the returned ρ makes
/// the solution ρ-proportional to `(1+ε)`-deviations on the full instance.
pub fn epsilon_delta_audit(
    instance: &Instance,
    solution: &Solution,
    plan: &SamplePlan,
) -> Result<SampledAudit> {
    check_solution(instance, solution)?;
    let (sub, idx) = draw_sample(instance, plan)?;
    let nearest: Vec<f64> = idx.iter().map(|&i| solution.nearest()[i]).collect();
    let mut report = audit_nearest(&sub, &nearest, sub.coalition().threshold);
    report.per_center_rho = None;
    if let Some(s) = report.witness_coalition.as_mut() {
        for i in s.iter_mut() {
            *i = idx[*i];
        }
    }
    Ok(SampledAudit {
        report,
        sample_size: idx.len(),
        epsilon: plan.epsilon,
        delta: plan.delta,
    })
}

/// Greedy Capture on a sample of the points, with every center available.
/// The returned solution is over the full instance.
pub fn sampled_greedy(instance: &Instance, plan: &SamplePlan) -> Result<Solution> {
    let (sub, _) = draw_sample(instance, plan)?;
    let on_sample = greedy_capture(&sub)?;
    nearest_assignment(instance, on_sample.open())
}

/// First center `y` at which at least `⌈inflation·n/k⌉` points improve by
/// more than a factor ρ, if any.
pub fn deviation_violator(
    instance: &Instance,
    solution: &Solution,
    rho: f64,
    inflation: f64,
) -> Result<Option<usize>> {
    check_solution(instance, solution)?;
    let t = CoalitionSize::inflated(instance.n(), instance.k(), inflation)?.threshold;
    Ok((0..instance.m()).find(|&y| {
        (0..instance.n())
            .filter(|&i| improves(rho, instance.dist(i, y), solution.nearest()[i]))
            .take(t)
            .count()
            >= t
    }))
}

/// Whether the solution is ρ-proportional to `inflation`-deviations.
pub fn audit_deviations(
    instance: &Instance,
    solution: &Solution,
    rho: f64,
    inflation: f64,
) -> Result<bool> {
    Ok(deviation_violator(instance, solution, rho, inflation)?.is_none())
}

/// `| |R(sample)|/|sample| − |R(N)|/n |` for one `(X, y)` pair, where `R` is
/// the set of points improving by more than ρ at `y`.
pub fn concentration_gap(
    instance: &Instance,
    sample: &[usize],
    nearest: &[f64],
    y: usize,
    rho: f64,
) -> f64 {
    let hit = |i: usize| improves(rho, instance.dist(i, y), nearest[i]);
    let full = (0..instance.n()).filter(|&i| hit(i)).count() as f64 / instance.n() as f64;
    let part = sample.iter().filter(|&&i| hit(i)).count() as f64 / sample.len() as f64;
    (part - full).abs()
}
