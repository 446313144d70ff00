//! Exact proportionality audits.
//!
//! For a solution `X` and candidate center `y`, ρ_y is the `⌈n/k⌉`-th largest
//! improvement ratio `D_i(X) / d(i, y)`. The solution is ρ-proportional exactly
//! when `ρ ≥ ρ_y` for every `y ∈ M`, so the audited value is
//! `max(1, max_y ρ_y)`.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::{nearest_assignment, Instance, Reduction, Solution};

/// Largest number of candidate subsets [`brute_force_min_rho`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Improvement ratio of a point with current distance `current` that could
/// move to a center at distance `alt`.
///
/// A point already at distance 0 cannot strictly improve (ratio 1), a point
/// with a co-located alternative and positive current distance improves by an
/// unbounded factor, and an unreachable alternative offers nothing.
#[inline]
pub fn ratio(current: f64, alt: f64) -> f64 {
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

/// Whether `ρ · alt < current`, evaluated through [`ratio`] so that it agrees
/// exactly with the audit.
#[inline]
pub fn improves(rho: f64, alt: f64, current: f64) -> bool {
    ratio(current, alt) > rho
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    #[serde(serialize_with = "ser_sig9")]
    pub rho: f64,
    pub witness_center: Option<usize>,
    pub witness_coalition: Option<Vec<usize>>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_opt_vec"
    )]
    pub per_center_rho: Option<Vec<f64>>,
}

/// Finite values as numbers with 9 significant digits, infinity as `"inf"`.
pub fn format_sig9(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{:.8e}", v);
    let parsed: f64 = s.parse().expect("formatted float parses");
    let out = format!("{}", parsed);
    out
}

/// Serde helper applying [`format_sig9`].
pub fn ser_sig9<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        let rounded: f64 = format_sig9(*v).parse().expect("finite");
        s.serialize_f64(rounded)
    } else {
        s.serialize_str(&format_sig9(*v))
    }
}

fn ser_opt_vec<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let v = v.as_ref().expect("skipped when none");
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            let rounded: f64 = format_sig9(*x).parse().expect("finite");
            seq.serialize_element(&rounded)?;
        } else {
            seq.serialize_element(&format_sig9(*x))?;
        }
    }
    seq.end()
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit report serializes")
    }
}

/// `t`-th largest ratio against center `y`.
fn rho_at(instance: &Instance, nearest: &[f64], y: usize, t: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend((0..nearest.len()).map(|i| ratio(nearest[i], instance.dist(i, y))));
    let idx = t - 1;
    let (_, nth, _) = buf.select_nth_unstable_by(idx, |a, b| b.total_cmp(a));
    *nth
}

/// ρ_y for every candidate center, against coalitions of size `threshold`.
pub fn per_center_rho(instance: &Instance, nearest: &[f64], threshold: usize) -> Vec<f64> {
    assert!(threshold >= 1);
    if threshold > nearest.len() {
        return vec![0.0; instance.m()];
    }
    (0..instance.m())
        .into_par_iter()
        .map_init(Vec::new, |buf, y| {
            rho_at(instance, nearest, y, threshold, buf)
        })
        .collect()
}

/// Audited ρ of the nearest distances `nearest` with a custom coalition size.
pub fn rho_with_threshold(instance: &Instance, nearest: &[f64], threshold: usize) -> f64 {
    per_center_rho(instance, nearest, threshold)
        .into_iter()
        .fold(1.0, f64::max)
}

/// Exact audit with the witness coalition; `per_center_rho` left empty.
pub fn audit_exact(instance: &Instance, solution: &Solution) -> Result<AuditReport> {
    let mut report = audit_detailed(instance, solution)?;
    report.per_center_rho = None;
    Ok(report)
}

/// Exact audit including ρ_y for every candidate center.
pub fn audit_detailed(instance: &Instance, solution: &Solution) -> Result<AuditReport> {
    check_solution(instance, solution)?;
    Ok(audit_nearest(
        instance,
        solution.nearest(),
        instance.coalition().threshold,
    ))
}

pub(crate) fn check_solution(instance: &Instance, solution: &Solution) -> Result<()> {
    if solution.is_empty() {
        return Err(Error::EmptySolution);
    }
    if solution.nearest().len() != instance.n() {
        return Err(Error::DimensionMismatch(format!(
            "solution covers {} points, instance has {}",
            solution.nearest().len(),
            instance.n()
        )));
    }
    if let Some(&bad) = solution.open().iter().find(|&&j| j >= instance.m()) {
        return Err(Error::CenterOutOfRange {
            index: bad,
            m: instance.m(),
        });
    }
    Ok(())
}

/// Audit from raw nearest distances and an explicit coalition size.
pub fn audit_nearest(instance: &Instance, nearest: &[f64], threshold: usize) -> AuditReport {
    let per = per_center_rho(instance, nearest, threshold);
    // Lowest index among the maximizers.
    let mut best: Option<(usize, f64)> = None;
    for (y, &r) in per.iter().enumerate() {
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((y, r));
        }
    }
    let (rho, witness_center, witness_coalition) = match best {
        Some((y, r)) if r > 1.0 => {
            let mut order: Vec<(f64, usize)> = (0..nearest.len())
                .map(|i| (ratio(nearest[i], instance.dist(i, y)), i))
                .collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut coalition: Vec<usize> = order[..threshold].iter().map(|&(_, i)| i).collect();
            coalition.sort_unstable();
            (r, Some(y), Some(coalition))
        }
        _ => (1.0, None, None),
    };
    AuditReport {
        rho,
        witness_center,
        witness_coalition,
        per_center_rho: Some(per),
    }
}

/// Audit over merged point classes: `nearest[p]` is the class distance and
/// each class counts `weights[p]` times.
pub fn weighted_rho(red: &Reduction, nearest: &[f64], weights: &[usize], threshold: usize) -> f64 {
    let mut best = 1.0f64;
    let mut buf: Vec<(f64, usize)> = Vec::with_capacity(nearest.len());
    for y in 0..red.center_classes.len() {
        buf.clear();
        buf.extend(
            nearest
                .iter()
                .enumerate()
                .map(|(p, &d)| (ratio(d, red.dist(p, y)), weights[p])),
        );
        buf.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut acc = 0usize;
        for &(r, w) in &buf {
            acc += w;
            if acc >= threshold {
                best = best.max(r);
                break;
            }
        }
    }
    best
}

/// `C(n, r)` saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Minimum audited ρ over all solutions with at most `k` centers, by
/// enumeration. Points with identical distance rows and centers with
/// identical columns are merged first, which leaves every audit unchanged.
/// Ties resolve to the lexicographically first subset of class
/// representatives.
pub fn brute_force_min_rho(instance: &Instance) -> Result<(Solution, f64)> {
    let red = instance.reduce();
    let classes = red.center_classes.len();
    let r = instance.k().min(classes);
    let count = binomial(classes, r);
    if count > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    let weights = red.weights();
    let t = instance.coalition().threshold;
    let p = red.point_classes.len();
    let mut nearest = vec![0.0; p];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in (0..classes).combinations(r) {
        for (q, slot) in nearest.iter_mut().enumerate() {
            *slot = subset
                .iter()
                .map(|&c| red.dist(q, c))
                .fold(f64::INFINITY, f64::min);
        }
        let rho = weighted_rho(&red, &nearest, &weights, t);
        if best.as_ref().is_none_or(|(b, _)| rho < *b) {
            best = Some((rho, subset));
        }
    }
    let (rho, subset) = best.expect("at least one subset");
    let open: Vec<usize> = subset.iter().map(|&c| red.center_classes[c][0]).collect();
    Ok((nearest_assignment(instance, &open)?, rho))
}
