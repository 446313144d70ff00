//! Rounding a fractional solution to `k` open centers.
//!
//! 1. Demand consolidation: points are visited by increasing `C̄_i`; a point's
//!    unit demand moves to the nearest surviving point within `4·C̄_i`, or the
//!    point survives. Survivors end up pairwise farther apart than
//!    `4·max(C̄_i, C̄_j)`.
//! 2. (a) Each fractional center moves to its nearest survivor, giving every
//!    survivor an opening `y'_j ∈ [½, 1]`. (b) Survivors that are not already
//!    fully open are sorted by `t'_j·d(s(j), j)` and the first
//!    `2k − 2m' + m''` become fully open, the rest half open. `s(j)` is the
//!    nearest other survivor.
//! 3. Half-open survivors form a forest under `j → s(j)`. In every tree the
//!    smaller depth-parity class opens, so each half-open survivor has itself
//!    or `s(j)` open, and at most half of them open.

use serde::Serialize;

use super::FractionalSolution;
use crate::error::{Error, Result};
use crate::instance::{nearest_assignment, pad_to_k, Instance, Objective, Solution};

/// Relative slack for distance-bound checks.
const DIST_TOL: f64 = 1e-9;
/// Slack for opening values.
const OPEN_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandMove {
    pub from: usize,
    pub to: usize,
    pub distance: f64,
    /// `4·C̄_from`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterMove {
    pub center: usize,
    /// Receiving survivor (a point index).
    pub to: usize,
    pub distance: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfEntry {
    pub point: usize,
    pub key: f64,
    /// ȳ assigned by the sort: 1 or ½.
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepCosts {
    pub lp: f64,
    /// Cost of the ½-restricted solution, `Σ t'_j (1 − y'_j) d(s(j), j)`.
    pub half_restricted: f64,
    /// Same formula with ȳ.
    pub half_integral: f64,
    /// k-median of the final solution on the original instance.
    pub integral: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RoundingTrace {
    pub demand_moves: Vec<DemandMove>,
    /// Surviving points with their consolidated demand `t'_j`.
    pub survivors: Vec<(usize, usize)>,
    pub center_moves: Vec<CenterMove>,
    /// Survivors with `y'_j = 1`, fixed at ȳ = 1 without sorting.
    pub fixed_full: Vec<usize>,
    /// The sorted non-integral survivors with their ȳ.
    pub half_sort: Vec<HalfEntry>,
    /// Centers opened by the parity rounding.
    pub opened: Vec<usize>,
    /// Centers added afterwards to reach `k`.
    pub padded: Vec<usize>,
    pub costs: StepCosts,
    /// Whether the `27γR_j` covering was enforced.
    pub covering_checked: bool,
}

impl RoundingTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

fn fail(step: &'static str, detail: String) -> Error {
    Error::Rounding { step, detail }
}

/// Round `fractional` to exactly `k` centers (or `m` when fewer exist).
/// Integral input is returned unchanged with an empty trace.
pub fn round_lp(
    instance: &Instance,
    fractional: &FractionalSolution,
) -> Result<(Solution, RoundingTrace)> {
    let sites = super::require_colocated(instance)?;
    let (n, m, k) = (instance.n(), instance.m(), instance.k());
    if fractional.y.len() != m || fractional.cbar.len() != n {
        return Err(Error::DimensionMismatch(
            "fractional solution does not match the instance".into(),
        ));
    }
    if fractional.is_integral() {
        let open: Vec<usize> = (0..m).filter(|&j| fractional.y[j] > 0.5).collect();
        if !open.is_empty() && open.len() <= k {
            return Ok((
                nearest_assignment(instance, &open)?,
                RoundingTrace::default(),
            ));
        }
    }

    let pd = |a: usize, b: usize| instance.dist(a, sites[b]);
    let cbar = &fractional.cbar;
    let mut trace = RoundingTrace {
        costs: StepCosts {
            lp: fractional.objective,
            ..Default::default()
        },
        ..Default::default()
    };

    // Step 1.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cbar[a].total_cmp(&cbar[b]).then(a.cmp(&b)));
    let mut survivors: Vec<usize> = Vec::new();
    let mut demand = vec![0usize; n];
    for &i in &order {
        let bound = 4.0 * cbar[i];
        let target = survivors
            .iter()
            .map(|&j| (pd(i, j), j))
            .filter(|&(d, _)| d <= bound)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match target {
            Some((distance, j)) => {
                demand[j] += 1;
                trace.demand_moves.push(DemandMove {
                    from: i,
                    to: j,
                    distance,
                    bound,
                });
            }
            None => {
                survivors.push(i);
                demand[i] += 1;
            }
        }
    }
    survivors.sort_unstable();
    for (a, &i) in survivors.iter().enumerate() {
        for &j in &survivors[a + 1..] {
            let sep = 4.0 * cbar[i].max(cbar[j]);
            if pd(i, j) <= sep {
                return Err(fail("1", format!("survivors {i} and {j} are within {sep}")));
            }
        }
    }
    trace.survivors = survivors.iter().map(|&j| (j, demand[j])).collect();
    let mp = survivors.len();

    // Step 2a.
    let mut slot = vec![usize::MAX; n];
    for (s, &j) in survivors.iter().enumerate() {
        slot[j] = s;
    }
    let mut mass = vec![0.0f64; mp];
    for c in 0..m {
        let yc = fractional.y[c];
        if yc <= 0.0 {
            continue;
        }
        let (distance, j) = survivors
            .iter()
            .map(|&j| (instance.dist(j, c), j))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one survivor");
        mass[slot[j]] += yc;
        if sites[j] != c {
            trace.center_moves.push(CenterMove {
                center: c,
                to: j,
                distance,
                mass: yc,
            });
        }
    }
    let yp: Vec<f64> = mass.iter().map(|&v| v.min(1.0)).collect();
    for (s, &v) in yp.iter().enumerate() {
        if v < 0.5 - OPEN_TOL {
            return Err(fail(
                "2a",
                format!("survivor {} has opening {v} < 1/2", survivors[s]),
            ));
        }
    }

    // Step 2b.
    let nearest_other: Vec<Option<(f64, usize)>> = (0..mp)
        .map(|s| {
            let j = survivors[s];
            (0..mp)
                .filter(|&u| u != s)
                .map(|u| (pd(j, survivors[u]), u))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        })
        .collect();
    let mut ybar = vec![1.0f64; mp];
    if mp > k {
        let weight = |s: usize| {
            let (d, _) = nearest_other[s].expect("two or more survivors");
            demand[survivors[s]] as f64 * d
        };
        let mut frac: Vec<usize> = Vec::new();
        for s in 0..mp {
            if yp[s] >= 1.0 - 1e-9 {
                trace.fixed_full.push(survivors[s]);
            } else {
                frac.push(s);
            }
        }
        frac.sort_by(|&a, &b| {
            weight(b)
                .total_cmp(&weight(a))
                .then(survivors[a].cmp(&survivors[b]))
        });
        let mpp = frac.len();
        let full = (2 * k + mpp).checked_sub(2 * mp).ok_or_else(|| {
            fail(
                "2b",
                format!("2k − 2m' + m'' is negative (k={k}, m'={mp}, m''={mpp})"),
            )
        })?;
        for (pos, &s) in frac.iter().enumerate() {
            ybar[s] = if pos < full { 1.0 } else { 0.5 };
            trace.half_sort.push(HalfEntry {
                point: survivors[s],
                key: weight(s),
                value: ybar[s],
            });
        }
        let total: f64 = ybar.iter().sum();
        if (total - k as f64).abs() > OPEN_TOL {
            return Err(fail("2b", format!("openings sum to {total}, expected {k}")));
        }
        let cost = |y: &[f64]| -> f64 { (0..mp).map(|s| (1.0 - y[s]) * weight(s)).sum() };
        trace.costs.half_restricted = cost(&yp);
        trace.costs.half_integral = cost(&ybar);
        let h = trace.costs.half_restricted;
        if trace.costs.half_integral > h + DIST_TOL * h.max(1.0) {
            return Err(fail(
                "2b",
                format!(
                    "{{1/2,1}} cost {} exceeds 1/2-restricted cost {h}",
                    trace.costs.half_integral
                ),
            ));
        }
    }

    // Step 3.
    let half: Vec<bool> = ybar.iter().map(|&v| v < 0.75).collect();
    let mut open_pts: Vec<usize> = (0..mp).filter(|&s| !half[s]).collect();
    let parent =
        |s: usize| -> Option<usize> { nearest_other[s].map(|(_, u)| u).filter(|&u| half[u]) };
    // Roots: half nodes whose parent is full, plus the lowest node of each cycle.
    let mut is_root = vec![false; mp];
    let mut state = vec![0u8; mp];
    for s0 in (0..mp).filter(|&s| half[s]) {
        let mut path = Vec::new();
        let mut s = s0;
        loop {
            if state[s] != 0 {
                if state[s] == 1 {
                    let start = path.iter().position(|&u| u == s).expect("on path");
                    let lowest = *path[start..].iter().min().expect("nonempty cycle");
                    is_root[lowest] = true;
                }
                break;
            }
            state[s] = 1;
            path.push(s);
            match parent(s) {
                Some(p) => s = p,
                None => {
                    is_root[s] = true;
                    break;
                }
            }
        }
        for u in path {
            state[u] = 2;
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); mp];
    for s in (0..mp).filter(|&s| half[s] && !is_root[s]) {
        children[parent(s).expect("non-root has a parent")].push(s);
    }
    for r in (0..mp).filter(|&s| is_root[s]) {
        let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut stack = vec![(r, 0usize)];
        while let Some((s, depth)) = stack.pop() {
            classes[depth % 2].push(s);
            for &c in &children[s] {
                stack.push((c, depth + 1));
            }
        }
        let pick = if classes[1].len() < classes[0].len() {
            1
        } else {
            0
        };
        open_pts.extend(classes[pick].iter().copied());
    }
    let is_open_pt = {
        let mut v = vec![false; mp];
        for &s in &open_pts {
            v[s] = true;
        }
        v
    };
    for s in (0..mp).filter(|&s| half[s]) {
        let covered = is_open_pt[s] || nearest_other[s].is_some_and(|(_, u)| is_open_pt[u]);
        if !covered {
            return Err(fail(
                "3",
                format!(
                    "half-open survivor {} has neither itself nor s(j) open",
                    survivors[s]
                ),
            ));
        }
    }
    let mut opened: Vec<usize> = open_pts.iter().map(|&s| sites[survivors[s]]).collect();
    opened.sort_unstable();
    opened.dedup();
    if opened.len() > k {
        return Err(fail(
            "3",
            format!("{} centers opened for k = {k}", opened.len()),
        ));
    }
    let padded_open = pad_to_k(instance, &opened);
    trace.padded = padded_open
        .iter()
        .copied()
        .filter(|c| opened.binary_search(c).is_err())
        .collect();
    trace.opened = opened;
    let solution = nearest_assignment(instance, &padded_open)?;
    trace.costs.integral = solution.objective(Objective::KMedian);

    // Validation.
    let lp = fractional.objective;
    if trace.costs.integral > 8.0 * lp + DIST_TOL * lp.max(1.0) {
        return Err(fail(
            "3",
            format!("k-median {} exceeds 8 x LP {lp}", trace.costs.integral),
        ));
    }
    let colocated = (0..m).all(|c| (0..n).any(|i| instance.dist(i, c) == 0.0));
    trace.covering_checked = colocated;
    if colocated {
        let gamma = fractional.gamma;
        for j in 0..m {
            let r = fractional.radii[j];
            let within = |x: usize, factor: f64| {
                instance
                    .center_dist(j, x)
                    .is_some_and(|d| d <= factor * gamma * r * (1.0 + DIST_TOL) || r.is_infinite())
            };
            let near: f64 = (0..mp)
                .filter(|&s| within(sites[survivors[s]], 9.0))
                .map(|s| ybar[s])
                .sum();
            if near < 1.0 - OPEN_TOL {
                return Err(fail(
                    "2b",
                    format!("center {j} has opening {near} within 9γR_j"),
                ));
            }
            if !solution.open().iter().any(|&x| within(x, 27.0)) {
                return Err(fail(
                    "3",
                    format!("center {j} has no open center within 27γR_j"),
                ));
            }
        }
    }
    Ok((solution, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::build_and_solve_lp;

    #[test]
    fn integral_input_is_a_fixed_point() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let inst = Instance::euclidean_shared(pts, 2).unwrap();
        let frac = FractionalSolution::integral(&inst, &[1, 4], 3.0).unwrap();
        let (sol, trace) = round_lp(&inst, &frac).unwrap();
        assert_eq!(sol.open(), &[1, 4]);
        assert_eq!(trace, RoundingTrace::default());
    }

    #[test]
    fn half_open_pair_rounds_to_one() {
        // Two pairs of points; y = ½ on each of the four positions, k = 2.
        let pts = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let inst = Instance::euclidean_shared(pts, 2).unwrap();
        let frac = FractionalSolution::from_openings(&inst, vec![0.5; 4], 10.0).unwrap();
        let (sol, trace) = round_lp(&inst, &frac).unwrap();
        assert_eq!(sol.len(), 2);
        assert!(trace.costs.integral <= 8.0 * frac.objective);
        assert!(sol.open().iter().any(|&c| c < 2) && sol.open().iter().any(|&c| c >= 2));
    }

    #[test]
    fn chain_of_half_centers() {
        let xs = [0.0, 3.0, 7.0, 12.0, 18.0, 25.0];
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let inst = Instance::euclidean_shared(pts, 3).unwrap();
        let frac = FractionalSolution::from_openings(&inst, vec![0.5; 6], 20.0).unwrap();
        let (sol, trace) = round_lp(&inst, &frac).unwrap();
        assert_eq!(sol.len(), 3);
        assert!(trace.costs.half_integral <= trace.costs.half_restricted + 1e-9);
    }

    #[test]
    fn solved_lp_rounds_with_valid_trace() {
        let pts: Vec<Vec<f64>> = (0..14)
            .map(|i| vec![((i * 7) % 13) as f64, ((i * 5) % 11) as f64 * 0.5])
            .collect();
        let inst = Instance::euclidean_shared(pts, 3).unwrap();
        let frac = build_and_solve_lp(&inst, 2.0).unwrap();
        let (sol, trace) = round_lp(&inst, &frac).unwrap();
        assert_eq!(sol.len(), 3);
        assert_eq!(trace.covering_checked, !frac.is_integral());
        for mv in &trace.demand_moves {
            assert!(mv.distance <= mv.bound);
        }
        let json: serde_json::Value = serde_json::from_str(&trace.to_json()).unwrap();
        assert!(json["costs"]["lp"].is_number());
    }
}
