//! k-median subject to proportionality, via an LP and constant-factor rounding.
//!
//! The LP is the standard k-median relaxation plus one covering row per
//! candidate center `j`: the fractional opening inside the ball of radius
//! `γR_j` around `j` must be at least 1, where `R_j` is the radius of the
//! smallest ball around `j` holding `⌈n/k⌉` points. Any ρ-proportional
//! solution is feasible for `γ = ρ + 1`, and the rounded solution covers each
//! ball of radius `27γR_j`, which makes it `(27γ + 1)`-proportional.

mod model;
mod rounding;

pub use model::{Column, LpModel, Row, Sense};
pub use rounding::{round_lp, CenterMove, DemandMove, HalfEntry, RoundingTrace, StepCosts};

use crate::error::{Error, Result};
use crate::instance::{Instance, Solution};

/// Absolute slack allowed on every LP row.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Smallest `R` with at least `⌈n/k⌉` points within distance `R` of center `j`.
pub fn radius_r(instance: &Instance, j: usize) -> f64 {
    let t = instance.coalition().threshold;
    let mut col = instance.column(j);
    let (_, nth, _) = col.select_nth_unstable_by(t - 1, f64::total_cmp);
    *nth
}

pub fn radii(instance: &Instance) -> Vec<f64> {
    (0..instance.m()).map(|j| radius_r(instance, j)).collect()
}

#[derive(Debug, Clone)]
pub struct FractionalSolution {
    pub y: Vec<f64>,
    /// Sparse rows: `(center, value)` with positive value.
    pub z: Vec<Vec<(usize, f64)>>,
    /// `Σ d(i,j)·z_ij`.
    pub objective: f64,
    pub gamma: f64,
    pub radii: Vec<f64>,
    /// Per-point fractional cost `C̄_i = Σ_j d(i,j)·z_ij`.
    pub cbar: Vec<f64>,
}

impl FractionalSolution {
    /// Fractional solution induced by an opening vector `y`, with each point
    /// filled nearest-first. This is an optimal `z` for the given `y`.
    pub fn from_openings(instance: &Instance, y: Vec<f64>, gamma: f64) -> Result<Self> {
        if y.len() != instance.m() {
            return Err(Error::DimensionMismatch(format!(
                "{} openings for {} centers",
                y.len(),
                instance.m()
            )));
        }
        let y: Vec<f64> = y.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut order: Vec<usize> = (0..instance.m()).filter(|&j| y[j] > 0.0).collect();
        let mut z = Vec::with_capacity(instance.n());
        let mut cbar = Vec::with_capacity(instance.n());
        for i in 0..instance.n() {
            order.sort_by(|&a, &b| {
                instance
                    .dist(i, a)
                    .total_cmp(&instance.dist(i, b))
                    .then(a.cmp(&b))
            });
            let mut row = Vec::new();
            let mut left = 1.0f64;
            let mut cost = 0.0;
            for &j in &order {
                if left <= 0.0 {
                    break;
                }
                let d = instance.dist(i, j);
                if !d.is_finite() {
                    break;
                }
                let take = y[j].min(left);
                row.push((j, take));
                cost += d * take;
                left -= take;
            }
            if left > FEASIBILITY_TOL {
                return Err(Error::Solver(format!(
                    "openings reachable from point {i} sum to {}",
                    1.0 - left
                )));
            }
            z.push(row);
            cbar.push(cost);
        }
        Ok(Self {
            objective: cbar.iter().sum(),
            y,
            z,
            gamma,
            radii: radii(instance),
            cbar,
        })
    }

    /// The integral solution `X` as a fractional one.
    pub fn integral(instance: &Instance, open: &[usize], gamma: f64) -> Result<Self> {
        let mut y = vec![0.0; instance.m()];
        for &j in open {
            if j >= instance.m() {
                return Err(Error::CenterOutOfRange {
                    index: j,
                    m: instance.m(),
                });
            }
            y[j] = 1.0;
        }
        Self::from_openings(instance, y, gamma)
    }

    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.z[i]
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn is_integral(&self) -> bool {
        self.y.iter().all(|&v| v <= 1e-9 || v >= 1.0 - 1e-9)
    }

    /// Maximum violation over all LP rows.
    pub fn max_violation(&self, instance: &Instance) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.z {
            let s: f64 = row.iter().map(|&(_, v)| v).sum();
            worst = worst.max((s - 1.0).abs());
            for &(j, v) in row {
                worst = worst.max(v - self.y[j]);
            }
        }
        worst = worst.max(self.y.iter().sum::<f64>() - instance.k() as f64);
        for j in 0..instance.m() {
            let reach = self.gamma * self.radii[j];
            let s: f64 = (0..instance.m())
                .filter(|&j2| instance.center_dist(j, j2).is_some_and(|d| d <= reach))
                .map(|j2| self.y[j2])
                .sum();
            worst = worst.max(1.0 - s);
        }
        worst
    }
}

pub(crate) fn require_colocated(instance: &Instance) -> Result<&[usize]> {
    let sites = instance.sites().ok_or_else(|| {
        Error::Unsupported("the LP needs every point co-located with a candidate center".into())
    })?;
    if !instance.has_center_distances() {
        return Err(Error::Unsupported(
            "the LP needs center-to-center distances".into(),
        ));
    }
    Ok(sites)
}

/// Solve the LP for a given `γ ≥ 1`. The returned `z` is re-derived from `y`
/// by nearest-first filling, which keeps the optimum and makes `C̄_i` as small
/// as the openings allow.
pub fn build_and_solve_lp(instance: &Instance, gamma: f64) -> Result<FractionalSolution> {
    if !(gamma >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be >= 1, got {gamma}"
        )));
    }
    require_colocated(instance)?;
    let radii = radii(instance);
    let model = LpModel::build(instance, gamma, &radii)?;
    let values = model.solve(gamma)?;
    let y: Vec<f64> = (0..instance.m())
        .map(|j| values[model.y_column(j)])
        .collect();
    let frac = FractionalSolution::from_openings(instance, y, gamma)?;
    let viol = frac.max_violation(instance);
    if viol > FEASIBILITY_TOL {
        return Err(Error::Solver(format!(
            "solution violates a row by {viol:e}"
        )));
    }
    Ok(frac)
}

/// The LP for `γ` in CPLEX LP format.
pub fn export_lp(instance: &Instance, gamma: f64) -> Result<String> {
    let model = LpModel::build(instance, gamma, &radii(instance))?;
    Ok(model.to_lp_format())
}

#[derive(Debug, Clone)]
pub struct ConstrainedRun {
    pub fractional: FractionalSolution,
    pub solution: Solution,
    pub trace: RoundingTrace,
}

/// Solve with `γ = ρ + 1` and round.
pub fn constrained_kmedian_run(instance: &Instance, rho: f64) -> Result<ConstrainedRun> {
    if !(rho >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rho must be >= 1, got {rho}"
        )));
    }
    let fractional = build_and_solve_lp(instance, rho + 1.0)?;
    let (solution, trace) = round_lp(instance, &fractional)?;
    Ok(ConstrainedRun {
        fractional,
        solution,
        trace,
    })
}

pub fn constrained_kmedian(instance: &Instance, rho: f64) -> Result<Solution> {
    Ok(constrained_kmedian_run(instance, rho)?.solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_of_colocated_column() {
        let inst = Instance::table(vec![vec![0.0, 3.0]; 4], 2).unwrap();
        assert_eq!(radius_r(&inst, 0), 0.0);
        assert_eq!(radius_r(&inst, 1), 3.0);
    }

    #[test]
    fn everything_open_when_k_equals_n() {
        let pts: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0], vec![4.0]];
        let inst = Instance::euclidean_shared(pts, 3).unwrap();
        let frac = build_and_solve_lp(&inst, 1.0).unwrap();
        assert!(frac.y.iter().all(|&v| (v - 1.0).abs() < 1e-9));
        assert!(frac.objective.abs() < 1e-9);
    }

    #[test]
    fn needs_colocation() {
        let inst = Instance::table(vec![vec![1.0, 2.0]], 1).unwrap();
        assert!(matches!(
            build_and_solve_lp(&inst, 2.0),
            Err(Error::Unsupported(_))
        ));
        let shared = Instance::euclidean_shared(vec![vec![0.0], vec![1.0]], 1).unwrap();
        assert!(build_and_solve_lp(&shared, 0.5).is_err());
    }

    #[test]
    fn nearest_first_fill() {
        let inst = Instance::euclidean_shared(vec![vec![0.0], vec![1.0], vec![3.0]], 2).unwrap();
        let frac = FractionalSolution::from_openings(&inst, vec![0.0, 0.5, 1.0], 2.0).unwrap();
        assert_eq!(frac.z[0], vec![(1, 0.5), (2, 0.5)]);
        assert_eq!(frac.cbar[0], 0.5 + 1.5);
        assert_eq!(frac.z(2, 2), 1.0);
        assert_eq!(frac.z(2, 0), 0.0);
    }
}
