//! Proportionally fair centroid clustering.
//!
//! A clustering of `n` points with `k` centers is *ρ-proportional* when no
//! coalition of at least `⌈n/k⌉` points can move to a single alternative
//! center and each improve its distance by a factor larger than ρ. This crate
//! provides:
//!
//! - exact auditing of a solution's proportionality ([`audit`]),
//! - Greedy Capture, which is always (1+√2)-proportional ([`greedy`]),
//! - the Local Capture swap heuristic with a ρ search driver ([`local`]),
//! - a proportionality-constrained k-median LP with rounding ([`lp`]),
//! - sampling-based audits and fast paths ([`sampling`]),
//! - k-means++/Lloyd and a hybrid pruning baseline ([`baselines`]),
//! - the worked instances used throughout the tests ([`fixtures`]).

pub mod audit;
pub mod baselines;
pub mod error;
pub mod fixtures;
pub mod greedy;
pub mod instance;
pub mod local;
pub mod lp;
pub mod sampling;

pub use audit::{audit_exact, brute_force_min_rho, AuditReport};
pub use error::{Error, Result};
pub use greedy::greedy_capture;
pub use instance::{
    evaluate_objective, nearest_assignment, CoalitionSize, Instance, MetricSpec, Objective,
    ObjectiveValue, Solution,
};
pub use local::{local_capture, min_rho_search, LocalOutcome};
pub use lp::{build_and_solve_lp, constrained_kmedian, radius_r, round_lp, FractionalSolution};
