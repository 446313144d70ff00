//! Worked instances: small tables and point sets with known proportionality
//! behaviour, plus two seeded generators.
//!
//! Every table fixture validates its metric when constructed.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Pareto, UnitSphere};

use crate::baselines::dsquared_seeds;
use crate::error::{Error, Result};
use crate::instance::Instance;

const INF: f64 = f64::INFINITY;

/// Index of the green point `(0, 0)` in [`figure1_instance`].
pub const FIG1_GREEN: usize = 2;
/// Index of the blue point `(0, 0.75)`.
pub const FIG1_BLUE: usize = 5;
/// Indices of the two red points `(∓1.5, 0.67)`.
pub const FIG1_RED: [usize; 2] = [10, 11];

pub fn figure1_points() -> Vec<Vec<f64>> {
    [
        (-3.0, 0.0),
        (-3.0, 1.25),
        (0.0, 0.0),
        (0.0, 0.25),
        (0.0, 0.5),
        (0.0, 0.75),
        (0.0, 1.0),
        (0.0, 1.25),
        (3.0, 0.0),
        (3.0, 1.25),
        (-1.5, 0.67),
        (1.5, 0.67),
    ]
    .iter()
    .map(|&(x, y)| vec![x, y])
    .collect()
}

/// Twelve points in the plane: a column of six in the middle, two pairs on
/// the sides and two points between them; `N = M`, `k = 2`.
pub fn figure1_instance() -> Instance {
    Instance::euclidean_shared(figure1_points(), 2).expect("fixed fixture")
}

fn checked(inst: Instance) -> Instance {
    inst.validate_metric()
        .expect("fixture metric is consistent");
    inst
}

/// Two points at `a`, two at `b`, one each at `c` and `d`; `a` and `b` are at
/// distance 1 and every other pair of positions is unreachable. `N = M`,
/// `k = 3`. Points are ordered `a, a, b, b, c, d`.
pub fn example1_instance() -> Instance {
    let pos = [0usize, 0, 1, 1, 2, 3];
    let d = |p: usize, q: usize| match (p, q) {
        _ if p == q => 0.0,
        (0, 1) | (1, 0) => 1.0,
        _ => INF,
    };
    let rows = pos
        .iter()
        .map(|&p| pos.iter().map(|&q| d(p, q)).collect())
        .collect();
    checked(Instance::shared_table(rows, 3).expect("fixed fixture"))
}

/// Six agents and six candidate centers in two unreachable halves; `k = 3`.
/// Agents `a1..a6` are rows 0..6 and centers `x1..x6` columns 0..6.
pub fn claim1_instance() -> Instance {
    let half = [[4.0, 1.0, 2.0], [2.0, 4.0, 1.0], [1.0, 2.0, 4.0]];
    let mut rows = vec![vec![INF; 6]; 6];
    for (r, row) in half.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            rows[r][c] = v;
            rows[r + 3][c + 3] = v;
        }
    }
    checked(Instance::table(rows, 3).expect("fixed fixture"))
}

/// Type of each point inside one cluster of [`claim2_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim2Type {
    X(usize),
    A(usize),
}

/// Layout of one 303-point cluster: `x1, x2, x3`, then 100 each of `a1, a2, a3`.
pub fn claim2_types() -> Vec<Claim2Type> {
    let mut v: Vec<Claim2Type> = (0..3).map(Claim2Type::X).collect();
    for a in 0..3 {
        v.extend(std::iter::repeat_n(Claim2Type::A(a), 100));
    }
    v
}

/// Three unreachable copies of a 303-point cluster; `N = M`, `k = 5`. Inside
/// a cluster, `a`-to-`x` distances follow the 3×3 table, distinct types on
/// the same side are at distance 3 and equal types are co-located.
pub fn claim2_instance() -> Instance {
    let ax = [[4.0, 1.0, 2.0], [2.0, 4.0, 1.0], [1.0, 2.0, 4.0]];
    let types = claim2_types();
    let per = types.len();
    let d = |p: Claim2Type, q: Claim2Type| match (p, q) {
        (Claim2Type::A(a), Claim2Type::X(x)) | (Claim2Type::X(x), Claim2Type::A(a)) => ax[a][x],
        (Claim2Type::A(a), Claim2Type::A(b)) | (Claim2Type::X(a), Claim2Type::X(b)) => {
            if a == b {
                0.0
            } else {
                3.0
            }
        }
    };
    let n = 3 * per;
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i / per != j / per {
                        INF
                    } else {
                        d(types[i % per], types[j % per])
                    }
                })
                .collect()
        })
        .collect();
    checked(Instance::shared_table(rows, 5).expect("fixed fixture"))
}

/// Six agents, four centers, `k = 3`, on which Greedy Capture opens `x2` and
/// `x4` and ends up `(1−ε)(1+√2)`-proportional.
///
/// Two entries sit slightly below `1+√2`: `d(a1, x2) = 1+√2−ε` and
/// `d(a3, x1) = 1+√2−2ε`, which are the path lengths `a1→x1→a2→x2` and
/// `a3→x2→a2→x1`. With larger values no metric extends the table.
pub fn theorem1_tightness(epsilon: f64) -> Result<Instance> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be in (0, 0.5), got {epsilon}"
        )));
    }
    let e = epsilon;
    let half = [
        [1.0, 1.0 + SQRT_2 - e],
        [SQRT_2 - 1.0, 1.0 - e],
        [1.0 + SQRT_2 - 2.0 * e, 1.0 - e],
    ];
    let mut rows = vec![vec![INF; 4]; 6];
    for (r, row) in half.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            rows[r][c] = v;
            rows[r + 3][c + 2] = v;
        }
    }
    Ok(checked(Instance::table(rows, 3)?))
}

fn disk<R: Rng>(rng: &mut R, center: (f64, f64), radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::with_capacity(count);
    if count == 0 {
        return pts;
    }
    pts.push(vec![center.0, center.1]);
    for _ in 1..count {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        pts.push(vec![center.0 + r * theta.cos(), center.1 + r * theta.sin()]);
    }
    pts
}

/// Disk centers of [`intro_spheres`]: `A`, `B`, `C`.
pub fn intro_sphere_centers(radius_bc: f64, separation: f64) -> [(f64, f64); 3] {
    let gap = 0.5 * (1.0 + 4.0 * radius_bc);
    [(0.0, 0.0), (separation, -gap), (separation, gap)]
}

/// A large disk `A` far from two small nearby disks `B` and `C`, each with
/// `n_per` points (the first being the disk center) drawn uniformly; `N = M`,
/// `k = 3`. Points are ordered `A`, then `B`, then `C`.
pub fn intro_spheres(
    radius_a: f64,
    radius_bc: f64,
    separation: f64,
    n_per: usize,
    seed: u64,
) -> Result<Instance> {
    if !(radius_a >= 0.0 && radius_bc >= 0.0 && separation.is_finite()) || n_per == 0 {
        return Err(Error::InvalidParameter(
            "radii must be >= 0 and n_per >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [a, b, c] = intro_sphere_centers(radius_bc, separation);
    let mut pts = disk(&mut rng, a, radius_a, n_per);
    pts.extend(disk(&mut rng, b, radius_bc, n_per));
    pts.extend(disk(&mut rng, c, radius_bc, n_per));
    Instance::euclidean_shared(pts, 3)
}

/// Generator parameters for [`outlier_surrogate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateSpec {
    pub n: usize,
    /// Number of candidate centers drawn by k-means++ seeding.
    pub m: usize,
    pub k: usize,
    pub dim: usize,
    pub outlier_share: f64,
    pub seed: u64,
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        Self {
            n: 5000,
            m: 400,
            k: 10,
            dim: 4,
            outlier_share: 0.017,
            seed: 2019,
        }
    }
}

/// Outlier-heavy point set: three Gaussian clusters of unequal size plus a
/// small share of points at Pareto-distributed radii. Candidate centers are a
/// k-means++ seeding of the points.
pub fn outlier_surrogate(spec: &SurrogateSpec) -> Result<Instance> {
    if spec.n == 0 || spec.dim == 0 || !(0.0..1.0).contains(&spec.outlier_share) {
        return Err(Error::InvalidParameter("bad surrogate parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let outliers = (spec.n as f64 * spec.outlier_share).round() as usize;
    let inliers = spec.n - outliers;
    let shares = [0.6, 0.3, 0.1];
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let tail = Pareto::new(1.0, 1.5).expect("valid Pareto");
    let mut pts = Vec::with_capacity(spec.n);
    let mut assigned = 0;
    for (c, &s) in shares.iter().enumerate() {
        let count = if c + 1 == shares.len() {
            inliers - assigned
        } else {
            (inliers as f64 * s).round() as usize
        };
        assigned += count;
        let mut mean = vec![0.0; spec.dim];
        if c > 0 {
            mean[(c - 1) % spec.dim] = 6.0;
        }
        for _ in 0..count {
            pts.push(mean.iter().map(|&mu| mu + noise.sample(&mut rng)).collect());
        }
    }
    for _ in 0..outliers {
        let r = 15.0 * tail.sample(&mut rng);
        let dir: Vec<f64> = if spec.dim == 3 {
            let u: [f64; 3] = UnitSphere.sample(&mut rng);
            u.to_vec()
        } else {
            let g: Vec<f64> = (0..spec.dim).map(|_| noise.sample(&mut rng)).collect();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            g.into_iter().map(|x| x / norm).collect()
        };
        pts.push(dir.into_iter().map(|x| x * r).collect());
    }
    let seeds = dsquared_seeds(&pts, spec.m.min(spec.n), &mut rng);
    let centers = seeds.iter().map(|&i| pts[i].clone()).collect();
    Instance::euclidean(pts, centers, spec.k)
}
