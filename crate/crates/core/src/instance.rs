//! Instances, distances, solutions and the three classic objectives.
//!
//! An [`Instance`] holds the point set `N` (`n` points), the candidate center
//! set `M` (`m` centers), a metric over `N ∪ M`, and the cluster budget `k`.
//! Distances are either an explicit table or Euclidean distances computed from
//! coordinates. Unreachable pairs are represented by `f64::INFINITY`, which
//! compares above every finite value and is absorbing under addition.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euclidean instances with at most this many point-center pairs get a dense
/// distance cache at construction time.
const CACHE_LIMIT: usize = 1 << 22;

/// Relative slack used when checking the triangle inequality on tables.
const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Debug)]
enum Metric {
    Euclidean {
        points: Vec<Vec<f64>>,
        centers: Vec<Vec<f64>>,
    },
    Table {
        /// Row-major `n × m`.
        point_center: Vec<f64>,
        /// Row-major `m × m`, when known.
        center_center: Option<Vec<f64>>,
    },
}

/// How distances are supplied to [`Instance::build`].
#[derive(Debug, Clone)]
pub enum MetricSpec {
    /// Euclidean L2 over the coordinates passed alongside.
    Euclidean,
    /// Explicit `n × m` table, optionally with the `m × m` center table.
    Table {
        distances: Vec<Vec<f64>>,
        center_distances: Option<Vec<Vec<f64>>>,
    },
}

/// A clustering instance. Cheap to clone; the metric is shared.
#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    m: usize,
    k: usize,
    metric: Arc<Metric>,
    cache: Option<Arc<Vec<f64>>>,
    /// `sites[i]` is a center co-located with point `i` (present when `N ⊆ M`).
    sites: Option<Arc<Vec<usize>>>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn flatten(rows: &[Vec<f64>], cols: usize, what: &str) -> Result<Vec<f64>> {
    let mut flat = Vec::with_capacity(rows.len() * cols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "{what} row {r} has {} entries, expected {cols}",
                row.len()
            )));
        }
        for (c, &v) in row.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::NegativeDistance {
                    row: r,
                    col: c,
                    value: v,
                });
            }
            flat.push(v);
        }
    }
    Ok(flat)
}

fn check_dims(coords: &[Vec<f64>], what: &str) -> Result<usize> {
    let dim = coords.first().map(Vec::len).unwrap_or(0);
    for (i, c) in coords.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{what} {i} has dimension {}, expected {dim}",
                c.len()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{what} {i} has a non-finite coordinate"
            )));
        }
    }
    Ok(dim)
}

impl Instance {
    /// General constructor: points and centers as coordinates (used only by
    /// [`MetricSpec::Euclidean`]) plus the metric description.
    pub fn build(
        points: Vec<Vec<f64>>,
        centers: Vec<Vec<f64>>,
        metric: MetricSpec,
        k: usize,
    ) -> Result<Self> {
        match metric {
            MetricSpec::Euclidean => Self::euclidean(points, centers, k),
            MetricSpec::Table {
                distances,
                center_distances,
            } => {
                let inst = Self::table(distances, k)?;
                match center_distances {
                    Some(cc) => inst.with_center_distances(cc),
                    None => Ok(inst),
                }
            }
        }
    }

    pub fn euclidean(points: Vec<Vec<f64>>, centers: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = points.len();
        let m = centers.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("instance has no points".into()));
        }
        let dp = check_dims(&points, "point")?;
        let dc = check_dims(&centers, "center")?;
        if m > 0 && dp != dc {
            return Err(Error::DimensionMismatch(format!(
                "points have dimension {dp}, centers have dimension {dc}"
            )));
        }
        Self::check_budget(k, m)?;
        let cache = (n * m <= CACHE_LIMIT).then(|| {
            let flat: Vec<f64> = points
                .par_iter()
                .flat_map_iter(|p| centers.iter().map(move |c| euclid(p, c)))
                .collect();
            Arc::new(flat)
        });
        Ok(Self {
            n,
            m,
            k,
            metric: Arc::new(Metric::Euclidean { points, centers }),
            cache,
            sites: None,
        })
    }

    /// Euclidean instance with `M = N`.
    pub fn euclidean_shared(points: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = points.len();
        let inst = Self::euclidean(points.clone(), points, k)?;
        Ok(Self {
            sites: Some(Arc::new((0..n).collect())),
            ..inst
        })
    }

    /// Explicit `n × m` point-to-center table with no center-to-center distances.
    pub fn table(rows: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("instance has no points".into()));
        }
        let m = rows[0].len();
        let point_center = flatten(&rows, m, "distance")?;
        Self::check_budget(k, m)?;
        Ok(Self {
            n,
            m,
            k,
            metric: Arc::new(Metric::Table {
                point_center,
                center_center: None,
            }),
            cache: None,
            sites: None,
        })
    }

    /// Explicit square table with `M = N`; must be symmetric with a zero diagonal.
    pub fn shared_table(rows: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("instance has no points".into()));
        }
        let flat = flatten(&rows, n, "distance")?;
        check_square(&flat, n)?;
        Self::check_budget(k, n)?;
        Ok(Self {
            n,
            m: n,
            k,
            metric: Arc::new(Metric::Table {
                point_center: flat.clone(),
                center_center: Some(flat),
            }),
            cache: None,
            sites: Some(Arc::new((0..n).collect())),
        })
    }

    /// Attach an `m × m` center-to-center table to a table instance.
    pub fn with_center_distances(self, rows: Vec<Vec<f64>>) -> Result<Self> {
        let Metric::Table { point_center, .. } = &*self.metric else {
            return Err(Error::Unsupported(
                "center distances are implied by coordinates for Euclidean instances".into(),
            ));
        };
        if rows.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "center table has {} rows, expected {}",
                rows.len(),
                self.m
            )));
        }
        let cc = flatten(&rows, self.m, "center distance")?;
        check_square(&cc, self.m)?;
        Ok(Self {
            metric: Arc::new(Metric::Table {
                point_center: point_center.clone(),
                center_center: Some(cc),
            }),
            ..self
        })
    }

    /// Declare `N ⊆ M`: point `i` is co-located with center `sites[i]`.
    pub fn with_sites(self, sites: Vec<usize>) -> Result<Self> {
        if sites.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} sites for {} points",
                sites.len(),
                self.n
            )));
        }
        for (i, &s) in sites.iter().enumerate() {
            if s >= self.m {
                return Err(Error::CenterOutOfRange {
                    index: s,
                    m: self.m,
                });
            }
            if self.dist(i, s) != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "point {i} is at distance {} from its site {s}",
                    self.dist(i, s)
                )));
            }
        }
        Ok(Self {
            sites: Some(Arc::new(sites)),
            ..self
        })
    }

    /// Same data with a different cluster budget.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::check_budget(k, self.m)?;
        Ok(Self { k, ..self.clone() })
    }

    fn check_budget(k: usize, m: usize) -> Result<()> {
        if k == 0 || k > m {
            return Err(Error::InvalidBudget { k, m });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `⌈n/k⌉`, the smallest coalition entitled to its own center.
    pub fn coalition(&self) -> CoalitionSize {
        CoalitionSize::new(self.n, self.k)
    }

    /// Distance from point `i` to center `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if let Some(cache) = &self.cache {
            return cache[i * self.m + j];
        }
        match &*self.metric {
            Metric::Table { point_center, .. } => point_center[i * self.m + j],
            Metric::Euclidean { points, centers } => euclid(&points[i], &centers[j]),
        }
    }

    /// Distance between two candidate centers, when the metric provides it.
    pub fn center_dist(&self, a: usize, b: usize) -> Option<f64> {
        match &*self.metric {
            Metric::Euclidean { centers, .. } => Some(euclid(&centers[a], &centers[b])),
            Metric::Table { center_center, .. } => {
                center_center.as_ref().map(|cc| cc[a * self.m + b])
            }
        }
    }

    pub fn has_center_distances(&self) -> bool {
        match &*self.metric {
            Metric::Euclidean { .. } => true,
            Metric::Table { center_center, .. } => center_center.is_some(),
        }
    }

    /// Co-located center of each point, present when `N ⊆ M` is known.
    pub fn sites(&self) -> Option<&[usize]> {
        self.sites.as_deref().map(Vec::as_slice)
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(&*self.metric, Metric::Euclidean { .. })
    }

    pub fn point_coords(&self) -> Option<&[Vec<f64>]> {
        match &*self.metric {
            Metric::Euclidean { points, .. } => Some(points),
            Metric::Table { .. } => None,
        }
    }

    pub fn center_coords(&self) -> Option<&[Vec<f64>]> {
        match &*self.metric {
            Metric::Euclidean { centers, .. } => Some(centers),
            Metric::Table { .. } => None,
        }
    }

    /// Column `j` of the point-center distances.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.dist(i, j)).collect()
    }

    /// Sub-instance over the given points, keeping `M` and `k`.
    pub fn restrict_points(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::DimensionMismatch("empty point subset".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidParameter(format!(
                "point index {bad} out of range"
            )));
        }
        let n = idx.len();
        let metric = match &*self.metric {
            Metric::Euclidean { points, centers } => Metric::Euclidean {
                points: idx.iter().map(|&i| points[i].clone()).collect(),
                centers: centers.clone(),
            },
            Metric::Table {
                point_center,
                center_center,
            } => Metric::Table {
                point_center: idx
                    .iter()
                    .flat_map(|&i| point_center[i * self.m..(i + 1) * self.m].iter().copied())
                    .collect(),
                center_center: center_center.clone(),
            },
        };
        let cache = self.cache.as_ref().map(|c| {
            Arc::new(
                idx.iter()
                    .flat_map(|&i| c[i * self.m..(i + 1) * self.m].iter().copied())
                    .collect(),
            )
        });
        Ok(Self {
            n,
            m: self.m,
            k: self.k,
            metric: Arc::new(metric),
            cache,
            sites: self
                .sites
                .as_ref()
                .map(|s| Arc::new(idx.iter().map(|&i| s[i]).collect())),
        })
    }

    /// Check metric consistency over `N ∪ M`.
    ///
    /// Euclidean instances are metric by construction. For tables, points with
    /// identical rows and centers with identical columns are merged first, then
    /// every available triangle is checked exhaustively on the representatives:
    /// the bipartite path condition `d(i,x) ≤ d(i,x') + d(i',x') + d(i',x)`
    /// (which is exactly extendability to a metric when only `N × M` is known)
    /// and, with a center table, the triangles through centers.
    pub fn validate_metric(&self) -> Result<()> {
        let Metric::Table { center_center, .. } = &*self.metric else {
            return Ok(());
        };
        let red = self.reduce();
        let (p, c) = (red.point_classes.len(), red.center_classes.len());
        let d = |a: usize, x: usize| red.table[a * c + x];
        let le = |lhs: f64, rhs: f64| lhs <= rhs + TRIANGLE_TOL * rhs.max(1.0);
        for a in 0..p {
            for x in 0..c {
                let lhs = d(a, x);
                for b in 0..p {
                    for y in 0..c {
                        let rhs = d(a, y) + d(b, y) + d(b, x);
                        if !le(lhs, rhs) {
                            return Err(Error::TriangleViolation(format!(
                                "d(point {}, center {}) = {lhs} exceeds path via center {} and point {} = {rhs}",
                                red.point_classes[a][0],
                                red.center_classes[x][0],
                                red.center_classes[y][0],
                                red.point_classes[b][0],
                            )));
                        }
                    }
                }
            }
        }
        if let Some(cc) = center_center {
            let reps: Vec<usize> = red.center_classes.iter().map(|cl| cl[0]).collect();
            let dc = |a: usize, b: usize| cc[reps[a] * self.m + reps[b]];
            for a in 0..p {
                for x in 0..c {
                    for y in 0..c {
                        if !le(d(a, x), d(a, y) + dc(y, x)) {
                            return Err(Error::TriangleViolation(format!(
                                "d(point {}, center {}) exceeds the path via center {}",
                                red.point_classes[a][0], reps[x], reps[y]
                            )));
                        }
                    }
                }
            }
            for x in 0..c {
                for y in 0..c {
                    for z in 0..c {
                        if !le(dc(x, z), dc(x, y) + dc(y, z)) {
                            return Err(Error::TriangleViolation(format!(
                                "d(center {}, center {}) exceeds the path via center {}",
                                reps[x], reps[z], reps[y]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Randomized triangle check over point-center-center triples. Returns the
    /// largest violation `d(a,c) − d(a,b) − d(b,c)` seen (≤ 0 when consistent).
    pub fn sampled_triangle_slack<R: Rng>(&self, rng: &mut R, trials: usize) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..trials {
            let i = rng.random_range(0..self.n);
            let a = rng.random_range(0..self.m);
            let b = rng.random_range(0..self.m);
            if let Some(ab) = self.center_dist(a, b) {
                let v = self.dist(i, b) - self.dist(i, a) - ab;
                worst = worst.max(v);
            }
        }
        worst
    }

    /// Merge points with identical distance rows and centers with identical
    /// distance columns. Audits and objectives are invariant under this.
    pub fn reduce(&self) -> Reduction {
        let mut point_classes: Vec<Vec<usize>> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for i in 0..self.n {
            let key: Vec<u64> = (0..self.m).map(|j| self.dist(i, j).to_bits()).collect();
            let next = point_classes.len();
            let cls = *seen.entry(key).or_insert(next);
            if cls == next {
                point_classes.push(Vec::new());
            }
            point_classes[cls].push(i);
        }
        let reps: Vec<usize> = point_classes.iter().map(|c| c[0]).collect();
        let mut center_classes: Vec<Vec<usize>> = Vec::new();
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for j in 0..self.m {
            let key: Vec<u64> = reps.iter().map(|&i| self.dist(i, j).to_bits()).collect();
            let next = center_classes.len();
            let cls = *seen.entry(key).or_insert(next);
            if cls == next {
                center_classes.push(Vec::new());
            }
            center_classes[cls].push(j);
        }
        let table = reps
            .iter()
            .flat_map(|&i| center_classes.iter().map(move |c| (i, c[0])))
            .map(|(i, j)| self.dist(i, j))
            .collect();
        Reduction {
            point_classes,
            center_classes,
            table,
        }
    }
}

fn check_square(flat: &[f64], n: usize) -> Result<()> {
    for r in 0..n {
        if flat[r * n + r] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nonzero diagonal entry at {r}"
            )));
        }
        for c in (r + 1)..n {
            let (a, b) = (flat[r * n + c], flat[c * n + r]);
            if a != b {
                return Err(Error::Asymmetric { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Equivalence classes of points (identical distance rows) and centers
/// (identical distance columns), with the class-level distance table.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub point_classes: Vec<Vec<usize>>,
    pub center_classes: Vec<Vec<usize>>,
    /// Row-major `point_classes × center_classes`.
    pub table: Vec<f64>,
}

impl Reduction {
    pub fn dist(&self, p: usize, c: usize) -> f64 {
        self.table[p * self.center_classes.len() + c]
    }

    pub fn weights(&self) -> Vec<usize> {
        self.point_classes.iter().map(Vec::len).collect()
    }
}

/// Size of a coalition entitled to deviate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalitionSize {
    pub threshold: usize,
    pub inflation: f64,
}

impl CoalitionSize {
    /// `⌈n/k⌉` in integer arithmetic.
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            threshold: n.div_ceil(k),
            inflation: 1.0,
        }
    }

    /// `⌈inflation · n / k⌉` for `(1+ε)`-deviations.
    pub fn inflated(n: usize, k: usize, inflation: f64) -> Result<Self> {
        if !(inflation >= 1.0) || !inflation.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inflation must be a finite value >= 1, got {inflation}"
            )));
        }
        if inflation == 1.0 {
            return Ok(Self::new(n, k));
        }
        let x = inflation * n as f64 / k as f64;
        let threshold = (x - 1e-9 * x.max(1.0)).ceil().max(1.0) as usize;
        Ok(Self {
            threshold,
            inflation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    KMedian,
    KMeans,
    KCenter,
}

impl Objective {
    pub fn aggregate(self, nearest: &[f64]) -> f64 {
        match self {
            Objective::KMedian => nearest.iter().sum(),
            Objective::KMeans => nearest.iter().map(|d| d * d).sum(),
            Objective::KCenter => nearest.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub kind: Objective,
    pub value: f64,
}

/// An open center set with its induced nearest-center assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    open: Vec<usize>,
    nearest: Vec<f64>,
    assigned: Vec<usize>,
}

impl Solution {
    /// Open centers, ascending.
    pub fn open(&self) -> &[usize] {
        &self.open
    }

    /// `D_i(X)` for every point.
    pub fn nearest(&self) -> &[f64] {
        &self.nearest
    }

    pub fn assigned(&self) -> &[usize] {
        &self.assigned
    }

    pub fn len(&self) -> usize {
        self.open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.open.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.open.binary_search(&j).is_ok()
    }

    pub fn objective(&self, kind: Objective) -> f64 {
        kind.aggregate(&self.nearest)
    }

    /// Number of points assigned to each open center, in `open()` order.
    pub fn demand(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.open.len()];
        for &a in &self.assigned {
            let pos = self
                .open
                .binary_search(&a)
                .expect("assigned center is open");
            counts[pos] += 1;
        }
        counts
    }
}

/// Assign every point to its nearest open center; ties go to the lowest
/// center index.
pub fn nearest_assignment(instance: &Instance, open: &[usize]) -> Result<Solution> {
    let mut open = open.to_vec();
    open.sort_unstable();
    open.dedup();
    if open.is_empty() {
        return Err(Error::EmptySolution);
    }
    if let Some(&bad) = open.iter().find(|&&j| j >= instance.m()) {
        return Err(Error::CenterOutOfRange {
            index: bad,
            m: instance.m(),
        });
    }
    let (nearest, assigned) = (0..instance.n())
        .map(|i| {
            let mut best = (instance.dist(i, open[0]), open[0]);
            for &j in &open[1..] {
                let d = instance.dist(i, j);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best
        })
        .unzip();
    Ok(Solution {
        open,
        nearest,
        assigned,
    })
}

/// Grow `open` to `k` centers, each time adding the closed center with the
/// largest k-median reduction (lowest index on ties).
pub fn pad_to_k(instance: &Instance, open: &[usize]) -> Vec<usize> {
    let mut open = open.to_vec();
    open.sort_unstable();
    open.dedup();
    let mut nearest: Vec<f64> = (0..instance.n())
        .map(|i| {
            open.iter()
                .map(|&j| instance.dist(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while open.len() < instance.k() {
        let gain = |c: usize| -> (usize, f64) {
            let mut unreached = 0usize;
            let mut g = 0.0;
            for (i, &cur) in nearest.iter().enumerate() {
                let d = instance.dist(i, c);
                if d < cur {
                    if cur.is_infinite() {
                        unreached += 1;
                    } else {
                        g += cur - d;
                    }
                }
            }
            (unreached, g)
        };
        let best = (0..instance.m())
            .filter(|c| open.binary_search(c).is_err())
            .map(|c| (c, gain(c)))
            .reduce(|a, b| {
                if b.1 .0 > a.1 .0 || (b.1 .0 == a.1 .0 && b.1 .1 > a.1 .1) {
                    b
                } else {
                    a
                }
            });
        let Some((c, _)) = best else { break };
        for (i, cur) in nearest.iter_mut().enumerate() {
            *cur = cur.min(instance.dist(i, c));
        }
        let pos = open.binary_search(&c).unwrap_err();
        open.insert(pos, c);
    }
    open
}

/// Exact k-median, k-means or k-center value of a solution.
pub fn evaluate_objective(
    instance: &Instance,
    solution: &Solution,
    kind: Objective,
) -> Result<ObjectiveValue> {
    if solution.is_empty() {
        return Err(Error::EmptySolution);
    }
    if solution.nearest.len() != instance.n() {
        return Err(Error::DimensionMismatch(format!(
            "solution covers {} points, instance has {}",
            solution.nearest.len(),
            instance.n()
        )));
    }
    Ok(ObjectiveValue {
        kind,
        value: solution.objective(kind),
    })
}
