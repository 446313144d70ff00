//! Instance and solution files.
//!
//! Point sets are CSV with a header row; every column whose values all parse
//! as numbers is a feature and the rest are ignored. Explicit-distance
//! instances use a whitespace text format:
//!
//! ```text
//! n m k [shared]
//! <n rows of m distances>
//! [centers
//!  <m rows of m distances>]
//! ```
//!
//! with `inf` for unreachable pairs. `shared` marks `N = M`, the table doubling
//! as the center-to-center table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use propfair::Instance;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    None,
    /// Each column mapped to `[0, 1]`; constant columns become 0.
    #[default]
    MinMax,
}

impl FromStr for ScaleMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "min-max" | "minmax" => Ok(Self::MinMax),
            _ => bail!("unknown scale mode {s:?} (expected none or min-max)"),
        }
    }
}

impl std::fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::MinMax => "min-max",
        })
    }
}

/// Numeric feature rows of a CSV file, scaled.
pub fn read_points(path: &Path, scale: ScaleMode) -> Result<Vec<Vec<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let width = reader.headers()?.len();
    let mut raw: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        raw.push(rec.iter().map(|s| s.trim().to_owned()).collect());
    }
    ensure!(!raw.is_empty(), "{} has no data rows", path.display());
    let numeric: Vec<usize> = (0..width)
        .filter(|&c| {
            raw.iter()
                .all(|r| r[c].parse::<f64>().is_ok_and(f64::is_finite))
        })
        .collect();
    ensure!(
        !numeric.is_empty(),
        "{} has no numeric columns",
        path.display()
    );
    let mut pts: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| {
            numeric
                .iter()
                .map(|&c| r[c].parse().expect("checked numeric"))
                .collect()
        })
        .collect();
    if scale == ScaleMode::MinMax {
        for c in 0..numeric.len() {
            let (lo, hi) = pts
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[c]), hi.max(p[c]))
                });
            let span = hi - lo;
            for p in &mut pts {
                p[c] = if span > 0.0 { (p[c] - lo) / span } else { 0.0 };
            }
        }
    }
    Ok(pts)
}

/// CSV point set as an L2 instance with `N = M`.
pub fn ingest_csv(path: &Path, scale: ScaleMode, k: usize) -> Result<Instance> {
    let pts = read_points(path, scale)?;
    Ok(Instance::euclidean_shared(pts, k)?)
}

fn parse_dist(tok: &str) -> Result<f64> {
    match tok {
        "inf" | "INF" | "Inf" => Ok(f64::INFINITY),
        _ => tok.parse().with_context(|| format!("bad distance {tok:?}")),
    }
}

fn read_rows<'a>(
    lines: &mut impl Iterator<Item = &'a str>,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<Vec<Vec<f64>>> {
    (0..rows)
        .map(|r| {
            let line = lines
                .next()
                .with_context(|| format!("missing {what} row {r}"))?;
            let row = line
                .split_whitespace()
                .map(parse_dist)
                .collect::<Result<Vec<_>>>()?;
            ensure!(
                row.len() == cols,
                "{what} row {r} has {} entries, expected {cols}",
                row.len()
            );
            Ok(row)
        })
        .collect()
}

pub fn parse_matrix(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .context("empty instance file")?
        .split_whitespace()
        .collect();
    ensure!(
        header.len() == 3 || (header.len() == 4 && header[3] == "shared"),
        "header must be `n m k [shared]`"
    );
    let n: usize = header[0].parse().context("bad n")?;
    let m: usize = header[1].parse().context("bad m")?;
    let k: usize = header[2].parse().context("bad k")?;
    let shared = header.len() == 4;
    let rows = read_rows(&mut lines, n, m, "distance")?;
    if shared {
        ensure!(n == m, "shared instances need n = m");
        return Ok(Instance::shared_table(rows, k)?);
    }
    let inst = Instance::table(rows, k)?;
    match lines.next() {
        None => Ok(inst),
        Some("centers") => {
            let centers = read_rows(&mut lines, m, m, "center")?;
            Ok(inst.with_center_distances(centers)?)
        }
        Some(other) => bail!("unexpected line {other:?} after the distance table"),
    }
}

fn is_shared(inst: &Instance) -> bool {
    let n = inst.n();
    n == inst.m()
        && inst
            .sites()
            .is_some_and(|s| s.iter().enumerate().all(|(i, &c)| i == c))
        && (0..n).all(|a| (0..n).all(|b| inst.center_dist(a, b) == Some(inst.dist(a, b))))
}

/// Shortest representation that parses back to the same value.
fn exact(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

/// Any instance as the explicit-distance text format.
pub fn write_matrix(inst: &Instance) -> String {
    let shared = is_shared(inst);
    let mut out = format!(
        "{} {} {}{}\n",
        inst.n(),
        inst.m(),
        inst.k(),
        if shared { " shared" } else { "" }
    );
    let row = |out: &mut String, vals: Vec<f64>| {
        let toks: Vec<String> = vals.into_iter().map(exact).collect();
        let _ = writeln!(out, "{}", toks.join(" "));
    };
    for i in 0..inst.n() {
        row(&mut out, (0..inst.m()).map(|j| inst.dist(i, j)).collect());
    }
    if !shared && inst.has_center_distances() {
        out.push_str("centers\n");
        for a in 0..inst.m() {
            let vals = (0..inst.m())
                .map(|b| inst.center_dist(a, b).expect("center table present"))
                .collect();
            row(&mut out, vals);
        }
    }
    out
}

/// Points as CSV with columns `x0, x1, ...`.
pub fn write_points_csv(points: &[Vec<f64>]) -> Result<String> {
    let dim = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..dim).map(|d| format!("x{d}")))?;
    for p in points {
        w.write_record(p.iter().map(|&v| format!("{v}")))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Instance from a file: `.csv` is read as points, anything else as a
/// distance matrix. `k` overrides the matrix header when given.
pub fn load_instance(path: &Path, k: Option<usize>, scale: ScaleMode) -> Result<Instance> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let k = k.context("--k is required for CSV inputs")?;
        return ingest_csv(path, scale, k);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = parse_matrix(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(match k {
        Some(k) if k != inst.k() => inst.with_k(k)?,
        _ => inst,
    })
}

#[derive(Debug, Deserialize)]
struct OpenSet {
    open: Vec<usize>,
}

/// The `open` array of a solution JSON file.
pub fn read_solution(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let s: OpenSet =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(s.open)
}
