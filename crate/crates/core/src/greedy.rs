//! Greedy Capture.
//!
//! Balls grow around every candidate center at a common radius δ. Once a
//! closed center's ball holds `⌈n/k⌉` unmatched points it opens and captures
//! them; open centers keep capturing unmatched points as their balls reach
//! them. The continuous sweep is discretized over the distinct point-center
//! distances, processed in ascending order by merging per-center sorted lists.
//!
//! Ties at equal δ: open centers absorb first, then closed centers open in
//! ascending index order, each re-checked against the points still unmatched.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::instance::{nearest_assignment, pad_to_k, Instance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Open,
    Absorb,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyEvent {
    pub delta: f64,
    pub action: Action,
    pub center: usize,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct GreedyOptions {
    /// Pad the output to exactly `k` centers by k-median marginal gain.
    /// This is a post-processing convenience, off by default.
    pub pad_to_k: bool,
}

#[derive(Debug, Clone)]
pub struct GreedyRun {
    pub solution: Solution,
    /// Centers opened by the sweep, in opening order (before any padding).
    pub opened: Vec<usize>,
    /// The center that captured each point; `None` only when a point is
    /// unreachable from every center that ever opened.
    pub matched: Vec<Option<usize>>,
    pub log: Vec<GreedyEvent>,
}

impl GreedyRun {
    /// Write the event log as CSV: `delta,action,center,points` with the
    /// points separated by `;`.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "delta,action,center,points")?;
        for e in &self.log {
            let pts: Vec<String> = e.points.iter().map(usize::to_string).collect();
            let action = match e.action {
                Action::Open => "open",
                Action::Absorb => "absorb",
            };
            writeln!(
                out,
                "{},{},{},{}",
                crate::audit::format_sig9(e.delta),
                action,
                e.center,
                pts.join(";")
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Head {
    d: f64,
    center: usize,
    pos: usize,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Head {}

impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d
            .total_cmp(&other.d)
            .then(self.center.cmp(&other.center))
    }
}

/// Greedy Capture with default options.
pub fn greedy_capture(instance: &Instance) -> Result<Solution> {
    Ok(greedy_capture_with(instance, &GreedyOptions::default())?.solution)
}

pub fn greedy_capture_with(instance: &Instance, opts: &GreedyOptions) -> Result<GreedyRun> {
    let n = instance.n();
    let m = instance.m();
    let t = instance.coalition().threshold;

    // Per-center event lists, sorted by (distance, point).
    let lists: Vec<Vec<(f64, usize)>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut l: Vec<(f64, usize)> = (0..n).map(|i| (instance.dist(i, j), i)).collect();
            l.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            l
        })
        .collect();

    let mut heap: BinaryHeap<Reverse<Head>> = lists
        .iter()
        .enumerate()
        .map(|(j, l)| {
            Reverse(Head {
                d: l[0].0,
                center: j,
                pos: 0,
            })
        })
        .collect();

    let mut matched: Vec<Option<usize>> = vec![None; n];
    let mut unmatched = n;
    let mut is_open = vec![false; m];
    let mut opened: Vec<usize> = Vec::new();
    let mut inball = vec![0usize; m];
    let mut log: Vec<GreedyEvent> = Vec::new();
    let mut group: Vec<(usize, usize)> = Vec::new();

    while unmatched > 0 {
        let Some(&Reverse(first)) = heap.peek() else {
            break;
        };
        let delta = first.d;
        group.clear();
        while let Some(&Reverse(h)) = heap.peek() {
            if h.d.total_cmp(&delta) != Ordering::Equal {
                break;
            }
            heap.pop();
            let l = &lists[h.center];
            let mut pos = h.pos;
            while pos < l.len() && l[pos].0.total_cmp(&delta) == Ordering::Equal {
                group.push((h.center, l[pos].1));
                pos += 1;
            }
            if pos < l.len() {
                heap.push(Reverse(Head {
                    d: l[pos].0,
                    center: h.center,
                    pos,
                }));
            }
        }

        // The ball of every center in the group now reaches its group points.
        for &(j, i) in &group {
            if matched[i].is_none() {
                inball[j] += 1;
            }
        }

        let capture =
            |i: usize, c: usize, matched: &mut Vec<Option<usize>>, inball: &mut Vec<usize>| {
                matched[i] = Some(c);
                for (c2, count) in inball.iter_mut().enumerate() {
                    if instance.dist(i, c2) <= delta {
                        *count -= 1;
                    }
                }
            };

        // Open centers absorb first.
        let mut absorbed: Vec<(usize, Vec<usize>)> = Vec::new();
        for &(j, i) in &group {
            if is_open[j] && matched[i].is_none() {
                capture(i, j, &mut matched, &mut inball);
                unmatched -= 1;
                match absorbed.last_mut() {
                    Some((c, pts)) if *c == j => pts.push(i),
                    _ => absorbed.push((j, vec![i])),
                }
            }
        }
        for (center, points) in absorbed {
            log.push(GreedyEvent {
                delta,
                action: Action::Absorb,
                center,
                points,
            });
        }

        // Then closed centers whose balls hold enough unmatched points.
        let mut ready: BTreeSet<usize> = group
            .iter()
            .map(|&(j, _)| j)
            .filter(|&j| !is_open[j] && inball[j] >= t)
            .collect();
        while let Some(c) = ready.pop_first() {
            if inball[c] < t {
                continue;
            }
            is_open[c] = true;
            opened.push(c);
            let mut points = Vec::new();
            for &(d, i) in &lists[c] {
                if d > delta {
                    break;
                }
                if matched[i].is_none() {
                    capture(i, c, &mut matched, &mut inball);
                    unmatched -= 1;
                    points.push(i);
                }
            }
            log.push(GreedyEvent {
                delta,
                action: Action::Open,
                center: c,
                points,
            });
        }
    }

    let open = if opts.pad_to_k {
        pad_to_k(instance, &opened)
    } else {
        opened.clone()
    };
    let solution = nearest_assignment(instance, &open)?;
    Ok(GreedyRun {
        solution,
        opened,
        matched,
        log,
    })
}
