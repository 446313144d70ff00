//! The proportionality-constrained k-median LP as plain data.
//!
//! Columns are `y_j` for every candidate center and `z_ij` for every finite
//! point-center pair. Rows:
//!
//! - `assign_i`: `Σ_j z_ij = 1`
//! - `link_i_j`: `z_ij − y_j ≤ 0`
//! - `budget`: `Σ_j y_j ≤ k`
//! - `fair_j`: `Σ_{j' ∈ M, d(j,j') ≤ γR_j} y_j' ≥ 1`

use std::fmt::Write as _;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub cost: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    y: Vec<usize>,
    /// Per point: `(center, column)` for every finite pair.
    z: Vec<Vec<(usize, usize)>>,
}

impl LpModel {
    pub fn build(instance: &Instance, gamma: f64, radii: &[f64]) -> Result<Self> {
        let (n, m) = (instance.n(), instance.m());
        let mut columns = Vec::with_capacity(m + n * m);
        let mut y = Vec::with_capacity(m);
        for j in 0..m {
            y.push(columns.len());
            columns.push(Column {
                name: format!("y_{j}"),
                cost: 0.0,
                lower: 0.0,
                upper: 1.0,
            });
        }
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::new();
            for j in 0..m {
                let d = instance.dist(i, j);
                if d.is_finite() {
                    row.push((j, columns.len()));
                    columns.push(Column {
                        name: format!("z_{i}_{j}"),
                        cost: d,
                        lower: 0.0,
                        upper: 1.0,
                    });
                }
            }
            if row.is_empty() {
                return Err(Error::Unsupported(format!(
                    "point {i} is unreachable from every center"
                )));
            }
            z.push(row);
        }

        let mut rows = Vec::with_capacity(n + n * m + 1 + m);
        for (i, zi) in z.iter().enumerate() {
            rows.push(Row {
                name: format!("assign_{i}"),
                terms: zi.iter().map(|&(_, c)| (c, 1.0)).collect(),
                sense: Sense::Eq,
                rhs: 1.0,
            });
        }
        for (i, zi) in z.iter().enumerate() {
            for &(j, c) in zi {
                rows.push(Row {
                    name: format!("link_{i}_{j}"),
                    terms: vec![(c, 1.0), (y[j], -1.0)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
            }
        }
        rows.push(Row {
            name: "budget".into(),
            terms: y.iter().map(|&c| (c, 1.0)).collect(),
            sense: Sense::Le,
            rhs: instance.k() as f64,
        });
        let fair: Vec<Row> = (0..m)
            .into_par_iter()
            .map(|j| {
                let reach = gamma * radii[j];
                let terms = (0..m)
                    .filter(|&j2| {
                        instance
                            .center_dist(j, j2)
                            .is_some_and(|d| d <= reach || reach.is_infinite())
                    })
                    .map(|j2| (y[j2], 1.0))
                    .collect();
                Row {
                    name: format!("fair_{j}"),
                    terms,
                    sense: Sense::Ge,
                    rhs: 1.0,
                }
            })
            .collect();
        rows.extend(fair);
        Ok(Self {
            columns,
            rows,
            y,
            z,
        })
    }

    pub fn y_column(&self, j: usize) -> usize {
        self.y[j]
    }

    /// `(center, column)` pairs of point `i`.
    pub fn z_columns(&self, i: usize) -> &[(usize, usize)] {
        &self.z[i]
    }

    /// Optimal column values.
    pub fn solve(&self, gamma: f64) -> Result<Vec<f64>> {
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .columns
            .iter()
            .map(|c| p.add_var(c.cost, (c.lower, c.upper)))
            .collect();
        for r in &self.rows {
            let op = match r.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Ge => ComparisonOp::Ge,
                Sense::Eq => ComparisonOp::Eq,
            };
            p.add_constraint(r.terms.iter().map(|&(c, a)| (vars[c], a)), op, r.rhs);
        }
        match p.solve() {
            Ok(sol) => Ok(vars.iter().map(|&v| *sol.var_value(v)).collect()),
            Err(minilp::Error::Infeasible) => Err(Error::Infeasible { gamma }),
            Err(e) => Err(Error::Solver(e.to_string())),
        }
    }

    /// CPLEX LP text format, readable by most external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ proportionally constrained k-median\nMinimize\n obj:");
        let obj: Vec<(usize, f64)> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.cost != 0.0)
            .map(|(i, c)| (i, c.cost))
            .collect();
        self.write_terms(&mut out, &obj);
        out.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = write!(out, " {}:", r.name);
            self.write_terms(&mut out, &r.terms);
            let _ = writeln!(out, " {} {}", r.sense.symbol(), lp_num(r.rhs));
        }
        out.push_str("Bounds\n");
        for c in &self.columns {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                lp_num(c.lower),
                c.name,
                lp_num(c.upper)
            );
        }
        out.push_str("End\n");
        out
    }

    fn write_terms(&self, out: &mut String, terms: &[(usize, f64)]) {
        if terms.is_empty() {
            out.push_str(" 0 y_0");
            return;
        }
        for (pos, &(c, a)) in terms.iter().enumerate() {
            if pos > 0 && pos % 8 == 0 {
                out.push_str("\n   ");
            }
            let sign = if a < 0.0 { "-" } else { "+" };
            let name = &self.columns[c].name;
            if a.abs() == 1.0 {
                let _ = write!(out, " {sign} {name}");
            } else {
                let _ = write!(out, " {sign} {} {name}", lp_num(a.abs()));
            }
        }
    }
}

fn lp_num(v: f64) -> String {
    format!("{}", v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_export() {
        let inst = Instance::shared_table(
            vec![
                vec![0.0, 2.0, 5.0],
                vec![2.0, 0.0, 3.0],
                vec![5.0, 3.0, 0.0],
            ],
            2,
        )
        .unwrap();
        let radii = [2.0, 2.0, 3.0];
        let model = LpModel::build(&inst, 1.0, &radii).unwrap();
        assert_eq!(model.columns.len(), 3 + 9);
        assert_eq!(model.rows.len(), 3 + 9 + 1 + 3);
        let fair2 = model.rows.iter().find(|r| r.name == "fair_2").unwrap();
        assert_eq!(fair2.terms.len(), 2);
        let text = model.to_lp_format();
        assert!(
            text.starts_with("\\ proportionally constrained k-median\nMinimize\n obj: + 2 z_0_1")
        );
        assert!(text.contains(" budget: + y_0 + y_1 + y_2 <= 2\n"));
        assert!(text.contains(" link_1_2: + z_1_2 - y_2 <= 0\n"));
        assert!(text.contains(" fair_0: + y_0 + y_1 >= 1\n"));
        assert!(text.contains(" 0 <= z_2_2 <= 1\n"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn unreachable_pairs_have_no_column() {
        let inst =
            Instance::shared_table(vec![vec![0.0, f64::INFINITY], vec![f64::INFINITY, 0.0]], 2)
                .unwrap();
        let model = LpModel::build(&inst, 1.0, &[0.0, 0.0]).unwrap();
        assert_eq!(model.z_columns(0), &[(0, 2)]);
        assert_eq!(model.z_columns(1), &[(1, 3)]);
    }
}
