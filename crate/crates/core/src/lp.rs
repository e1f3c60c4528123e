//! Linear-program model for the histogram estimators.
//!
//! Problems are stated as `minimize c·x  subject to  A x (≤|≥|=) b,  x ≥ 0`
//! and solved by the sparse revised simplex of the `microlp` crate, which
//! refactorizes its basis with LU and is deterministic for a fixed input.
//! Rows and then columns are scaled to unit max-norm before they reach the
//! backend so its absolute tolerances act relatively. The backend's answer can drift off
//! ill-conditioned equality rows by ~1e-6, so it is polished by a
//! least-squares correction on the active rows and re-checked against the
//! unscaled data. Nothing here holds global state.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("linear program solver failed: {0}")]
    Solver(String),
    #[error("invalid linear program: {0}")]
    InvalidInput(String),
    #[error("solution violates constraints by {violation:e}")]
    Numerical { violation: f64 },
}

/// Largest constraint or sign violation accepted in a returned solution.
pub const MAX_VIOLATION: f64 = 1e-8;

/// Relative slack under which an inequality counts as active when polishing.
const ACTIVE_ROW_TOLERANCE: f64 = 1e-7;
const POLISH_ROUNDS: usize = 3;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Independently recomputed `max_violation(x)`.
    pub violation: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, c: Vec<f64>) {
        assert_eq!(c.len(), self.num_vars, "objective length");
        self.objective = c;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint or sign bound at `x`, computed
    /// directly from the problem data.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let sign = x.iter().fold(0.0f64, |m, &v| m.max(-v));
        self.constraints.iter().fold(sign, |m, c| {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            m.max(v)
        })
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.check_input()?;
        let rows = self.merged_rows()?;
        let col_scale = column_scales(self.num_vars, &rows);
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = self
            .objective
            .iter()
            .zip(&col_scale)
            .map(|(&c, &s)| problem.add_var(c / s, (0.0, f64::INFINITY)))
            .collect();
        for (terms, relation, rhs) in &rows {
            let op = match relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Ge => ComparisonOp::Ge,
                Relation::Eq => ComparisonOp::Eq,
            };
            let terms: Vec<_> = terms.iter().map(|&(j, a)| (vars[j], a / col_scale[j])).collect();
            problem.add_constraint(terms.as_slice(), op, *rhs);
        }
        let solved = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            microlp::Error::InternalError(msg) => LpError::Solver(msg),
        })?;
        let mut x: Vec<f64> = vars
            .iter()
            .zip(&col_scale)
            .map(|(&v, &s)| (solved[v] / s).max(0.0))
            .collect();
        let mut violation = self.max_violation(&x);
        for _ in 0..POLISH_ROUNDS {
            if violation <= MAX_VIOLATION {
                break;
            }
            match self.polish(&x) {
                Some((y, v)) if v < violation => (x, violation) = (y, v),
                _ => break,
            }
        }
        if violation > MAX_VIOLATION {
            return Err(LpError::Numerical { violation });
        }
        Ok(LpSolution {
            objective: self.objective_value(&x),
            x,
            violation,
        })
    }

    /// Constraint rows with repeated indices merged and each row scaled to
    /// unit max-norm. Empty rows are dropped after checking they hold at 0.
    #[allow(clippy::type_complexity)]
    fn merged_rows(&self) -> Result<Vec<ScaledRow>, LpError> {
        let mut out = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for &(j, a) in &c.coeffs {
                *merged.entry(j).or_insert(0.0) += a;
            }
            merged.retain(|_, a| *a != 0.0);
            let scale = merged.values().fold(0.0f64, |m, a| m.max(a.abs()));
            if scale == 0.0 {
                let holds = match c.relation {
                    Relation::Le => 0.0 <= c.rhs,
                    Relation::Ge => 0.0 >= c.rhs,
                    Relation::Eq => c.rhs == 0.0,
                };
                if !holds {
                    return Err(LpError::Infeasible);
                }
                continue;
            }
            let terms = merged.into_iter().map(|(j, a)| (j, a / scale)).collect();
            out.push((terms, c.relation, c.rhs / scale));
        }
        Ok(out)
    }

    /// One Newton step back onto the active rows: the minimum-norm change of
    /// the positive coordinates that zeroes the residual of every equality
    /// and every tight or violated inequality. Zero coordinates stay at zero.
    fn polish(&self, x: &[f64]) -> Option<(Vec<f64>, f64)> {
        let support: Vec<usize> = (0..self.num_vars).filter(|&j| x[j] > 0.0).collect();
        if support.is_empty() {
            return None;
        }
        let mut col_of = vec![usize::MAX; self.num_vars];
        for (k, &j) in support.iter().enumerate() {
            col_of[j] = k;
        }
        let mut rows: Vec<(&Constraint, f64)> = Vec::new();
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let gap = c.rhs - lhs;
            let tight = gap.abs() <= ACTIVE_ROW_TOLERANCE * (1.0 + c.rhs.abs());
            let active = match c.relation {
                Relation::Eq => true,
                Relation::Le => tight || gap < 0.0,
                Relation::Ge => tight || gap > 0.0,
            };
            if active {
                rows.push((c, gap));
            }
        }
        if rows.is_empty() {
            return None;
        }
        let mut a = DMatrix::<f64>::zeros(rows.len(), support.len());
        let mut r = DVector::<f64>::zeros(rows.len());
        for (i, (c, gap)) in rows.iter().enumerate() {
            for &(j, v) in &c.coeffs {
                if col_of[j] != usize::MAX {
                    a[(i, col_of[j])] += v;
                }
            }
            r[i] = *gap;
        }
        let delta = a.svd(true, true).solve(&r, 1e-14).ok()?;
        let mut y = x.to_vec();
        for (k, &j) in support.iter().enumerate() {
            y[j] = (y[j] + delta[k]).max(0.0);
        }
        let v = self.max_violation(&y);
        Some((y, v))
    }

    fn check_input(&self) -> Result<(), LpError> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::InvalidInput("non-finite objective coefficient".into()));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::InvalidInput(format!("row {r} has non-finite rhs")));
            }
            for &(j, a) in &c.coeffs {
                if j >= self.num_vars || !a.is_finite() {
                    return Err(LpError::InvalidInput(format!("row {r} has a bad entry ({j}, {a})")));
                }
            }
        }
        Ok(())
    }
}

/// Merged, row-scaled constraint: `(terms, relation, rhs)`.
type ScaledRow = (Vec<(usize, f64)>, Relation, f64);

/// Per-column max-norm over the (row-scaled) constraint matrix; 1 for
/// columns that appear in no row.
fn column_scales(num_vars: usize, rows: &[ScaledRow]) -> Vec<f64> {
    let mut s = vec![0.0f64; num_vars];
    for (terms, _, _) in rows {
        for &(j, a) in terms {
            s[j] = s[j].max(a.abs());
        }
    }
    s.into_iter().map(|v| if v > 0.0 { v } else { 1.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Gaussian elimination with partial pivoting on a row-major `m × m`
    /// system; `None` when singular.
    fn solve_dense(a: &mut [f64], mut b: Vec<f64>, m: usize) -> Option<Vec<f64>> {
        for k in 0..m {
            let p = (k..m).max_by(|&i, &j| a[i * m + k].abs().total_cmp(&a[j * m + k].abs()))?;
            if a[p * m + k].abs() < 1e-12 {
                return None;
            }
            if p != k {
                for c in 0..m {
                    a.swap(k * m + c, p * m + c);
                }
                b.swap(k, p);
            }
            for i in (k + 1)..m {
                let f = a[i * m + k] / a[k * m + k];
                for c in k..m {
                    a[i * m + c] -= f * a[k * m + c];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; m];
        for k in (0..m).rev() {
            let s: f64 = ((k + 1)..m).map(|c| a[k * m + c] * x[c]).sum();
            x[k] = (b[k] - s) / a[k * m + k];
        }
        Some(x)
    }

    /// Brute-force oracle: enumerate every vertex of the feasible polyhedron
    /// (intersections of `num_vars` tight constraints or sign bounds) and keep
    /// the best feasible one. Valid when the feasible set is bounded.
    fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
        let n = lp.num_vars();
        let mut planes: Vec<(Vec<f64>, f64)> = lp
            .constraints()
            .iter()
            .map(|c| {
                let mut row = vec![0.0; n];
                for &(j, a) in &c.coeffs {
                    row[j] += a;
                }
                (row, c.rhs)
            })
            .collect();
        for j in 0..n {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            planes.push((row, 0.0));
        }
        let mut best: Option<f64> = None;
        let total = planes.len();
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let mut a: Vec<f64> = idx.iter().flat_map(|&i| planes[i].0.clone()).collect();
            let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
            if let Some(x) = solve_dense(&mut a, b, n) {
                if lp.max_violation(&x) < 1e-9 {
                    let v = lp.objective_value(&x);
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
            // Next combination of `n` plane indices.
            let mut k = n;
            loop {
                if k == 0 {
                    return best;
                }
                k -= 1;
                if idx[k] < total - n + k {
                    idx[k] += 1;
                    for t in (k + 1)..n {
                        idx[t] = idx[t - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y st x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), value 36.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-3.0, -5.0]);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y st x + y = 1, y ≥ 0.3, -x ≤ -0.2 → (0.7, 0.3), value 1.3.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 2.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(1, 1.0)], Relation::Ge, 0.3);
        lp.add_constraint(vec![(0, -1.0)], Relation::Le, -0.2);
        let s = lp.solve().unwrap();
        assert!((s.objective - 1.3).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible)));

        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, 0.0]);
        lp.add_constraint(vec![(1, 1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 1.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 4.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example (Beale) under Dantzig's rule.
        let mut lp = LinearProgram::new(4);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(2, 1.0)], Relation::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::InvalidInput(_))));
    }

    fn arb_lp() -> impl Strategy<Value = LinearProgram> {
        (2usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec((prop::collection::vec(-3.0f64..3.0, n), 0u8..3, -4.0f64..6.0), m),
            )
                .prop_map(move |(c, rows)| {
                    let mut lp = LinearProgram::new(n);
                    lp.set_objective(c);
                    for (coeffs, rel, rhs) in rows {
                        let rel = match rel {
                            0 => Relation::Le,
                            1 => Relation::Ge,
                            _ => Relation::Eq,
                        };
                        lp.add_constraint(coeffs.into_iter().enumerate().collect(), rel, rhs);
                    }
                    // Box keeps every feasible region bounded.
                    lp.add_constraint((0..n).map(|j| (j, 1.0)).collect(), Relation::Le, 10.0);
                    lp
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]
        #[test]
        fn matches_vertex_enumeration(lp in arb_lp()) {
            let oracle = vertex_enumeration(&lp);
            match (lp.solve(), oracle) {
                (Ok(s), Some(best)) => {
                    prop_assert!((s.objective - best).abs() < 1e-7 * (1.0 + best.abs()),
                        "simplex {} vs oracle {}", s.objective, best);
                    prop_assert!(lp.max_violation(&s.x) < 1e-8);
                }
                (Err(LpError::Infeasible), None) => {}
                (got, want) => prop_assert!(false, "simplex {:?} vs oracle {:?}", got, want),
            }
        }
    }
}
