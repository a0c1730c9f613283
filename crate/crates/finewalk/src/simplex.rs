//! Dense two-phase simplex over nonnegative variables.
//!
//! Small and self-contained on purpose: the envelope computations need both
//! sides of a dual pair solved by genuinely independent routes, so the
//! solver takes an explicit constraint list and nothing is shared between
//! the two formulations except this code path. Problem sizes stay in the
//! low thousands of variables; a dense tableau is the simplest thing that
//! is obviously correct at that scale.
//!
//! Phase 1 minimizes artificial infeasibility from a slack basis; phase 2
//! prices with Dantzig's rule and falls back to Bland's rule once the
//! iteration count suggests cycling.

use thiserror::Error;

use crate::scalar::{lit, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
pub struct Constraint<F> {
    pub coeffs: Vec<F>,
    pub sense: Sense,
    pub rhs: F,
}

/// `direction` of `objective . x` subject to the constraints and `x >= 0`.
/// Callers model free variables by splitting them into differences.
#[derive(Clone, Debug)]
pub struct LinearProgram<F> {
    pub direction: Direction,
    pub objective: Vec<F>,
    pub constraints: Vec<Constraint<F>>,
}

#[derive(Clone, Debug)]
pub struct Solution<F> {
    pub value: F,
    pub x: Vec<F>,
    pub iterations: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint {index} has {got} coefficients, expected {expected}")]
    BadShape {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("problem data must be finite")]
    NonFinite,
    #[error("infeasible: artificial residual {0:e} after phase 1")]
    Infeasible(f64),
    #[error("objective is unbounded")]
    Unbounded,
    #[error("iteration limit hit; the instance is likely degenerate beyond the anti-cycling guard")]
    Stalled,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
/// Relative floor for ratio-test pivots: entries below this fraction of
/// the column's largest magnitude are refused. Dividing a row by a pivot
/// orders of magnitude smaller than its neighbours scales the whole row's
/// roundoff up by the same factor, and a few thousand such pivots around
/// a degenerate vertex corrupt the cost row badly enough to fake rays.
const RATIO_FLOOR: f64 = 1e-7;
/// A column blocked in the ratio test only proves unboundedness when its
/// reduced cost exceeds this; anything smaller is pricing roundoff from
/// dependent columns.
const RAY_TOL: f64 = 1e-6;

struct Tableau<F> {
    /// `rows x (cols + 1)`; the trailing column is the rhs.
    a: Vec<Vec<F>>,
    cost: Vec<F>,
    basis: Vec<usize>,
    cols: usize,
    n_art: usize,
    iterations: usize,
}

impl<F: Scalar> Tableau<F> {
    fn art_start(&self) -> usize {
        self.cols - self.n_art
    }

    /// Rebuilds the reduced-cost row for the given objective coefficients
    /// (length `cols`), pricing out the current basis.
    fn set_cost(&mut self, c: &[F]) {
        self.cost = c.to_vec();
        self.cost.push(F::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != F::zero() {
                for j in 0..=self.cols {
                    self.cost[j] = self.cost[j] - cb * self.a[i][j];
                }
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v = *v / p;
        }
        for i in 0..self.a.len() {
            if i == row {
                continue;
            }
            let f = self.a[i][col];
            if f != F::zero() {
                for j in 0..=self.cols {
                    let delta = f * self.a[row][j];
                    self.a[i][j] = self.a[i][j] - delta;
                }
            }
        }
        let f = self.cost[col];
        if f != F::zero() {
            for j in 0..=self.cols {
                let delta = f * self.a[row][j];
                self.cost[j] = self.cost[j] - delta;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations until optimality for the current cost row.
    /// `allow` filters the columns that may enter.
    fn optimize(&mut self, allow: impl Fn(usize) -> bool, limit: usize) -> Result<(), LpError> {
        let cost_tol: F = lit(COST_TOL);
        let ray_tol: F = lit(RAY_TOL);
        let bland_after = limit / 2;
        for iter in 0..limit {
            self.iterations += 1;
            let bland = iter >= bland_after;
            let mut candidates: Vec<usize> = (0..self.cols)
                .filter(|&j| allow(j) && self.cost[j] < -cost_tol)
                .collect();
            if candidates.is_empty() {
                return Ok(());
            }
            if !bland {
                candidates.sort_by(|&a, &b| {
                    self.cost[a]
                        .partial_cmp(&self.cost[b])
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            }

            let mut pivoted = false;
            for &col in &candidates {
                match self.ratio_test(col, bland) {
                    RatioTest::Pivot(row) => {
                        self.pivot(row, col);
                        pivoted = true;
                        break;
                    }
                    // No positive entry at all: a genuine ray when the
                    // column prices as clearly improving. Linearly
                    // dependent generators also leave columns that price
                    // as improving inside roundoff yet admit no pivot
                    // row; those are settled noise, not rays.
                    RatioTest::NoPositiveEntry => {
                        if -self.cost[col] > ray_tol {
                            return Err(LpError::Unbounded);
                        }
                    }
                    // Positive entries exist but all sit below the safe
                    // pivot floor; leave the column alone.
                    RatioTest::OnlyTinyEntries => {}
                }
            }
            if !pivoted {
                return Ok(());
            }
        }
        Err(LpError::Stalled)
    }

    /// Picks the leaving row for `col` by minimum ratio. Near-tied rows
    /// are broken towards the largest pivot entry — repeatedly dividing
    /// by the smallest admissible pivot is what corrupts long degenerate
    /// runs — except under Bland's rule, where the smallest basis index
    /// must win for the anti-cycling argument to hold.
    fn ratio_test(&self, col: usize, bland: bool) -> RatioTest {
        let pivot_tol: F = lit(PIVOT_TOL);
        let mut col_max = F::zero();
        for row in &self.a {
            col_max = col_max.max(row[col].abs());
        }
        let rel: F = lit(RATIO_FLOOR);
        let floor = (rel * col_max).max(pivot_tol);

        let mut min_ratio: Option<F> = None;
        let mut weak = false;
        for row in &self.a {
            let aij = row[col];
            if aij > floor {
                let ratio = row[self.cols] / aij;
                if min_ratio.is_none_or(|r| ratio < r) {
                    min_ratio = Some(ratio);
                }
            } else if aij > pivot_tol {
                weak = true;
            }
        }
        let min_ratio = match min_ratio {
            Some(r) => r,
            None if weak => return RatioTest::OnlyTinyEntries,
            None => return RatioTest::NoPositiveEntry,
        };
        let tie = min_ratio + pivot_tol * (F::one() + min_ratio.abs());
        let mut best: Option<usize> = None;
        for (i, row) in self.a.iter().enumerate() {
            let aij = row[col];
            if aij > floor && row[self.cols] / aij <= tie {
                let better = match best {
                    None => true,
                    Some(b) => {
                        if bland {
                            self.basis[i] < self.basis[b]
                        } else {
                            aij > self.a[b][col]
                        }
                    }
                };
                if better {
                    best = Some(i);
                }
            }
        }
        RatioTest::Pivot(best.expect("a row attained the minimum ratio"))
    }
}

enum RatioTest {
    Pivot(usize),
    NoPositiveEntry,
    OnlyTinyEntries,
}

/// Solves the program with the two-phase dense simplex method.
pub fn solve<F: Scalar>(lp: &LinearProgram<F>) -> Result<Solution<F>, LpError> {
    let n = lp.objective.len();
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::BadShape {
                index: i,
                got: c.coeffs.len(),
                expected: n,
            });
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite);
    }

    // Normalize to rhs >= 0 and count auxiliary columns.
    let m = lp.constraints.len();
    let mut rows: Vec<(Vec<F>, Sense, F)> = Vec::with_capacity(m);
    let mut n_slack = 0usize;
    let mut n_art = 0usize;
    for c in &lp.constraints {
        let mut coeffs = c.coeffs.clone();
        let mut sense = c.sense;
        let mut rhs = c.rhs;
        if rhs < F::zero() {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Eq => Sense::Eq,
                Sense::Ge => Sense::Le,
            };
        }
        match sense {
            Sense::Le => n_slack += 1,
            Sense::Ge => {
                n_slack += 1;
                n_art += 1;
            }
            Sense::Eq => n_art += 1,
        }
        rows.push((coeffs, sense, rhs));
    }

    let cols = n + n_slack + n_art;
    let mut a = vec![vec![F::zero(); cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut slack_at = n;
    let mut art_at = n + n_slack;
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        a[i][..n].copy_from_slice(coeffs);
        a[i][cols] = *rhs;
        match sense {
            Sense::Le => {
                a[i][slack_at] = F::one();
                basis[i] = slack_at;
                slack_at += 1;
            }
            Sense::Ge => {
                a[i][slack_at] = -F::one();
                slack_at += 1;
                a[i][art_at] = F::one();
                basis[i] = art_at;
                art_at += 1;
            }
            Sense::Eq => {
                a[i][art_at] = F::one();
                basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    let mut t = Tableau {
        a,
        cost: Vec::new(),
        basis,
        cols,
        n_art,
        iterations: 0,
    };
    let limit = 50 * (m + cols) + 10_000;

    if n_art > 0 {
        let mut phase1 = vec![F::zero(); cols];
        for c in phase1.iter_mut().skip(t.art_start()) {
            *c = F::one();
        }
        t.set_cost(&phase1);
        t.optimize(|_| true, limit)?;
        let residual: F = t
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= t.art_start())
            .map(|(i, _)| t.a[i][t.cols])
            .fold(F::zero(), |acc, v| acc + v);
        if residual > lit(FEAS_TOL) {
            return Err(LpError::Infeasible(residual.to_f64().unwrap_or(f64::NAN)));
        }
        drive_out_artificials(&mut t);
    }

    let mut phase2 = vec![F::zero(); cols];
    for (c, &obj) in phase2.iter_mut().zip(&lp.objective) {
        *c = match lp.direction {
            Direction::Minimize => obj,
            Direction::Maximize => -obj,
        };
    }
    t.set_cost(&phase2);
    let art_start = t.art_start();
    t.optimize(|j| j < art_start, limit)?;

    let mut x = vec![F::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.a[i][t.cols];
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(&c, &v)| c * v)
        .fold(F::zero(), |acc, v| acc + v);
    Ok(Solution {
        value,
        x,
        iterations: t.iterations,
    })
}

/// Pivots zero-level artificials out of the basis; rows that offer no
/// pivot column are redundant restatements of other rows and are dropped.
fn drive_out_artificials<F: Scalar>(t: &mut Tableau<F>) {
    let pivot_tol: F = lit(PIVOT_TOL);
    let art_start = t.art_start();
    let mut i = 0;
    while i < t.a.len() {
        if t.basis[i] < art_start {
            i += 1;
            continue;
        }
        let col = (0..art_start).find(|&j| t.a[i][j].abs() > pivot_tol);
        match col {
            Some(j) => {
                t.pivot(i, j);
                i += 1;
            }
            None => {
                t.a.remove(i);
                t.basis.remove(i);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(coeffs: &[f64], rhs: f64) -> Constraint<f64> {
        Constraint { coeffs: coeffs.to_vec(), sense: Sense::Le, rhs }
    }
    fn ge(coeffs: &[f64], rhs: f64) -> Constraint<f64> {
        Constraint { coeffs: coeffs.to_vec(), sense: Sense::Ge, rhs }
    }
    fn eq(coeffs: &[f64], rhs: f64) -> Constraint<f64> {
        Constraint { coeffs: coeffs.to_vec(), sense: Sense::Eq, rhs }
    }

    #[test]
    fn small_maximization() {
        let lp = LinearProgram {
            direction: Direction::Maximize,
            objective: vec![3.0, 2.0],
            constraints: vec![le(&[1.0, 1.0], 4.0), le(&[1.0, 0.0], 2.0)],
        };
        let s = solve(&lp).unwrap();
        assert!((s.value - 10.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_lower_bounds() {
        let lp = LinearProgram {
            direction: Direction::Minimize,
            objective: vec![1.0, 1.0],
            constraints: vec![eq(&[1.0, 2.0], 4.0), ge(&[1.0, 0.0], 1.0)],
        };
        let s = solve(&lp).unwrap();
        assert!((s.value - 2.5).abs() < 1e-9, "{}", s.value);
        assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // x >= 2 written as -x <= -2.
        let lp = LinearProgram {
            direction: Direction::Minimize,
            objective: vec![1.0],
            constraints: vec![le(&[-1.0], -2.0)],
        };
        let s = solve(&lp).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_system() {
        let lp = LinearProgram {
            direction: Direction::Maximize,
            objective: vec![1.0],
            constraints: vec![le(&[1.0], 1.0), ge(&[1.0], 2.0)],
        };
        assert!(matches!(solve(&lp), Err(LpError::Infeasible(_))));
    }

    #[test]
    fn unbounded_ray() {
        let lp = LinearProgram {
            direction: Direction::Maximize,
            objective: vec![1.0, 0.0],
            constraints: vec![le(&[0.0, 1.0], 1.0)],
        };
        assert!(matches!(solve(&lp), Err(LpError::Unbounded)));
    }

    #[test]
    fn degenerate_vertex() {
        // Three constraints meet at (1, 0); degeneracy must not stall.
        let lp = LinearProgram {
            direction: Direction::Maximize,
            objective: vec![1.0, 1.0],
            constraints: vec![
                le(&[1.0, 0.0], 1.0),
                le(&[1.0, 1.0], 1.0),
                le(&[1.0, 2.0], 1.0),
            ],
        };
        let s = solve(&lp).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let lp = LinearProgram {
            direction: Direction::Maximize,
            objective: vec![1.0, 1.0],
            constraints: vec![
                eq(&[1.0, 1.0], 2.0),
                eq(&[2.0, 2.0], 4.0),
                le(&[1.0, 0.0], 1.5),
            ],
        };
        let s = solve(&lp).unwrap();
        assert!((s.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn random_primal_dual_pairs_agree() {
        // max c.x s.t. Ax <= b, x >= 0 and min b.y s.t. A'y >= c, y >= 0
        // must meet at the same value when both are solvable.
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(9107, 0);
        for case in 0..20 {
            let m = 3 + (case % 4);
            let n = 2 + (case % 3);
            let a: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(0.1..2.0)).collect())
                .collect();
            let b: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..3.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();

            let primal = LinearProgram {
                direction: Direction::Maximize,
                objective: c.clone(),
                constraints: a
                    .iter()
                    .zip(&b)
                    .map(|(row, &rhs)| le(row, rhs))
                    .collect(),
            };
            let dual = LinearProgram {
                direction: Direction::Minimize,
                objective: b.clone(),
                constraints: (0..n)
                    .map(|j| ge(&(0..m).map(|i| a[i][j]).collect::<Vec<_>>(), c[j]))
                    .collect(),
            };
            let ps = solve(&primal).unwrap();
            let ds = solve(&dual).unwrap();
            assert!(
                (ps.value - ds.value).abs() < 1e-7,
                "case {case}: primal {} dual {}",
                ps.value,
                ds.value
            );
        }
    }
}
