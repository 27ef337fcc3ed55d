//! Dense tableau simplex for small linear programs.
//!
//! Problems are stated as
//!
//! ```text
//! minimize   c·x
//! subject to A_ub x ≤ b_ub,  A_eq x = b_eq,  lo ≤ x ≤ hi
//! ```
//!
//! Rows without a natural slack basis get artificial variables priced with a
//! symbolic big-M: every reduced cost is kept as a pair `(M-part, c-part)` and
//! compared lexicographically, which is the limit `M → ∞` without choosing a
//! numeric M. Pivoting follows Bland's rule in both tiers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    /// Per-variable `(lower, upper)`; lower bounds must be finite.
    pub bounds: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LpProblem {
    /// Minimization over `n = objective.len()` nonnegative variables.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            a_ub: vec![],
            b_ub: vec![],
            a_eq: vec![],
            b_eq: vec![],
            bounds: vec![(0.0, None); n],
        }
    }

    /// Maximization, stored as minimization of `-c·x`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::minimize(objective.into_iter().map(|v| -v).collect())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn leq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn bound(mut self, var: usize, lower: f64, upper: Option<f64>) -> Self {
        self.bounds[var] = (lower, upper);
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad_row = |rows: &[Vec<f64>]| rows.iter().any(|r| r.len() != n);
        if bad_row(&self.a_ub)
            || bad_row(&self.a_eq)
            || self.a_ub.len() != self.b_ub.len()
            || self.a_eq.len() != self.b_eq.len()
            || self.bounds.len() != n
        {
            return Err(Error::DimensionMismatch(
                "linear program rows, targets and bounds disagree in size".into(),
            ));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective)
            || !finite(&self.b_ub)
            || !finite(&self.b_eq)
            || self.a_ub.iter().chain(&self.a_eq).any(|r| !finite(r))
            || self.bounds.iter().any(|(lo, hi)| !lo.is_finite() || hi.is_some_and(|h| h.is_nan()))
        {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Largest violation of any constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut worst = 0.0f64;
        for (r, b) in self.a_ub.iter().zip(&self.b_ub) {
            worst = worst.max(dot(r) - b);
        }
        for (r, b) in self.a_eq.iter().zip(&self.b_eq) {
            worst = worst.max((dot(r) - b).abs());
        }
        for (xi, (lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xi);
            if let Some(h) = hi {
                worst = worst.max(xi - h);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    kind: Vec<ColKind>,
    rc: Vec<f64>,
    rm: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let cols = self.cols;
        let p = self.at(r, e);
        for j in 0..cols {
            self.a[r * cols + j] /= p;
        }
        self.rhs[r] /= p;
        let prow: Vec<f64> = self.a[r * cols..(r + 1) * cols].to_vec();
        let prhs = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + e];
            if f != 0.0 {
                for j in 0..cols {
                    self.a[i * cols + j] -= f * prow[j];
                }
                self.a[i * cols + e] = 0.0;
                self.rhs[i] -= f * prhs;
            }
        }
        let (fc, fm) = (self.rc[e], self.rm[e]);
        for j in 0..cols {
            self.rc[j] -= fc * prow[j];
            self.rm[j] -= fm * prow[j];
        }
        self.rc[e] = 0.0;
        self.rm[e] = 0.0;
        self.basis[r] = e;
    }

    fn artificial_mass(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .filter(|(&b, _)| self.kind[b] == ColKind::Artificial)
            .map(|(_, v)| v.max(0.0))
            .sum()
    }

    fn entering(&self, phase_one: bool) -> Option<usize> {
        let scale_m = self.rm.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let scale_c = self.rc.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        (0..self.cols).find(|&j| {
            if self.kind[j] == ColKind::Artificial {
                return false;
            }
            if phase_one {
                self.rm[j] < -COST_TOL * scale_m
            } else {
                self.rm[j].abs() <= COST_TOL * scale_m && self.rc[j] < -COST_TOL * scale_c
            }
        })
    }

    fn leaving(&self, e: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a > PIVOT_TOL {
                let ratio = self.rhs[i].max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Solves `p` to optimality, or reports infeasibility or unboundedness.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();

    // shift x = lo + y, y ≥ 0; upper bounds become ≤ rows
    let lo: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();
    let shift = |row: &[f64]| row.iter().zip(&lo).map(|(a, l)| a * l).sum::<f64>();
    let mut ub_rows: Vec<(Vec<f64>, f64)> = p
        .a_ub
        .iter()
        .zip(&p.b_ub)
        .map(|(r, b)| (r.clone(), b - shift(r)))
        .collect();
    for (j, (l, hi)) in p.bounds.iter().enumerate() {
        if let Some(h) = hi {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            ub_rows.push((r, h - l));
        }
    }
    let eq_rows: Vec<(Vec<f64>, f64)> = p
        .a_eq
        .iter()
        .zip(&p.b_eq)
        .map(|(r, b)| (r.clone(), b - shift(r)))
        .collect();

    let m = ub_rows.len() + eq_rows.len();
    let n_slack = ub_rows.len();
    let n_art = ub_rows.iter().filter(|(_, b)| *b < 0.0).count() + eq_rows.len();
    let cols = n + n_slack + n_art;

    let mut kind = vec![ColKind::Structural; n];
    kind.extend(std::iter::repeat_n(ColKind::Slack, n_slack));
    kind.extend(std::iter::repeat_n(ColKind::Artificial, n_art));

    let mut a = vec![0.0; m * cols];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut next_art = n + n_slack;
    for (i, (row, b)) in ub_rows.iter().enumerate() {
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[i * cols + j] = sign * row[j];
        }
        a[i * cols + n + i] = sign;
        rhs[i] = sign * b;
        if sign > 0.0 {
            basis[i] = n + i;
        } else {
            a[i * cols + next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        }
    }
    for (k, (row, b)) in eq_rows.iter().enumerate() {
        let i = n_slack + k;
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            a[i * cols + j] = sign * row[j];
        }
        rhs[i] = sign * b;
        a[i * cols + next_art] = 1.0;
        basis[i] = next_art;
        next_art += 1;
    }

    let mut rc = vec![0.0; cols];
    rc[..n].copy_from_slice(&p.objective);
    let mut rm = vec![0.0; cols];
    for i in 0..m {
        if kind[basis[i]] == ColKind::Artificial {
            for j in 0..cols {
                if kind[j] != ColKind::Artificial {
                    rm[j] -= a[i * cols + j];
                }
            }
        }
    }

    let mut t = Tableau {
        rows: m,
        cols,
        a,
        rhs,
        basis,
        kind,
        rc,
        rm,
    };

    let mut pivots = 0;
    let mut phase_one = true;
    loop {
        if pivots >= MAX_PIVOTS {
            return Err(Error::Lp(format!("pivot limit {MAX_PIVOTS} reached")));
        }
        let entering = t.entering(phase_one);
        let Some(e) = entering else {
            if phase_one {
                let scale = 1.0 + t.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if t.artificial_mass() > FEAS_TOL * scale {
                    return Ok(LpSolution {
                        status: LpStatus::Infeasible,
                        x: vec![],
                        objective: f64::NAN,
                        pivots,
                    });
                }
                phase_one = false;
                continue;
            }
            break;
        };
        let Some(r) = t.leaving(e) else {
            if phase_one {
                return Err(Error::Lp(
                    "artificial objective unbounded below, tableau is corrupt".into(),
                ));
            }
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: vec![],
                objective: f64::NEG_INFINITY,
                pivots,
            });
        };
        t.pivot(r, e);
        pivots += 1;
    }

    let mut x = lo.clone();
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] += t.rhs[i].max(0.0);
        }
    }
    let objective = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let scale = 1.0
        + p.b_ub
            .iter()
            .chain(&p.b_eq)
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let violation = p.max_violation(&x);
    if violation > 1e-7 * scale {
        return Err(Error::Lp(format!(
            "optimal basis violates constraints by {violation:.3e}"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bound() {
        let p = LpProblem::maximize(vec![1.0]).leq(vec![1.0], 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective + 1.0).abs() < 1e-12);
    }

    /// Brute-force vertex enumeration on a 2×2 transportation problem.
    #[test]
    fn transportation_matches_vertex_enumeration() {
        let supply = [3.0, 2.0];
        let demand = [1.0, 4.0];
        let cost = [4.0, 1.0, 2.0, 3.0];
        let p = LpProblem::minimize(cost.to_vec())
            .eq(vec![1.0, 1.0, 0.0, 0.0], supply[0])
            .eq(vec![0.0, 0.0, 1.0, 1.0], supply[1])
            .eq(vec![1.0, 0.0, 1.0, 0.0], demand[0])
            .eq(vec![0.0, 1.0, 0.0, 1.0], demand[1]);
        let s = solve_lp(&p).unwrap();
        // one degree of freedom: x00 = t, x01 = 3 - t, x10 = 1 - t, x11 = 1 + t, t ∈ [0, 1]
        let oracle = [0.0f64, 1.0]
            .iter()
            .map(|&t| 4.0 * t + (3.0 - t) + 2.0 * (1.0 - t) + 3.0 * (1.0 + t))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - oracle).abs() < 1e-9);
        assert!(s.x.iter().all(|v| (v - v.round()).abs() < 1e-9));
    }

    #[test]
    fn erasure_absorbed_randomness() {
        // T = [t0 t1], α; min α s.t. T p = 1, t_k ≤ 1, t0 + t1 ≤ α
        let p = LpProblem::minimize(vec![0.0, 0.0, 1.0])
            .eq(vec![0.5, 0.5, 0.0], 1.0)
            .leq(vec![1.0, 0.0, 0.0], 1.0)
            .leq(vec![0.0, 1.0, 0.0], 1.0)
            .leq(vec![1.0, 1.0, -1.0], 0.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!((-s.objective.log2() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded_are_distinct() {
        let inf = LpProblem::minimize(vec![1.0])
            .leq(vec![1.0], 1.0)
            .eq(vec![1.0], 2.0);
        assert_eq!(solve_lp(&inf).unwrap().status, LpStatus::Infeasible);
        let unb = LpProblem::maximize(vec![1.0, 0.0]).leq(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve_lp(&unb).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn bounds_and_negative_rhs() {
        // min x + y, x ≥ 1, y ∈ [0.5, 3], x + y ≥ 2  (written as -x - y ≤ -2)
        let p = LpProblem::minimize(vec![1.0, 1.0])
            .leq(vec![-1.0, -1.0], -2.0)
            .bound(0, 1.0, None)
            .bound(1, 0.5, Some(3.0));
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(s.x[0] >= 1.0 - 1e-12 && s.x[1] >= 0.5 - 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example for the textbook pivot rule
        let p = LpProblem::minimize(vec![-0.75, 150.0, -0.02, 6.0])
            .leq(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .leq(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .leq(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn rejects_ragged_rows() {
        let p = LpProblem::minimize(vec![1.0, 1.0]).leq(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&p), Err(Error::DimensionMismatch(_))));
    }
}
