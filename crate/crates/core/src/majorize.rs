//! Majorization, weak submajorization and lambda-majorization of spectra.
//!
//! Vectors of different length are compared after zero padding to the longer
//! length. Lambda-majorization `p ⪰_λ q` is decided through transfer matrices:
//! `T ≥ 0`, column sums `≤ 1`, row sums `≤ 2^{-λ}` and `T p = q`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdp::lp::{solve_lp, LpProblem, LpStatus};

const SUM_TOL: f64 = 1e-10;
const STOCHASTIC_TOL: f64 = 1e-8;
const NEG_TOL: f64 = 1e-12;

/// Nonnegative real values in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Spectrum::new(v)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.values
    }
}

impl Spectrum {
    /// Sorts descending; entries in `[-1e-12, 0)` are clamped to zero.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(&v) = values.iter().find(|&&v| v < -NEG_TOL) {
            return Err(Error::NotPsd(v));
        }
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum { values })
    }

    pub fn uniform(n: usize) -> Self {
        Spectrum {
            values: vec![1.0 / n as f64; n],
        }
    }

    /// `(1, 0, .., 0)` of length `d`.
    pub fn pure(d: usize) -> Self {
        let mut values = vec![0.0; d.max(1)];
        values[0] = 1.0;
        Spectrum { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol
    }

    /// Number of entries above `tol * max`.
    pub fn rank(&self, tol: f64) -> usize {
        let cut = tol * self.max();
        self.values.iter().filter(|&&v| v > cut && v > 0.0).count()
    }

    /// `log₂ rank`.
    pub fn h_zero(&self, tol: f64) -> f64 {
        (self.rank(tol) as f64).log2()
    }

    /// `-log₂ max`.
    pub fn h_min(&self) -> f64 {
        -self.max().log2()
    }

    /// Shannon entropy in bits, with `0 log 0 = 0`.
    pub fn h_shannon(&self) -> f64 {
        -self
            .values
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|v| v * v.log2())
            .sum::<f64>()
    }

    /// Zero-padded copy of length `max(len, d)`.
    pub fn padded(&self, d: usize) -> Spectrum {
        let mut values = self.values.clone();
        if values.len() < d {
            values.resize(d, 0.0);
        }
        Spectrum { values }
    }

    pub fn tensor(&self, other: &Spectrum) -> Spectrum {
        let values = self
            .values
            .iter()
            .flat_map(|a| other.values.iter().map(move |b| a * b))
            .collect();
        Spectrum::new(values).expect("products of nonnegative values")
    }

    pub fn direct_sum(&self, other: &Spectrum) -> Spectrum {
        let values = self.values.iter().chain(&other.values).copied().collect();
        Spectrum::new(values).expect("concatenation of nonnegative values")
    }

    fn partial_sums(&self, d: usize) -> Vec<f64> {
        self.padded(d)
            .values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

/// `p ≻_w q`: every partial sum of `p` dominates the matching one of `q`.
pub fn weakly_submajorizes(p: &Spectrum, q: &Spectrum) -> bool {
    let d = p.len().max(q.len());
    p.partial_sums(d)
        .iter()
        .zip(q.partial_sums(d))
        .all(|(a, b)| *a >= b - SUM_TOL)
}

/// `p ≻ q`: weak submajorization with equal totals.
pub fn majorizes(p: &Spectrum, q: &Spectrum) -> bool {
    weakly_submajorizes(p, q) && (p.total() - q.total()).abs() <= SUM_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferKind {
    DoublyStochastic,
    DoublySubstochastic,
    /// Column sums at most 1, row sums at most `2^{-λ}`.
    Lambda(f64),
}

/// Nonnegative `d_out × d_in` matrix acting on probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    entries: DMatrix<f64>,
    kind: TransferKind,
}

impl TransferMatrix {
    pub fn new(entries: DMatrix<f64>, kind: TransferKind) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(v) = entries.iter().copied().find(|&v| v < -1e-10) {
            return Err(Error::Precondition(format!(
                "transfer matrix has negative entry {v:.3e}"
            )));
        }
        let t = TransferMatrix { entries, kind };
        let (rows, cols) = (t.row_sums(), t.col_sums());
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ok = match kind {
            TransferKind::DoublyStochastic => {
                t.entries.is_square()
                    && rows
                        .iter()
                        .chain(&cols)
                        .all(|s| (s - 1.0).abs() <= STOCHASTIC_TOL)
            }
            TransferKind::DoublySubstochastic => {
                rows.iter().chain(&cols).all(|&s| s <= 1.0 + STOCHASTIC_TOL)
            }
            TransferKind::Lambda(l) => {
                max(&cols) <= 1.0 + STOCHASTIC_TOL && max(&rows) <= (-l).exp2() + STOCHASTIC_TOL
            }
        };
        if !ok {
            return Err(Error::Precondition(format!(
                "matrix violates {kind:?} bounds (row sums {rows:?}, column sums {cols:?})"
            )));
        }
        Ok(t)
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn kind(&self) -> TransferKind {
        self.kind
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.entries.column_iter().map(|c| c.sum()).collect()
    }

    /// `T p`, with `p` zero padded to the input dimension.
    pub fn apply(&self, p: &Spectrum) -> Vec<f64> {
        let x = nalgebra::DVector::from_vec(p.padded(self.entries.ncols()).values);
        (&self.entries * x.rows(0, self.entries.ncols())).iter().copied().collect()
    }
}

/// Ancilla sizes `2^{λ1}` on the input and `2^{λ2}` on the output, `λ = λ1 - λ2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncillaSplit {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl AncillaSplit {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 < 0.0 || lambda2 < 0.0 {
            return Err(Error::Precondition(format!(
                "ancilla exponents must be finite and nonnegative, got ({lambda1}, {lambda2})"
            )));
        }
        Ok(AncillaSplit { lambda1, lambda2 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda1 - self.lambda2
    }

    /// `(2^{λ1}, 2^{λ2})` as integers.
    pub fn dims(&self) -> Result<(usize, usize)> {
        Ok((integer_weight(self.lambda1)?, integer_weight(self.lambda2)?))
    }
}

pub(crate) fn integer_weight(l: f64) -> Result<usize> {
    let w = l.exp2();
    let r = w.round();
    if (w - r).abs() > 1e-9 * w.max(1.0) || r < 1.0 {
        return Err(Error::NonIntegerAncilla(l));
    }
    Ok(r as usize)
}

/// Doubly stochastic `S` with `q = S p`, built from T-transforms.
///
/// Each step takes the last index `j` where the running vector exceeds `q`
/// and the first later index `k` where it falls short, and moves
/// `min(x_j - q_j, q_k - x_k)` from `j` to `k`. Each step settles at least
/// one coordinate, so at most `d - 1` steps are used.
pub fn hlp_matrix(p: &Spectrum, q: &Spectrum) -> Result<TransferMatrix> {
    if !majorizes(p, q) {
        return Err(Error::Precondition("first spectrum does not majorize the second".into()));
    }
    let d = p.len().max(q.len());
    let target = q.padded(d).values;
    let mut x = p.padded(d).values;
    let mut s = DMatrix::<f64>::identity(d, d);
    let tol = 1e-13;
    for _ in 0..d {
        let Some(j) = (0..d).rev().find(|&i| x[i] > target[i] + tol) else {
            break;
        };
        let Some(k) = (j + 1..d).find(|&i| x[i] < target[i] - tol) else {
            break;
        };
        let delta = (x[j] - target[j]).min(target[k] - x[k]);
        let w = delta / (x[j] - x[k]);
        // T = (1 - w) I + w (swap j, k); left-multiply the accumulated product
        let (rj, rk) = (s.row(j).into_owned(), s.row(k).into_owned());
        s.set_row(j, &(&rj * (1.0 - w) + &rk * w));
        s.set_row(k, &(&rk * (1.0 - w) + &rj * w));
        x[j] -= delta;
        x[k] += delta;
    }
    let t = TransferMatrix::new(s, TransferKind::DoublyStochastic)?;
    let out = t.apply(p);
    let err = out
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if err > 1e-8 {
        return Err(Error::Consistency(format!(
            "T-transform product misses the target by {err:.3e}"
        )));
    }
    Ok(t)
}

/// Variables of the transfer-matrix LP: `T` row-major, then optionally `α`.
fn transfer_lp(p: &Spectrum, q: &Spectrum, alpha: Option<f64>) -> LpProblem {
    let (dx, dy) = (p.len(), q.len());
    let nt = dx * dy;
    let n = nt + usize::from(alpha.is_none());
    let mut c = vec![0.0; n];
    if alpha.is_none() {
        c[nt] = 1.0;
    }
    let mut lp = LpProblem::minimize(c);
    for k in 0..dx {
        let mut row = vec![0.0; n];
        for i in 0..dy {
            row[i * dx + k] = 1.0;
        }
        lp = lp.leq(row, 1.0);
    }
    for i in 0..dy {
        let mut row = vec![0.0; n];
        row[i * dx..(i + 1) * dx].fill(1.0);
        lp = match alpha {
            Some(a) => lp.leq(row, a),
            None => {
                row[nt] = -1.0;
                lp.leq(row, 0.0)
            }
        };
    }
    for i in 0..dy {
        let mut row = vec![0.0; n];
        row[i * dx..(i + 1) * dx].copy_from_slice(p.values());
        lp = lp.eq(row, q.values()[i]);
    }
    lp
}

/// Decides `p ⪰_λ q`; on success also returns a witness transfer matrix.
pub fn lambda_feasible(
    p: &Spectrum,
    q: &Spectrum,
    lambda: f64,
) -> Result<(bool, Option<TransferMatrix>)> {
    if !lambda.is_finite() {
        return Err(Error::Precondition(format!("lambda must be finite, got {lambda}")));
    }
    let sol = solve_lp(&transfer_lp(p, q, Some((-lambda).exp2())))?;
    match sol.status {
        LpStatus::Infeasible => Ok((false, None)),
        LpStatus::Unbounded => Err(Error::Lp("feasibility program reported unbounded".into())),
        LpStatus::Optimal => {
            let t = DMatrix::from_row_slice(q.len(), p.len(), &sol.x);
            Ok((true, Some(TransferMatrix::new(t, TransferKind::Lambda(lambda))?)))
        }
    }
}

/// `R(p → q) = sup{λ : p ⪰_λ q}`, via `min α` and `λ = -log₂ α`.
pub fn absorbed_randomness(p: &Spectrum, q: &Spectrum) -> Result<f64> {
    Ok(-optimal_alpha(p, q)?.log2())
}

/// Smallest row-sum bound `α = 2^{-λ}` admitting a transfer matrix from `p` to `q`.
pub fn optimal_alpha(p: &Spectrum, q: &Spectrum) -> Result<f64> {
    for (name, s) in [("source", p), ("target", q)] {
        if !s.is_normalized(1e-9) {
            return Err(Error::Precondition(format!(
                "{name} spectrum is not normalized (total {})",
                s.total()
            )));
        }
    }
    let sol = solve_lp(&transfer_lp(p, q, None))?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        s => Err(Error::Lp(format!("absorbed-randomness program ended as {s:?}"))),
    }
}

/// `T_i^k = Σ_ab 2^{-λ1} S_{bi}^{ak}`; rows of `S` are `(b, i)` and columns `(a, k)`,
/// ancilla index major.
pub fn t_from_substochastic(s: &TransferMatrix, split: AncillaSplit) -> Result<TransferMatrix> {
    let (da, db) = split.dims()?;
    let e = s.entries();
    if e.nrows() % db != 0 || e.ncols() % da != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix does not factor over ancillas of sizes {db} (rows) and {da} (columns)",
            e.nrows(),
            e.ncols()
        )));
    }
    if rows_or_cols_exceed(s, 1.0) {
        return Err(Error::Precondition("input is not doubly substochastic".into()));
    }
    let (dy, dx) = (e.nrows() / db, e.ncols() / da);
    let w = 1.0 / da as f64;
    let t = DMatrix::from_fn(dy, dx, |i, k| {
        let mut acc = 0.0;
        for a in 0..da {
            for b in 0..db {
                acc += e[(b * dy + i, a * dx + k)];
            }
        }
        w * acc
    });
    TransferMatrix::new(t, TransferKind::Lambda(split.lambda()))
}

/// `S_{bi}^{ak} = 2^{-λ2} T_i^k`.
pub fn substochastic_from_t(t: &TransferMatrix, split: AncillaSplit) -> Result<TransferMatrix> {
    let lambda = split.lambda();
    if let TransferKind::Lambda(l) = t.kind() {
        if (l - lambda).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "matrix is certified for λ = {l}, split gives λ = {lambda}"
            )));
        }
    }
    let max_row = t.row_sums().into_iter().fold(0.0, f64::max);
    if max_row > (-lambda).exp2() + STOCHASTIC_TOL || col_sums_exceed_one(t) {
        return Err(Error::Precondition(format!(
            "matrix is not a transfer matrix for λ = {lambda}"
        )));
    }
    let (da, db) = split.dims()?;
    let e = t.entries();
    let (dy, dx) = (e.nrows(), e.ncols());
    let w = 1.0 / db as f64;
    let s = DMatrix::from_fn(db * dy, da * dx, |r, c| w * e[(r % dy, c % dx)]);
    TransferMatrix::new(s, TransferKind::DoublySubstochastic)
}

fn rows_or_cols_exceed(t: &TransferMatrix, bound: f64) -> bool {
    t.row_sums()
        .into_iter()
        .chain(t.col_sums())
        .any(|s| s > bound + STOCHASTIC_TOL)
}

fn col_sums_exceed_one(t: &TransferMatrix) -> bool {
    t.col_sums().into_iter().any(|s| s > 1.0 + STOCHASTIC_TOL)
}

/// `(Hmin(q) - H₀(p), R(p → q), H₀(q) - H₀(p))`, checked to be ordered within 1e-6.
pub fn check_r_bounds(p: &Spectrum, q: &Spectrum, tol: f64) -> Result<(f64, f64, f64)> {
    let lower = q.h_min() - p.h_zero(tol);
    let upper = q.h_zero(tol) - p.h_zero(tol);
    let value = absorbed_randomness(p, q)?;
    if lower > value + 1e-6 || value > upper + 1e-6 {
        return Err(Error::Consistency(format!(
            "bounds out of order: {lower} ≤ {value} ≤ {upper} fails"
        )));
    }
    Ok((lower, value, upper))
}
