//! Linear and semidefinite programming.
//!
//! [`SdpProblem`] holds a block SDP over complex Hermitian and real symmetric
//! blocks with affine equality constraints:
//!
//! ```text
//! min Σ_b Re tr(C_b X_b)   s.t.  Σ_b Φ_b(X_b) = B_g  for each group g,   X_b ⪰ 0
//! ```
//!
//! Each Hermitian-valued constraint is expanded over an orthonormal Hermitian
//! basis of its target space, so all algebra is real. Complex blocks are
//! solved through the real embedding `A + iB ↦ [[A, -B], [B, A]]`.

pub mod landauer_program;
pub mod lp;

mod ipm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::serde_cmat;
use crate::qmat::{c, max_asymmetry, zeros, ComplexMatrix};

pub use landauer_program::{
    alpha_feasibility, encode_landauer_primal, encode_landauer_primal_fixed_alpha, verify_certificate,
    AlphaFeasibility, CertificateDump, CertificateReport, DualCertificate, LandauerProgram,
    LandauerSolution,
};
pub use lp::{solve_lp, LpProblem, LpSolution, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Hermitian,
    RealSymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub label: String,
    pub dim: usize,
    pub kind: BlockKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Term {
    pub block: usize,
    #[serde(with = "serde_cmat")]
    pub coeff: ComplexMatrix,
}

/// `Σ_terms Re tr(coeff · X_block) = rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarConstraint {
    pub terms: Vec<Term>,
    pub rhs: f64,
}

/// A Hermitian-valued constraint occupying `len` consecutive scalar rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintGroup {
    pub label: String,
    pub dim: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    #[serde(with = "serde_cmat::vec")]
    pub objective: Vec<ComplexMatrix>,
    pub constraints: Vec<ScalarConstraint>,
    pub groups: Vec<ConstraintGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    #[serde(with = "serde_cmat::vec")]
    pub primal: Vec<ComplexMatrix>,
    #[serde(with = "serde_cmat::vec")]
    pub dual_slack: Vec<ComplexMatrix>,
    /// Dual operator per constraint group, `Σ_k y_k F_k`.
    #[serde(with = "serde_cmat::vec")]
    pub dual: Vec<ComplexMatrix>,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    /// `|Σ Re tr(A_i X) - b_i|` per scalar constraint.
    pub residuals: Vec<f64>,
    /// Frobenius norm of `C - Aᵀy - S` over all blocks.
    pub dual_residual: f64,
    pub iterations: usize,
    pub log: Vec<IterationLog>,
}

/// Orthonormal basis of the real span of Hermitian `d × d` matrices under `Re tr(F G)`.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in j..d {
            let mut e = zeros(d, d);
            if j == k {
                e[(j, j)] = c(1.0, 0.0);
                out.push(e);
            } else {
                e[(j, k)] = c(s, 0.0);
                e[(k, j)] = c(s, 0.0);
                out.push(e);
                let mut f = zeros(d, d);
                f[(j, k)] = c(0.0, s);
                f[(k, j)] = c(0.0, -s);
                out.push(f);
            }
        }
    }
    out
}

fn symmetric_basis(d: usize) -> Vec<ComplexMatrix> {
    hermitian_basis(d)
        .into_iter()
        .filter(|m| m.iter().all(|z| z.im == 0.0))
        .collect()
}

fn block_basis(spec: &BlockSpec) -> Vec<ComplexMatrix> {
    match spec.kind {
        BlockKind::Hermitian => hermitian_basis(spec.dim),
        BlockKind::RealSymmetric => symmetric_basis(spec.dim),
    }
}

fn re_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Linear map applied to one block variable inside an equality constraint.
pub type BlockMap<'a> = (usize, &'a dyn Fn(&ComplexMatrix) -> ComplexMatrix);

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, label: &str, dim: usize, kind: BlockKind) -> usize {
        self.blocks.push(BlockSpec {
            label: label.into(),
            dim,
            kind,
        });
        self.objective.push(zeros(dim, dim));
        self.blocks.len() - 1
    }

    pub fn set_objective(&mut self, block: usize, cost: ComplexMatrix) -> Result<()> {
        let spec = self.block(block)?;
        if cost.shape() != (spec.dim, spec.dim) {
            return Err(Error::DimensionMismatch(format!(
                "objective for block `{}` must be {}x{}",
                spec.label, spec.dim, spec.dim
            )));
        }
        if max_asymmetry(&cost) > 1e-12 {
            return Err(Error::NotHermitian(max_asymmetry(&cost)));
        }
        self.objective[block] = cost;
        Ok(())
    }

    fn block(&self, block: usize) -> Result<&BlockSpec> {
        self.blocks.get(block).ok_or(Error::IndexOutOfRange {
            index: block,
            count: self.blocks.len(),
        })
    }

    /// Adds `Σ_b Φ_b(X_b) = target`; every `Φ_b` must be Hermitian-preserving.
    pub fn add_equality(
        &mut self,
        label: &str,
        target: &ComplexMatrix,
        maps: &[BlockMap<'_>],
    ) -> Result<()> {
        let t = target.nrows();
        if target.ncols() != t {
            return Err(Error::NotSquare {
                rows: target.nrows(),
                cols: target.ncols(),
            });
        }
        if max_asymmetry(target) > 1e-10 {
            return Err(Error::NotHermitian(max_asymmetry(target)));
        }
        // images of each block basis element
        let mut images = Vec::with_capacity(maps.len());
        for (block, map) in maps {
            let spec = self.block(*block)?.clone();
            let basis = block_basis(&spec);
            let mut imgs = Vec::with_capacity(basis.len());
            for g in &basis {
                let img = map(g);
                if img.shape() != (t, t) {
                    return Err(Error::DimensionMismatch(format!(
                        "map on block `{}` in constraint `{label}` yields {}x{}, expected {t}x{t}",
                        spec.label,
                        img.nrows(),
                        img.ncols()
                    )));
                }
                let asym = max_asymmetry(&img);
                if asym > 1e-10 * (1.0 + img.norm()) {
                    return Err(Error::Precondition(format!(
                        "map on block `{}` in constraint `{label}` is not Hermitian-preserving",
                        spec.label
                    )));
                }
                imgs.push(img);
            }
            images.push((*block, basis, imgs));
        }
        let start = self.constraints.len();
        for f in hermitian_basis(t) {
            let mut terms = Vec::new();
            for (block, basis, imgs) in &images {
                let mut coeff = zeros(basis[0].nrows(), basis[0].ncols());
                let mut nonzero = false;
                for (g, img) in basis.iter().zip(imgs) {
                    let w = re_inner(&f, img);
                    if w != 0.0 {
                        coeff += g * c(w, 0.0);
                        nonzero = true;
                    }
                }
                if nonzero {
                    terms.push(Term {
                        block: *block,
                        coeff,
                    });
                }
            }
            self.constraints.push(ScalarConstraint {
                terms,
                rhs: re_inner(&f, target),
            });
        }
        self.groups.push(ConstraintGroup {
            label: label.into(),
            dim: t,
            start,
            len: t * t,
        });
        Ok(())
    }

    pub fn primal_objective(&self, x: &[ComplexMatrix]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| re_inner(c, x)).sum()
    }

    /// `|Σ Re tr(A_i X) - b_i|` for every scalar constraint.
    pub fn primal_residuals(&self, x: &[ComplexMatrix]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|k| {
                let lhs: f64 = k.terms.iter().map(|t| re_inner(&t.coeff, &x[t.block])).sum();
                (lhs - k.rhs).abs()
            })
            .collect()
    }

    /// `C_b - Σ_i y_i A_ib` per block.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<ComplexMatrix> {
        let mut s = self.objective.clone();
        for (k, yi) in self.constraints.iter().zip(y) {
            for t in &k.terms {
                s[t.block] -= &t.coeff * c(*yi, 0.0);
            }
        }
        s
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Precondition("problem has no variable blocks".into()));
        }
        for k in &self.constraints {
            for t in &k.terms {
                let spec = self.block(t.block)?;
                if t.coeff.shape() != (spec.dim, spec.dim) {
                    return Err(Error::DimensionMismatch(format!(
                        "constraint coefficient on block `{}` has shape {:?}",
                        spec.label,
                        t.coeff.shape()
                    )));
                }
            }
            if !k.rhs.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }
}

fn embed(m: &ComplexMatrix, kind: BlockKind, scale: f64) -> DMatrix<f64> {
    let d = m.nrows();
    match kind {
        BlockKind::RealSymmetric => DMatrix::from_fn(d, d, |i, j| m[(i, j)].re * scale),
        BlockKind::Hermitian => DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            let z = m[(i % d, j % d)];
            let v = match (i < d, j < d) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            };
            v * scale
        }),
    }
}

fn extract(m: &DMatrix<f64>, kind: BlockKind) -> ComplexMatrix {
    match kind {
        BlockKind::RealSymmetric => m.map(|v| c(v, 0.0)),
        BlockKind::Hermitian => {
            let d = m.nrows() / 2;
            ComplexMatrix::from_fn(d, d, |i, j| {
                let re = 0.5 * (m[(i, j)] + m[(i + d, j + d)]);
                let im = 0.5 * (m[(i + d, j)] - m[(i, j + d)]);
                c(re, im)
            })
        }
    }
}

fn embed_scale(kind: BlockKind) -> f64 {
    match kind {
        BlockKind::Hermitian => 0.5,
        BlockKind::RealSymmetric => 1.0,
    }
}

/// Drops linearly dependent constraints; fails when the dropped rows contradict the kept ones.
fn presolve(a: &[Vec<(usize, DMatrix<f64>)>], b: &DVector<f64>) -> std::result::Result<Vec<usize>, ()> {
    let m = a.len();
    let sparse: Vec<Vec<ipm::SparseTerm>> = a.iter().map(|t| ipm::sparse_terms(t)).collect();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        for (kj, aj) in &a[j] {
            for i in j..m {
                for (ki, ei) in &sparse[i] {
                    if ki == kj {
                        gram[(i, j)] += ei.iter().map(|&(r, c, v)| v * aj[(r, c)]).sum::<f64>();
                    }
                }
            }
        }
        for i in j + 1..m {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let scale = gram.diagonal().max().max(1e-300);

    // pivoted Cholesky
    let mut diag: Vec<f64> = (0..m).map(|i| gram[(i, i)]).collect();
    let mut factor: Vec<Vec<f64>> = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut used = vec![false; m];
    loop {
        let pick = (0..m)
            .filter(|&i| !used[i])
            .max_by(|&i, &j| diag[i].total_cmp(&diag[j]));
        let Some(p) = pick else { break };
        if diag[p] <= 1e-12 * scale {
            break;
        }
        let piv = diag[p].sqrt();
        let col: Vec<f64> = (0..m)
            .map(|i| {
                let s: f64 = factor.iter().map(|f| f[i] * f[p]).sum();
                (gram[(i, p)] - s) / piv
            })
            .collect();
        for i in 0..m {
            diag[i] -= col[i] * col[i];
        }
        used[p] = true;
        kept.push(p);
        factor.push(col);
    }
    kept.sort_unstable();
    if kept.len() < m {
        let gk = DMatrix::from_fn(kept.len(), kept.len(), |i, j| gram[(kept[i], kept[j])]);
        let lu = gk.lu();
        let bk = DVector::from_iterator(kept.len(), kept.iter().map(|&i| b[i]));
        let bscale = 1.0 + b.amax();
        for i in (0..m).filter(|i| !kept.contains(i)) {
            let gi = DVector::from_iterator(kept.len(), kept.iter().map(|&j| gram[(j, i)]));
            let coef = lu.solve(&gi).unwrap_or_else(|| DVector::zeros(kept.len()));
            if (b[i] - coef.dot(&bk)).abs() > 1e-8 * bscale {
                return Err(());
            }
        }
    }
    Ok(kept)
}

/// Solves the problem with the interior-point method.
pub fn solve_sdp(p: &SdpProblem) -> Result<SdpSolution> {
    p.validate()?;
    let kinds: Vec<BlockKind> = p.blocks.iter().map(|b| b.kind).collect();
    let dims: Vec<usize> = p
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Hermitian => 2 * b.dim,
            BlockKind::RealSymmetric => b.dim,
        })
        .collect();
    let c_real: Vec<DMatrix<f64>> = p
        .objective
        .iter()
        .zip(&kinds)
        .map(|(m, &k)| embed(m, k, embed_scale(k)))
        .collect();
    let a_real: Vec<Vec<(usize, DMatrix<f64>)>> = p
        .constraints
        .iter()
        .map(|k| {
            k.terms
                .iter()
                .map(|t| (t.block, embed(&t.coeff, kinds[t.block], embed_scale(kinds[t.block]))))
                .collect()
        })
        .collect();
    let b_all = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|k| k.rhs));

    let infeasible = |p: &SdpProblem| SdpSolution {
        status: SdpStatus::Infeasible,
        primal: vec![],
        dual_slack: vec![],
        dual: vec![],
        y: vec![],
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        residuals: vec![f64::NAN; p.constraints.len()],
        dual_residual: f64::NAN,
        iterations: 0,
        log: vec![],
    };

    let Ok(kept) = presolve(&a_real, &b_all) else {
        return Ok(infeasible(p));
    };
    let real = ipm::RealSdp {
        dims,
        c: c_real,
        a: kept.iter().map(|&i| a_real[i].clone()).collect(),
        b: DVector::from_iterator(kept.len(), kept.iter().map(|&i| b_all[i])),
    };
    let sol = ipm::solve(&real, ipm::IpmSettings::default());

    match sol.status {
        ipm::RealStatus::PrimalInfeasible => {
            let mut out = infeasible(p);
            out.iterations = sol.log.len();
            out.log = sol.log;
            return Ok(out);
        }
        ipm::RealStatus::DualInfeasible => {
            let mut out = infeasible(p);
            out.status = SdpStatus::Unbounded;
            out.iterations = sol.log.len();
            out.log = sol.log;
            return Ok(out);
        }
        _ => {}
    }

    let primal: Vec<ComplexMatrix> = sol
        .x
        .iter()
        .zip(&kinds)
        .map(|(m, &k)| extract(m, k))
        .collect();
    let mut y = vec![0.0; p.constraints.len()];
    for (pos, &i) in kept.iter().enumerate() {
        y[i] = sol.y[pos];
    }
    let dual_slack = p.dual_slack(&y);
    let dual_slack_iter: Vec<ComplexMatrix> = sol
        .s
        .iter()
        .zip(&kinds)
        .map(|(m, &k)| extract(m, k) * c(1.0 / embed_scale(k), 0.0))
        .collect();
    let dual_residual = dual_slack
        .iter()
        .zip(&dual_slack_iter)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        .sqrt();
    let dual: Vec<ComplexMatrix> = p
        .groups
        .iter()
        .map(|g| {
            let mut m = zeros(g.dim, g.dim);
            for (f, yi) in hermitian_basis(g.dim).iter().zip(&y[g.start..g.start + g.len]) {
                m += f * c(*yi, 0.0);
            }
            m
        })
        .collect();
    let primal_objective = p.primal_objective(&primal);
    let dual_objective: f64 = p.constraints.iter().zip(&y).map(|(k, yi)| k.rhs * yi).sum();
    let residuals = p.primal_residuals(&primal);
    let gap = (primal_objective - dual_objective).abs();

    let bnorm = b_all.norm();
    let cnorm = p.objective.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    let pinf = residuals.iter().map(|r| r * r).sum::<f64>().sqrt() / (1.0 + bnorm);
    let dinf = dual_residual / (1.0 + cnorm);
    let ok = gap <= 1e-7 * (1.0 + primal_objective.abs()) && pinf <= 1e-7 && dinf <= 1e-7;
    Ok(SdpSolution {
        status: if ok {
            SdpStatus::Optimal
        } else {
            SdpStatus::NumericalFailure
        },
        primal,
        dual_slack: dual_slack_iter,
        dual,
        y,
        primal_objective,
        dual_objective,
        gap,
        residuals,
        dual_residual,
        iterations: sol.log.len(),
        log: sol.log,
    })
}
