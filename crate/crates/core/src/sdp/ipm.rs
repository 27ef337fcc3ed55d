//! Primal-dual interior-point method for real symmetric block SDPs.
//!
//! ```text
//! primal:  min ⟨C, X⟩  s.t.  ⟨A_i, X⟩ = b_i,  X ⪰ 0
//! dual:    max b·y     s.t.  Σ y_i A_i + S = C,  S ⪰ 0
//! ```
//!
//! Infeasible-start Mehrotra predictor-corrector with Nesterov-Todd scaling.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::IterationLog;

pub(crate) type Blocks = Vec<DMatrix<f64>>;

/// Nonzero entries `(row, col, value)` of one constraint term.
pub(crate) type SparseTerm = (usize, Vec<(usize, usize, f64)>);

pub(crate) fn sparse_terms(terms: &[(usize, DMatrix<f64>)]) -> Vec<SparseTerm> {
    terms
        .iter()
        .map(|(k, m)| {
            let mut entries = Vec::new();
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if m[(i, j)] != 0.0 {
                        entries.push((i, j, m[(i, j)]));
                    }
                }
            }
            (*k, entries)
        })
        .collect()
}

fn sparse_dot(entries: &[(usize, usize, f64)], m: &DMatrix<f64>) -> f64 {
    entries.iter().map(|&(i, j, v)| v * m[(i, j)]).sum()
}

#[derive(Debug, Clone)]
pub(crate) struct RealSdp {
    pub dims: Vec<usize>,
    pub c: Blocks,
    /// Constraint `i` as a list of `(block, coefficient matrix)` terms.
    pub a: Vec<Vec<(usize, DMatrix<f64>)>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RealStatus {
    Converged,
    PrimalInfeasible,
    DualInfeasible,
    Stalled,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct RealSolution {
    pub x: Blocks,
    pub s: Blocks,
    pub y: DVector<f64>,
    pub status: RealStatus,
    pub log: Vec<IterationLog>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    pub infeasibility_tol: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        IpmSettings {
            tol: 1e-10,
            max_iter: 100,
            step_fraction: 0.98,
            infeasibility_tol: 1e-8,
        }
    }
}

fn dot(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &Blocks) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &Blocks, y: &Blocks) -> Blocks {
    x.iter().zip(y).map(|(a, b)| b + a * alpha).collect()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl RealSdp {
    pub fn m(&self) -> usize {
        self.b.len()
    }

    fn n_total(&self) -> usize {
        self.dims.iter().sum()
    }

    fn zeros(&self) -> Blocks {
        self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect()
    }

    fn identity(&self, scale: &[f64]) -> Blocks {
        self.dims
            .iter()
            .zip(scale)
            .map(|(&n, &s)| DMatrix::identity(n, n) * s)
            .collect()
    }

    pub fn apply_a(&self, x: &Blocks) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.a
                .iter()
                .map(|terms| terms.iter().map(|(k, ak)| ak.dot(&x[*k])).sum::<f64>()),
        )
    }

    pub fn apply_at(&self, y: &DVector<f64>) -> Blocks {
        let mut out = self.zeros();
        for (i, terms) in self.a.iter().enumerate() {
            for (k, ak) in terms {
                out[*k] += ak * y[i];
            }
        }
        out
    }

    /// Starting point in the style of SDPT3: large multiples of the identity.
    fn initial_point(&self) -> (Blocks, Blocks, DVector<f64>) {
        let mut xi = vec![0.0; self.dims.len()];
        let mut eta = vec![0.0; self.dims.len()];
        for (k, &n) in self.dims.iter().enumerate() {
            let nf = n as f64;
            let mut x_scale = 10.0f64.max(nf.sqrt());
            let mut s_scale = 10.0f64.max(nf.sqrt()).max(self.c[k].norm());
            for (i, terms) in self.a.iter().enumerate() {
                for (kk, ak) in terms {
                    if *kk == k {
                        let an = ak.norm();
                        x_scale = x_scale.max(nf * (1.0 + self.b[i].abs()) / (1.0 + an));
                        s_scale = s_scale.max(an);
                    }
                }
            }
            xi[k] = x_scale;
            eta[k] = s_scale;
        }
        (self.identity(&xi), self.identity(&eta), DVector::zeros(self.m()))
    }
}

/// Per-block Nesterov-Todd scaling data.
struct Scaling {
    /// Inverse Cholesky factors of `X` and `S`.
    l_inv: DMatrix<f64>,
    ls_inv: DMatrix<f64>,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    v: DVector<f64>,
}

fn lower_inverse(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .unwrap_or_else(|| DMatrix::identity(n, n))
}

fn scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let l = Cholesky::new(symmetrize(x))?.l();
    let ls = Cholesky::new(symmetrize(s))?.l();
    let l_inv = lower_inverse(&l);
    let ls_inv = lower_inverse(&ls);
    let inner = symmetrize(&(l.transpose() * s * &l));
    let (values, vectors) = crate::linalg::eigh_real(&inner)?;
    if values.iter().any(|&e| e <= 0.0) {
        return None;
    }
    let v = values.map(f64::sqrt);
    let d_inv_sqrt = v.map(|e| 1.0 / e.sqrt());
    let d_sqrt = v.map(f64::sqrt);
    let g = &l * &vectors * DMatrix::from_diagonal(&d_inv_sqrt);
    let g_inv = DMatrix::from_diagonal(&d_sqrt) * vectors.transpose() * &l_inv;
    let w = &g * g.transpose();
    Some(Scaling {
        l_inv,
        ls_inv,
        g,
        g_inv,
        w,
        v,
    })
}

/// Largest `t` with `P + t D ⪰ 0`, given `P⁻¹ = L⁻ᵀ L⁻¹`.
fn max_step(l_inv: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let m = symmetrize(&(l_inv * d * l_inv.transpose()));
    let Some((values, _)) = crate::linalg::eigh_real(&m) else {
        return 0.0;
    };
    let min = values.min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = m.diagonal().max().max(1e-300);
    for reg in [0.0, 1e-14, 1e-12, 1e-10] {
        let shifted = m + DMatrix::identity(m.nrows(), m.nrows()) * (reg * scale);
        if let Some(ch) = Cholesky::new(shifted) {
            let sol = ch.solve(rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol);
            }
        }
    }
    m.clone().lu().solve(rhs)
}

struct Residuals {
    rp: DVector<f64>,
    rd: Blocks,
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    relgap: f64,
}

fn residuals(p: &RealSdp, x: &Blocks, s: &Blocks, y: &DVector<f64>, bnorm: f64, cnorm: f64) -> Residuals {
    let rp = &p.b - p.apply_a(x);
    let aty = p.apply_at(y);
    let rd: Blocks = p
        .c
        .iter()
        .zip(&aty)
        .zip(s)
        .map(|((c, a), s)| c - a - s)
        .collect();
    let pobj = dot(&p.c, x);
    let dobj = p.b.dot(y);
    Residuals {
        pinf: rp.norm() / (1.0 + bnorm),
        dinf: norm(&rd) / (1.0 + cnorm),
        relgap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        rp,
        rd,
        pobj,
        dobj,
    }
}

pub(crate) fn solve(p: &RealSdp, settings: IpmSettings) -> RealSolution {
    let n_total = p.n_total() as f64;
    let bnorm = p.b.norm();
    let cnorm = norm(&p.c);
    let (mut x, mut s, mut y) = p.initial_point();
    let mut log = Vec::new();
    let mut best: Option<(f64, Blocks, Blocks, DVector<f64>)> = None;
    let mut status = RealStatus::IterationLimit;
    let mut stall = 0;
    let sparse: Vec<Vec<SparseTerm>> = p.a.iter().map(|t| sparse_terms(t)).collect();

    for iter in 0..settings.max_iter {
        let r = residuals(p, &x, &s, &y, bnorm, cnorm);
        let mu = dot(&x, &s) / n_total;
        let merit = r.relgap.max(r.pinf).max(r.dinf);
        match &best {
            Some((bm, ..)) if *bm <= merit * 0.999 => stall += 1,
            _ => {
                stall = 0;
                best = Some((merit, x.clone(), s.clone(), y.clone()));
            }
        }
        if r.pinf <= settings.tol && r.dinf <= settings.tol && r.relgap <= settings.tol {
            status = RealStatus::Converged;
            break;
        }

        // infeasibility certificates from diverging iterates
        let aty_s = axpy(1.0, &p.apply_at(&y), &s);
        if r.dobj > 0.0 && norm(&aty_s) <= settings.infeasibility_tol * r.dobj {
            status = RealStatus::PrimalInfeasible;
            best = None;
            break;
        }
        let neg_cx = -r.pobj;
        if neg_cx > 0.0 && p.apply_a(&x).norm() <= settings.infeasibility_tol * neg_cx {
            status = RealStatus::DualInfeasible;
            best = None;
            break;
        }
        if stall >= 8 {
            status = RealStatus::Stalled;
            break;
        }

        let Some(sc): Option<Vec<Scaling>> = x.iter().zip(&s).map(|(xb, sb)| scaling(xb, sb)).collect()
        else {
            status = RealStatus::Stalled;
            break;
        };

        // Schur complement M_ij = ⟨A_i, W A_j W⟩
        let m = p.m();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            for (kj, ej) in &sparse[j] {
                let w = &sc[*kj].w;
                let n = w.nrows();
                let mut waw = DMatrix::<f64>::zeros(n, n);
                for &(r, c, v) in ej {
                    waw.ger(v, &w.column(r), &w.column(c), 1.0);
                }
                for i in j..m {
                    for (ki, ei) in &sparse[i] {
                        if ki == kj {
                            schur[(i, j)] += sparse_dot(ei, &waw);
                        }
                    }
                }
            }
            for i in j + 1..m {
                schur[(j, i)] = schur[(i, j)];
            }
        }
        let w_rd_w: Blocks = r
            .rd
            .iter()
            .zip(&sc)
            .map(|(rd, sc)| &sc.w * rd * &sc.w)
            .collect();

        let direction = |k_mats: &Blocks| -> Option<(Blocks, Blocks, DVector<f64>)> {
            let h: Blocks = k_mats
                .iter()
                .zip(&sc)
                .map(|(k, sc)| symmetrize(&(&sc.g * k * sc.g.transpose())))
                .collect();
            let rhs = &r.rp - p.apply_a(&h) + p.apply_a(&w_rd_w);
            let dy = solve_spd(&schur, &rhs)?;
            let aty = p.apply_at(&dy);
            let ds: Blocks = r.rd.iter().zip(&aty).map(|(rd, a)| rd - a).collect();
            let dx: Blocks = h
                .iter()
                .zip(&ds)
                .zip(&sc)
                .map(|((h, ds), sc)| symmetrize(&(h - &sc.w * ds * &sc.w)))
                .collect();
            Some((dx, ds, dy))
        };

        let k_rhs = |sigma_mu: f64, second: Option<(&Blocks, &Blocks)>| -> Blocks {
            sc.iter()
                .enumerate()
                .map(|(b, sc)| {
                    let n = sc.v.len();
                    let mut rmat = DMatrix::<f64>::zeros(n, n);
                    for i in 0..n {
                        rmat[(i, i)] = 2.0 * sigma_mu - 2.0 * sc.v[i] * sc.v[i];
                    }
                    if let Some((dx, ds)) = second {
                        let dxh = &sc.g_inv * &dx[b] * sc.g_inv.transpose();
                        let dsh = sc.g.transpose() * &ds[b] * &sc.g;
                        rmat -= &dxh * &dsh + &dsh * &dxh;
                    }
                    DMatrix::from_fn(n, n, |i, j| rmat[(i, j)] / (sc.v[i] + sc.v[j]))
                })
                .collect()
        };

        let step_lengths = |dx: &Blocks, ds: &Blocks| -> (f64, f64) {
            let ap = sc
                .iter()
                .zip(dx)
                .map(|(sc, d)| max_step(&sc.l_inv, d))
                .fold(f64::INFINITY, f64::min);
            let ad = sc
                .iter()
                .zip(ds)
                .map(|(sc, d)| max_step(&sc.ls_inv, d))
                .fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let Some((dx_a, ds_a, _)) = direction(&k_rhs(0.0, None)) else {
            status = RealStatus::Stalled;
            break;
        };
        let (ap, ad) = step_lengths(&dx_a, &ds_a);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = dot(&axpy(ap, &dx_a, &x), &axpy(ad, &ds_a, &s)) / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let Some((dx, ds, dy)) = direction(&k_rhs(sigma * mu, Some((&dx_a, &ds_a)))) else {
            status = RealStatus::Stalled;
            break;
        };
        let (ap, ad) = step_lengths(&dx, &ds);
        let ap = (settings.step_fraction * ap).min(1.0);
        let ad = (settings.step_fraction * ad).min(1.0);

        log.push(IterationLog {
            iteration: iter,
            primal_objective: r.pobj,
            dual_objective: r.dobj,
            primal_infeasibility: r.pinf,
            dual_infeasibility: r.dinf,
            mu,
            step_primal: ap,
            step_dual: ad,
        });

        if ap < 1e-12 && ad < 1e-12 {
            status = RealStatus::Stalled;
            break;
        }
        x = axpy(ap, &dx, &x);
        s = axpy(ad, &ds, &s);
        y += dy * ad;
    }

    if status != RealStatus::Converged {
        if let Some((_, bx, bs, by)) = best {
            x = bx;
            s = bs;
            y = by;
        }
    }
    RealSolution {
        x,
        s,
        y,
        status,
        log,
    }
}
