//! Dense complex linear algebra and quantum-state primitives.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Multipartite operators use the
//! usual Kronecker convention: for subsystem dimensions `[d0, d1, ..]` the
//! first subsystem carries the most significant index digit.
//!
//! Eigenvalues are always reported in descending order; ties keep the order
//! produced by the underlying solver (ascending original index).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::majorize::Spectrum;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default relative threshold below which an eigenvalue is treated as zero.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let mut m = zeros(values.len(), values.len());
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c(*v, 0.0);
    }
    m
}

/// Computational basis vector `|index⟩` of dimension `d`.
pub fn ket(d: usize, index: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[index] = c(1.0, 0.0);
    v
}

pub fn projector_onto(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Largest entrywise deviation `|m_ij - conj(m_ji)|`.
pub fn max_asymmetry(m: &ComplexMatrix) -> f64 {
    let n = m.nrows().min(m.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Hilbert-Schmidt inner product `tr(a† b)`.
pub fn inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product with `a`'s indices major.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Block-diagonal matrix `a ⊕ b`.
pub fn direct_sum(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(a)?;
    check_square(b)?;
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    Ok(out)
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != total || dims.iter().any(|&d| d == 0) {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} do not multiply to {total}"
        )));
    }
    Ok(())
}

/// Row-major strides for a multi-index over `dims`.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// For every full index, the index within the `keep` subsystems and within
/// the remaining ones.
fn split_indices(dims: &[usize], keep: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let total: usize = dims.iter().product();
    let st = strides(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();
    let mut kmap = vec![0; total];
    let mut tmap = vec![0; total];
    for idx in 0..total {
        let digit = |k: usize| (idx / st[k]) % dims[k];
        let mut ki = 0;
        for &k in keep {
            ki = ki * dims[k] + digit(k);
        }
        let mut ti = 0;
        for &k in &traced {
            ti = ti * dims[k] + digit(k);
        }
        kmap[idx] = ki;
        tmap[idx] = ti;
    }
    (kmap, tmap, dk, dt)
}

fn check_subset(keep: &[usize], count: usize) -> Result<Vec<usize>> {
    let mut k = keep.to_vec();
    k.sort_unstable();
    k.dedup();
    if let Some(&bad) = k.iter().find(|&&i| i >= count) {
        return Err(Error::IndexOutOfRange { index: bad, count });
    }
    Ok(k)
}

/// Reduced matrix on the subsystems listed in `keep` (kept in ascending order).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    check_square(m)?;
    check_dims(m.nrows(), dims)?;
    let keep = check_subset(keep, dims.len())?;
    let (kmap, tmap, dk, _) = split_indices(dims, &keep);
    let n = m.nrows();
    let mut out = zeros(dk, dk);
    for a in 0..n {
        for b in 0..n {
            if tmap[a] == tmap[b] {
                out[(kmap[a], kmap[b])] += m[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: output subsystem `k` is input subsystem `perm[k]`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    dims: &[usize],
    perm: &[usize],
) -> Result<ComplexMatrix> {
    check_square(m)?;
    check_dims(m.nrows(), dims)?;
    let idx = permutation_index_map(dims, perm)?;
    let n = m.nrows();
    let mut out = zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(idx[a], idx[b])] = m[(a, b)];
        }
    }
    Ok(out)
}

/// Maps each input index to its position after permuting subsystems.
fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = perm.to_vec();
    sorted.sort_unstable();
    if sorted != (0..dims.len()).collect::<Vec<_>>() {
        return Err(Error::Precondition(format!(
            "{perm:?} is not a permutation of {} subsystems",
            dims.len()
        )));
    }
    let total: usize = dims.iter().product();
    let st_in = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let st_out = strides(&new_dims);
    Ok((0..total)
        .map(|idx| {
            perm.iter()
                .enumerate()
                .map(|(k, &p)| ((idx / st_in[p]) % dims[p]) * st_out[k])
                .sum()
        })
        .collect())
}

/// Transpose on one tensor factor, in the computational basis.
pub fn partial_transpose(m: &ComplexMatrix, dims: &[usize], sys: usize) -> Result<ComplexMatrix> {
    check_square(m)?;
    check_dims(m.nrows(), dims)?;
    if sys >= dims.len() {
        return Err(Error::IndexOutOfRange {
            index: sys,
            count: dims.len(),
        });
    }
    let st = strides(dims);
    let n = m.nrows();
    let mut out = zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let da = (a / st[sys]) % dims[sys];
            let db = (b / st[sys]) % dims[sys];
            let a2 = a - da * st[sys] + db * st[sys];
            let b2 = b - db * st[sys] + da * st[sys];
            out[(a2, b2)] = m[(a, b)];
        }
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// The eigenvalues as a [`Spectrum`]; fails on eigenvalues below `-1e-12`.
    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.values.clone())
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, i: usize) -> ComplexVector {
        self.vectors.column(i).into_owned()
    }

    /// `U diag(f(s)) U†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = c(f(v), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEigen> {
    check_square(h)?;
    check_finite(h)?;
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = max_asymmetry(h);
    if asym > 1e-10 * scale {
        return Err(Error::NotHermitian(asym));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: zeros(0, 0),
        });
    }
    let (raw_values, raw_vectors) = crate::linalg::eigh_complex(&hermitize(h))?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ascending original index among ties
    order.sort_by(|&a, &b| raw_values[b].total_cmp(&raw_values[a]));
    let values = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &raw_vectors.column(i));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Applies a real function to the eigenvalues of a Hermitian matrix.
pub fn hermitian_fn(h: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(h)?.map(f))
}

/// Orthogonal projector.
#[derive(Debug, Clone)]
pub struct ProjectorOp {
    matrix: ComplexMatrix,
    rank: usize,
}

impl ProjectorOp {
    /// Validates `P² = P`, Hermiticity and the rank.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_square(&matrix)?;
        let asym = max_asymmetry(&matrix);
        if asym > 1e-9 {
            return Err(Error::NotHermitian(asym));
        }
        let idem = (&matrix * &matrix - &matrix).norm();
        if idem > 1e-9 {
            return Err(Error::Precondition(format!(
                "projector is not idempotent (|P^2 - P| = {idem:.3e})"
            )));
        }
        let rank = trace(&matrix).re.round() as usize;
        Ok(ProjectorOp { matrix, rank })
    }

    /// Projector onto the span of orthonormal columns.
    pub fn from_orthonormal(columns: &[ComplexVector], dim: usize) -> Self {
        let mut matrix = zeros(dim, dim);
        for v in columns {
            matrix += projector_onto(v);
        }
        ProjectorOp {
            matrix,
            rank: columns.len(),
        }
    }

    pub fn full(d: usize) -> Self {
        ProjectorOp {
            matrix: identity(d),
            rank: d,
        }
    }

    pub fn zero(d: usize) -> Self {
        ProjectorOp {
            matrix: zeros(d, d),
            rank: 0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Projector onto the eigenspaces with eigenvalue above `tol * λ_max`.
pub fn support_projector(h: &ComplexMatrix, tol: f64) -> Result<ProjectorOp> {
    let eig = eig_hermitian(h)?;
    let cut = tol * eig.max().max(0.0);
    let cols: Vec<ComplexVector> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > cut && v > 0.0)
        .map(|(i, _)| eig.vector(i))
        .collect();
    Ok(ProjectorOp::from_orthonormal(&cols, h.nrows()))
}

/// Number of eigenvalues above `tol * λ_max`.
pub fn rank(h: &ComplexMatrix, tol: f64) -> Result<usize> {
    Ok(support_projector(h, tol)?.rank())
}

/// Density operator on a multipartite space.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
    subnormalized: bool,
}

impl DensityOperator {
    /// Normalized state; Hermitian within 1e-12, eigenvalues ≥ -1e-10, unit trace within 1e-9.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::build(matrix, dims, false)
    }

    /// State with trace at most one.
    pub fn new_subnormalized(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::build(matrix, dims, true)
    }

    fn build(matrix: ComplexMatrix, dims: Vec<usize>, subnormalized: bool) -> Result<Self> {
        check_square(&matrix)?;
        check_finite(&matrix)?;
        check_dims(matrix.nrows(), &dims)?;
        let asym = max_asymmetry(&matrix);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let matrix = hermitize(&matrix);
        let min = eig_hermitian(&matrix)?.min();
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        let tr = trace(&matrix).re;
        let ok = if subnormalized {
            tr <= 1.0 + TRACE_TOL
        } else {
            (tr - 1.0).abs() <= TRACE_TOL
        };
        if !ok {
            return Err(Error::NotNormalized(tr));
        }
        Ok(DensityOperator {
            matrix,
            dims,
            subnormalized,
        })
    }

    /// Symmetrizes away rounding noise before validating; for states produced
    /// by other numerical routines.
    pub fn from_computed(matrix: &ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        Self::new(hermitize(matrix), dims)
    }

    pub fn from_computed_subnormalized(matrix: &ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let h = hermitize(matrix);
        if (trace(&h).re - 1.0).abs() <= TRACE_TOL {
            Self::new(h, dims)
        } else {
            Self::new_subnormalized(h, dims)
        }
    }

    pub fn pure(psi: &PureStateVector) -> Self {
        DensityOperator {
            matrix: hermitize(&psi.density()),
            dims: psi.dims().to_vec(),
            subnormalized: false,
        }
    }

    /// Diagonal (classical) state.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(diag(probs), vec![probs.len()])
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator {
            matrix: identity(d) * c(1.0 / d as f64, 0.0),
            dims: vec![d],
            subnormalized: false,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    pub fn eig(&self) -> Result<HermitianEigen> {
        eig_hermitian(&self.matrix)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        let eig = self.eig()?;
        Spectrum::new(eig.values.iter().map(|v| v.max(0.0)).collect())
    }

    /// Reduced state on `keep`.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityOperator> {
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        let keep = check_subset(keep, self.dims.len())?;
        let dims = keep.iter().map(|&k| self.dims[k]).collect();
        Ok(DensityOperator {
            matrix: hermitize(&m),
            dims,
            subnormalized: self.subnormalized,
        })
    }

    /// Same operator, with its factors regrouped into new subsystem dimensions.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<DensityOperator> {
        check_dims(self.dim(), &dims)?;
        Ok(DensityOperator {
            matrix: self.matrix.clone(),
            dims,
            subnormalized: self.subnormalized,
        })
    }

    pub fn permute(&self, perm: &[usize]) -> Result<DensityOperator> {
        let m = permute_subsystems(&self.matrix, &self.dims, perm)?;
        Ok(DensityOperator {
            matrix: m,
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
            subnormalized: self.subnormalized,
        })
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator {
            matrix: tensor(&self.matrix, &other.matrix),
            dims: self.dims.iter().chain(other.dims.iter()).copied().collect(),
            subnormalized: self.subnormalized || other.subnormalized,
        }
    }
}

/// Normalized pure state vector on a multipartite space.
#[derive(Debug, Clone)]
pub struct PureStateVector {
    amplitudes: ComplexVector,
    dims: Vec<usize>,
}

impl PureStateVector {
    pub fn new(amplitudes: ComplexVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(amplitudes.len(), &dims)?;
        let n2 = amplitudes.norm_squared();
        if !n2.is_finite() {
            return Err(Error::NonFinite);
        }
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(n2));
        }
        Ok(PureStateVector { amplitudes, dims })
    }

    /// Normalizes the given amplitudes first.
    pub fn normalized(amplitudes: ComplexVector, dims: Vec<usize>) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n * n));
        }
        Self::new(amplitudes.unscale(n), dims)
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn density(&self) -> ComplexMatrix {
        projector_onto(&self.amplitudes)
    }

    /// Matrix `Ψ` with rows indexed by the `keep` subsystems and columns by the rest.
    fn reshape(&self, keep: &[usize]) -> Result<ComplexMatrix> {
        let keep = check_subset(keep, self.dims.len())?;
        let (kmap, tmap, dk, dt) = split_indices(&self.dims, &keep);
        let mut psi = zeros(dk, dt);
        for (idx, a) in self.amplitudes.iter().enumerate() {
            psi[(kmap[idx], tmap[idx])] = *a;
        }
        Ok(psi)
    }

    /// Reduced state on `keep`, computed directly from the amplitudes.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityOperator> {
        let psi = self.reshape(keep)?;
        let keep = check_subset(keep, self.dims.len())?;
        Ok(DensityOperator {
            matrix: hermitize(&(&psi * psi.adjoint())),
            dims: keep.iter().map(|&k| self.dims[k]).collect(),
            subnormalized: false,
        })
    }

    pub fn permute(&self, perm: &[usize]) -> Result<PureStateVector> {
        let idx = permutation_index_map(&self.dims, perm)?;
        let mut out = ComplexVector::zeros(self.amplitudes.len());
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[idx[i]] = *a;
        }
        Ok(PureStateVector {
            amplitudes: out,
            dims: perm.iter().map(|&p| self.dims[p]).collect(),
        })
    }

    pub fn tensor(&self, other: &PureStateVector) -> PureStateVector {
        PureStateVector {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            dims: self.dims.iter().chain(other.dims.iter()).copied().collect(),
        }
    }
}

/// `|ψ⟩ = Σ √p_i |e_i⟩_X |i⟩_R` over the eigenpairs of `rho` with nonzero weight.
///
/// The reference system has dimension equal to the rank of `rho` (at the given
/// relative tolerance), so the result has subsystem dims `[d_X, rank]`.
pub fn canonical_purification(rho: &DensityOperator, tol: f64) -> Result<PureStateVector> {
    if rho.is_subnormalized() {
        return Err(Error::Precondition(
            "cannot purify a subnormalized state".into(),
        ));
    }
    let eig = rho.eig()?;
    let cut = tol * eig.max();
    let kept: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > cut && eig.values[i] > 0.0)
        .collect();
    let d = rho.dim();
    let r = kept.len();
    let mut amps = ComplexVector::zeros(d * r);
    for (ri, &i) in kept.iter().enumerate() {
        let w = eig.values[i].sqrt();
        for x in 0..d {
            amps[x * r + ri] += eig.vectors[(x, i)] * w;
        }
    }
    PureStateVector::normalized(amps, vec![d, r])
}

/// Decomposition of a pure state against a fixed orthonormal basis of one subsystem.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Indices `i` of the basis vectors `|r_i⟩` with `p_i > tol`.
    pub indices: Vec<usize>,
    /// Schmidt coefficients `√p_i`.
    pub coefficients: Vec<f64>,
    /// Normalized `|x_i⟩ = (I ⊗ ⟨r_i|)|ψ⟩ / √p_i` on the remaining subsystems.
    pub left: Vec<ComplexVector>,
}

/// Expands `psi` along the basis `r_basis` (columns) of subsystem `cut`.
///
/// `r_basis` must diagonalize the reduced state on `cut`; the left vectors then
/// come out orthonormal.
pub fn schmidt_relative(
    psi: &PureStateVector,
    cut: usize,
    r_basis: &ComplexMatrix,
    tol: f64,
) -> Result<SchmidtDecomposition> {
    let dims = psi.dims();
    if cut >= dims.len() {
        return Err(Error::IndexOutOfRange {
            index: cut,
            count: dims.len(),
        });
    }
    let dr = dims[cut];
    if r_basis.nrows() != dr || r_basis.ncols() != dr {
        return Err(Error::DimensionMismatch(format!(
            "basis is {}x{}, subsystem has dimension {dr}",
            r_basis.nrows(),
            r_basis.ncols()
        )));
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|&k| k != cut).collect();
    // Ψ: rows = remaining subsystems, columns = cut subsystem
    let m = psi.reshape(&rest)?;
    let contracted = &m * r_basis.map(|z| z.conj());
    // column i of `contracted` = Σ_r conj(r_i[r]) Ψ[:, r]
    let gram = contracted.adjoint() * &contracted;
    let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut off = 0.0f64;
    for i in 0..dr {
        for j in 0..dr {
            if i != j {
                off = off.max(gram[(i, j)].norm());
            }
        }
    }
    if off > 1e-9 * scale.max(1.0) {
        return Err(Error::Precondition(format!(
            "basis does not diagonalize the reduced state (off-diagonal {off:.3e})"
        )));
    }
    let pmax = (0..dr).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
    let mut out = SchmidtDecomposition {
        indices: vec![],
        coefficients: vec![],
        left: vec![],
    };
    for i in 0..dr {
        let p = gram[(i, i)].re;
        if p > tol * pmax && p > 0.0 {
            let s = p.sqrt();
            out.indices.push(i);
            out.coefficients.push(s);
            out.left.push(contracted.column(i).unscale(s));
        }
    }
    Ok(out)
}

fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    hermitian_fn(m, |v| v.max(0.0).sqrt())
}

/// Uhlmann fidelity `‖√ρ √σ‖₁`.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of {}-dim and {}-dim states",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sr = sqrt_psd(rho.matrix())?;
    let inner = hermitize(&(&sr * sigma.matrix() * &sr));
    let eig = eig_hermitian(&inner)?;
    Ok(eig.values.iter().map(|v| v.max(0.0).sqrt()).sum())
}

/// `½ ‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance of {}-dim and {}-dim states",
            rho.dim(),
            sigma.dim()
        )));
    }
    let diff = rho.matrix() - sigma.matrix();
    let eig = eig_hermitian(&hermitize(&diff))?;
    Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Partial isometry `V` with `V†V` and `VV†` equal to the stated projectors.
#[derive(Debug, Clone)]
pub struct PartialIsometryOp {
    matrix: ComplexMatrix,
    source_support: ProjectorOp,
    target_support: ProjectorOp,
}

impl PartialIsometryOp {
    pub fn new(
        matrix: ComplexMatrix,
        source_support: ProjectorOp,
        target_support: ProjectorOp,
    ) -> Result<Self> {
        if matrix.ncols() != source_support.dim() || matrix.nrows() != target_support.dim() {
            return Err(Error::DimensionMismatch(format!(
                "isometry is {}x{}, supports are {} and {}",
                matrix.nrows(),
                matrix.ncols(),
                target_support.dim(),
                source_support.dim()
            )));
        }
        let src = (matrix.adjoint() * &matrix - source_support.matrix()).norm();
        let tgt = (&matrix * matrix.adjoint() - target_support.matrix()).norm();
        if src > 1e-8 || tgt > 1e-8 {
            return Err(Error::Precondition(format!(
                "not a partial isometry between the given supports (V†V err {src:.3e}, VV† err {tgt:.3e})"
            )));
        }
        Ok(PartialIsometryOp {
            matrix,
            source_support,
            target_support,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn source_support(&self) -> &ProjectorOp {
        &self.source_support
    }

    pub fn target_support(&self) -> &ProjectorOp {
        &self.target_support
    }
}
