//! Completely positive maps in Choi form.
//!
//! The Choi matrix is input-major:
//! `C = Σ_{x,y} |x⟩⟨y| ⊗ E(|x⟩⟨y|)`, so `C[(x·d_out + a), (y·d_out + b)] = E(|x⟩⟨y|)_{ab}`.
//! With this convention `E(I) = tr_in C` and `E†(I) = (tr_out C)ᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::serde_cmat;
use crate::majorize::{integer_weight, AncillaSplit};
use crate::qmat::{
    c, eig_hermitian, hermitian_fn, hermitize, identity, partial_trace, permute_subsystems,
    tensor, trace, zeros, ComplexMatrix, DensityOperator, ProjectorOp,
};

const CP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChoiMap {
    #[serde(with = "serde_cmat")]
    choi: ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
}

/// Numerical properties of a map, checked at a given tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFlags {
    pub trace_nonincreasing: bool,
    /// Smallest `α` with `E(I) ≤ α I`, i.e. `λ_max(E(I))`.
    pub subunital_alpha: f64,
    pub unital: bool,
    pub trace_preserving: bool,
}

impl ChannelFlags {
    pub fn subunital(&self, tol: f64) -> bool {
        self.subunital_alpha <= 1.0 + tol
    }
}

impl ChoiMap {
    /// Validates dimensions and positivity of the Choi matrix.
    pub fn new(choi: ComplexMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        Self::with_tolerance(choi, dim_in, dim_out, CP_TOL)
    }

    /// As [`ChoiMap::new`] with an explicit positivity tolerance (relative to `‖C‖`).
    pub fn with_tolerance(choi: ComplexMatrix, dim_in: usize, dim_out: usize, tol: f64) -> Result<Self> {
        if choi.nrows() != dim_in * dim_out || choi.ncols() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {} for a {dim_in} -> {dim_out} map",
                choi.nrows(),
                choi.ncols(),
                dim_in * dim_out
            )));
        }
        crate::qmat::check_finite(&choi)?;
        let scale = choi.norm().max(1.0);
        let asym = crate::qmat::max_asymmetry(&choi);
        if asym > 1e-10 * scale {
            return Err(Error::NotHermitian(asym));
        }
        let choi = hermitize(&choi);
        let min = eig_hermitian(&choi)?.min();
        if min < -tol * scale {
            return Err(Error::NotPsd(min));
        }
        Ok(ChoiMap {
            choi,
            dim_in,
            dim_out,
        })
    }

    /// Wraps any square matrix of the right size, for use as a linear map only.
    pub(crate) fn unchecked(choi: ComplexMatrix, dim_in: usize, dim_out: usize) -> Self {
        debug_assert_eq!(choi.nrows(), dim_in * dim_out);
        ChoiMap {
            choi,
            dim_in,
            dim_out,
        }
    }

    /// Choi matrix of `X ↦ Σ_k K_k X K_k†`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::Precondition("empty Kraus list".into()));
        };
        let (dout, din) = first.shape();
        let mut choi = zeros(din * dout, din * dout);
        for k in kraus {
            if k.shape() != (dout, din) {
                return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
            }
            let v = ComplexMatrix::from_fn(din * dout, 1, |r, _| k[(r % dout, r / dout)]);
            choi += &v * v.adjoint();
        }
        Self::new(choi, din, dout)
    }

    /// Builds the Choi matrix by evaluating a linear map on matrix units.
    pub fn from_linear_map(
        dim_in: usize,
        dim_out: usize,
        f: impl Fn(&ComplexMatrix) -> ComplexMatrix,
    ) -> Result<Self> {
        let mut choi = zeros(dim_in * dim_out, dim_in * dim_out);
        for x in 0..dim_in {
            for y in 0..dim_in {
                let mut unit = zeros(dim_in, dim_in);
                unit[(x, y)] = c(1.0, 0.0);
                let out = f(&unit);
                if out.shape() != (dim_out, dim_out) {
                    return Err(Error::DimensionMismatch(format!(
                        "map output is {}x{}, expected {dim_out}x{dim_out}",
                        out.nrows(),
                        out.ncols()
                    )));
                }
                choi.view_mut((x * dim_out, y * dim_out), (dim_out, dim_out))
                    .copy_from(&out);
            }
        }
        Self::new(choi, dim_in, dim_out)
    }

    pub fn identity(d: usize) -> Self {
        let mut v = ComplexMatrix::zeros(d * d, 1);
        for i in 0..d {
            v[(i * d + i, 0)] = c(1.0, 0.0);
        }
        ChoiMap {
            choi: &v * v.adjoint(),
            dim_in: d,
            dim_out: d,
        }
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    /// `X ↦ tr(X) τ`.
    pub fn replacement(dim_in: usize, tau: &DensityOperator) -> Self {
        ChoiMap {
            choi: tensor(&identity(dim_in), tau.matrix()),
            dim_in,
            dim_out: tau.dim(),
        }
    }

    /// Reset to `|0⟩⟨0|`.
    pub fn erasure(d: usize) -> Self {
        let mut zero = zeros(d, d);
        zero[(0, 0)] = c(1.0, 0.0);
        ChoiMap {
            choi: tensor(&identity(d), &zero),
            dim_in: d,
            dim_out: d,
        }
    }

    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        ChoiMap {
            choi: zeros(dim_in * dim_out, dim_in * dim_out),
            dim_in,
            dim_out,
        }
    }

    /// Diagonal map `|k⟩⟨k| ↦ Σ_i T_ik |i⟩⟨i|`, killing coherences.
    pub fn classical(t: &nalgebra::DMatrix<f64>) -> Result<Self> {
        let (dout, din) = t.shape();
        if t.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::Precondition("classical action must be nonnegative".into()));
        }
        let mut choi = zeros(din * dout, din * dout);
        for k in 0..din {
            for i in 0..dout {
                choi[(k * dout + i, k * dout + i)] = c(t[(i, k)], 0.0);
            }
        }
        Ok(ChoiMap {
            choi,
            dim_in: din,
            dim_out: dout,
        })
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// `E(|x⟩⟨y|)`.
    pub fn block(&self, x: usize, y: usize) -> ComplexMatrix {
        let d = self.dim_out;
        self.choi.view((x * d, y * d), (d, d)).into_owned()
    }

    /// `E(M) = Σ_{x,y} M_xy E(|x⟩⟨y|)` for any operator `M` on the input.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "map acts on dimension {}, got a {}x{} operator",
                self.dim_in,
                m.nrows(),
                m.ncols()
            )));
        }
        let d = self.dim_out;
        let mut out = zeros(d, d);
        for x in 0..self.dim_in {
            for y in 0..self.dim_in {
                let w = m[(x, y)];
                if w != c(0.0, 0.0) {
                    out += self.choi.view((x * d, y * d), (d, d)) * w;
                }
            }
        }
        Ok(out)
    }

    /// Output state; flagged subnormalized when the trace dropped.
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(rho.matrix())?;
        DensityOperator::from_computed_subnormalized(&out, vec![self.dim_out])
    }

    /// `(E ⊗ id)(M)` with `E` acting on subsystem `acting` of an operator with factors `dims`.
    pub fn apply_on_subsystem_matrix(
        &self,
        m: &ComplexMatrix,
        dims: &[usize],
        acting: usize,
    ) -> Result<(ComplexMatrix, Vec<usize>)> {
        if acting >= dims.len() {
            return Err(Error::IndexOutOfRange {
                index: acting,
                count: dims.len(),
            });
        }
        if dims[acting] != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "subsystem {acting} has dimension {}, map expects {}",
                dims[acting], self.dim_in
            )));
        }
        // bring the acted-on factor to the front
        let mut perm: Vec<usize> = vec![acting];
        perm.extend((0..dims.len()).filter(|&k| k != acting));
        let front = permute_subsystems(m, dims, &perm)?;
        let rest: usize = dims.iter().product::<usize>() / self.dim_in;
        let dout = self.dim_out;
        let mut out = zeros(dout * rest, dout * rest);
        for x in 0..self.dim_in {
            for y in 0..self.dim_in {
                let mxy = front.view((x * rest, y * rest), (rest, rest)).into_owned();
                if mxy.iter().all(|z| *z == c(0.0, 0.0)) {
                    continue;
                }
                out += tensor(&self.block(x, y), &mxy);
            }
        }
        let mut front_dims: Vec<usize> = vec![dout];
        front_dims.extend(perm[1..].iter().map(|&k| dims[k]));
        // inverse permutation back to the original order
        let mut inv = vec![0; dims.len()];
        for (pos, &k) in perm.iter().enumerate() {
            inv[k] = pos;
        }
        let back = permute_subsystems(&out, &front_dims, &inv)?;
        let mut new_dims = dims.to_vec();
        new_dims[acting] = dout;
        Ok((back, new_dims))
    }

    pub fn apply_on_subsystem(&self, rho: &DensityOperator, acting: usize) -> Result<DensityOperator> {
        let (m, dims) = self.apply_on_subsystem_matrix(rho.matrix(), rho.dims(), acting)?;
        DensityOperator::from_computed_subnormalized(&m, dims)
    }

    /// Choi matrix of the Hilbert-Schmidt adjoint `E†`.
    pub fn adjoint(&self) -> ChoiMap {
        let (din, dout) = (self.dim_in, self.dim_out);
        let n = din * dout;
        let mut choi = zeros(n, n);
        // C_adj[(a, x), (b, y)] = C[(y, b), (x, a)]
        for a in 0..dout {
            for x in 0..din {
                for b in 0..dout {
                    for y in 0..din {
                        choi[(a * din + x, b * din + y)] = self.choi[(y * dout + b, x * dout + a)];
                    }
                }
            }
        }
        ChoiMap {
            choi,
            dim_in: dout,
            dim_out: din,
        }
    }

    /// `E(I)`.
    pub fn image_of_identity(&self) -> ComplexMatrix {
        partial_trace(&self.choi, &[self.dim_in, self.dim_out], &[1]).expect("consistent dims")
    }

    /// `E†(I)`.
    pub fn adjoint_image_of_identity(&self) -> ComplexMatrix {
        partial_trace(&self.choi, &[self.dim_in, self.dim_out], &[0])
            .expect("consistent dims")
            .transpose()
    }

    /// Smallest `α` with `E(I) ≤ α I`.
    pub fn subunital_alpha(&self) -> Result<f64> {
        Ok(eig_hermitian(&hermitize(&self.image_of_identity()))?.max())
    }

    pub fn verify_flags(&self, tol: f64) -> Result<ChannelFlags> {
        let e_id = hermitize(&self.image_of_identity());
        let adj_id = hermitize(&self.adjoint_image_of_identity());
        let alpha = eig_hermitian(&e_id)?.max();
        let adj_max = eig_hermitian(&adj_id)?.max();
        let unital = self.dim_in == self.dim_out && (&e_id - identity(self.dim_out)).camax() <= tol;
        let trace_preserving = (&adj_id - identity(self.dim_in)).camax() <= tol;
        Ok(ChannelFlags {
            trace_nonincreasing: adj_max <= 1.0 + tol,
            subunital_alpha: alpha,
            unital,
            trace_preserving,
        })
    }

    /// Whether `Π E†(I) Π = Π` for the projector `pi` on the input.
    pub fn is_trace_preserving_on(&self, pi: &ProjectorOp, tol: f64) -> bool {
        let adj = self.adjoint_image_of_identity();
        let p = pi.matrix();
        (p * adj * p - p).camax() <= tol
    }

    /// Choi matrix of `second ∘ first`.
    pub fn compose(second: &ChoiMap, first: &ChoiMap) -> Result<ChoiMap> {
        if first.dim_out != second.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "cannot feed a {}-dim output into a {}-dim input",
                first.dim_out, second.dim_in
            )));
        }
        let (m, _) = second.apply_on_subsystem_matrix(&first.choi, &[first.dim_in, first.dim_out], 1)?;
        ChoiMap::new(hermitize(&m), first.dim_in, second.dim_out)
    }

    /// Kraus operators from the eigen-decomposition of the Choi matrix.
    pub fn kraus(&self, tol: f64) -> Result<Vec<ComplexMatrix>> {
        let eig = eig_hermitian(&self.choi)?;
        let cut = tol * eig.max().max(0.0);
        let (din, dout) = (self.dim_in, self.dim_out);
        Ok(eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > cut && v > 0.0)
            .map(|(i, &v)| {
                let vec = eig.vector(i);
                ComplexMatrix::from_fn(dout, din, |y, x| vec[x * dout + y] * v.sqrt())
            })
            .collect())
    }

    /// `M ↦ Π_out E(Π_in M Π_in) Π_out`.
    pub fn restrict(&self, pi_in: &ProjectorOp, pi_out: &ProjectorOp) -> Result<ChoiMap> {
        if pi_in.dim() != self.dim_in || pi_out.dim() != self.dim_out {
            return Err(Error::DimensionMismatch("projectors do not match the map".into()));
        }
        let (pi, po) = (pi_in.matrix(), pi_out.matrix());
        let inner = |m: &ComplexMatrix| {
            let out = self.apply_matrix(&(pi * m * pi)).expect("dims checked");
            po * out * po
        };
        ChoiMap::from_linear_map(self.dim_in, self.dim_out, inner)
    }

    /// Unital trace-preserving map on `X ⊕ Y` whose `X → Y` corner is `self`.
    ///
    /// With `G = I - E(I)` and `H = I - E†(I)`:
    /// `E(M)_YY = E'(M_XX) + √G M_YY √G` and `E(M)_XX = E'†(M_YY) + √H M_XX √H`.
    pub fn dilate_to_unital(&self) -> Result<ChoiMap> {
        let (dx, dy) = (self.dim_in, self.dim_out);
        let g = identity(dy) - hermitize(&self.image_of_identity());
        let h = identity(dx) - hermitize(&self.adjoint_image_of_identity());
        for (name, m) in [("I - E(I)", &g), ("I - E†(I)", &h)] {
            let min = eig_hermitian(m)?.min();
            if min < -1e-9 {
                return Err(Error::Precondition(format!(
                    "{name} has eigenvalue {min:.3e}; map is not subunital and trace-nonincreasing"
                )));
            }
        }
        let sg = hermitian_fn(&g, |v| v.max(0.0).sqrt())?;
        let sh = hermitian_fn(&h, |v| v.max(0.0).sqrt())?;
        let adj = self.adjoint();
        let d = dx + dy;
        ChoiMap::from_linear_map(d, d, |m| {
            let mxx = m.view((0, 0), (dx, dx)).into_owned();
            let myy = m.view((dx, dx), (dy, dy)).into_owned();
            let mut out = zeros(d, d);
            let yy = self.apply_matrix(&mxx).expect("dims") + &sg * &myy * &sg;
            let xx = adj.apply_matrix(&myy).expect("dims") + &sh * &mxx * &sh;
            out.view_mut((0, 0), (dx, dx)).copy_from(&xx);
            out.view_mut((dx, dx), (dy, dy)).copy_from(&yy);
            out
        })
    }

    /// `M ↦ Π_Y E(Π_X M Π_X) Π_Y` read off a map on `X ⊕ Y`, as a map `X → Y`.
    pub fn corner(&self, dx: usize) -> Result<ChoiMap> {
        if dx >= self.dim_in || self.dim_in != self.dim_out {
            return Err(Error::DimensionMismatch("corner needs a map on X ⊕ Y".into()));
        }
        let d = self.dim_in;
        let dy = d - dx;
        ChoiMap::from_linear_map(dx, dy, |m| {
            let mut big = zeros(d, d);
            big.view_mut((0, 0), (dx, dx)).copy_from(m);
            let out = self.apply_matrix(&big).expect("dims");
            out.view((dx, dx), (dy, dy)).into_owned()
        })
    }

    /// `E_{AX→BY}(M) = 2^{-λ2} I_B ⊗ T(tr_A M)`.
    pub fn embed_tmap(&self, split: AncillaSplit) -> Result<ChoiMap> {
        let (da, db) = split.dims()?;
        let flags = self.verify_flags(1e-9)?;
        let bound = (-split.lambda()).exp2();
        if !flags.trace_nonincreasing || flags.subunital_alpha > bound + 1e-9 {
            return Err(Error::Precondition(format!(
                "map must be trace-nonincreasing and {bound}-subunital (found α = {})",
                flags.subunital_alpha
            )));
        }
        let (dx, dy) = (self.dim_in, self.dim_out);
        let w = c(1.0 / db as f64, 0.0);
        ChoiMap::from_linear_map(da * dx, db * dy, |m| {
            let reduced = partial_trace(m, &[da, dx], &[1]).expect("dims");
            tensor(&identity(db), &self.apply_matrix(&reduced).expect("dims")) * w
        })
    }

    /// `T(σ) = tr_B[E(2^{-λ1} I_A ⊗ σ)]` for a map on `A ⊗ X → B ⊗ Y`.
    pub fn extract_tmap(&self, split: AncillaSplit) -> Result<ChoiMap> {
        let da = integer_weight(split.lambda1)?;
        let db = integer_weight(split.lambda2)?;
        if self.dim_in % da != 0 || self.dim_out % db != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} -> {} map does not factor over ancillas {da} and {db}",
                self.dim_in, self.dim_out
            )));
        }
        let (dx, dy) = (self.dim_in / da, self.dim_out / db);
        let w = c(1.0 / da as f64, 0.0);
        ChoiMap::from_linear_map(dx, dy, |s| {
            let input = tensor(&identity(da), s) * w;
            let out = self.apply_matrix(&input).expect("dims");
            partial_trace(&out, &[db, dy], &[1]).expect("dims")
        })
    }

    /// `tr(C)`; equals `d_in` for trace-preserving maps.
    pub fn choi_trace(&self) -> f64 {
        trace(&self.choi).re
    }
}
