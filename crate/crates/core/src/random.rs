//! Random states, unitaries, channels and spectra for tests and demos.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::channel::ChoiMap;
use crate::majorize::Spectrum;
use crate::qmat::{c, eig_hermitian, ComplexMatrix, ComplexVector, DensityOperator, PureStateVector};

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// `G G† / tr(G G†)` for a `d × rank` Ginibre matrix `G`; rank `rank` almost surely.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> DensityOperator {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::from_computed(&(m / c(tr, 0.0)), vec![d]).expect("Ginibre product is a state")
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> PureStateVector {
    let d = dims.iter().product();
    let v = ComplexVector::from_fn(d, |_, _| c(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    PureStateVector::normalized(v, dims.to_vec()).expect("nonzero with probability one")
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix,
/// with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let qr = ginibre(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// First `cols` columns of a Haar unitary on `rows` dimensions.
pub fn random_isometry<R: Rng + ?Sized>(rng: &mut R, cols: usize, rows: usize) -> ComplexMatrix {
    assert!(cols <= rows, "an isometry cannot decrease dimension");
    haar_unitary(rng, rows).columns(0, cols).into_owned()
}

fn kraus_from_isometry(v: &ComplexMatrix, dim_out: usize, k: usize) -> Vec<ComplexMatrix> {
    (0..k).map(|j| v.rows(j * dim_out, dim_out).into_owned()).collect()
}

/// Channel `X ↦ tr_E[V X V†]` for a random isometry `V: ℂ^{d_in} → ℂ^{d_out} ⊗ ℂ^k`.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize, kraus_rank: usize) -> ChoiMap {
    let k = kraus_rank.max(1).max(dim_in.div_ceil(dim_out));
    let v = random_isometry(rng, dim_in, dim_out * k);
    ChoiMap::from_kraus(&kraus_from_isometry(&v, dim_out, k)).expect("valid Kraus list")
}

/// Completely positive map with `E(I) ≤ I` and `E†(I) ≤ I`, generically strictly below.
pub fn random_subunital_map<R: Rng + ?Sized>(rng: &mut R, dim_in: usize, dim_out: usize, kraus_rank: usize) -> ChoiMap {
    let k = kraus_rank.max(1);
    let g = ginibre(rng, dim_out * k, dim_in);
    let mut kraus = kraus_from_isometry(&g, dim_out, k);
    let e_id: ComplexMatrix = kraus.iter().map(|m| m * m.adjoint()).sum();
    let adj_id: ComplexMatrix = kraus.iter().map(|m| m.adjoint() * m).sum();
    let top = eig_hermitian(&e_id)
        .expect("Hermitian")
        .max()
        .max(eig_hermitian(&adj_id).expect("Hermitian").max());
    let shrink = rng.random_range(0.5..1.0) / top.sqrt();
    for m in &mut kraus {
        *m *= c(shrink, 0.0);
    }
    ChoiMap::from_kraus(&kraus).expect("valid Kraus list")
}

/// Uniform point on the probability simplex with `d` atoms.
pub fn random_spectrum<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Spectrum {
    let v: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = v.iter().sum();
    Spectrum::new(v.into_iter().map(|x| x / total).collect()).expect("nonnegative weights")
}

/// As [`random_spectrum`], with `zeros` of the atoms set to zero.
pub fn random_spectrum_with_zeros<R: Rng + ?Sized>(rng: &mut R, d: usize, zeros: usize) -> Spectrum {
    let keep = d.saturating_sub(zeros).max(1);
    random_spectrum(rng, keep).padded(d)
}
