//! Optimal work cost of a process, its optimal realization and dual witness.
//!
//! A process `E_{X→X'}` acting on `σ_X` is analysed through a purification
//! `|σ⟩_XR` and a Stinespring environment `E`, giving a pure `ρ_X'RE`. The
//! minimal work is `H₀(E|X')_ρ` bits of `kT ln 2`; equivalently the process is
//! reachable with `λ` work bits extracted iff `λ ≤ -H₀(E|X')`.

use serde::{Deserialize, Serialize};

use crate::channel::ChoiMap;
use crate::entropy::{
    h_smooth_classical, h_zero_cond, zero_cond_witness, EntropyValue, SmoothKind, SmoothingParams,
};
use crate::error::{Error, Result};
use crate::majorize::Spectrum;
use crate::qmat::{
    canonical_purification, eig_hermitian, hermitian_fn, schmidt_relative, support_projector, tensor, zeros,
    ComplexMatrix, ComplexVector, DensityOperator, PartialIsometryOp, ProjectorOp, PureStateVector,
    DEFAULT_SUPPORT_TOL,
};
use crate::sdp::{
    encode_landauer_primal, verify_certificate, CertificateReport, DualCertificate, SdpStatus,
};

const TP_TOL: f64 = 1e-8;
const MARGINAL_TOL: f64 = 1e-8;
const SPECIAL_CASE_TOL: f64 = 1e-7;
const CERTIFICATE_TOL: f64 = 1e-7;
/// Largest `d_X` for which the special cases are cross-checked against the full engine.
pub const ENGINE_CHECK_MAX_DIM: usize = 16;

/// A state, a process acting on it, and the derived purified states.
#[derive(Debug, Clone)]
pub struct ProcessInstance {
    sigma_x: DensityOperator,
    process: ChoiMap,
    psi_xr: PureStateVector,
    sigma_xr: DensityOperator,
    rho_xr: DensityOperator,
    psi_xre: PureStateVector,
    r_basis: ComplexMatrix,
}

/// Builds the instance from the canonical purification of `sigma_x`.
pub fn build_instance(sigma_x: &DensityOperator, process: &ChoiMap) -> Result<ProcessInstance> {
    let sigma = sigma_x.with_dims(vec![sigma_x.dim()])?;
    let psi = canonical_purification(&sigma, DEFAULT_SUPPORT_TOL)?;
    build_from_purification(&psi, process)
}

/// Builds the instance from any purification `|σ⟩_XR` with dims `[d_X, d_R]`.
pub fn build_from_purification(psi_xr: &PureStateVector, process: &ChoiMap) -> Result<ProcessInstance> {
    let dims = psi_xr.dims();
    if dims.len() != 2 || dims[0] != process.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "purification dims {dims:?} do not fit a map with input dimension {}",
            process.dim_in()
        )));
    }
    let (dx, dr) = (dims[0], dims[1]);
    let dxp = process.dim_out();
    let sigma_x = psi_xr.reduce(&[0])?;
    let pi_x = support_projector(sigma_x.matrix(), DEFAULT_SUPPORT_TOL)?;
    if !process.is_trace_preserving_on(&pi_x, TP_TOL) {
        return Err(Error::Precondition(
            "process is not trace preserving on the support of σ_X".into(),
        ));
    }
    let kraus = process
        .restrict(&pi_x, &ProjectorOp::full(dxp))?
        .kraus(DEFAULT_SUPPORT_TOL)?;
    let de = kraus.len();
    let amps = psi_xr.amplitudes();
    let mut out = ComplexVector::zeros(dxp * dr * de);
    for (e, k) in kraus.iter().enumerate() {
        for xp in 0..dxp {
            for r in 0..dr {
                let mut s = crate::qmat::c(0.0, 0.0);
                for x in 0..dx {
                    s += k[(xp, x)] * amps[x * dr + r];
                }
                out[(xp * dr + r) * de + e] = s;
            }
        }
    }
    let psi_xre = PureStateVector::normalized(out, vec![dxp, dr, de])?;
    let rho_xr = psi_xre.reduce(&[0, 1])?;
    let sigma_r = psi_xr.reduce(&[1])?;
    let rho_r = psi_xre.reduce(&[1])?;
    let diff = (sigma_r.matrix() - rho_r.matrix()).camax();
    if diff > MARGINAL_TOL {
        return Err(Error::Consistency(format!(
            "σ_R and ρ_R differ by {diff:.3e}; the process is not trace preserving on σ_X"
        )));
    }
    Ok(ProcessInstance {
        sigma_x,
        process: process.clone(),
        psi_xr: psi_xr.clone(),
        sigma_xr: DensityOperator::pure(psi_xr),
        rho_xr,
        r_basis: eig_hermitian(sigma_r.matrix())?.vectors,
        psi_xre,
    })
}

impl ProcessInstance {
    pub fn sigma_x(&self) -> &DensityOperator {
        &self.sigma_x
    }

    pub fn process(&self) -> &ChoiMap {
        &self.process
    }

    pub fn psi_xr(&self) -> &PureStateVector {
        &self.psi_xr
    }

    /// `|σ⟩⟨σ|_XR` with dims `[d_X, d_R]`.
    pub fn sigma_xr(&self) -> &DensityOperator {
        &self.sigma_xr
    }

    /// `ρ_X'R` with dims `[d_X', d_R]`.
    pub fn rho_xr(&self) -> &DensityOperator {
        &self.rho_xr
    }

    /// `|ρ⟩_X'RE` with dims `[d_X', d_R, d_E]`.
    pub fn psi_xre(&self) -> &PureStateVector {
        &self.psi_xre
    }

    pub fn dim_env(&self) -> usize {
        self.psi_xre.dims()[2]
    }

    pub fn dim_ref(&self) -> usize {
        self.psi_xr.dims()[1]
    }

    /// `ρ_X'E` with dims `[d_X', d_E]`.
    pub fn rho_xe(&self) -> Result<DensityOperator> {
        self.psi_xre.reduce(&[0, 2])
    }

    /// `H₀(E|X')_ρ`.
    pub fn h_zero_env(&self) -> Result<EntropyValue> {
        h_zero_cond(&self.rho_xe()?, 0)
    }
}

/// Partial isometry `V: X → X'E` with `V |σ⟩_XR = |ρ⟩_X'ER`, from Schmidt
/// decompositions of both states along one eigenbasis of `σ_R`.
pub fn optimal_isometry(inst: &ProcessInstance) -> Result<PartialIsometryOp> {
    let dx = inst.sigma_x.dim();
    let [dxp, _, de] = [inst.psi_xre.dims()[0], inst.psi_xre.dims()[1], inst.psi_xre.dims()[2]];
    let tol = DEFAULT_SUPPORT_TOL;
    let before = schmidt_relative(&inst.psi_xr, 1, &inst.r_basis, tol)?;
    let after = schmidt_relative(&inst.psi_xre.permute(&[0, 2, 1])?, 2, &inst.r_basis, tol)?;
    if before.indices != after.indices {
        return Err(Error::Consistency(
            "Schmidt supports of σ_XR and ρ_X'ER differ".into(),
        ));
    }
    for (a, b) in before.coefficients.iter().zip(&after.coefficients) {
        if (a - b).abs() > MARGINAL_TOL {
            return Err(Error::Consistency(format!(
                "Schmidt coefficients differ ({a} vs {b})"
            )));
        }
    }
    let mut v = zeros(dxp * de, dx);
    for (a, b) in before.left.iter().zip(&after.left) {
        v += b * a.adjoint();
    }
    PartialIsometryOp::new(
        v,
        ProjectorOp::from_orthonormal(&before.left, dx),
        ProjectorOp::from_orthonormal(&after.left, dxp * de),
    )
}

/// `T(M) = tr_E[V M V†]` for `V: X → X' ⊗ E`.
pub fn optimal_channel(v: &PartialIsometryOp, dim_out: usize) -> Result<ChoiMap> {
    let m = v.matrix();
    if dim_out == 0 || m.nrows() % dim_out != 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} rows do not split as X' ⊗ E with d_X' = {dim_out}",
            m.nrows()
        )));
    }
    let de = m.nrows() / dim_out;
    let kraus: Vec<ComplexMatrix> = (0..de)
        .map(|e| ComplexMatrix::from_fn(dim_out, m.ncols(), |xp, x| m[(xp * de + e, x)]))
        .collect();
    ChoiMap::from_kraus(&kraus)
}

/// `ω` maximizing `tr[Π_X'E ω_X']`, `X = 0`, `Z = ω ⊗ σ_R⁺`.
pub fn dual_witness(inst: &ProcessInstance) -> Result<DualCertificate> {
    let w = zero_cond_witness(&inst.rho_xe()?, 0, DEFAULT_SUPPORT_TOL)?;
    let sigma_r = inst.psi_xr.reduce(&[1])?;
    let eig = eig_hermitian(sigma_r.matrix())?;
    let cut = DEFAULT_SUPPORT_TOL * eig.max();
    let pinv = hermitian_fn(sigma_r.matrix(), |v| if v > cut { 1.0 / v } else { 0.0 })?;
    Ok(DualCertificate {
        z_block: tensor(&w.omega, &pinv),
        omega: w.omega,
        x_block: zeros(inst.sigma_x.dim(), inst.sigma_x.dim()),
    })
}

/// Interior-point solution of the work-cost program for the same instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpCrossCheck {
    pub alpha: f64,
    pub lambda: f64,
    pub status: SdpStatus,
    pub duality_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkBoundReport {
    /// `H₀(E|X')_ρ`.
    pub h_zero_cond_bits: EntropyValue,
    /// `-H₀(E|X')`; the largest extractable work in bits.
    pub lambda_opt: f64,
    /// `H₀(E|X')`; the minimal work cost in units of `kT ln 2`.
    pub work_min_kt_ln2: f64,
    /// `λ_max(T(I))` of the optimal channel.
    pub alpha_primal: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub residuals: CertificateReport,
    pub optimal_channel: ChoiMap,
    pub certificate: DualCertificate,
    pub sdp_check: Option<SdpCrossCheck>,
}

impl WorkBoundReport {
    /// Minimal work in joules at temperature `t_kelvin`, given Boltzmann's constant.
    pub fn joules(&self, t_kelvin: f64, boltzmann: f64) -> f64 {
        self.work_min_kt_ln2 * boltzmann * t_kelvin * std::f64::consts::LN_2
    }
}

pub fn work_bound(inst: &ProcessInstance, sdp_check: bool) -> Result<WorkBoundReport> {
    let h0 = inst.h_zero_env()?;
    let v = optimal_isometry(inst)?;
    let channel = optimal_channel(&v, inst.process.dim_out())?;
    let alpha_primal = channel.subunital_alpha()?;
    let certificate = dual_witness(inst)?;
    let residuals = verify_certificate(
        &inst.sigma_xr,
        &inst.rho_xr,
        alpha_primal,
        channel.choi(),
        &certificate,
        CERTIFICATE_TOL,
    )?;
    let sdp = if sdp_check {
        let sol = encode_landauer_primal(&inst.sigma_xr, &inst.rho_xr)?.solve()?;
        Some(SdpCrossCheck {
            alpha: sol.alpha,
            lambda: -sol.alpha.log2(),
            status: sol.sdp.status,
            duality_gap: sol.sdp.gap,
            iterations: sol.sdp.iterations,
        })
    } else {
        None
    };
    Ok(WorkBoundReport {
        h_zero_cond_bits: h0,
        lambda_opt: -h0.bits,
        work_min_kt_ln2: h0.bits,
        alpha_primal,
        dual_value: residuals.dual_value,
        gap: residuals.gap,
        residuals,
        optimal_channel: channel,
        certificate,
        sdp_check: sdp,
    })
}

/// Largest `λ` such that some `2^{-λ}`-subunital trace-nonincreasing map
/// sends `σ_X` to `ρ_X`, with no reference system; solved as an SDP.
pub fn conversion_lambda_sdp(sigma_x: &DensityOperator, rho_x: &DensityOperator) -> Result<f64> {
    let s = sigma_x.with_dims(vec![sigma_x.dim(), 1])?;
    let r = rho_x.with_dims(vec![rho_x.dim(), 1])?;
    let sol = encode_landauer_primal(&s, &r)?.solve()?;
    if sol.sdp.status != SdpStatus::Optimal {
        return Err(Error::Sdp(format!("conversion program ended with status {:?}", sol.sdp.status)));
    }
    Ok(-sol.alpha.log2())
}

fn ensure_close(label: &str, a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > SPECIAL_CASE_TOL {
        return Err(Error::Consistency(format!(
            "{label}: closed form {a} disagrees with the general engine {b}"
        )));
    }
    Ok(())
}

/// Work to erase `S` while keeping the memory `M`: `H₀(S|M)_σ`.
///
/// For small systems the value is checked against [`work_bound`] on the
/// process `|0⟩⟨0|_S ⊗ id_M`.
pub fn special_erasure_with_memory(sigma_sm: &DensityOperator) -> Result<EntropyValue> {
    if sigma_sm.dims().len() != 2 {
        return Err(Error::Precondition("σ_SM must be bipartite".into()));
    }
    let value = h_zero_cond(sigma_sm, 1)?;
    let (ds, dm) = (sigma_sm.dims()[0], sigma_sm.dims()[1]);
    if ds * dm <= ENGINE_CHECK_MAX_DIM {
        let erase = ChoiMap::erasure(ds);
        let process = ChoiMap::from_linear_map(ds * dm, ds * dm, |m| {
            erase
                .apply_on_subsystem_matrix(m, &[ds, dm], 0)
                .expect("dims fixed")
                .0
        })?;
        let engine = work_bound(&build_instance(sigma_sm, &process)?, false)?;
        ensure_close("erasure with memory", value.bits, engine.work_min_kt_ln2)?;
    }
    Ok(value)
}

/// Work to replace `σ_X` by `ρ_X`, discarding all correlations: `H₀(σ) - Hmin(ρ)`.
pub fn special_decoupling(sigma_x: &DensityOperator, rho_x: &DensityOperator) -> Result<EntropyValue> {
    let value = EntropyValue::new(decoupling_bits(&sigma_x.spectrum()?, &rho_x.spectrum()?))?;
    if sigma_x.dim().max(rho_x.dim()) <= ENGINE_CHECK_MAX_DIM {
        let process = ChoiMap::replacement(sigma_x.dim(), &rho_x.with_dims(vec![rho_x.dim()])?);
        let engine = work_bound(&build_instance(sigma_x, &process)?, false)?;
        ensure_close("decoupling", value.bits, engine.work_min_kt_ln2)?;
    }
    Ok(value)
}

fn decoupling_bits(sigma: &Spectrum, rho: &Spectrum) -> f64 {
    sigma.h_zero(DEFAULT_SUPPORT_TOL) - rho.h_min()
}

/// Work per copy in the i.i.d. limit: `H(σ) - H(ρ)`.
pub fn iid_rate(sigma_x: &DensityOperator, rho_x: &DensityOperator) -> Result<EntropyValue> {
    EntropyValue::new(sigma_x.spectrum()?.h_shannon() - rho_x.spectrum()?.h_shannon())
}

/// Identity versus replacement on the spike-and-flat state with `2ⁿ` small atoms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub n: u32,
    pub epsilon: f64,
    pub dim: usize,
    pub identity_bound: f64,
    pub replacement_bound: f64,
    pub iid_rate_identity: f64,
    pub iid_rate_replacement: f64,
    pub h_min_smooth: f64,
    pub h_zero_smooth: f64,
    /// Whether the bounds were also computed by the general engine.
    pub engine_checked: bool,
}

pub fn single_shot_gap_demo(n: u32, epsilon: f64) -> Result<GapReport> {
    if !(1..=20).contains(&n) {
        return Err(Error::Precondition(format!("n = {n} is outside 1..=20")));
    }
    let p = crate::entropy::spike_and_flat(n);
    let params = SmoothingParams::new(epsilon)?;
    let dim = p.len();
    // the identity has a one-dimensional environment, so H₀(E|X') = log₂ 1
    let mut identity_bound = 0.0;
    let replacement_bound = decoupling_bits(&p, &p);
    let engine_checked = dim <= ENGINE_CHECK_MAX_DIM;
    if engine_checked {
        let sigma = DensityOperator::diagonal(p.values())?;
        identity_bound = work_bound(&build_instance(&sigma, &ChoiMap::identity(dim))?, false)?.work_min_kt_ln2;
        special_decoupling(&sigma, &sigma)?;
    }
    Ok(GapReport {
        n,
        epsilon,
        dim,
        identity_bound,
        replacement_bound,
        iid_rate_identity: 0.0,
        iid_rate_replacement: p.h_shannon() - p.h_shannon(),
        h_min_smooth: h_smooth_classical(&p, params, SmoothKind::Min)?.bits,
        h_zero_smooth: h_smooth_classical(&p, params, SmoothKind::Zero)?.bits,
        engine_checked,
    })
}

/// Two qubits `S`, `M` in the reduced state of `(|001⟩ + |010⟩ + |100⟩)/√3`.
pub fn w_state_sm() -> DensityOperator {
    let t = 1.0 / 3f64.sqrt();
    let mut a = vec![crate::qmat::c(0.0, 0.0); 8];
    for i in [0b001, 0b010, 0b100] {
        a[i] = crate::qmat::c(t, 0.0);
    }
    PureStateVector::new(ComplexVector::from_vec(a), vec![2, 2, 2])
        .and_then(|psi| psi.reduce(&[0, 1]))
        .expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{diag, identity};

    #[test]
    fn identity_process_is_free() {
        let sigma = DensityOperator::diagonal(&[0.6, 0.4]).unwrap();
        let inst = build_instance(&sigma, &ChoiMap::identity(2)).unwrap();
        assert_eq!(inst.dim_env(), 1);
        assert!((inst.rho_xr().matrix() - inst.sigma_xr().matrix()).norm() < 1e-12);
        let v = optimal_isometry(&inst).unwrap();
        assert!((v.matrix() - identity(2)).norm() < 1e-9);
        let report = work_bound(&inst, true).unwrap();
        assert!(report.work_min_kt_ln2.abs() < 1e-12);
        assert!(report.residuals.passed, "{:?}", report.residuals);
        assert!((report.sdp_check.unwrap().alpha - 1.0).abs() < 1e-6);
    }

    #[test]
    fn erasure_of_mixed_qubit() {
        let sigma = DensityOperator::maximally_mixed(2);
        let inst = build_instance(&sigma, &ChoiMap::erasure(2)).unwrap();
        assert_eq!(inst.dim_env(), 2);
        let expected = tensor(&diag(&[1.0, 0.0]), &(identity(2) * crate::qmat::c(0.5, 0.0)));
        assert!((inst.rho_xr().matrix() - expected).norm() < 1e-12);
        let report = work_bound(&inst, false).unwrap();
        assert!((report.work_min_kt_ln2 - 1.0).abs() < 1e-12);
        assert!((report.alpha_primal - 2.0).abs() < 1e-9);
        assert!(report.gap < 1e-9);
        // V sends |i⟩ to |0⟩_X' ⊗ |e_i⟩_E for an orthonormal environment basis
        let v = optimal_isometry(&inst).unwrap();
        let zero_out = tensor(&diag(&[1.0, 0.0]), &identity(2));
        assert!((&zero_out * v.matrix() - v.matrix()).norm() < 1e-9);
        assert!((v.matrix().adjoint() * v.matrix() - identity(2)).norm() < 1e-9);
    }

    #[test]
    fn w_state_memory_erasure() {
        let sm = w_state_sm();
        let v = special_erasure_with_memory(&sm).unwrap();
        assert!((v.bits - 1.5f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn decoupling_examples() {
        let pure = DensityOperator::diagonal(&[1.0, 0.0]).unwrap();
        let mixed = DensityOperator::maximally_mixed(2);
        assert!((special_decoupling(&pure, &mixed).unwrap().bits + 1.0).abs() < 1e-9);
        assert!(special_decoupling(&mixed, &mixed).unwrap().bits.abs() < 1e-9);
        let spike = DensityOperator::diagonal(crate::entropy::spike_and_flat(3).values()).unwrap();
        let target = DensityOperator::diagonal(&[1.0; 1].iter().copied().chain([0.0; 8]).collect::<Vec<_>>()).unwrap();
        assert!((special_decoupling(&spike, &target).unwrap().bits - 9f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn gap_demo_small_n() {
        let r = single_shot_gap_demo(1, 0.05).unwrap();
        assert!(r.engine_checked);
        assert!((r.replacement_bound - (3f64.log2() - 1.0)).abs() < 1e-12);
        assert!(r.identity_bound.abs() < 1e-12);
        assert!(iid_rate(&DensityOperator::maximally_mixed(2), &DensityOperator::diagonal(&[1.0, 0.0]).unwrap())
            .map(|v| (v.bits - 1.0).abs() < 1e-12)
            .unwrap());
    }
}
