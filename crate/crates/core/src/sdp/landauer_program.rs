//! The work-cost program and its certificate check.
//!
//! Primal, over `α ≥ 0` and the Choi matrix `T` of a map `X → X'`:
//!
//! ```text
//! min α   s.t.  tr_X T ≤ α I_X',   tr_X' T ≤ I_X,   tr_X[T σ_XR^{t_X}] = ρ_X'R,   T ⪰ 0
//! ```
//!
//! Dual, over `ω ⪰ 0` on `X'`, `X ⪰ 0` on `X`, Hermitian `Z` on `X'R`:
//!
//! ```text
//! max tr(Z ρ) - tr X   s.t.  tr ω ≤ 1,   tr_R[σ^{t_X} Z] ≤ I_X ⊗ ω + X ⊗ I_X'
//! ```

use serde::{Deserialize, Serialize};

use super::{solve_sdp, BlockKind, IterationLog, SdpProblem, SdpSolution, SdpStatus};
use crate::channel::ChoiMap;
use crate::error::{Error, Result};
use crate::io::{serde_cmat, MatrixDoc};
use crate::qmat::{
    c, eig_hermitian, hermitize, identity, partial_trace, partial_transpose, permute_subsystems,
    tensor, trace, zeros, ComplexMatrix, DensityOperator,
};

const ALPHA: usize = 0;
const T_BLOCK: usize = 1;

/// Dual witness `(ω, X, Z)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    #[serde(with = "serde_cmat")]
    pub omega: ComplexMatrix,
    #[serde(with = "serde_cmat")]
    pub x_block: ComplexMatrix,
    #[serde(with = "serde_cmat")]
    pub z_block: ComplexMatrix,
}

impl DualCertificate {
    /// `tr(Z ρ) - tr X`.
    pub fn value(&self, rho_xpr: &DensityOperator) -> f64 {
        trace(&(&self.z_block * rho_xpr.matrix())).re - trace(&self.x_block).re
    }

    pub fn omega_state(&self) -> Result<DensityOperator> {
        DensityOperator::from_computed_subnormalized(&self.omega, vec![self.omega.nrows()])
    }
}

/// Encoded primal with the data it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandauerProgram {
    pub problem: SdpProblem,
    pub dim_x: usize,
    pub dim_xp: usize,
    pub dim_r: usize,
    /// `W = Σ_i λ_i^{-1/2} |v_i⟩⟨i|` over the support of `σ_R`; the process
    /// constraint is imposed as `(I ⊗ W†)(·)(I ⊗ W)` on both sides.
    #[serde(with = "serde_cmat")]
    pub reference_weight: ComplexMatrix,
    /// Fixed value of `α` when the program is a feasibility check.
    pub fixed_alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LandauerSolution {
    pub sdp: SdpSolution,
    pub alpha: f64,
    pub t_choi: ComplexMatrix,
    pub certificate: DualCertificate,
}

fn check_pair(sigma_xr: &DensityOperator, rho_xpr: &DensityOperator) -> Result<(usize, usize, usize)> {
    if sigma_xr.dims().len() != 2 || rho_xpr.dims().len() != 2 {
        return Err(Error::DimensionMismatch(
            "expected bipartite σ_XR and ρ_X'R".into(),
        ));
    }
    let (dx, dr) = (sigma_xr.dims()[0], sigma_xr.dims()[1]);
    let (dxp, dr2) = (rho_xpr.dims()[0], rho_xpr.dims()[1]);
    if dr != dr2 {
        return Err(Error::DimensionMismatch(format!(
            "reference dimensions differ ({dr} vs {dr2})"
        )));
    }
    let sr = partial_trace(sigma_xr.matrix(), sigma_xr.dims(), &[1])?;
    let rr = partial_trace(rho_xpr.matrix(), rho_xpr.dims(), &[1])?;
    let diff = (&sr - &rr).camax();
    if diff > 1e-8 {
        return Err(Error::Consistency(format!(
            "reference marginals of σ_XR and ρ_X'R differ by {diff:.3e}"
        )));
    }
    Ok((dx, dxp, dr))
}

/// `T ↦ (T ⊗ id_R)(σ_XR)` for `T` given as a Choi matrix.
fn process_map(sigma_xr: &DensityOperator, dx: usize, dxp: usize) -> impl Fn(&ComplexMatrix) -> ComplexMatrix + '_ {
    move |t: &ComplexMatrix| {
        ChoiMap::unchecked(t.clone(), dx, dxp)
            .apply_on_subsystem_matrix(sigma_xr.matrix(), sigma_xr.dims(), 0)
            .expect("dimensions checked when encoding")
            .0
    }
}

/// Inverse square root of `σ_R` on its support, as a `d_R × rank` matrix.
fn reference_weight(sigma_xr: &DensityOperator) -> Result<ComplexMatrix> {
    let sr = partial_trace(sigma_xr.matrix(), sigma_xr.dims(), &[1])?;
    let eig = eig_hermitian(&sr)?;
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > 1e-12).collect();
    let mut w = zeros(sr.nrows(), keep.len().max(1));
    for (col, &i) in keep.iter().enumerate() {
        let scale = 1.0 / eig.values[i].sqrt();
        for r in 0..sr.nrows() {
            w[(r, col)] = eig.vectors[(r, i)] * scale;
        }
    }
    Ok(w)
}

fn sandwich(m: &ComplexMatrix, dxp: usize, w: &ComplexMatrix) -> ComplexMatrix {
    let lift = tensor(&identity(dxp), w);
    lift.adjoint() * m * lift
}

fn encode(sigma_xr: &DensityOperator, rho_xpr: &DensityOperator, fixed_alpha: Option<f64>, phase_one: bool) -> Result<LandauerProgram> {
    let (dx, dxp, dr) = check_pair(sigma_xr, rho_xpr)?;
    let w = reference_weight(sigma_xr)?;
    let mut p = SdpProblem::new();
    let alpha = p.add_block(if phase_one { "violation" } else { "alpha" }, 1, BlockKind::RealSymmetric);
    let t = p.add_block("T", dx * dxp, BlockKind::Hermitian);
    let s1 = p.add_block("slack_alpha", dxp, BlockKind::Hermitian);
    let s2 = p.add_block("slack_trace", dx, BlockKind::Hermitian);
    debug_assert_eq!((alpha, t), (ALPHA, T_BLOCK));
    if fixed_alpha.is_none() || phase_one {
        p.set_objective(alpha, identity(1))?;
    }

    let neg = |m: &ComplexMatrix| -m;
    let pos = |m: &ComplexMatrix| m.clone();
    let scalar_id = |m: &ComplexMatrix| identity(dxp) * m[(0, 0)];
    let neg_tr_x = |m: &ComplexMatrix| -partial_trace(m, &[dx, dxp], &[1]).expect("dims");
    let tr_xp = |m: &ComplexMatrix| partial_trace(m, &[dx, dxp], &[0]).expect("dims");
    let zero_alpha = |_: &ComplexMatrix| zeros(dxp, dxp);

    match (fixed_alpha, phase_one) {
        (None, _) => {
            // α I - tr_X T - S1 = 0
            p.add_equality("alpha", &zeros(dxp, dxp), &[(alpha, &scalar_id), (t, &neg_tr_x), (s1, &neg)])?;
        }
        (Some(a), false) => {
            // tr_X T + S1 = a I; the scalar block is pinned to zero
            let target = identity(dxp) * c(a, 0.0);
            let tr_x = |m: &ComplexMatrix| partial_trace(m, &[dx, dxp], &[1]).expect("dims");
            p.add_equality("alpha", &target, &[(alpha, &zero_alpha), (t, &tr_x), (s1, &pos)])?;
            let pin = |m: &ComplexMatrix| m.clone();
            p.add_equality("unused", &zeros(1, 1), &[(alpha, &pin)])?;
        }
        (Some(a), true) => {
            // tr_X T + S1 - v I = a I, minimize the violation v ≥ 0
            let target = identity(dxp) * c(a, 0.0);
            let tr_x = |m: &ComplexMatrix| partial_trace(m, &[dx, dxp], &[1]).expect("dims");
            let neg_scalar = |m: &ComplexMatrix| -(identity(dxp) * m[(0, 0)]);
            p.add_equality("alpha", &target, &[(alpha, &neg_scalar), (t, &tr_x), (s1, &pos)])?;
        }
    }
    // tr_X' T + S2 = I
    p.add_equality("trace", &identity(dx), &[(t, &tr_xp), (s2, &pos)])?;
    // (T ⊗ id)(σ_XR) = ρ_X'R
    let proc = process_map(sigma_xr, dx, dxp);
    let weighted = |m: &ComplexMatrix| sandwich(&proc(m), dxp, &w);
    p.add_equality("process", &hermitize(&sandwich(rho_xpr.matrix(), dxp, &w)), &[(t, &weighted)])?;

    Ok(LandauerProgram {
        problem: p,
        dim_x: dx,
        dim_xp: dxp,
        dim_r: dr,
        reference_weight: w,
        fixed_alpha,
    })
}

/// Minimization of `α` over all admissible `T`.
pub fn encode_landauer_primal(sigma_xr: &DensityOperator, rho_xpr: &DensityOperator) -> Result<LandauerProgram> {
    encode(sigma_xr, rho_xpr, None, false)
}

/// Pure feasibility program with `α` fixed.
pub fn encode_landauer_primal_fixed_alpha(
    sigma_xr: &DensityOperator,
    rho_xpr: &DensityOperator,
    alpha: f64,
) -> Result<LandauerProgram> {
    encode(sigma_xr, rho_xpr, Some(alpha), false)
}

impl LandauerProgram {
    pub fn solve(&self) -> Result<LandauerSolution> {
        let sdp = solve_sdp(&self.problem)?;
        if sdp.primal.is_empty() {
            return Ok(LandauerSolution {
                alpha: f64::NAN,
                t_choi: zeros(self.dim_x * self.dim_xp, self.dim_x * self.dim_xp),
                certificate: DualCertificate {
                    omega: zeros(self.dim_xp, self.dim_xp),
                    x_block: zeros(self.dim_x, self.dim_x),
                    z_block: zeros(self.dim_xp * self.dim_r, self.dim_xp * self.dim_r),
                },
                sdp,
            });
        }
        let alpha = self.fixed_alpha.unwrap_or(sdp.primal[ALPHA][(0, 0)].re);
        let t_choi = sdp.primal[T_BLOCK].clone();
        let groups = |label: &str| {
            self.problem
                .groups
                .iter()
                .position(|g| g.label == label)
                .map(|i| sdp.dual[i].clone())
        };
        let omega = groups("alpha").unwrap_or_else(|| zeros(self.dim_xp, self.dim_xp));
        let omega = if self.fixed_alpha.is_some() { -omega } else { omega };
        let x_block = -groups("trace").expect("trace group present");
        let lift = tensor(&identity(self.dim_xp), &self.reference_weight);
        let z_block = hermitize(&(&lift * groups("process").expect("process group present") * lift.adjoint()));
        Ok(LandauerSolution {
            alpha,
            t_choi,
            certificate: DualCertificate {
                omega,
                x_block,
                z_block,
            },
            sdp,
        })
    }
}

/// Result of minimizing the violation of `tr_X T ≤ α I` at a fixed `α`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaFeasibility {
    pub alpha: f64,
    pub status: SdpStatus,
    /// `min v` with `tr_X T ≤ (α + v) I`; zero when `α` is attainable.
    pub min_violation: f64,
    /// Status of the pure feasibility program at this `α`.
    pub feasibility_status: SdpStatus,
}

/// Decides whether `α` is attainable, both directly and through the minimal violation.
pub fn alpha_feasibility(sigma_xr: &DensityOperator, rho_xpr: &DensityOperator, alpha: f64) -> Result<AlphaFeasibility> {
    let direct = encode(sigma_xr, rho_xpr, Some(alpha), false)?;
    let feasibility_status = solve_sdp(&direct.problem)?.status;
    let phase = encode(sigma_xr, rho_xpr, Some(alpha), true)?;
    let sol = solve_sdp(&phase.problem)?;
    let min_violation = if sol.primal.is_empty() {
        f64::NAN
    } else {
        sol.primal[ALPHA][(0, 0)].re
    };
    Ok(AlphaFeasibility {
        alpha,
        status: sol.status,
        min_violation,
        feasibility_status,
    })
}

/// Every residual of a primal-dual pair, computed from the program's defining formulas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// `max(0, -λ_min(T))`
    pub t_psd: f64,
    /// `max(0, λ_max(tr_X T) - α)`
    pub alpha_constraint: f64,
    /// `max(0, λ_max(tr_X' T) - 1)`
    pub trace_constraint: f64,
    /// `max |tr_X[T σ^{t_X}] - ρ|`
    pub process_constraint: f64,
    /// `max(0, tr ω - 1)`
    pub omega_trace: f64,
    /// `max(0, -λ_min(ω))`
    pub omega_psd: f64,
    /// `max(0, -λ_min(X))`
    pub x_psd: f64,
    /// `max(0, -λ_min(I ⊗ ω + X ⊗ I - tr_R[σ^{t_X} Z]))`
    pub dual_constraint: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CertificateReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.gap,
            self.t_psd,
            self.alpha_constraint,
            self.trace_constraint,
            self.process_constraint,
            self.omega_trace,
            self.omega_psd,
            self.x_psd,
            self.dual_constraint,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn min_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(&hermitize(m))?.min())
}

fn max_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(&hermitize(m))?.max())
}

/// Checks a primal pair `(α, T)` and a dual certificate against the program
/// defined by `σ_XR`, `ρ_X'R`; never fails on bad values, only reports them.
pub fn verify_certificate(
    sigma_xr: &DensityOperator,
    rho_xpr: &DensityOperator,
    alpha: f64,
    t_choi: &ComplexMatrix,
    cert: &DualCertificate,
    tol: f64,
) -> Result<CertificateReport> {
    let (dx, dxp, dr) = check_pair(sigma_xr, rho_xpr)?;
    let shape_ok = t_choi.shape() == (dx * dxp, dx * dxp)
        && cert.omega.shape() == (dxp, dxp)
        && cert.x_block.shape() == (dx, dx)
        && cert.z_block.shape() == (dxp * dr, dxp * dr);
    if !shape_ok {
        return Err(Error::DimensionMismatch(
            "certificate blocks do not match the program dimensions".into(),
        ));
    }
    let sigma_tx = partial_transpose(sigma_xr.matrix(), &[dx, dr], 0)?;

    // primal side, ordering X X' R
    let t_ext = tensor(t_choi, &identity(dr));
    let sigma_ext = permute_subsystems(&tensor(&sigma_tx, &identity(dxp)), &[dx, dr, dxp], &[0, 2, 1])?;
    let image = partial_trace(&(&t_ext * &sigma_ext), &[dx, dxp, dr], &[1, 2])?;
    let process_constraint = (&image - rho_xpr.matrix()).camax();
    let tr_x = partial_trace(t_choi, &[dx, dxp], &[1])?;
    let tr_xp = partial_trace(t_choi, &[dx, dxp], &[0])?;

    // dual side, ordering X R X'
    let z_rxp = permute_subsystems(&cert.z_block, &[dxp, dr], &[1, 0])?;
    let prod = tensor(&sigma_tx, &identity(dxp)) * tensor(&identity(dx), &z_rxp);
    let contracted = hermitize(&partial_trace(&prod, &[dx, dr, dxp], &[0, 2])?);
    let bound = tensor(&identity(dx), &cert.omega) + tensor(&cert.x_block, &identity(dxp));

    let dual_value = cert.value(rho_xpr);
    let mut r = CertificateReport {
        primal_value: alpha,
        dual_value,
        gap: (alpha - dual_value).abs(),
        t_psd: (-min_eig(t_choi)?).max(0.0),
        alpha_constraint: (max_eig(&tr_x)? - alpha).max(0.0),
        trace_constraint: (max_eig(&tr_xp)? - 1.0).max(0.0),
        process_constraint,
        omega_trace: (trace(&cert.omega).re - 1.0).max(0.0),
        omega_psd: (-min_eig(&cert.omega)?).max(0.0),
        x_psd: (-min_eig(&cert.x_block)?).max(0.0),
        dual_constraint: (-min_eig(&(bound - contracted))?).max(0.0),
        tolerance: tol,
        passed: false,
    };
    r.passed = r.max_residual() <= tol;
    Ok(r)
}

/// Everything needed to re-check a solved instance offline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateDump {
    pub sigma_xr: MatrixDoc,
    pub rho_xpr: MatrixDoc,
    pub alpha: f64,
    #[serde(with = "serde_cmat")]
    pub t_choi: ComplexMatrix,
    pub certificate: DualCertificate,
    #[serde(default)]
    pub problem: Option<SdpProblem>,
    #[serde(default)]
    pub iterates: Vec<IterationLog>,
}

impl CertificateDump {
    /// Records a primal-dual pair for later checking; `solution` adds the program and its iterates.
    pub fn new(
        sigma_xr: &DensityOperator,
        rho_xpr: &DensityOperator,
        alpha: f64,
        t_choi: &ComplexMatrix,
        certificate: &DualCertificate,
        solution: Option<(&LandauerProgram, &SdpSolution)>,
    ) -> Self {
        CertificateDump {
            sigma_xr: MatrixDoc::from_state(sigma_xr),
            rho_xpr: MatrixDoc::from_state(rho_xpr),
            alpha,
            t_choi: t_choi.clone(),
            certificate: certificate.clone(),
            problem: solution.map(|(p, _)| p.problem.clone()),
            iterates: solution.map(|(_, s)| s.log.clone()).unwrap_or_default(),
        }
    }

    pub fn verify(&self, tol: f64) -> Result<CertificateReport> {
        let sigma = self.sigma_xr.to_state()?;
        let rho = self.rho_xpr.to_state()?;
        verify_certificate(&sigma, &rho, self.alpha, &self.t_choi, &self.certificate, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{diag, PureStateVector};

    fn product_zero() -> DensityOperator {
        DensityOperator::diagonal(&[1.0, 0.0]).unwrap().with_dims(vec![2]).unwrap()
            .tensor(&DensityOperator::diagonal(&[1.0]).unwrap())
    }

    #[test]
    fn identity_process_on_pure_product_state() {
        let sigma = product_zero();
        let prog = encode_landauer_primal(&sigma, &sigma).unwrap();
        let sol = prog.solve().unwrap();
        assert_eq!(sol.sdp.status, SdpStatus::Optimal, "{:?}", sol.sdp.log.last());
        assert!((sol.alpha - 1.0).abs() < 1e-6);
    }

    #[test]
    fn erasure_of_mixed_qubit_without_reference() {
        let sigma = DensityOperator::new(diag(&[0.5, 0.5]), vec![2, 1]).unwrap();
        let rho = DensityOperator::new(diag(&[1.0, 0.0]), vec![2, 1]).unwrap();
        let sol = encode_landauer_primal(&sigma, &rho).unwrap().solve().unwrap();
        assert_eq!(sol.sdp.status, SdpStatus::Optimal);
        assert!((sol.alpha - 2.0).abs() < 1e-6);
        let report = verify_certificate(&sigma, &rho, sol.alpha, &sol.t_choi, &sol.certificate, 1e-6).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn identity_on_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureStateVector::new(
            crate::qmat::ComplexVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]),
            vec![2, 2],
        )
        .unwrap();
        let sigma = DensityOperator::pure(&bell);
        let sol = encode_landauer_primal(&sigma, &sigma).unwrap().solve().unwrap();
        assert!((sol.alpha - 1.0).abs() < 1e-6, "{}", sol.alpha);
    }

    #[test]
    fn mismatched_marginals_are_rejected() {
        let sigma = DensityOperator::new(diag(&[0.5, 0.5]), vec![1, 2]).unwrap();
        let rho = DensityOperator::new(diag(&[1.0, 0.0]), vec![1, 2]).unwrap();
        assert!(matches!(encode_landauer_primal(&sigma, &rho), Err(Error::Consistency(_))));
    }

    #[test]
    fn fixed_alpha_below_optimum_is_infeasible() {
        let sigma = DensityOperator::new(diag(&[0.5, 0.5]), vec![2, 1]).unwrap();
        let rho = DensityOperator::new(diag(&[1.0, 0.0]), vec![2, 1]).unwrap();
        let f = alpha_feasibility(&sigma, &rho, 1.9).unwrap();
        assert!(f.feasibility_status == SdpStatus::Infeasible || f.min_violation > 1e-4, "{f:?}");
        assert!((f.min_violation - 0.1).abs() < 1e-5, "{f:?}");
        let ok = alpha_feasibility(&sigma, &rho, 2.1).unwrap();
        assert!(ok.min_violation.abs() < 1e-6, "{ok:?}");
    }
}
