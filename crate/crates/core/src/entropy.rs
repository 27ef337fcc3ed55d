//! Single-shot entropies, conditional entropies and classical smoothing.
//!
//! All values are in bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorize::Spectrum;
use crate::qmat::{
    canonical_purification, eig_hermitian, identity, partial_trace, projector_onto, support_projector, tensor,
    ComplexMatrix, DensityOperator, PureStateVector, DEFAULT_SUPPORT_TOL,
};
use crate::sdp::{solve_sdp, BlockKind, SdpProblem, SdpStatus};

/// An entropy in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EntropyValue {
    pub bits: f64,
}

impl EntropyValue {
    pub fn new(bits: f64) -> Result<Self> {
        if bits.is_finite() {
            Ok(EntropyValue { bits })
        } else {
            Err(Error::NonFinite)
        }
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} bits", self.bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMetric {
    TraceDistance,
}

/// Smoothing radius `ε` with the fidelity-ball radius `ε̄ = √(2ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub epsilon: f64,
    pub metric: SmoothingMetric,
    pub epsilon_bar: f64,
}

impl SmoothingParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Precondition(format!("ε = {epsilon} is outside [0, 1)")));
        }
        Ok(SmoothingParams {
            epsilon,
            metric: SmoothingMetric::TraceDistance,
            epsilon_bar: epsilon_bar(epsilon),
        })
    }

    /// Accepts an explicit `ε̄` only if it agrees with `√(2ε)`.
    pub fn with_epsilon_bar(epsilon: f64, epsilon_bar_value: f64) -> Result<Self> {
        let p = Self::new(epsilon)?;
        if (p.epsilon_bar - epsilon_bar_value).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "ε̄ = {epsilon_bar_value} is inconsistent with √(2ε) = {}",
                p.epsilon_bar
            )));
        }
        Ok(p)
    }
}

pub fn epsilon_bar(epsilon: f64) -> f64 {
    (2.0 * epsilon).sqrt()
}

/// `log₂ rank ρ`.
pub fn h_zero(rho: &DensityOperator, tol: f64) -> Result<EntropyValue> {
    EntropyValue::new(rho.spectrum()?.h_zero(tol))
}

/// `-log₂ λ_max(ρ)`.
pub fn h_min(rho: &DensityOperator) -> Result<EntropyValue> {
    EntropyValue::new(rho.spectrum()?.h_min())
}

pub fn h_von_neumann(rho: &DensityOperator) -> Result<EntropyValue> {
    EntropyValue::new(rho.spectrum()?.h_shannon())
}

/// Reorders a bipartite state so the conditioning system comes second.
fn as_a_given_b(rho: &DensityOperator, cond_on: usize) -> Result<DensityOperator> {
    if rho.dims().len() != 2 || cond_on > 1 {
        return Err(Error::Precondition(format!(
            "bad partition: need a bipartite state and cond_on in {{0, 1}}, got dims {:?} and cond_on {cond_on}",
            rho.dims()
        )));
    }
    if cond_on == 1 {
        Ok(rho.clone())
    } else {
        rho.permute(&[1, 0])
    }
}

/// Optimal `ω_B` and value `λ_max(tr_A Π_AB)` of `max_ω tr[Π_AB (I_A ⊗ ω_B)]`.
#[derive(Debug, Clone)]
pub struct ZeroCondWitness {
    pub lambda_max: f64,
    pub omega: ComplexMatrix,
}

pub fn zero_cond_witness(rho: &DensityOperator, cond_on: usize, tol: f64) -> Result<ZeroCondWitness> {
    let r = as_a_given_b(rho, cond_on)?;
    let pi = support_projector(r.matrix(), tol)?;
    let reduced = partial_trace(pi.matrix(), r.dims(), &[1])?;
    let eig = eig_hermitian(&reduced)?;
    Ok(ZeroCondWitness {
        lambda_max: eig.max(),
        omega: projector_onto(&eig.vector(0)),
    })
}

/// `H₀(A|B) = log₂ λ_max(tr_A Π_AB)`, where `B` is subsystem `cond_on`.
pub fn h_zero_cond(rho: &DensityOperator, cond_on: usize) -> Result<EntropyValue> {
    h_zero_cond_with_tol(rho, cond_on, DEFAULT_SUPPORT_TOL)
}

pub fn h_zero_cond_with_tol(rho: &DensityOperator, cond_on: usize, tol: f64) -> Result<EntropyValue> {
    EntropyValue::new(zero_cond_witness(rho, cond_on, tol)?.lambda_max.log2())
}

/// Conditional min-entropy with the solver's bracket on the optimum.
#[derive(Debug, Clone)]
pub struct MinCondReport {
    pub value: EntropyValue,
    /// Optimal `σ_B` of `min tr σ_B` subject to `ρ_AB ≤ I_A ⊗ σ_B`.
    pub sigma: ComplexMatrix,
    pub primal: f64,
    pub dual: f64,
    /// `|log₂(primal / dual)|`, the uncertainty of `value` in bits.
    pub error_bits: f64,
}

pub fn h_min_cond_report(rho: &DensityOperator, cond_on: usize) -> Result<MinCondReport> {
    let r = as_a_given_b(rho, cond_on)?;
    let (da, db) = (r.dims()[0], r.dims()[1]);
    let mut p = SdpProblem::new();
    let sigma = p.add_block("sigma_B", db, BlockKind::Hermitian);
    let slack = p.add_block("slack", da * db, BlockKind::Hermitian);
    p.set_objective(sigma, identity(db))?;
    let lift = |m: &ComplexMatrix| tensor(&identity(da), m);
    let neg = |m: &ComplexMatrix| -m;
    p.add_equality("dominance", r.matrix(), &[(sigma, &lift), (slack, &neg)])?;
    let sol = solve_sdp(&p)?;
    if sol.status != SdpStatus::Optimal {
        return Err(Error::Sdp(format!(
            "conditional min-entropy program ended with status {:?}",
            sol.status
        )));
    }
    let primal = sol.primal_objective;
    let dual = sol.dual_objective;
    if primal <= 0.0 {
        return Err(Error::Sdp(format!("nonpositive optimum {primal:.3e}")));
    }
    let error_bits = if dual > 0.0 { (primal / dual).log2().abs() } else { f64::INFINITY };
    Ok(MinCondReport {
        value: EntropyValue::new(-primal.log2())?,
        sigma: sol.primal[sigma].clone(),
        primal,
        dual,
        error_bits,
    })
}

/// `Hmin(A|B) = -log₂ min{tr σ_B : ρ_AB ≤ I_A ⊗ σ_B}`.
pub fn h_min_cond(rho: &DensityOperator, cond_on: usize) -> Result<EntropyValue> {
    Ok(h_min_cond_report(rho, cond_on)?.value)
}

/// `Hmax(A|B) = -Hmin(A|C)` for a purification `ψ_ABC`.
pub fn h_max_cond(rho: &DensityOperator, cond_on: usize) -> Result<EntropyValue> {
    let r = as_a_given_b(rho, cond_on)?;
    if (r.trace() - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(r.trace()));
    }
    let (da, db) = (r.dims()[0], r.dims()[1]);
    let psi = canonical_purification(&r.with_dims(vec![da * db])?, DEFAULT_SUPPORT_TOL)?;
    let rank = psi.dims()[1];
    let psi = PureStateVector::new(psi.amplitudes().clone(), vec![da, db, rank])?;
    let rho_ac = psi.reduce(&[0, 2])?;
    EntropyValue::new(-h_min_cond(&rho_ac, 1)?.bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothKind {
    Zero,
    Min,
}

/// A group of equiprobable outcomes: natural logs of the per-outcome
/// probability and of the number of outcomes.
#[derive(Debug, Clone, Copy)]
struct Class {
    ln_p: f64,
    ln_size: f64,
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Smallest number of outcomes, taken in order of decreasing probability,
/// whose mass reaches `target`; returned as a natural log.
fn ln_greedy_count(mut classes: Vec<Class>, target: f64) -> f64 {
    classes.sort_by(|a, b| b.ln_p.total_cmp(&a.ln_p));
    let slack = 1e-12;
    let mut acc = 0.0;
    let mut ln_count = f64::NEG_INFINITY;
    for cl in classes {
        let mass = (cl.ln_size + cl.ln_p).exp();
        if acc + mass >= target - slack {
            let need = (target - acc).max(0.0);
            let ln_m = need.ln() - cl.ln_p;
            let ln_m = if ln_m < 40.0 {
                (ln_m.exp() - 1e-9).ceil().max(1.0).ln()
            } else {
                ln_m
            };
            return ln_add(ln_count, ln_m);
        }
        acc += mass;
        ln_count = ln_add(ln_count, cl.ln_size);
    }
    ln_count
}

fn check_epsilon(p: &Spectrum, params: &SmoothingParams) -> Result<()> {
    if params.epsilon >= p.total() {
        return Err(Error::Precondition(format!(
            "ε = {} is not below the total mass {}",
            params.epsilon,
            p.total()
        )));
    }
    Ok(())
}

/// Smoothed `H₀` or `Hmin` of a classical distribution over a trace-distance ball.
///
/// `Zero` removes the smallest atoms until at most `ε` of mass is gone; `Min`
/// shaves the largest atoms down to a common level `t` with
/// `Σ max(0, p_i - t) = ε`. Both are optimal: any subnormalized `q ≤ p` with
/// `Σ (p - q) ≤ ε` keeping `k` atoms retains at most the top-`k` mass, and any
/// `q` with `max q ≤ t` removes at least `Σ max(0, p_i - t)`.
pub fn h_smooth_classical(p: &Spectrum, params: SmoothingParams, which: SmoothKind) -> Result<EntropyValue> {
    check_epsilon(p, &params)?;
    match which {
        SmoothKind::Zero => {
            if params.epsilon == 0.0 {
                return EntropyValue::new(p.h_zero(DEFAULT_SUPPORT_TOL));
            }
            let classes = p
                .values()
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| Class { ln_p: v.ln(), ln_size: 0.0 })
                .collect();
            EntropyValue::new(ln_greedy_count(classes, p.total() - params.epsilon) / std::f64::consts::LN_2)
        }
        SmoothKind::Min => EntropyValue::new(-flattening_level(p.values(), params.epsilon).log2()),
    }
}

/// Level `t` with `Σ max(0, p_i - t) = ε` for `p` sorted in decreasing order.
fn flattening_level(p: &[f64], eps: f64) -> f64 {
    let mut head = 0.0;
    for k in 1..=p.len() {
        head += p[k - 1];
        let t = (head - eps) / k as f64;
        let next = p.get(k).copied().unwrap_or(0.0);
        if t >= next {
            return t;
        }
    }
    0.0
}

const MAX_TYPE_CLASSES: f64 = 5e6;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn compositions(n: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut dyn FnMut(&[usize])) {
    if parts == 1 {
        prefix.push(n);
        out(prefix);
        prefix.pop();
        return;
    }
    for k in 0..=n {
        prefix.push(k);
        compositions(n - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Smoothed `H₀` of `p^{⊗n}`, computed exactly by grouping sequences into type classes.
pub fn h_smooth_iid_classical(p: &Spectrum, n: usize, params: SmoothingParams) -> Result<EntropyValue> {
    if p.len() > 8 {
        return Err(Error::Precondition(format!("{} atoms exceeds the limit of 8", p.len())));
    }
    if n == 0 || n > 10_000 {
        return Err(Error::Precondition(format!("n = {n} is outside 1..=10000")));
    }
    let atoms: Vec<f64> = p.values().iter().copied().filter(|&v| v > 0.0).collect();
    let d = atoms.len();
    let total_n = p.total().powi(n as i32);
    if params.epsilon >= total_n {
        return Err(Error::Precondition(format!(
            "ε = {} is not below the total mass {total_n}",
            params.epsilon
        )));
    }
    let count = binomial(n + d - 1, d - 1);
    if count > MAX_TYPE_CLASSES {
        return Err(Error::Precondition(format!(
            "{count:.3e} type classes exceeds the limit of {MAX_TYPE_CLASSES:.0e}"
        )));
    }
    let mut ln_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_atoms: Vec<f64> = atoms.iter().map(|v| v.ln()).collect();
    let mut classes = Vec::with_capacity(count as usize);
    compositions(n, d, &mut Vec::with_capacity(d), &mut |ks: &[usize]| {
        let ln_p = ks.iter().zip(&ln_atoms).map(|(&k, l)| k as f64 * l).sum();
        let ln_size = ln_fact[n] - ks.iter().map(|&k| ln_fact[k]).sum::<f64>();
        classes.push(Class { ln_p, ln_size });
    });
    let target = total_n - params.epsilon;
    EntropyValue::new(ln_greedy_count(classes, target) / std::f64::consts::LN_2)
}

/// The spectrum `(½, 2^{-(n+1)}, …, 2^{-(n+1)})` with `2ⁿ` small atoms.
pub fn spike_and_flat(n: u32) -> Spectrum {
    let m = 1usize << n;
    let mut v = vec![0.5];
    v.extend(std::iter::repeat_n(0.5 / m as f64, m));
    Spectrum::new(v).expect("valid by construction")
}
