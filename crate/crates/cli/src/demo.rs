use clap::Subcommand;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qlandauer::entropy::{h_min, h_smooth_iid_classical, h_zero, SmoothingParams};
use qlandauer::landauer::{
    build_from_purification, iid_rate, single_shot_gap_demo, special_decoupling, special_erasure_with_memory,
    w_state_sm, work_bound,
};
use qlandauer::majorize::Spectrum;
use qlandauer::qmat::DEFAULT_SUPPORT_TOL;
use qlandauer::random::{random_channel, random_pure, random_state};

use crate::report::{CliError, Report};

#[derive(Subcommand, Debug)]
pub enum Demo {
    /// Erasing S of the W state while keeping M.
    Wstate,
    /// Identity versus replacement on the spike-and-flat state, for n = 1..=N.
    Fig1 {
        #[arg(long, default_value_t = 10)]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Smoothed H₀ per copy of (p, 1-p)^{⊗n} against the Shannon entropy.
    Iid {
        #[arg(long, default_value_t = 0.75)]
        p: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Largest block length in the table.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Replacing a random state by another, discarding correlations.
    Decouple {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// A random instance solved in closed form and by the interior-point solver.
    Random {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

pub fn run(which: Demo) -> Result<Report, CliError> {
    match which {
        Demo::Wstate => wstate(),
        Demo::Fig1 { n, eps } => fig1(n, eps),
        Demo::Iid { p, eps, n } => iid(p, eps, n),
        Demo::Decouple { seed, dim } => decouple(seed, dim),
        Demo::Random { seed } => random(seed),
    }
}

fn wstate() -> Result<Report, CliError> {
    let h = special_erasure_with_memory(&w_state_sm())?;
    Ok(Report::new(json!({ "h_zero_cond_bits": h.bits, "work_min_kt_ln2": h.bits }))
        .line(format!("H₀(S|M) = {:.6} bits", h.bits)))
}

fn fig1(n_max: u32, eps: f64) -> Result<Report, CliError> {
    if !(1..=20).contains(&n_max) {
        return Err(CliError::Domain(format!("--n must lie in 1..=20, got {n_max}")));
    }
    let mut rows = Vec::new();
    let mut out = Report::new(json!(null)).line(format!(
        "{:>3} {:>8} {:>12} {:>12} {:>12} {:>12}",
        "n", "dim", "identity", "replacement", "Hmin^eps", "H0^eps"
    ));
    for n in 1..=n_max {
        let r = single_shot_gap_demo(n, eps)?;
        out = out.line(format!(
            "{:>3} {:>8} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            r.n, r.dim, r.identity_bound, r.replacement_bound, r.h_min_smooth, r.h_zero_smooth
        ));
        rows.push(r);
    }
    let last = rows.last().expect("n_max ≥ 1");
    out = out.line(format!(
        "i.i.d. rate: identity {:.6}, replacement {:.6}",
        last.iid_rate_identity, last.iid_rate_replacement
    ));
    Ok(out.with_json(json!({ "epsilon": eps, "rows": rows })))
}

fn iid(p: f64, eps: f64, n_max: usize) -> Result<Report, CliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::Domain(format!("--p must lie in [0, 1], got {p}")));
    }
    let spec = Spectrum::new(vec![p, 1.0 - p])?;
    let params = SmoothingParams::new(eps)?;
    let shannon = spec.h_shannon();
    let mut rows = Vec::new();
    let mut out = Report::new(json!(null)).line(format!("{:>6} {:>12}", "n", "H0^eps / n"));
    for n in [1, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000] {
        if n > n_max {
            break;
        }
        let rate = h_smooth_iid_classical(&spec, n, params)?.bits / n as f64;
        out = out.line(format!("{n:>6} {rate:>12.6}"));
        rows.push(json!({ "n": n, "rate": rate }));
    }
    out = out.line(format!("Shannon entropy H = {shannon:.6} bits"));
    Ok(out.with_json(json!({ "p": p, "epsilon": eps, "shannon": shannon, "rows": rows })))
}

fn decouple(seed: u64, dim: usize) -> Result<Report, CliError> {
    if !(1..=16).contains(&dim) {
        return Err(CliError::Domain(format!("--dim must lie in 1..=16, got {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank_sigma = rng.random_range(1..=dim);
    let rank_rho = rng.random_range(1..=dim);
    let sigma = random_state(&mut rng, dim, rank_sigma);
    let rho = random_state(&mut rng, dim, rank_rho);
    let work = special_decoupling(&sigma, &rho)?;
    let h0 = h_zero(&sigma, DEFAULT_SUPPORT_TOL)?;
    let hmin = h_min(&rho)?;
    let rate = iid_rate(&sigma, &rho)?;
    Ok(Report::new(json!({
        "seed": seed,
        "dim": dim,
        "h_zero_sigma": h0.bits,
        "h_min_rho": hmin.bits,
        "work_min_kt_ln2": work.bits,
        "iid_rate": rate.bits,
    }))
    .line(format!("H₀(σ) = {:.6} bits (rank {rank_sigma})", h0.bits))
    .line(format!("Hmin(ρ) = {:.6} bits", hmin.bits))
    .line(format!("single-shot work H₀(σ) - Hmin(ρ) = {:.6} kT ln 2", work.bits))
    .line(format!("i.i.d. rate H(σ) - H(ρ) = {:.6} kT ln 2", rate.bits)))
}

fn random(seed: u64) -> Result<Report, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dx = rng.random_range(2..=3);
    let dr = rng.random_range(2..=3);
    let kraus = rng.random_range(1..=3);
    let psi = random_pure(&mut rng, &[dx, dr]);
    let channel = random_channel(&mut rng, dx, dx, kraus);
    let inst = build_from_purification(&psi, &channel)?;
    let r = work_bound(&inst, true)?;
    let sdp = r.sdp_check.as_ref().expect("requested");
    Ok(Report::new(json!({
        "seed": seed,
        "dim_x": dx,
        "dim_r": dr,
        "kraus_rank": kraus,
        "lambda_opt": r.lambda_opt,
        "alpha_primal": r.alpha_primal,
        "dual_value": r.dual_value,
        "sdp_alpha": sdp.alpha,
        "sdp_status": sdp.status,
        "max_residual": r.residuals.max_residual(),
    }))
    .line(format!("d_X = {dx}, d_R = {dr}, Kraus rank {kraus}"))
    .line(format!("λ_opt = {:.6} bits", r.lambda_opt))
    .line(format!("closed-form α = {:.6}, dual value = {:.6}", r.alpha_primal, r.dual_value))
    .line(format!("SDP α = {:.6} ({:?}, {} iterations)", sdp.alpha, sdp.status, sdp.iterations))
    .line(format!("max certificate residual = {:.3e}", r.residuals.max_residual())))
}
