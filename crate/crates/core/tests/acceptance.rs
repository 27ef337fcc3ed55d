//! Acceptance criteria, one line of output each. Runs without the libtest
//! harness so the summary is always printed.

use std::process::ExitCode;
use std::time::Instant;

use qlandauer::entropy::{
    h_max_cond, h_smooth_iid_classical, h_zero_cond, SmoothingParams,
};
use qlandauer::landauer::{
    build_from_purification, conversion_lambda_sdp, single_shot_gap_demo, special_erasure_with_memory, w_state_sm,
    work_bound,
};
use qlandauer::majorize::{
    absorbed_randomness, check_r_bounds, lambda_feasible, majorizes, weakly_submajorizes, Spectrum,
};
use qlandauer::qmat::{DensityOperator, DEFAULT_SUPPORT_TOL};
use qlandauer::random::{
    random_channel, random_pure, random_spectrum, random_spectrum_with_zeros, random_state, random_subunital_map,
};
use qlandauer::sdp::{alpha_feasibility, SdpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let secs = start.elapsed().as_secs_f64();
    println!(
        "criterion {id:>2} [{}] {name}: {} ({secs:.2} s)",
        if o.passed { "PASS" } else { "FAIL" },
        o.detail
    );
    o.passed
}

fn diag_state(s: &Spectrum) -> DensityOperator {
    DensityOperator::diagonal(s.values()).expect("normalized spectrum")
}

fn w_state() -> Outcome {
    let start = Instant::now();
    let v = special_erasure_with_memory(&w_state_sm()).expect("W state").bits;
    let direct = h_zero_cond(&w_state_sm(), 1).expect("W state").bits;
    let secs = start.elapsed().as_secs_f64();
    let err = (v - 1.5f64.log2()).abs().max((direct - 1.5f64.log2()).abs());
    outcome(err <= 1e-9 && secs < 1.0, format!("H0(S|M) = {v:.9}, error {err:.2e}"))
}

fn main_result() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_pair, mut worst_res) = (0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for i in 0..100 {
        let dx = rng.random_range(2..=3);
        let dr = rng.random_range(2..=3);
        let psi = random_pure(&mut rng, &[dx, dr]);
        let kraus = rng.random_range(1..=3);
        let ch = random_channel(&mut rng, dx, dx, kraus);
        let inst = build_from_purification(&psi, &ch).expect("valid instance");
        let r = work_bound(&inst, true).expect("work bound");
        let sdp = r.sdp_check.as_ref().expect("requested");
        let alpha = (-r.lambda_opt).exp2();
        let pair = [
            (r.alpha_primal - r.dual_value).abs(),
            (r.alpha_primal - sdp.alpha).abs(),
            (r.dual_value - sdp.alpha).abs(),
            (r.alpha_primal - alpha).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        worst_pair = worst_pair.max(pair);
        worst_res = worst_res.max(r.residuals.max_residual());
        if pair > 1e-5 || r.residuals.max_residual() > 1e-7 || sdp.status != SdpStatus::Optimal {
            failures.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 120.0,
        format!(
            "max pairwise diff {worst_pair:.2e}, max residual {worst_res:.2e}, failing instances {failures:?}"
        ),
    )
}

fn classical_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let d = rng.random_range(2..=4);
        let zp = rng.random_range(0..d);
        let zq = rng.random_range(0..d);
        let p = random_spectrum_with_zeros(&mut rng, d, zp);
        let q = random_spectrum_with_zeros(&mut rng, d, zq);
        let lp = absorbed_randomness(&p, &q).expect("LP");
        let sdp = conversion_lambda_sdp(&diag_state(&p), &diag_state(&q)).expect("SDP");
        worst = worst.max((lp - sdp).abs());
    }
    outcome(worst <= 1e-6, format!("max |λ_sdp - R_lp| = {worst:.2e}"))
}

fn named_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = [0.0f64; 4];
    for _ in 0..50 {
        let d = rng.random_range(2..=5);
        let n = rng.random_range(2..=5);
        let rho = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let sigma = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let tol = DEFAULT_SUPPORT_TOL;
        let cases = [
            absorbed_randomness(&Spectrum::pure(d), &rho).unwrap() - rho.h_min(),
            absorbed_randomness(&sigma, &Spectrum::pure(d)).unwrap() + sigma.h_zero(tol),
            absorbed_randomness(&Spectrum::uniform(n), &rho).unwrap() - (rho.h_min() - (n as f64).log2()),
            absorbed_randomness(&sigma, &Spectrum::uniform(n)).unwrap() - ((n as f64).log2() - sigma.h_zero(tol)),
        ];
        for (w, c) in worst.iter_mut().zip(cases) {
            *w = w.max(c.abs());
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max <= 1e-6,
        format!(
            "max errors |0>->ρ {:.1e}, σ->|0> {:.1e}, u_n->ρ {:.1e}, σ->u_n {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

/// `q = D p` for a random doubly stochastic `D` (convex mix of permutations).
fn mixed_down<R: Rng>(rng: &mut R, p: &Spectrum) -> Spectrum {
    let d = p.len();
    let mut q = vec![0.0; d];
    let weights: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let mut perm: Vec<usize> = (0..d).collect();
        for i in (1..d).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for (i, &j) in perm.iter().enumerate() {
            q[i] += w / total * p.values()[j];
        }
    }
    Spectrum::new(q).expect("mixture of permutations")
}

fn majorization_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = [0usize; 4];
    for _ in 0..1000 {
        let (d1, d2) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let p = random_spectrum(&mut rng, d1);
        let p2 = random_spectrum(&mut rng, d2);
        let q = mixed_down(&mut rng, &p);
        let q2 = mixed_down(&mut rng, &p2);
        if !(majorizes(&p, &q) && majorizes(&p2, &q2))
            || !majorizes(&p.tensor(&p2), &q.tensor(&q2))
            || !majorizes(&p.direct_sum(&p2), &q.direct_sum(&q2))
        {
            bad[0] += 1;
        }
    }
    for _ in 0..1000 {
        let d = rng.random_range(2..=5);
        let n = rng.random_range(2..=4);
        let p = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let q = if rng.random::<bool>() { mixed_down(&mut rng, &p) } else { random_spectrum(&mut rng, d) };
        let u = Spectrum::uniform(n);
        if weakly_submajorizes(&p, &q) != weakly_submajorizes(&p.tensor(&u), &q.tensor(&u)) {
            bad[1] += 1;
        }
    }
    for _ in 0..1000 {
        let d = rng.random_range(2..=4);
        let p = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let q = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let r = absorbed_randomness(&p, &q).unwrap();
        let lambda = r - rng.random_range(0.0..1.5);
        let (ok, witness) = lambda_feasible(&p, &q, lambda).unwrap();
        let rank_ok = (p.rank(1e-9) as f64) <= (-lambda).exp2() * q.rank(1e-9) as f64 + 1e-6;
        let witness_ok = witness.is_some_and(|t| {
            t.apply(&p).iter().zip(q.values()).all(|(a, b)| (a - b).abs() <= 1e-8)
        });
        if !ok || !rank_ok || !witness_ok {
            bad[2] += 1;
        }
    }
    for _ in 0..1000 {
        let d = rng.random_range(2..=4);
        let p = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let q = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        if check_r_bounds(&p, &q, 1e-6).is_err() {
            bad[3] += 1;
        }
    }
    outcome(
        bad.iter().all(|&b| b == 0),
        format!(
            "violations: closure {}, no-catalysis {}, rank law {}, R-bounds {} (of 1000 each)",
            bad[0], bad[1], bad[2], bad[3]
        ),
    )
}

fn spike_and_flat_gap() -> Outcome {
    let r = single_shot_gap_demo(10, 0.05).expect("n = 10");
    let expected = 1025f64.log2() - 1.0;
    let mut ok = r.identity_bound == 0.0
        && (r.replacement_bound - expected).abs() < 1e-9
        && r.iid_rate_identity == 0.0
        && r.iid_rate_replacement.abs() < 1e-12
        && (1.0..=1.2).contains(&r.h_min_smooth)
        && (9.0..=10.1).contains(&r.h_zero_smooth);
    let mut previous = f64::NEG_INFINITY;
    for n in 2..=12 {
        let g = single_shot_gap_demo(n, 0.05).expect("gap demo");
        let gap = g.replacement_bound - g.identity_bound;
        ok &= gap > previous && g.identity_bound.abs() < 1e-9;
        previous = gap;
    }
    outcome(
        ok,
        format!(
            "identity {:.6}, replacement {:.6} (expected {expected:.6}), iid {:.1}, h_min^eps {:.6}, h_zero^eps {:.6}, gap increasing for n = 2..12",
            r.identity_bound, r.replacement_bound, r.iid_rate_replacement, r.h_min_smooth, r.h_zero_smooth
        ),
    )
}

fn aep() -> Outcome {
    let start = Instant::now();
    let p = Spectrum::new(vec![0.75, 0.25]).unwrap();
    let v = h_smooth_iid_classical(&p, 200, SmoothingParams::new(0.05).unwrap()).unwrap().bits / 200.0;
    let secs = start.elapsed().as_secs_f64();
    let err = (v - p.h_shannon()).abs();
    outcome(err <= 0.1 && secs < 10.0, format!("rate {v:.6} vs H = {:.6}, error {err:.4}", p.h_shannon()))
}

fn entropy_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad_chain = 0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=8);
        let s = {
            let z = rng.random_range(0..d);
            random_spectrum_with_zeros(&mut rng, d, z)
        };
        let (hmin, h, h0) = (s.h_min(), s.h_shannon(), s.h_zero(DEFAULT_SUPPORT_TOL));
        if hmin > h + 1e-12 || h > h0 + 1e-12 {
            bad_chain += 1;
        }
    }
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let (da, db) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let rank = rng.random_range(1..=da * db);
        let rho = random_state(&mut rng, da * db, rank).with_dims(vec![da, db]).unwrap();
        let hmax = h_max_cond(&rho, 1).unwrap().bits;
        let h0 = h_zero_cond(&rho, 1).unwrap().bits;
        worst = worst.max(hmax - h0);
    }
    outcome(
        bad_chain == 0 && worst <= 1e-5,
        format!("chain violations {bad_chain}/1000, max Hmax(A|B) - H0(A|B) = {worst:.2e}"),
    )
}

fn dilation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_flags, mut worst_corner) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let k = rng.random_range(1..=4);
        let e = random_subunital_map(&mut rng, 2, 2, k);
        let big = e.dilate_to_unital().unwrap();
        let unital = (big.image_of_identity() - qlandauer::qmat::identity(4)).norm();
        let tp = (big.adjoint_image_of_identity() - qlandauer::qmat::identity(4)).norm();
        worst_flags = worst_flags.max(unital).max(tp);
        let corner = big.corner(2).unwrap();
        worst_corner = worst_corner.max((corner.choi() - e.choi()).norm());
    }
    outcome(
        worst_flags <= 1e-8 && worst_corner <= 1e-8,
        format!("max unital/TP residual {worst_flags:.2e}, max corner error {worst_corner:.2e}"),
    )
}

fn infeasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    let mut weakest = f64::INFINITY;
    for _ in 0..20 {
        let dx = rng.random_range(2..=3);
        let psi = random_pure(&mut rng, &[dx, dx]);
        let k = rng.random_range(1..=3);
        let ch = random_channel(&mut rng, dx, dx, k);
        let inst = build_from_purification(&psi, &ch).unwrap();
        let lambda = work_bound(&inst, false).unwrap().lambda_opt;
        let alpha = (-(lambda + 0.05)).exp2();
        let f = alpha_feasibility(inst.sigma_xr(), inst.rho_xr(), alpha).unwrap();
        let infeasible = f.feasibility_status == SdpStatus::Infeasible || f.min_violation > 1e-4;
        weakest = weakest.min(f.min_violation);
        if !infeasible {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{failures}/20 instances feasible; smallest phase-one violation {weakest:.3e}"),
    )
}

fn main() -> ExitCode {
    let results = [
        run(1, "W-state H0(S|M) = log2(3/2)", w_state),
        run(2, "closed-form primal, dual and SDP agree", main_result),
        run(3, "classical engine equals LP absorbed randomness", classical_oracle),
        run(4, "named closed forms for R", named_closed_forms),
        run(5, "majorization property suite", majorization_suite),
        run(6, "single-shot gap on the spike-and-flat state", spike_and_flat_gap),
        run(7, "AEP convergence of smoothed H0", aep),
        run(8, "entropy inequality chain", entropy_chain),
        run(9, "dilation round trip", dilation),
        run(10, "infeasibility beyond the optimal lambda", infeasibility),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
