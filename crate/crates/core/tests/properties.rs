use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlandauer::channel::ChoiMap;
use qlandauer::entropy::{
    h_max_cond, h_min, h_min_cond, h_smooth_classical, h_smooth_iid_classical, h_von_neumann, h_zero,
    h_zero_cond, zero_cond_witness, SmoothKind, SmoothingParams,
};
use qlandauer::landauer::{build_instance, work_bound};
use qlandauer::majorize::{absorbed_randomness, lambda_feasible, Spectrum};
use qlandauer::qmat::{
    identity, support_projector, tensor, trace, ComplexMatrix, DensityOperator, DEFAULT_SUPPORT_TOL,
};
use qlandauer::random::{haar_unitary, random_channel, random_isometry, random_spectrum, random_state};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn lambda_opt(sigma: &DensityOperator, channel: &ChoiMap) -> f64 {
    work_bound(&build_instance(sigma, channel).unwrap(), false).unwrap().lambda_opt
}

fn random_instance(r: &mut ChaCha8Rng, max_dim: usize) -> (DensityOperator, ChoiMap) {
    let d = r.random_range(2..=max_dim);
    let rank = r.random_range(1..=d);
    let k = r.random_range(1..=3);
    (random_state(r, d, rank), random_channel(r, d, d, k))
}

fn unitary_channel(u: &ComplexMatrix) -> ChoiMap {
    ChoiMap::from_kraus(std::slice::from_ref(u)).unwrap()
}

fn tensor_channels(a: &ChoiMap, b: &ChoiMap) -> ChoiMap {
    let ka = a.kraus(1e-12).unwrap();
    let kb = b.kraus(1e-12).unwrap();
    let mut out = Vec::new();
    for x in &ka {
        for y in &kb {
            out.push(tensor(x, y));
        }
    }
    ChoiMap::from_kraus(&out).unwrap()
}

fn spectrum_pair(r: &mut ChaCha8Rng) -> (Spectrum, Spectrum) {
    let dp = r.random_range(1..=5);
    let dq = r.random_range(1..=5);
    (random_spectrum(r, dp), random_spectrum(r, dq))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn work_cost_primal_and_dual_coincide(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (sigma, channel) = random_instance(&mut r, 3);
        let rep = work_bound(&build_instance(&sigma, &channel).unwrap(), false).unwrap();
        prop_assert!(rep.residuals.passed, "{:?}", rep.residuals);
        prop_assert!((rep.alpha_primal - rep.dual_value).abs() <= 1e-7);
        prop_assert!((rep.alpha_primal.log2() - rep.h_zero_cond_bits.bits).abs() <= 1e-7);
        prop_assert!((rep.lambda_opt + rep.work_min_kt_ln2).abs() == 0.0);
    }

    #[test]
    fn work_cost_is_basis_independent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (sigma, channel) = random_instance(&mut r, 3);
        let d = sigma.dim();
        let u = haar_unitary(&mut r, d);
        let v = haar_unitary(&mut r, d);
        let rotated = DensityOperator::from_computed(&(&u * sigma.matrix() * u.adjoint()), vec![d]).unwrap();
        let undo = unitary_channel(&u.adjoint());
        let conjugated = ChoiMap::compose(&unitary_channel(&v), &ChoiMap::compose(&channel, &undo).unwrap()).unwrap();
        let a = lambda_opt(&sigma, &channel);
        let b = lambda_opt(&rotated, &conjugated);
        prop_assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
    }

    #[test]
    fn work_cost_is_invariant_under_output_isometries(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (sigma, channel) = random_instance(&mut r, 3);
        let d = sigma.dim();
        let w = random_isometry(&mut r, d, d + 1);
        let embedded = ChoiMap::compose(&unitary_channel(&w), &channel).unwrap();
        let a = lambda_opt(&sigma, &channel);
        let b = lambda_opt(&sigma, &embedded);
        prop_assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
    }

    #[test]
    fn work_cost_is_additive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (s1, c1) = random_instance(&mut r, 2);
        let (s2, c2) = random_instance(&mut r, 2);
        let joint = s1.tensor(&s2);
        let joint = joint.with_dims(vec![joint.dim()]).unwrap();
        let a = lambda_opt(&s1, &c1) + lambda_opt(&s2, &c2);
        let b = lambda_opt(&joint, &tensor_channels(&c1, &c2));
        prop_assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
    }

    #[test]
    fn conditional_zero_entropy_is_variational(seed in any::<u64>()) {
        let mut r = rng(seed);
        let da = r.random_range(1..=3);
        let db = r.random_range(1..=3);
        let rank = r.random_range(1..=da * db);
        let rho = random_state(&mut r, da * db, rank).with_dims(vec![da, db]).unwrap();
        let pi = support_projector(rho.matrix(), DEFAULT_SUPPORT_TOL).unwrap();
        let value = |omega: &ComplexMatrix| trace(&(pi.matrix() * tensor(&identity(da), omega))).re;
        let w = zero_cond_witness(&rho, 1, DEFAULT_SUPPORT_TOL).unwrap();
        prop_assert!((value(&w.omega) - w.lambda_max).abs() <= 1e-9);
        for _ in 0..20 {
            let k = r.random_range(1..=db);
            let omega = random_state(&mut r, db, k);
            prop_assert!(value(omega.matrix()) <= w.lambda_max + 1e-9);
        }
        prop_assert!((h_zero_cond(&rho, 1).unwrap().bits - w.lambda_max.log2()).abs() <= 1e-12);
    }

    #[test]
    fn unconditional_entropy_chain_and_additivity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d1 = r.random_range(1..=4);
        let d2 = r.random_range(1..=4);
        let k1 = r.random_range(1..=d1);
        let k2 = r.random_range(1..=d2);
        let a = random_state(&mut r, d1, k1);
        let b = random_state(&mut r, d2, k2);
        let (hmin, hvn, h0) = (h_min(&a).unwrap().bits, h_von_neumann(&a).unwrap().bits, h_zero(&a, DEFAULT_SUPPORT_TOL).unwrap().bits);
        prop_assert!(hmin <= hvn + 1e-9 && hvn <= h0 + 1e-9);
        let ab = a.tensor(&b);
        let sum = |f: &dyn Fn(&DensityOperator) -> f64| f(&a) + f(&b) - f(&ab);
        prop_assert!(sum(&|s| h_min(s).unwrap().bits).abs() <= 1e-9);
        prop_assert!(sum(&|s| h_von_neumann(s).unwrap().bits).abs() <= 1e-9);
        prop_assert!(sum(&|s| h_zero(s, DEFAULT_SUPPORT_TOL).unwrap().bits).abs() <= 1e-9);
    }

    #[test]
    fn lambda_witness_is_a_valid_transfer(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = spectrum_pair(&mut r);
        let lam = absorbed_randomness(&p, &q).unwrap();
        let (ok, t) = lambda_feasible(&p, &q, lam - 1e-9).unwrap();
        prop_assert!(ok);
        let t = t.unwrap();
        let image = t.apply(&p);
        for (x, y) in image.iter().zip(q.values()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert!(t.col_sums().iter().all(|&s| s <= 1.0 + 1e-9));
        prop_assert!(t.row_sums().iter().all(|&s| s <= (-(lam - 1e-9)).exp2() + 1e-9));
        prop_assert!(!lambda_feasible(&p, &q, lam + 1e-3).unwrap().0);
    }

    #[test]
    fn uniform_ancillas_shift_absorbed_randomness(seed in any::<u64>(), m in 2usize..=4) {
        let mut r = rng(seed);
        let (p, q) = spectrum_pair(&mut r);
        let base = absorbed_randomness(&p, &q).unwrap();
        let u = Spectrum::uniform(m);
        let shift = (m as f64).log2();
        let out = absorbed_randomness(&p, &q.tensor(&u)).unwrap();
        let inp = absorbed_randomness(&p.tensor(&u), &q).unwrap();
        prop_assert!((out - (base + shift)).abs() <= 1e-7, "{out} vs {base} + {shift}");
        prop_assert!((inp - (base - shift)).abs() <= 1e-7, "{inp} vs {base} - {shift}");
    }

    #[test]
    fn smoothing_is_monotone_in_epsilon(seed in any::<u64>(), e1 in 0.0f64..0.5, de in 0.0f64..0.4) {
        let mut r = rng(seed);
        let d = r.random_range(1..=8);
        let p = random_spectrum(&mut r, d);
        let (a, b) = (SmoothingParams::new(e1).unwrap(), SmoothingParams::new(e1 + de).unwrap());
        let z = |s| h_smooth_classical(&p, s, SmoothKind::Zero).unwrap().bits;
        let m = |s| h_smooth_classical(&p, s, SmoothKind::Min).unwrap().bits;
        prop_assert!(z(b) <= z(a) + 1e-12);
        prop_assert!(m(b) + 1e-12 >= m(a));
        prop_assert!(z(a) <= p.h_zero(DEFAULT_SUPPORT_TOL) + 1e-12);
        prop_assert!(m(a) + 1e-12 >= p.h_min());
    }

    #[test]
    fn type_classes_match_explicit_tensor_powers(seed in any::<u64>(), n in 1usize..=6, eps in 0.0f64..0.3) {
        let mut r = rng(seed);
        let d = r.random_range(1..=3);
        let p = random_spectrum(&mut r, d);
        let mut power = Spectrum::new(vec![1.0]).unwrap();
        for _ in 0..n {
            power = power.tensor(&p);
        }
        let params = SmoothingParams::new(eps).unwrap();
        let grouped = h_smooth_iid_classical(&p, n, params).unwrap().bits;
        let explicit = h_smooth_classical(&power, params, SmoothKind::Zero).unwrap().bits;
        prop_assert!((grouped - explicit).abs() <= 1e-9, "{grouped} vs {explicit}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conditional_entropy_chain(seed in any::<u64>()) {
        let mut r = rng(seed);
        let da = r.random_range(1..=3);
        let db = r.random_range(1..=2);
        let rank = r.random_range(1..=da * db);
        let rho = random_state(&mut r, da * db, rank).with_dims(vec![da, db]).unwrap();
        let hmin = h_min_cond(&rho, 1).unwrap().bits;
        let hvn = h_von_neumann(&rho).unwrap().bits - h_von_neumann(&rho.reduce(&[1]).unwrap()).unwrap().bits;
        let hmax = h_max_cond(&rho, 1).unwrap().bits;
        let h0 = h_zero_cond(&rho, 1).unwrap().bits;
        prop_assert!(hmin <= hvn + 1e-5, "{hmin} > {hvn}");
        prop_assert!(hvn <= hmax + 1e-5, "{hvn} > {hmax}");
        prop_assert!(hmax <= h0 + 1e-5, "{hmax} > {h0}");
    }
}
