use std::sync::Arc;

use fqcircle_core::algebra::decode;
use fqcircle_core::arcs::{ArcClassification, CircleInstance, DivisorSearch, PushforwardHistogram, Spectrum};
use fqcircle_core::curve::Curve;
use fqcircle_core::hypersurface::SymmetricForm;
use fqcircle_core::minor_arc::*;
use fqcircle_core::Budget;
use proptest::prelude::*;

fn instance(curve: &str, n: usize, form: &str, e: u32) -> CircleInstance {
    let curve = Arc::new(Curve::parse(curve).unwrap());
    let form = SymmetricForm::parse(&curve.field, n, form).unwrap();
    CircleInstance::new(curve, form, e).unwrap()
}

fn conic() -> CircleInstance {
    instance("p=3 k=1 kind=hyperelliptic h=x^3+x+1", 2, "x0^2+x1^2+x2^2", 3)
}

fn cubic() -> CircleInstance {
    instance("p=5 k=1 kind=hyperelliptic h=x^3+x+1", 1, "x0^3+x0*x1^2+x1^3", 3)
}

fn cubic_line() -> CircleInstance {
    instance("p=5 kind=p1", 1, "x0^3+2*x0*x1^2+x1^3", 1)
}

fn alphas(inst: &CircleInstance, seed: u64, count: usize) -> Vec<Vec<u32>> {
    let size = (inst.q() as u64).pow(inst.dim_de() as u32);
    sample_indices(seed, count, size).into_iter().map(|i| decode(i, inst.q(), inst.dim_de())).collect()
}

#[test]
fn kernel_counts_match_brute_force_for_quadrics() {
    let b = Budget::default();
    let inst = conic();
    for alpha in alphas(&inst, 1, 40) {
        for s in 0..=2 {
            for ell in 0..=1 {
                assert_eq!(
                    n_s_ell(&inst, &alpha, s, ell, &b).unwrap(),
                    n_s_ell_brute(&inst, &alpha, s, ell, &b).unwrap(),
                    "s={s} ell={ell}"
                );
            }
        }
    }
}

#[test]
fn kernel_counts_match_brute_force_for_cubics() {
    let b = Budget::default();
    let inst = cubic_line();
    for alpha in alphas(&inst, 2, 12) {
        for ell in 0..=2 {
            assert_eq!(n_s_ell(&inst, &alpha, 1, ell, &b).unwrap(), n_s_ell_brute(&inst, &alpha, 1, ell, &b).unwrap());
        }
        assert_eq!(n_alpha(&inst, &alpha, &b).unwrap(), n_alpha_bitset(&inst, &alpha, &b).unwrap());
    }
    let inst = cubic();
    for alpha in alphas(&inst, 3, 3) {
        assert_eq!(n_alpha(&inst, &alpha, &b).unwrap(), n_alpha_bitset(&inst, &alpha, &b).unwrap());
        for s in 1..=2 {
            assert_eq!(n_s_ell(&inst, &alpha, s, 2, &b).unwrap(), n_s_ell_brute(&inst, &alpha, s, 2, &b).unwrap());
        }
    }
}

#[test]
fn shrinking_counts_are_monotone_in_ell() {
    let b = Budget::default();
    for inst in [conic(), cubic()] {
        let d = inst.d();
        for alpha in alphas(&inst, 4, 10) {
            for s in 1..=inst.e {
                let counts: Vec<u128> = (0..d).map(|ell| n_s_ell(&inst, &alpha, s, ell, &b).unwrap()).collect();
                assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
                assert!(counts[d as usize - 1] >= 1);
            }
        }
    }
}

#[test]
fn weyl_is_tight_at_the_trivial_functional() {
    let b = Budget::default();
    for inst in [conic(), cubic()] {
        let zero = vec![0u32; inst.dim_de()];
        let hist = PushforwardHistogram::build(&inst, &b).unwrap();
        let s = hist.s_alpha(inst.field(), &zero).unwrap();
        let n = n_alpha(&inst, &zero, &b).unwrap();
        assert_eq!(n, inst.total_mass().pow(inst.d() - 1));
        let w = weyl_check(&inst, &s, n);
        assert!(w.holds);
        for l in &w.lhs {
            assert!((l - w.rhs).abs() <= 1e-9 * w.rhs);
        }
    }
}

#[test]
fn weyl_holds_across_the_conic_circle() {
    let b = Budget::default();
    let inst = conic();
    let hist = PushforwardHistogram::build(&inst, &b).unwrap();
    let spectrum = Spectrum::compute(inst.field(), &hist, &b).unwrap();
    for i in (0..spectrum.len()).step_by(7) {
        let alpha = decode(i as u64, 3, 6);
        let n = n_alpha(&inst, &alpha, &b).unwrap();
        assert!(weyl_check(&inst, &spectrum.get(i), n).holds, "α index {i}");
    }
}

#[test]
fn k_ratios_and_shrink_on_conic_minor_arcs() {
    let b = Budget::default();
    let inst = conic();
    let cls = ArcClassification::compute(&inst, &DivisorSearch::new(4, 4, 4), &b).unwrap();
    for i in cls.minor_indices().into_iter().step_by(11) {
        let c = cls.class(i);
        let deg = c.deg_alpha.unwrap();
        let s = choose_s(deg, 2, 3, 1);
        let k = k_ratio_check(&inst, &c.alpha.coords, s, 0, &[]).unwrap();
        assert!(k.holds, "{k:?}");
        assert_eq!(k.ratio_exp2 % 2, 0);
        assert!(shrink_check(&inst, &c.alpha.coords, deg, &b).unwrap().holds);
        let l = psi_vanishing_check(&inst, &c.alpha.coords, deg, s, &b).unwrap();
        assert!(l.hypothesis);
        assert_eq!(l.counterexamples, 0);
    }
}

#[test]
fn k_ratio_rejects_bad_parameters() {
    let inst = cubic();
    let alpha = vec![1u32; inst.dim_de()];
    assert!(k_ratio_check(&inst, &alpha, 2, 2, &[]).is_err());
    assert!(k_ratio_check(&inst, &alpha, 1, 0, &[]).is_err());
    assert!(n_s_ell(&inst, &alpha, 1, 3, &Budget::default()).is_err());
}

#[test]
fn shrink_bound_exponents() {
    assert_eq!(shrink_bound_exp2(2, 2, 1, 2), 12);
    assert_eq!(shrink_bound_exp2(3, 1, 1, 2), 16);
    assert_eq!(shrink_bound_exp2(2, 1, 2, 3), 12 + 6);
}

#[test]
fn sampling_is_reproducible() {
    let a = sample_indices(42, 50, 1000);
    assert_eq!(a, sample_indices(42, 50, 1000));
    assert_ne!(a, sample_indices(43, 50, 1000));
    let mut sorted = a.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), 50);
    assert!(a.iter().all(|&x| x < 1000));
    assert_eq!(sample_indices(1, 10, 5), vec![0, 1, 2, 3, 4]);
    let inst = cubic();
    assert_eq!(sample_fixed_slots(&inst, &[1, 3], 9), sample_fixed_slots(&inst, &[1, 3], 9));
}

#[test]
fn scaling_probe_runs_on_cubic() {
    let b = Budget::default();
    let inst = cubic_line();
    let alpha = alphas(&inst, 5, 1).pop().unwrap();
    let probe = ns_scaling_probe(&inst, &alpha, 2, &b).unwrap();
    assert_eq!(probe.rows.len(), 2);
    assert_eq!(probe.rows[1].q, 25);
}

proptest! {
    #[test]
    fn chosen_s_meets_the_hypothesis(d in 2u32..6, g in 0u32..4, e in 1u32..40, frac in 0.0f64..1.0) {
        let lo = (e as i64 - 2 * g as i64 + 2).max(0) as u32;
        let hi = d * e / 2 + 1;
        let z = lo + ((hi.saturating_sub(lo)) as f64 * frac) as u32;
        let s = choose_s(z, d, e, g);
        prop_assert!(psi_vanishing_hypothesis(z, d, e, g, s));
        prop_assert!(s >= (2 * g).saturating_sub(1).max(2));
        prop_assert!(s == 2 || !psi_vanishing_hypothesis(z, d, e, g, s - 1) || s - 1 <= (2 * g).saturating_sub(2).max(1));
    }
}
