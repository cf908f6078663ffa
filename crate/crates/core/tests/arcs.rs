use std::sync::Arc;

use fqcircle_core::algebra::{char_eval, decode, dot, encode, field, CyclotomicSum};
use fqcircle_core::arcs::*;
use fqcircle_core::curve::{Curve, EffectiveDivisor};
use fqcircle_core::hypersurface::SymmetricForm;
use fqcircle_core::{qpow, Budget};
use num_bigint::BigInt;
use once_cell::sync::Lazy;
use proptest::prelude::*;

fn instance(curve: &str, n: usize, form: &str, e: u32) -> CircleInstance {
    let curve = Arc::new(Curve::parse(curve).unwrap());
    let form = SymmetricForm::parse(&curve.field, n, form).unwrap();
    CircleInstance::new(curve, form, e).unwrap()
}

fn conic() -> CircleInstance {
    instance("p=3 k=1 kind=hyperelliptic h=x^3+x+1", 2, "x0^2+x1^2+x2^2", 3)
}

struct Fixture {
    inst: CircleInstance,
    hist: PushforwardHistogram,
    spectrum: Spectrum,
}

fn fixture(inst: CircleInstance) -> Fixture {
    let b = Budget::default();
    let hist = PushforwardHistogram::build(&inst, &b).unwrap();
    let spectrum = Spectrum::compute(inst.field(), &hist, &b).unwrap();
    Fixture { inst, hist, spectrum }
}

static CONIC: Lazy<Fixture> = Lazy::new(|| fixture(conic()));

fn small_instances() -> Vec<CircleInstance> {
    vec![
        conic(),
        instance("p=5 k=1 kind=hyperelliptic h=x^3+x+1", 1, "x0^2+2*x1^2", 2),
        instance("p=5 k=1 kind=hyperelliptic h=x^3+x+1", 1, "x0*x1", 3),
        instance("p=3 k=1 kind=hyperelliptic h=x^5+2*x+1", 1, "x0^2+x1^2", 4),
        instance("p=3 k=2 kind=hyperelliptic h=x^3+x+1", 1, "x0^2+x1^2", 2),
        instance("p=5 kind=p1", 1, "x0^3+x0*x1^2+x1^3", 2),
        instance("p=7 kind=p1", 2, "x0^2+x1*x2", 1),
    ]
}

#[test]
fn fast_and_generic_histograms_agree() {
    let b = Budget::default();
    let mut fast_cases = 0;
    for inst in small_instances() {
        let generic = PushforwardHistogram::build_generic(&inst, &b).unwrap();
        if let Ok(fast) = PushforwardHistogram::build_quadratic(&inst) {
            assert_eq!(fast, generic, "{:?}", inst.curve);
            fast_cases += 1;
        }
        assert_eq!(generic.total(), inst.total_mass());
    }
    assert!(fast_cases >= 4);
}

#[test]
fn partition_identity_on_configured_instances() {
    let b = Budget::default();
    for inst in small_instances() {
        let f = fixture(inst);
        let expected = qpow(f.inst.q(), f.inst.dim_de() as u32) as i128 * f.hist.zeros() as i128;
        assert_eq!(f.spectrum.total().as_integer(), Some(expected), "{:?}", f.inst.curve);
        let c = census(&f.inst, &b).unwrap();
        assert_eq!(c.count_me, f.hist.zeros() as u128);
        assert!(c.count_bpf <= c.count_me);
    }
}

#[test]
fn trivial_character_sum_is_total_mass() {
    for inst in small_instances() {
        let f = fixture(inst);
        let (n, e, g) = (f.inst.n() as u32, f.inst.e, f.inst.genus());
        let expected = qpow(f.inst.q(), (n + 1) * (e - g + 1)) as i128;
        assert_eq!(f.spectrum.get(0).as_integer(), Some(expected));
        assert_eq!(f.spectrum.get(0).as_integer(), Some(f.inst.total_mass() as i128));
    }
}

/// On the conic instance every solution has the shape `t·P` with `P` an
/// affine point of the conic cone and `t ∈ P_3`.
#[test]
fn conic_census_is_the_degenerate_cone() {
    let b = Budget::default();
    let probe = dimension_probe(&conic(), &[1, 2], &b).unwrap();
    for row in &probe.rows {
        let q = row.q as u128;
        assert_eq!(row.count, (q.pow(3) - 1) * (q + 1) + 1);
        assert_eq!(row.mu_hat, 3);
    }
    let c = census(&conic(), &b).unwrap();
    assert_eq!(c.count_me, 105);
    assert_eq!(c.count_bpf, 0);
}

#[test]
fn minor_and_major_sums_partition_the_total() {
    let b = Budget::default();
    let f = &*CONIC;
    let tail = minor_arc_tail(&f.inst, &f.spectrum, &b).unwrap();
    assert_eq!(tail.major_count + tail.minor_count, 729);
    assert_eq!(tail.major_sum.add(&tail.minor_sum), f.spectrum.total());
}

#[test]
fn major_arc_regime_is_enforced() {
    let b = Budget::default();
    let f = &*CONIC;
    let divisors = enumerate_divisors(&f.inst.curve, &DivisorSearch::new(3, 1, 3)).unwrap();
    let big = divisors.iter().find(|z| z.degree() == 3).unwrap();
    assert!(matches!(major_arc_sum_check(&f.inst, &f.spectrum, big, &b), Err(ArcsError::MajorRegime { deg: 3, .. })));
    let small = divisors.iter().find(|z| z.degree() == 1).unwrap();
    assert!(multiplicativity_check(&f.inst, &f.spectrum, small, small).is_err());
}

#[test]
fn major_arc_sums_on_second_instance() {
    let b = Budget::default();
    let f = fixture(instance("p=5 k=1 kind=hyperelliptic h=x^3+x+1", 1, "x0^2+2*x1^2", 4));
    let bound = f.inst.major_bound() as u32;
    assert_eq!(bound, 3);
    let divisors = enumerate_divisors(&f.inst.curve, &DivisorSearch::new(bound, 2, bound)).unwrap();
    for z in &divisors {
        let check = major_arc_sum_check(&f.inst, &f.spectrum, z, &b).unwrap();
        assert!(check.holds, "{z:?}: {:?} vs {}", check.lhs, check.rhs);
    }
}

#[test]
fn divisor_enumeration_is_sorted_and_bounded() {
    let c = Curve::parse("p=3 k=1 kind=hyperelliptic h=x^3+x+1").unwrap();
    let search = DivisorSearch::new(4, 2, 3);
    let ds = enumerate_divisors(&c, &search).unwrap();
    assert_eq!(ds[0], EffectiveDivisor::zero());
    for w in ds.windows(2) {
        assert!(w[0].degree() <= w[1].degree());
        assert_ne!(w[0], w[1]);
    }
    for z in &ds {
        assert!(z.degree() <= 4);
        assert!(z.parts.iter().all(|(p, r)| p.degree <= 2 && *r <= 3));
    }
}

#[test]
fn classification_agrees_with_single_functional_search() {
    let f = &*CONIC;
    let search = DivisorSearch::new(4, 2, 4);
    let cls = ArcClassification::compute(&f.inst, &search, &Budget::default()).unwrap();
    for idx in (0..729).step_by(17) {
        let alpha = decode(idx as u64, 3, 6);
        let single = minimal_subscheme(&f.inst, &alpha, &search).unwrap();
        assert_eq!(single.deg_alpha, cls.degree(idx));
        assert_eq!(single.min_z.as_ref(), cls.min_divisor(idx));
        assert_eq!(single.kind, cls.kind(idx));
        if let Some(z) = &single.min_z {
            assert!(factors_through(&f.inst, &alpha, z).unwrap());
        }
    }
    assert_eq!(cls.degree(0), Some(0));
    assert_eq!(cls.major_indices().len() + cls.minor_indices().len(), 729);
}

#[test]
fn minimal_divisors_are_unique_in_range() {
    let b = Budget::default();
    let f = &*CONIC;
    assert_eq!(f.inst.uniqueness_bound(), f.inst.major_bound());
    let cls = ArcClassification::compute(&f.inst, &DivisorSearch::new(4, 4, 4), &b).unwrap();
    assert_eq!(cls.non_unique_below(f.inst.uniqueness_bound()), 0);
    // On P^1 with d = 2 the range stops one short of e + 1, and ties do occur there.
    let line = instance("p=5 k=1 kind=p1", 1, "x0*x1", 1);
    assert_eq!((line.uniqueness_bound(), line.major_bound()), (1, 2));
    let cls = ArcClassification::compute(&line, &DivisorSearch::new(2, 2, 2), &b).unwrap();
    assert_eq!(cls.non_unique_below(1), 0);
    assert!(cls.non_unique_below(2) > 0);
}

#[test]
fn artinian_formula_matches_enumeration_over_extension_fields() {
    let b = Budget::default();
    for (p, k, n, form) in [(3, 2, 1, "x0^2+x1^2"), (5, 1, 1, "x0*x1"), (7, 1, 1, "x0^3+2*x1^3"), (5, 1, 2, "x0^2+x1*x2")] {
        let kappa = field(p, k).unwrap();
        let f = SymmetricForm::parse(&kappa, n, form).unwrap();
        let cx = cone_points(&f, &kappa, &b).unwrap();
        for r in 1..=3 {
            let enumerated = artinian_count_enum(&f, &kappa, r, &b).unwrap();
            let formula = artinian_count_formula(&f, &kappa, r, &b).unwrap();
            assert_eq!(formula.count, BigInt::from(enumerated), "{form} over F_{} r = {r}", kappa.q());
            if r == 1 {
                assert_eq!(enumerated, cx);
            }
        }
    }
}

#[test]
fn artinian_formula_rejects_singular_cones() {
    let b = Budget::default();
    let kappa = field(5, 1).unwrap();
    let f = SymmetricForm::parse(&kappa, 2, "x0^2+x1^2").unwrap();
    assert!(matches!(artinian_count_formula(&f, &kappa, 2, &b), Err(ArcsError::SingularCone)));
    assert!(artinian_count_enum(&f, &kappa, 0, &b).is_err());
}

#[test]
fn budget_is_enforced() {
    let tight = Budget { max_enum: 100 };
    assert!(matches!(PushforwardHistogram::build(&conic(), &tight), Err(ArcsError::Budget(_))));
    assert!(census(&conic(), &tight).is_err());
}

#[test]
fn dual_functional_round_trip() {
    for idx in [0u64, 1, 100, 728] {
        let a = DualFunctional::from_index(6, 3, 6, idx);
        assert_eq!(a.index(3), idx);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectrum_matches_direct_sum(idx in 0usize..729) {
        let f = &*CONIC;
        let alpha = decode(idx as u64, 3, 6);
        prop_assert_eq!(f.spectrum.get(idx), f.hist.s_alpha(f.inst.field(), &alpha).unwrap());
        prop_assert_eq!(f.spectrum.at(&alpha), f.spectrum.get(idx));
    }

    /// `S(−α) = conj S(α)`.
    #[test]
    fn spectrum_galois_symmetry(idx in 0usize..729) {
        let f = &*CONIC;
        let fq = f.inst.field();
        let alpha = decode(idx as u64, 3, 6);
        let neg: Vec<u32> = alpha.iter().map(|&a| fq.neg(a)).collect();
        prop_assert_eq!(f.spectrum.at(&neg), f.spectrum.get(idx).conj());
    }

    /// Direct character sum over all of `P_e^{n+1}` on a tiny instance.
    #[test]
    fn histogram_sum_matches_tuple_sum(idx in 0u64..625) {
        let inst = instance("p=5 k=1 kind=hyperelliptic h=x^3+x+1", 1, "x0^2+2*x1^2", 2);
        let hist = PushforwardHistogram::build(&inst, &Budget::default()).unwrap();
        let fq = inst.field();
        let alpha = decode(idx, 5, inst.dim_de());
        let secs = inst.section_vectors();
        let mut direct = CyclotomicSum::zero(5);
        for x0 in &secs {
            for x1 in &secs {
                let v = inst.form.eval_sections(&inst.curve, inst.e, &[x0.clone(), x1.clone()]).unwrap();
                direct.add_assign(&char_eval(fq, dot(fq, &alpha, &v)));
            }
        }
        prop_assert_eq!(hist.s_alpha(fq, &alpha).unwrap(), direct);
        prop_assert_eq!(encode(&alpha, 5), idx);
    }
}
