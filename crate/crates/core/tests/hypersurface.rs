use std::sync::Arc;

use fqcircle_core::algebra::{decode, field};
use fqcircle_core::curve::Curve;
use fqcircle_core::hypersurface::{HypersurfaceError, SymmetricForm};
use proptest::prelude::*;

fn monomials(nv: usize, d: u32) -> Vec<Vec<u32>> {
    (0..(d as u64 + 1).pow(nv as u32)).map(|c| decode(c, d + 1, nv)).filter(|ex| ex.iter().sum::<u32>() == d).collect()
}

fn sorted(mut v: Vec<(u32, Vec<u32>)>) -> Vec<(u32, Vec<u32>)> {
    v.sort_by(|a, b| a.1.cmp(&b.1));
    v
}

#[test]
fn tensor_round_trip_on_random_forms() {
    let mut state = 99u64;
    let mut next = |m: u32| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) % m as u64) as u32
    };
    for p in [5u32, 7] {
        let fp = field(p, 1).unwrap();
        for n in 1..=3usize {
            for d in [2u32, 3] {
                let monos = monomials(n + 1, d);
                for _ in 0..50 {
                    let terms: Vec<(u32, Vec<u32>)> = monos.iter().map(|ex| (next(p), ex.clone())).filter(|t| t.0 != 0).collect();
                    if terms.is_empty() {
                        continue;
                    }
                    let f = SymmetricForm::symmetrize(&fp, n, terms.clone()).unwrap();
                    assert_eq!(sorted(f.reexpand()), sorted(terms.clone()));
                    let g = SymmetricForm::parse(&fp, n, &f.to_spec()).unwrap();
                    assert_eq!(sorted(g.terms.clone()), sorted(terms));
                    assert_eq!(g.tensor, f.tensor);
                }
            }
        }
    }
}

#[test]
fn parse_errors() {
    let f5 = field(5, 1).unwrap();
    let f3 = field(3, 1).unwrap();
    assert_eq!(SymmetricForm::parse(&f5, 1, "x0^2+x1").unwrap_err(), HypersurfaceError::NotHomogeneous);
    assert!(matches!(SymmetricForm::parse(&f3, 1, "x0^3+x1^3"), Err(HypersurfaceError::CharTooSmall { p: 3, d: 3 })));
    assert!(SymmetricForm::parse(&f5, 1, "x0^2+x2^2").is_err());
    assert!(SymmetricForm::parse(&f5, 1, "x0^2+").is_err());
    assert!(SymmetricForm::parse(&f5, 1, "f = x0^2 - 2*x0*x1 + x1^2").is_ok());
}

#[test]
fn smoothness_of_sample_forms() {
    let f5 = field(5, 1).unwrap();
    let f3 = field(3, 1).unwrap();
    assert!(SymmetricForm::parse(&f3, 2, "x0^2+x1^2+x2^2").unwrap().smoothness_check(2).unwrap());
    assert!(SymmetricForm::parse(&f5, 1, "x0^3+x0*x1^2+x1^3").unwrap().smoothness_check(3).unwrap());
    assert!(SymmetricForm::parse(&f5, 1, "x0*x1").unwrap().smoothness_check(2).unwrap());
    assert!(!SymmetricForm::parse(&f5, 1, "x0^2").unwrap().smoothness_check(1).unwrap());
    assert!(!SymmetricForm::parse(&f5, 2, "x0^2+x1^2").unwrap().smoothness_check(1).unwrap());
    assert!(!SymmetricForm::parse(&f5, 1, "x0^2*x1").unwrap().smoothness_check(1).unwrap());
}

proptest! {
    #[test]
    fn euler_identity_and_series_at_order_one(v in prop::collection::vec(0u32..25, 3)) {
        let f25 = field(5, 2).unwrap();
        let f = SymmetricForm::parse(&f25, 2, "x0^3+2*x0*x1*x2+x1^2*x2+4*x2^3").unwrap();
        let lhs = (0..3).fold(0, |acc, j| f25.add(acc, f25.mul(v[j], f.eval_partial(&f25, j, &v))));
        prop_assert_eq!(lhs, f25.mul(3, f.eval_point(&f25, &v)));
        let series: Vec<Vec<u32>> = v.iter().map(|&x| vec![x]).collect();
        prop_assert_eq!(f.eval_series(&f25, &series, 1), vec![f.eval_point(&f25, &v)]);
    }

    #[test]
    fn eval_sections_is_homogeneous(xs in prop::collection::vec(prop::collection::vec(0u32..5, 3), 2), c in 0u32..5) {
        let curve = Curve::parse("p=5 k=1 kind=hyperelliptic h=x^3+x+1").unwrap();
        let f = SymmetricForm::parse(&curve.field, 1, "x0^3+x0*x1^2+x1^3").unwrap();
        let fq = &curve.field;
        let scaled: Vec<Vec<u32>> = xs.iter().map(|x| x.iter().map(|&a| fq.mul(c, a)).collect()).collect();
        let base = f.eval_sections(&curve, 3, &xs).unwrap();
        let c3 = fq.pow(c, 3);
        let expect: Vec<u32> = base.iter().map(|&a| fq.mul(c3, a)).collect();
        prop_assert_eq!(f.eval_sections(&curve, 3, &scaled).unwrap(), expect);
    }
}

fn random_slot(seed: &mut u64, nv: usize, dim: usize, q: u32) -> Vec<Vec<u32>> {
    (0..nv)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((*seed >> 33) % q as u64) as u32
                })
                .collect()
        })
        .collect()
}

fn add_slots(f: &fqcircle_core::FiniteField, a: &[Vec<u32>], b: &[Vec<u32>]) -> Vec<Vec<u32>> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(&u, &v)| f.add(u, v)).collect()).collect()
}

fn polarization_cases() -> Vec<(Arc<Curve>, SymmetricForm, u32)> {
    let c1 = Arc::new(Curve::parse("p=5 k=1 kind=hyperelliptic h=x^3+x+1").unwrap());
    let c2 = Arc::new(Curve::parse("p=7 k=1 kind=hyperelliptic h=x^5+x+3").unwrap());
    let c3 = Arc::new(Curve::parse("p=3 k=1 kind=hyperelliptic h=x^3+x+1").unwrap());
    vec![
        (c1.clone(), SymmetricForm::parse(&c1.field, 1, "x0^3+x0*x1^2+x1^3").unwrap(), 3),
        (c1.clone(), SymmetricForm::parse(&c1.field, 2, "x0^2+3*x1*x2").unwrap(), 2),
        (c2.clone(), SymmetricForm::parse(&c2.field, 2, "x0^3+2*x0*x1*x2+x2^3").unwrap(), 4),
        (c3.clone(), SymmetricForm::parse(&c3.field, 2, "x0^2+x1^2+x2^2").unwrap(), 3),
    ]
}

#[test]
fn polarization_is_multilinear_and_symmetric() {
    let mut seed = 7u64;
    for (curve, form, e) in polarization_cases() {
        let (nv, d, dim, q) = (form.nvars(), form.d as usize, curve.dim(e as i64), curve.q());
        for _ in 0..10 {
            let slots: Vec<Vec<Vec<u32>>> = (0..d).map(|_| random_slot(&mut seed, nv, dim, q)).collect();
            let extra = random_slot(&mut seed, nv, dim, q);
            let base = form.f_d(&curve, e, &slots).unwrap();
            let mut swapped = slots.clone();
            swapped.swap(0, d - 1);
            assert_eq!(form.f_d(&curve, e, &swapped).unwrap(), base);
            let mut alt = slots.clone();
            alt[0] = extra.clone();
            let mut sum = slots.clone();
            sum[0] = add_slots(&curve.field, &slots[0], &extra);
            let lhs = form.f_d(&curve, e, &sum).unwrap();
            let rhs: Vec<u32> = base.iter().zip(form.f_d(&curve, e, &alt).unwrap()).map(|(&a, b)| curve.field.add(a, b)).collect();
            assert_eq!(lhs, rhs);
        }
    }
}

/// `f_d(x¹,…,x^{d−1},x) = (−1)^d Σ_j Ψ_j(x¹,…,x^{d−1})·x_j`.
#[test]
fn polarization_factors_through_psi() {
    let mut seed = 11u64;
    for (curve, form, e) in polarization_cases() {
        let (nv, d, dim, q) = (form.nvars(), form.d as usize, curve.dim(e as i64), curve.q());
        let fq = &curve.field;
        let levels = vec![e; d - 1];
        for _ in 0..10 {
            let slots: Vec<Vec<Vec<u32>>> = (0..d).map(|_| random_slot(&mut seed, nv, dim, q)).collect();
            let fd = form.f_d(&curve, e, &slots).unwrap();
            let mut acc = vec![0u32; curve.dim((d as u32 * e) as i64)];
            for j in 0..nv {
                let psi = form.psi_j(&curve, j, &levels, &slots[..d - 1]).unwrap();
                let t = curve.cup((d as u32 - 1) * e, &psi, e, &slots[d - 1][j]).unwrap();
                for (a, b) in acc.iter_mut().zip(t) {
                    *a = fq.add(*a, b);
                }
            }
            if d % 2 == 1 {
                acc = acc.iter().map(|&a| fq.neg(a)).collect();
            }
            assert_eq!(fd, acc);
        }
    }
}

#[test]
fn diagonal_polarization_recovers_form() {
    // f_d(x,…,x) = (−1)^d d! f(x)
    let mut seed = 3u64;
    for (curve, form, e) in polarization_cases() {
        let (nv, d, dim, q) = (form.nvars(), form.d as usize, curve.dim(e as i64), curve.q());
        let fq = &curve.field;
        let x = random_slot(&mut seed, nv, dim, q);
        let fd = form.f_d(&curve, e, &vec![x.clone(); d]).unwrap();
        let fact = (1..=d as i64).product::<i64>() * if d % 2 == 1 { -1 } else { 1 };
        let expect: Vec<u32> = form.eval_sections(&curve, e, &x).unwrap().iter().map(|&a| fq.mul(fq.from_int(fact), a)).collect();
        assert_eq!(fd, expect);
    }
}
