use fqcircle_core::algebra::poly;
use fqcircle_core::algebra::*;
use proptest::prelude::*;

fn fields() -> Vec<(u32, u32)> {
    vec![(2, 1), (3, 1), (5, 1), (7, 1), (2, 3), (3, 2), (5, 2), (3, 3), (2, 6)]
}

#[test]
fn character_is_additive_homomorphism_exhaustively() {
    for (p, k) in [(3, 1), (5, 1), (7, 1), (3, 2), (5, 2)] {
        let f = field(p, k).unwrap();
        for x in f.elements() {
            for y in f.elements() {
                assert_eq!(char_eval(&f, f.add(x, y)), char_eval(&f, x).mul(&char_eval(&f, y)));
            }
        }
    }
}

#[test]
fn character_sum_over_field_is_canonical_zero() {
    for (p, k) in fields() {
        let f = field(p, k).unwrap();
        let mut s = CyclotomicSum::zero(p);
        for x in f.elements() {
            s.add_assign(&char_eval(&f, x));
        }
        assert!(s.is_zero(), "q = {}", f.q());
        assert_eq!(s, CyclotomicSum::zero(p));
    }
}

#[test]
fn field_axioms_hold_exhaustively_on_small_fields() {
    for (p, k) in fields() {
        let f = field(p, k).unwrap();
        assert_eq!(f.elements().count() as u32, f.q());
        for a in f.elements() {
            assert_eq!(f.add(a, f.neg(a)), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a)), 1);
                assert_eq!(f.pow(a, f.q() as u64 - 1), 1);
            }
            for b in f.elements() {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.sub(f.add(a, b), b), a);
            }
        }
        let g = f.generator();
        let order = (1..f.q()).find(|&e| f.pow(g, e as u64) == 1).unwrap();
        assert_eq!(order, f.q() - 1);
    }
}

#[test]
fn trace_is_frobenius_orbit_sum() {
    let f = field(3, 3).unwrap();
    for x in f.elements() {
        let mut acc = 0;
        let mut y = x;
        for _ in 0..3 {
            acc = f.add(acc, y);
            y = f.pow(y, 3);
        }
        assert_eq!(acc, trace_to_prime(&f, x));
        assert!(acc < 3);
    }
}

#[test]
fn extension_embedding_is_a_field_homomorphism() {
    let base = field(3, 1).unwrap();
    let ext = extension(&base, 4).unwrap();
    let big = &ext.big;
    assert_eq!(big.q(), 81);
    for a in base.elements() {
        for b in base.elements() {
            assert_eq!(ext.embed(base.mul(a, b)), big.mul(ext.embed(a), ext.embed(b)));
            assert_eq!(ext.embed(base.add(a, b)), big.add(ext.embed(a), ext.embed(b)));
        }
    }
    let mut degree_counts = [0u32; 5];
    for z in big.elements() {
        degree_counts[ext.degree_of(z) as usize] += 1;
        assert_eq!(ext.frobenius(z), big.pow(z, 3));
    }
    // 3 elements of degree 1, 6 of degree 2, 72 of degree 4
    assert_eq!(degree_counts, [0, 3, 6, 0, 72]);
}

#[test]
fn squares_and_square_roots_agree() {
    for (p, k) in [(3, 1), (5, 1), (3, 2), (7, 1)] {
        let f = field(p, k).unwrap();
        for a in f.elements() {
            let roots = f.sqrts(a);
            assert_eq!(f.is_square(a), !roots.is_empty());
            for r in roots {
                assert_eq!(f.mul(r, r), a);
            }
        }
    }
}

#[test]
fn least_irreducible_is_irreducible() {
    let f3 = field(3, 1).unwrap();
    for k in 1..=5 {
        let m = least_irreducible_of(&f3, k);
        assert!(poly::is_irreducible(&f3, &m), "degree {k}");
    }
}

fn least_irreducible_of(f: &FiniteField, k: usize) -> Vec<u32> {
    fqcircle_core::algebra::field::least_irreducible(f, k)
}

#[test]
fn kernel_count_matches_enumeration_over_f3() {
    let f = field(3, 1).unwrap();
    let mut rng = 12345u64;
    let mut next = || {
        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((rng >> 33) % 3) as u32
    };
    for cols in 1..=6usize {
        for rows in 0..=5usize {
            let data: Vec<Vec<u32>> = (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            let m = MatrixFq::from_rows(&f, cols, &data);
            let brute = (0..3u64.pow(cols as u32)).filter(|&c| m.mul_vec(&decode(c, 3, cols)).iter().all(|&x| x == 0)).count();
            assert_eq!(brute, 3usize.pow(m.nullity() as u32));
            assert_eq!(m.rank() + m.nullity(), cols);
            for v in m.kernel_basis() {
                assert!(m.mul_vec(&v).iter().all(|&x| x == 0));
            }
        }
    }
}

fn small_cyclo(p: u32) -> impl Strategy<Value = CyclotomicSum> {
    prop::collection::vec(-50i128..50, p as usize).prop_map(move |v| CyclotomicSum::from_full(p, &v))
}

proptest! {
    #[test]
    fn cyclotomic_ring_laws(a in small_cyclo(5), b in small_cyclo(5), c in small_cyclo(5)) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(CyclotomicSum::from_full(5, &a.to_full()), a.clone());
        prop_assert_eq!(a.conj().conj(), a.clone());
    }

    #[test]
    fn cyclotomic_embeddings_are_multiplicative(a in small_cyclo(7), b in small_cyclo(7), j in 1u32..7) {
        let lhs = a.mul(&b).embedding_abs2(j);
        let rhs = a.embedding_abs2(j) * b.embedding_abs2(j);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
        let n = a.norm2_exact();
        prop_assert_eq!(n.clone(), a.mul(&a.conj()));
        let (re, _) = n.embedding(j);
        prop_assert!((re - a.embedding_abs2(j)).abs() <= 1e-9 * re.abs().max(1.0));
    }

    #[test]
    fn encode_decode_round_trip(code in 0u64..59049, q in prop::sample::select(vec![2u32, 3, 9])) {
        let len = 10;
        let code = code % (q as u64).pow(len as u32);
        prop_assert_eq!(encode(&decode(code, q, len), q), code);
    }

    #[test]
    fn polynomial_division_identity(a in prop::collection::vec(0u32..5, 0..9), b in prop::collection::vec(0u32..5, 1..6)) {
        let f = field(5, 1).unwrap();
        let mut b = b;
        *b.last_mut().unwrap() = 1;
        let (qt, r) = poly::divrem(&f, &a, &b);
        let back = poly::add(&f, &poly::mul(&f, &qt, &b), &r);
        let mut a_trim = a.clone();
        poly::trim(&mut a_trim);
        prop_assert_eq!(back, a_trim);
        prop_assert!(poly::degree(&r).is_none_or(|d| d < poly::degree(&b).unwrap()));
    }

    #[test]
    fn row_space_contains_combinations(rows in prop::collection::vec(prop::collection::vec(0u32..3, 5), 1..4), coeffs in prop::collection::vec(0u32..3, 4)) {
        let f = field(3, 1).unwrap();
        let m = MatrixFq::from_rows(&f, 5, &rows);
        let rs = m.row_space();
        let mut v = vec![0u32; 5];
        for (row, &c) in rows.iter().zip(&coeffs) {
            for (x, &y) in v.iter_mut().zip(row) {
                *x = f.add(*x, f.mul(c, y));
            }
        }
        prop_assert!(rs.contains(&v));
        prop_assert_eq!(rs.dim(), m.rank());
        prop_assert_eq!(rs.elements().len(), 3usize.pow(rs.dim() as u32));
    }

    #[test]
    fn solve_returns_a_solution(rows in prop::collection::vec(prop::collection::vec(0u32..5, 4), 1..5), x in prop::collection::vec(0u32..5, 4)) {
        let f = field(5, 1).unwrap();
        let m = MatrixFq::from_rows(&f, 4, &rows);
        let b = m.mul_vec(&x);
        let sol = m.solve(&b).expect("consistent system");
        prop_assert_eq!(m.mul_vec(&sol), b);
    }
}
