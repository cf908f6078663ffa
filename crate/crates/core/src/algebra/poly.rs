//! Dense univariate polynomials over a [`FiniteField`], stored low degree first.

use super::field::FiniteField;

pub type Poly = Vec<u32>;

pub fn trim(a: &mut Poly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

pub fn degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub fn add(f: &FiniteField, a: &[u32], b: &[u32]) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n).map(|i| f.add(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0))).collect();
    trim(&mut out);
    out
}

pub fn sub(f: &FiniteField, a: &[u32], b: &[u32]) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n).map(|i| f.sub(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0))).collect();
    trim(&mut out);
    out
}

pub fn scale(f: &FiniteField, a: &[u32], c: u32) -> Poly {
    let mut out: Poly = a.iter().map(|&x| f.mul(x, c)).collect();
    trim(&mut out);
    out
}

pub fn mul(f: &FiniteField, a: &[u32], b: &[u32]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    trim(&mut out);
    out
}

/// Quotient and remainder; panics on a zero divisor.
pub fn divrem(f: &FiniteField, a: &[u32], b: &[u32]) -> (Poly, Poly) {
    let db = degree(b).expect("division by zero polynomial");
    let inv_lead = f.inv(b[db]);
    let mut r: Poly = a.to_vec();
    trim(&mut r);
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut quo = vec![0u32; r.len() - db];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = f.mul(r[dr], inv_lead);
        let shift = dr - db;
        quo[shift] = c;
        for (i, &bc) in b.iter().enumerate().take(db + 1) {
            r[shift + i] = f.sub(r[shift + i], f.mul(c, bc));
        }
        trim(&mut r);
    }
    trim(&mut quo);
    (quo, r)
}

pub fn rem(f: &FiniteField, a: &[u32], b: &[u32]) -> Poly {
    divrem(f, a, b).1
}

pub fn monic(f: &FiniteField, a: &[u32]) -> Poly {
    match degree(a) {
        None => Vec::new(),
        Some(d) => scale(f, &a[..=d], f.inv(a[d])),
    }
}

pub fn gcd(f: &FiniteField, a: &[u32], b: &[u32]) -> Poly {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(f, &x, &y);
        x = y;
        y = r;
    }
    monic(f, &x)
}

pub fn derivative(f: &FiniteField, a: &[u32]) -> Poly {
    let mut out: Poly = a.iter().enumerate().skip(1).map(|(i, &c)| f.mul(c, f.from_int(i as i64))).collect();
    trim(&mut out);
    out
}

/// `base^e mod m` with `e` given as a u128.
pub fn powmod(f: &FiniteField, base: &[u32], mut e: u128, m: &[u32]) -> Poly {
    let mut result: Poly = rem(f, &[1], m);
    let mut b = rem(f, base, m);
    while e > 0 {
        if e & 1 == 1 {
            result = rem(f, &mul(f, &result, &b), m);
        }
        b = rem(f, &mul(f, &b, &b), m);
        e >>= 1;
    }
    result
}

pub fn eval(f: &FiniteField, a: &[u32], x: u32) -> u32 {
    a.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
}

/// Irreducibility over `f`: no factor of degree `j ≤ deg/2`, tested through
/// `gcd(a, x^{q^j} - x)`.
pub fn is_irreducible(f: &FiniteField, a: &[u32]) -> bool {
    let Some(n) = degree(a) else { return false };
    if n == 0 {
        return false;
    }
    let x: Poly = vec![0, 1];
    let mut xp = x.clone();
    for _ in 1..=n / 2 {
        xp = powmod(f, &xp, f.q() as u128, a);
        let g = gcd(f, a, &sub(f, &xp, &x));
        if degree(&g) != Some(0) {
            return false;
        }
    }
    true
}

pub fn is_squarefree(f: &FiniteField, a: &[u32]) -> bool {
    let g = gcd(f, a, &derivative(f, a));
    degree(&g) == Some(0)
}
