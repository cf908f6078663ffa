//! Finite fields `F_{p^k}` with elements encoded as integers `Σ c_i p^i`.
//!
//! Prime fields use plain modular arithmetic; proper extensions use
//! logarithm, antilogarithm and Zech tables built once per `(p, k)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

use super::poly;
use super::AlgebraError;

/// Hard ceiling on internally constructed fields; table memory is `O(q)`.
pub const MAX_INTERNAL_ORDER: u64 = 1 << 22;

#[derive(Clone)]
pub struct FiniteField {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
    zech: Vec<u32>,
    trace: Vec<u32>,
}

const NONE: u32 = u32::MAX;

impl fmt::Debug for FiniteField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.k, self.modulus)
    }
}

impl PartialEq for FiniteField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.k == other.k
    }
}
impl Eq for FiniteField {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

type Cache<K, V> = Lazy<Mutex<HashMap<K, Arc<V>>>>;

static CACHE: Cache<(u32, u32), FiniteField> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared field handle for `F_{p^k}`.
pub fn field(p: u32, k: u32) -> Result<Arc<FiniteField>, AlgebraError> {
    if let Some(f) = CACHE.lock().unwrap().get(&(p, k)) {
        return Ok(f.clone());
    }
    let f = Arc::new(FiniteField::new(p, k)?);
    CACHE.lock().unwrap().insert((p, k), f.clone());
    Ok(f)
}

impl FiniteField {
    pub fn new(p: u32, k: u32) -> Result<Self, AlgebraError> {
        if !is_prime(p as u64) {
            return Err(AlgebraError::NotPrime(p));
        }
        if k == 0 {
            return Err(AlgebraError::BadDegree(k));
        }
        let q64 = (p as u64).checked_pow(k).unwrap_or(u64::MAX);
        if q64 > MAX_INTERNAL_ORDER {
            return Err(AlgebraError::TooLarge { p, k });
        }
        if k == 1 {
            let mut f =
                FiniteField { p, k, q: p, modulus: vec![0, 1], exp: Vec::new(), log: Vec::new(), zech: Vec::new(), trace: Vec::new() };
            f.trace = (0..p).collect();
            return Ok(f);
        }
        let fp = FiniteField::new(p, 1)?;
        let q = q64 as u32;
        let modulus = least_irreducible(&fp, k as usize);
        let mut f = FiniteField { p, k, q, modulus, exp: Vec::new(), log: Vec::new(), zech: Vec::new(), trace: Vec::new() };
        f.build_tables(&fp);
        Ok(f)
    }

    fn build_tables(&mut self, fp: &FiniteField) {
        let q = self.q as usize;
        let order = (q - 1) as u64;
        let factors = prime_factors(order);
        let mulpoly = |a: u32, b: u32| -> u32 {
            let pa = self.to_digits(a);
            let pb = self.to_digits(b);
            let prod = poly::rem(fp, &poly::mul(fp, &pa, &pb), &self.modulus);
            self.from_digits(&prod)
        };
        let powpoly = |a: u32, mut e: u64| -> u32 {
            let mut r = 1u32;
            let mut b = a;
            while e > 0 {
                if e & 1 == 1 {
                    r = mulpoly(r, b);
                }
                b = mulpoly(b, b);
                e >>= 1;
            }
            r
        };
        let gen = (2..self.q).find(|&g| factors.iter().all(|&r| powpoly(g, order / r) != 1)).expect("multiplicative group is cyclic");
        let mut exp = vec![0u32; q - 1];
        let mut log = vec![NONE; q];
        let mut cur = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = cur;
            log[cur as usize] = i as u32;
            cur = mulpoly(cur, gen);
        }
        let mut zech = vec![NONE; q - 1];
        for (i, z) in zech.iter_mut().enumerate() {
            let s = self.add_digits(exp[i], 1);
            if s != 0 {
                *z = log[s as usize];
            }
        }
        self.exp = exp;
        self.log = log;
        self.zech = zech;
        let trace: Vec<u32> = (0..self.q)
            .map(|x| {
                let mut acc = 0u32;
                let mut y = x;
                for _ in 0..self.k {
                    acc = self.add_digits(acc, y);
                    y = self.pow(y, self.p as u64);
                }
                debug_assert!(acc < self.p);
                acc
            })
            .collect();
        self.trace = trace;
    }

    fn add_digits(&self, mut a: u32, mut b: u32) -> u32 {
        let p = self.p;
        let mut out = 0;
        let mut place = 1;
        while a > 0 || b > 0 {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    pub fn to_digits(&self, mut a: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.k as usize);
        for _ in 0..self.k {
            out.push(a % self.p);
            a /= self.p;
        }
        poly::trim(&mut out);
        out
    }

    pub fn from_digits(&self, d: &[u32]) -> u32 {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c % self.p)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    /// Monic modulus, low degree first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    pub fn is_prime_field(&self) -> bool {
        self.k == 1
    }

    /// Embeds an integer through `Z → F_p ⊂ F_q`.
    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.k == 1 {
            let s = a + b;
            return if s >= self.p { s - self.p } else { s };
        }
        if a == 0 {
            return b;
        }
        if b == 0 {
            return a;
        }
        let n = self.q - 1;
        let la = self.log[a as usize];
        let lb = self.log[b as usize];
        let d = if lb >= la { lb - la } else { lb + n - la };
        let z = self.zech[d as usize];
        if z == NONE {
            return 0;
        }
        let e = la + z;
        self.exp[(if e >= n { e - n } else { e }) as usize]
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            return 0;
        }
        if self.k == 1 {
            return self.p - a;
        }
        if self.p == 2 {
            return a;
        }
        let n = self.q - 1;
        let e = self.log[a as usize] + n / 2;
        self.exp[(if e >= n { e - n } else { e }) as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.k == 1 {
            return ((a as u64 * b as u64) % self.p as u64) as u32;
        }
        let n = self.q - 1;
        let e = self.log[a as usize] + self.log[b as usize];
        self.exp[(if e >= n { e - n } else { e }) as usize]
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self, a: u32) -> u32 {
        assert!(a != 0, "inverse of zero");
        if self.k == 1 {
            return self.pow(a, (self.p - 2) as u64);
        }
        let n = self.q - 1;
        let l = self.log[a as usize];
        self.exp[((n - l) % n) as usize]
    }

    pub fn div(&self, a: u32, b: u32) -> u32 {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        if self.k > 1 && !self.log.is_empty() {
            let n = (self.q - 1) as u64;
            let l = self.log[a as usize] as u64;
            return self.exp[((l * (e % n)) % n) as usize];
        }
        let mut r = 1u32;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    /// Fixed multiplicative generator (for proper extensions the table base).
    pub fn generator(&self) -> u32 {
        if self.k > 1 {
            return self.exp[1];
        }
        let order = (self.p - 1) as u64;
        let factors = prime_factors(order);
        (1..self.p).find(|&g| factors.iter().all(|&r| self.pow(g, order / r) != 1) || self.p == 2).unwrap()
    }

    /// Absolute trace `Σ_{i<k} x^{p^i}` as a prime-field value.
    #[inline]
    pub fn trace(&self, x: u32) -> u32 {
        self.trace[x as usize]
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.q
    }

    pub fn is_square(&self, a: u32) -> bool {
        a == 0 || self.p == 2 || self.pow(a, ((self.q - 1) / 2) as u64) == 1
    }

    /// All square roots of `a` (0, 1 or 2 of them), ascending.
    pub fn sqrts(&self, a: u32) -> Vec<u32> {
        if a == 0 {
            return vec![0];
        }
        if !self.is_square(a) {
            return Vec::new();
        }
        let mut out = Vec::new();
        if self.k > 1 {
            let l = self.log[a as usize];
            debug_assert!(l.is_multiple_of(2));
            let r = self.exp[(l / 2) as usize];
            out.push(r);
            out.push(self.neg(r));
        } else {
            for x in 1..self.p {
                if self.mul(x, x) == a {
                    out.push(x);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Lexicographically least monic irreducible of degree `k`, scanning the
/// lower coefficients as a base-`p` integer with the top one most significant.
pub fn least_irreducible(fp: &FiniteField, k: usize) -> Vec<u32> {
    let p = fp.q() as u64;
    let count = p.pow(k as u32);
    for code in 0..count {
        let mut c = code;
        let mut cand = Vec::with_capacity(k + 1);
        for _ in 0..k {
            cand.push((c % p) as u32);
            c /= p;
        }
        cand.push(1);
        if poly::is_irreducible(fp, &cand) {
            return cand;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Convenience value type pairing an element with its field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    pub field: Arc<FiniteField>,
    pub value: u32,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coeffs())
    }
}

impl FieldElement {
    pub fn new(field: &Arc<FiniteField>, value: u32) -> Self {
        assert!(value < field.q());
        FieldElement { field: field.clone(), value }
    }
    /// Power-basis coordinates, length `k`.
    pub fn coeffs(&self) -> Vec<u32> {
        let mut d = self.field.to_digits(self.value);
        d.resize(self.field.k() as usize, 0);
        d
    }
    pub fn trace(&self) -> u32 {
        self.field.trace(self.value)
    }
    pub fn pow(&self, e: u64) -> Self {
        Self::new(&self.field, self.field.pow(self.value, e))
    }
    pub fn inv(&self) -> Self {
        Self::new(&self.field, self.field.inv(self.value))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:ident) => {
        impl std::ops::$tr for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                assert_eq!(*self.field, *rhs.field, "mixed fields");
                let v = self.field.$op(self.value, rhs.value);
                FieldElement { field: self.field, value: v }
            }
        }
    };
}
binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        let v = self.field.neg(self.value);
        FieldElement { field: self.field, value: v }
    }
}

/// `F_q ⊂ F_{q^m}` with coordinates over the basis `γ^0..γ^{m-1}`,
/// `γ` the fixed generator of the larger field.
pub struct Extension {
    pub base: Arc<FiniteField>,
    pub big: Arc<FiniteField>,
    pub m: u32,
    embed: Vec<u32>,
    coords: Vec<u32>,
    frob_base: Vec<u32>,
}

impl fmt::Debug for Extension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ⊂ {:?}", self.base, self.big)
    }
}

static EXT_CACHE: Cache<(u32, u32, u32), Extension> = Lazy::new(|| Mutex::new(HashMap::new()));

pub fn extension(base: &Arc<FiniteField>, m: u32) -> Result<Arc<Extension>, AlgebraError> {
    let key = (base.p(), base.k(), m);
    if let Some(e) = EXT_CACHE.lock().unwrap().get(&key) {
        return Ok(e.clone());
    }
    let e = Arc::new(Extension::new(base, m)?);
    EXT_CACHE.lock().unwrap().insert(key, e.clone());
    Ok(e)
}

impl Extension {
    fn new(base: &Arc<FiniteField>, m: u32) -> Result<Self, AlgebraError> {
        let big = field(base.p(), base.k() * m)?;
        let root = if base.k() == 1 || m == 1 {
            0
        } else {
            let modulus = base.modulus().to_vec();
            // coefficients of the modulus live in F_p, whose encoding is shared
            (0..big.q()).find(|&z| poly::eval(&big, &modulus, z) == 0).expect("modulus splits in the larger field")
        };
        let embed: Vec<u32> = (0..base.q())
            .map(|a| {
                if base.k() == 1 || m == 1 {
                    a
                } else {
                    let d = base.to_digits(a);
                    poly::eval(&big, &d, root)
                }
            })
            .collect();
        let gamma = if m == 1 { 1 } else { big.generator() };
        let mut coords = vec![NONE; (big.q() * m) as usize];
        let qb = base.q() as u64;
        let total = qb.pow(m);
        let powers: Vec<u32> = (0..m).map(|i| big.pow(gamma, i as u64)).collect();
        for code in 0..total {
            let mut c = code;
            let mut v = 0u32;
            let mut tuple = Vec::with_capacity(m as usize);
            for &pw in &powers {
                let a = (c % qb) as u32;
                c /= qb;
                tuple.push(a);
                v = big.add(v, big.mul(embed[a as usize], pw));
            }
            let slot = (v * m) as usize;
            if coords[slot] != NONE {
                return Err(AlgebraError::Internal("extension basis is not independent".into()));
            }
            coords[slot..slot + m as usize].copy_from_slice(&tuple);
        }
        let frob_base: Vec<u32> = (0..big.q()).map(|z| big.pow(z, base.q() as u64)).collect();
        Ok(Extension { base: base.clone(), big, m, embed, coords, frob_base })
    }

    #[inline]
    pub fn embed(&self, a: u32) -> u32 {
        self.embed[a as usize]
    }

    /// Coordinates of `z` over the base field.
    #[inline]
    pub fn coords(&self, z: u32) -> &[u32] {
        let s = (z * self.m) as usize;
        &self.coords[s..s + self.m as usize]
    }

    /// `z ↦ z^q`.
    #[inline]
    pub fn frobenius(&self, z: u32) -> u32 {
        self.frob_base[z as usize]
    }

    /// Degree over the base field of the subfield generated by `z`.
    pub fn degree_of(&self, z: u32) -> u32 {
        let mut y = self.frobenius(z);
        let mut d = 1;
        while y != z {
            y = self.frobenius(y);
            d += 1;
        }
        d
    }
}
