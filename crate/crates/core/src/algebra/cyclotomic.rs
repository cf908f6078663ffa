//! Exact elements of `Z[ζ_p]` in the basis `1, ζ, …, ζ^{p-2}`.

use std::fmt;

use serde::Serialize;

#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CyclotomicSum {
    p: u32,
    coords: Vec<i128>,
}

impl fmt::Debug for CyclotomicSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z[ζ_{}]{:?}", self.p, self.coords)
    }
}

impl CyclotomicSum {
    pub fn zero(p: u32) -> Self {
        assert!(p >= 2);
        CyclotomicSum { p, coords: vec![0; p as usize - 1] }
    }

    pub fn from_int(p: u32, c: i128) -> Self {
        let mut s = Self::zero(p);
        s.coords[0] = c;
        s
    }

    /// `ζ^k` for any integer `k`.
    pub fn zeta_pow(p: u32, k: i64) -> Self {
        let mut full = vec![0i128; p as usize];
        full[k.rem_euclid(p as i64) as usize] = 1;
        Self::from_full(p, &full)
    }

    /// Canonicalizes a length-`p` vector `Σ c_k ζ^k` by removing `c_{p-1}`
    /// through `1 + ζ + … + ζ^{p-1} = 0`.
    pub fn from_full(p: u32, full: &[i128]) -> Self {
        assert_eq!(full.len(), p as usize);
        let top = full[p as usize - 1];
        CyclotomicSum { p, coords: full[..p as usize - 1].iter().map(|&c| c - top).collect() }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coords(&self) -> &[i128] {
        &self.coords
    }

    /// Length-`p` representation with zero top coefficient.
    pub fn to_full(&self) -> Vec<i128> {
        let mut v = self.coords.clone();
        v.push(0);
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// The rational integer value if `self ∈ Z`.
    pub fn as_integer(&self) -> Option<i128> {
        if self.coords[1..].iter().all(|&c| c == 0) {
            Some(self.coords[0])
        } else {
            None
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.p, o.p);
        CyclotomicSum { p: self.p, coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        CyclotomicSum { p: self.p, coords: self.coords.iter().map(|a| -a).collect() }
    }

    pub fn scale(&self, c: i128) -> Self {
        CyclotomicSum { p: self.p, coords: self.coords.iter().map(|a| a * c).collect() }
    }

    pub fn add_assign(&mut self, o: &Self) {
        assert_eq!(self.p, o.p);
        for (a, b) in self.coords.iter_mut().zip(&o.coords) {
            *a += b;
        }
    }

    /// Adds `c·ζ^k` in place.
    pub fn add_zeta(&mut self, k: u32, c: i128) {
        let k = (k % self.p) as usize;
        if k + 1 == self.p as usize {
            for a in self.coords.iter_mut() {
                *a -= c;
            }
        } else {
            self.coords[k] += c;
        }
    }

    /// Product through convolution modulo `x^p - 1`.
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.p, o.p);
        let p = self.p as usize;
        let mut full = vec![0i128; p];
        for (i, &a) in self.coords.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coords.iter().enumerate() {
                full[(i + j) % p] += a * b;
            }
        }
        Self::from_full(self.p, &full)
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        let p = self.p as usize;
        let mut full = vec![0i128; p];
        for (i, &a) in self.coords.iter().enumerate() {
            full[(p - i) % p] += a;
        }
        Self::from_full(self.p, &full)
    }

    /// Image under `σ_j: ζ ↦ e^{2πij/p}`.
    pub fn embedding(&self, j: u32) -> (f64, f64) {
        let p = self.p as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (k, &c) in self.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let theta = 2.0 * std::f64::consts::PI * ((j as u64 * k as u64) % self.p as u64) as f64 / p;
            re += c as f64 * theta.cos();
            im += c as f64 * theta.sin();
        }
        (re, im)
    }

    /// `|σ_j(self)|²`, `1 ≤ j ≤ p-1`, in double precision.
    pub fn embedding_abs2(&self, j: u32) -> f64 {
        let (re, im) = self.embedding(j);
        re * re + im * im
    }

    /// Exact `self · conj(self)`, a totally positive element whose
    /// embeddings are the `|σ_j|²`.
    pub fn norm2_exact(&self) -> Self {
        self.mul(&self.conj())
    }
}
