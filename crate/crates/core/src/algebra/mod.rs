//! Finite fields, cyclotomic integers and linear algebra over `F_q`.

pub mod cyclotomic;
pub mod field;
pub mod matrix;
pub mod poly;

use thiserror::Error;

pub use cyclotomic::CyclotomicSum;
pub use field::{extension, field, Extension, FieldElement, FiniteField};
pub use matrix::{MatrixFq, RowSpace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1, got {0}")]
    BadDegree(u32),
    #[error("field F_{p}^{k} exceeds the internal size limit")]
    TooLarge { p: u32, k: u32 },
    #[error("internal: {0}")]
    Internal(String),
}

/// `ψ(x) = ζ_p^{Tr(x)}`.
pub fn char_eval(f: &FiniteField, x: u32) -> CyclotomicSum {
    CyclotomicSum::zeta_pow(f.p(), f.trace(x) as i64)
}

/// `Tr_{F_q/F_p}(x)`.
pub fn trace_to_prime(f: &FiniteField, x: u32) -> u32 {
    f.trace(x)
}

/// Dot product over `F_q`.
pub fn dot(f: &FiniteField, a: &[u32], b: &[u32]) -> u32 {
    a.iter().zip(b).fold(0, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

/// Decodes `code` into `len` base-`q` digits, least significant first.
pub fn decode(code: u64, q: u32, len: usize) -> Vec<u32> {
    let mut c = code;
    (0..len)
        .map(|_| {
            let d = (c % q as u64) as u32;
            c /= q as u64;
            d
        })
        .collect()
}

/// Inverse of [`decode`].
pub fn encode(v: &[u32], q: u32) -> u64 {
    v.iter().rev().fold(0u64, |acc, &d| acc * q as u64 + d as u64)
}
