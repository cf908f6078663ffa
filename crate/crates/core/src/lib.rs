//! Exact-arithmetic workbench for the function-field circle method on small
//! curves over finite fields and low-degree hypersurfaces.
//!
//! Layers, bottom up: [`algebra`] (fields, `Z[ζ_p]`, matrices), [`curve`]
//! (Riemann–Roch spaces and local data), [`hypersurface`] (forms, `Ψ_j`,
//! `f_d`), [`arcs`] (exponential sums, divisors, major arcs, Artinian counts),
//! [`minor_arc`] (Weyl differencing and shrinking counts) and
//! [`certificates`] (threshold and Fujita arithmetic).

pub mod algebra;
pub mod arcs;
pub mod certificates;
pub mod curve;
pub mod hypersurface;
pub mod minor_arc;

use thiserror::Error;

pub use algebra::{AlgebraError, CyclotomicSum, FieldElement, FiniteField, MatrixFq};
pub use arcs::ArcsError;
pub use certificates::CertificateError;
pub use curve::{ClosedPoint, Curve, CurveError, EffectiveDivisor, RiemannRochBasis};
pub use hypersurface::{HypersurfaceError, SymmetricForm};
pub use minor_arc::LabError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Hypersurface(#[from] HypersurfaceError),
    #[error(transparent)]
    Arcs(#[from] ArcsError),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

/// Enumeration budget shared by exhaustive operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_enum: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_enum: 1 << 30 }
    }
}

impl Budget {
    pub fn check(&self, what: &'static str, size: u128) -> Result<(), BudgetExceeded> {
        if size > self.max_enum {
            Err(BudgetExceeded { what, size, limit: self.max_enum })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("budget exceeded: {what} needs {size} > {limit}")]
pub struct BudgetExceeded {
    pub what: &'static str,
    pub size: u128,
    pub limit: u128,
}

/// `q^k` as `u128`, saturating.
pub fn qpow(q: u32, k: u32) -> u128 {
    (q as u128).checked_pow(k).unwrap_or(u128::MAX)
}
