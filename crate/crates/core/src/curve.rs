//! Curves `P¹` and `y² = h(x)` with `deg h = 2g+1`, their Riemann–Roch
//! spaces `P_m = H⁰(C, O(m∞))`, cup products, closed points, local jets and
//! restriction maps to Artinian subschemes.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;
use thiserror::Error;

use crate::algebra::poly::{self, Poly};
use crate::algebra::{self, extension, field, AlgebraError, Extension, FiniteField, MatrixFq, RowSpace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("negative Riemann-Roch level {0}")]
    NegativeLevel(i64),
    #[error("invalid curve: {0}")]
    Invalid(String),
    #[error("cannot parse curve spec: {0}")]
    Parse(String),
    #[error("function has a pole at the point")]
    Pole,
    #[error("function is not in the requested Riemann-Roch space")]
    NotInSpace,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CurveKind {
    ProjectiveLine,
    Hyperelliptic { h: Poly },
}

type JetKey = (ClosedPoint, u32, u32);

pub struct Curve {
    pub field: Arc<FiniteField>,
    pub kind: CurveKind,
    pub genus: u32,
    cup_cache: Mutex<HashMap<(u32, u32), Arc<CupTable>>>,
    jet_cache: Mutex<HashMap<JetKey, Arc<Vec<Vec<u32>>>>>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.spec())
    }
}

/// A monomial `x^i y^j`, `j ∈ {0,1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RiemannRochBasis {
    pub m: u32,
    pub monomials: Vec<Monomial>,
    pub pole_orders: Vec<u32>,
}

impl RiemannRochBasis {
    pub fn dim(&self) -> usize {
        self.monomials.len()
    }
    pub fn index_of(&self, mono: Monomial) -> Option<usize> {
        self.monomials.iter().position(|&x| x == mono)
    }
}

/// `a(x) + b(x)·y` with polynomial `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionElem {
    pub a: Poly,
    pub b: Poly,
}

/// Sparse structure constants of `P_a × P_b → P_{a+b}`.
#[derive(Debug)]
pub struct CupTable {
    pub a: u32,
    pub b: u32,
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_out: usize,
    /// Entry `i·dim_b + j` lists `(k, c)` with `v_i·v_j = Σ c·v_k`.
    pub entries: Vec<Vec<(usize, u32)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Location {
    Infinity,
    /// Coordinates in `F_{q^deg}`; `y = 0` on `P¹`.
    Affine {
        x: u32,
        y: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ClosedPoint {
    pub location: Location,
    pub degree: u32,
}

impl ClosedPoint {
    pub const INFINITY: ClosedPoint = ClosedPoint { location: Location::Infinity, degree: 1 };

    fn sort_key(&self) -> (u32, u32, u32, u32) {
        match self.location {
            Location::Infinity => (0, 0, 0, 0),
            Location::Affine { x, y } => (self.degree, 1, x, y),
        }
    }
}

impl PartialOrd for ClosedPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ClosedPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct EffectiveDivisor {
    pub parts: Vec<(ClosedPoint, u32)>,
}

impl EffectiveDivisor {
    pub fn zero() -> Self {
        EffectiveDivisor { parts: Vec::new() }
    }
    pub fn point(p: ClosedPoint, r: u32) -> Self {
        EffectiveDivisor { parts: vec![(p, r)] }
    }
    /// Sorted, merged, zero multiplicities dropped.
    pub fn new(mut parts: Vec<(ClosedPoint, u32)>) -> Self {
        parts.sort();
        let mut out: Vec<(ClosedPoint, u32)> = Vec::new();
        for (p, r) in parts {
            if r == 0 {
                continue;
            }
            match out.last_mut() {
                Some((q, s)) if *q == p => *s += r,
                _ => out.push((p, r)),
            }
        }
        EffectiveDivisor { parts: out }
    }
    pub fn degree(&self) -> u32 {
        self.parts.iter().map(|(p, r)| p.degree * r).sum()
    }
    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }
    pub fn multiplicity(&self, p: &ClosedPoint) -> u32 {
        self.parts.iter().find(|(q, _)| q == p).map(|x| x.1).unwrap_or(0)
    }
    pub fn support(&self) -> Vec<ClosedPoint> {
        self.parts.iter().map(|x| x.0).collect()
    }
    /// Pointwise minimum.
    pub fn intersect(&self, o: &Self) -> Self {
        EffectiveDivisor::new(self.parts.iter().map(|(p, r)| (*p, (*r).min(o.multiplicity(p)))).collect())
    }
    /// Pointwise maximum (smallest subscheme containing both).
    pub fn union(&self, o: &Self) -> Self {
        let mut parts: Vec<(ClosedPoint, u32)> = self.parts.iter().map(|(p, r)| (*p, (*r).max(o.multiplicity(p)))).collect();
        for (p, r) in &o.parts {
            if self.multiplicity(p) == 0 {
                parts.push((*p, *r));
            }
        }
        EffectiveDivisor::new(parts)
    }
    pub fn sum(&self, o: &Self) -> Self {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&o.parts);
        EffectiveDivisor::new(parts)
    }
    pub fn is_disjoint(&self, o: &Self) -> bool {
        self.parts.iter().all(|(p, _)| o.multiplicity(p) == 0)
    }
    pub fn is_subdivisor_of(&self, o: &Self) -> bool {
        self.parts.iter().all(|(p, r)| o.multiplicity(p) >= *r)
    }
}

/// Truncated power series over a field, length `r`.
pub(crate) mod series {
    use crate::algebra::FiniteField;

    pub fn mul(f: &FiniteField, a: &[u32], b: &[u32], r: usize) -> Vec<u32> {
        let mut out = vec![0u32; r];
        for (i, &x) in a.iter().enumerate().take(r) {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate().take(r - i) {
                out[i + j] = f.add(out[i + j], f.mul(x, y));
            }
        }
        out
    }

    pub fn pow(f: &FiniteField, a: &[u32], e: u32, r: usize) -> Vec<u32> {
        let mut out = one(r);
        for _ in 0..e {
            out = mul(f, &out, a, r);
        }
        out
    }

    pub fn one(r: usize) -> Vec<u32> {
        let mut v = vec![0u32; r];
        if r > 0 {
            v[0] = 1;
        }
        v
    }

    /// Inverse of a unit series.
    pub fn inv(f: &FiniteField, a: &[u32], r: usize) -> Vec<u32> {
        let mut out = vec![0u32; r];
        if r == 0 {
            return out;
        }
        let a0 = f.inv(a[0]);
        out[0] = a0;
        for k in 1..r {
            let mut s = 0;
            for i in 1..=k.min(a.len() - 1) {
                s = f.add(s, f.mul(a[i], out[k - i]));
            }
            out[k] = f.neg(f.mul(s, a0));
        }
        out
    }

    /// `Σ c_k s^k` for a polynomial `c` and a series `s`.
    pub fn compose(f: &FiniteField, c: &[u32], s: &[u32], r: usize) -> Vec<u32> {
        let mut out = vec![0u32; r];
        for &ck in c.iter().rev() {
            out = mul(f, &out, s, r);
            if r > 0 {
                out[0] = f.add(out[0], ck);
            }
        }
        out
    }

    pub fn shift(a: &[u32], k: usize, r: usize) -> Vec<u32> {
        let mut out = vec![0u32; r];
        for i in 0..r.saturating_sub(k) {
            if i < a.len() {
                out[i + k] = a[i];
            }
        }
        out
    }
}

impl Curve {
    pub fn projective_line(field: &Arc<FiniteField>) -> Self {
        Curve {
            field: field.clone(),
            kind: CurveKind::ProjectiveLine,
            genus: 0,
            cup_cache: Mutex::new(HashMap::new()),
            jet_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn hyperelliptic(field: &Arc<FiniteField>, h: Poly) -> Result<Self, CurveError> {
        let mut h = h;
        poly::trim(&mut h);
        let deg = poly::degree(&h).unwrap_or(0);
        if field.p() == 2 {
            return Err(CurveError::Invalid("characteristic 2 is not supported".into()));
        }
        if deg.is_multiple_of(2) {
            return Err(CurveError::Invalid(format!("deg h = {deg} must be odd")));
        }
        if h[deg] != 1 {
            return Err(CurveError::Invalid("h must be monic".into()));
        }
        if !poly::is_squarefree(field, &h) {
            return Err(CurveError::Invalid("h is not squarefree".into()));
        }
        let genus = (deg as u32 - 1) / 2;
        Ok(Curve {
            field: field.clone(),
            kind: CurveKind::Hyperelliptic { h },
            genus,
            cup_cache: Mutex::new(HashMap::new()),
            jet_cache: Mutex::new(HashMap::new()),
        })
    }

    /// Parses `p=3 k=1 kind=hyperelliptic h=x^3+x+1` or `p=5 kind=p1`.
    pub fn parse(spec: &str) -> Result<Self, CurveError> {
        let mut p = None;
        let mut k = 1u32;
        let mut kind = None;
        let mut h = None;
        for tok in spec.split_whitespace() {
            let (key, val) = tok.split_once('=').ok_or_else(|| CurveError::Parse(format!("expected key=value, got {tok:?}")))?;
            match key {
                "p" => p = Some(val.parse::<u32>().map_err(|e| CurveError::Parse(e.to_string()))?),
                "k" => k = val.parse::<u32>().map_err(|e| CurveError::Parse(e.to_string()))?,
                "kind" => kind = Some(val.to_string()),
                "h" => h = Some(val.to_string()),
                _ => return Err(CurveError::Parse(format!("unknown key {key:?}"))),
            }
        }
        let p = p.ok_or_else(|| CurveError::Parse("missing p".into()))?;
        let f = field(p, k)?;
        match kind.as_deref() {
            Some("p1") => Ok(Curve::projective_line(&f)),
            Some("hyperelliptic") => {
                let h = h.ok_or_else(|| CurveError::Parse("missing h".into()))?;
                let hp = parse_univariate(&f, &h)?;
                Curve::hyperelliptic(&f, hp)
            }
            other => Err(CurveError::Parse(format!("unknown kind {other:?}"))),
        }
    }

    /// The same model over `F_{q^j}`.
    pub fn base_change(&self, j: u32) -> Result<Curve, CurveError> {
        let ext = extension(&self.field, j)?;
        match &self.kind {
            CurveKind::ProjectiveLine => Ok(Curve::projective_line(&ext.big)),
            CurveKind::Hyperelliptic { h } => {
                let hb = h.iter().map(|&c| ext.embed(c)).collect();
                Curve::hyperelliptic(&ext.big, hb)
            }
        }
    }

    pub fn spec(&self) -> String {
        let head = format!("p={} k={}", self.field.p(), self.field.k());
        match &self.kind {
            CurveKind::ProjectiveLine => format!("{head} kind=p1"),
            CurveKind::Hyperelliptic { h } => {
                format!("{head} kind=hyperelliptic h={}", format_univariate(h))
            }
        }
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    pub fn h(&self) -> Option<&Poly> {
        match &self.kind {
            CurveKind::Hyperelliptic { h } => Some(h),
            CurveKind::ProjectiveLine => None,
        }
    }

    /// Pole order of `x^i y^j` at ∞.
    pub fn weight(&self, mono: Monomial) -> u32 {
        match self.kind {
            CurveKind::ProjectiveLine => mono.i,
            CurveKind::Hyperelliptic { .. } => 2 * mono.i + (2 * self.genus + 1) * mono.j,
        }
    }

    pub fn rr_basis(&self, m: i64) -> Result<RiemannRochBasis, CurveError> {
        if m < 0 {
            return Err(CurveError::NegativeLevel(m));
        }
        let m = m as u32;
        let mut monos: Vec<Monomial> = Vec::new();
        match self.kind {
            CurveKind::ProjectiveLine => monos.extend((0..=m).map(|i| Monomial { i, j: 0 })),
            CurveKind::Hyperelliptic { .. } => {
                for j in 0..=1 {
                    let wy = (2 * self.genus + 1) * j;
                    if wy > m {
                        continue;
                    }
                    for i in 0..=(m - wy) / 2 {
                        monos.push(Monomial { i, j });
                    }
                }
            }
        }
        monos.sort_by_key(|&mm| self.weight(mm));
        let pole_orders = monos.iter().map(|&mm| self.weight(mm)).collect();
        Ok(RiemannRochBasis { m, monomials: monos, pole_orders })
    }

    /// `dim P_m`, zero for negative `m`.
    pub fn dim(&self, m: i64) -> usize {
        if m < 0 {
            0
        } else {
            self.rr_basis(m).map(|b| b.dim()).unwrap_or(0)
        }
    }

    pub fn monomial_elem(&self, mono: Monomial) -> FunctionElem {
        let mut xi = vec![0u32; mono.i as usize + 1];
        xi[mono.i as usize] = 1;
        if mono.j == 0 {
            FunctionElem { a: xi, b: Vec::new() }
        } else {
            FunctionElem { a: Vec::new(), b: xi }
        }
    }

    pub fn elem_from_coords(&self, basis: &RiemannRochBasis, coords: &[u32]) -> FunctionElem {
        let f = &self.field;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (mono, &c) in basis.monomials.iter().zip(coords) {
            if c == 0 {
                continue;
            }
            let target = if mono.j == 0 { &mut a } else { &mut b };
            let i = mono.i as usize;
            if target.len() <= i {
                target.resize(i + 1, 0);
            }
            target[i] = f.add(target[i], c);
        }
        poly::trim(&mut a);
        poly::trim(&mut b);
        FunctionElem { a, b }
    }

    pub fn elem_to_coords(&self, basis: &RiemannRochBasis, e: &FunctionElem) -> Result<Vec<u32>, CurveError> {
        let mut out = vec![0u32; basis.dim()];
        for (j, part) in [(0u32, &e.a), (1u32, &e.b)] {
            for (i, &c) in part.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let idx = basis.index_of(Monomial { i: i as u32, j }).ok_or(CurveError::NotInSpace)?;
                out[idx] = c;
            }
        }
        Ok(out)
    }

    pub fn elem_add(&self, u: &FunctionElem, v: &FunctionElem) -> FunctionElem {
        FunctionElem { a: poly::add(&self.field, &u.a, &v.a), b: poly::add(&self.field, &u.b, &v.b) }
    }

    pub fn elem_mul(&self, u: &FunctionElem, v: &FunctionElem) -> FunctionElem {
        let f = &self.field;
        let mut a = poly::mul(f, &u.a, &v.a);
        let b = poly::add(f, &poly::mul(f, &u.a, &v.b), &poly::mul(f, &u.b, &v.a));
        if let Some(h) = self.h() {
            let bb = poly::mul(f, &u.b, &v.b);
            a = poly::add(f, &a, &poly::mul(f, &bb, h));
        }
        FunctionElem { a, b }
    }

    /// Pole order at ∞ (`None` for the zero function).
    pub fn pole_order(&self, e: &FunctionElem) -> Option<u32> {
        let wa = poly::degree(&e.a).map(|d| self.weight(Monomial { i: d as u32, j: 0 }));
        let wb = poly::degree(&e.b).map(|d| self.weight(Monomial { i: d as u32, j: 1 }));
        wa.max(wb)
    }

    pub fn cup_table(&self, a: u32, b: u32) -> Arc<CupTable> {
        if let Some(t) = self.cup_cache.lock().unwrap().get(&(a, b)) {
            return t.clone();
        }
        let ba = self.rr_basis(a as i64).unwrap();
        let bb = self.rr_basis(b as i64).unwrap();
        let bo = self.rr_basis((a + b) as i64).unwrap();
        let mut entries = Vec::with_capacity(ba.dim() * bb.dim());
        for &u in &ba.monomials {
            for &v in &bb.monomials {
                let prod = self.elem_mul(&self.monomial_elem(u), &self.monomial_elem(v));
                let coords = self.elem_to_coords(&bo, &prod).expect("product of sections lies in the sum level");
                entries.push(coords.iter().enumerate().filter(|(_, &c)| c != 0).map(|(k, &c)| (k, c)).collect());
            }
        }
        let t = Arc::new(CupTable { a, b, dim_a: ba.dim(), dim_b: bb.dim(), dim_out: bo.dim(), entries });
        self.cup_cache.lock().unwrap().insert((a, b), t.clone());
        t
    }

    /// Cup product of coordinate vectors, `P_a × P_b → P_{a+b}`.
    pub fn cup(&self, a: u32, u: &[u32], b: u32, v: &[u32]) -> Result<Vec<u32>, CurveError> {
        let t = self.cup_table(a, b);
        if u.len() != t.dim_a {
            return Err(CurveError::Dimension { expected: t.dim_a, got: u.len() });
        }
        if v.len() != t.dim_b {
            return Err(CurveError::Dimension { expected: t.dim_b, got: v.len() });
        }
        Ok(t.apply(&self.field, u, v))
    }

    /// Closed points of degree `≤ max_degree`, ∞ first, then by degree and
    /// Frobenius-minimal coordinates.
    pub fn enumerate_closed_points(&self, max_degree: u32) -> Result<Vec<ClosedPoint>, CurveError> {
        let mut out = vec![ClosedPoint::INFINITY];
        for deg in 1..=max_degree {
            let ext = extension(&self.field, deg)?;
            let big = &ext.big;
            match &self.kind {
                CurveKind::ProjectiveLine => {
                    for x in 0..big.q() {
                        if ext.degree_of(x) != deg {
                            continue;
                        }
                        if orbit_min(&ext, x, 0) == (x, 0) {
                            out.push(ClosedPoint { location: Location::Affine { x, y: 0 }, degree: deg });
                        }
                    }
                }
                CurveKind::Hyperelliptic { h } => {
                    let hb: Vec<u32> = h.iter().map(|&c| ext.embed(c)).collect();
                    for x in 0..big.q() {
                        let v = poly::eval(big, &hb, x);
                        for y in big.sqrts(v) {
                            if pair_degree(&ext, x, y) != deg {
                                continue;
                            }
                            if orbit_min(&ext, x, y) == (x, y) {
                                out.push(ClosedPoint { location: Location::Affine { x, y }, degree: deg });
                            }
                        }
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// `#C(F_q)` by direct count of affine solutions plus ∞.
    pub fn rational_point_count(&self) -> u64 {
        let f = &self.field;
        match &self.kind {
            CurveKind::ProjectiveLine => f.q() as u64 + 1,
            CurveKind::Hyperelliptic { h } => {
                let mut n = 1u64;
                for x in 0..f.q() {
                    let v = poly::eval(f, h, x);
                    for y in 0..f.q() {
                        if f.mul(y, y) == v {
                            n += 1;
                        }
                    }
                }
                n
            }
        }
    }

    fn point_ext(&self, pt: &ClosedPoint) -> Result<Arc<Extension>, CurveError> {
        Ok(extension(&self.field, pt.degree)?)
    }

    /// Jets of the basis of `P_m` at `pt` to precision `r`, over `κ(pt)`.
    /// At ∞ sections are trivialized by `t^m`.
    pub fn basis_jets(&self, pt: &ClosedPoint, m: u32, r: u32) -> Result<Arc<Vec<Vec<u32>>>, CurveError> {
        let key = (*pt, m, r);
        if let Some(j) = self.jet_cache.lock().unwrap().get(&key) {
            return Ok(j.clone());
        }
        let basis = self.rr_basis(m as i64)?;
        let ext = self.point_ext(pt)?;
        let big = &ext.big;
        let ru = r as usize;
        let jets: Vec<Vec<u32>> = match (&self.kind, pt.location) {
            (CurveKind::ProjectiveLine, Location::Infinity) => basis
                .monomials
                .iter()
                .map(|mono| {
                    let mut v = vec![0u32; ru];
                    let k = (m - mono.i) as usize;
                    if k < ru {
                        v[k] = 1;
                    }
                    v
                })
                .collect(),
            (CurveKind::Hyperelliptic { h }, Location::Infinity) => {
                let g = self.genus;
                let f = big.as_ref();
                let deg = h.len() - 1;
                // H(u) = u^{2g+1} h(1/u)
                let hrev: Vec<u32> = (0..=deg).map(|k| h[deg - k]).collect();
                let mut u = vec![0u32; ru];
                for _ in 0..=ru {
                    let hu = series::compose(f, &hrev, &u, ru);
                    u = series::shift(&hu, 2, ru);
                }
                let hu = series::compose(f, &hrev, &u, ru);
                let w = series::inv(f, &hu, ru);
                basis
                    .monomials
                    .iter()
                    .map(|mono| {
                        let wt = self.weight(*mono);
                        let wp = series::pow(f, &w, mono.i + g * mono.j, ru);
                        series::shift(&wp, (m - wt) as usize, ru)
                    })
                    .collect()
            }
            (CurveKind::ProjectiveLine, Location::Affine { x, .. }) => {
                let xs = vec![x, 1];
                basis.monomials.iter().map(|mono| series::pow(big, &xs, mono.i, ru)).collect()
            }
            (CurveKind::Hyperelliptic { h }, Location::Affine { x, y }) => {
                let hb: Vec<u32> = h.iter().map(|&c| ext.embed(c)).collect();
                // h(x0 + t) as a polynomial in t
                let shifted = taylor_shift(big, &hb, x);
                let (xser, yser) = if y != 0 {
                    let mut c = vec![0u32; ru];
                    if ru > 0 {
                        c[0] = y;
                    }
                    let inv2y = big.inv(big.add(y, y));
                    for k in 1..ru {
                        let mut s = *shifted.get(k).unwrap_or(&0);
                        for i in 1..k {
                            s = big.sub(s, big.mul(c[i], c[k - i]));
                        }
                        c[k] = big.mul(s, inv2y);
                    }
                    let mut xs = vec![0u32; ru];
                    if ru > 0 {
                        xs[0] = x;
                    }
                    if ru > 1 {
                        xs[1] = 1;
                    }
                    (xs, c)
                } else {
                    // t = y, x = x0 + w with H(w) = t²
                    let h1 = shifted[1];
                    let inv_h1 = big.inv(h1);
                    let mut higher = shifted.clone();
                    higher[0] = 0;
                    higher[1] = 0;
                    let mut w = vec![0u32; ru];
                    let t2 = series::shift(&series::one(ru), 2, ru);
                    for _ in 0..=ru {
                        let rest = series::compose(big, &higher, &w, ru);
                        let num: Vec<u32> = t2.iter().zip(&rest).map(|(&a, &b)| big.sub(a, b)).collect();
                        w = num.iter().map(|&c| big.mul(c, inv_h1)).collect();
                    }
                    let mut xs = w;
                    if ru > 0 {
                        xs[0] = big.add(xs[0], x);
                    }
                    let ys = series::shift(&series::one(ru), 1, ru);
                    (xs, ys)
                };
                basis
                    .monomials
                    .iter()
                    .map(|mono| {
                        let xp = series::pow(big, &xser, mono.i, ru);
                        if mono.j == 1 {
                            series::mul(big, &xp, &yser, ru)
                        } else {
                            xp
                        }
                    })
                    .collect()
            }
        };
        let jets = Arc::new(jets);
        self.jet_cache.lock().unwrap().insert(key, jets.clone());
        Ok(jets)
    }

    /// Jet of a section given by coordinates in `P_m`.
    pub fn local_expand_coords(&self, pt: &ClosedPoint, m: u32, coords: &[u32], r: u32) -> Result<Vec<u32>, CurveError> {
        let jets = self.basis_jets(pt, m, r)?;
        if coords.len() != jets.len() {
            return Err(CurveError::Dimension { expected: jets.len(), got: coords.len() });
        }
        let ext = self.point_ext(pt)?;
        let big = &ext.big;
        let mut out = vec![0u32; r as usize];
        for (jet, &c) in jets.iter().zip(coords) {
            if c == 0 {
                continue;
            }
            let ce = ext.embed(c);
            for (o, &v) in out.iter_mut().zip(jet) {
                *o = big.add(*o, big.mul(ce, v));
            }
        }
        Ok(out)
    }

    /// Jet of a function regular at an affine point (or, at ∞, of a
    /// section of `O(m∞)` with `m` its pole order).
    pub fn local_expand(&self, e: &FunctionElem, pt: &ClosedPoint, r: u32) -> Result<Vec<u32>, CurveError> {
        let m = self.pole_order(e).unwrap_or(0);
        if pt.location == Location::Infinity && m > 0 {
            return Err(CurveError::Pole);
        }
        let basis = self.rr_basis(m as i64)?;
        let coords = self.elem_to_coords(&basis, e)?;
        self.local_expand_coords(pt, m, &coords, r)
    }

    /// Matrix of `P_m → ⊕ O_{x_i}/m^{r_i}` over `F_q`, one row per jet
    /// coefficient and base-field coordinate.
    pub fn restriction_matrix(&self, m: i64, z: &EffectiveDivisor) -> Result<MatrixFq, CurveError> {
        let dim = self.dim(m);
        let mut mat = MatrixFq::zeros(&self.field, 0, dim);
        if dim == 0 {
            for _ in 0..z.degree() {
                mat.push_row(&[]);
            }
            return Ok(mat);
        }
        let m = m as u32;
        for (pt, r) in &z.parts {
            let jets = self.basis_jets(pt, m, *r)?;
            let ext = self.point_ext(pt)?;
            for k in 0..*r as usize {
                for c in 0..pt.degree as usize {
                    let row: Vec<u32> = jets.iter().map(|jet| ext.coords(jet[k])[c]).collect();
                    mat.push_row(&row);
                }
            }
        }
        Ok(mat)
    }

    /// Basis of `H⁰(O(m∞)(-Z))`.
    pub fn vanishing_subspace(&self, m: i64, z: &EffectiveDivisor) -> Result<Vec<Vec<u32>>, CurveError> {
        Ok(self.restriction_matrix(m, z)?.kernel_basis())
    }

    /// Row space of the restriction matrix: the functionals factoring through `Z`.
    pub fn factoring_space(&self, m: i64, z: &EffectiveDivisor) -> Result<RowSpace, CurveError> {
        Ok(self.restriction_matrix(m, z)?.row_space())
    }

    /// Does the section vanish at the closed point?
    pub fn vanishes_at(&self, m: u32, coords: &[u32], pt: &ClosedPoint) -> Result<bool, CurveError> {
        Ok(self.local_expand_coords(pt, m, coords, 1)?[0] == 0)
    }
}

impl CupTable {
    pub fn apply(&self, f: &FiniteField, u: &[u32], v: &[u32]) -> Vec<u32> {
        let mut out = vec![0u32; self.dim_out];
        for (i, &a) in u.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in v.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let ab = f.mul(a, b);
                for &(k, c) in &self.entries[i * self.dim_b + j] {
                    out[k] = f.add(out[k], f.mul(ab, c));
                }
            }
        }
        out
    }
}

fn pair_degree(ext: &Extension, x: u32, y: u32) -> u32 {
    let (mut a, mut b) = (ext.frobenius(x), ext.frobenius(y));
    let mut d = 1;
    while (a, b) != (x, y) {
        a = ext.frobenius(a);
        b = ext.frobenius(b);
        d += 1;
    }
    d
}

fn orbit_min(ext: &Extension, x: u32, y: u32) -> (u32, u32) {
    let mut best = (x, y);
    let (mut a, mut b) = (ext.frobenius(x), ext.frobenius(y));
    while (a, b) != (x, y) {
        best = best.min((a, b));
        a = ext.frobenius(a);
        b = ext.frobenius(b);
    }
    best
}

/// Coefficients of `h(x0 + t)` in `t`.
fn taylor_shift(f: &FiniteField, h: &[u32], x0: u32) -> Vec<u32> {
    let lin = vec![x0, 1];
    let mut out: Vec<u32> = Vec::new();
    for &c in h.iter().rev() {
        out = poly::mul(f, &out, &lin);
        out = poly::add(f, &out, &[c]);
    }
    out.resize(h.len().max(2), 0);
    out
}

/// Parses a univariate polynomial in `x` such as `x^3+2x+1` or `x^5 - x`.
pub fn parse_univariate(f: &FiniteField, s: &str) -> Result<Poly, CurveError> {
    let terms = crate::hypersurface::parse_terms(s, |name| if name == "x" { Some(0) } else { None })
        .map_err(|e| CurveError::Parse(e.to_string()))?;
    let mut out: Poly = Vec::new();
    for (c, exps) in terms {
        let d = exps.first().copied().unwrap_or(0) as usize;
        if out.len() <= d {
            out.resize(d + 1, 0);
        }
        out[d] = f.add(out[d], f.from_int(c));
    }
    poly::trim(&mut out);
    Ok(out)
}

pub fn format_univariate(h: &[u32]) -> String {
    let mut parts = Vec::new();
    for (i, &c) in h.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        let coef = if c == 1 && i > 0 { String::new() } else { c.to_string() };
        let mono = match i {
            0 => String::new(),
            1 => "x".to_string(),
            _ => format!("x^{i}"),
        };
        let sep = if !coef.is_empty() && !mono.is_empty() { "*" } else { "" };
        parts.push(format!("{coef}{sep}{mono}"));
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

/// `f(α)` is `algebra::dot`; re-exported for callers working with levels.
pub fn pair(f: &FiniteField, alpha: &[u32], v: &[u32]) -> u32 {
    algebra::dot(f, alpha, v)
}
