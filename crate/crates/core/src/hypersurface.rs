//! Degree-`d` forms in `n+1` variables, symmetric tensors, the multilinear
//! forms `Ψ_j` and the polarization `f_d`.

use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{decode, field, AlgebraError, FiniteField};
use crate::curve::{series, Curve, CurveError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypersurfaceError {
    #[error("cannot parse form: {0}")]
    Parse(String),
    #[error("form is not homogeneous")]
    NotHomogeneous,
    #[error("characteristic {p} must exceed the degree {d}")]
    CharTooSmall { p: u32, d: u32 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// One parsed term: integer coefficient and `(variable, exponent)` pairs.
pub type Term = (i64, Vec<u32>);

/// Splits `3*x0^2 - x1x2 + 5` into terms, resolving identifiers through
/// `lookup`. Exponent vectors are padded to the largest index seen.
pub fn parse_terms(s: &str, lookup: impl Fn(&str) -> Option<usize>) -> Result<Vec<Term>, HypersurfaceError> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let err = |m: &str| HypersurfaceError::Parse(format!("{m} in {s:?}"));
    let mut terms: Vec<(i64, Vec<(usize, u32)>)> = Vec::new();
    let mut i = 0;
    if chars.is_empty() {
        return Err(err("empty expression"));
    }
    while i < chars.len() {
        let mut sign = 1i64;
        while i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            if chars[i] == '-' {
                sign = -sign;
            }
            i += 1;
        }
        let mut coef: Option<i64> = None;
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i > start {
            let txt: String = chars[start..i].iter().collect();
            coef = Some(txt.parse().map_err(|_| err("bad integer"))?);
        }
        let mut factors = Vec::new();
        loop {
            if i < chars.len() && chars[i] == '*' {
                i += 1;
            }
            if i < chars.len() && chars[i].is_ascii_alphabetic() {
                let s0 = i;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let name: String = chars[s0..i].iter().collect();
                let idx = lookup(&name).ok_or_else(|| err(&format!("unknown variable {name}")))?;
                let mut e = 1u32;
                if i < chars.len() && chars[i] == '^' {
                    i += 1;
                    let e0 = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if e0 == i {
                        return Err(err("missing exponent"));
                    }
                    let txt: String = chars[e0..i].iter().collect();
                    e = txt.parse().map_err(|_| err("bad exponent"))?;
                }
                factors.push((idx, e));
            } else if i < chars.len() && chars[i].is_ascii_digit() {
                let s0 = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let txt: String = chars[s0..i].iter().collect();
                let v: i64 = txt.parse().map_err(|_| err("bad integer"))?;
                coef = Some(coef.unwrap_or(1) * v);
            } else {
                break;
            }
        }
        if coef.is_none() && factors.is_empty() {
            return Err(err("empty term"));
        }
        terms.push((sign * coef.unwrap_or(1), factors));
        if i < chars.len() && chars[i] != '+' && chars[i] != '-' {
            return Err(err(&format!("unexpected {:?}", chars[i])));
        }
    }
    let nvars = terms.iter().flat_map(|t| t.1.iter().map(|f| f.0 + 1)).max().unwrap_or(1);
    Ok(terms
        .into_iter()
        .map(|(c, fs)| {
            let mut ex = vec![0u32; nvars];
            for (v, e) in fs {
                ex[v] += e;
            }
            (c, ex)
        })
        .collect())
}

/// A homogeneous form with coefficients in `F_p`, which embeds in every field
/// of characteristic `p` by the shared integer encoding.
#[derive(Clone, Debug)]
pub struct SymmetricForm {
    pub field: Arc<FiniteField>,
    /// Number of variables is `n + 1`.
    pub n: usize,
    pub d: u32,
    /// Monomial coefficients `(c, exponents)`, merged and nonzero.
    pub terms: Vec<(u32, Vec<u32>)>,
    /// Dense tensor `a_{j_1…j_d}`, index `Σ j_i (n+1)^i`.
    pub tensor: Vec<u32>,
}

fn factorial_mod(f: &FiniteField, k: u32) -> u32 {
    (1..=k).fold(1, |acc, i| f.mul(acc, f.from_int(i as i64)))
}

impl SymmetricForm {
    /// Parses `x0^2 + x1^2 + x2^2` (an optional `f =` prefix is accepted).
    pub fn parse(fq: &Arc<FiniteField>, n: usize, s: &str) -> Result<Self, HypersurfaceError> {
        let body = s.trim().strip_prefix("f").map(|r| r.trim_start()).and_then(|r| r.strip_prefix('=')).unwrap_or(s);
        let terms = parse_terms(body, |name| name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()).filter(|&i| i <= n))?;
        let fp = field(fq.p(), 1)?;
        let mut merged: Vec<(u32, Vec<u32>)> = Vec::new();
        for (c, mut ex) in terms {
            ex.resize(n + 1, 0);
            let c = fp.from_int(c);
            match merged.iter_mut().find(|t| t.1 == ex) {
                Some(t) => t.0 = fp.add(t.0, c),
                None => merged.push((c, ex)),
            }
        }
        merged.retain(|t| t.0 != 0);
        Self::symmetrize(fq, n, merged)
    }

    /// Builds the symmetric tensor `a_J = c·Π e_j!/d!`.
    pub fn symmetrize(fq: &Arc<FiniteField>, n: usize, terms: Vec<(u32, Vec<u32>)>) -> Result<Self, HypersurfaceError> {
        let d: u32 = terms.first().map(|t| t.1.iter().sum()).unwrap_or(0);
        if terms.iter().any(|t| t.1.iter().sum::<u32>() != d || t.1.len() != n + 1) {
            return Err(HypersurfaceError::NotHomogeneous);
        }
        if d == 0 {
            return Err(HypersurfaceError::Parse("zero or constant form".into()));
        }
        let p = fq.p();
        if p <= d {
            return Err(HypersurfaceError::CharTooSmall { p, d });
        }
        let fp = field(p, 1)?;
        let nv = n + 1;
        let size = nv.pow(d);
        let mut tensor = vec![0u32; size];
        let dfact_inv = fp.inv(factorial_mod(&fp, d));
        for (idx, slot) in tensor.iter_mut().enumerate() {
            let js = decode(idx as u64, nv as u32, d as usize);
            let mut ex = vec![0u32; nv];
            for &j in &js {
                ex[j as usize] += 1;
            }
            if let Some(t) = terms.iter().find(|t| t.1 == ex) {
                let w = ex.iter().fold(1, |acc, &e| fp.mul(acc, factorial_mod(&fp, e)));
                *slot = fp.mul(fp.mul(t.0, w), dfact_inv);
            }
        }
        Ok(SymmetricForm { field: fq.clone(), n, d, terms, tensor })
    }

    /// The same form viewed over another field of characteristic `p`.
    pub fn with_field(&self, g: &Arc<FiniteField>) -> Self {
        assert_eq!(g.p(), self.field.p());
        SymmetricForm { field: g.clone(), ..self.clone() }
    }

    pub fn nvars(&self) -> usize {
        self.n + 1
    }

    pub fn tensor_at(&self, js: &[usize]) -> u32 {
        let nv = self.nvars();
        let idx = js.iter().rev().fold(0usize, |acc, &j| acc * nv + j);
        self.tensor[idx]
    }

    /// Re-expands `Σ a_J x_{j_1}⋯x_{j_d}` as monomial coefficients.
    pub fn reexpand(&self) -> Vec<(u32, Vec<u32>)> {
        let fp = field(self.field.p(), 1).unwrap();
        let nv = self.nvars();
        let mut out: Vec<(u32, Vec<u32>)> = Vec::new();
        for (idx, &a) in self.tensor.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let js = decode(idx as u64, nv as u32, self.d as usize);
            let mut ex = vec![0u32; nv];
            for &j in &js {
                ex[j as usize] += 1;
            }
            match out.iter_mut().find(|t| t.1 == ex) {
                Some(t) => t.0 = fp.add(t.0, a),
                None => out.push((a, ex)),
            }
        }
        out.retain(|t| t.0 != 0);
        out
    }

    pub fn to_spec(&self) -> String {
        let mut parts = Vec::new();
        for (c, ex) in &self.terms {
            let mut s = if *c == 1 { String::new() } else { c.to_string() };
            for (j, &e) in ex.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !s.is_empty() {
                    s.push('*');
                }
                if e == 1 {
                    s.push_str(&format!("x{j}"));
                } else {
                    s.push_str(&format!("x{j}^{e}"));
                }
            }
            parts.push(s);
        }
        parts.join(" + ")
    }

    /// `f(v)` for `v` in any field `g` of the same characteristic.
    pub fn eval_point(&self, g: &FiniteField, v: &[u32]) -> u32 {
        let mut acc = 0;
        for (c, ex) in &self.terms {
            let mut t = *c;
            for (&x, &e) in v.iter().zip(ex) {
                if e > 0 {
                    t = g.mul(t, g.pow(x, e as u64));
                }
            }
            acc = g.add(acc, t);
        }
        acc
    }

    /// `∂f/∂x_j (v)`.
    pub fn eval_partial(&self, g: &FiniteField, j: usize, v: &[u32]) -> u32 {
        let mut acc = 0;
        for (c, ex) in &self.terms {
            if ex[j] == 0 {
                continue;
            }
            let mut t = g.mul(*c, g.from_int(ex[j] as i64));
            for (i, (&x, &e)) in v.iter().zip(ex).enumerate() {
                let e = if i == j { e - 1 } else { e };
                if e > 0 {
                    t = g.mul(t, g.pow(x, e as u64));
                }
            }
            acc = g.add(acc, t);
        }
        acc
    }

    /// `f` on a tuple of truncated power series of length `r` over `g`.
    pub fn eval_series(&self, g: &FiniteField, v: &[Vec<u32>], r: usize) -> Vec<u32> {
        let mut acc = vec![0u32; r];
        if r == 0 {
            return acc;
        }
        for (c, ex) in &self.terms {
            let mut t = series::one(r);
            t[0] = *c;
            for (x, &e) in v.iter().zip(ex) {
                for _ in 0..e {
                    t = series::mul(g, &t, x, r);
                }
            }
            for (a, b) in acc.iter_mut().zip(&t) {
                *a = g.add(*a, *b);
            }
        }
        acc
    }

    /// True iff `∇f` has no common nonzero zero over `F_{q^m}`, `m ≤ max_ext`,
    /// by exhaustive enumeration of projective representatives.
    pub fn smoothness_check(&self, max_ext: u32) -> Result<bool, HypersurfaceError> {
        let nv = self.nvars();
        for m in 1..=max_ext {
            let g = field(self.field.p(), self.field.k() * m)?;
            let q = g.q() as u64;
            for lead in 0..nv {
                let free = nv - lead - 1;
                let total = q.pow(free as u32);
                for code in 0..total {
                    let mut v = vec![0u32; nv];
                    v[lead] = 1;
                    let tail = decode(code, g.q(), free);
                    v[lead + 1..].copy_from_slice(&tail);
                    if (0..nv).all(|j| self.eval_partial(&g, j, &v) == 0) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// `f(x)` for `x ∈ P_e^{n+1}`, as coordinates in `P_{de}`.
    pub fn eval_sections(&self, curve: &Curve, e: u32, xs: &[Vec<u32>]) -> Result<Vec<u32>, HypersurfaceError> {
        if xs.len() != self.nvars() {
            return Err(HypersurfaceError::Dimension(format!("expected {} sections", self.nvars())));
        }
        let f = &curve.field;
        let out_dim = curve.dim((self.d * e) as i64);
        let mut acc = vec![0u32; out_dim];
        for (c, ex) in &self.terms {
            let mut cur: Option<(u32, Vec<u32>)> = None;
            for (j, &ej) in ex.iter().enumerate() {
                for _ in 0..ej {
                    cur = Some(match cur {
                        None => (e, xs[j].clone()),
                        Some((lvl, v)) => (lvl + e, curve.cup(lvl, &v, e, &xs[j])?),
                    });
                }
            }
            let (_, v) = cur.expect("degree at least one");
            for (a, b) in acc.iter_mut().zip(&v) {
                *a = f.add(*a, f.mul(*c, *b));
            }
        }
        Ok(acc)
    }

    /// `Ψ_j(x^{(1)},…,x^{(d-1)})`, slot `i` at level `levels[i]`; output at
    /// level `Σ levels`.
    pub fn psi_j(&self, curve: &Curve, j: usize, levels: &[u32], tuple: &[Vec<Vec<u32>>]) -> Result<Vec<u32>, HypersurfaceError> {
        let d = self.d as usize;
        if levels.len() != d - 1 || tuple.len() != d - 1 {
            return Err(HypersurfaceError::Dimension(format!("Ψ takes {} slots", d - 1)));
        }
        for (lv, slot) in levels.iter().zip(tuple) {
            if slot.len() != self.nvars() || slot.iter().any(|s| s.len() != curve.dim(*lv as i64)) {
                return Err(HypersurfaceError::Dimension("slot shape".into()));
            }
        }
        let f = &curve.field;
        let total: u32 = levels.iter().sum();
        let nv = self.nvars();
        let mut acc = vec![0u32; curve.dim(total as i64)];
        let dfact = factorial_mod(f, self.d);
        let count = nv.pow(d as u32 - 1);
        for idx in 0..count {
            let js = decode(idx as u64, nv as u32, d - 1);
            let mut full: Vec<usize> = js.iter().map(|&x| x as usize).collect();
            full.push(j);
            let a = self.tensor_at(&full);
            if a == 0 {
                continue;
            }
            let mut lvl = 0u32;
            let mut prod: Vec<u32> = vec![1];
            for (i, &ji) in js.iter().enumerate() {
                prod = curve.cup(lvl, &prod, levels[i], &tuple[i][ji as usize])?;
                lvl += levels[i];
            }
            let coef = f.mul(a, dfact);
            for (o, v) in acc.iter_mut().zip(&prod) {
                *o = f.add(*o, f.mul(coef, *v));
            }
        }
        Ok(acc)
    }

    /// `Σ_ε (-1)^{|ε|} f(Σ ε_i x^{(i)})` for `d` slots in `P_e^{n+1}`.
    pub fn f_d(&self, curve: &Curve, e: u32, tuple: &[Vec<Vec<u32>>]) -> Result<Vec<u32>, HypersurfaceError> {
        let d = self.d as usize;
        if tuple.len() != d {
            return Err(HypersurfaceError::Dimension(format!("f_d takes {d} slots")));
        }
        let f = &curve.field;
        let dim_e = curve.dim(e as i64);
        let mut acc = vec![0u32; curve.dim((self.d * e) as i64)];
        for mask in 0u32..(1 << d) {
            let mut x = vec![vec![0u32; dim_e]; self.nvars()];
            for (i, slot) in tuple.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for (xj, sj) in x.iter_mut().zip(slot) {
                        for (a, b) in xj.iter_mut().zip(sj) {
                            *a = f.add(*a, *b);
                        }
                    }
                }
            }
            let v = self.eval_sections(curve, e, &x)?;
            let neg = mask.count_ones() % 2 == 1;
            for (a, b) in acc.iter_mut().zip(&v) {
                *a = if neg { f.sub(*a, *b) } else { f.add(*a, *b) };
            }
        }
        Ok(acc)
    }
}
