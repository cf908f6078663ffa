//! Weyl differencing counts `N(α)`, the shrinking counts `N_{s,ℓ}`,
//! `K_{s,ℓ}`, `K′_{s,ℓ}`, the choice of `s`, and checks of the inequalities
//! relating them.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{decode, dot, extension, CyclotomicSum};
use crate::arcs::{ArcsError, CircleInstance};
use crate::curve::CurveError;
use crate::hypersurface::HypersurfaceError;
use crate::{qpow, Budget, BudgetExceeded};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabError {
    #[error(transparent)]
    Arcs(#[from] ArcsError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Hypersurface(#[from] HypersurfaceError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl From<crate::algebra::AlgebraError> for LabError {
    fn from(e: crate::algebra::AlgebraError) -> Self {
        LabError::Arcs(e.into())
    }
}

/// `s = max(⌊(deg Z − e + 2g − 2)/(d−1)⌋, ⌊e − deg Z/(d−1)⌋, 2g − 2, 1) + 1`.
pub fn choose_s(deg_z: u32, d: u32, e: u32, g: u32) -> u32 {
    let (z, d1, e, g) = (deg_z as i64, d as i64 - 1, e as i64, g as i64);
    let a = (z - e + 2 * g - 2).div_euclid(d1);
    let b = (e * d1 - z).div_euclid(d1);
    (a.max(b).max(2 * g - 2).max(1) + 1) as u32
}

/// `(d−1)s > deg Z − e + 2g − 2` and `(d−1)s > (d−1)e − deg Z`.
pub fn psi_vanishing_hypothesis(deg_z: u32, d: u32, e: u32, g: u32, s: u32) -> bool {
    let (z, d1, e, g, s) = (deg_z as i64, d as i64 - 1, e as i64, g as i64, s as i64);
    d1 * s > z - e + 2 * g - 2 && d1 * s > d1 * e - z
}

fn level_dim(inst: &CircleInstance, level: i64) -> usize {
    inst.curve.dim(level)
}

/// The linear system in one free slot given the other `d − 2` slots: rows
/// `(j, b)` test `α(Ψ_j · v_b) = 0` for `v_b` in the test space.
pub struct SlotSystem {
    nv: usize,
    q: u32,
    fixed_levels: Vec<i64>,
    fixed_total: i64,
    dim_out: usize,
    dim_free: usize,
    dim_test: usize,
    /// `α(u_m · v_c · v_b)` at `(m·dim_free + c)·dim_test + b`.
    triple: Vec<u32>,
    /// `d!·a_{J,k,j}` for outer index tuples `J`, at `(J·nv + k)·nv + j`.
    coef: Vec<u32>,
}

impl SlotSystem {
    pub fn new(inst: &CircleInstance, alpha: &[u32], fixed_levels: &[i64], free_level: i64, test_level: i64) -> Result<Self, LabError> {
        let d = inst.d() as usize;
        if fixed_levels.len() + 2 != d {
            return Err(LabError::Invalid(format!("{} fixed slots for degree {d}", fixed_levels.len())));
        }
        let total: i64 = fixed_levels.iter().sum::<i64>() + free_level + test_level;
        if total != inst.level() as i64 || alpha.len() != inst.dim_de() {
            return Err(LabError::Invalid("levels do not add up to de".into()));
        }
        let f = inst.field();
        let curve = &inst.curve;
        let nv = inst.form.nvars();
        let fixed_total: i64 = fixed_levels.iter().sum();
        let degenerate = fixed_levels.iter().any(|&l| l < 0) || free_level < 0 || test_level < 0;
        let dim_out = if degenerate { 0 } else { level_dim(inst, fixed_total) };
        let dim_free = level_dim(inst, free_level);
        let dim_test = level_dim(inst, test_level);
        let mut triple = vec![0u32; dim_out * dim_free * dim_test];
        if dim_out > 0 && dim_free > 0 && dim_test > 0 {
            let t1 = curve.cup_table(fixed_total as u32, free_level as u32);
            let mid = (fixed_total + free_level) as u32;
            let t2 = curve.cup_table(mid, test_level as u32);
            for m in 0..dim_out {
                for c in 0..dim_free {
                    for &(k, x) in &t1.entries[m * dim_free + c] {
                        for b in 0..dim_test {
                            let mut acc = 0;
                            for &(k2, y) in &t2.entries[k * dim_test + b] {
                                acc = f.add(acc, f.mul(y, alpha[k2]));
                            }
                            let at = (m * dim_free + c) * dim_test + b;
                            triple[at] = f.add(triple[at], f.mul(x, acc));
                        }
                    }
                }
            }
        }
        let outer = nv.pow(d as u32 - 2);
        let dfact = (1..=d as u32).fold(1, |acc, i| f.mul(acc, f.from_int(i as i64)));
        let mut coef = vec![0u32; outer * nv * nv];
        for jj in 0..outer {
            let js: Vec<usize> = decode(jj as u64, nv as u32, d - 2).into_iter().map(|x| x as usize).collect();
            for k in 0..nv {
                for j in 0..nv {
                    let mut idx = js.clone();
                    idx.push(k);
                    idx.push(j);
                    coef[(jj * nv + k) * nv + j] = f.mul(dfact, inst.form.tensor_at(&idx));
                }
            }
        }
        Ok(SlotSystem { nv, q: f.q(), fixed_levels: fixed_levels.to_vec(), fixed_total, dim_out, dim_free, dim_test, triple, coef })
    }

    /// Number of unknowns `(n+1)·dim(free)`.
    pub fn cols(&self) -> usize {
        self.nv * self.dim_free
    }

    /// Nullity of the system for the given fixed slots, each an `(n+1)`-tuple
    /// of coordinate vectors.
    pub fn nullity(&self, inst: &CircleInstance, fixed: &[Vec<Vec<u32>>]) -> Result<usize, LabError> {
        let f = inst.field();
        let nv = self.nv;
        if self.dim_free == 0 {
            return Ok(0);
        }
        if self.dim_out == 0 || self.dim_test == 0 {
            return Ok(self.cols());
        }
        // products Π_i x^{(i)}_{J_i} for every outer index tuple J
        let mut prods: Vec<Vec<u32>> = vec![vec![1]];
        let mut lvl = 0i64;
        for (slot, &l) in fixed.iter().zip(&self.fixed_levels) {
            let mut next = Vec::with_capacity(prods.len() * nv);
            for x in slot {
                for p in &prods {
                    next.push(inst.curve.cup(lvl as u32, p, l as u32, x)?);
                }
            }
            // index J_0 + nv·J_1 + …: the new slot is the most significant digit
            prods = next;
            lvl += l;
        }
        debug_assert_eq!(lvl, self.fixed_total);
        let mut w = vec![vec![0u32; self.dim_out]; nv * nv];
        for (jj, p) in prods.iter().enumerate() {
            for k in 0..nv {
                for j in 0..nv {
                    let c = self.coef[(jj * nv + k) * nv + j];
                    if c == 0 {
                        continue;
                    }
                    for (o, &v) in w[k * nv + j].iter_mut().zip(p) {
                        *o = f.add(*o, f.mul(c, v));
                    }
                }
            }
        }
        if w.iter().all(|v| v.iter().all(|&x| x == 0)) {
            return Ok(self.cols());
        }
        let (df, dt) = (self.dim_free, self.dim_test);
        let mut mat = crate::MatrixFq::zeros(f, nv * dt, nv * df);
        for j in 0..nv {
            for k in 0..nv {
                let wjk = &w[k * nv + j];
                for (m, &wm) in wjk.iter().enumerate() {
                    if wm == 0 {
                        continue;
                    }
                    for c in 0..df {
                        for b in 0..dt {
                            let t = self.triple[(m * df + c) * dt + b];
                            if t == 0 {
                                continue;
                            }
                            let (r, col) = (j * dt + b, k * df + c);
                            mat.set(r, col, f.add(mat.get(r, col), f.mul(wm, t)));
                        }
                    }
                }
            }
        }
        Ok(mat.nullity())
    }

    /// `q^{nullity}`.
    pub fn count(&self, inst: &CircleInstance, fixed: &[Vec<Vec<u32>>]) -> Result<u128, LabError> {
        Ok(qpow(self.q, self.nullity(inst, fixed)? as u32))
    }
}

/// Mixed-radix enumeration of tuples of slots, slot `i` an `(n+1)`-tuple in
/// `P_{levels[i]}`.
struct SlotSpace {
    q: u32,
    nv: usize,
    dims: Vec<usize>,
}

impl SlotSpace {
    fn new(inst: &CircleInstance, levels: &[i64]) -> Self {
        SlotSpace { q: inst.q(), nv: inst.form.nvars(), dims: levels.iter().map(|&l| level_dim(inst, l)).collect() }
    }
    fn size(&self) -> u128 {
        self.dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(qpow(self.q, (d * self.nv) as u32)))
    }
    fn tuple(&self, mut code: u128) -> Vec<Vec<Vec<u32>>> {
        self.dims
            .iter()
            .map(|&dim| {
                let width = qpow(self.q, (dim * self.nv) as u32);
                let c = (code % width) as u64;
                code /= width;
                if dim == 0 {
                    return vec![Vec::new(); self.nv];
                }
                decode(c, self.q, dim * self.nv).chunks(dim).map(|ch| ch.to_vec()).collect()
            })
            .collect()
    }
}

/// Slot levels of `N_{s,ℓ}`: `ℓ` slots in `P_{e−s}`, the rest in `P_e`, test
/// space `P_{e+ℓs}`.
fn n_levels(inst: &CircleInstance, s: u32, ell: u32) -> (Vec<i64>, i64) {
    let (e, s) = (inst.e as i64, s as i64);
    let d = inst.d() as usize;
    let levels = (0..d - 1).map(|i| if (i as u32) < ell { e - s } else { e }).collect();
    (levels, e + ell as i64 * s)
}

/// `N_{s,ℓ}(α)`: the outer `d − 2` slots are enumerated and the last slot is
/// counted as a kernel.
pub fn n_s_ell(inst: &CircleInstance, alpha: &[u32], s: u32, ell: u32, budget: &Budget) -> Result<u128, LabError> {
    let d = inst.d();
    if ell > d - 1 {
        return Err(LabError::Invalid(format!("ℓ = {ell} exceeds d − 1 = {}", d - 1)));
    }
    let (levels, test) = n_levels(inst, s, ell);
    let (outer, last) = levels.split_at(levels.len() - 1);
    let system = SlotSystem::new(inst, alpha, outer, last[0], test)?;
    let space = SlotSpace::new(inst, outer);
    budget.check("outer slot tuples", space.size())?;
    (0..space.size()).into_par_iter().map(|code| system.count(inst, &space.tuple(code))).try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `N(α) = N_{s,0}(α)`.
pub fn n_alpha(inst: &CircleInstance, alpha: &[u32], budget: &Budget) -> Result<u128, LabError> {
    n_s_ell(inst, alpha, 0, 0, budget)
}

/// Rows `G_b = (α(u_m · v_b))_m`: the functional `ψ ↦ α(ψ·v_b)` on `P_L`.
fn test_functionals(inst: &CircleInstance, alpha: &[u32], level: u32, test: u32) -> Vec<Vec<u32>> {
    let f = inst.field();
    let t = inst.curve.cup_table(level, test);
    (0..t.dim_b)
        .map(|b| (0..t.dim_a).map(|m| t.entries[m * t.dim_b + b].iter().fold(0, |acc, &(k, c)| f.add(acc, f.mul(c, alpha[k])))).collect())
        .collect()
}

/// `N_{s,ℓ}(α)` by testing every tuple with `Ψ_j` evaluated directly.
pub fn n_s_ell_brute(inst: &CircleInstance, alpha: &[u32], s: u32, ell: u32, budget: &Budget) -> Result<u128, LabError> {
    let (levels, test) = n_levels(inst, s, ell);
    if levels.iter().any(|&l| l < 0) {
        return Err(LabError::Invalid("negative slot level".into()));
    }
    let space = SlotSpace::new(inst, &levels);
    budget.check("brute-force slot tuples", space.size())?;
    let lv: Vec<u32> = levels.iter().map(|&l| l as u32).collect();
    let total: u32 = lv.iter().sum();
    let g = test_functionals(inst, alpha, total, test as u32);
    let f = inst.field();
    let nv = inst.form.nvars();
    (0..space.size())
        .into_par_iter()
        .map(|code| {
            let tuple = space.tuple(code);
            for j in 0..nv {
                let psi = inst.form.psi_j(&inst.curve, j, &lv, &tuple)?;
                if g.iter().any(|gb| dot(f, gb, &psi) != 0) {
                    return Ok(0);
                }
            }
            Ok(1)
        })
        .try_reduce(|| 0u128, |a, b| Ok(a + b))
}

/// `N(α)` for cubic forms by membership bitsets: for each second slot `y`,
/// intersect the kernels of `x ↦ α(Ψ_j(x, y)·v_b)` over all `x` and count.
pub fn n_alpha_bitset(inst: &CircleInstance, alpha: &[u32], budget: &Budget) -> Result<u128, LabError> {
    if inst.d() != 3 {
        return Err(LabError::Invalid("bitset oracle is for cubic forms".into()));
    }
    let f = inst.field();
    let q = f.q();
    let e = inst.e;
    let nv = inst.form.nvars();
    let dim = inst.dim_e();
    let width = nv * dim;
    let xs = qpow(q, width as u32);
    budget.check("bitset oracle", xs.saturating_mul(xs))?;
    let xs = xs as usize;
    let g = test_functionals(inst, alpha, 2 * e, e);
    let basis: Vec<Vec<Vec<u32>>> = (0..width)
        .map(|i| {
            let mut flat = vec![0u32; width];
            flat[i] = 1;
            flat.chunks(dim).map(|c| c.to_vec()).collect()
        })
        .collect();
    let words = xs.div_ceil(64);
    let mut cache: HashMap<Vec<u32>, Vec<u64>> = HashMap::new();
    let mut total = 0u128;
    for ycode in 0..xs as u64 {
        let y: Vec<Vec<u32>> = decode(ycode, q, width).chunks(dim).map(|c| c.to_vec()).collect();
        let mut acc = vec![u64::MAX; words];
        for j in 0..nv {
            let psis: Vec<Vec<u32>> =
                basis.iter().map(|x| inst.form.psi_j(&inst.curve, j, &[e, e], &[x.clone(), y.clone()])).collect::<Result<_, _>>()?;
            for gb in &g {
                let lambda: Vec<u32> = psis.iter().map(|p| dot(f, gb, p)).collect();
                let bits = cache.entry(lambda.clone()).or_insert_with(|| kernel_bits(f, &lambda, xs));
                for (a, b) in acc.iter_mut().zip(bits.iter()) {
                    *a &= b;
                }
            }
        }
        if !xs.is_multiple_of(64) {
            let last = acc.len() - 1;
            acc[last] &= (1u64 << (xs % 64)) - 1;
        }
        total += acc.iter().map(|w| w.count_ones() as u128).sum::<u128>();
    }
    Ok(total)
}

fn kernel_bits(f: &crate::FiniteField, lambda: &[u32], size: usize) -> Vec<u64> {
    let q = f.q() as usize;
    let mut vals = vec![0u32; size];
    let mut block = 1usize;
    for &l in lambda {
        for t in 1..q {
            let lt = f.mul(l, t as u32);
            for r in 0..block {
                vals[t * block + r] = f.add(vals[r], lt);
            }
        }
        block *= q;
    }
    let mut bits = vec![0u64; size.div_ceil(64)];
    for (i, &v) in vals.iter().enumerate() {
        if v == 0 {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

/// `|S(α)|^{2^{d−1}} ≤ (#P_{e,C}^{n+1})^{2^{d−1}−d+1} N(α)` at each embedding.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylCheck {
    pub n_alpha: u128,
    /// Left side per embedding `j = 1..p−1`.
    pub lhs: Vec<f64>,
    pub rhs: f64,
    pub holds: bool,
}

pub const WEYL_TOLERANCE: f64 = 1e-6;

pub fn weyl_check(inst: &CircleInstance, s_alpha: &CyclotomicSum, n_alpha: u128) -> WeylCheck {
    let d = inst.d() as i32;
    let p = inst.field().p();
    let pow = 1i32 << (d - 2);
    let lhs: Vec<f64> = (1..p).map(|j| s_alpha.embedding_abs2(j).powi(pow)).collect();
    let mass = inst.total_mass() as f64;
    let rhs = mass.powi((1 << (d - 1)) - d + 1) * n_alpha as f64;
    let holds = lhs.iter().all(|&l| l * (1.0 - WEYL_TOLERANCE) <= rhs);
    WeylCheck { n_alpha, lhs, rhs, holds }
}

/// Exact comparison `K_{s,ℓ}/K′_{s,ℓ} ≤ q^{(n+1)s}` (or `q^{(n+1)(s+(g+1)/2)}`
/// for `g ≥ 2`, `ℓ = 0`), as exponents of `q` doubled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KRatio {
    pub s: u32,
    pub ell: u32,
    pub k_nullity: usize,
    pub k_prime_nullity: usize,
    /// `2·log_q(K/K′)`.
    pub ratio_exp2: i64,
    /// `2·log_q(bound)`.
    pub bound_exp2: i64,
    pub holds: bool,
}

fn k_bound_exp2(n: usize, g: u32, s: u32, ell: u32) -> i64 {
    let base = 2 * (n as i64 + 1) * s as i64;
    if g >= 2 && ell == 0 {
        base + (n as i64 + 1) * (g as i64 + 1)
    } else {
        base
    }
}

/// Fixed slot levels for `K_{s,ℓ}`: `ℓ` slots at `e − s`, `d − 2 − ℓ` at `e`.
pub fn k_fixed_levels(inst: &CircleInstance, s: u32, ell: u32) -> Vec<i64> {
    let (e, s) = (inst.e as i64, s as i64);
    (0..inst.d() - 2).map(|i| if i < ell { e - s } else { e }).collect()
}

pub fn k_ratio_check(inst: &CircleInstance, alpha: &[u32], s: u32, ell: u32, fixed: &[Vec<Vec<u32>>]) -> Result<KRatio, LabError> {
    let d = inst.d();
    if ell + 2 > d {
        return Err(LabError::Invalid(format!("ℓ = {ell} must be at most d − 2")));
    }
    let g = inst.genus();
    if s < (2 * g).saturating_sub(1).max(2) {
        return Err(LabError::Invalid(format!("s = {s} is below max(2g − 1, 2)")));
    }
    let levels = k_fixed_levels(inst, s, ell);
    let (e, si, l) = (inst.e as i64, s as i64, ell as i64);
    let k = SlotSystem::new(inst, alpha, &levels, e, e + l * si)?;
    let kp = SlotSystem::new(inst, alpha, &levels, e - si, e + (l + 1) * si)?;
    let a = k.nullity(inst, fixed)?;
    let b = kp.nullity(inst, fixed)?;
    let ratio_exp2 = 2 * (a as i64 - b as i64);
    let bound_exp2 = k_bound_exp2(inst.n(), g, s, ell);
    Ok(KRatio { s, ell, k_nullity: a, k_prime_nullity: b, ratio_exp2, bound_exp2, holds: ratio_exp2 <= bound_exp2 })
}

/// `N(α)/N_s(α) ≤ q^{(d−1)(n+1)s}` (plus `(n+1)(g+1)/2` in the exponent for
/// `g ≥ 2`), compared exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShrinkCheck {
    pub deg_z: u32,
    pub s: u32,
    pub n: u128,
    pub n_s: u128,
    /// Doubled exponent of `q` in the bound.
    pub bound_exp2: i64,
    pub holds: bool,
}

pub fn shrink_bound_exp2(d: u32, n: usize, g: u32, s: u32) -> i64 {
    let base = 2 * (d as i64 - 1) * (n as i64 + 1) * s as i64;
    if g >= 2 {
        base + (n as i64 + 1) * (g as i64 + 1)
    } else {
        base
    }
}

pub fn shrink_check(inst: &CircleInstance, alpha: &[u32], deg_z: u32, budget: &Budget) -> Result<ShrinkCheck, LabError> {
    let (d, e, g) = (inst.d(), inst.e, inst.genus());
    let s = choose_s(deg_z, d, e, g);
    let n = n_s_ell(inst, alpha, s, 0, budget)?;
    let n_s = n_s_ell(inst, alpha, s, d - 1, budget)?;
    let bound_exp2 = shrink_bound_exp2(d, inst.n(), g, s);
    // N² ≤ N_s² · q^{bound_exp2}
    let lhs = BigUint::from(n).pow(2);
    let rhs = BigUint::from(n_s).pow(2) * BigUint::from(inst.q()).pow(bound_exp2 as u32);
    Ok(ShrinkCheck { deg_z, s, n, n_s, bound_exp2, holds: lhs <= rhs })
}

/// Tuples in `P_{e−s}` where `x ↦ α(Ψ_j·x)` vanishes on `P_{e+(d−1)s}` but
/// `Ψ_j ≠ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PsiVanishingReport {
    pub s: u32,
    pub deg_z: u32,
    pub hypothesis: bool,
    pub tuples_checked: u128,
    pub counterexamples: u128,
}

pub fn psi_vanishing_check(
    inst: &CircleInstance,
    alpha: &[u32],
    deg_z: u32,
    s: u32,
    budget: &Budget,
) -> Result<PsiVanishingReport, LabError> {
    let (d, e, g) = (inst.d(), inst.e, inst.genus());
    let hypothesis = psi_vanishing_hypothesis(deg_z, d, e, g, s);
    if s > e {
        return Ok(PsiVanishingReport { s, deg_z, hypothesis, tuples_checked: 1, counterexamples: 0 });
    }
    let lv = vec![e - s; d as usize - 1];
    let levels: Vec<i64> = lv.iter().map(|&l| l as i64).collect();
    let space = SlotSpace::new(inst, &levels);
    budget.check("Ψ-vanishing tuples", space.size())?;
    let total: u32 = lv.iter().sum();
    let test = e + (d - 1) * s;
    let g_rows = test_functionals(inst, alpha, total, test);
    let f = inst.field();
    let nv = inst.form.nvars();
    let bad = (0..space.size())
        .into_par_iter()
        .map(|code| {
            let tuple = space.tuple(code);
            let mut bad = 0u128;
            for j in 0..nv {
                let psi = inst.form.psi_j(&inst.curve, j, &lv, &tuple)?;
                let killed = g_rows.iter().all(|gb| dot(f, gb, &psi) == 0);
                if killed && psi.iter().any(|&x| x != 0) {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .try_reduce(|| 0u128, |a, b| Ok::<_, LabError>(a + b))?;
    Ok(PsiVanishingReport { s, deg_z, hypothesis, tuples_checked: space.size(), counterexamples: bad })
}

/// `N_s(α) / q^{(d−2)(n+1)h⁰(L(−s∞))}` over `F_q` and `F_{q²}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub q: u32,
    pub n_s: u128,
    pub exponent: i64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingProbe {
    pub s: u32,
    pub rows: Vec<ScalingRow>,
    pub non_increasing: bool,
}

pub fn ns_scaling_probe(inst: &CircleInstance, alpha: &[u32], deg_z: u32, budget: &Budget) -> Result<ScalingProbe, LabError> {
    let (d, e, g) = (inst.d(), inst.e, inst.genus());
    let s = choose_s(deg_z, d, e, g);
    let mut rows = Vec::new();
    for j in [1u32, 2] {
        let (bc, a) = if j == 1 {
            (inst.clone(), alpha.to_vec())
        } else {
            let ext = extension(inst.field(), j)?;
            (inst.base_change(j)?, alpha.iter().map(|&c| ext.embed(c)).collect())
        };
        let n_s = n_s_ell(&bc, &a, s, d - 1, budget)?;
        let h0 = bc.curve.dim(e as i64 - s as i64) as i64;
        let exponent = (d as i64 - 2) * (bc.n() as i64 + 1) * h0;
        let ratio = n_s as f64 / (bc.q() as f64).powi(exponent as i32);
        rows.push(ScalingRow { q: bc.q(), n_s, exponent, ratio });
    }
    let non_increasing = rows.windows(2).all(|w| w[1].ratio <= w[0].ratio);
    Ok(ScalingProbe { s, rows, non_increasing })
}

/// `count` distinct functional indices below `size`, reproducible from `seed`.
pub fn sample_indices(seed: u64, count: usize, size: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count as u64 >= size {
        return (0..size).collect();
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = rng.gen_range(0..size);
        if seen.insert(x) {
            out.push(x);
        }
    }
    out
}

/// Random fixed slots for `K_{s,ℓ}`, reproducible from `seed`.
pub fn sample_fixed_slots(inst: &CircleInstance, levels: &[i64], seed: u64) -> Vec<Vec<Vec<u32>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = inst.q();
    let nv = inst.form.nvars();
    levels
        .iter()
        .map(|&l| {
            let dim = inst.curve.dim(l);
            (0..nv).map(|_| (0..dim).map(|_| rng.gen_range(0..q)).collect()).collect()
        })
        .collect()
}

/// One per-functional row for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountRecord {
    pub alpha: u64,
    pub deg_alpha: u32,
    pub s: u32,
    pub n: u128,
    pub n_s: u128,
    pub bound_exp2: i64,
    pub verdict: bool,
}
