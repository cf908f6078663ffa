//! The dual space `P_{de,C}^∨`, exponential sums `S(α)`, factoring of
//! functionals through subschemes, major/minor classification, Artinian
//! point counts and the identities relating them.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{decode, dot, encode, field, AlgebraError, CyclotomicSum, FiniteField, RowSpace};
use crate::curve::{ClosedPoint, Curve, CurveError, EffectiveDivisor, FunctionElem};
use crate::hypersurface::{HypersurfaceError, SymmetricForm};
use crate::{qpow, Budget, BudgetExceeded};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArcsError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Hypersurface(#[from] HypersurfaceError),
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("the cone over the form is singular")]
    SingularCone,
    #[error("deg Z = {deg} exceeds the major-arc bound {bound}")]
    MajorRegime { deg: u32, bound: i64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// A curve, a form and a degree `e`: the data of one circle-method sum.
#[derive(Clone, Debug)]
pub struct CircleInstance {
    pub curve: Arc<Curve>,
    pub form: SymmetricForm,
    pub e: u32,
}

impl CircleInstance {
    pub fn new(curve: Arc<Curve>, form: SymmetricForm, e: u32) -> Result<Self, ArcsError> {
        if *form.field != *curve.field {
            return Err(ArcsError::Invalid("form and curve live over different fields".into()));
        }
        Ok(CircleInstance { curve, form, e })
    }

    pub fn field(&self) -> &Arc<FiniteField> {
        &self.curve.field
    }
    pub fn q(&self) -> u32 {
        self.curve.q()
    }
    pub fn n(&self) -> usize {
        self.form.n
    }
    pub fn d(&self) -> u32 {
        self.form.d
    }
    pub fn genus(&self) -> u32 {
        self.curve.genus
    }
    pub fn level(&self) -> u32 {
        self.form.d * self.e
    }
    pub fn dim_e(&self) -> usize {
        self.curve.dim(self.e as i64)
    }
    pub fn dim_de(&self) -> usize {
        self.curve.dim(self.level() as i64)
    }
    /// `#P_{e,C}`.
    pub fn sections(&self) -> u64 {
        qpow(self.q(), self.dim_e() as u32) as u64
    }
    /// `#P_{e,C}^{n+1}`.
    pub fn total_mass(&self) -> u128 {
        qpow(self.q(), (self.dim_e() * self.form.nvars()) as u32)
    }
    /// Number of functionals `#P_{de,C}^∨`.
    pub fn circle_size(&self) -> u64 {
        qpow(self.q(), self.dim_de() as u32) as u64
    }
    /// Largest degree of a major arc, `e − 2g + 1`.
    pub fn major_bound(&self) -> i64 {
        self.e as i64 - 2 * self.genus() as i64 + 1
    }
    /// Largest `k` with `2k < de − 2g + 2`, capped at `e − 2g + 1`: two
    /// factoring divisors of degree `≤ k` have a union within the range of
    /// the intersection property, so the minimal one is unique.
    pub fn uniqueness_bound(&self) -> i64 {
        let g = self.genus() as i64;
        let k = (self.level() as i64 - 2 * g + 1).div_euclid(2);
        k.min(self.major_bound())
    }
    /// The factoring bound `⌊de/2⌋ + 1`.
    pub fn factoring_bound(&self) -> u32 {
        self.level() / 2 + 1
    }
    /// `μ̂ = (n+1)(e+1−g) − (de+1) + g`.
    pub fn mu_hat(&self) -> i64 {
        let (n, e, g) = (self.n() as i64, self.e as i64, self.genus() as i64);
        (n + 1) * (e + 1 - g) - (self.level() as i64 + 1) + g
    }

    /// The same instance over `F_{q^j}`.
    pub fn base_change(&self, j: u32) -> Result<Self, ArcsError> {
        let curve = Arc::new(self.curve.base_change(j)?);
        let form = self.form.with_field(&curve.field);
        CircleInstance::new(curve, form, self.e)
    }

    /// All elements of `P_{e,C}` as coordinate vectors, in code order.
    pub fn section_vectors(&self) -> Vec<Vec<u32>> {
        let (q, dim) = (self.q(), self.dim_e());
        (0..self.sections()).map(|c| decode(c, q, dim)).collect()
    }
}

/// `α ∈ P_{m,C}^∨` in the dual of the monomial basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DualFunctional {
    pub level: u32,
    pub coords: Vec<u32>,
}

impl DualFunctional {
    pub fn from_index(level: u32, q: u32, dim: usize, idx: u64) -> Self {
        DualFunctional { level, coords: decode(idx, q, dim) }
    }
    pub fn index(&self, q: u32) -> u64 {
        encode(&self.coords, q)
    }
    pub fn pair(&self, f: &FiniteField, v: &[u32]) -> u32 {
        dot(f, &self.coords, v)
    }
}

/// Counts of `f(x) ∈ P_{de,C}` over `x ∈ P_{e,C}^{n+1}`, indexed by the
/// base-`q` code of the image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PushforwardHistogram {
    pub q: u32,
    pub level: u32,
    pub dim: usize,
    pub counts: Vec<u64>,
}

/// Packs `F_q` coordinate vectors into 4-bit `F_p` lanes of a `u64` and adds
/// them lane-wise mod `p`.
struct Lanes {
    p: u64,
    k: usize,
    add_k: u64,
    high: u64,
    chunks: Vec<Vec<u64>>,
}

impl Lanes {
    fn new(p: u32, k: u32, dim: usize) -> Self {
        let lanes = dim * k as usize;
        assert!(lanes <= 16 && p <= 7);
        let mut add_k = 0u64;
        let mut high = 0u64;
        for l in 0..lanes {
            add_k |= (8 - p as u64) << (4 * l);
            high |= 8u64 << (4 * l);
        }
        let nchunks = lanes.div_ceil(4);
        let chunks = (0..nchunks)
            .map(|c| {
                (0..65536u64)
                    .map(|x| {
                        (0..4)
                            .map(|t| {
                                let lane = 4 * c + t;
                                if lane >= lanes {
                                    return 0;
                                }
                                ((x >> (4 * t)) & 15) * (p as u64).pow(lane as u32)
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Lanes { p: p as u64, k: k as usize, add_k, high, chunks }
    }

    fn pack(&self, f: &FiniteField, v: &[u32]) -> u64 {
        let mut w = 0u64;
        for (i, &x) in v.iter().enumerate() {
            for (t, dgt) in f.to_digits(x).into_iter().enumerate() {
                w |= (dgt as u64) << (4 * (i * self.k + t));
            }
        }
        w
    }

    #[inline(always)]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        let m = ((s + self.add_k) & self.high) >> 3;
        s - m * self.p
    }

    #[inline(always)]
    fn index(&self, w: u64) -> usize {
        let mut i = 0u64;
        for (c, t) in self.chunks.iter().enumerate() {
            i += t[((w >> (16 * c)) & 0xffff) as usize];
        }
        i as usize
    }
}

/// Tables for the quadratic fast path.
struct QuadraticTables {
    lanes: Lanes,
    m: usize,
    nv: usize,
    diag: Vec<Vec<u64>>,
    /// `cross[i][k]` for `i < k`: packed `c_ik·x_a·x_b` at `a·M + b`.
    cross: Vec<Vec<Option<Vec<u64>>>>,
}

impl QuadraticTables {
    fn rec(&self, k: usize, partial: u64, xs: &mut [usize], hist: &mut [u64]) {
        let diag = &self.diag[k];
        let crosses: Vec<(&[u64], usize)> = (0..k).filter_map(|i| self.cross[i][k].as_deref().map(|t| (t, xs[i] * self.m))).collect();
        for x in 0..self.m {
            let mut s = self.lanes.add(partial, diag[x]);
            for (t, off) in &crosses {
                s = self.lanes.add(s, t[off + x]);
            }
            if k + 1 == self.nv {
                hist[self.lanes.index(s)] += 1;
            } else {
                xs[k] = x;
                self.rec(k + 1, s, xs, hist);
            }
        }
    }
}

impl PushforwardHistogram {
    /// Builds the histogram, using the packed quadratic path when it applies.
    pub fn build(inst: &CircleInstance, budget: &Budget) -> Result<Self, ArcsError> {
        budget.check("pushforward histogram", inst.total_mass())?;
        if Self::fast_path_applies(inst) {
            Self::build_quadratic(inst)
        } else {
            Self::build_generic(inst, budget)
        }
    }

    fn fast_path_applies(inst: &CircleInstance) -> bool {
        let f = inst.field();
        let lanes = inst.dim_de() * f.k() as usize;
        let m = inst.sections() as u128;
        let has_cross = inst.form.terms.iter().any(|t| t.1.iter().all(|&e| e < 2));
        inst.d() == 2 && f.p() <= 7 && lanes <= 16 && (!has_cross || m * m <= 1 << 22)
    }

    /// Degree-2 path: per-variable square tables, pairwise cross tables and
    /// SWAR lane addition.
    pub fn build_quadratic(inst: &CircleInstance) -> Result<Self, ArcsError> {
        if !Self::fast_path_applies(inst) {
            return Err(ArcsError::Invalid("quadratic fast path does not apply".into()));
        }
        let f = inst.field();
        let curve = &inst.curve;
        let e = inst.e;
        let nv = inst.form.nvars();
        let dim = inst.dim_de();
        let lanes = Lanes::new(f.p(), f.k(), dim);
        let secs = inst.section_vectors();
        let m = secs.len();
        let cup = curve.cup_table(e, e);
        let mut coef = vec![vec![0u32; nv]; nv];
        for (c, ex) in &inst.form.terms {
            let vars: Vec<usize> = ex.iter().enumerate().flat_map(|(j, &k)| std::iter::repeat_n(j, k as usize)).collect();
            coef[vars[0]][vars[1]] = *c;
        }
        let scaled = |c: u32, v: &[u32]| -> Vec<u32> { v.iter().map(|&x| f.mul(c, x)).collect() };
        let squares: Vec<Vec<u32>> = secs.iter().map(|s| cup.apply(f, s, s)).collect();
        let diag: Vec<Vec<u64>> = (0..nv).map(|j| squares.iter().map(|sq| lanes.pack(f, &scaled(coef[j][j], sq))).collect()).collect();
        let any_cross = (0..nv).any(|i| (i + 1..nv).any(|k| coef[i][k] != 0));
        let products: Vec<Vec<u32>> =
            if any_cross { (0..m * m).map(|ab| cup.apply(f, &secs[ab / m], &secs[ab % m])).collect() } else { Vec::new() };
        let cross: Vec<Vec<Option<Vec<u64>>>> = (0..nv)
            .map(|i| {
                (0..nv)
                    .map(|k| (i < k && coef[i][k] != 0).then(|| products.iter().map(|pr| lanes.pack(f, &scaled(coef[i][k], pr))).collect()))
                    .collect()
            })
            .collect();
        let tables = QuadraticTables { lanes, m, nv, diag, cross };
        let size = inst.circle_size() as usize;
        let counts = (0..m)
            .into_par_iter()
            .fold(
                || vec![0u64; size],
                |mut hist, x0| {
                    let mut xs = vec![0usize; nv];
                    xs[0] = x0;
                    let start = tables.diag[0][x0];
                    if nv == 1 {
                        hist[tables.lanes.index(start)] += 1;
                    } else {
                        tables.rec(1, start, &mut xs, &mut hist);
                    }
                    hist
                },
            )
            .reduce(|| vec![0u64; size], merge);
        Ok(PushforwardHistogram { q: f.q(), level: inst.level(), dim, counts })
    }

    /// Any degree: evaluates `f` on every tuple through cup products.
    pub fn build_generic(inst: &CircleInstance, budget: &Budget) -> Result<Self, ArcsError> {
        budget.check("pushforward histogram", inst.total_mass())?;
        let q = inst.q();
        let nv = inst.form.nvars();
        let secs = inst.section_vectors();
        let m = secs.len() as u64;
        let total = inst.total_mass() as u64;
        let size = inst.circle_size() as usize;
        let counts = (0..total)
            .into_par_iter()
            .try_fold(
                || vec![0u64; size],
                |mut hist, code| {
                    let xs: Vec<Vec<u32>> = decode(code, m as u32, nv).into_iter().map(|i| secs[i as usize].clone()).collect();
                    let v = inst.form.eval_sections(&inst.curve, inst.e, &xs)?;
                    hist[encode(&v, q) as usize] += 1;
                    Ok::<_, ArcsError>(hist)
                },
            )
            .try_reduce(|| vec![0u64; size], |a, b| Ok(merge(a, b)))?;
        Ok(PushforwardHistogram { q, level: inst.level(), dim: inst.dim_de(), counts })
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|&c| c as u128).sum()
    }

    pub fn get(&self, v: &[u32]) -> u64 {
        self.counts[encode(v, self.q) as usize]
    }

    /// Number of `x` with `f(x) = 0`.
    pub fn zeros(&self) -> u64 {
        self.counts[0]
    }

    /// `S(α) = Σ_v H[v]·ψ(α·v)`, directly.
    pub fn s_alpha(&self, f: &FiniteField, alpha: &[u32]) -> Result<CyclotomicSum, ArcsError> {
        if alpha.len() != self.dim {
            return Err(ArcsError::Dimension(format!("α has {} coordinates, expected {}", alpha.len(), self.dim)));
        }
        let mut s = CyclotomicSum::zero(f.p());
        for (code, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let v = decode(code as u64, self.q, self.dim);
            s.add_zeta(f.trace(dot(f, alpha, &v)), c as i128);
        }
        Ok(s)
    }
}

fn merge(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(&b) {
        *x += y;
    }
    a
}

/// `S(α)` for every functional, by a character transform along each axis
/// of `F_q^{dim}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    pub p: u32,
    pub q: u32,
    pub dim: usize,
    /// `p − 1` canonical coordinates per functional.
    data: Vec<i64>,
}

impl Spectrum {
    pub fn compute(f: &FiniteField, hist: &PushforwardHistogram, budget: &Budget) -> Result<Self, ArcsError> {
        let p = f.p() as usize;
        let q = f.q() as usize;
        let n = hist.counts.len();
        budget.check("spectrum", (n * p * q) as u128)?;
        let tr: Vec<u8> = (0..q * q).map(|ab| f.trace(f.mul((ab / q) as u32, (ab % q) as u32)) as u8).collect();
        let mut data = vec![0i64; n * p];
        for (v, &c) in hist.counts.iter().enumerate() {
            data[v * p] = c as i64;
        }
        let mut line_in = vec![0i64; q * p];
        let mut line_out = vec![0i64; q * p];
        let mut stride = 1usize;
        for _ in 0..hist.dim {
            let block = stride * q;
            for hi in (0..n).step_by(block) {
                for lo in 0..stride {
                    let base = hi + lo;
                    for b in 0..q {
                        let at = (base + b * stride) * p;
                        line_in[b * p..(b + 1) * p].copy_from_slice(&data[at..at + p]);
                    }
                    line_out.iter_mut().for_each(|x| *x = 0);
                    for a in 0..q {
                        let out = &mut line_out[a * p..(a + 1) * p];
                        for b in 0..q {
                            let rot = tr[a * q + b] as usize;
                            let inp = &line_in[b * p..(b + 1) * p];
                            for (t, &v) in inp.iter().enumerate() {
                                let dst = if t + rot >= p { t + rot - p } else { t + rot };
                                out[dst] += v;
                            }
                        }
                    }
                    for a in 0..q {
                        let at = (base + a * stride) * p;
                        data[at..at + p].copy_from_slice(&line_out[a * p..(a + 1) * p]);
                    }
                }
            }
            stride = block;
        }
        let mut canon = Vec::with_capacity(n * (p - 1));
        for v in 0..n {
            let row = &data[v * p..(v + 1) * p];
            canon.extend(row[..p - 1].iter().map(|&c| c - row[p - 1]));
        }
        Ok(Spectrum { p: f.p(), q: f.q(), dim: hist.dim, data: canon })
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.p as usize - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, idx: usize) -> CyclotomicSum {
        let w = self.p as usize - 1;
        let mut full: Vec<i128> = self.data[idx * w..(idx + 1) * w].iter().map(|&c| c as i128).collect();
        full.push(0);
        CyclotomicSum::from_full(self.p, &full)
    }

    pub fn at(&self, alpha: &[u32]) -> CyclotomicSum {
        self.get(encode(alpha, self.q) as usize)
    }

    pub fn sum_over(&self, indices: impl IntoIterator<Item = usize>) -> CyclotomicSum {
        let w = self.p as usize - 1;
        let mut acc = vec![0i128; w];
        for i in indices {
            for (a, &c) in acc.iter_mut().zip(&self.data[i * w..(i + 1) * w]) {
                *a += c as i128;
            }
        }
        acc.push(0);
        CyclotomicSum::from_full(self.p, &acc)
    }

    pub fn total(&self) -> CyclotomicSum {
        self.sum_over(0..self.len())
    }
}

/// Divisor search space: total degree, point degree and multiplicity caps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DivisorSearch {
    pub max_degree: u32,
    pub max_point_degree: u32,
    pub max_multiplicity: u32,
}

impl DivisorSearch {
    pub fn new(max_degree: u32, max_point_degree: u32, max_multiplicity: u32) -> Self {
        DivisorSearch { max_degree, max_point_degree, max_multiplicity }
    }
}

/// Effective divisors within the search space, ordered by degree and then
/// lexicographically by their sorted parts.
pub fn enumerate_divisors(curve: &Curve, search: &DivisorSearch) -> Result<Vec<EffectiveDivisor>, ArcsError> {
    let points = curve.enumerate_closed_points(search.max_point_degree.min(search.max_degree.max(1)))?;
    let mut out = Vec::new();
    let mut parts = Vec::new();
    divisor_rec(&points, 0, search.max_degree, search.max_multiplicity, &mut parts, &mut out);
    out.sort_by(|a, b| (a.degree(), &a.parts).cmp(&(b.degree(), &b.parts)));
    Ok(out)
}

fn divisor_rec(
    points: &[ClosedPoint],
    i: usize,
    left: u32,
    max_mult: u32,
    parts: &mut Vec<(ClosedPoint, u32)>,
    out: &mut Vec<EffectiveDivisor>,
) {
    if i == points.len() {
        out.push(EffectiveDivisor::new(parts.clone()));
        return;
    }
    divisor_rec(points, i + 1, left, max_mult, parts, out);
    let pt = points[i];
    let mut r = 1;
    while r <= max_mult && r * pt.degree <= left {
        parts.push((pt, r));
        divisor_rec(points, i + 1, left - r * pt.degree, max_mult, parts, out);
        parts.pop();
        r += 1;
    }
}

/// `α ∼ Z`: α kills every section of `O(de∞)(−Z)`.
pub fn factors_through(inst: &CircleInstance, alpha: &[u32], z: &EffectiveDivisor) -> Result<bool, ArcsError> {
    if alpha.len() != inst.dim_de() {
        return Err(ArcsError::Dimension(format!("α has {} coordinates, expected {}", alpha.len(), inst.dim_de())));
    }
    let f = inst.field();
    let kernel = inst.curve.vanishing_subspace(inst.level() as i64, z)?;
    Ok(kernel.iter().all(|v| dot(f, alpha, v) == 0))
}

/// Indices of all functionals factoring through `Z`.
pub fn factoring_indices(inst: &CircleInstance, z: &EffectiveDivisor) -> Result<Vec<u32>, ArcsError> {
    let space = inst.curve.factoring_space(inst.level() as i64, z)?;
    let q = inst.q();
    let mut idx: Vec<u32> = space.elements().iter().map(|v| encode(v, q) as u32).collect();
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ArcKind {
    Major,
    Minor,
}

/// Minimal factoring divisor of one functional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArcClass {
    pub alpha: DualFunctional,
    /// `None` when no divisor within the search space works.
    pub min_z: Option<EffectiveDivisor>,
    pub deg_alpha: Option<u32>,
    pub kind: ArcKind,
}

fn kind_of(deg: Option<u32>, major_bound: i64) -> ArcKind {
    match deg {
        Some(d) if d as i64 <= major_bound => ArcKind::Major,
        _ => ArcKind::Minor,
    }
}

/// First divisor in search order that `α` factors through.
pub fn minimal_subscheme(inst: &CircleInstance, alpha: &[u32], search: &DivisorSearch) -> Result<ArcClass, ArcsError> {
    let divisors = enumerate_divisors(&inst.curve, search)?;
    let mut min_z = None;
    for z in divisors {
        if factors_through(inst, alpha, &z)? {
            min_z = Some(z);
            break;
        }
    }
    let deg_alpha = min_z.as_ref().map(|z| z.degree());
    Ok(ArcClass {
        alpha: DualFunctional { level: inst.level(), coords: alpha.to_vec() },
        kind: kind_of(deg_alpha, inst.major_bound()),
        min_z,
        deg_alpha,
    })
}

/// Minimal divisors of every functional at once, by marking the factoring
/// space of each divisor in search order.
#[derive(Clone, Debug)]
pub struct ArcClassification {
    pub q: u32,
    pub level: u32,
    pub dim: usize,
    pub major_bound: i64,
    pub search: DivisorSearch,
    pub divisors: Vec<EffectiveDivisor>,
    /// Sorted functional indices factoring through each divisor.
    pub spans: Vec<Vec<u32>>,
    pub min_index: Vec<Option<u32>>,
    /// Number of divisors of the minimal degree that the functional factors through.
    pub hits_at_min: Vec<u32>,
}

const NONE_FOUND: u32 = u32::MAX;

impl ArcClassification {
    pub fn compute(inst: &CircleInstance, search: &DivisorSearch, budget: &Budget) -> Result<Self, ArcsError> {
        let size = inst.circle_size();
        budget.check("arc classification", size as u128)?;
        let divisors = enumerate_divisors(&inst.curve, search)?;
        let spans: Vec<Vec<u32>> = divisors.par_iter().map(|z| factoring_indices(inst, z)).collect::<Result<_, _>>()?;
        let mut min_index = vec![NONE_FOUND; size as usize];
        let mut min_deg = vec![u32::MAX; size as usize];
        let mut hits = vec![0u32; size as usize];
        for (i, (z, span)) in divisors.iter().zip(&spans).enumerate() {
            let deg = z.degree();
            for &a in span {
                let a = a as usize;
                if min_index[a] == NONE_FOUND {
                    min_index[a] = i as u32;
                    min_deg[a] = deg;
                    hits[a] = 1;
                } else if min_deg[a] == deg {
                    hits[a] += 1;
                }
            }
        }
        Ok(ArcClassification {
            q: inst.q(),
            level: inst.level(),
            dim: inst.dim_de(),
            major_bound: inst.major_bound(),
            search: *search,
            divisors,
            spans,
            min_index: min_index.into_iter().map(|i| (i != NONE_FOUND).then_some(i)).collect(),
            hits_at_min: hits,
        })
    }

    pub fn len(&self) -> usize {
        self.min_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min_index.is_empty()
    }

    pub fn min_divisor(&self, idx: usize) -> Option<&EffectiveDivisor> {
        self.min_index[idx].map(|i| &self.divisors[i as usize])
    }

    pub fn degree(&self, idx: usize) -> Option<u32> {
        self.min_divisor(idx).map(|z| z.degree())
    }

    pub fn kind(&self, idx: usize) -> ArcKind {
        kind_of(self.degree(idx), self.major_bound)
    }

    pub fn class(&self, idx: usize) -> ArcClass {
        let deg_alpha = self.degree(idx);
        ArcClass {
            alpha: DualFunctional::from_index(self.level, self.q, self.dim, idx as u64),
            min_z: self.min_divisor(idx).cloned(),
            deg_alpha,
            kind: kind_of(deg_alpha, self.major_bound),
        }
    }

    /// Functionals with no factoring divisor in the search space.
    pub fn unfactored(&self) -> usize {
        self.min_index.iter().filter(|m| m.is_none()).count()
    }

    /// Functionals of degree `≤ bound` whose minimal divisor is not unique.
    pub fn non_unique_below(&self, bound: i64) -> usize {
        (0..self.len()).filter(|&i| self.degree(i).is_some_and(|d| d as i64 <= bound) && self.hits_at_min[i] != 1).count()
    }

    pub fn major_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kind(i) == ArcKind::Major).collect()
    }

    pub fn minor_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.kind(i) == ArcKind::Minor).collect()
    }

    /// Histogram of `deg(α)`; the last bucket counts unfactored functionals.
    pub fn degree_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.search.max_degree as usize + 2];
        for i in 0..self.len() {
            match self.degree(i) {
                Some(d) => h[d as usize] += 1,
                None => *h.last_mut().unwrap() += 1,
            }
        }
        h
    }
}

/// Result of checking `α∼Z₁, α∼Z₂ ⇒ α∼Z₁∩Z₂` whenever `deg(Z₁∪Z₂) < de−2g+2`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IntersectionReport {
    pub pairs_checked: u64,
    pub violations: Vec<(u32, usize, usize)>,
}

pub fn intersection_check(inst: &CircleInstance, cls: &ArcClassification) -> Result<IntersectionReport, ArcsError> {
    let mut by_alpha: Vec<Vec<u32>> = vec![Vec::new(); cls.len()];
    for (i, span) in cls.spans.iter().enumerate() {
        for &a in span {
            by_alpha[a as usize].push(i as u32);
        }
    }
    let lookup: HashMap<&EffectiveDivisor, usize> = cls.divisors.iter().enumerate().map(|(i, z)| (z, i)).collect();
    let limit = inst.level() as i64 - 2 * inst.genus() as i64 + 2;
    let mut report = IntersectionReport::default();
    for (a, zs) in by_alpha.iter().enumerate() {
        for (x, &i) in zs.iter().enumerate() {
            for &j in &zs[x + 1..] {
                let (z1, z2) = (&cls.divisors[i as usize], &cls.divisors[j as usize]);
                if (z1.union(z2).degree() as i64) >= limit {
                    continue;
                }
                report.pairs_checked += 1;
                let meet = z1.intersect(z2);
                let ok = match lookup.get(&meet) {
                    Some(&k) => cls.spans[k].binary_search(&(a as u32)).is_ok(),
                    None => factors_through(inst, &decode(a as u64, cls.q, cls.dim), &meet)?,
                };
                if !ok {
                    report.violations.push((a as u32, i as usize, j as usize));
                }
            }
        }
    }
    Ok(report)
}

fn rat_pow(q: u64, e: i64) -> BigRational {
    let base = BigInt::from(q).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// `#{v ∈ κ^{n+1} : f(v) = 0}`.
pub fn cone_points(form: &SymmetricForm, kappa: &FiniteField, budget: &Budget) -> Result<u128, ArcsError> {
    let nv = form.nvars();
    let total = qpow(kappa.q(), nv as u32);
    budget.check("cone points", total)?;
    let count = (0..total as u64).into_par_iter().filter(|&c| form.eval_point(kappa, &decode(c, kappa.q(), nv)) == 0).count();
    Ok(count as u128)
}

/// `#CX(κ[t]/t^r)` by lifting solutions one jet order at a time; every
/// candidate lift is tested by full evaluation.
pub fn artinian_count_enum(form: &SymmetricForm, kappa: &Arc<FiniteField>, r: u32, budget: &Budget) -> Result<u128, ArcsError> {
    if r == 0 {
        return Err(ArcsError::Invalid("precision r must be at least 1".into()));
    }
    let nv = form.nvars();
    let qq = kappa.q();
    let lifts = qpow(qq, nv as u32);
    budget.check("Artinian lifts", lifts)?;
    // level-k solutions, flattened as nv·k coefficients, variable-major
    let mut level: Vec<u32> = Vec::new();
    let mut count = 0u128;
    for code in 0..lifts as u64 {
        let v = decode(code, qq, nv);
        if form.eval_point(kappa, &v) == 0 {
            level.extend_from_slice(&v);
            count += 1;
        }
    }
    for k in 1..r as usize {
        budget.check("Artinian lifts", count.saturating_mul(lifts))?;
        let last = k + 1 == r as usize;
        let width = nv * k;
        let sols: Vec<Vec<u32>> = level
            .par_chunks(width)
            .map(|s| {
                let mut out = Vec::new();
                let mut vars: Vec<Vec<u32>> = (0..nv)
                    .map(|j| {
                        let mut x = s[j * k..(j + 1) * k].to_vec();
                        x.push(0);
                        x
                    })
                    .collect();
                for code in 0..lifts as u64 {
                    let c = decode(code, qq, nv);
                    for (x, &cj) in vars.iter_mut().zip(&c) {
                        x[k] = cj;
                    }
                    if form.eval_series(kappa, &vars, k + 1).iter().all(|&x| x == 0) {
                        if last {
                            out.push(0);
                        } else {
                            for x in &vars {
                                out.extend_from_slice(x);
                            }
                        }
                    }
                }
                out
            })
            .collect();
        if last {
            count = sols.iter().map(|s| s.len() as u128).sum();
        } else {
            level = sols.concat();
            count = (level.len() / (nv * (k + 1))) as u128;
        }
    }
    Ok(count)
}

/// `#CX(O_x/m_x^r)` at a closed point, enumerated over `κ(x)`.
pub fn artinian_count_at(form: &SymmetricForm, pt: &ClosedPoint, r: u32, budget: &Budget) -> Result<u128, ArcsError> {
    let kappa = field(form.field.p(), form.field.k() * pt.degree)?;
    artinian_count_enum(form, &kappa, r, budget)
}

/// Closed-form Artinian count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtinianFormula {
    /// `|CX(O/m^r)| / #κ^{rn}`.
    pub normalized: BigRational,
    pub count: BigInt,
    pub cone_points: u128,
}

/// Closed form from the residue-field count, valid when the cone is smooth
/// away from the vertex.
pub fn artinian_formula_from(cx_kappa: u128, kappa_q: u64, n: usize, d: u32, r: u32) -> Result<ArtinianFormula, ArcsError> {
    if r == 0 {
        return Err(ArcsError::Invalid("precision r must be at least 1".into()));
    }
    let (n_i, d_i, r_i) = (n as i64, d as i64, r as i64);
    let ceil = (r_i + d_i - 1) / d_i;
    let cx0 = BigRational::new(BigInt::from(cx_kappa) - 1, BigInt::from(kappa_q).pow(n as u32));
    let mut value = BigRational::zero();
    for i in 0..ceil {
        value += rat_pow(kappa_q, i * (d_i - n_i - 1)) * &cx0;
    }
    value += rat_pow(kappa_q, r_i - (n_i + 1) * ceil);
    let scaled = &value * rat_pow(kappa_q, r_i * n_i);
    if !scaled.is_integer() {
        return Err(ArcsError::Invalid("closed form is not integral".into()));
    }
    Ok(ArtinianFormula { normalized: value, count: scaled.to_integer(), cone_points: cx_kappa })
}

pub fn artinian_count_formula(
    form: &SymmetricForm,
    kappa: &Arc<FiniteField>,
    r: u32,
    budget: &Budget,
) -> Result<ArtinianFormula, ArcsError> {
    if !form.with_field(kappa).smoothness_check(2)? {
        return Err(ArcsError::SingularCone);
    }
    let cx = cone_points(form, kappa, budget)?;
    artinian_formula_from(cx, kappa.q() as u64, form.n, form.d, r)
}

/// Predicted `|CX(rx)|/#κ^{rn} − |CX((r−1)x)|/#κ^{(r−1)n}` for `r ≥ 2`, in the
/// two cases `r ≡ 1 mod d` and otherwise.
pub fn artinian_difference_formula(cx_kappa: u128, kappa_q: u64, n: usize, d: u32, r: u32) -> BigRational {
    assert!(r >= 2);
    let (n_i, d_i, r_i) = (n as i64, d as i64, r as i64);
    let ceil = |x: i64| (x + d_i - 1) / d_i;
    let mut out = rat_pow(kappa_q, -(n_i + 1) * ceil(r_i) + r_i) - rat_pow(kappa_q, -(n_i + 1) * ceil(r_i - 1) + r_i - 1);
    if r_i % d_i == 1 % d_i {
        let cx0 = BigRational::new(BigInt::from(cx_kappa) - 1, BigInt::from(kappa_q).pow(n as u32));
        out += cx0 * rat_pow(kappa_q, (ceil(r_i) - 1) * (d_i - n_i - 1));
    }
    out
}

/// Both sides of the major-arc evaluation for one `Z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MajorArcCheck {
    pub divisor: EffectiveDivisor,
    pub functionals: usize,
    pub lhs: CyclotomicSum,
    pub cx_z: BigInt,
    pub rhs: BigRational,
    pub holds: bool,
}

/// `Σ_{α∼Z} S(α)` over the factoring space of `Z`.
pub fn sum_over_factoring(inst: &CircleInstance, spectrum: &Spectrum, z: &EffectiveDivisor) -> Result<(CyclotomicSum, usize), ArcsError> {
    let idx = factoring_indices(inst, z)?;
    Ok((spectrum.sum_over(idx.iter().map(|&i| i as usize)), idx.len()))
}

pub fn major_arc_sum_check(
    inst: &CircleInstance,
    spectrum: &Spectrum,
    z: &EffectiveDivisor,
    budget: &Budget,
) -> Result<MajorArcCheck, ArcsError> {
    let bound = inst.major_bound();
    if z.degree() as i64 > bound {
        return Err(ArcsError::MajorRegime { deg: z.degree(), bound });
    }
    let (lhs, functionals) = sum_over_factoring(inst, spectrum, z)?;
    let mut cx_z = BigInt::one();
    for (pt, r) in &z.parts {
        cx_z *= BigInt::from(artinian_count_at(&inst.form, pt, *r, budget)?);
    }
    let q = inst.q() as u64;
    let (n, e, g) = (inst.n() as i64, inst.e as i64, inst.genus() as i64);
    let rhs = rat_pow(q, (n + 1) * (e + 1 - g)) * BigRational::from_integer(cx_z.clone()) * rat_pow(q, -n * z.degree() as i64);
    let holds = rhs.is_integer() && lhs.as_integer().map(BigInt::from) == Some(rhs.to_integer());
    Ok(MajorArcCheck { divisor: z.clone(), functionals, lhs, cx_z, rhs, holds })
}

/// `Σ_{α∼Z′+Z″} S(α) · q^{(n+1)(e+1−g)} = Σ_{α∼Z′} S(α) · Σ_{α∼Z″} S(α)`
/// for disjoint `Z′`, `Z″`.
pub fn multiplicativity_check(
    inst: &CircleInstance,
    spectrum: &Spectrum,
    z1: &EffectiveDivisor,
    z2: &EffectiveDivisor,
) -> Result<bool, ArcsError> {
    if !z1.is_disjoint(z2) {
        return Err(ArcsError::Invalid("divisors must have disjoint support".into()));
    }
    let (s, _) = sum_over_factoring(inst, spectrum, &z1.sum(z2))?;
    let (s1, _) = sum_over_factoring(inst, spectrum, z1)?;
    let (s2, _) = sum_over_factoring(inst, spectrum, z2)?;
    let (n, e, g) = (inst.n() as u32, inst.e as i64, inst.genus() as i64);
    let scale = qpow(inst.q(), (n + 1) * (e + 1 - g).max(0) as u32) as i128;
    Ok(s.scale(scale) == s1.mul(&s2))
}

/// Direct census of `M_e` and its base-point-free part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub count_me: u128,
    pub count_bpf: u128,
    pub mor_count: BigRational,
    /// Base points are tested at closed points of degree at most this.
    pub bpf_max_degree: u32,
}

/// Enumerates `P_{e,C}^{n+1}` with polynomial arithmetic on `a(x) + b(x)y`,
/// independently of the cup-product tables.
pub fn census(inst: &CircleInstance, budget: &Budget) -> Result<Census, ArcsError> {
    let total = inst.total_mass();
    budget.check("census", total)?;
    let curve = &inst.curve;
    let basis = curve.rr_basis(inst.e as i64)?;
    let secs = inst.section_vectors();
    let elems: Vec<FunctionElem> = secs.iter().map(|c| curve.elem_from_coords(&basis, c)).collect();
    let bpf_deg = inst.e.max(1);
    let points = curve.enumerate_closed_points(bpf_deg)?;
    let mut vanish = vec![vec![false; secs.len()]; points.len()];
    for (pi, pt) in points.iter().enumerate() {
        for (a, s) in secs.iter().enumerate() {
            vanish[pi][a] = curve.vanishes_at(inst.e, s, pt)?;
        }
    }
    let nv = inst.form.nvars();
    let m = secs.len() as u32;
    let terms: Vec<(u32, Vec<u32>)> = inst.form.terms.clone();
    let (me, bpf) = (0..total as u64)
        .into_par_iter()
        .map(|code| {
            let xs = decode(code, m, nv);
            let mut acc = FunctionElem { a: vec![], b: vec![] };
            for (c, ex) in &terms {
                let mut t = FunctionElem { a: vec![*c], b: vec![] };
                for (j, &ej) in ex.iter().enumerate() {
                    for _ in 0..ej {
                        t = curve.elem_mul(&t, &elems[xs[j] as usize]);
                    }
                }
                acc = curve.elem_add(&acc, &t);
            }
            if !is_zero_elem(&acc) {
                return (0u128, 0u128);
            }
            let free = (0..points.len()).all(|pi| !xs.iter().all(|&a| vanish[pi][a as usize]));
            (1, free as u128)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(Census {
        count_me: me,
        count_bpf: bpf,
        mor_count: BigRational::new(BigInt::from(bpf), BigInt::from(inst.q() - 1)),
        bpf_max_degree: bpf_deg,
    })
}

fn is_zero_elem(e: &FunctionElem) -> bool {
    e.a.iter().all(|&c| c == 0) && e.b.iter().all(|&c| c == 0)
}

/// One level of the dimension probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub extension: u32,
    pub q: u32,
    pub count: u128,
    pub mu_hat: i64,
    /// `count / q^{μ̂}` as `num/den`.
    pub ratio: String,
    pub ratio_f64: f64,
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionProbe {
    pub rows: Vec<ProbeRow>,
    /// `|ratio − 1|` strictly decreases along the tower.
    pub converging: bool,
}

/// `#M_e / q^{μ̂}` over `F_{q^j}` for each `j` in `tower`, with `#M_e` read
/// off the pushforward histogram.
pub fn dimension_probe(inst: &CircleInstance, tower: &[u32], budget: &Budget) -> Result<DimensionProbe, ArcsError> {
    let mut rows = Vec::new();
    for &j in tower {
        let bc = inst.base_change(j)?;
        let hist = PushforwardHistogram::build(&bc, budget)?;
        let count = hist.zeros() as u128;
        let mu_hat = bc.mu_hat();
        let ratio = BigRational::from_integer(BigInt::from(count)) * rat_pow(bc.q() as u64, -mu_hat);
        let ratio_f64 = ratio_to_f64(&ratio);
        rows.push(ProbeRow {
            extension: j,
            q: bc.q(),
            count,
            mu_hat,
            ratio: format!("{}/{}", ratio.numer(), ratio.denom()),
            ratio_f64,
            log_ratio: ratio_f64.ln(),
        });
    }
    let converging = rows.windows(2).all(|w| (w[1].ratio_f64 - 1.0).abs() < (w[0].ratio_f64 - 1.0).abs());
    Ok(DimensionProbe { rows, converging })
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Sum of `S(α)` over minor arcs, normalized by `q^{(n+1)(e+1−g)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinorArcTail {
    pub q: u32,
    pub major_count: usize,
    pub minor_count: usize,
    pub major_sum: CyclotomicSum,
    pub minor_sum: CyclotomicSum,
    /// `|σ_j(minor_sum)| / q^{(n+1)(e+1−g)}` for `j = 1..p−1`.
    pub normalized_abs: Vec<f64>,
}

/// Major arcs are found by marking the factoring spaces of all divisors of
/// degree `≤ e − 2g + 1`, which is a complete search at that degree.
pub fn minor_arc_tail(inst: &CircleInstance, spectrum: &Spectrum, budget: &Budget) -> Result<MinorArcTail, ArcsError> {
    let bound = inst.major_bound();
    let mut major = vec![false; spectrum.len()];
    if bound >= 0 {
        let b = bound as u32;
        let search = DivisorSearch::new(b, b.max(1), b.max(1));
        let cls = ArcClassification::compute(inst, &search, budget)?;
        for span in &cls.spans {
            for &a in span {
                major[a as usize] = true;
            }
        }
    }
    let major_idx: Vec<usize> = (0..major.len()).filter(|&i| major[i]).collect();
    let minor_idx: Vec<usize> = (0..major.len()).filter(|&i| !major[i]).collect();
    let major_sum = spectrum.sum_over(major_idx.iter().copied());
    let minor_sum = spectrum.sum_over(minor_idx.iter().copied());
    let (n, e, g) = (inst.n() as i32, inst.e as i32, inst.genus() as i32);
    let norm = (inst.q() as f64).powi((n + 1) * (e + 1 - g));
    let normalized_abs = (1..inst.field().p()).map(|j| minor_sum.embedding_abs2(j).sqrt() / norm).collect();
    Ok(MinorArcTail { q: inst.q(), major_count: major_idx.len(), minor_count: minor_idx.len(), major_sum, minor_sum, normalized_abs })
}

/// Factoring spaces of all divisors in a search space, for `deg(α)` of
/// individual functionals when the full circle is too large to mark.
#[derive(Clone, Debug)]
pub struct FactoringIndex {
    pub divisors: Vec<EffectiveDivisor>,
    spaces: Vec<RowSpace>,
}

impl FactoringIndex {
    pub fn build(inst: &CircleInstance, search: &DivisorSearch) -> Result<Self, ArcsError> {
        let divisors = enumerate_divisors(&inst.curve, search)?;
        let level = inst.level() as i64;
        let spaces = divisors.par_iter().map(|z| inst.curve.factoring_space(level, z)).collect::<Result<Vec<_>, _>>()?;
        Ok(FactoringIndex { divisors, spaces })
    }

    /// First divisor in search order that `α` factors through.
    pub fn min_divisor(&self, alpha: &[u32]) -> Option<&EffectiveDivisor> {
        self.spaces.iter().position(|s| s.contains(alpha)).map(|i| &self.divisors[i])
    }
}
