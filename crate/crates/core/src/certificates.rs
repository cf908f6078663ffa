//! Exact-rational bookkeeping for the minor-arc budget over all `deg Z`, the
//! degree thresholds, and the Frobenius/Artin–Schreier parameter planner.

use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::minor_arc::choose_s;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("deg Z = {deg_z} outside [{lo}, {hi}]")]
    OutOfRange { deg_z: i64, lo: i64, hi: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no admissible m_x up to {limit}; trace: {trace:?}")]
    InfeasibleWindow { limit: u64, trace: Vec<String> },
    #[error("arithmetic overflow")]
    Overflow,
}

pub type Rational = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ParameterTuple {
    pub n: u32,
    pub d: u32,
    pub e: u32,
    pub g: u32,
}

impl ParameterTuple {
    pub fn new(n: u32, d: u32, e: u32, g: u32) -> Self {
        ParameterTuple { n, d, e, g }
    }

    /// `μ = (n+1)(e+1−g) − de − 2 + 2g`.
    pub fn mu(&self) -> i64 {
        let (n, d, e, g) = self.wide();
        (n + 1) * (e + 1 - g) - d * e - 2 + 2 * g
    }

    /// `μ̂ = μ − g + 1`.
    pub fn mu_hat(&self) -> i64 {
        self.mu() - self.g as i64 + 1
    }

    /// `[e − 2g + 2, ⌊de/2⌋ + 1]`, clipped below at 0.
    pub fn deg_z_range(&self) -> (i64, i64) {
        let (_, d, e, g) = self.wide();
        ((e - 2 * g + 2).max(0), d * e / 2 + 1)
    }

    fn wide(&self) -> (i64, i64, i64, i64) {
        (self.n as i64, self.d as i64, self.e as i64, self.g as i64)
    }
}

/// `f(g)`: 0 for `g ≤ 1`, `(g+1)/2` otherwise.
pub fn f_of_g(g: u32) -> Rational {
    if g <= 1 {
        Rational::from_integer(0)
    } else {
        Rational::new(g as i128 + 1, 2)
    }
}

/// One `deg Z` row of the minor-arc budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinorArcBudget {
    pub deg_z: i64,
    pub s: u32,
    /// `e − s − g + 1`, meaningful only when `valid`.
    pub h0: i64,
    /// `e − s > 2g − 2`.
    pub valid: bool,
    #[serde(serialize_with = "ser_ratio")]
    pub fg: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub value: Rational,
}

fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    if r.is_integer() {
        s.serialize_str(&r.numer().to_string())
    } else {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }
}

/// `2·deg Z − (d−1)(e+1−g)(n+1)/2^{d−1}
///   + [(n+1)((d−1)s + f(g)) + h⁰·(d−2)(n+1)]/2^{d−1}`.
pub fn minor_arc_exponent(t: &ParameterTuple, deg_z: i64) -> Result<MinorArcBudget, CertificateError> {
    if t.d < 2 || t.e < 1 {
        return Err(CertificateError::Invalid(format!("{t:?}")));
    }
    let (lo, hi) = t.deg_z_range();
    if deg_z < lo || deg_z > hi {
        return Err(CertificateError::OutOfRange { deg_z, lo, hi });
    }
    let (n, d, e, g) = (t.n as i128, t.d as i128, t.e as i128, t.g as i128);
    let s = choose_s(deg_z as u32, t.d, t.e, t.g);
    let si = s as i128;
    let h0 = e - si - g + 1;
    let valid = e - si > 2 * g - 2;
    let fg = f_of_g(t.g);
    let two = 1i128.checked_shl(t.d - 1).ok_or(CertificateError::Overflow)?;
    let main = Rational::from_integer(2 * deg_z as i128) - Rational::new((d - 1) * (e + 1 - g) * (n + 1), two);
    let bracket = (Rational::from_integer((d - 1) * si) + fg) * (n + 1) + Rational::from_integer(h0 * (d - 2) * (n + 1));
    let value = main + bracket / two;
    Ok(MinorArcBudget { deg_z, s, h0: h0 as i64, valid, fg, value })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdVerdict {
    pub tuple: ParameterTuple,
    pub pass: bool,
    /// First `deg Z` with a nonnegative value or an invalid row.
    pub witness: Option<i64>,
    pub all_valid: bool,
    pub rows: Vec<MinorArcBudget>,
}

/// PASS iff every row in range is negative and valid.
pub fn verify_thresholds(t: &ParameterTuple) -> Result<ThresholdVerdict, CertificateError> {
    if t.d < 2 || t.e < 1 {
        return Err(CertificateError::Invalid(format!("{t:?}")));
    }
    let (lo, hi) = t.deg_z_range();
    let rows = (lo..=hi).map(|z| minor_arc_exponent(t, z)).collect::<Result<Vec<_>, _>>()?;
    let witness = rows.iter().find(|r| !r.valid || r.value >= Rational::from_integer(0)).map(|r| r.deg_z);
    let all_valid = rows.iter().all(|r| r.valid);
    Ok(ThresholdVerdict { tuple: *t, pass: witness.is_none(), witness, all_valid, rows })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrontierRow {
    pub e: u32,
    pub pass: bool,
    pub first_fail: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Frontier {
    pub n: u32,
    pub d: u32,
    pub g: u32,
    pub rows: Vec<FrontierRow>,
    pub minimal_passing_e: Option<u32>,
}

pub fn frontier_scan(n: u32, d: u32, g: u32, e_range: std::ops::RangeInclusive<u32>) -> Result<Frontier, CertificateError> {
    let mut rows = Vec::new();
    for e in e_range {
        let v = verify_thresholds(&ParameterTuple::new(n, d, e, g))?;
        rows.push(FrontierRow { e, pass: v.pass, first_fail: v.witness });
    }
    let minimal_passing_e = rows.iter().find(|r| r.pass).map(|r| r.e);
    Ok(Frontier { n, d, g, rows, minimal_passing_e })
}

/// Least `n` in the hypothesis table: `2^d(d−1) + 1`.
pub fn threshold_n(d: u32) -> u64 {
    (1u64 << d) * (d as u64 - 1) + 1
}

/// Least `e` in the hypothesis table for `(d, g)`, `g ≥ 1`.
pub fn threshold_e(d: u32, g: u32) -> u64 {
    let (d, g) = (d as i128, g.max(1) as i128);
    let v: i128 = match (d, g) {
        (2, 1) => 14,
        (2, _) => Rational::new(35 * g - 15, 2).ceil().to_integer(),
        (3, 1) => 45,
        (3, _) => Rational::new(170 * g + 32, 3).ceil().to_integer(),
        (_, 1) => (1i128 << d) * (d - 1) * (d - 1) + 1,
        _ => {
            (1i128 << (d - 1)) * (d - 1) * (d - 1) * (3 * g + 1)
                + d * Rational::new(3 * g - 1, 2).ceil().to_integer()
                + Integer::div_floor(&(g - 1), &2)
        }
    };
    v as u64
}

/// The hypothesis-table rows at minimal parameters for `d ∈ {2,3,4}`, `g ∈ {1,2}`.
pub fn table_rows() -> Vec<ParameterTuple> {
    let mut out = Vec::new();
    for d in 2..=4 {
        for g in 1..=2 {
            out.push(ParameterTuple::new(threshold_n(d) as u32, d, threshold_e(d, g) as u32, g));
        }
    }
    out
}

/// Parameters of the Frobenius/Artin–Schreier construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FujitaCertificate {
    pub d: u32,
    pub n: u32,
    pub g_c: u64,
    pub e_m: u64,
    pub m: u64,
    pub p: u64,
    pub b: u32,
    pub m_x: u64,
    pub g_c_prime: u64,
    pub trace: Vec<String>,
}

impl FujitaCertificate {
    /// `e_m·p^{b+1}`.
    pub fn degree(&self) -> Option<u128> {
        (self.p as u128).checked_pow(self.b + 1)?.checked_mul(self.e_m as u128)
    }
}

fn four_d(d: u32) -> u128 {
    1u128 << (2 * d)
}

fn is_prime(n: u64) -> bool {
    crate::algebra::field::is_prime(n)
}

fn p_cond(d: u32, n: u32, g_c: u64, p: u64) -> bool {
    let k = 2 * four_d(d) * (n as u128 + 1 - d as u128);
    k * (p as u128 - 1) + k + 1 < p as u128 * g_c as u128
}

/// Twice the Artin–Schreier genus, `2p·g(C) + (p−1)(m_x−1)`.
fn genus_prime_2(p: u64, g_c: u64, m_x: u64) -> u128 {
    2 * p as u128 * g_c as u128 + (p as u128 - 1) * (m_x as u128 - 1)
}

fn window_ok(d: u32, p: u64, deg: u128, g_prime_2: u128) -> bool {
    // 2·4^d·g′ = 4^d·(2g′)
    let lower = four_d(d) * g_prime_2;
    deg >= lower && deg - lower < 2 * (p as u128 - 1) * four_d(d)
}

const MAX_P: u64 = 10_000;
const MAX_B: u32 = 20;
const MAX_MX: u64 = 1_000_000;

/// Least `p`, `b`, `m_x` satisfying the construction's constraints.
pub fn fujita_plan(d: u32, n: u32, g_c: u64, e_m: u64) -> Result<FujitaCertificate, CertificateError> {
    if !(2..=30).contains(&d) {
        return Err(CertificateError::Precondition("2 ≤ d ≤ 30".into()));
    }
    if (n as u64) < threshold_n(d) {
        return Err(CertificateError::Precondition(format!("n ≥ {}", threshold_n(d))));
    }
    if e_m < 2 {
        return Err(CertificateError::Precondition("e_m ≥ 2".into()));
    }
    let k = 2 * four_d(d) * (n as u128 + 1 - d as u128);
    if (g_c as u128) <= k {
        return Err(CertificateError::Precondition(format!("g(C) > {k}")));
    }
    let m = (k + 1) as u64;
    let mut trace = vec![format!("m = {m}")];
    let p = (d as u64 + 1..=MAX_P)
        .filter(|&p| p % 2 == 1 && is_prime(p))
        .find(|&p| {
            let ok = p_cond(d, n, g_c, p);
            trace.push(format!("p = {p}: {}", if ok { "accepted" } else { "rejected" }));
            ok
        })
        .ok_or_else(|| CertificateError::Precondition(format!("no prime p ≤ {MAX_P}")))?;
    let target = 2 * four_d(d) * p as u128 * g_c as u128;
    let b = (0..=MAX_B)
        .find(|&b| (p as u128).checked_pow(b + 1).is_some_and(|pw| pw * e_m as u128 >= target))
        .ok_or(CertificateError::Overflow)?;
    let deg = (p as u128).pow(b + 1) * e_m as u128;
    trace.push(format!("b = {b}: e_m p^(b+1) = {deg} ≥ {target}"));
    let mut m_x = None;
    for cand in 1..=MAX_MX {
        if cand % p == 0 {
            continue;
        }
        let g2 = genus_prime_2(p, g_c, cand);
        if four_d(d) * g2 > deg {
            trace.push(format!("m_x = {cand}: 2·4^d·g(C′) exceeds e_m p^(b+1)"));
            break;
        }
        if window_ok(d, p, deg, g2) {
            trace.push(format!("m_x = {cand}: window holds"));
            m_x = Some(cand);
            break;
        }
    }
    let m_x = m_x.ok_or(CertificateError::InfeasibleWindow { limit: MAX_MX, trace: trace.clone() })?;
    let g2 = genus_prime_2(p, g_c, m_x);
    Ok(FujitaCertificate { d, n, g_c, e_m, m, p, b, m_x, g_c_prime: (g2 / 2) as u64, trace })
}

/// Per-gate booleans for a certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FujitaGates {
    pub m_formula: bool,
    pub genus_formula: bool,
    pub window: bool,
    pub p_odd_prime_above_d: bool,
    pub p_condition: bool,
    pub p_minimal: bool,
    pub p_not_dividing_m_x: bool,
    pub b_condition: bool,
    pub b_minimal: bool,
    pub m_x_minimal: bool,
    pub preconditions: bool,
    /// `e_m p^{b+1}(n+1−d)/m < g(C′) − 1`.
    pub gate_i: bool,
    /// `e_m p^{b+1} ≥ 2·4^d g(C′)` and the dimension chain for `1 ≤ n′ ≤ n−2`.
    pub gate_ii: bool,
    /// `e_m p^{b+1}` meets the degree threshold at genus `g(C′)`.
    pub gate_iii: bool,
    pub all: bool,
}

pub fn fujita_gap_check(c: &FujitaCertificate) -> FujitaGates {
    let (d, n) = (c.d, c.n);
    let fd = four_d(d.min(60));
    let nd = (n as i128 + 1 - d as i128).max(0) as u128;
    let k = 2 * fd * nd;
    let deg = c.degree().unwrap_or(u128::MAX);
    let p = c.p;
    let p_ok = p > d as u64 && p % 2 == 1 && is_prime(p);
    let m_formula = c.m as u128 == k + 1;
    let g2 = if p >= 1 && c.m_x >= 1 { genus_prime_2(p, c.g_c, c.m_x) } else { u128::MAX };
    let genus_formula = g2 % 2 == 0 && 2 * c.g_c_prime as u128 == g2;
    let gp = c.g_c_prime as u128;
    let window = p_ok && window_ok(d, p, deg, 2 * gp);
    let p_condition = p_ok && p_cond(d, n, c.g_c, p);
    let p_minimal = (d as u64 + 1..p).filter(|&x| x % 2 == 1 && is_prime(x)).all(|x| !p_cond(d, n, c.g_c, x));
    let p_not_dividing_m_x = p_ok && !c.m_x.is_multiple_of(p);
    let target = 2 * fd * p as u128 * c.g_c as u128;
    let b_condition = deg >= target;
    let b_minimal = c.b == 0 || (p as u128).checked_pow(c.b).is_some_and(|pw| pw * (c.e_m as u128) < target);
    let m_x_minimal = p_ok && (1..c.m_x).filter(|&x| x % p != 0).all(|x| !window_ok(d, p, deg, genus_prime_2(p, c.g_c, x)));
    // The threshold formulas are only evaluated where they cannot overflow.
    let d_ok = (2..=30).contains(&d);
    let preconditions = d_ok && (n as u64) >= threshold_n(d) && c.e_m >= 2 && (c.g_c as u128) > k;
    let gate_i = c.m > 0 && gp >= 1 && deg.checked_mul(nd).is_some_and(|l| l < c.m as u128 * (gp - 1));
    let chain = (1..=n.saturating_sub(2) as u128).all(|n_prime| {
        let lhs = gp as i128 * (k as i128 - n as i128 + 1) + n as i128 - 1;
        lhs >= n_prime as i128
    });
    let gate_ii = deg >= 2 * fd * gp && chain;
    let gate_iii = d_ok && deg >= threshold_e(d, c.g_c_prime.min(u32::MAX as u64) as u32) as u128;
    let all = m_formula
        && genus_formula
        && window
        && p_ok
        && p_condition
        && p_minimal
        && p_not_dividing_m_x
        && b_condition
        && b_minimal
        && m_x_minimal
        && preconditions
        && gate_i
        && gate_ii
        && gate_iii;
    FujitaGates {
        m_formula,
        genus_formula,
        window,
        p_odd_prime_above_d: p_ok,
        p_condition,
        p_minimal,
        p_not_dividing_m_x,
        b_condition,
        b_minimal,
        m_x_minimal,
        preconditions,
        gate_i,
        gate_ii,
        gate_iii,
        all,
    }
}
