use std::sync::Arc;
use std::time::{Duration, Instant};

use fqcircle_core::algebra::{decode, field};
use fqcircle_core::arcs::*;
use fqcircle_core::certificates::*;
use fqcircle_core::minor_arc::*;
use fqcircle_core::*;
use num_bigint::BigInt;
use num_rational::BigRational;

const CRIT1_LIMIT: Duration = Duration::from_secs(30);
const CRIT3_LIMIT: Duration = Duration::from_secs(60);
const CRIT7_SCAN_LIMIT: Duration = Duration::from_secs(1);
const WEYL_REL_TOL: f64 = 1e-6;
const D3_SAMPLES: usize = 100;
const G2_SAMPLES: usize = 100;
const SEED: u64 = 20240601;

/// Criteria that cannot hold on their prescribed instance; see the README.
const KNOWN_RED: &[u32] = &[8];

type Outcome = Result<(bool, String), Error>;

struct Instances {
    conic: CircleInstance,
    conic_spectrum: Spectrum,
    budget: Budget,
}

fn conic() -> Result<Instances, Error> {
    let budget = Budget::default();
    let curve = Arc::new(Curve::parse("p=3 k=1 kind=hyperelliptic h=x^3+x+1")?);
    let form = SymmetricForm::parse(&curve.field, 2, "x0^2+x1^2+x2^2")?;
    let conic = CircleInstance::new(curve, form, 3)?;
    let hist = PushforwardHistogram::build(&conic, &budget)?;
    let conic_spectrum = Spectrum::compute(conic.field(), &hist, &budget)?;
    Ok(Instances { conic, conic_spectrum, budget })
}

fn cubic_instance() -> Result<CircleInstance, Error> {
    let curve = Arc::new(Curve::parse("p=5 k=1 kind=hyperelliptic h=x^3+x+1")?);
    let form = SymmetricForm::parse(&curve.field, 1, "x0^3+x0*x1^2+x1^3")?;
    Ok(CircleInstance::new(curve, form, 3)?)
}

fn genus_two_instance() -> Result<CircleInstance, Error> {
    let curve = Arc::new(Curve::parse("p=3 k=1 kind=hyperelliptic h=x^5+2*x+1")?);
    let form = SymmetricForm::parse(&curve.field, 1, "x0^2+x1^2")?;
    Ok(CircleInstance::new(curve, form, 6)?)
}

fn crit1() -> Outcome {
    let start = Instant::now();
    let budget = Budget::default();
    let curve = Arc::new(Curve::parse("p=3 k=1 kind=hyperelliptic h=x^3+x+1")?);
    let form = SymmetricForm::parse(&curve.field, 2, "x0^2+x1^2+x2^2")?;
    let inst = CircleInstance::new(curve, form, 3)?;
    let hist = PushforwardHistogram::build(&inst, &budget)?;
    let spectrum = Spectrum::compute(inst.field(), &hist, &budget)?;
    let total = spectrum.total();
    let census = census(&inst, &budget)?;
    let elapsed = start.elapsed();
    let expected = 729i128 * census.count_me as i128;
    let ok = spectrum.len() == 729 && total.as_integer() == Some(expected) && elapsed < CRIT1_LIMIT;
    Ok((ok, format!("sum S = {total:?}, 3^6 x census = {expected}, {:.2?} (limit {CRIT1_LIMIT:?})", elapsed)))
}

fn crit2(x: &Instances) -> Outcome {
    let inst = &x.conic;
    let bound = inst.major_bound() as u32;
    let divisors = enumerate_divisors(&inst.curve, &DivisorSearch::new(bound, 2, bound))?;
    let mut bad = 0;
    for z in &divisors {
        if !major_arc_sum_check(inst, &x.conic_spectrum, z, &x.budget)?.holds {
            bad += 1;
        }
    }
    let mut pairs = 0;
    let mut bad_pairs = 0;
    for (i, a) in divisors.iter().enumerate() {
        for b in &divisors[i + 1..] {
            if a.degree() == 0 || b.degree() == 0 || !a.is_disjoint(b) || a.degree() + b.degree() > bound {
                continue;
            }
            pairs += 1;
            if !multiplicativity_check(inst, &x.conic_spectrum, a, b)? {
                bad_pairs += 1;
            }
        }
    }
    let ok = bad == 0 && bad_pairs == 0 && divisors.len() > 1 && pairs > 0;
    Ok((ok, format!("{} divisors ({bad} failures), {pairs} disjoint pairs ({bad_pairs} failures)", divisors.len())))
}

fn diagonal(n: usize, d: u32) -> String {
    (0..=n).map(|i| format!("x{i}^{d}")).collect::<Vec<_>>().join("+")
}

fn crit3() -> Outcome {
    let start = Instant::now();
    let budget = Budget::default();
    let mut cases = 0;
    let mut bad = Vec::new();
    for (q, d) in [(3u32, 2u32), (5, 2), (5, 3)] {
        let kappa = field(q, 1)?;
        let qk = q as u64;
        for n in 1..=2usize {
            let form = SymmetricForm::parse(&kappa, n, &diagonal(n, d))?;
            let cx = cone_points(&form, &kappa, &budget)?;
            let mut prev: Option<BigRational> = None;
            for r in 1..=4u32 {
                let enumerated = artinian_count_enum(&form, &kappa, r, &budget)?;
                let formula = artinian_count_formula(&form, &kappa, r, &budget)?;
                cases += 1;
                if formula.count != BigInt::from(enumerated) {
                    bad.push(format!("q={q} d={d} n={n} r={r}: {enumerated} vs {}", formula.count));
                }
                let norm = BigRational::new(BigInt::from(enumerated), BigInt::from(qk).pow(r * n as u32));
                if let Some(p) = prev {
                    if &norm - p != artinian_difference_formula(cx, qk, n, d, r) {
                        bad.push(format!("difference q={q} d={d} n={n} r={r}"));
                    }
                }
                prev = Some(norm);
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = bad.is_empty() && elapsed < CRIT3_LIMIT;
    Ok((ok, format!("{cases} cases, mismatches {bad:?}, {elapsed:.2?} (limit {CRIT3_LIMIT:?})")))
}

fn crit4(x: &Instances) -> Outcome {
    let inst = &x.conic;
    let cls = ArcClassification::compute(inst, &DivisorSearch::new(4, 4, 4), &x.budget)?;
    let unfactored = cls.unfactored();
    let non_unique = cls.non_unique_below(inst.uniqueness_bound());
    let violations = intersection_check(inst, &cls)?.violations.len();
    let ok = cls.len() == 729 && unfactored == 0 && non_unique == 0 && violations == 0;
    Ok((
        ok,
        format!(
            "unfactored {unfactored}/729, non-unique minimal divisors of degree <= {}: {non_unique}, intersection violations {violations}, degree histogram {:?}",
            inst.uniqueness_bound(),
            cls.degree_histogram()
        ),
    ))
}

fn crit5(x: &Instances) -> Outcome {
    assert_eq!(WEYL_REL_TOL, WEYL_TOLERANCE);
    let inst = &x.conic;
    let mut bad2 = 0;
    for i in 0..x.conic_spectrum.len() {
        let alpha = decode(i as u64, inst.q(), inst.dim_de());
        let n = n_alpha(inst, &alpha, &x.budget)?;
        if !weyl_check(inst, &x.conic_spectrum.get(i), n).holds {
            bad2 += 1;
        }
    }
    let cubic = cubic_instance()?;
    let hist = PushforwardHistogram::build(&cubic, &x.budget)?;
    let size = (cubic.q() as u64).pow(cubic.dim_de() as u32);
    let mut bad3 = 0;
    let sample = sample_indices(SEED, D3_SAMPLES, size);
    for &i in &sample {
        let alpha = decode(i, cubic.q(), cubic.dim_de());
        let s = hist.s_alpha(cubic.field(), &alpha)?;
        let n = n_alpha(&cubic, &alpha, &x.budget)?;
        if !weyl_check(&cubic, &s, n).holds {
            bad3 += 1;
        }
    }
    let ok = bad2 == 0 && bad3 == 0 && sample.len() >= 100;
    Ok((ok, format!("d=2: {bad2}/729 failures; d=3: {bad3}/{} seeded failures (tolerance {WEYL_REL_TOL:e})", sample.len())))
}

#[derive(Default)]
struct MinorTally {
    tested: usize,
    shrink_bad: usize,
    k_tested: usize,
    k_bad: usize,
    psi_tested: usize,
    psi_bad: u128,
}

impl MinorTally {
    fn run(&mut self, inst: &CircleInstance, alpha: &[u32], deg_z: u32, seed: u64, budget: &Budget) -> Result<(), Error> {
        let (d, e, g) = (inst.d(), inst.e, inst.genus());
        let s = choose_s(deg_z, d, e, g);
        self.tested += 1;
        if !shrink_check(inst, alpha, deg_z, budget)?.holds {
            self.shrink_bad += 1;
        }
        if s >= (2 * g).saturating_sub(1).max(2) && s <= e {
            for ell in 0..=d - 2 {
                let fixed = sample_fixed_slots(inst, &k_fixed_levels(inst, s, ell), seed ^ ell as u64);
                self.k_tested += 1;
                if !k_ratio_check(inst, alpha, s, ell, &fixed)?.holds {
                    self.k_bad += 1;
                }
            }
        }
        if psi_vanishing_hypothesis(deg_z, d, e, g, s) {
            self.psi_tested += 1;
            self.psi_bad += psi_vanishing_check(inst, alpha, deg_z, s, budget)?.counterexamples;
        }
        Ok(())
    }

    fn ok(&self) -> bool {
        self.tested > 0 && self.shrink_bad == 0 && self.k_bad == 0 && self.psi_bad == 0
    }

    fn describe(&self, name: &str) -> String {
        format!(
            "{name}: shrink {}/{} fail, K-ratio {}/{} fail, Ψ-vanishing counterexamples {} over {} functionals",
            self.shrink_bad, self.tested, self.k_bad, self.k_tested, self.psi_bad, self.psi_tested
        )
    }
}

fn sampled_minor(inst: &CircleInstance, search: DivisorSearch, samples: usize, seed: u64, budget: &Budget) -> Result<MinorTally, Error> {
    let index = FactoringIndex::build(inst, &search)?;
    let size = (inst.q() as u64).pow(inst.dim_de() as u32);
    let mut tally = MinorTally::default();
    for i in sample_indices(seed, samples, size) {
        let alpha = decode(i, inst.q(), inst.dim_de());
        if let Some(z) = index.min_divisor(&alpha) {
            if z.degree() as i64 > inst.major_bound() {
                tally.run(inst, &alpha, z.degree(), seed.wrapping_add(i), budget)?;
            }
        }
    }
    Ok(tally)
}

fn crit6(x: &Instances) -> Outcome {
    let inst = &x.conic;
    let cls = ArcClassification::compute(inst, &DivisorSearch::new(4, 4, 4), &x.budget)?;
    let mut conic_tally = MinorTally::default();
    for a in cls.minor_indices() {
        let c = cls.class(a);
        conic_tally.run(inst, &c.alpha.coords, c.deg_alpha.expect("classified"), SEED.wrapping_add(a as u64), &x.budget)?;
    }
    let cubic = cubic_instance()?;
    let cubic_tally = sampled_minor(&cubic, DivisorSearch::new(5, 5, 5), D3_SAMPLES, SEED, &x.budget)?;
    let g2 = genus_two_instance()?;
    let g2_tally = sampled_minor(&g2, DivisorSearch::new(7, 7, 7), G2_SAMPLES, SEED, &x.budget)?;
    let ok = conic_tally.ok() && cubic_tally.ok() && g2_tally.ok();
    Ok((ok, format!("{}; {}; {}", conic_tally.describe("g=1 d=2"), cubic_tally.describe("g=1 d=3"), g2_tally.describe("g=2 d=2"))))
}

fn crit7() -> Outcome {
    let expected = [(5, 2, 14, 1), (5, 2, 28, 2), (17, 3, 45, 1), (17, 3, 124, 2), (49, 4, 145, 1), (49, 4, 516, 2)];
    let rows = table_rows();
    let mut notes = Vec::new();
    let mut ok = rows.len() == expected.len();
    for (t, &(n, d, e, g)) in rows.iter().zip(&expected) {
        let matches = (t.n, t.d, t.e, t.g) == (n, d, e, g);
        let start = Instant::now();
        let v = verify_thresholds(t)?;
        let elapsed = start.elapsed();
        let valid = v.rows.iter().all(|r| r.valid);
        let row_ok = matches && v.pass && valid && elapsed < CRIT7_SCAN_LIMIT;
        ok &= row_ok;
        notes.push(format!("({n},{d},{g},{e}) {} {} rows {elapsed:.1?}", if row_ok { "ok" } else { "bad" }, v.rows.len()));
    }
    Ok((ok, notes.join(", ")))
}

fn crit8(x: &Instances) -> Outcome {
    let inst = &x.conic;
    let t3 = minor_arc_tail(inst, &x.conic_spectrum, &x.budget)?;
    let nine = inst.base_change(2)?;
    let hist9 = PushforwardHistogram::build(&nine, &x.budget)?;
    let spectrum9 = Spectrum::compute(nine.field(), &hist9, &x.budget)?;
    let t9 = minor_arc_tail(&nine, &spectrum9, &x.budget)?;
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let decreasing = max(&t9.normalized_abs) < t3.normalized_abs.iter().cloned().fold(f64::INFINITY, f64::min);
    let probe = dimension_probe(inst, &[1, 2], &x.budget)?;
    let ratios: Vec<String> = probe.rows.iter().map(|r| format!("q={}: {} ({:.4})", r.q, r.ratio, r.ratio_f64)).collect();
    Ok((
        decreasing && probe.converging,
        format!(
            "normalized |minor sum| q=3 {:?} -> q=9 {:?}; census/q^mu_hat {}",
            t3.normalized_abs,
            t9.normalized_abs,
            ratios.join(" -> ")
        ),
    ))
}

fn crit9() -> Outcome {
    let c = fujita_plan(2, 5, 129, 2)?;
    let gates = fujita_gap_check(&c);
    let mut survivors = Vec::new();
    let mut corruptions = 0;
    for delta in [1i64, -1] {
        let shift = |v: u64| (v as i64 + delta).max(0) as u64;
        let variants: Vec<(&str, FujitaCertificate)> = vec![
            ("d", FujitaCertificate { d: shift(c.d as u64) as u32, ..c.clone() }),
            ("n", FujitaCertificate { n: shift(c.n as u64) as u32, ..c.clone() }),
            ("g_c", FujitaCertificate { g_c: shift(c.g_c), ..c.clone() }),
            ("e_m", FujitaCertificate { e_m: shift(c.e_m), ..c.clone() }),
            ("m", FujitaCertificate { m: shift(c.m), ..c.clone() }),
            ("p", FujitaCertificate { p: shift(c.p), ..c.clone() }),
            ("b", FujitaCertificate { b: shift(c.b as u64) as u32, ..c.clone() }),
            ("m_x", FujitaCertificate { m_x: shift(c.m_x), ..c.clone() }),
            ("g_c_prime", FujitaCertificate { g_c_prime: shift(c.g_c_prime), ..c.clone() }),
        ];
        for (name, v) in variants {
            corruptions += 1;
            if fujita_gap_check(&v).all {
                survivors.push(format!("{name}{delta:+}"));
            }
        }
    }
    let ok = gates.all && c.m == 129 && survivors.is_empty();
    Ok((
        ok,
        format!(
            "m={} p={} b={} m_x={} g(C')={} deg={:?}; gates all={}; {corruptions} corruptions, surviving {survivors:?}",
            c.m,
            c.p,
            c.b,
            c.m_x,
            c.g_c_prime,
            c.degree(),
            gates.all
        ),
    ))
}

fn main() {
    let shared = conic();
    let mut unexpected = Vec::new();
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        let (ok, detail) = match outcome {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if ok { "PASS" } else { "FAIL" };
        let note = if !ok && KNOWN_RED.contains(&id) { " [known red]" } else { "" };
        println!("criterion {id} {tag}{note} {name}: {detail}");
        if !ok && !KNOWN_RED.contains(&id) {
            unexpected.push(id);
        }
    };
    report(1, "partition identity", crit1());
    match &shared {
        Ok(x) => {
            report(2, "major-arc evaluation", crit2(x));
            report(3, "Artinian counts", crit3());
            report(4, "factoring bound", crit4(x));
            report(5, "Weyl inequality", crit5(x));
            report(6, "shrinking bounds", crit6(x));
            report(7, "threshold reproduction", crit7());
            report(8, "minor-arc decay", crit8(x));
        }
        Err(e) => {
            for id in 2..=8 {
                report(id, "shared instance", Err(Error::Arcs(ArcsError::Invalid(e.to_string()))));
            }
        }
    }
    report(9, "Fujita planner", crit9());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
