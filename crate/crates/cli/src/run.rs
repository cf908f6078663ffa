use fqcircle_core::algebra::{decode, field};
use fqcircle_core::arcs::{
    artinian_count_enum, artinian_count_formula, artinian_difference_formula, census, cone_points, dimension_probe, enumerate_divisors,
    intersection_check, major_arc_sum_check, minor_arc_tail, multiplicativity_check, ArcClassification, CircleInstance, DivisorSearch,
    FactoringIndex, PushforwardHistogram, Spectrum,
};
use fqcircle_core::certificates::{
    frontier_scan, fujita_gap_check, fujita_plan, table_rows, verify_thresholds, CertificateError, ParameterTuple,
};
use fqcircle_core::minor_arc::{
    choose_s, k_fixed_levels, k_ratio_check, n_alpha, psi_vanishing_check, psi_vanishing_hypothesis, sample_fixed_slots, sample_indices,
    shrink_check, weyl_check,
};
use fqcircle_core::{qpow, Budget, SymmetricForm};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::report::{big, cyclo_json};
use crate::CliError;

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub budget: Budget,
    /// Cap on whole-circle per-functional work.
    pub functionals: Budget,
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Output(e.to_string()))
}

fn spectrum(inst: &CircleInstance, budget: &Budget) -> Result<(PushforwardHistogram, Spectrum), CliError> {
    let hist = PushforwardHistogram::build(inst, budget)?;
    let spectrum = Spectrum::compute(inst.field(), &hist, budget)?;
    Ok((hist, spectrum))
}

/// Every functional index, or a seeded sample of them.
fn indices(inst: &CircleInstance, samples: Option<usize>, ctx: &Context) -> Result<Vec<u64>, CliError> {
    let size = inst.circle_size();
    match samples {
        Some(k) => Ok(sample_indices(ctx.seed, k, size)),
        None => {
            ctx.functionals.check("whole circle (set samples)", size as u128)?;
            Ok((0..size).collect())
        }
    }
}

pub fn census_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let inst = ctx.cfg.instance()?;
    let b = &ctx.budget;
    let (hist, spectrum) = spectrum(&inst, b)?;
    let total = spectrum.total();
    let c = census(&inst, b)?;
    let expected = qpow(inst.q(), inst.dim_de() as u32) as i128 * c.count_me as i128;
    let mut out = vec![
        json!({
            "kind": "partition_identity",
            "sum_s": cyclo_json(&total),
            "circle_size": inst.circle_size(),
            "count_me": big(c.count_me),
            "histogram_zeros": hist.zeros(),
            "verdict": total.as_integer() == Some(expected) && hist.zeros() as u128 == c.count_me,
        }),
        json!({
            "kind": "census",
            "count_me": big(c.count_me),
            "count_bpf": big(c.count_bpf),
            "bpf_max_degree": c.bpf_max_degree,
            "mor_count": c.mor_count.to_string(),
            "mu_hat": inst.mu_hat(),
            "verdict": Value::Null,
        }),
    ];
    let tower = ctx.cfg.census.clone().unwrap_or_default().tower;
    if !tower.is_empty() {
        let probe = dimension_probe(&inst, &tower, b)?;
        for row in &probe.rows {
            let mut v = to_value(row)?;
            v["kind"] = "dimension_probe".into();
            v["count"] = big(row.count);
            v["verdict"] = Value::Null;
            out.push(v);
        }
        out.push(json!({ "kind": "dimension_trend", "converging": probe.converging, "verdict": Value::Null }));
    }
    Ok(out)
}

pub fn arcs_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let inst = ctx.cfg.instance()?;
    let b = &ctx.budget;
    let sec = ctx.cfg.arcs.clone().unwrap_or_default();
    let search = sec.search.search(&inst);
    let bound = inst.major_bound();
    ctx.functionals.check("whole circle (arc classification cannot be sampled)", inst.circle_size() as u128)?;
    let (_, spectrum) = spectrum(&inst, b)?;
    let cls = ArcClassification::compute(&inst, &search, b)?;
    let unfactored = cls.unfactored();
    let non_unique = cls.non_unique_below(inst.uniqueness_bound());
    let mut out = vec![json!({
        "kind": "classification",
        "functionals": cls.len(),
        "search": to_value(&search)?,
        "major_bound": bound,
        "major": cls.major_indices().len(),
        "minor": cls.minor_indices().len(),
        "unfactored": unfactored,
        "uniqueness_bound": inst.uniqueness_bound(),
        "non_unique": non_unique,
        "degree_histogram": cls.degree_histogram(),
        "verdict": unfactored == 0 && non_unique == 0,
    })];
    let inter = intersection_check(&inst, &cls)?;
    out.push(json!({
        "kind": "intersection",
        "pairs_checked": inter.pairs_checked,
        "violations": inter.violations.len(),
        "verdict": inter.violations.is_empty(),
    }));
    for i in 0..cls.len() {
        out.push(json!({
            "kind": "functional",
            "alpha": i,
            "deg_alpha": cls.degree(i),
            "arc": to_value(&cls.kind(i))?,
            "s_alpha": cyclo_json(&spectrum.get(i)),
            "verdict": Value::Null,
        }));
    }
    if bound >= 0 {
        let cap = bound as u32;
        let divisors = enumerate_divisors(&inst.curve, &DivisorSearch::new(cap, sec.major_point_degree, cap))?;
        for z in &divisors {
            let c = major_arc_sum_check(&inst, &spectrum, z, b)?;
            out.push(json!({
                "kind": "major_arc",
                "divisor": to_value(z)?,
                "degree": z.degree(),
                "functionals": c.functionals,
                "lhs": cyclo_json(&c.lhs),
                "cx_z": c.cx_z.to_string(),
                "rhs": c.rhs.to_string(),
                "verdict": c.holds,
            }));
        }
        for (i, a) in divisors.iter().enumerate() {
            for z in &divisors[i + 1..] {
                if a.degree() == 0 || z.degree() == 0 || !a.is_disjoint(z) || a.degree() + z.degree() > cap {
                    continue;
                }
                out.push(json!({
                    "kind": "multiplicativity",
                    "divisor": to_value(a)?,
                    "other": to_value(z)?,
                    "verdict": multiplicativity_check(&inst, &spectrum, a, z)?,
                }));
            }
        }
    }
    let tail = minor_arc_tail(&inst, &spectrum, b)?;
    out.push(json!({
        "kind": "minor_tail",
        "major": tail.major_count,
        "minor": tail.minor_count,
        "major_sum": cyclo_json(&tail.major_sum),
        "minor_sum": cyclo_json(&tail.minor_sum),
        "normalized_abs": tail.normalized_abs,
        "verdict": Value::Null,
    }));
    Ok(out)
}

/// `q = p^k` with `p` prime.
fn prime_power(q: u32) -> Option<(u32, u32)> {
    let p = (2..=q).find(|p| q.is_multiple_of(*p))?;
    let (mut r, mut k) = (q, 0);
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    (r == 1).then_some((p, k))
}

fn diagonal(n: usize, d: u32) -> String {
    (0..=n).map(|i| format!("x{i}^{d}")).collect::<Vec<_>>().join("+")
}

fn artinian_case(q: u32, d: u32, n: usize, r_max: u32, b: &Budget) -> Result<Vec<Value>, CliError> {
    let (p, k) = prime_power(q).ok_or_else(|| CliError::Config(format!("artinian.q: {q} is not a prime power")))?;
    if p <= d {
        let reason = format!("characteristic {p} does not exceed d = {d}");
        return Ok(vec![json!({ "kind": "artinian_skipped", "q": q, "d": d, "n": n, "reason": reason, "verdict": Value::Null })]);
    }
    let kappa = field(p, k).map_err(|e| CliError::Config(format!("artinian.q: {e}")))?;
    let form = SymmetricForm::parse(&kappa, n, &diagonal(n, d)).map_err(|e| CliError::Config(format!("artinian: {e}")))?;
    let cx = cone_points(&form, &kappa, b)?;
    let mut out = Vec::new();
    let mut prev: Option<BigRational> = None;
    for r in 1..=r_max {
        let enumerated = artinian_count_enum(&form, &kappa, r, b)?;
        let formula = artinian_count_formula(&form, &kappa, r, b)?;
        let norm = BigRational::new(BigInt::from(enumerated), BigInt::from(q).pow(r * n as u32));
        let difference = prev.as_ref().map(|p| &norm - p == artinian_difference_formula(cx, q as u64, n, d, r));
        out.push(json!({
            "kind": "artinian",
            "q": q,
            "d": d,
            "n": n,
            "r": r,
            "form": form.to_spec(),
            "cone_points": big(cx),
            "enumerated": big(enumerated),
            "formula": formula.count.to_string(),
            "normalized": formula.normalized.to_string(),
            "difference_matches": difference,
            "verdict": formula.count == BigInt::from(enumerated) && difference != Some(false),
        }));
        prev = Some(norm);
    }
    Ok(out)
}

pub fn artinian_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let sec = ctx.cfg.artinian.clone().ok_or_else(|| CliError::Config("missing [artinian] section".into()))?;
    if sec.r_max == 0 {
        return Err(CliError::Config("artinian.r_max must be at least 1".into()));
    }
    let mut grid = Vec::new();
    for &q in &sec.q {
        for &d in &sec.d {
            for &n in &sec.n {
                grid.push((q, d, n));
            }
        }
    }
    let parts: Vec<Vec<Value>> =
        grid.par_iter().map(|&(q, d, n)| artinian_case(q, d, n, sec.r_max, &ctx.budget)).collect::<Result<_, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn weyl_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let inst = ctx.cfg.instance()?;
    let b = &ctx.budget;
    let samples = ctx.cfg.weyl.clone().unwrap_or_default().samples;
    let idx = indices(&inst, samples, ctx)?;
    let hist = PushforwardHistogram::build(&inst, b)?;
    let spectrum = match samples {
        None => Some(Spectrum::compute(inst.field(), &hist, b)?),
        Some(_) => None,
    };
    idx.par_iter()
        .map(|&i| {
            let alpha = decode(i, inst.q(), inst.dim_de());
            let s = match &spectrum {
                Some(sp) => sp.get(i as usize),
                None => hist.s_alpha(inst.field(), &alpha)?,
            };
            let n = n_alpha(&inst, &alpha, b)?;
            let w = weyl_check(&inst, &s, n);
            Ok(json!({
                "kind": "weyl",
                "alpha": i,
                "s_alpha": cyclo_json(&s),
                "n_alpha": big(n),
                "lhs": w.lhs,
                "rhs": w.rhs,
                "verdict": w.holds,
            }))
        })
        .collect()
}

fn shrink_one(inst: &CircleInstance, i: u64, alpha: &[u32], deg_z: u32, seed: u64, b: &Budget) -> Result<Value, CliError> {
    let (d, e, g) = (inst.d(), inst.e, inst.genus());
    let s = choose_s(deg_z, d, e, g);
    let shrink = shrink_check(inst, alpha, deg_z, b)?;
    let mut ks = Vec::new();
    if s >= (2 * g).saturating_sub(1).max(2) && s <= e {
        for ell in 0..=d - 2 {
            let fixed = sample_fixed_slots(inst, &k_fixed_levels(inst, s, ell), seed ^ ell as u64);
            ks.push(k_ratio_check(inst, alpha, s, ell, &fixed)?);
        }
    }
    let psi = if psi_vanishing_hypothesis(deg_z, d, e, g, s) { Some(psi_vanishing_check(inst, alpha, deg_z, s, b)?) } else { None };
    let verdict = shrink.holds && ks.iter().all(|k| k.holds) && psi.as_ref().is_none_or(|p| p.counterexamples == 0);
    Ok(json!({
        "kind": "shrink",
        "alpha": i,
        "deg_alpha": deg_z,
        "s": s,
        "n": big(shrink.n),
        "n_s": big(shrink.n_s),
        "bound_exp2": shrink.bound_exp2,
        "shrink_holds": shrink.holds,
        "k_ratios": to_value(&ks)?,
        "psi_vanishing": to_value(&psi)?,
        "verdict": verdict,
    }))
}

pub fn shrink_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let inst = ctx.cfg.instance()?;
    let b = &ctx.budget;
    let sec = ctx.cfg.shrink.clone().unwrap_or_default();
    let search = sec.search.search(&inst);
    let index = FactoringIndex::build(&inst, &search)?;
    let idx = indices(&inst, sec.samples, ctx)?;
    let bound = inst.major_bound();
    let classes: Vec<(u64, Option<u32>)> =
        idx.par_iter().map(|&i| (i, index.min_divisor(&decode(i, inst.q(), inst.dim_de())).map(|z| z.degree()))).collect();
    let major = classes.iter().filter(|c| c.1.is_some_and(|d| d as i64 <= bound)).count();
    let minor: Vec<(u64, u32)> = classes.iter().filter_map(|&(i, d)| d.filter(|&d| d as i64 > bound).map(|d| (i, d))).collect();
    let mut out = vec![json!({
        "kind": "coverage",
        "functionals": classes.len(),
        "search": to_value(&search)?,
        "major_bound": bound,
        "major": major,
        "minor": minor.len(),
        "unclassified": classes.len() - major - minor.len(),
        "verdict": Value::Null,
    })];
    let rows: Vec<Value> = minor
        .par_iter()
        .map(|&(i, deg)| shrink_one(&inst, i, &decode(i, inst.q(), inst.dim_de()), deg, ctx.seed.wrapping_add(i), b))
        .collect::<Result<_, _>>()?;
    out.extend(rows);
    Ok(out)
}

pub fn bounds_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let sec = ctx.cfg.bounds.clone().ok_or_else(|| CliError::Config("missing [bounds] section".into()))?;
    let tuples: Vec<ParameterTuple> = match &sec.rows {
        Some(rows) => rows.iter().map(|&[n, d, g, e]| ParameterTuple::new(n, d, e, g)).collect(),
        None => table_rows(),
    };
    let mut out = Vec::new();
    for t in &tuples {
        let v = verify_thresholds(t).map_err(|e| CliError::Config(format!("bounds.rows: {e}")))?;
        let (lo, hi) = t.deg_z_range();
        out.push(json!({
            "kind": "threshold",
            "n": t.n,
            "d": t.d,
            "g": t.g,
            "e": t.e,
            "mu": t.mu(),
            "mu_hat": t.mu_hat(),
            "deg_z_min": lo,
            "deg_z_max": hi,
            "degrees_checked": v.rows.len(),
            "witness": v.witness,
            "all_valid": v.all_valid,
            "verdict": v.pass && v.all_valid,
        }));
    }
    if let Some(f) = &sec.frontier {
        if f.e_min > f.e_max {
            return Err(CliError::Config("bounds.frontier: e_min > e_max".into()));
        }
        let scan = frontier_scan(f.n, f.d, f.g, f.e_min..=f.e_max).map_err(|e| CliError::Config(format!("bounds.frontier: {e}")))?;
        for row in &scan.rows {
            out.push(json!({
                "kind": "frontier",
                "n": f.n,
                "d": f.d,
                "g": f.g,
                "e": row.e,
                "pass": row.pass,
                "first_fail": row.first_fail,
                "verdict": Value::Null,
            }));
        }
        out.push(json!({
            "kind": "frontier_minimum",
            "n": f.n,
            "d": f.d,
            "g": f.g,
            "minimal_passing_e": scan.minimal_passing_e,
            "verdict": Value::Null,
        }));
    }
    Ok(out)
}

pub fn fujita_cmd(ctx: &Context) -> Result<Vec<Value>, CliError> {
    let sec = ctx.cfg.fujita.clone().ok_or_else(|| CliError::Config("missing [fujita] section".into()))?;
    let c = match fujita_plan(sec.d, sec.n, sec.g_c, sec.e_m) {
        Ok(c) => c,
        Err(e @ CertificateError::InfeasibleWindow { .. }) => {
            return Ok(vec![json!({ "kind": "fujita", "error": e.to_string(), "verdict": false })]);
        }
        Err(e) => return Err(CliError::Config(format!("fujita: {e}"))),
    };
    let gates = fujita_gap_check(&c);
    Ok(vec![json!({
        "kind": "fujita",
        "certificate": to_value(&c)?,
        "degree": c.degree().map(big),
        "gates": to_value(&gates)?,
        "verdict": gates.all,
    })])
}
