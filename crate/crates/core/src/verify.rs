//! The acceptance suite behind `verify-all`: one report entry per criterion.
//!
//! Reports carry no timings or thread counts, so identical options give
//! byte-identical JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::achieve::{
    self, achieve_via_reduction, brute_subsums, build_absolute_selection, build_reduction_set, check_plan,
    greedy_tail_sum, nearest_subsum, selection_tail_norm, thirds_exclusion_check, IndexSelection,
};
use crate::catalog::{self, LevySet, Series, SeriesId};
use crate::error::{Error, Result};
use crate::exactnum::{Dyadic, Rat, Vec2, Vec2f, Vec2q};
use crate::extreme::{
    brute_min_signed_sum, build_extreme_with, check_block_claim_exhaustive, BuildOptions, ExtremeSchedule,
};
use crate::levy::{estimate_levy_directions, half_circle_coverage, match_directions, EstimatorParams};
use crate::raster::{raster, RasterParams, Region};

const BUDGET: u64 = 10_000_000;
const LN2: f64 = std::f64::consts::LN_2;
/// Float tolerance for matching a float-series selection against its brute-force pattern.
const FLOAT_MATCH_TOL: f64 = 1e-12;
const ORACLE_TERMS: u32 = 18;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// a module name (`catalog`, `levy`, `achieve`, `extreme`, `cli`) or a criterion number
    pub only: Option<String>,
    /// build extreme schedules with a wrong gap exponent
    pub inject_delta_fault: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub module: String,
    pub title: String,
    pub pass: bool,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionReport>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CRITERIA: [(u32, &str, &str); 9] = [
    (1, "catalog", "alternating harmonic partial sums approach (1, -ln 2)"),
    (2, "levy", "estimator recovers the known Levy sets"),
    (3, "achieve", "cone plan on C6 toward (1,1)"),
    (4, "achieve", "reduction certificates on C8"),
    (5, "achieve", "selections agree with exhaustive subsums"),
    (6, "extreme", "extreme construction gaps and claims"),
    (7, "achieve", "power-block tail and distance inequalities"),
    (8, "achieve", "reduction witnesses on C8"),
    (9, "cli", "raster and report determinism"),
];

fn selected(id: u32, module: &str, only: &Option<String>) -> bool {
    match only {
        None => true,
        Some(o) => o.eq_ignore_ascii_case(module) || o.parse::<u32>() == Ok(id),
    }
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    if let Some(o) = &opts.only {
        if !CRITERIA.iter().any(|&(id, m, _)| selected(id, m, &Some(o.clone()))) {
            return Err(Error::Parse(format!("--only {o:?} matches no criterion")));
        }
    }
    let criteria: Vec<CriterionReport> = CRITERIA
        .iter()
        .filter(|&&(id, m, _)| selected(id, m, &opts.only))
        .map(|&(id, _, _)| run_criterion(id, opts))
        .collect();
    let pass = criteria.iter().all(|c| c.pass);
    Ok(VerifyReport { criteria, pass })
}

pub fn run_criterion(id: u32, opts: &VerifyOptions) -> CriterionReport {
    let (_, module, title) = CRITERIA.iter().find(|c| c.0 == id).copied().expect("known criterion");
    let outcome = match id {
        1 => ln2_convergence(),
        2 => levy_recovery(),
        3 => cone_plan(),
        4 => reduction_certificates(),
        5 => oracle_equivalence(),
        6 => extreme_construction(opts.inject_delta_fault),
        7 => thirds(),
        8 => reduction_witnesses(),
        9 => determinism(),
        _ => unreachable!(),
    };
    let (pass, details) = match outcome {
        Ok(v) => v,
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    CriterionReport { id, module: module.to_string(), title: title.to_string(), pass, details }
}

type Outcome = Result<(bool, Value)>;

fn ln2_convergence() -> Outcome {
    let c9 = catalog::get(SeriesId::C9);
    let target = Vec2::new(1.0, -LN2);
    let mut rows = Vec::new();
    let mut pass = true;
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let s = catalog::partial_sum_f64(&c9, n)?;
        let dist = (s - target).norm();
        let bound = 2.0 / n as f64;
        pass &= dist <= bound;
        rows.push(json!({ "n": n, "distance": dist, "bound": bound }));
    }
    Ok((pass, json!({ "rows": rows })))
}

fn levy_recovery() -> Outcome {
    let params = EstimatorParams::default();
    let mut rows = Vec::new();
    let mut pass = true;
    for id in [SeriesId::C1, SeriesId::C3, SeriesId::C5, SeriesId::C6, SeriesId::C7] {
        let def = catalog::get(id);
        let LevySet::Finite(known) = &def.meta.known_levy else {
            return Err(Error::Precondition(format!("{id} has no finite Levy set on record")));
        };
        let est = estimate_levy_directions(&def, &params)?;
        let found = est.directions();
        let m = match_directions(known, &found, 2.0, 10.0);
        let mut ok = m.pass;
        let mut row = json!({
            "series": id.as_str(),
            "clusters": est.clusters,
            "known_to_cluster_deg": m.known_to_cluster_deg,
            "cluster_to_known_deg": m.cluster_to_known_deg,
            "matched": m.pass,
        });
        if id == SeriesId::C7 {
            let open = half_circle_coverage(&found, true);
            let closed = half_circle_coverage(&found, false);
            ok &= !open && closed;
            row["open_coverage"] = json!(open);
            row["closed_coverage"] = json!(closed);
        }
        row["pass"] = json!(ok);
        pass &= ok;
        rows.push(row);
    }
    Ok((pass, json!({ "params": params, "rows": rows })))
}

fn cone_plan() -> Outcome {
    let c6 = catalog::get(SeriesId::C6);
    let (e, n) = (catalog::decomposition(SeriesId::C6, "E")?, catalog::decomposition(SeriesId::C6, "N")?);
    let x = Vec2::new(1.0, 1.0);
    let plan = build_absolute_selection(&c6, &e, &n, x, 7, BUDGET)?;
    let checks = check_plan(&plan, &c6)?;
    let tail = selection_tail_norm(&plan, &c6)?;
    let c7 = plan.stages.last().map_or(0.0, |s| s.c);
    let error = (plan.sum() - x).norm();
    let bound = c7 + 2f64.sqrt() / 128.0;
    let pass = checks.pass && tail.total.is_finite() && tail.within_stagewise && tail.within_cos_bound && error < bound;
    Ok((
        pass,
        json!({
            "invariants": checks.pass,
            "failed_stages": checks.stages.iter().filter(|s| !s.all()).map(|s| s.t).collect::<Vec<_>>(),
            "tail_norm": tail.total,
            "stagewise_bound": tail.stagewise_bound,
            "cos_bound": tail.cos_bound,
            "c7": c7,
            "error": error,
            "error_bound": bound,
            "selected_terms": plan.selection()?.len(),
        }),
    ))
}

fn reduction_certificates() -> Outcome {
    let c8 = catalog::get(SeriesId::C8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut targets = vec![Vec2::new(0.3, -0.7)];
    targets.extend((0..10).map(|_| Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))));
    let mut rows = Vec::new();
    let mut pass = true;
    for t in targets {
        let cert = achieve_via_reduction(&c8, t, 6, BUDGET)?;
        let ok = cert.holds && cert.final_error_inf < 2f64.powi(-6);
        pass &= ok;
        rows.push(json!({
            "target": t,
            "stages": cert.stages.len(),
            "failed_stages": cert.stages.iter().filter(|s| !s.holds).map(|s| s.i).collect::<Vec<_>>(),
            "final_error_inf": cert.final_error_inf,
            "terms": cert.final_selection.len(),
            "pass": ok,
        }));
    }
    Ok((pass, json!({ "depth": 6, "rows": rows })))
}

fn exact_sum(series: &dyn Series, sel: &IndexSelection) -> Result<Vec2q> {
    let mut s = Vec2q::zero();
    for &i in sel.indices() {
        let t = series.term(i)?;
        let v = t.as_exact().ok_or_else(|| Error::Precondition("exact terms expected".into()))?;
        s = &s + v;
    }
    Ok(s)
}

/// Restricts a selection to the first `ORACLE_TERMS` indices and asks the exhaustive
/// enumerator whether that restricted sum is reproduced by the same pattern.
fn oracle_row(series: &dyn Series, label: String, sel: &IndexSelection) -> Result<(bool, Value)> {
    let n = ORACLE_TERMS;
    let r = sel.restrict(n as u64);
    let mask = r.mask(n as u64) as u32;
    let pattern = achieve::pattern_string(mask, n);
    let (target, tol) = match series.term(1)?.is_exact() {
        true => (exact_sum(series, &r)?, Rat::zero()),
        false => {
            let f: Vec2f = r.indices().iter().map(|&i| series.term_f64(i)).sum::<Result<Vec2f>>()?;
            let q = |v: f64| Rat::from_f64(v).ok_or_else(|| Error::Precondition("non-finite sum".into()));
            (Vec2::new(q(f.x)?, q(f.y)?), Rat::from_f64(FLOAT_MATCH_TOL).expect("finite"))
        }
    };
    let hits = brute_subsums(series, n, &target, &tol)?;
    let best = nearest_subsum(series, n, target.to_f64())?;
    let found = hits.iter().any(|h| h.pattern == pattern);
    let ok = found && best.distance <= tol.to_f64().max(FLOAT_MATCH_TOL);
    Ok((
        ok,
        json!({
            "case": label,
            "pattern": pattern,
            "hits": hits.len(),
            "pattern_found": found,
            "best_pattern": best.pattern,
            "best_distance": best.distance,
            "pass": ok,
        }),
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;

    let c8 = catalog::get(SeriesId::C8);
    for t in [Vec2::new(0.3, -0.7), Vec2::new(-1.2, 0.9), Vec2::new(1.7, 1.1), Vec2::new(0.0, -1.6)] {
        let cert = achieve_via_reduction(&c8, t, 4, BUDGET)?;
        let (ok, row) = oracle_row(&c8, format!("C8 certificate toward ({}, {})", t.x, t.y), &cert.final_selection)?;
        pass &= ok;
        rows.push(row);
    }

    // C9: greedy on the positive (even) or negative (odd) y-parts
    let c9 = catalog::get(SeriesId::C9);
    for b in [0.4f64, -0.9, 1.1, -0.35] {
        let index = move |k: u64| if b > 0.0 { 2 * k } else { 2 * k - 1 };
        let mag = move |k: u64| 1.0 / index(k) as f64;
        let g = greedy_tail_sum(mag, &b.abs(), &1e-3, 0, BUDGET)?;
        let sel = IndexSelection::new(g.selection.indices().iter().map(|&k| index(k)).collect())?;
        let (ok, row) = oracle_row(&c9, format!("C9 greedy toward y = {b}"), &sel)?;
        pass &= ok;
        rows.push(row);
    }

    // the enumerator on hand-checked exact cases
    let q = |p: i64, d: i64| Rat::new(p, d);
    let c1 = catalog::get(SeriesId::C1);
    let ex1 = brute_subsums(&c9, 3, &Vec2::new(q(7, 8), q(-5, 6)), &Rat::zero())?;
    let ex2 = brute_subsums(&c1, 3, &Vec2q::zero(), &Rat::zero())?;
    let ex3 = brute_subsums(&c1, 2, &Vec2::new(q(-1, 2), Rat::zero()), &Rat::zero())?;
    let pats = |h: &[achieve::SubsumHit]| h.iter().map(|h| h.pattern.clone()).collect::<Vec<_>>();
    let examples_ok = pats(&ex1) == ["111"] && pats(&ex2).contains(&"000".to_string()) && pats(&ex3) == ["11"];
    pass &= examples_ok;
    Ok((
        pass,
        json!({
            "terms": ORACLE_TERMS,
            "rows": rows,
            "exact_examples": { "c9_111": pats(&ex1), "c1_zero": pats(&ex2), "c1_minus_half": pats(&ex3), "pass": examples_ok },
        }),
    ))
}

fn extreme_construction(fault: bool) -> Outcome {
    let opts = BuildOptions { mutate_delta: fault };
    let full = build_extreme_with(&ExtremeSchedule::Paper, 3, opts)?;
    let b = full.boundaries();
    let d = full.deltas();
    let n2 = b.get(2).cloned().flatten().map(|v| v.to_string());
    let full_ok = n2.as_deref() == Some("257") && d[1] == Dyadic::pow2(-512) && d[2] < d[1].mul_pow2(-8);

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut toys = Vec::new();
    let mut toys_ok = true;
    for _ in 0..24 {
        let seed_exp: i64 = rng.random_range(0..6);
        let l: u32 = rng.random_range(2..=8);
        let t = seed_exp as u32 + 5 + rng.random_range(0..6u32);
        let s = build_extreme_with(&ExtremeSchedule::toy(Rat::pow2(-seed_exp), &[(l, t)])?, 1, opts)?;
        let v = s.block_view(1)?;
        let m = brute_min_signed_sum(&v.x)?;
        let closed = Rat::pow2(-((t + l) as i64));
        let ok = m.value == closed && m.value == v.delta_next && !m.is_zero;
        toys_ok &= ok;
        toys.push(json!({ "delta_seed_log2": -seed_exp, "L": l, "T": t, "min": m.value, "pass": ok }));
    }

    let claim_series = build_extreme_with(&ExtremeSchedule::toy(Rat::new(1, 4), &[(6, 9)])?, 1, opts)?;
    let sweep = check_block_claim_exhaustive(&claim_series.block_view(1)?)?;
    let claim_ok = sweep.violations == 0;

    let pass = full_ok && toys_ok && claim_ok;
    Ok((
        pass,
        json!({
            "full_schedule": { "N2": n2, "delta2": d[1], "delta3_below_delta2_over_256": d[2] < d[1].mul_pow2(-8), "pass": full_ok },
            "toys": toys,
            "claim_sweep": { "pairs": sweep.pairs, "violations": sweep.violations, "min": sweep.min_magnitude, "bound": sweep.bound },
        }),
    ))
}

fn thirds() -> Outcome {
    let r = thirds_exclusion_check(6, 3)?;
    Ok((r.pass, serde_json::to_value(&r).expect("serializes")))
}

fn reduction_witnesses() -> Outcome {
    let c8 = catalog::get(SeriesId::C8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rows = Vec::new();
    let mut pass = true;
    while rows.len() < 50 {
        let eps = 2f64.powi(-rng.random_range(0..6));
        let u: f64 = rng.random_range(-1.0..1.0);
        if u.abs() < 1e-3 {
            continue;
        }
        let n: u64 = rng.random_range(1..2000);
        let w = build_reduction_set(&c8, eps, u * eps, n, BUDGET)?;
        let ok = w.holds && w.telescoping && w.selection.min().is_none_or(|m| m >= n);
        pass &= ok;
        rows.push(json!({
            "epsilon": eps,
            "x": u * eps,
            "N": n,
            "terms": w.selection.len(),
            "x_error": w.x_error,
            "max_abs_x_prefix": w.max_abs_x_prefix,
            "max_abs_y_prefix": w.max_abs_y_prefix,
            "telescoping": w.telescoping,
            "pass": ok,
        }));
    }
    Ok((pass, json!({ "rows": rows })))
}

pub fn raster_golden_params() -> RasterParams {
    RasterParams {
        terms: 30,
        samples: 1_000_000,
        region: Region::new(-1.0, 1.0, -1.0, 1.0).expect("valid"),
        width: 100,
        height: 100,
        seed: 7,
    }
}

fn determinism() -> Outcome {
    let c3 = catalog::get(SeriesId::C3);
    let p = raster_golden_params();
    let a = raster(&c3, &p)?;
    let b = raster(&c3, &p)?;
    let same_pgm = a.to_pgm() == b.to_pgm();
    let nonzero = a.nonzero_cells() as f64 / (a.width * a.height) as f64;
    // reports: two fresh runs of cheap criteria serialize identically
    let r1 = serde_json::to_string(&[run_criterion(7, &VerifyOptions::default()), run_criterion(8, &VerifyOptions::default())])
        .expect("serializes");
    let r2 = serde_json::to_string(&[run_criterion(7, &VerifyOptions::default()), run_criterion(8, &VerifyOptions::default())])
        .expect("serializes");
    let same_report = r1 == r2;
    Ok((
        same_pgm && same_report,
        json!({
            "pgm_identical": same_pgm,
            "pgm_bytes": a.to_pgm().len(),
            "nonzero_fraction": nonzero,
            "outside": a.outside,
            "report_identical": same_report,
        }),
    ))
}
