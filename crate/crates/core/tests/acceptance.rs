//! Acceptance criteria, one line each. Every check recomputes its verdict from
//! test-side oracles and then confirms that `verify-all` reaches the same verdict.
//!
//! Criterion 2 is known to fail with the pinned threshold τ = 2 (see the README).
//! It is printed as FAIL and does not change the exit code; any other failure does.

use std::process::ExitCode;

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use levylab::achieve::{
    achieve_via_reduction, brute_subsums, build_absolute_selection, build_reduction_set, selection_tail_norm,
    thirds_exclusion_check, IndexSelection,
};
use levylab::catalog::{self, LevySet, ReductionStructure, Series, SeriesId};
use levylab::exactnum::{Dyadic, Rat, Vec2, Vec2f, Vec2q};
use levylab::extreme::{brute_min_signed_sum, build_extreme, check_block_claim_exhaustive, ExtremeSchedule};
use levylab::levy::{estimate_levy_directions, half_circle_coverage, match_directions, EstimatorParams};
use levylab::raster::raster;
use levylab::verify::{self, VerifyOptions};

const KNOWN_UNATTAINABLE: &[u32] = &[2];
const BUDGET: u64 = 10_000_000;

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

// 1. ‖S_N − (1, −ln 2)‖ ≤ 2/N
fn c1() -> Verdict {
    let c9 = catalog::get(SeriesId::C9);
    let mut worst = 0.0f64;
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        // test-side sum, pairing consecutive terms to keep the float error small
        let mut y = 0.0f64;
        let mut k = 1;
        while k < n {
            y += -1.0 / k as f64 + 1.0 / (k + 1) as f64;
            k += 2;
        }
        if k == n {
            y -= 1.0 / n as f64;
        }
        let x = 1.0 - 0.5f64.powi(n.min(2000) as i32);
        let lib = catalog::partial_sum_f64(&c9, n).map_err(e)?;
        ensure((lib - Vec2::new(x, y)).norm() < 1e-9, format!("library partial sum disagrees at N={n}"))?;
        let d = (lib - Vec2::new(1.0, -std::f64::consts::LN_2)).norm();
        ensure(d <= 2.0 / n as f64, format!("N={n}: distance {d} > {}", 2.0 / n as f64))?;
        worst = worst.max(d * n as f64);
    }
    Ok(format!("max N·distance = {worst:.4} (bound 2)"))
}

// 2. defaults M=1e5, ε=0.1, K=360, τ=2; match within 2°, nothing beyond 10°; C7 coverage
fn c2() -> Verdict {
    let p = EstimatorParams { horizon: 100_000, epsilon: 0.1, grid: 360, threshold: 2.0 };
    let mut bad = Vec::new();
    for id in [SeriesId::C1, SeriesId::C3, SeriesId::C5, SeriesId::C6, SeriesId::C7] {
        let def = catalog::get(id);
        let LevySet::Finite(known) = &def.meta.known_levy else { return Err(format!("{id}: no known set")) };
        let found = estimate_levy_directions(&def, &p).map_err(e)?.directions();
        if !match_directions(known, &found, 2.0, 10.0).pass {
            bad.push(format!("{id} directions"));
        }
        if id == SeriesId::C7 && !(!half_circle_coverage(&found, true) && half_circle_coverage(&found, false)) {
            bad.push("C7 coverage".to_string());
        }
    }
    if bad.is_empty() {
        Ok("all five Levy sets recovered".into())
    } else {
        Err(format!("missed: {}", bad.join(", ")))
    }
}

fn exact_term(s: &dyn Series, i: u64) -> Result<Vec2q, String> {
    s.term(i).map_err(e)?.as_exact().cloned().ok_or_else(|| format!("term {i} is not exact"))
}

// 3. cone plan on C6 toward (1,1) with T = 7
fn c3() -> Verdict {
    let c6 = catalog::get(SeriesId::C6);
    let du = catalog::decomposition(SeriesId::C6, "E").map_err(e)?;
    let dv = catalog::decomposition(SeriesId::C6, "N").map_err(e)?;
    let x = Vec2::new(1.0, 1.0);
    let plan = build_absolute_selection(&c6, &du, &dv, x, 7, BUDGET).map_err(e)?;
    ensure(plan.stages.len() == 7, "stage count")?;
    // δ = 1: c_1 = 3/8, c_{t+1} = (c_t/2 + 2^-(t+1))/2
    let mut c = vec![Rat::new(3, 8)];
    for t in 1..8 {
        let next = (&c[t - 1] / &Rat::from(2) + Rat::pow2(-(t as i64 + 1))) / Rat::from(2);
        c.push(next);
    }
    let xq = Vec2::new(Rat::one(), Rat::one());
    let mut sum = Vec2q::zero();
    let mut prev_max = 0u64;
    for (t, st) in plan.stages.iter().enumerate() {
        let t1 = t as i64 + 1;
        ensure(c[t] < Rat::pow2(-t1) && &c[t] / &Rat::from(2) < c[t + 1] && c[t + 1] < c[t], format!("c schedule at {t1}"))?;
        ensure((st.c - c[t].to_f64()).abs() < 1e-12, format!("recorded c_{t1} differs"))?;
        let idx = st.indices().map_err(e)?;
        ensure(idx.min().is_none_or(|m| m > prev_max), format!("stage {t1} overlaps the previous one"))?;
        prev_max = idx.max().unwrap_or(prev_max);
        for &i in idx.indices() {
            sum = &sum + &exact_term(&c6, i)?;
        }
        let scale = Rat::one() - Rat::pow2(-t1);
        let r = Vec2::new(&sum.x - &(&xq.x * &scale), &sum.y - &(&xq.y * &scale));
        ensure(r.norm_sq() < &c[t] * &c[t], format!("stage {t1} residual not below c_{t1}"))?;
    }
    let tail = selection_tail_norm(&plan, &c6).map_err(e)?;
    ensure(tail.total.is_finite() && tail.within_stagewise && tail.within_cos_bound, "tail norm above its bound")?;
    let err = (sum.to_f64() - x).norm();
    let bound = c[6].to_f64() + 2f64.sqrt() / 128.0;
    ensure(err < bound, format!("final error {err} >= {bound}"))?;
    Ok(format!("error {err:.3e} < {bound:.3e}, tail norm {:.4} <= {:.4}", tail.total, tail.cos_bound))
}

/// Recomputes every stage envelope from the selections alone.
fn envelopes_hold(s: &dyn Series, target: Vec2f, stages: &[IndexSelection]) -> Result<bool, String> {
    let mut sum = Vec2f::ZERO;
    for (i, sel) in stages.iter().enumerate() {
        let p = (i as i32 + 1) / 2;
        let unit = 2f64.powi(-p);
        let (xb, yb, pb) = match i {
            0 => (1.0, 1.0, None),
            i if i % 2 == 1 => (unit, 4.0 * unit, Some((4.0 * unit, 4.0 * unit))),
            _ => (unit, unit, Some((unit, 4.0 * unit))),
        };
        for &k in sel.indices() {
            sum += s.term_f64(k).map_err(e)?;
            if let Some((px, py)) = pb {
                if (sum.x - target.x).abs() >= px || (sum.y - target.y).abs() >= py {
                    return Ok(false);
                }
            }
        }
        if (sum.x - target.x).abs() >= xb || (sum.y - target.y).abs() >= yb {
            return Ok(false);
        }
    }
    Ok(true)
}

// 4. certificates on C8, P = 6, for (0.3, −0.7) and ten seeded targets in [−2,2]²
fn c4() -> Verdict {
    let c8 = catalog::get(SeriesId::C8);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut targets = vec![Vec2::new(0.3, -0.7)];
    targets.extend((0..10).map(|_| Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))));
    for t in &targets {
        let cert = achieve_via_reduction(&c8, *t, 6, BUDGET).map_err(e)?;
        let sels: Vec<IndexSelection> = cert.stages.iter().map(|s| s.selection.clone()).collect();
        ensure(envelopes_hold(&c8, *t, &sels)?, format!("envelope broken for target {t:?}"))?;
        let total: Vec2f = cert.final_selection.indices().iter().map(|&i| c8.term_f64(i).unwrap()).sum();
        let err = (total - *t).norm_inf();
        ensure(err < 1.0 / 64.0, format!("target {t:?}: final error {err}"))?;
        ensure(cert.holds, format!("certificate for {t:?} disagrees with the recomputation"))?;
    }
    Ok(format!("{} certificates, all envelopes hold", targets.len()))
}

/// Nearest subsum over the first `n` terms, by plain enumeration.
fn nearest_pattern(s: &dyn Series, n: u32, target: Vec2f) -> (u32, f64) {
    let terms: Vec<Vec2f> = (1..=n as u64).map(|i| s.term_f64(i).unwrap()).collect();
    let mut best = (0u32, f64::INFINITY);
    for m in 0u32..1 << n {
        let mut acc = Vec2f::ZERO;
        for (j, t) in terms.iter().enumerate() {
            if m >> j & 1 == 1 {
                acc += *t;
            }
        }
        let d = (acc - target).norm();
        if d < best.1 {
            best = (m, d);
        }
    }
    best
}

// 5. restricted selections agree with the best exhaustive pattern, N = 18
fn c5() -> Verdict {
    const N: u32 = 18;
    let c8 = catalog::get(SeriesId::C8);
    let c9 = catalog::get(SeriesId::C9);
    let mut cases: Vec<(&dyn Series, IndexSelection)> = Vec::new();
    for t in [Vec2::new(0.3, -0.7), Vec2::new(-1.5, 0.4)] {
        cases.push((&c8, achieve_via_reduction(&c8, t, 4, BUDGET).map_err(e)?.final_selection));
    }
    // C9: a hand-rolled greedy toward y = 0.6 over its positive (even) y-parts
    let mut sel = Vec::new();
    let mut y = 0.0;
    for k in 1..200u64 {
        if y + 1.0 / ((2 * k) as f64) < 0.6 {
            y += 1.0 / (2 * k) as f64;
            sel.push(2 * k);
        }
    }
    cases.push((&c9, IndexSelection::new(sel).map_err(e)?));
    for (s, sel) in &cases {
        let r = sel.restrict(N as u64);
        let mask = r.mask(N as u64) as u32;
        let sum: Vec2f = r.indices().iter().map(|&i| s.term_f64(i).unwrap()).sum();
        let (best, d) = nearest_pattern(*s, N, sum);
        ensure(d <= 1e-12, format!("{}: best pattern is {d} away", s.name()))?;
        let tf = |v: f64| Rat::from_f64(v).unwrap();
        let hits = brute_subsums(*s, N, &Vec2::new(tf(sum.x), tf(sum.y)), &Rat::from_f64(1e-12).unwrap()).map_err(e)?;
        ensure(hits.iter().any(|h| h.mask == mask), format!("{}: enumerator misses the selection", s.name()))?;
        ensure(best == mask || hits.iter().any(|h| h.mask == best), "oracles disagree on the best pattern")?;
    }
    // exact examples
    let q = |p: i64, d: i64| Rat::new(p, d);
    let c1 = catalog::get(SeriesId::C1);
    let pats = |h: Vec<levylab::achieve::SubsumHit>| h.into_iter().map(|h| h.pattern).collect::<Vec<_>>();
    ensure(pats(brute_subsums(&c9, 3, &Vec2::new(q(7, 8), q(-5, 6)), &Rat::zero()).map_err(e)?) == ["111"], "C9 example")?;
    ensure(pats(brute_subsums(&c8, 3, &Vec2q::zero(), &Rat::zero()).map_err(e)?).contains(&"000".into()), "zero example")?;
    ensure(pats(brute_subsums(&c1, 2, &Vec2::new(q(-1, 2), Rat::zero()), &Rat::zero()).map_err(e)?) == ["11"], "C1 example")?;
    Ok(format!("{} selections match, 3 exact examples", cases.len()))
}

/// Smallest gap between sorted subset sums.
fn min_subset_gap(terms: &[Rat]) -> Rat {
    let mut sums: Vec<Rat> = (0..1u64 << terms.len())
        .map(|m| (0..terms.len()).filter(|&j| m >> j & 1 == 1).map(|j| terms[j].clone()).sum())
        .collect();
    sums.sort();
    sums.windows(2).map(|w| &w[1] - &w[0]).min().unwrap()
}

// 6. extreme construction
fn c6() -> Verdict {
    let full = build_extreme(&ExtremeSchedule::Paper, 3).map_err(e)?;
    let b = full.boundaries();
    ensure(b[2].as_ref().map(|v| v.to_string()).as_deref() == Some("257"), "N_2 != 257")?;
    let d = full.deltas();
    ensure(d[1] == Dyadic::pow2(-512), "δ_2 != 4^-256")?;
    ensure(d[2] < d[1].mul_pow2(-8), "δ_3 not below δ_2/4^4")?;
    ensure(d[2] == Dyadic::pow2(-(BigInt::one() << 523usize)), "δ_3 closed form")?;

    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut n = 0;
    while n < 20 {
        let seed_exp: i64 = rng.random_range(0..5);
        let l: u32 = rng.random_range(2..=8);
        let t: u32 = rng.random_range(1..16);
        let Ok(sched) = ExtremeSchedule::toy(Rat::pow2(-seed_exp), &[(l, t)]) else { continue };
        let Ok(s) = build_extreme(&sched, 1) else { continue }; // dominance not met
        let v = s.block_view(1).map_err(e)?;
        let m = brute_min_signed_sum(&v.x).map_err(e)?;
        let closed = Rat::pow2(-((t + l) as i64));
        ensure(m.value == closed, format!("toy L={l} T={t}: min {} != 2^-{}", m.value, t + l))?;
        ensure(min_subset_gap(&v.x) == closed, format!("toy L={l} T={t}: oracle gap differs"))?;
        n += 1;
    }
    let toy = build_extreme(&ExtremeSchedule::toy(Rat::new(1, 4), &[(6, 9)]).map_err(e)?, 1).map_err(e)?;
    let sweep = check_block_claim_exhaustive(&toy.block_view(1).map_err(e)?).map_err(e)?;
    ensure(sweep.violations == 0, format!("{} claim violations", sweep.violations))?;
    Ok(format!("full schedule N_2 = 257, δ_2 = 2^-512; {n} toy gaps exact; {} claim pairs clean", sweep.pairs))
}

// 7. tail inequality n ≤ 6 and distance identity k ≤ 3, exact
fn c7() -> Verdict {
    let r = thirds_exclusion_check(6, 3).map_err(e)?;
    ensure(r.pass, "library check fails")?;
    for n in 0..=6i64 {
        // 60 terms exactly, rest bounded by 2·(first omitted term)
        let tail: Rat = (n + 1..=n + 60).map(|m| Rat::pow2(m - 2 * m * m)).sum();
        let m = n + 61;
        let rest = Rat::pow2(m - 2 * m * m + 1);
        let bound = if n == 0 { Rat::one() } else { Rat::pow2(-3 - 2 * n * n) };
        ensure(tail + rest < bound, format!("tail inequality at n={n}"))?;
    }
    for k in 1..=3u32 {
        let d = BigInt::one() << (2 * k * k) as usize;
        let dr = Rat::from_int(d.clone());
        let third = Rat::new(1, 3);
        // scan a window of integers around d/3 instead of trusting floor/ceil
        let centre: BigInt = &d / 3u32;
        let min = (-3i64..=3)
            .map(|o| (Rat::from_int(&centre + o) / &dr - &third).abs())
            .min()
            .unwrap();
        ensure(min == (Rat::from(3) * dr).recip(), format!("distance identity at k={k}"))?;
    }
    Ok("n ≤ 6 tails and k ≤ 3 distances exact".into())
}

// 8. fifty seeded reduction witnesses on C8
fn c8() -> Verdict {
    let c8 = catalog::get(SeriesId::C8);
    let st = ReductionStructure::HarmonicSqrt;
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..50 {
        let eps = 2f64.powi(-rng.random_range(0..6));
        let x = eps * rng.random_range(0.01..0.99) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let n: u64 = rng.random_range(1..5000);
        let w = build_reduction_set(&c8, eps, x, n, BUDGET).map_err(e)?;
        let (mut px, mut py) = (0.0f64, 0.0f64);
        for (pos, &i) in w.selection.indices().iter().enumerate() {
            ensure(i >= n, "index below N")?;
            let v = c8.term_f64(i).map_err(e)?;
            px += v.x;
            py += v.y;
            ensure(px.abs() < eps && py.abs() < eps, format!("prefix escapes ε = {eps}"))?;
            let mag = st.y_mag(catalog::PhaseSlot::of(i).magnitude);
            let shape = if pos % 2 == 0 { py.abs() == mag } else { py == 0.0 };
            ensure(shape, format!("y prefix {py} has a forbidden shape"))?;
        }
        ensure((x - px).abs() < eps / 2.0, format!("x error at ε = {eps}, x = {x}"))?;
    }
    Ok("50 witnesses, three inequalities and telescoping hold".into())
}

// 9. byte-identical raster and verify-all JSON
fn c9() -> Verdict {
    let c3 = catalog::get(SeriesId::C3);
    let p = verify::raster_golden_params();
    let a = raster(&c3, &p).map_err(e)?.to_pgm();
    let b = raster(&c3, &p).map_err(e)?.to_pgm();
    ensure(a == b, "raster PGM differs between runs")?;
    let run = || {
        std::process::Command::new(env!("CARGO_BIN_EXE_levylab"))
            .args(["verify-all", "--json"])
            .env("LEVYLAB_THREADS", "2")
            .output()
            .map_err(e)
    };
    let (r1, r2) = (run()?, run()?);
    ensure(!r1.stdout.is_empty() && r1.stdout == r2.stdout, "verify-all JSON differs between runs")?;
    Ok(format!("PGM {} bytes and verify-all JSON {} bytes reproduced", a.len(), r1.stdout.len()))
}

fn main() -> ExitCode {
    let checks: [(u32, fn() -> Verdict); 9] = [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8), (9, c9)];
    let mut unexpected = 0;
    for (id, f) in checks {
        let verdict = f();
        let suite = verify::run_criterion(id, &VerifyOptions::default());
        let (pass, msg) = match &verdict {
            Ok(m) => (true, m.clone()),
            Err(m) => (false, m.clone()),
        };
        let known = KNOWN_UNATTAINABLE.contains(&id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id} [{}] {tag}: {msg}", suite.module);
        if suite.pass != pass {
            println!("criterion {id}: verify-all reports {} but the independent check says {}", suite.pass, pass);
            unexpected += 1;
        } else if !pass && !known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
