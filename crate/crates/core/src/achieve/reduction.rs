use serde::{Deserialize, Serialize};

use super::{strictly_after, IndexSelection};
use crate::catalog::{PhaseSlot, ReductionStructure, Series};
use crate::error::{Error, Result};
use crate::exactnum::{Vec2, Vec2f};

pub const A0_BEAM_WIDTH: usize = 4096;
/// First beam-search horizon; it doubles until the search succeeds.
const A0_FIRST_HORIZON: u64 = 16;
/// Reduction stages inside a certificate stop at this fraction of ε rather than ε/2.
/// The y-correction threshold `5/(1-δ2^(p+1))` then stays below 20/3 instead of
/// growing without bound as δ approaches `2^-(p+1)`.
const REDUCTION_STOP: f64 = 0.125;
/// Magnitude indices are searched below this.
const MAGNITUDE_CEILING: u64 = 1 << 61;

fn structure(series: &dyn Series) -> Result<ReductionStructure> {
    series.reduction_structure().ok_or_else(|| Error::NotStructured(series.name().to_string()))
}

/// Smallest magnitude index `j >= from` with `pred(j)`, for a predicate that is monotone in `j`.
fn first_magnitude(from: u64, pred: impl Fn(u64) -> bool) -> Option<u64> {
    if pred(from) {
        return Some(from);
    }
    let (mut lo, mut hi) = (from, from.max(1));
    while !pred(hi) {
        lo = hi;
        hi = hi.checked_mul(2)?;
        if hi > MAGNITUDE_CEILING {
            return None;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// First magnitude index after `j` whose magnitudes are strictly smaller.
fn next_smaller(s: ReductionStructure, j: u64) -> u64 {
    match s {
        ReductionStructure::HarmonicSqrt => j + 1,
        ReductionStructure::PowerBlocks => {
            let end = ReductionStructure::power_block_end(ReductionStructure::power_block(j));
            u64::try_from(end).map_or(u64::MAX, |e| e.saturating_add(1))
        }
    }
}

/// First term index carrying magnitude index `j`.
fn first_term_of(j: u64) -> u64 {
    let m = j.div_ceil(2);
    if j % 2 == 1 {
        4 * m - 3
    } else {
        4 * m - 1
    }
}

/// Output of one reduction step: a finite index set with small prefixes that nearly hits `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionWitness {
    pub selection: IndexSelection,
    pub epsilon: f64,
    pub x_target: f64,
    pub x_sum: f64,
    pub y_sum: f64,
    pub x_error: f64,
    pub max_abs_x_prefix: f64,
    pub max_abs_y_prefix: f64,
    /// least magnitude index with `y_j < ε`
    pub k: u64,
    /// least admissible term index
    pub start: u64,
    /// y-prefixes are 0 after whole pairs and the current pair's y before them
    pub telescoping: bool,
    /// the three defining inequalities and the one-sided approach
    pub holds: bool,
}

/// Pairs of same-magnitude terms whose y-parts cancel, accumulated greedily toward `x`.
///
/// For `x > 0` the pairs are `(4m-1, 4m)`, for `x < 0` they are `(4m-3, 4m-2)`.
/// Pairs are admitted from magnitude index `k = min{j : y_j < ε}` and term index `n` on.
pub fn build_reduction_set(
    series: &dyn Series,
    epsilon: f64,
    x: f64,
    n: u64,
    scan_budget: u64,
) -> Result<ReductionWitness> {
    reduction_set_within(series, epsilon, x, n, scan_budget, epsilon / 2.0)
}

/// [`build_reduction_set`] with the greedy run on until the x error drops below `stop <= ε/2`.
fn reduction_set_within(
    series: &dyn Series,
    epsilon: f64,
    x: f64,
    n: u64,
    scan_budget: u64,
    stop: f64,
) -> Result<ReductionWitness> {
    let s = structure(series)?;
    if !(x != 0.0 && x.abs() < epsilon) {
        return Err(Error::Precondition(format!("reduction needs 0 < |x| < eps, got x = {x}, eps = {epsilon}")));
    }
    let k = first_magnitude(1, |j| s.y_mag(j) < epsilon)
        .ok_or_else(|| Error::Precondition(format!("no y magnitude below {epsilon}")))?;
    let positive = x > 0.0;
    // magnitude parity: even magnitudes feed (4m-1, 4m), odd ones (4m-3, 4m-2)
    let parity_ok = |j: u64| j.is_multiple_of(2) == positive;
    let mut j = k.max(1);
    while !parity_ok(j) || first_term_of(j) < n.max(1) {
        j += 1;
    }
    let start = first_term_of(j);

    let goal = x.abs();
    let mut sum = 0.0;
    let mut picked = Vec::new();
    let mut scanned = 0u64;
    while !(goal - sum < stop) {
        if scanned >= scan_budget {
            return Err(Error::BudgetExceeded { what: "reduction set", budget: scan_budget });
        }
        scanned += 1;
        let first = first_term_of(j);
        let (a, b) = (series.term_f64(first)?.x.abs(), series.term_f64(first + 1)?.x.abs());
        let next = sum + a + b;
        if next < goal {
            sum = next;
            picked.push(first);
            picked.push(first + 1);
            j += 2;
        } else {
            // every pair of this magnitude overshoots; move on to smaller ones
            let mut nj = next_smaller(s, j);
            if !parity_ok(nj) {
                nj += 1;
            }
            j = nj.max(j + 2);
        }
    }
    let selection = IndexSelection::new(picked)?;
    witness(series, selection, epsilon, x, k, start)
}

fn witness(
    series: &dyn Series,
    selection: IndexSelection,
    epsilon: f64,
    x: f64,
    k: u64,
    start: u64,
) -> Result<ReductionWitness> {
    let (mut px, mut py) = (0.0f64, 0.0f64);
    let (mut mx, mut my) = (0.0f64, 0.0f64);
    let mut telescoping = true;
    for (pos, &i) in selection.indices().iter().enumerate() {
        let v = series.term_f64(i)?;
        px += v.x;
        py += v.y;
        mx = mx.max(px.abs());
        my = my.max(py.abs());
        telescoping &= if pos % 2 == 0 { py == v.y } else { py == 0.0 };
    }
    let x_error = (px - x).abs();
    let one_sided = if x > 0.0 { x - px > 0.0 } else { px - x > 0.0 };
    let holds = x_error < epsilon / 2.0 && mx < epsilon && my < epsilon && one_sided;
    Ok(ReductionWitness {
        selection,
        epsilon,
        x_target: x,
        x_sum: px,
        y_sum: py,
        x_error,
        max_abs_x_prefix: mx,
        max_abs_y_prefix: my,
        k,
        start,
        telescoping,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YCorrection {
    pub selection: IndexSelection,
    /// first admissible index; every later term has `|y| > ratio·|x|`
    pub m: u64,
    pub ratio: f64,
    pub y_residual_before: f64,
    pub y_sum: f64,
    pub y_residual_after: f64,
    pub abs_x_sum: f64,
    /// `2^-(p+1) - δ`
    pub x_budget: f64,
    /// picks share the residual's sign and never cross it
    pub monotone: bool,
    pub holds: bool,
}

/// Same-sign y-terms beyond `M` that bring a y residual below `2^-(p+1)`.
pub fn find_y_correction(
    series: &dyn Series,
    start: u64,
    delta: f64,
    p: u32,
    y_residual: f64,
    scan_budget: u64,
) -> Result<YCorrection> {
    let s = structure(series)?;
    let scale = 2f64.powi(p as i32 + 1);
    if delta * scale >= 1.0 {
        return Err(Error::DeltaTooLarge { delta, p });
    }
    let bound = 1.0 / scale;
    let ratio = 5.0 / (1.0 - delta * scale);
    let from_j = PhaseSlot::of(start.max(1)).magnitude;
    let j_m = first_magnitude(from_j, |j| s.y_mag(j) > ratio * s.x_mag(j))
        .ok_or_else(|| Error::Precondition(format!("y/x ratio never exceeds {ratio}")))?;
    let m = start.max(1).max(first_term_of(j_m));

    let mut r = y_residual;
    let mut picked = Vec::new();
    let mut abs_x_sum = 0.0;
    let mut y_sum = 0.0;
    let mut i = m;
    let mut scanned = 0u64;
    while !(r.abs() < bound) {
        if scanned >= scan_budget {
            return Err(Error::BudgetExceeded { what: "y correction", budget: scan_budget });
        }
        scanned += 1;
        let v = series.term_f64(i)?;
        if v.y.signum() == r.signum() && v.y.abs() <= r.abs() {
            r -= v.y;
            y_sum += v.y;
            abs_x_sum += v.x.abs();
            picked.push(i);
            i += 1;
        } else if v.y.abs() > r.abs() {
            let j = next_smaller(s, PhaseSlot::of(i).magnitude);
            i = first_term_of(j).max(i + 1);
        } else {
            i += 1;
        }
    }
    let selection = IndexSelection::new(picked)?;
    let monotone = {
        let mut prev = y_residual.abs();
        let mut cur = y_residual;
        let mut ok = true;
        for &k in selection.indices() {
            cur -= series.term_f64(k)?.y;
            ok &= cur.abs() < prev && cur.signum() * y_residual.signum() >= 0.0;
            prev = cur.abs();
        }
        ok
    };
    let x_budget = bound - delta;
    let holds = r.abs() < bound && monotone && selection.min().is_none_or(|k| k >= m);
    Ok(YCorrection {
        selection,
        m,
        ratio,
        y_residual_before: y_residual,
        y_sum,
        y_residual_after: r,
        abs_x_sum,
        x_budget,
        monotone,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Initial,
    Reduction,
    Correction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateStage {
    /// `i` of `A_i`
    pub i: u32,
    pub kind: StageKind,
    pub selection: IndexSelection,
    pub sum_after: Vec2f,
    pub x_error: f64,
    pub y_error: f64,
    pub x_error_bound: f64,
    pub y_error_bound: f64,
    /// largest `|Σ - target|` over the stage's own prefixes, per coordinate
    pub prefix_x: f64,
    pub prefix_y: f64,
    pub prefix_x_bound: Option<f64>,
    pub prefix_y_bound: Option<f64>,
    pub ordered: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AchievementCertificate {
    pub target: Vec2f,
    pub depth: u32,
    pub a0_horizon: u64,
    pub stages: Vec<CertificateStage>,
    pub final_selection: IndexSelection,
    pub final_sum: Vec2f,
    pub final_error: Vec2f,
    pub final_error_inf: f64,
    pub holds: bool,
}

/// Beam search over subsums of `1..=H` for a set within max-norm 1 of the target.
fn initial_set(series: &dyn Series, target: Vec2f, scan_budget: u64) -> Result<(IndexSelection, u64)> {
    if target.norm_inf() < 1.0 {
        return Ok((IndexSelection::empty(), 0));
    }
    let mut best = f64::INFINITY;
    let mut horizon = A0_FIRST_HORIZON;
    let mut spent = 0u64;
    loop {
        // arena of (index, parent) nodes; a state is (sum, last node)
        let mut arena: Vec<(u64, Option<usize>)> = Vec::new();
        let mut beam: Vec<(Vec2f, Option<usize>)> = vec![(Vec2f::ZERO, None)];
        for n in 1..=horizon {
            let v = series.term_f64(n)?;
            let mut next = Vec::with_capacity(beam.len() * 2);
            for &(s, node) in &beam {
                next.push((s, node));
                arena.push((n, node));
                next.push((s + v, Some(arena.len() - 1)));
            }
            spent += next.len() as u64;
            next.sort_by(|a, b| (a.0 - target).norm_inf().total_cmp(&(b.0 - target).norm_inf()));
            next.truncate(A0_BEAM_WIDTH);
            beam = next;
            let err = (beam[0].0 - target).norm_inf();
            best = best.min(err);
            if err < 1.0 {
                let mut idx = Vec::new();
                let mut cur = beam[0].1;
                while let Some(k) = cur {
                    idx.push(arena[k].0);
                    cur = arena[k].1;
                }
                idx.reverse();
                return Ok((IndexSelection::new(idx)?, n));
            }
            if spent > scan_budget {
                return Err(Error::SearchFailed { best });
            }
        }
        horizon *= 2;
    }
}

fn stage_record(
    series: &dyn Series,
    i: u32,
    kind: StageKind,
    selection: IndexSelection,
    before: Vec2f,
    target: Vec2f,
    prev: &IndexSelection,
) -> Result<CertificateStage> {
    let mut s = before;
    let (mut px, mut py) = (0.0f64, 0.0f64);
    for &k in selection.indices() {
        s += series.term_f64(k)?;
        px = px.max((s.x - target.x).abs());
        py = py.max((s.y - target.y).abs());
    }
    // stage 0 claims (iii) for p = 0; stage 2p-1 claims (ii),(iv); stage 2p claims (iii),(v)
    let p = i.div_ceil(2) as i32;
    let unit = 2f64.powi(-p);
    let (xb, yb, pxb, pyb) = match kind {
        StageKind::Initial => (1.0, 1.0, None, None),
        StageKind::Reduction => (unit, 4.0 * unit, Some(4.0 * unit), Some(4.0 * unit)),
        StageKind::Correction => (unit, unit, Some(unit), Some(4.0 * unit)),
    };
    let (x_error, y_error) = ((s.x - target.x).abs(), (s.y - target.y).abs());
    let ordered = strictly_after(prev, &selection);
    let holds = x_error < xb
        && y_error < yb
        && pxb.is_none_or(|b| px < b)
        && pyb.is_none_or(|b| py < b)
        && ordered;
    Ok(CertificateStage {
        i,
        kind,
        selection,
        sum_after: s,
        x_error,
        y_error,
        x_error_bound: xb,
        y_error_bound: yb,
        prefix_x: px,
        prefix_y: py,
        prefix_x_bound: pxb,
        prefix_y_bound: pyb,
        ordered,
        holds,
    })
}

/// Sets `A_0, A_1, ..., A_2P` whose union sums to within `2^-P` of `target` in
/// each coordinate: odd stages reduce the x error, even stages correct y.
pub fn achieve_via_reduction(
    series: &dyn Series,
    target: Vec2f,
    depth: u32,
    scan_budget: u64,
) -> Result<AchievementCertificate> {
    structure(series)?;
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let (a0, horizon) = initial_set(series, target, scan_budget)?;
    let mut stages = Vec::with_capacity(2 * depth as usize + 1);
    let first = stage_record(series, 0, StageKind::Initial, a0.clone(), Vec2f::ZERO, target, &IndexSelection::empty())?;
    let mut sum = first.sum_after;
    let mut last = a0.clone();
    let mut all = a0;
    stages.push(first);

    for p in 0..depth {
        let next_free = |sel: &IndexSelection| sel.max().map_or(1, |m| m + 1);
        let x = target.x - sum.x;
        let eps = 2f64.powi(-(p as i32));
        let reduction = if x == 0.0 {
            IndexSelection::empty()
        } else {
            reduction_set_within(series, eps, x, next_free(&all), scan_budget, eps * REDUCTION_STOP)?.selection
        };
        let st = stage_record(series, 2 * p + 1, StageKind::Reduction, reduction.clone(), sum, target, &last)?;
        sum = st.sum_after;
        if !reduction.is_empty() {
            last = reduction.clone();
        }
        all = all.merge(&reduction)?;
        stages.push(st);

        let delta = (target.x - sum.x).abs();
        let corr = find_y_correction(series, next_free(&all), delta, p, target.y - sum.y, scan_budget)?;
        let st = stage_record(series, 2 * p + 2, StageKind::Correction, corr.selection.clone(), sum, target, &last)?;
        sum = st.sum_after;
        if !corr.selection.is_empty() {
            last = corr.selection.clone();
        }
        all = all.merge(&corr.selection)?;
        stages.push(st);
    }
    let final_sum: Vec2f = all.indices().iter().map(|&i| series.term_f64(i)).sum::<Result<Vec2f>>()?;
    let final_error = Vec2::new(final_sum.x - target.x, final_sum.y - target.y);
    let final_error_inf = final_error.norm_inf();
    let holds = stages.iter().all(|s| s.holds) && final_error_inf < 2f64.powi(-(depth as i32));
    Ok(AchievementCertificate {
        target,
        depth,
        a0_horizon: horizon,
        stages,
        final_selection: all,
        final_sum,
        final_error,
        final_error_inf,
        holds,
    })
}
