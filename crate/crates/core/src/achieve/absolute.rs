use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::greedy::greedy_tail_sum;
use super::{strictly_after, IndexSelection};
use crate::catalog::Series;
use crate::error::{Error, Result};
use crate::exactnum::{cone_distance, in_positive_span, solve_basis, Direction, Vec2f};
use crate::levy::{half_circle_coverage, LevyDecomposition};

/// Cones narrower than this (radians short of π) are usable for plans.
const CONE_GAP_TOL: f64 = 1e-9;
/// Tolerance for deciding that a target sits on a ray.
const RAY_TOL: f64 = 1e-12;
/// Indices compared when checking that two decompositions are disjoint.
const DISJOINT_PROBE: u64 = 4096;
/// Restarts allowed when the remainder budget of a stage is overrun.
const REMAINDER_RETRIES: u32 = 60;
/// Halvings tried when splitting a target that sits on a ray.
const SPLIT_HALVINGS: u32 = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanStage {
    pub t: u32,
    /// `A_t`, drawn from the `u` decomposition
    pub from_u: IndexSelection,
    /// `B_t`, drawn from the `v` decomposition
    pub from_v: IndexSelection,
    /// `y_t = Σ_{P_t} term`
    pub y: Vec2f,
    pub c: f64,
    /// per-source error budget: `c_1/4` on the first stage, `ε_{t-1}/4` after
    pub budget: f64,
    pub alpha_u: f64,
    pub alpha_v: f64,
    pub remainder_u: f64,
    pub remainder_v: f64,
    /// `x - Σ_{k<=t} y_k = a·u + b·v`
    pub a: f64,
    pub b: f64,
}

impl PlanStage {
    pub fn indices(&self) -> Result<IndexSelection> {
        self.from_u.merge(&self.from_v)
    }
}

/// Output of the pairwise-disjoint stage construction for one cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub target: Vec2f,
    pub u: Direction,
    pub v: Direction,
    pub u_label: String,
    pub v_label: String,
    /// distance from the target to the nearer boundary ray
    pub delta: f64,
    pub a0: f64,
    pub b0: f64,
    /// every selected index exceeds this
    pub start_after: u64,
    pub stages: Vec<PlanStage>,
}

/// `c_1 = 3δ/8`, then `c_{t+1}` is the midpoint of `(c_t/2, δ/2^(t+1))`.
pub(crate) fn c_schedule(delta: f64, count: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(count);
    let mut cur = 3.0 * delta / 8.0;
    for t in 1..=count {
        c.push(cur);
        cur = 0.5 * (cur / 2.0 + delta / 2f64.powi(t as i32 + 1));
    }
    c
}

impl SelectionPlan {
    pub fn selection(&self) -> Result<IndexSelection> {
        self.stages.iter().try_fold(IndexSelection::empty(), |acc, s| acc.merge(&s.indices()?))
    }

    pub fn sum(&self) -> Vec2f {
        self.stages.iter().map(|s| s.y).sum()
    }

    /// `c_{T+1}`, needed to state the last stage's bounds.
    pub fn c_after(&self) -> f64 {
        *c_schedule(self.delta, self.stages.len() + 1).last().expect("nonempty")
    }

    /// `c_T + 2^-T ‖x‖`, the distance the truncated plan may still be from the target.
    pub fn truncation_bound(&self) -> f64 {
        let t = self.stages.len() as i32;
        let c = self.stages.last().map_or(0.0, |s| s.c);
        c + 2f64.powi(-t) * self.target.norm()
    }
}

fn check_disjoint(du: &LevyDecomposition, dv: &LevyDecomposition) -> Result<()> {
    let mut a: Vec<u64> = (1..=DISJOINT_PROBE).map(|n| du.index(n)).collect();
    let mut b: Vec<u64> = (1..=DISJOINT_PROBE).map(|n| dv.index(n)).collect();
    a.sort_unstable();
    b.sort_unstable();
    let limit = a[a.len() - 1].min(b[b.len() - 1]);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() && a[i] <= limit && b[j] <= limit {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                return Err(Error::Precondition(format!(
                    "decompositions {} and {} share index {}",
                    du.label, dv.label, a[i]
                )))
            }
        }
    }
    Ok(())
}

/// First decomposition position whose index exceeds `after`, scanning from `from`.
fn first_position_after(d: &LevyDecomposition, after: u64, from: u64, budget: u64) -> Result<u64> {
    let mut n = from.max(1);
    let mut steps = 0;
    while d.index(n) <= after {
        n += 1;
        steps += 1;
        if steps > budget {
            return Err(Error::BudgetExceeded { what: "decomposition index search", budget });
        }
    }
    Ok(n)
}

struct Draw {
    indices: IndexSelection,
    alpha: f64,
    remainder: f64,
    next_position: u64,
}

/// `A ⊂ {k_n > after}` with `half - budget < Σα < half` and `Σ‖w‖ < budget`.
fn draw(d: &LevyDecomposition, half: f64, err: f64, after: u64, position: u64, scan_budget: u64) -> Result<Draw> {
    let mut start = first_position_after(d, after, position, scan_budget)?;
    for _ in 0..REMAINDER_RETRIES {
        let g = greedy_tail_sum(|n| d.alpha(n), &half, &err, start - 1, scan_budget)?;
        let remainder: f64 = g.selection.indices().iter().map(|&n| d.remainder(n).norm()).sum();
        if remainder < err {
            let indices = IndexSelection::new(g.selection.indices().iter().map(|&n| d.index(n)).collect())?;
            let next_position = g.selection.max().map_or(start, |m| m + 1);
            return Ok(Draw { indices, alpha: g.sum, remainder, next_position });
        }
        start = start.saturating_mul(2).saturating_add(16);
    }
    Err(Error::BudgetExceeded { what: "remainder budget restarts", budget: REMAINDER_RETRIES as u64 })
}

fn sum_terms(series: &dyn Series, s: &IndexSelection) -> Result<Vec2f> {
    s.indices().iter().map(|&i| series.term_f64(i)).sum()
}

fn norm_terms(series: &dyn Series, s: &IndexSelection) -> Result<f64> {
    s.indices().iter().map(|&i| series.term_f64(i).map(|v| v.norm())).sum()
}

/// Stages `P_1..P_T` for a target strictly inside the cone of two decompositions.
pub fn build_absolute_selection(
    series: &dyn Series,
    du: &LevyDecomposition,
    dv: &LevyDecomposition,
    x: Vec2f,
    stages: u32,
    scan_budget: u64,
) -> Result<SelectionPlan> {
    build_absolute_selection_after(series, du, dv, x, stages, scan_budget, 0)
}

/// As [`build_absolute_selection`], using only indices above `start_after`.
pub fn build_absolute_selection_after(
    series: &dyn Series,
    du: &LevyDecomposition,
    dv: &LevyDecomposition,
    x: Vec2f,
    stages: u32,
    scan_budget: u64,
    start_after: u64,
) -> Result<SelectionPlan> {
    let (u, v) = (du.direction.unit(), dv.direction.unit());
    let (a0, b0) = in_positive_span(u, v, x)?.ok_or(Error::ConeBoundary)?;
    let delta = cone_distance(x, u).min(cone_distance(x, v));
    if delta <= RAY_TOL * (1.0 + x.norm()) {
        return Err(Error::ConeBoundary);
    }
    check_disjoint(du, dv)?;
    let c = c_schedule(delta, stages as usize + 1);

    let mut plan = SelectionPlan {
        target: x,
        u: du.direction,
        v: dv.direction,
        u_label: du.label.clone(),
        v_label: dv.label.clone(),
        delta,
        a0,
        b0,
        start_after,
        stages: Vec::with_capacity(stages as usize),
    };
    let (mut a, mut b) = (a0, b0);
    let (mut pos_u, mut pos_v) = (1u64, 1u64);
    let mut after = start_after;
    let mut partial = Vec2f::ZERO;
    for t in 1..=stages {
        let i = t as usize - 1;
        let budget = if t == 1 { c[0] / 4.0 } else { (c[i] - c[i - 1] / 2.0) / 4.0 };
        let du_draw = draw(du, a / 2.0, budget, after, pos_u, scan_budget)?;
        let dv_draw = draw(dv, b / 2.0, budget, after, pos_v, scan_budget)?;
        pos_u = du_draw.next_position;
        pos_v = dv_draw.next_position;
        let stage_sel = du_draw.indices.merge(&dv_draw.indices)?;
        after = stage_sel.max().unwrap_or(after);
        let y = sum_terms(series, &stage_sel)?;
        partial += y;
        (a, b) = solve_basis(u, v, x - partial)?;
        plan.stages.push(PlanStage {
            t,
            from_u: du_draw.indices,
            from_v: dv_draw.indices,
            y,
            c: c[i],
            budget,
            alpha_u: du_draw.alpha,
            alpha_v: dv_draw.alpha,
            remainder_u: du_draw.remainder,
            remainder_v: dv_draw.remainder,
            a,
            b,
        });
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Precondition(format!("residual left the cone after stage {t}")));
        }
    }
    Ok(plan)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageChecks {
    pub t: u32,
    /// `c_t < δ/2^t` and `c_t/2 < c_{t+1} < c_t`
    pub c_bounds: bool,
    /// `min P_t > max P_{t-1}`
    pub ordered: bool,
    /// `‖Σ_{k<=t} y_k - (1-2^-t)x‖`
    pub residual: f64,
    pub residual_ok: bool,
    /// `‖Σ_{k<t} y_k + 2y_t - x‖` against `2ε_{t-1}` (from the second stage on)
    pub intermediate: Option<f64>,
    pub intermediate_bound: Option<f64>,
    pub intermediate_ok: bool,
    /// `Σ_{P_t} ‖term‖` against `ε_{t-1}/2 + (a_{t-1} + b_{t-1})/2` (from the second stage on)
    pub stage_norm: f64,
    pub stage_norm_bound: Option<f64>,
    pub stage_norm_ok: bool,
    /// recorded `y_t` matches the series
    pub recorded_sum_ok: bool,
}

impl StageChecks {
    pub fn all(&self) -> bool {
        self.c_bounds
            && self.ordered
            && self.residual_ok
            && self.intermediate_ok
            && self.stage_norm_ok
            && self.recorded_sum_ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanChecks {
    pub stages: Vec<StageChecks>,
    pub pass: bool,
}

/// Re-derives every stage inequality from the series terms.
pub fn check_plan(plan: &SelectionPlan, series: &dyn Series) -> Result<PlanChecks> {
    let x = plan.target;
    let (u, v) = (plan.u.unit(), plan.v.unit());
    let c = c_schedule(plan.delta, plan.stages.len() + 1);
    let mut out = Vec::with_capacity(plan.stages.len());
    let mut partial = Vec2f::ZERO;
    let mut prev_sel = IndexSelection::new(if plan.start_after > 0 { vec![plan.start_after] } else { vec![] })?;
    let (mut a_prev, mut b_prev) = (plan.a0, plan.b0);
    for (i, s) in plan.stages.iter().enumerate() {
        let t = s.t as i32;
        let sel = s.indices()?;
        let y = sum_terms(series, &sel)?;
        let stage_norm = norm_terms(series, &sel)?;
        let c_bounds = c[i] < plan.delta / 2f64.powi(t) && c[i] / 2.0 < c[i + 1] && c[i + 1] < c[i];
        let ordered = strictly_after(&prev_sel, &sel);
        let (intermediate, intermediate_bound, stage_norm_bound) = if i == 0 {
            (None, None, None)
        } else {
            let eps = c[i] - c[i - 1] / 2.0;
            (
                Some((partial + y.scale(2.0) - x).norm()),
                Some(2.0 * eps),
                Some(eps / 2.0 + (a_prev + b_prev) / 2.0),
            )
        };
        partial += y;
        let residual = (partial - x.scale(1.0 - 2f64.powi(-t))).norm();
        let intermediate_ok = match (intermediate, intermediate_bound) {
            (Some(v), Some(b)) => v <= b,
            _ => true,
        };
        let stage_norm_ok = stage_norm_bound.is_none_or(|b| stage_norm <= b);
        out.push(StageChecks {
            t: s.t,
            c_bounds,
            ordered,
            residual,
            residual_ok: residual < c[i],
            intermediate,
            intermediate_bound,
            intermediate_ok,
            stage_norm,
            stage_norm_bound,
            stage_norm_ok,
            recorded_sum_ok: (y - s.y).norm() <= 1e-12 * (1.0 + y.norm()),
        });
        (a_prev, b_prev) = solve_basis(u, v, x - partial)?;
        if !sel.is_empty() {
            prev_sel = sel;
        }
    }
    let pass = out.iter().all(StageChecks::all);
    Ok(PlanChecks { stages: out, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailNormReport {
    /// `Σ‖term‖` over every selected index
    pub total: f64,
    pub first_stage: f64,
    /// `(a_0 + b_0)/2 + c_1/2`
    pub first_stage_bound: f64,
    pub later_stages: f64,
    /// `Σ_t [ε_t/2 + (a_t + b_t)/2]` from the recorded coefficients
    pub stagewise_bound: f64,
    pub cos_alpha: f64,
    /// `‖u - cos α·v‖`
    pub cos_denominator: f64,
    /// `sin α`
    pub sine_denominator: f64,
    /// first stage + `(δ + ‖x‖)/‖u - cos α·v‖` + `Σ ε_t / 2`
    pub cos_bound: f64,
    /// the same with `sin α` in the denominator
    pub sine_bound: f64,
    /// stages whose `a_t` or `b_t` exceeds `(c_t + 2^-t‖x‖)/‖u - cos α·v‖`
    pub cos_coefficient_violations: u32,
    pub sine_coefficient_violations: u32,
    pub within_stagewise: bool,
    pub within_cos_bound: bool,
    pub within_sine_bound: bool,
}

/// Total norm of a plan's selection against the bounds assembled from its records.
pub fn selection_tail_norm(plan: &SelectionPlan, series: &dyn Series) -> Result<TailNormReport> {
    let (u, v) = (plan.u.unit(), plan.v.unit());
    let cos_alpha = u.dot(v).abs();
    let cos_denominator = (u - v.scale(cos_alpha)).norm();
    let sine_denominator = u.cross(v).abs();
    let c = c_schedule(plan.delta, plan.stages.len() + 1);
    let xn = plan.target.norm();

    let mut first_stage = 0.0;
    let mut later_stages = 0.0;
    let mut stagewise_bound = 0.0;
    let mut eps_sum = 0.0;
    let (mut cos_viol, mut sine_viol) = (0, 0);
    for (i, s) in plan.stages.iter().enumerate() {
        let norm = norm_terms(series, &s.indices()?)?;
        if i == 0 {
            first_stage = norm;
        } else {
            later_stages += norm;
        }
        let t = s.t as i32;
        let limit = c[i] + 2f64.powi(-t) * xn;
        if s.a.max(s.b) > limit / cos_denominator {
            cos_viol += 1;
        }
        if s.a.max(s.b) > limit / sine_denominator {
            sine_viol += 1;
        }
        // stage t's coefficients bound stage t+1, which exists only below T
        if i + 1 < plan.stages.len() {
            let eps = c[i + 1] - c[i] / 2.0;
            eps_sum += eps;
            stagewise_bound += eps / 2.0 + (s.a + s.b) / 2.0;
        }
    }
    let first_stage_bound = if plan.stages.is_empty() { 0.0 } else { (plan.a0 + plan.b0) / 2.0 + c[0] / 2.0 };
    let ab = plan.delta + xn;
    let (cos_bound, sine_bound) = if plan.stages.is_empty() {
        (0.0, 0.0)
    } else {
        (first_stage + ab / cos_denominator + eps_sum / 2.0, first_stage + ab / sine_denominator + eps_sum / 2.0)
    };
    let total = first_stage + later_stages;
    Ok(TailNormReport {
        total,
        first_stage,
        first_stage_bound,
        later_stages,
        stagewise_bound,
        cos_alpha,
        cos_denominator,
        sine_denominator,
        cos_bound,
        sine_bound,
        cos_coefficient_violations: cos_viol,
        sine_coefficient_violations: sine_viol,
        within_stagewise: later_stages <= stagewise_bound,
        within_cos_bound: total <= cos_bound,
        within_sine_bound: total <= sine_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsPlaneResult {
    pub target: Vec2f,
    /// finite prefix `E` moving the target into the half plane spanned by the Levy directions
    pub shift: IndexSelection,
    pub shift_sum: Vec2f,
    /// `(y, x - y)` when the target sits on a ray and is split across two cones
    pub split: Option<(Vec2f, Vec2f)>,
    pub plans: Vec<SelectionPlan>,
    pub selection: IndexSelection,
    pub sum: Vec2f,
    pub error: f64,
    /// `Σ (c_T + 2^-T ‖target_i‖)` over the constituent plans
    pub bound: f64,
    pub within_bound: bool,
}

struct Fan<'a> {
    /// decompositions sorted by angle
    dirs: Vec<&'a LevyDecomposition>,
}

impl<'a> Fan<'a> {
    fn new(decomps: &'a [LevyDecomposition]) -> Self {
        let mut dirs: Vec<&LevyDecomposition> = decomps.iter().collect();
        dirs.sort_by(|a, b| a.direction.angle().total_cmp(&b.direction.angle()));
        dirs.dedup_by(|a, b| a.direction.angular_distance(&b.direction) < RAY_TOL);
        Fan { dirs }
    }

    fn len(&self) -> usize {
        self.dirs.len()
    }

    fn next(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    fn prev(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    /// counter-clockwise gap from direction `i` to the next one
    fn gap(&self, i: usize) -> f64 {
        let a = self.dirs[i].direction.angle();
        let b = self.dirs[self.next(i)].direction.angle();
        let g = (b - a).rem_euclid(std::f64::consts::TAU);
        if self.len() == 1 {
            std::f64::consts::TAU
        } else {
            g
        }
    }

    fn usable(&self, i: usize) -> bool {
        self.gap(i) < PI - CONE_GAP_TOL
    }

    fn cone_of(&self, x: Vec2f) -> Option<usize> {
        (0..self.len()).find(|&i| {
            self.usable(i)
                && in_positive_span(self.dirs[i].direction.unit(), self.dirs[self.next(i)].direction.unit(), x)
                    .ok()
                    .flatten()
                    .is_some()
        })
    }

    fn ray_of(&self, x: Vec2f) -> Option<usize> {
        (0..self.len()).find(|&i| {
            let d = self.dirs[i].direction.unit();
            d.cross(x).abs() <= RAY_TOL * x.norm() && d.dot(x) > 0.0
        })
    }

    /// Index of a gap of (about) π, whose far side is the half plane of the other directions.
    fn flat_gap(&self) -> Option<usize> {
        (0..self.len()).find(|&i| (self.gap(i) - PI).abs() <= CONE_GAP_TOL.max(1e-9))
    }
}

/// Absolutely convergent selection for a plane target from three or more Levy decompositions.
pub fn achieve_abs_plane(
    series: &dyn Series,
    decomps: &[LevyDecomposition],
    target: Vec2f,
    stages: u32,
    scan_budget: u64,
) -> Result<AbsPlaneResult> {
    let fan = Fan::new(decomps);
    let directions: Vec<Direction> = fan.dirs.iter().map(|d| d.direction).collect();
    let open = half_circle_coverage(&directions, true);
    let closed = half_circle_coverage(&directions, false);
    if !open && !(closed && fan.len() >= 3) {
        return Err(Error::InsufficientCoverage(format!(
            "{} direction(s) leave a gap of at least π",
            fan.len()
        )));
    }

    let mut shift = IndexSelection::empty();
    let mut shift_sum = Vec2f::ZERO;
    let mut x = target;
    let in_reach = |x: Vec2f| {
        x.norm() == 0.0
            || fan.cone_of(x).is_some()
            || fan.ray_of(x).is_some_and(|i| fan.usable(fan.prev(i)) && fan.usable(i))
    };
    if !in_reach(x) {
        let gi = fan.flat_gap().ok_or_else(|| Error::InsufficientCoverage("no cone reaches the target".into()))?;
        // the other directions lie on the side opposite to the gap's bisector
        let n = -fan.dirs[gi].direction.unit().rotate(FRAC_PI_2);
        let margin = 0.25 * (1.0 + target.norm());
        let mut picked = Vec::new();
        let mut i = 0u64;
        while (x - shift_sum).dot(n) <= margin {
            i += 1;
            if i > scan_budget {
                return Err(Error::BudgetExceeded { what: "half plane shift", budget: scan_budget });
            }
            let v = series.term_f64(i)?;
            if v.dot(n) < 0.0 {
                shift_sum += v;
                picked.push(i);
            }
        }
        shift = IndexSelection::new(picked)?;
        x = target - shift_sum;
        if !in_reach(x) {
            return Err(Error::InsufficientCoverage("shifted target is still out of reach".into()));
        }
    }

    let after = shift.max().unwrap_or(0);
    let mut plans = Vec::new();
    let mut split = None;
    if x.norm() == 0.0 {
        // nothing left to achieve
    } else if let Some(i) = fan.cone_of(x) {
        let (du, dv) = (fan.dirs[i], fan.dirs[fan.next(i)]);
        plans.push(build_absolute_selection_after(series, du, dv, x, stages, scan_budget, after)?);
    } else {
        let i = fan.ray_of(x).expect("target is in reach");
        let (p, q) = (fan.prev(i), fan.next(i));
        let bisector = (fan.dirs[p].direction.unit() + fan.dirs[i].direction.unit()).scale(0.5);
        let bisector = bisector.scale(1.0 / bisector.norm());
        let second = |y: Vec2f| {
            in_positive_span(fan.dirs[i].direction.unit(), fan.dirs[q].direction.unit(), x - y)
                .ok()
                .flatten()
                .is_some()
        };
        let mut scale = 1.0;
        let mut y = None;
        for _ in 0..=SPLIT_HALVINGS {
            let cand = bisector.scale(0.5 * x.norm() * scale);
            if second(cand) {
                y = Some(cand);
                break;
            }
            scale /= 2.0;
        }
        let y = y.ok_or_else(|| Error::InsufficientCoverage("could not split a target on a ray".into()))?;
        let first = build_absolute_selection_after(series, fan.dirs[p], fan.dirs[i], y, stages, scan_budget, after)?;
        let after_first = first.selection()?.max().unwrap_or(after);
        let rest = build_absolute_selection_after(
            series,
            fan.dirs[i],
            fan.dirs[q],
            x - y,
            stages,
            scan_budget,
            after_first,
        )?;
        split = Some((y, x - y));
        plans.push(first);
        plans.push(rest);
    }

    let mut selection = shift.clone();
    for p in &plans {
        selection = selection.merge(&p.selection()?)?;
    }
    let sum = sum_terms(series, &selection)?;
    let error = (sum - target).norm();
    let bound: f64 = plans.iter().map(SelectionPlan::truncation_bound).sum();
    Ok(AbsPlaneResult {
        target,
        shift,
        shift_sum,
        split,
        plans,
        selection,
        sum,
        error,
        bound,
        within_bound: error < bound || (error == 0.0 && bound == 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, decomposition, SeriesId};
    use crate::exactnum::Vec2;

    const BUDGET: u64 = 5_000_000;

    fn c6_plan(x: Vec2f, t: u32) -> Result<SelectionPlan> {
        let s = catalog::get(SeriesId::C6);
        let (e, n) = (decomposition(SeriesId::C6, "E").unwrap(), decomposition(SeriesId::C6, "N").unwrap());
        build_absolute_selection(&s, &e, &n, x, t, BUDGET)
    }

    #[test]
    fn c_schedule_stays_in_its_intervals() {
        let c = c_schedule(1.0, 30);
        assert_eq!(c[0], 0.375);
        for t in 1..30 {
            assert!(c[t - 1] < 1.0 / 2f64.powi(t as i32));
            assert!(c[t - 1] / 2.0 < c[t] && c[t] < c[t - 1]);
        }
    }

    #[test]
    fn c6_plan_to_one_one() {
        let s = catalog::get(SeriesId::C6);
        let plan = c6_plan(Vec2::new(1.0, 1.0), 7).unwrap();
        assert!((plan.delta - 1.0).abs() < 1e-12);
        assert_eq!(plan.stages.len(), 7);
        let checks = check_plan(&plan, &s).unwrap();
        assert!(checks.pass, "{checks:#?}");
        let last = &checks.stages[6];
        assert!(last.residual < plan.stages[6].c && plan.stages[6].c < 1.0 / 128.0);
        let err = (plan.sum() - Vec2::new(1.0, 1.0)).norm();
        assert!(err < plan.stages[6].c + 2f64.sqrt() / 128.0);

        let tail = selection_tail_norm(&plan, &s).unwrap();
        assert!(tail.total.is_finite());
        assert!(tail.cos_alpha.abs() < 1e-12);
        assert!((tail.cos_bound - tail.sine_bound).abs() < 1e-9 * tail.sine_bound);
        assert!(tail.within_stagewise && tail.within_cos_bound, "{tail:#?}");
        assert_eq!(tail.cos_coefficient_violations, 0);
    }

    #[test]
    fn boundary_and_one_stage() {
        assert!(matches!(c6_plan(Vec2::new(1.0, 0.0), 3), Err(Error::ConeBoundary)));
        assert!(matches!(c6_plan(Vec2::new(-1.0, 1.0), 3), Err(Error::ConeBoundary)));
        let s = catalog::get(SeriesId::C6);
        let plan = c6_plan(Vec2::new(2.0, 1.0), 1).unwrap();
        assert_eq!(plan.stages[0].c, 3.0 / 8.0);
        assert!((plan.stages[0].y - Vec2::new(1.0, 0.5)).norm() < 3.0 / 8.0);
        let tail = selection_tail_norm(&plan, &s).unwrap();
        assert!(tail.first_stage <= tail.first_stage_bound);
        assert_eq!(tail.later_stages, 0.0);

        let empty = c6_plan(Vec2::new(2.0, 1.0), 0).unwrap();
        assert_eq!(selection_tail_norm(&empty, &s).unwrap().total, 0.0);
    }

    #[test]
    fn obtuse_cone_breaks_the_cosine_bound_only() {
        // C6 has Levy directions E and SW, 135 degrees apart
        let s = catalog::get(SeriesId::C6);
        let (e, sw) = (decomposition(SeriesId::C6, "E").unwrap(), decomposition(SeriesId::C6, "SW").unwrap());
        let plan = build_absolute_selection(&s, &e, &sw, Vec2::new(0.2, -0.5), 6, BUDGET).unwrap();
        assert!(check_plan(&plan, &s).unwrap().pass);
        let tail = selection_tail_norm(&plan, &s).unwrap();
        assert!(tail.cos_denominator > tail.sine_denominator);
        assert!(tail.within_sine_bound);
        assert_eq!(tail.sine_coefficient_violations, 0);
    }

    #[test]
    fn plane_targets_on_c5() {
        let s = catalog::get(SeriesId::C5);
        let d = catalog::decompositions(SeriesId::C5);
        let r = achieve_abs_plane(&s, &d, Vec2::new(0.3, -0.4), 8, BUDGET).unwrap();
        assert_eq!(r.plans.len(), 1);
        assert!(r.split.is_none() && r.shift.is_empty());
        assert!(r.within_bound, "{} vs {}", r.error, r.bound);
        assert!(r.error < 2f64.powi(-8) * 0.5 + r.plans[0].stages[7].c);

        let r = achieve_abs_plane(&s, &d, Vec2::new(1.0, 0.0), 6, BUDGET).unwrap();
        assert_eq!(r.plans.len(), 2);
        let (y, rest) = r.split.unwrap();
        assert!((y + rest - Vec2::new(1.0, 0.0)).norm() < 1e-15);
        let first = r.plans[0].selection().unwrap();
        assert!(strictly_after(&first, &r.plans[1].selection().unwrap()));
        assert!(r.within_bound);
    }

    #[test]
    fn three_directions_with_a_flat_gap_shift_first() {
        let s = catalog::get(SeriesId::C7);
        let d = catalog::decompositions(SeriesId::C7);
        let r = achieve_abs_plane(&s, &d, Vec2::new(-0.5, 0.3), 6, BUDGET).unwrap();
        assert!(!r.shift.is_empty());
        assert!(r.shift_sum.x < -0.5);
        assert!(strictly_after(&r.shift, &r.plans[0].selection().unwrap()));
        assert!(r.within_bound, "{} vs {}", r.error, r.bound);
    }

    #[test]
    fn two_opposite_directions_are_not_enough() {
        let s = catalog::get(SeriesId::C3);
        let d = catalog::decompositions(SeriesId::C3);
        assert!(matches!(
            achieve_abs_plane(&s, &d, Vec2::new(1.0, 1.0), 3, BUDGET),
            Err(Error::InsufficientCoverage(_))
        ));
    }
}
