//! Levy-vector estimation from finite prefixes, decomposition checks and
//! half-circle coverage.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Series;
use crate::error::{Error, Result};
use crate::exactnum::{sector_contains, Direction, Sector, Vec2f};

/// Estimator defaults, calibrated on the catalog.
pub mod defaults {
    pub const HORIZON: u64 = 100_000;
    pub const EPSILON: f64 = 0.1;
    pub const GRID: usize = 360;
    pub const THRESHOLD: f64 = 2.0;
}

/// Slack for comparing circular gaps against π.
const GAP_TOL: f64 = 1e-9;

type IndexFn = dyn Fn(u64) -> u64 + Send + Sync;
type AlphaFn = dyn Fn(u64) -> f64 + Send + Sync;
type RemainderFn = dyn Fn(u64) -> Vec2f + Send + Sync;

/// A subsequence `term(k_n) = α_n·u + w_n`, all three given as generators over `n >= 1`.
#[derive(Clone)]
pub struct LevyDecomposition {
    pub label: String,
    pub direction: Direction,
    index: Arc<IndexFn>,
    alpha: Arc<AlphaFn>,
    remainder: Arc<RemainderFn>,
}

impl LevyDecomposition {
    pub fn new(
        label: &str,
        direction: Direction,
        index: impl Fn(u64) -> u64 + Send + Sync + 'static,
        alpha: impl Fn(u64) -> f64 + Send + Sync + 'static,
        remainder: impl Fn(u64) -> Vec2f + Send + Sync + 'static,
    ) -> Self {
        LevyDecomposition {
            label: label.to_string(),
            direction,
            index: Arc::new(index),
            alpha: Arc::new(alpha),
            remainder: Arc::new(remainder),
        }
    }

    pub fn index(&self, n: u64) -> u64 {
        (self.index)(n)
    }

    pub fn alpha(&self, n: u64) -> f64 {
        (self.alpha)(n)
    }

    pub fn remainder(&self, n: u64) -> Vec2f {
        (self.remainder)(n)
    }

    /// Same generators reported under another direction; used to build negative controls.
    pub fn with_direction(&self, direction: Direction) -> Self {
        LevyDecomposition { direction, ..self.clone() }
    }
}

impl fmt::Debug for LevyDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevyDecomposition")
            .field("label", &self.label)
            .field("direction", &self.direction)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorMassProfile {
    pub direction: Direction,
    pub epsilon: f64,
    /// `(M, Σ‖v_n‖ over n <= M inside the sector)`
    pub checkpoints: Vec<(u64, f64)>,
}

fn check_range(from: u64, to: u64) -> Result<()> {
    if from == 0 || from > to {
        return Err(Error::Precondition(format!("index range [{from}, {to}] must satisfy 1 <= from <= to")));
    }
    Ok(())
}

/// Σ‖term(n)‖ over `n` in `[from, to]` whose term lies in the sector.
pub fn sector_mass(series: &dyn Series, direction: Direction, epsilon: f64, from: u64, to: u64) -> Result<f64> {
    check_range(from, to)?;
    let sector = Sector::new(direction, epsilon)?;
    let mut mass = 0.0;
    for n in from..=to {
        let v = series.term_f64(n)?;
        if sector_contains(&sector, v) {
            mass += v.norm();
        }
    }
    Ok(mass)
}

/// Cumulative sector mass at each checkpoint (sorted ascending).
pub fn sector_mass_profile(
    series: &dyn Series,
    direction: Direction,
    epsilon: f64,
    checkpoints: &[u64],
) -> Result<SectorMassProfile> {
    let sector = Sector::new(direction, epsilon)?;
    let mut points: Vec<u64> = checkpoints.to_vec();
    points.sort_unstable();
    points.dedup();
    let mut out = Vec::with_capacity(points.len());
    let mut mass = 0.0;
    let mut n = 0u64;
    for &m in &points {
        while n < m {
            n += 1;
            let v = series.term_f64(n)?;
            if sector_contains(&sector, v) {
                mass += v.norm();
            }
        }
        out.push((m, mass));
    }
    Ok(SectorMassProfile { direction, epsilon, checkpoints: out })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    #[serde(rename = "M")]
    pub horizon: u64,
    pub epsilon: f64,
    pub grid: usize,
    pub threshold: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams {
            horizon: defaults::HORIZON,
            epsilon: defaults::EPSILON,
            grid: defaults::GRID,
            threshold: defaults::THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub angle_deg: f64,
    /// Largest tail mass among the cluster's grid directions.
    pub mass: f64,
    /// Number of flagged grid directions merged into the cluster.
    pub width: usize,
}

impl Cluster {
    pub fn direction(&self) -> Direction {
        Direction::from_degrees(self.angle_deg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyEstimate {
    pub series: String,
    #[serde(flatten)]
    pub params: EstimatorParams,
    pub clusters: Vec<Cluster>,
}

impl LevyEstimate {
    pub fn directions(&self) -> Vec<Direction> {
        self.clusters.iter().map(Cluster::direction).collect()
    }
}

/// Tail sector mass over `[⌈√M⌉, M]` for each of the `K` grid directions.
pub fn grid_tail_masses(series: &dyn Series, params: &EstimatorParams) -> Result<Vec<f64>> {
    let from = (params.horizon as f64).sqrt().ceil() as u64;
    let terms: Vec<Vec2f> = (from..=params.horizon).map(|n| series.term_f64(n)).collect::<Result<_>>()?;
    let norms: Vec<f64> = terms.iter().map(|v| v.norm()).collect();
    let k = params.grid;
    let eps = params.epsilon;
    Ok((0..k)
        .into_par_iter()
        .map(|j| {
            let u = Direction::from_angle(TAU * j as f64 / k as f64).unit();
            let mut mass = 0.0;
            for (v, &r) in terms.iter().zip(&norms) {
                if u.dot(*v) >= (1.0 - eps) * r {
                    mass += r;
                }
            }
            mass
        })
        .collect())
}

/// Merges circularly adjacent flagged grid directions; centroid is the mass-weighted mean angle.
pub fn cluster_grid(masses: &[f64], threshold: f64) -> Vec<Cluster> {
    let k = masses.len();
    let flagged: Vec<bool> = masses.iter().map(|&m| m >= threshold).collect();
    let step = TAU / k as f64;
    if flagged.iter().all(|&f| f) {
        let peak = masses.iter().cloned().fold(0.0, f64::max);
        return vec![Cluster { angle_deg: 0.0, mass: peak, width: k }];
    }
    // start scanning right after an unflagged slot so no run wraps across the start
    let start = (0..k).find(|&j| !flagged[j]).map(|j| j + 1).unwrap_or(0);
    let mut clusters = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    for off in 0..=k {
        let j = (start + off) % k;
        if off < k && flagged[j] {
            run.push(start + off);
            continue;
        }
        if !run.is_empty() {
            let total: f64 = run.iter().map(|&i| masses[i % k]).sum();
            let mean = run.iter().map(|&i| masses[i % k] * i as f64 * step).sum::<f64>() / total;
            let peak = run.iter().map(|&i| masses[i % k]).fold(0.0, f64::max);
            let angle = Direction::from_angle(mean).degrees();
            clusters.push(Cluster { angle_deg: angle, mass: peak, width: run.len() });
            run.clear();
        }
    }
    clusters.sort_by(|a, b| a.angle_deg.total_cmp(&b.angle_deg));
    clusters
}

fn check_params(p: &EstimatorParams) -> Result<()> {
    if p.horizon < 100 || p.grid < 8 || !(p.threshold > 0.0) {
        return Err(Error::Precondition("estimator needs M >= 100, K >= 8 and threshold > 0".into()));
    }
    Sector::new(Direction::from_angle(0.0), p.epsilon)?;
    Ok(())
}

/// Flags grid directions with tail sector mass at least the threshold and merges them.
/// An empty result means no divergence was detected at this horizon.
pub fn estimate_levy_directions(series: &dyn Series, params: &EstimatorParams) -> Result<LevyEstimate> {
    check_params(params)?;
    let masses = grid_tail_masses(series, params)?;
    Ok(LevyEstimate { series: series.name(), params: *params, clusters: cluster_grid(&masses, params.threshold) })
}

/// Matches estimated clusters against known directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyMatch {
    /// For each known direction, the angular distance (degrees) to the nearest cluster.
    pub known_to_cluster_deg: Vec<f64>,
    /// For each cluster, the angular distance (degrees) to the nearest known direction.
    pub cluster_to_known_deg: Vec<f64>,
    pub pass: bool,
}

pub fn match_directions(known: &[Direction], found: &[Direction], match_deg: f64, spurious_deg: f64) -> LevyMatch {
    let nearest = |d: &Direction, set: &[Direction]| {
        set.iter().map(|o| d.angular_distance(o).to_degrees()).fold(f64::INFINITY, f64::min)
    };
    let k2c: Vec<f64> = known.iter().map(|d| nearest(d, found)).collect();
    let c2k: Vec<f64> = found.iter().map(|d| nearest(d, known)).collect();
    let pass = k2c.iter().all(|&a| a <= match_deg) && c2k.iter().all(|&a| a <= spurious_deg);
    LevyMatch { known_to_cluster_deg: k2c, cluster_to_known_deg: c2k, pass }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub label: String,
    pub direction: Direction,
    pub count: u64,
    pub max_residual: f64,
    pub alpha_partial: f64,
    pub remainder_partial: f64,
    pub remainder_budget: f64,
    pub min_alpha: f64,
    pub pass: bool,
}

/// Checks `term(k_n) = α_n u + w_n` for `n <= count`. Only partial sums of α are
/// reported; divergence is never decided.
pub fn verify_decomposition(
    series: &dyn Series,
    decomp: &LevyDecomposition,
    count: u64,
    remainder_budget: f64,
) -> Result<DecompositionReport> {
    let u = decomp.direction.unit();
    let mut prev = 0u64;
    let mut max_residual: f64 = 0.0;
    let mut alpha_partial = 0.0;
    let mut remainder_partial = 0.0;
    let mut min_alpha = f64::INFINITY;
    for n in 1..=count {
        let k = decomp.index(n);
        if k <= prev {
            return Err(Error::IndexNotIncreasing { position: n });
        }
        prev = k;
        let a = decomp.alpha(n);
        let w = decomp.remainder(n);
        let r = (series.term_f64(k)? - u.scale(a) - w).norm();
        max_residual = max_residual.max(r);
        alpha_partial += a;
        remainder_partial += w.norm();
        min_alpha = min_alpha.min(a);
    }
    let pass = max_residual < 1e-9 && remainder_partial <= remainder_budget && min_alpha > 0.0;
    Ok(DecompositionReport {
        label: decomp.label.clone(),
        direction: decomp.direction,
        count,
        max_residual,
        alpha_partial,
        remainder_partial,
        remainder_budget,
        min_alpha,
        pass,
    })
}

/// Largest circular gap between consecutive directions, in radians.
pub fn max_circular_gap(directions: &[Direction]) -> f64 {
    if directions.is_empty() {
        return TAU;
    }
    let mut a: Vec<f64> = directions.iter().map(|d| d.angle()).collect();
    a.sort_by(f64::total_cmp);
    let mut gap = a[0] + TAU - a[a.len() - 1];
    for w in a.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    gap
}

/// Closed coverage: every closed half circle holds a direction (gap <= π).
/// Open coverage: every open half circle holds one (gap < π).
pub fn half_circle_coverage(directions: &[Direction], open: bool) -> bool {
    let g = max_circular_gap(directions);
    if open {
        g < PI - GAP_TOL
    } else {
        g <= PI + GAP_TOL
    }
}
