//! Every series the library knows about, with term access and recorded facts.
//!
//! Terms are indexed from 1. Where the formula is rational the term is exact;
//! square roots and trigonometric terms are `f64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{Direction, Rat, Vec2, Vec2f, Vec2q};
use crate::extreme;
use crate::levy::LevyDecomposition;

/// A term in whichever flavor its formula supports.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Exact(Vec2q),
    Float(Vec2f),
}

impl Term {
    pub fn to_f64(&self) -> Vec2f {
        match self {
            Term::Exact(v) => v.to_f64(),
            Term::Float(v) => *v,
        }
    }

    pub fn as_exact(&self) -> Option<&Vec2q> {
        match self {
            Term::Exact(v) => Some(v),
            Term::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Term::Exact(_))
    }
}

/// Indexed planar series. Implementations must be deterministic.
pub trait Series: Send + Sync {
    fn name(&self) -> String;

    fn term(&self, n: u64) -> Result<Term>;

    /// Float view of [`Series::term`]; implementations override it when a direct
    /// float formula is cheaper than building the exact value.
    fn term_f64(&self, n: u64) -> Result<Vec2f> {
        Ok(self.term(n)?.to_f64())
    }

    /// The four-phase magnitude structure, when the series is built that way.
    fn reduction_structure(&self) -> Option<ReductionStructure> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeriesId {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    C8,
    C9,
    C10,
    C11,
}

impl SeriesId {
    pub const ALL: [SeriesId; 11] = [
        SeriesId::C1,
        SeriesId::C2,
        SeriesId::C3,
        SeriesId::C4,
        SeriesId::C5,
        SeriesId::C6,
        SeriesId::C7,
        SeriesId::C8,
        SeriesId::C9,
        SeriesId::C10,
        SeriesId::C11,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SeriesId::C1 => "C1",
            SeriesId::C2 => "C2",
            SeriesId::C3 => "C3",
            SeriesId::C4 => "C4",
            SeriesId::C5 => "C5",
            SeriesId::C6 => "C6",
            SeriesId::C7 => "C7",
            SeriesId::C8 => "C8",
            SeriesId::C9 => "C9",
            SeriesId::C10 => "C10",
            SeriesId::C11 => "C11",
        }
    }
}

impl fmt::Display for SeriesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeriesId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SeriesId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownSeries(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "directions", rename_all = "snake_case")]
pub enum LevySet {
    Finite(Vec<Direction>),
    WholeCircle,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumRange {
    Line,
    Plane,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRef {
    pub label: String,
    pub direction: Direction,
}

/// Magnitude sequences `(x_j)`, `(y_j)` arranged by the four-phase sign pattern
///
/// ```text
/// v(4m-3) = (-x(2m-1), -y(2m-1))    v(4m-2) = (-x(2m-1),  y(2m-1))
/// v(4m-1) = ( x(2m),    y(2m))      v(4m)   = ( x(2m),   -y(2m))
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionStructure {
    /// `x_j = 1/j`, `y_j = 1/sqrt(j)`.
    HarmonicSqrt,
    /// `x_j = 4^(-k²)`, `y_j = 2^(-k)` for `j` in `(n_{k-1}, n_k]`, `n_k = 4^(k²) + n_{k-1}`.
    PowerBlocks,
}

/// Slot of a term index within the four-phase pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseSlot {
    /// magnitude index j
    pub magnitude: u64,
    pub x_sign: i8,
    pub y_sign: i8,
}

impl PhaseSlot {
    pub fn of(n: u64) -> PhaseSlot {
        assert!(n >= 1);
        let m = n.div_ceil(4);
        match n % 4 {
            1 => PhaseSlot { magnitude: 2 * m - 1, x_sign: -1, y_sign: -1 },
            2 => PhaseSlot { magnitude: 2 * m - 1, x_sign: -1, y_sign: 1 },
            3 => PhaseSlot { magnitude: 2 * m, x_sign: 1, y_sign: 1 },
            _ => PhaseSlot { magnitude: 2 * m, x_sign: 1, y_sign: -1 },
        }
    }
}

impl ReductionStructure {
    /// Block of magnitude index `j` for [`ReductionStructure::PowerBlocks`]; `k >= 1`.
    pub fn power_block(j: u64) -> u32 {
        let mut end: u128 = 0;
        let mut k = 0u32;
        loop {
            k += 1;
            let len = 1u128.checked_shl(2 * k * k).unwrap_or(u128::MAX);
            end = end.saturating_add(len);
            if (j as u128) <= end {
                return k;
            }
        }
    }

    /// End of block `k` (`n_k`), saturating at `u128::MAX`.
    pub fn power_block_end(k: u32) -> u128 {
        (1..=k).fold(0u128, |acc, i| acc.saturating_add(1u128.checked_shl(2 * i * i).unwrap_or(u128::MAX)))
    }

    pub fn x_mag(&self, j: u64) -> f64 {
        match self {
            ReductionStructure::HarmonicSqrt => 1.0 / j as f64,
            ReductionStructure::PowerBlocks => {
                let k = Self::power_block(j) as i32;
                2f64.powi(-2 * k * k)
            }
        }
    }

    pub fn y_mag(&self, j: u64) -> f64 {
        match self {
            ReductionStructure::HarmonicSqrt => 1.0 / (j as f64).sqrt(),
            ReductionStructure::PowerBlocks => 2f64.powi(-(Self::power_block(j) as i32)),
        }
    }

    /// Exact magnitudes, when rational.
    pub fn exact_mags(&self, j: u64) -> Option<(Rat, Rat)> {
        match self {
            ReductionStructure::HarmonicSqrt => None,
            ReductionStructure::PowerBlocks => {
                let k = Self::power_block(j) as i64;
                Some((Rat::pow2(-2 * k * k), Rat::pow2(-k)))
            }
        }
    }

    pub fn term_f64(&self, n: u64) -> Vec2f {
        let s = PhaseSlot::of(n);
        Vec2::new(s.x_sign as f64 * self.x_mag(s.magnitude), s.y_sign as f64 * self.y_mag(s.magnitude))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub known_levy: LevySet,
    pub known_sum_range: SumRange,
    pub decompositions: Vec<DecompositionRef>,
    pub reduction_structured: Option<ReductionStructure>,
    pub source: String,
    pub notes: Vec<String>,
}

/// A catalog entry: id plus recorded metadata. Implements [`Series`].
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesDef {
    pub id: SeriesId,
    pub meta: SeriesMeta,
}

fn alt(n: u64) -> i64 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn q(p: i64, d: u64) -> Rat {
    Rat::new(p, d)
}

fn dir(x: f64, y: f64) -> Direction {
    Direction::from_vector(Vec2::new(x, y)).expect("nonzero")
}

fn dref(label: &str, x: f64, y: f64) -> DecompositionRef {
    DecompositionRef { label: label.to_string(), direction: dir(x, y) }
}

fn meta_for(id: SeriesId) -> SeriesMeta {
    use SeriesId::*;
    let axes = || vec![dir(0.0, -1.0), dir(-1.0, 0.0), dir(0.0, 1.0), dir(1.0, 0.0)];
    let vertical = || vec![dir(0.0, 1.0), dir(0.0, -1.0)];
    let (known_levy, range, decomps, reduction, source, notes): (_, _, Vec<DecompositionRef>, _, &str, Vec<&str>) =
        match id {
            C1 => (
                LevySet::Finite(vec![dir(1.0, 0.0), dir(-1.0, 0.0)]),
                SumRange::Line,
                vec![dref("E", 1.0, 0.0), dref("W", -1.0, 0.0)],
                None,
                "((-1)^n/n, 0): one-dimensional sum range, exactly two Levy vectors",
                vec![],
            ),
            C2 => (
                LevySet::Finite(vec![dir(1.0, 1.0), dir(-1.0, -1.0)]),
                SumRange::Line,
                vec![dref("NE", 1.0, 1.0), dref("SW", -1.0, -1.0)],
                None,
                "((-1)^n/n, (-1)^n/n): one-dimensional sum range, exactly two Levy vectors",
                vec![],
            ),
            C3 => (
                LevySet::Finite(vertical()),
                SumRange::Plane,
                vec![dref("N", 0.0, 1.0), dref("S", 0.0, -1.0)],
                None,
                "((-1)^n/n, (-1)^n/sqrt(n)): sum range is the plane, only two Levy vectors",
                vec![],
            ),
            C4 => (
                LevySet::WholeCircle,
                SumRange::Plane,
                vec![],
                None,
                "z^n/n with |z| = 1 not a root of unity: Levy set is the whole unit circle",
                vec!["instantiated with z = e^i (theta = 1 radian)"],
            ),
            C5 => (
                LevySet::Finite(axes()),
                SumRange::Plane,
                vec![dref("N", 0.0, 1.0), dref("S", 0.0, -1.0), dref("E", 1.0, 0.0), dref("W", -1.0, 0.0)],
                None,
                "axis-interleaved alternating harmonic terms: Levy set is the four axis directions",
                vec![],
            ),
            C6 => (
                LevySet::Finite(vec![dir(-1.0, -1.0), dir(1.0, 0.0), dir(0.0, 1.0)]),
                SumRange::Plane,
                vec![dref("SW", -1.0, -1.0), dref("E", 1.0, 0.0), dref("N", 0.0, 1.0)],
                None,
                "three harmonic families: Levy set {(-1,-1), (1,0), (0,1)}",
                vec!["the (-1,-1) family gives direction (-1,-1)/sqrt(2); stored normalised"],
            ),
            C7 => (
                LevySet::Finite(vec![dir(0.0, -1.0), dir(1.0, 0.0), dir(0.0, 1.0)]),
                SumRange::Plane,
                vec![dref("S", 0.0, -1.0), dref("E", 1.0, 0.0), dref("N", 0.0, 1.0)],
                None,
                "Levy set {(0,-1), (1,0), (0,1)}, disjoint from the open half plane x < 0",
                vec![],
            ),
            C8 => (
                LevySet::Finite(vertical()),
                SumRange::Plane,
                vec![dref("N", 0.0, 1.0), dref("S", 0.0, -1.0)],
                Some(ReductionStructure::HarmonicSqrt),
                "four-phase arrangement of (1/j, 1/sqrt(j)): two Levy vectors, achievement set is the plane",
                vec![],
            ),
            C9 => (
                LevySet::Finite(vertical()),
                SumRange::Line,
                vec![dref("N", 0.0, 1.0), dref("S", 0.0, -1.0)],
                None,
                "(1/2^n, (-1)^n/n): (1, -ln 2) is a subsum but not an absolutely convergent one",
                vec!["achievement set lies in [0,1] x R, so the sum range is not the plane"],
            ),
            C10 => (
                LevySet::Finite(vertical()),
                SumRange::Plane,
                vec![],
                Some(ReductionStructure::PowerBlocks),
                "four-phase arrangement of power blocks: achievement set is the plane, absolute one misses x = 1/3",
                vec![],
            ),
            C11 => (
                LevySet::Finite(vertical()),
                SumRange::Plane,
                vec![],
                None,
                "((-1)^i x_i, (-1)^i y_i) extreme construction: vertical sections of the achievement set have at most one point",
                vec!["terms are enumerable only for the first two blocks (indices 1..=257)"],
            ),
        };
    SeriesMeta {
        known_levy,
        known_sum_range: range,
        decompositions: decomps,
        reduction_structured: reduction,
        source: source.to_string(),
        notes: notes.into_iter().map(String::from).collect(),
    }
}

pub fn get(id: SeriesId) -> SeriesDef {
    SeriesDef { id, meta: meta_for(id) }
}

pub fn lookup(name: &str) -> Result<SeriesDef> {
    Ok(get(name.parse()?))
}

pub fn all() -> Vec<SeriesDef> {
    SeriesId::ALL.iter().map(|&id| get(id)).collect()
}

pub fn get_term(id: SeriesId, n: u64) -> Result<Term> {
    get(id).term(n)
}

fn check_index(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("term indices start at 1".into()));
    }
    Ok(())
}

impl Series for SeriesDef {
    fn name(&self) -> String {
        self.id.to_string()
    }

    fn term(&self, n: u64) -> Result<Term> {
        use SeriesId::*;
        check_index(n)?;
        let s = alt(n);
        Ok(match self.id {
            C1 => Term::Exact(Vec2::new(q(s, n), Rat::zero())),
            C2 => Term::Exact(Vec2::new(q(s, n), q(s, n))),
            C5 => {
                let m = n.div_ceil(2);
                let v = q(alt(m), m);
                Term::Exact(if n % 2 == 1 { Vec2::new(Rat::zero(), v) } else { Vec2::new(v, Rat::zero()) })
            }
            C6 => Term::Exact(match n % 3 {
                1 => Vec2::new(q(-1, n), q(-1, n)),
                2 => Vec2::new(q(1, n), Rat::zero()),
                _ => Vec2::new(Rat::zero(), q(1, n)),
            }),
            C9 => Term::Exact(Vec2::new(Rat::pow2(-(n as i64)), q(s, n))),
            C10 => {
                let slot = PhaseSlot::of(n);
                let (xm, ym) = ReductionStructure::PowerBlocks.exact_mags(slot.magnitude).expect("rational");
                Term::Exact(Vec2::new(xm * Rat::from(slot.x_sign as i64), ym * Rat::from(slot.y_sign as i64)))
            }
            C11 => Term::Exact(extreme::full_schedule_series().signed_term(n)?),
            C3 | C4 | C7 | C8 => Term::Float(self.term_f64(n)?),
        })
    }

    fn term_f64(&self, n: u64) -> Result<Vec2f> {
        use SeriesId::*;
        check_index(n)?;
        let s = alt(n) as f64;
        let nf = n as f64;
        Ok(match self.id {
            C1 => Vec2::new(s / nf, 0.0),
            C2 => Vec2::new(s / nf, s / nf),
            C3 => Vec2::new(s / nf, s * (1.0 / nf).sqrt()),
            C4 => Vec2::new(nf.cos() / nf, nf.sin() / nf),
            C5 => {
                let m = n.div_ceil(2);
                let v = alt(m) as f64 / m as f64;
                if n % 2 == 1 {
                    Vec2::new(0.0, v)
                } else {
                    Vec2::new(v, 0.0)
                }
            }
            C6 => match n % 3 {
                1 => Vec2::new(-1.0 / nf, -1.0 / nf),
                2 => Vec2::new(1.0 / nf, 0.0),
                _ => Vec2::new(0.0, 1.0 / nf),
            },
            C7 => match n % 3 {
                1 => Vec2::new(-1.0 / nf, -(1.0 / nf).sqrt()),
                2 => Vec2::new(1.0 / nf, 0.0),
                _ => Vec2::new(0.0, (1.0 / nf).sqrt()),
            },
            C8 => ReductionStructure::HarmonicSqrt.term_f64(n),
            C9 => Vec2::new(0.5f64.powi(n.min(2000) as i32), s / nf),
            C10 => ReductionStructure::PowerBlocks.term_f64(n),
            C11 => self.term(n)?.to_f64(),
        })
    }

    fn reduction_structure(&self) -> Option<ReductionStructure> {
        self.meta.reduction_structured
    }
}

/// Exact when every term is exact, float otherwise.
pub fn partial_sum(series: &dyn Series, n: u64) -> Result<Term> {
    let mut exact = Some(Vec2q::zero());
    let mut float = Vec2f::ZERO;
    for i in 1..=n {
        match series.term(i)? {
            Term::Exact(v) => {
                if let Some(acc) = exact.as_mut() {
                    *acc += &v;
                }
                float += v.to_f64();
            }
            Term::Float(v) => {
                exact = None;
                float += v;
            }
        }
    }
    Ok(match exact {
        Some(v) => Term::Exact(v),
        None => Term::Float(float),
    })
}

/// Float partial sum through [`Series::term_f64`], suitable for long prefixes.
pub fn partial_sum_f64(series: &dyn Series, n: u64) -> Result<Vec2f> {
    let mut acc = Vec2f::ZERO;
    for i in 1..=n {
        acc += series.term_f64(i)?;
    }
    Ok(acc)
}

/// Float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV rows `n,x,y` for indices `from..=to`; exact values as `p/q`.
pub fn dump_terms_csv(series: &dyn Series, from: u64, to: u64) -> Result<String> {
    let mut out = String::from("n,x,y\n");
    for n in from..=to {
        match series.term(n)? {
            Term::Exact(v) => out.push_str(&format!("{n},{},{}\n", v.x, v.y)),
            Term::Float(v) => out.push_str(&format!("{n},{},{}\n", fmt_f64(v.x), fmt_f64(v.y))),
        }
    }
    Ok(out)
}

/// Concrete decomposition `term(k_n) = α_n u + w_n` for a catalog entry.
pub fn decomposition(id: SeriesId, label: &str) -> Result<LevyDecomposition> {
    use SeriesId::*;
    let unknown = || Error::Precondition(format!("series {id} has no decomposition labelled {label:?}"));
    let axis = |x: f64, y: f64| dir(x, y);
    let zero = |_n: u64| Vec2f::ZERO;
    let d = match (id, label) {
        (C1, "E") => LevyDecomposition::new(label, axis(1.0, 0.0), |n| 2 * n, |n| 1.0 / (2 * n) as f64, zero),
        (C1, "W") => LevyDecomposition::new(label, axis(-1.0, 0.0), |n| 2 * n - 1, |n| 1.0 / (2 * n - 1) as f64, zero),
        (C2, "NE") => LevyDecomposition::new(label, axis(1.0, 1.0), |n| 2 * n, |n| 2f64.sqrt() / (2 * n) as f64, zero),
        (C2, "SW") => {
            LevyDecomposition::new(label, axis(-1.0, -1.0), |n| 2 * n - 1, |n| 2f64.sqrt() / (2 * n - 1) as f64, zero)
        }
        // Sparse (square) subsequences keep the horizontal remainders summable.
        (C3, "N") => LevyDecomposition::new(
            label,
            axis(0.0, 1.0),
            |n| 4 * n * n,
            |n| 1.0 / (2 * n) as f64,
            |n| Vec2::new(1.0 / (4 * n * n) as f64, 0.0),
        ),
        (C3, "S") => LevyDecomposition::new(
            label,
            axis(0.0, -1.0),
            |n| (2 * n - 1) * (2 * n - 1),
            |n| 1.0 / (2 * n - 1) as f64,
            |n| Vec2::new(-1.0 / ((2 * n - 1) * (2 * n - 1)) as f64, 0.0),
        ),
        (C5, "N") => LevyDecomposition::new(label, axis(0.0, 1.0), |n| 4 * n - 1, |n| 1.0 / (2 * n) as f64, zero),
        (C5, "S") => LevyDecomposition::new(label, axis(0.0, -1.0), |n| 4 * n - 3, |n| 1.0 / (2 * n - 1) as f64, zero),
        (C5, "E") => LevyDecomposition::new(label, axis(1.0, 0.0), |n| 4 * n, |n| 1.0 / (2 * n) as f64, zero),
        (C5, "W") => LevyDecomposition::new(label, axis(-1.0, 0.0), |n| 4 * n - 2, |n| 1.0 / (2 * n - 1) as f64, zero),
        (C6, "SW") => {
            LevyDecomposition::new(label, axis(-1.0, -1.0), |n| 3 * n - 2, |n| 2f64.sqrt() / (3 * n - 2) as f64, zero)
        }
        (C6, "E") => LevyDecomposition::new(label, axis(1.0, 0.0), |n| 3 * n - 1, |n| 1.0 / (3 * n - 1) as f64, zero),
        (C6, "N") => LevyDecomposition::new(label, axis(0.0, 1.0), |n| 3 * n, |n| 1.0 / (3 * n) as f64, zero),
        (C7, "E") => LevyDecomposition::new(label, axis(1.0, 0.0), |n| 3 * n - 1, |n| 1.0 / (3 * n - 1) as f64, zero),
        (C7, "N") => LevyDecomposition::new(label, axis(0.0, 1.0), |n| 3 * n, |n| 1.0 / ((3 * n) as f64).sqrt(), zero),
        (C7, "S") => LevyDecomposition::new(
            label,
            axis(0.0, -1.0),
            |n| 3 * n * n - 2,
            |n| 1.0 / ((3 * n * n - 2) as f64).sqrt(),
            |n| Vec2::new(-1.0 / (3 * n * n - 2) as f64, 0.0),
        ),
        (C8, "N") => LevyDecomposition::new(
            label,
            axis(0.0, 1.0),
            |n| 8 * n * n - 1,
            |n| 1.0 / (2 * n) as f64,
            |n| Vec2::new(1.0 / (4 * n * n) as f64, 0.0),
        ),
        (C8, "S") => LevyDecomposition::new(
            label,
            axis(0.0, -1.0),
            |n| 8 * n * n,
            |n| 1.0 / (2 * n) as f64,
            |n| Vec2::new(1.0 / (4 * n * n) as f64, 0.0),
        ),
        (C9, "N") => LevyDecomposition::new(
            label,
            axis(0.0, 1.0),
            |n| 2 * n,
            |n| 1.0 / (2 * n) as f64,
            |n| Vec2::new(0.5f64.powi((2 * n).min(2000) as i32), 0.0),
        ),
        (C9, "S") => LevyDecomposition::new(
            label,
            axis(0.0, -1.0),
            |n| 2 * n - 1,
            |n| 1.0 / (2 * n - 1) as f64,
            |n| Vec2::new(0.5f64.powi((2 * n - 1).min(2000) as i32), 0.0),
        ),
        _ => return Err(unknown()),
    };
    Ok(d)
}

/// All decompositions recorded for a catalog entry, in metadata order.
pub fn decompositions(id: SeriesId) -> Vec<LevyDecomposition> {
    get(id)
        .meta
        .decompositions
        .iter()
        .map(|r| decomposition(id, &r.label).expect("metadata lists only implemented decompositions"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(id: SeriesId, n: u64) -> Vec2q {
        get_term(id, n).unwrap().as_exact().unwrap().clone()
    }

    #[test]
    fn term_examples() {
        assert_eq!(exact(SeriesId::C1, 1), Vec2::new(Rat::from(-1), Rat::zero()));
        assert_eq!(exact(SeriesId::C5, 2), Vec2::new(Rat::from(-1), Rat::zero()));
        assert_eq!(exact(SeriesId::C10, 1), Vec2::new(Rat::new(-1, 4), Rat::new(-1, 2)));
        assert!(get_term(SeriesId::C3, 0).is_err());
        assert!(matches!("C12".parse::<SeriesId>(), Err(Error::UnknownSeries(_))));
        assert_eq!("c8".parse::<SeriesId>().unwrap(), SeriesId::C8);
    }

    #[test]
    fn c11_refuses_beyond_second_block() {
        assert!(get_term(SeriesId::C11, 257).is_ok());
        assert!(matches!(get_term(SeriesId::C11, 258), Err(Error::NonEnumerableBlock { index: 258 })));
    }

    #[test]
    fn partial_sum_examples() {
        let c1 = get(SeriesId::C1);
        assert_eq!(partial_sum(&c1, 2).unwrap(), Term::Exact(Vec2::new(Rat::new(-1, 2), Rat::zero())));

        // Direct summation over the interleaving definition:
        // C5 terms: (0,-1), (-1,0), (0,1/2), (1/2,0)
        let c5 = get(SeriesId::C5);
        let direct = |n: u64| {
            let mut acc = Vec2q::zero();
            for i in 1..=n {
                let m = i.div_ceil(2) as i64;
                let sign = if m % 2 == 0 { 1 } else { -1 };
                let v = Rat::new(sign, m);
                acc += &if i % 2 == 1 { Vec2::new(Rat::zero(), v) } else { Vec2::new(v, Rat::zero()) };
            }
            acc
        };
        assert_eq!(direct(2), Vec2::new(Rat::from(-1), Rat::from(-1)));
        assert_eq!(direct(4), Vec2::new(Rat::new(-1, 2), Rat::new(-1, 2)));
        for n in [2, 4, 7, 30] {
            assert_eq!(partial_sum(&c5, n).unwrap(), Term::Exact(direct(n)));
        }
    }

    #[test]
    fn exact_and_float_terms_agree() {
        for def in all() {
            let upto = if def.id == SeriesId::C11 { 257 } else { 600 };
            for n in (1..=upto).step_by(7) {
                let t = def.term(n).unwrap().to_f64();
                let f = def.term_f64(n).unwrap();
                assert!((t - f).norm() <= 1e-12, "{} n={n}: {t:?} vs {f:?}", def.id);
            }
        }
    }

    #[test]
    fn c9_partial_sum_approaches_one_minus_ln2() {
        let c9 = get(SeriesId::C9);
        let mut prev_x = 0.0;
        let target = Vec2::new(1.0, -std::f64::consts::LN_2);
        for n in 1..=1000u64 {
            let s = partial_sum_f64(&c9, n).unwrap();
            assert!(s.x >= prev_x && s.x <= 1.0);
            prev_x = s.x;
            if n == 1000 {
                assert!((s - target).norm() <= 2.0 / 1000.0);
            }
        }
    }

    #[test]
    fn cauchy_behaviour_of_convergent_entries() {
        for id in [SeriesId::C1, SeriesId::C2, SeriesId::C3, SeriesId::C8, SeriesId::C9] {
            let s = get(id);
            let mut prev = f64::INFINITY;
            for j in 6..=16 {
                let n = 1u64 << j;
                let gap = (partial_sum_f64(&s, 2 * n).unwrap() - partial_sum_f64(&s, n).unwrap()).norm();
                assert!(gap < prev, "{id}: gap {gap} at n={n} not below {prev}");
                prev = gap;
            }
        }
    }

    #[test]
    fn c10_block_magnitudes_are_exact() {
        // block 1: j in 1..=4, block 2: j in 5..=260
        for n in 1..=520u64 {
            let v = exact(SeriesId::C10, n);
            let k = ReductionStructure::power_block(PhaseSlot::of(n).magnitude) as i64;
            assert_eq!(v.x.abs(), Rat::pow2(-2 * k * k));
            assert_eq!(v.y.abs(), Rat::pow2(-k));
        }
        assert_eq!(ReductionStructure::power_block(4), 1);
        assert_eq!(ReductionStructure::power_block(5), 2);
        assert_eq!(ReductionStructure::power_block(260), 2);
        assert_eq!(ReductionStructure::power_block(261), 3);
        assert_eq!(ReductionStructure::power_block_end(3), 262_404);
    }

    #[test]
    fn four_phase_slots() {
        let s: Vec<_> = (1..=8).map(PhaseSlot::of).map(|p| (p.magnitude, p.x_sign, p.y_sign)).collect();
        assert_eq!(
            s,
            vec![(1, -1, -1), (1, -1, 1), (2, 1, 1), (2, 1, -1), (3, -1, -1), (3, -1, 1), (4, 1, 1), (4, 1, -1)]
        );
        // C8 is the four-phase arrangement of (1/j, 1/sqrt j)
        let c8 = get(SeriesId::C8);
        for n in 1..=40u64 {
            let m = n.div_ceil(2) as f64;
            let sm = if n.div_ceil(2) % 2 == 0 { 1.0 } else { -1.0 };
            let expect = if n % 2 == 1 { Vec2::new(sm / m, sm / m.sqrt()) } else { Vec2::new(sm / m, -sm / m.sqrt()) };
            assert!((c8.term_f64(n).unwrap() - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn metadata_round_trips_through_json() {
        for def in all() {
            let s = serde_json::to_string(&def.meta).unwrap();
            let back: SeriesMeta = serde_json::from_str(&s).unwrap();
            assert_eq!(back, def.meta, "{}", def.id);
        }
    }

    #[test]
    fn every_listed_decomposition_exists() {
        for def in all() {
            for r in &def.meta.decompositions {
                let d = decomposition(def.id, &r.label).unwrap();
                assert_eq!(d.direction, r.direction);
            }
        }
    }

    #[test]
    fn csv_dump_formats() {
        let c1 = get(SeriesId::C1);
        assert_eq!(dump_terms_csv(&c1, 1, 2).unwrap(), "n,x,y\n1,-1/1,0/1\n2,1/2,0/1\n");
        let c3 = get(SeriesId::C3);
        let line = dump_terms_csv(&c3, 2, 2).unwrap();
        assert_eq!(line, "n,x,y\n2,5.0000000000000000e-1,7.0710678118654757e-1\n");
    }
}
