use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::Series;
use crate::error::{Error, Result};
use crate::exactnum::{Rat, Vec2, Vec2f, Vec2q};

pub const MAX_BRUTE_TERMS: u32 = 24;

/// One subsum pattern. Character `i` of `pattern` is term `i+1`; bit `i` of `mask` likewise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsumHit {
    pub mask: u32,
    pub pattern: String,
    pub sum: Vec2f,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exact_sum: Option<Vec2q>,
    pub distance: f64,
}

pub fn pattern_string(mask: u32, n: u32) -> String {
    (0..n).map(|i| if mask >> i & 1 == 1 { '1' } else { '0' }).collect()
}

fn check_size(n: u32) -> Result<()> {
    if n > MAX_BRUTE_TERMS {
        return Err(Error::TooLarge { size: n as u64, max: MAX_BRUTE_TERMS as u64 });
    }
    Ok(())
}

/// Sums of every pattern over the first `n` terms, from half tables of low and high bits.
fn all_float_sums(terms: &[Vec2f]) -> Vec<Vec2f> {
    let n = terms.len();
    let lo_bits = n / 2;
    let table = |ts: &[Vec2f]| {
        let mut out = vec![Vec2f::ZERO; 1 << ts.len()];
        for (b, t) in ts.iter().enumerate() {
            let step = 1 << b;
            for m in 0..step {
                out[m | step] = out[m] + *t;
            }
        }
        out
    };
    let lo = table(&terms[..lo_bits]);
    let hi = table(&terms[lo_bits..]);
    (0..1usize << n).into_par_iter().map(|m| lo[m & ((1 << lo_bits) - 1)] + hi[m >> lo_bits]).collect()
}

fn exact_terms(series: &dyn Series, n: u32) -> Result<Option<Vec<Vec2q>>> {
    let mut out = Vec::with_capacity(n as usize);
    for i in 1..=n as u64 {
        match series.term(i)?.as_exact() {
            Some(v) => out.push(v.clone()),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn exact_sum(terms: &[Vec2q], mask: u32) -> Vec2q {
    let mut s = Vec2q::zero();
    for (i, t) in terms.iter().enumerate() {
        if mask >> i & 1 == 1 {
            s = &s + t;
        }
    }
    s
}

/// Every 0/1 pattern on the first `n` terms whose subsum lies within `tol` of `target`
/// (Euclidean). Exact series are decided in rational arithmetic; hits come back in
/// lexicographic pattern order.
pub fn brute_subsums(series: &dyn Series, n: u32, target: &Vec2q, tol: &Rat) -> Result<Vec<SubsumHit>> {
    check_size(n)?;
    if tol.is_negative() {
        return Err(Error::Precondition("tolerance must be non-negative".into()));
    }
    let floats: Vec<Vec2f> = (1..=n as u64).map(|i| series.term_f64(i)).collect::<Result<_>>()?;
    let exact = exact_terms(series, n)?;
    let tf = target.to_f64();
    let tol_f = tol.to_f64();
    let sums = all_float_sums(&floats);
    // exact series: loose float prefilter, then a rational decision
    let slack = match exact {
        Some(_) => 1e-9 * (1.0 + floats.iter().map(|v| v.norm()).sum::<f64>() + tf.norm()),
        None => 0.0,
    };
    let mut hits: Vec<SubsumHit> = sums
        .par_iter()
        .enumerate()
        .filter(|(_, s)| (**s - tf).norm() <= tol_f + slack)
        .map(|(m, s)| {
            let mask = m as u32;
            SubsumHit { mask, pattern: pattern_string(mask, n), sum: *s, exact_sum: None, distance: (*s - tf).norm() }
        })
        .collect();
    if let Some(terms) = exact {
        let tol_sq = tol * tol;
        hits.retain_mut(|h| {
            let s = exact_sum(&terms, h.mask);
            let d = Vec2::new(&s.x - &target.x, &s.y - &target.y);
            let keep = d.norm_sq() <= tol_sq;
            h.exact_sum = Some(s);
            keep
        });
    }
    hits.sort_by(|a, b| a.pattern.cmp(&b.pattern));
    Ok(hits)
}

/// Pattern on the first `n` terms whose float subsum is nearest to `target`;
/// ties go to the lexicographically smallest pattern.
pub fn nearest_subsum(series: &dyn Series, n: u32, target: Vec2f) -> Result<SubsumHit> {
    check_size(n)?;
    let floats: Vec<Vec2f> = (1..=n as u64).map(|i| series.term_f64(i)).collect::<Result<_>>()?;
    let sums = all_float_sums(&floats);
    let (mask, s) = sums
        .iter()
        .enumerate()
        .map(|(m, s)| (m as u32, *s))
        .min_by(|a, b| {
            (a.1 - target)
                .norm()
                .total_cmp(&(b.1 - target).norm())
                .then_with(|| pattern_string(a.0, n).cmp(&pattern_string(b.0, n)))
        })
        .expect("at least the empty pattern");
    Ok(SubsumHit { mask, pattern: pattern_string(mask, n), sum: s, exact_sum: None, distance: (s - target).norm() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniqueRepresentationReport {
    pub n: u32,
    pub target_x: Rat,
    pub tol: Rat,
    /// proper patterns (some index `<= n` omitted) with x-sum `>= target_x - tol`
    pub qualifying: Vec<String>,
    pub patterns_checked: u64,
    pub unique: bool,
}

/// With positive x-parts, can any pattern that omits one of the first `n` indices
/// still reach `target_x - tol`? Decided exactly.
pub fn unique_positive_representation_check(
    series: &dyn Series,
    target_x: &Rat,
    n: u32,
    tol: &Rat,
) -> Result<UniqueRepresentationReport> {
    check_size(n)?;
    let terms = exact_terms(series, n)?.ok_or_else(|| Error::Precondition("x-parts must be exact".into()))?;
    let xs: Vec<Rat> = terms.into_iter().map(|v| v.x).collect();
    if let Some(i) = xs.iter().position(|x| !x.is_positive()) {
        return Err(Error::Precondition(format!("x-part of term {} is not positive", i + 1)));
    }
    let (nums, denom) = Rat::common_numerators(&xs);
    let threshold = (target_x - tol) * Rat::from_int(denom);
    // x-sums are integers over the common denominator: compare against the ceiling
    let need = threshold.ceil();
    let nums: Vec<i128> = nums
        .iter()
        .map(|v| v.to_i128())
        .collect::<Option<_>>()
        .ok_or(Error::TooLarge { size: n as u64, max: MAX_BRUTE_TERMS as u64 })?;
    let full: u32 = if n == 0 { 0 } else { u32::MAX >> (32 - n) };
    let need = need.to_i128().unwrap_or(if need.is_negative() { i128::MIN } else { i128::MAX });
    let mut qualifying: Vec<String> = (0..full)
        .into_par_iter()
        .filter(|&m| {
            let s: i128 = (0..n).filter(|i| m >> i & 1 == 1).map(|i| nums[i as usize]).sum();
            s >= need
        })
        .map(|m| pattern_string(m, n))
        .collect();
    qualifying.sort();
    Ok(UniqueRepresentationReport {
        n,
        target_x: target_x.clone(),
        tol: tol.clone(),
        unique: qualifying.is_empty(),
        qualifying,
        patterns_checked: full as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, SeriesId};

    fn q(p: i64, d: i64) -> Rat {
        Rat::new(p, d)
    }

    #[test]
    fn exact_examples() {
        let c9 = catalog::get(SeriesId::C9);
        let hits = brute_subsums(&c9, 3, &Vec2::new(q(7, 8), q(-5, 6)), &Rat::zero()).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].pattern, "111");

        for id in [SeriesId::C1, SeriesId::C6, SeriesId::C9] {
            let hits = brute_subsums(&catalog::get(id), 3, &Vec2q::zero(), &Rat::zero()).unwrap();
            assert!(hits.iter().any(|h| h.pattern == "000"));
        }

        let c1 = catalog::get(SeriesId::C1);
        let hits = brute_subsums(&c1, 2, &Vec2::new(q(-1, 2), Rat::zero()), &Rat::zero()).unwrap();
        let pats: Vec<_> = hits.iter().map(|h| h.pattern.as_str()).collect();
        assert_eq!(pats, ["11"]);
    }

    #[test]
    fn float_series_and_limits() {
        let c8 = catalog::get(SeriesId::C8);
        let t = catalog::partial_sum_f64(&c8, 6).unwrap();
        let target = Vec2::new(Rat::from_f64(t.x).unwrap(), Rat::from_f64(t.y).unwrap());
        let hits = brute_subsums(&c8, 6, &target, &q(1, 1_000_000_000)).unwrap();
        assert!(hits.iter().any(|h| h.pattern == "111111"));
        assert!(matches!(brute_subsums(&c8, 25, &target, &Rat::zero()), Err(Error::TooLarge { .. })));
        let best = nearest_subsum(&c8, 6, t).unwrap();
        assert!(best.distance < 1e-12);
    }

    #[test]
    fn half_tables_match_direct_sums() {
        let c6 = catalog::get(SeriesId::C6);
        let terms: Vec<Vec2f> = (1..=7).map(|i| c6.term_f64(i).unwrap()).collect();
        let sums = all_float_sums(&terms);
        assert_eq!(sums.len(), 128);
        for (m, s) in sums.iter().enumerate() {
            let direct: Vec2f = (0..7).filter(|i| m >> i & 1 == 1).map(|i| terms[i]).fold(Vec2f::ZERO, |a, b| a + b);
            assert!((*s - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn unique_representation_examples() {
        let c9 = catalog::get(SeriesId::C9);
        let r = unique_positive_representation_check(&c9, &Rat::one(), 10, &Rat::pow2(-12)).unwrap();
        assert!(r.unique && r.qualifying.is_empty());
        assert_eq!(r.patterns_checked, 1023);
        let r = unique_positive_representation_check(&c9, &Rat::one(), 3, &q(1, 5)).unwrap();
        assert!(r.unique);
        let r = unique_positive_representation_check(&c9, &Rat::one(), 0, &Rat::zero()).unwrap();
        assert!(r.unique && r.patterns_checked == 0);
        // a generous tolerance lets the pattern missing only the last index through
        let r = unique_positive_representation_check(&c9, &Rat::one(), 3, &q(1, 4)).unwrap();
        assert_eq!(r.qualifying, ["110"]);
        let c1 = catalog::get(SeriesId::C1);
        assert!(unique_positive_representation_check(&c1, &Rat::one(), 3, &Rat::zero()).is_err());
    }
}
