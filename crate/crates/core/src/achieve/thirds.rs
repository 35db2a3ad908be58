use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::Rat;

pub const MAX_TAIL_N: u32 = 8;
pub const MAX_DISTANCE_K: u32 = 4;
/// Terms of the tail summed exactly before the geometric majorant takes over.
const TAIL_TERMS: u32 = 40;

/// `2^m / 4^(m²)`.
fn tail_term(m: u32) -> Rat {
    Rat::pow2(m as i64 - 2 * (m as i64) * (m as i64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub n: u32,
    /// `Σ_{m=n+1}^{n+40} 2^m/4^(m²)`
    pub truncated: Rat,
    /// bound on the rest: consecutive terms shrink by at least half, so twice the first omitted term
    pub remainder_majorant: Rat,
    /// `1/(8·4^(n²))`, or 1 when `n = 0`
    pub bound: Rat,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceCheck {
    pub k: u32,
    /// `4^(k²)` as a decimal string
    pub denominator: String,
    /// `floor(4^(k²)/3)`; it and its successor are the integers nearest the third
    pub floor_numerator: String,
    pub floor_distance: Rat,
    pub ceil_distance: Rat,
    pub min_distance: Rat,
    /// `1/(3·4^(k²))`
    pub expected: Rat,
    pub identity_holds: bool,
    /// `Σ_{j=1}^{k²} 4^(-j) = 1/3 - 1/(3·4^(k²))`
    pub block_sum_identity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThirdsReport {
    pub tails: Vec<TailCheck>,
    pub distances: Vec<DistanceCheck>,
    pub pass: bool,
}

fn tail_check(n: u32) -> TailCheck {
    let truncated: Rat = (n + 1..=n + TAIL_TERMS).map(tail_term).sum();
    // t(m+1)/t(m) = 2/4^(2m+1) <= 1/2
    let remainder_majorant = tail_term(n + TAIL_TERMS + 1) * Rat::from_int(2);
    let bound = if n == 0 { Rat::one() } else { Rat::pow2(-3 - 2 * (n as i64) * (n as i64)) };
    let holds = &truncated + &remainder_majorant < bound;
    TailCheck { n, truncated, remainder_majorant, bound, holds }
}

fn distance_check(k: u32) -> DistanceCheck {
    let d: BigInt = BigInt::one() << (2 * k * k) as usize;
    let third = Rat::new(1, 3);
    let p: BigInt = &d / 3u32;
    let dr = Rat::from_int(d.clone());
    let floor_distance = (Rat::from_int(p.clone()) / &dr - &third).abs();
    let ceil_distance = (Rat::from_int(&p + 1u32) / &dr - &third).abs();
    let min_distance = floor_distance.clone().min(ceil_distance.clone());
    let expected = (Rat::from_int(3) * &dr).recip();
    let block_sum: Rat = (1..=(k * k) as i64).map(|j| Rat::pow2(-2 * j)).sum();
    DistanceCheck {
        k,
        denominator: d.to_string(),
        floor_numerator: p.to_string(),
        identity_holds: min_distance == expected,
        block_sum_identity: block_sum == &third - &expected,
        floor_distance,
        ceil_distance,
        min_distance,
        expected,
    }
}

/// Exact checks behind the power-block example: the tail inequality for each
/// `n <= n_max` and the distance from `1/3` to the grid `4^(-k²)ℤ` for `1 <= k <= k_max`.
pub fn thirds_exclusion_check(n_max: u32, k_max: u32) -> Result<ThirdsReport> {
    if n_max > MAX_TAIL_N {
        return Err(Error::TooLarge { size: n_max as u64, max: MAX_TAIL_N as u64 });
    }
    if k_max > MAX_DISTANCE_K {
        return Err(Error::TooLarge { size: k_max as u64, max: MAX_DISTANCE_K as u64 });
    }
    let tails: Vec<TailCheck> = (0..=n_max).map(tail_check).collect();
    let distances: Vec<DistanceCheck> = (1..=k_max).map(distance_check).collect();
    let pass = tails.iter().all(|t| t.holds) && distances.iter().all(|d| d.identity_holds && d.block_sum_identity);
    Ok(ThirdsReport { tails, distances, pass })
}
