use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::IndexSelection;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedySum<T> {
    pub selection: IndexSelection,
    pub sum: T,
    /// number of indices examined
    pub scanned: u64,
}

/// Finite `F` beyond `n` with `x - ε < Σ_F term < x` for a positive tail.
///
/// Scans `n+1, n+2, ...`, taking an index whenever the running sum stays
/// strictly below `x`, and stops once the sum exceeds `x - ε`. Works exactly
/// for rational terms; ties with `x` are skipped.
pub fn greedy_tail_sum<T, F>(term: F, x: &T, eps: &T, n: u64, scan_budget: u64) -> Result<GreedySum<T>>
where
    T: Clone + PartialOrd + Default + Add<Output = T> + Sub<Output = T>,
    F: Fn(u64) -> T,
{
    let zero = T::default();
    if !(*x > zero) || !(*eps > zero) {
        return Err(Error::Precondition("greedy tail sum needs x > 0 and eps > 0".into()));
    }
    let floor = x.clone() - eps.clone();
    let mut sum = zero;
    let mut picked = Vec::new();
    let mut scanned = 0u64;
    let mut i = n;
    while !(sum > floor) {
        if scanned >= scan_budget {
            return Err(Error::BudgetExceeded { what: "greedy tail sum", budget: scan_budget });
        }
        i += 1;
        scanned += 1;
        let next = sum.clone() + term(i);
        if next < *x {
            sum = next;
            picked.push(i);
        }
    }
    Ok(GreedySum { selection: IndexSelection::new(picked)?, sum, scanned })
}
