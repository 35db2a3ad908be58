//! The recursive construction whose achievement set has at most one point on
//! every vertical line, with exact checks of its gap and discrepancy bounds.
//!
//! Block `k >= 1` occupies indices `(N_k, N_k + L_k]` with
//! `x = base_k + 2^-(T_k + i)`, `base_k = δ_k / (2·4^(k+1))` and `y = 2^-k`.
//! The full schedule prepends the unit term `x_1 = y_1 = 1` and uses
//! `L_k = T_k = 2^n` with `2^n = 4^(k+3)/δ_k`; toy schedules choose `L_k`, `T_k`
//! freely subject to `base_k >= 2^-T_k`, which makes the block gap
//! `δ_{k+1} = 2^-(T_k + L_k)`.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{Dyadic, Rat, Vec2, Vec2q, MAX_MATERIALIZED_BITS};

pub const MAX_FULL_LEVEL: u32 = 3;
pub const MAX_ENUMERABLE_BLOCK: u64 = 1 << 20;
pub const MAX_TOY_TERMS: u64 = 100_000;
pub const MAX_MIN_SUM_LEN: usize = 16;
pub const MAX_CLAIM_SWEEP_LEN: usize = 12;
pub const MAX_PROBE_TERMS: usize = 24;

/// Big integers cross serialization as decimal strings.
mod decimal {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.collect_str(v),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
        where
            T: FromStr,
            T::Err: Display,
            D: Deserializer<'de>,
        {
            Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(D::Error::custom)).transpose()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyBlock {
    /// `L_k`
    pub length: u32,
    /// `T_k`
    pub tail_offset: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtremeSchedule {
    /// The full schedule: unit first term, `L_k = T_k = 4^(k+3)/δ_k`.
    Paper,
    Toy { delta_seed: Dyadic, blocks: Vec<ToyBlock> },
}

impl ExtremeSchedule {
    pub fn toy(delta_seed: Rat, blocks: &[(u32, u32)]) -> Result<Self> {
        let seed = Dyadic::from_rat(&delta_seed)
            .ok_or_else(|| Error::Precondition(format!("toy delta seed {delta_seed} is not dyadic")))?;
        Ok(ExtremeSchedule::Toy {
            delta_seed: seed,
            blocks: blocks.iter().map(|&(length, tail_offset)| ToyBlock { length, tail_offset }).collect(),
        })
    }
}

/// Build knobs. `mutate_delta` deliberately breaks the gap formula; it exists
/// so the verification suite can prove it notices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub mutate_delta: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub k: u32,
    /// `N_k`: the block holds indices `N_k + 1 ..= N_k + L_k`.
    #[serde(with = "decimal")]
    pub start: BigUint,
    /// `L_k`, absent when too large to write down.
    #[serde(with = "decimal::opt")]
    pub length: Option<BigUint>,
    /// `log2 L_k` for the full schedule.
    #[serde(with = "decimal::opt")]
    pub length_log2: Option<BigInt>,
    /// `T_k`, absent when too large to write down.
    #[serde(with = "decimal::opt")]
    pub tail_offset: Option<BigUint>,
    pub delta: Dyadic,
    pub base: Dyadic,
    pub next_delta: Option<Dyadic>,
    pub y: Rat,
}

impl BlockRecord {
    pub fn end(&self) -> Option<BigUint> {
        self.length.as_ref().map(|l| &self.start + l)
    }

    pub fn small_length(&self) -> Option<u64> {
        self.length.as_ref().and_then(|l| l.to_u64())
    }

    pub fn is_enumerable(&self) -> bool {
        self.small_length().is_some_and(|l| l <= MAX_ENUMERABLE_BLOCK)
    }

    /// `x` of the `i`-th term in the block (`1 <= i <= L_k`).
    fn x_local(&self, i: u64) -> Result<Rat> {
        let t = self.tail_offset.as_ref().ok_or(Error::NonEnumerableBlock { index: 0 })?;
        let tail = Dyadic::pow2(-(BigInt::from(t.clone()) + BigInt::from(i)));
        self.base.add(&tail)?.to_rat()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockChecks {
    pub k: u32,
    /// `δ_{k+1} < δ_k / 4^(k+2)`; absent when `δ_{k+1}` is not representable.
    pub delta_decay: Option<bool>,
    /// every term of the block is below `δ_k / 4^(k+1)`
    pub per_term_bound: bool,
    /// `Σ x >= 1` over the block
    pub block_sum_at_least_one: bool,
    /// `base_k >= 2^-T_k`
    pub dominance: bool,
    /// true when a check relied on `2^n > n` instead of evaluating `2^n`
    pub symbolic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSeries {
    pub schedule: ExtremeSchedule,
    /// the full schedule starts with `x_1 = y_1 = 1` ahead of block 1
    pub leading_unit: bool,
    pub blocks: Vec<BlockRecord>,
    pub checks: Vec<BlockChecks>,
    /// `x` non-increasing over every enumerable index
    pub monotone_enumerable: bool,
}

fn pow2_big(e: &BigInt) -> Dyadic {
    Dyadic::pow2(e.clone())
}

fn level_shift(k: u32) -> i64 {
    2 * k as i64 + 3
}

fn full_blocks(k_max: u32, opts: BuildOptions) -> Result<Vec<BlockRecord>> {
    if k_max == 0 || k_max > MAX_FULL_LEVEL {
        return Err(Error::Precondition(format!("full schedule data exists for 1 <= k <= {MAX_FULL_LEVEL}")));
    }
    let mut blocks = Vec::new();
    let mut delta = Dyadic::one();
    let mut start = BigUint::one();
    for k in 1..=k_max {
        let e = delta.log2_exact().cloned().expect("full-schedule deltas are powers of two");
        // 2^n = 4^(k+3) / δ_k
        let n = BigInt::from(2 * (k as i64 + 3)) - e;
        let small_n = n.to_u64().filter(|&n| n <= MAX_MATERIALIZED_BITS);
        let length = small_n.map(|n| BigUint::one() << n);
        let base = delta.mul_pow2(-level_shift(k));
        // δ_{k+1} = 4^-(2^n) = 2^-(2^(n+1))
        let next_delta = small_n.map(|n| {
            let mut exp = BigInt::one() << (n + 1);
            if opts.mutate_delta {
                exp -= 1;
            }
            pow2_big(&-exp)
        });
        blocks.push(BlockRecord {
            k,
            start: start.clone(),
            length: length.clone(),
            length_log2: Some(n),
            tail_offset: length.clone(),
            delta: delta.clone(),
            base,
            next_delta: next_delta.clone(),
            y: Rat::pow2(-(k as i64)),
        });
        match (length, next_delta) {
            (Some(l), Some(d)) => {
                start += l;
                delta = d;
            }
            _ => {
                if k < k_max {
                    return Err(Error::ExponentTooLarge(format!("block {} of the full schedule", k + 1)));
                }
            }
        }
    }
    Ok(blocks)
}

fn toy_blocks(seed: &Dyadic, toy: &[ToyBlock], k_max: u32, opts: BuildOptions) -> Result<Vec<BlockRecord>> {
    if seed.sign() <= 0 {
        return Err(Error::Precondition("toy delta seed must be positive".into()));
    }
    if toy.is_empty() {
        return Err(Error::Precondition("toy schedule needs at least one block".into()));
    }
    let total: u64 = toy.iter().map(|b| b.length as u64).sum();
    if total > MAX_TOY_TERMS {
        return Err(Error::TooLarge { size: total, max: MAX_TOY_TERMS });
    }
    let mut blocks = Vec::new();
    let mut delta = seed.clone();
    let mut start = BigUint::zero();
    for (idx, b) in toy.iter().enumerate().take(k_max as usize) {
        let k = idx as u32 + 1;
        if b.length < 2 {
            return Err(Error::Precondition(format!("toy block {k} needs length >= 2")));
        }
        let base = delta.mul_pow2(-level_shift(k));
        if base < Dyadic::pow2(-(b.tail_offset as i64)) {
            return Err(Error::DominanceViolated { block: k as usize });
        }
        let mut exp = b.tail_offset as i64 + b.length as i64;
        if opts.mutate_delta {
            exp -= 1;
        }
        let next = Dyadic::pow2(-exp);
        blocks.push(BlockRecord {
            k,
            start: start.clone(),
            length: Some(BigUint::from(b.length)),
            length_log2: None,
            tail_offset: Some(BigUint::from(b.tail_offset)),
            delta: delta.clone(),
            base,
            next_delta: Some(next.clone()),
            y: Rat::pow2(-(k as i64)),
        });
        start += b.length;
        delta = next;
    }
    Ok(blocks)
}

fn block_checks(b: &BlockRecord) -> Result<BlockChecks> {
    let k = b.k as i64;
    let delta_decay = b.next_delta.as_ref().map(|d| *d < b.delta.mul_pow2(-(2 * k + 4)));
    let mut symbolic = false;
    // Both the per-term bound and dominance reduce to comparing 2^-T (or 2^-(T+1)) with base.
    let (per_term_bound, dominance) = match &b.tail_offset {
        Some(t) => {
            let t = BigInt::from(t.clone());
            (pow2_big(&-(&t + BigInt::one())) < b.base, pow2_big(&-&t) <= b.base)
        }
        None => {
            // T = 2^n > n, so n >= -log2(base) already gives 2^-T < base.
            symbolic = true;
            let need = -b.base.log2_exact().cloned().expect("full-schedule bases are powers of two");
            let n = b.length_log2.clone().expect("full-schedule blocks record log2 of their length");
            (n >= need, n >= need)
        }
    };
    let block_sum_at_least_one = match (&b.length_log2, b.small_length()) {
        (_, Some(l)) if l <= MAX_ENUMERABLE_BLOCK => {
            let base = b.base.to_rat()?;
            let t = b.tail_offset.as_ref().and_then(|t| t.to_i64()).expect("small block has a small offset");
            let tails = Rat::pow2(-t) * (Rat::one() - Rat::pow2(-(l as i64)));
            base * Rat::from(l as i64) + tails >= Rat::one()
        }
        (Some(n), _) => b.base.mul_pow2(n.clone()) >= Dyadic::one(),
        (None, _) => false,
    };
    Ok(BlockChecks { k: b.k, delta_decay, per_term_bound, block_sum_at_least_one, dominance, symbolic })
}

pub fn build_extreme(schedule: &ExtremeSchedule, k_max: u32) -> Result<ExtremeSeries> {
    build_extreme_with(schedule, k_max, BuildOptions::default())
}

pub fn build_extreme_with(schedule: &ExtremeSchedule, k_max: u32, opts: BuildOptions) -> Result<ExtremeSeries> {
    let (blocks, leading_unit) = match schedule {
        ExtremeSchedule::Paper => (full_blocks(k_max, opts)?, true),
        ExtremeSchedule::Toy { delta_seed, blocks } => (toy_blocks(delta_seed, blocks, k_max, opts)?, false),
    };
    let checks = blocks.iter().map(block_checks).collect::<Result<Vec<_>>>()?;
    let mut s = ExtremeSeries { schedule: schedule.clone(), leading_unit, blocks, checks, monotone_enumerable: false };
    let n = s.enumerable_prefix();
    let xs = (1..=n).map(|i| s.x(i)).collect::<Result<Vec<_>>>()?;
    s.monotone_enumerable = xs.windows(2).all(|w| w[0] >= w[1]);
    Ok(s)
}

/// The full schedule with boundary data for three blocks, built once.
pub fn full_schedule_series() -> &'static ExtremeSeries {
    static FULL: OnceLock<ExtremeSeries> = OnceLock::new();
    FULL.get_or_init(|| build_extreme(&ExtremeSchedule::Paper, MAX_FULL_LEVEL).expect("full schedule builds"))
}

enum Located<'a> {
    Unit,
    Block(&'a BlockRecord, u64),
}

/// Pattern over a block: `pattern[i]` is ε at the block's `(i+1)`-th index.
pub type Pattern = [bool];

/// Block terms with everything the gap and discrepancy checks need.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockView {
    pub k: u32,
    /// global index of the first term
    pub first_index: u64,
    pub x: Vec<Rat>,
    pub y: Rat,
    pub delta: Rat,
    pub delta_next: Rat,
}

impl BlockView {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `(-1)^i` for the `j`-th local position (0-based).
    pub fn sign(&self, j: usize) -> i64 {
        if (self.first_index + j as u64).is_multiple_of(2) {
            1
        } else {
            -1
        }
    }
}

impl ExtremeSeries {
    /// Boundaries `N_0 = 0, N_1, N_2, ...`; `None` once they are too large to write down.
    pub fn boundaries(&self) -> Vec<Option<BigUint>> {
        let mut out = vec![Some(BigUint::zero())];
        if self.leading_unit {
            out.push(Some(BigUint::one()));
        }
        for b in &self.blocks {
            out.push(b.end());
        }
        out
    }

    /// `δ_1, δ_2, ...` where representable.
    pub fn deltas(&self) -> Vec<Dyadic> {
        let mut out: Vec<Dyadic> = self.blocks.iter().map(|b| b.delta.clone()).collect();
        if let Some(d) = self.blocks.last().and_then(|b| b.next_delta.clone()) {
            out.push(d);
        }
        out
    }

    pub fn block(&self, k: u32) -> Result<&BlockRecord> {
        self.blocks
            .iter()
            .find(|b| b.k == k)
            .ok_or_else(|| Error::Precondition(format!("block {k} was not built")))
    }

    /// Number of leading indices whose terms can be listed.
    pub fn enumerable_prefix(&self) -> u64 {
        let mut n = u64::from(self.leading_unit);
        for b in &self.blocks {
            match b.small_length() {
                Some(l) if b.is_enumerable() => n += l,
                _ => break,
            }
        }
        n
    }

    fn locate(&self, i: u64) -> Result<Located<'_>> {
        if i == 0 {
            return Err(Error::Precondition("term indices start at 1".into()));
        }
        if self.leading_unit && i == 1 {
            return Ok(Located::Unit);
        }
        let big = BigUint::from(i);
        for b in &self.blocks {
            if big <= b.start {
                break;
            }
            match b.end() {
                Some(end) if big > end => continue,
                _ => {}
            }
            if !b.is_enumerable() {
                return Err(Error::NonEnumerableBlock { index: i });
            }
            let local = (big - &b.start).to_u64().expect("inside a small block");
            return Ok(Located::Block(b, local));
        }
        match self.schedule {
            ExtremeSchedule::Paper => Err(Error::NonEnumerableBlock { index: i }),
            ExtremeSchedule::Toy { .. } => Err(Error::Precondition(format!("index {i} lies beyond the last toy block"))),
        }
    }

    pub fn x(&self, i: u64) -> Result<Rat> {
        match self.locate(i)? {
            Located::Unit => Ok(Rat::one()),
            Located::Block(b, local) => b.x_local(local).map_err(|e| match e {
                Error::NonEnumerableBlock { .. } => Error::NonEnumerableBlock { index: i },
                other => other,
            }),
        }
    }

    pub fn y(&self, i: u64) -> Result<Rat> {
        match self.locate(i)? {
            Located::Unit => Ok(Rat::one()),
            Located::Block(b, _) => Ok(b.y.clone()),
        }
    }

    /// `((-1)^i x_i, (-1)^i y_i)`
    pub fn signed_term(&self, i: u64) -> Result<Vec2q> {
        let (x, y) = (self.x(i)?, self.y(i)?);
        Ok(if i.is_multiple_of(2) { Vec2::new(x, y) } else { Vec2::new(-x, -y) })
    }

    pub fn block_view(&self, k: u32) -> Result<BlockView> {
        let b = self.block(k)?;
        let first = (&b.start + 1u32).to_u64().filter(|_| b.is_enumerable());
        let first = first.ok_or(Error::NonEnumerableBlock { index: u64::MAX })?;
        let len = b.small_length().expect("enumerable");
        let x = (1..=len).map(|i| b.x_local(i)).collect::<Result<Vec<_>>>()?;
        let delta_next = b
            .next_delta
            .as_ref()
            .ok_or(Error::NonEnumerableBlock { index: first })?
            .to_rat()?;
        Ok(BlockView { k, first_index: first, x, y: b.y.clone(), delta: b.delta.to_rat()?, delta_next })
    }
}

fn checked_i128(values: &[BigInt]) -> Option<Vec<i128>> {
    let total: BigInt = values.iter().map(|v| v.abs()).sum();
    if total.bits() > 125 {
        return None;
    }
    values.iter().map(|v| v.to_i128()).collect()
}

/// Minimum of `|Σ ξ_i t_i|` over nonzero `ξ ∈ {-1,0,1}^L`, with a witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSignedSum {
    pub value: Rat,
    pub pattern: Vec<i8>,
    /// the minimum is 0, so some nonzero pattern cancels exactly
    pub is_zero: bool,
}

trait Exact: Clone + Ord + Signed + Send + Sync {}
impl Exact for i128 {}
impl Exact for BigInt {}

fn min_signed_dfs<T: Exact>(nums: &[T], i: usize, sum: &T, nonzero: bool, xi: &mut Vec<i8>, best: &mut Option<(T, Vec<i8>)>) {
    if i == nums.len() {
        if nonzero {
            let v = sum.abs();
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                *best = Some((v, xi.clone()));
            }
        }
        return;
    }
    for s in [-1i8, 0, 1] {
        let next = match s {
            -1 => sum.clone() - nums[i].clone(),
            0 => sum.clone(),
            _ => sum.clone() + nums[i].clone(),
        };
        xi.push(s);
        min_signed_dfs(nums, i + 1, &next, nonzero || s != 0, xi, best);
        xi.pop();
    }
}

fn min_signed<T: Exact>(nums: &[T]) -> (T, Vec<i8>) {
    let split = nums.len().min(4);
    let prefixes: Vec<Vec<i8>> = (0..3usize.pow(split as u32))
        .map(|mut c| {
            let mut p = vec![0i8; split];
            for slot in p.iter_mut().rev() {
                *slot = (c % 3) as i8 - 1;
                c /= 3;
            }
            p
        })
        .collect();
    let results: Vec<Option<(T, Vec<i8>)>> = prefixes
        .par_iter()
        .map(|p| {
            let mut sum = T::zero();
            for (s, n) in p.iter().zip(nums) {
                match s {
                    -1 => sum = sum - n.clone(),
                    1 => sum = sum + n.clone(),
                    _ => {}
                }
            }
            let mut xi = p.clone();
            let mut best = None;
            min_signed_dfs(nums, split, &sum, p.iter().any(|&s| s != 0), &mut xi, &mut best);
            best
        })
        .collect();
    // prefixes are in lexicographic order, so a strict comparison keeps the first minimiser
    let mut best: Option<(T, Vec<i8>)> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _)| r.0 < *b) {
            best = Some(r);
        }
    }
    best.expect("at least one nonzero pattern")
}

/// Exhaustive over `3^L` patterns; `L <= 16`.
pub fn brute_min_signed_sum(terms: &[Rat]) -> Result<MinSignedSum> {
    if terms.is_empty() {
        return Err(Error::Precondition("need at least one term".into()));
    }
    if terms.len() > MAX_MIN_SUM_LEN {
        return Err(Error::TooLarge { size: terms.len() as u64, max: MAX_MIN_SUM_LEN as u64 });
    }
    let (nums, denom) = Rat::common_numerators(terms);
    let (value, pattern) = match checked_i128(&nums) {
        Some(small) => {
            let (v, p) = min_signed(&small);
            (BigInt::from(v), p)
        }
        None => min_signed(&nums),
    };
    let value = Rat::new(value, denom);
    Ok(MinSignedSum { is_zero: value.is_zero(), value, pattern })
}

fn check_pattern_len(block: &BlockView, e: &Pattern) -> Result<()> {
    if e.len() != block.len() {
        return Err(Error::Precondition(format!("pattern length {} does not match block length {}", e.len(), block.len())));
    }
    Ok(())
}

/// Little-endian bitmask to pattern: bit `j` is ε at the block's `(j+1)`-th index.
pub fn pattern_from_mask(mask: u64, len: usize) -> Vec<bool> {
    (0..len).map(|j| mask >> j & 1 == 1).collect()
}

pub fn pattern_to_string(p: &Pattern) -> String {
    p.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub k: u32,
    /// `Σ (-1)^i (ε_i - ε'_i) x_i` over the block
    pub signed_difference: Rat,
    pub magnitude: Rat,
    pub bound: Rat,
    pub holds: bool,
}

/// One pair of patterns against the block gap `δ_{k+1}`.
pub fn check_block_claim(block: &BlockView, e: &Pattern, e2: &Pattern) -> Result<ClaimReport> {
    check_pattern_len(block, e)?;
    check_pattern_len(block, e2)?;
    if e == e2 {
        return Err(Error::Precondition("patterns must differ on the block".into()));
    }
    let mut d = Rat::zero();
    for j in 0..block.len() {
        let diff = e[j] as i64 - e2[j] as i64;
        if diff != 0 {
            d += &(&block.x[j] * &Rat::from(diff * block.sign(j)));
        }
    }
    let magnitude = d.abs();
    let holds = magnitude >= block.delta_next;
    Ok(ClaimReport { k: block.k, signed_difference: d, magnitude, bound: block.delta_next.clone(), holds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimSweep {
    pub k: u32,
    pub pairs: u64,
    pub violations: u64,
    pub min_magnitude: Rat,
    pub bound: Rat,
    /// the minimum equals the bound exactly
    pub attained: bool,
    /// little-endian masks of a minimising pair
    pub witness: (u64, u64),
}

/// Every ordered pair of distinct patterns on the block.
pub fn check_block_claim_exhaustive(block: &BlockView) -> Result<ClaimSweep> {
    let l = block.len();
    if l > MAX_CLAIM_SWEEP_LEN {
        return Err(Error::TooLarge { size: l as u64, max: MAX_CLAIM_SWEEP_LEN as u64 });
    }
    let mut values = block.x.clone();
    values.push(block.delta_next.clone());
    let (nums, denom) = Rat::common_numerators(&values);
    let nums = checked_i128(&nums).ok_or(Error::TooLarge { size: denom.bits(), max: 125 })?;
    let bound = nums[l];
    let count = 1usize << l;
    let sums: Vec<i128> = (0..count)
        .map(|m| (0..l).filter(|&j| m >> j & 1 == 1).map(|j| block.sign(j) as i128 * nums[j]).sum())
        .collect();
    let per_a: Vec<(u64, i128, u64)> = (0..count)
        .into_par_iter()
        .map(|a| {
            let mut violations = 0u64;
            let mut min = i128::MAX;
            let mut arg = 0u64;
            for b in 0..count {
                if a == b {
                    continue;
                }
                let d = (sums[a] - sums[b]).abs();
                if d < bound {
                    violations += 1;
                }
                if d < min {
                    min = d;
                    arg = b as u64;
                }
            }
            (violations, min, arg)
        })
        .collect();
    let mut violations = 0;
    let mut min = i128::MAX;
    let mut witness = (0, 0);
    for (a, &(v, m, b)) in per_a.iter().enumerate() {
        violations += v;
        if m < min {
            min = m;
            witness = (a as u64, b);
        }
    }
    let min_magnitude = Rat::new(BigInt::from(min), denom);
    Ok(ClaimSweep {
        k: block.k,
        pairs: (count * (count - 1)) as u64,
        violations,
        attained: min_magnitude == block.delta_next,
        min_magnitude,
        bound: block.delta_next.clone(),
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YDiscrepancyReport {
    pub k: u32,
    pub differing_even: u64,
    pub differing_odd: u64,
    /// `|#even - #odd|` over positions where the patterns differ
    pub count_imbalance: u64,
    /// `t = Σ (-1)^i (ε_i - ε'_i)`
    pub signed_imbalance: i64,
    /// `Σ (-1)^i (ε_i - ε'_i) y_i = t·2^-k`
    pub delta_y: Rat,
    #[serde(with = "decimal")]
    pub threshold: BigUint,
    /// `threshold · 2^-k`
    pub bound: Rat,
    /// `|t| > threshold`
    pub triggered: bool,
    pub holds: bool,
}

/// Compares the block y-sums of two patterns. The threshold defaults to `4^k`.
pub fn check_y_discrepancy(
    series: &ExtremeSeries,
    k: u32,
    e: &Pattern,
    e2: &Pattern,
    threshold: Option<BigUint>,
) -> Result<YDiscrepancyReport> {
    let block = series.block_view(k)?;
    check_pattern_len(&block, e)?;
    check_pattern_len(&block, e2)?;
    let (mut even, mut odd, mut t) = (0u64, 0u64, 0i64);
    for j in 0..block.len() {
        let diff = e[j] as i64 - e2[j] as i64;
        if diff == 0 {
            continue;
        }
        if block.sign(j) == 1 {
            even += 1;
        } else {
            odd += 1;
        }
        t += diff * block.sign(j);
    }
    let threshold = threshold.unwrap_or_else(|| BigUint::one() << (2 * k as usize));
    let delta_y = &block.y * &Rat::from(t);
    let bound = &block.y * &Rat::from_int(BigInt::from(threshold.clone()));
    let triggered = BigUint::from(t.unsigned_abs()) > threshold;
    let holds = !triggered || delta_y.abs() >= bound;
    Ok(YDiscrepancyReport {
        k,
        differing_even: even,
        differing_odd: odd,
        count_imbalance: even.abs_diff(odd),
        signed_imbalance: t,
        delta_y,
        threshold,
        bound,
        triggered,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbePair {
    pub a: u64,
    pub b: u64,
    /// per block: signed x-difference
    pub x_differences: Vec<Rat>,
    /// per block: the Claim bound held (or the block did not differ)
    pub claim: Vec<bool>,
    /// per block: y-difference
    pub y_differences: Vec<Rat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub terms: usize,
    pub blocks: usize,
    pub patterns: u64,
    pub equal_x_pairs: u64,
    pub examined_pairs: u64,
    pub claim_violations: u64,
    /// equal-x pairs whose every block y-difference stays below `2^k`
    pub silent_pairs: u64,
    pub examples: Vec<ProbePair>,
    pub holds: bool,
}

/// Every pair of patterns over the first `blocks` blocks with exactly equal
/// x-sums, checked against the Claim and the y-discrepancy bounds.
pub fn vertical_section_probe(series: &ExtremeSeries, blocks: usize, pair_budget: u64) -> Result<ProbeReport> {
    if series.leading_unit {
        return Err(Error::Precondition("the probe runs on toy schedules".into()));
    }
    let used: Vec<BlockView> = (1..=blocks.min(series.blocks.len()) as u32)
        .map(|k| series.block_view(k))
        .collect::<Result<_>>()?;
    let n: usize = used.iter().map(BlockView::len).sum();
    if n > MAX_PROBE_TERMS {
        return Err(Error::TooLarge { size: n as u64, max: MAX_PROBE_TERMS as u64 });
    }
    let mut values: Vec<Rat> = Vec::with_capacity(n);
    let mut owner = Vec::with_capacity(n);
    for (bi, b) in used.iter().enumerate() {
        for j in 0..b.len() {
            values.push(&b.x[j] * &Rat::from(b.sign(j)));
            owner.push((bi, j));
        }
    }
    let (nums, _) = Rat::common_numerators(&values);
    let nums = checked_i128(&nums).ok_or(Error::TooLarge { size: 128, max: 125 })?;
    let count = 1u64 << n;
    let mut sums: Vec<(i128, u64)> = (0..count)
        .into_par_iter()
        .map(|m| ((0..n).filter(|&j| m >> j & 1 == 1).map(|j| nums[j]).sum(), m))
        .collect();
    sums.par_sort_unstable();

    let mut report = ProbeReport {
        terms: n,
        blocks: used.len(),
        patterns: count,
        equal_x_pairs: 0,
        examined_pairs: 0,
        claim_violations: 0,
        silent_pairs: 0,
        examples: Vec::new(),
        holds: true,
    };
    let mut i = 0;
    while i < sums.len() {
        let mut j = i + 1;
        while j < sums.len() && sums[j].0 == sums[i].0 {
            j += 1;
        }
        let group: Vec<u64> = sums[i..j].iter().map(|s| s.1).collect();
        let g = group.len() as u64;
        report.equal_x_pairs += g * (g - 1) / 2;
        for (ai, &a) in group.iter().enumerate() {
            for &b in &group[ai + 1..] {
                if report.examined_pairs >= pair_budget {
                    return Err(Error::BudgetExceeded { what: "vertical section probe", budget: pair_budget });
                }
                report.examined_pairs += 1;
                let mut pair = ProbePair {
                    a,
                    b,
                    x_differences: vec![Rat::zero(); used.len()],
                    claim: vec![true; used.len()],
                    y_differences: vec![Rat::zero(); used.len()],
                };
                let mut differs = vec![false; used.len()];
                for (pos, &(bi, jj)) in owner.iter().enumerate() {
                    let diff = (a >> pos & 1) as i64 - (b >> pos & 1) as i64;
                    if diff == 0 {
                        continue;
                    }
                    differs[bi] = true;
                    let blk = &used[bi];
                    pair.x_differences[bi] += &(&blk.x[jj] * &Rat::from(diff * blk.sign(jj)));
                    pair.y_differences[bi] += &(&blk.y * &Rat::from(diff * blk.sign(jj)));
                }
                let mut silent = true;
                for (bi, blk) in used.iter().enumerate() {
                    if differs[bi] && pair.x_differences[bi].abs() < blk.delta_next {
                        pair.claim[bi] = false;
                        report.claim_violations += 1;
                    }
                    if pair.y_differences[bi].abs() >= Rat::pow2(blk.k as i64) {
                        silent = false;
                    }
                }
                if silent {
                    report.silent_pairs += 1;
                }
                if report.examples.len() < 8 {
                    report.examples.push(pair);
                }
            }
        }
        i = j;
    }
    report.holds = report.claim_violations == 0 && report.silent_pairs == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(seed: Rat, blocks: &[(u32, u32)]) -> ExtremeSeries {
        build_extreme(&ExtremeSchedule::toy(seed, blocks).unwrap(), blocks.len() as u32).unwrap()
    }

    /// Independent oracle: the smallest gap between sorted subset sums.
    fn min_subset_gap(terms: &[Rat]) -> Rat {
        let mut sums: Vec<Rat> = (0..1u64 << terms.len())
            .map(|m| (0..terms.len()).filter(|&j| m >> j & 1 == 1).map(|j| terms[j].clone()).sum())
            .collect();
        sums.sort();
        sums.windows(2).map(|w| &w[1] - &w[0]).min().unwrap()
    }

    #[test]
    fn full_schedule_first_blocks() {
        let s = build_extreme(&ExtremeSchedule::Paper, 3).unwrap();
        let b = s.boundaries();
        assert_eq!(b[1], Some(BigUint::from(1u32)));
        assert_eq!(b[2], Some(BigUint::from(257u32)));
        assert_eq!(b[3], Some(BigUint::from(257u32) + (BigUint::one() << 522)));
        assert_eq!(b[4], None);
        let d = s.deltas();
        assert_eq!(d[0], Dyadic::one());
        assert_eq!(d[1], Dyadic::pow2(-512));
        assert_eq!(d[2], Dyadic::pow2(-(BigInt::one() << 523usize)));
        assert!(d[2] < d[1].mul_pow2(-8));
        assert_eq!(s.blocks[0].base, Dyadic::pow2(-5));
        assert_eq!(s.x(2).unwrap(), Rat::new(1, 32) + Rat::pow2(-257));
        assert_eq!(s.x(257).unwrap(), Rat::new(1, 32) + Rat::pow2(-512));
        assert!(s.monotone_enumerable);
        for c in &s.checks {
            assert!(c.per_term_bound && c.block_sum_at_least_one && c.dominance, "{c:?}");
            assert_ne!(c.delta_decay, Some(false));
        }
        assert_eq!(s.checks[2].delta_decay, None);
        assert!(s.checks[2].symbolic);
        assert!(matches!(s.x(258), Err(Error::NonEnumerableBlock { index: 258 })));
        assert!(build_extreme(&ExtremeSchedule::Paper, 4).is_err());
    }

    #[test]
    fn full_schedule_gap_matches_closed_form_on_the_block_tail() {
        // the last few terms of block 1 already realise 4^-256 through (+,-) on the tails
        let s = full_schedule_series();
        let v = s.block_view(1).unwrap();
        assert_eq!(v.len(), 256);
        let last = &v.x[254] - &v.x[255];
        assert_eq!(last, Rat::pow2(-512));
    }

    #[test]
    fn toy_example_block() {
        let s = toy(Rat::new(1, 4), &[(4, 9)]);
        let b = s.block_view(1).unwrap();
        assert_eq!(s.blocks[0].base.to_rat().unwrap(), Rat::new(1, 128));
        let tails: Vec<Rat> = b.x.iter().map(|x| x - &Rat::new(1, 128)).collect();
        assert_eq!(tails, (10..=13).map(|e| Rat::pow2(-e)).collect::<Vec<_>>());
        assert_eq!(b.delta_next, Rat::pow2(-13));
        let m = brute_min_signed_sum(&b.x).unwrap();
        assert_eq!(m.value, Rat::pow2(-13));
        assert_eq!(m.value, min_subset_gap(&b.x));
        assert_eq!(m.pattern.iter().map(|&s| s as i64).sum::<i64>(), 0);
    }

    #[test]
    fn toy_dominance_violation() {
        // base 1/128 but tails start at 2^-5
        let sched = ExtremeSchedule::toy(Rat::new(1, 4), &[(4, 5)]).unwrap();
        assert!(matches!(build_extreme(&sched, 1), Err(Error::DominanceViolated { block: 1 })));
    }

    #[test]
    fn min_signed_sum_examples() {
        assert_eq!(brute_min_signed_sum(&[Rat::one()]).unwrap().value, Rat::one());
        let eq = brute_min_signed_sum(&[Rat::new(1, 2), Rat::new(1, 2)]).unwrap();
        assert!(eq.is_zero);
        let too_many = vec![Rat::one(); 17];
        assert!(matches!(brute_min_signed_sum(&too_many), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn claim_on_toy_block() {
        let s = toy(Rat::new(1, 4), &[(4, 9)]);
        let b = s.block_view(1).unwrap();
        let r = check_block_claim(&b, &pattern_from_mask(0b0001, 4), &pattern_from_mask(0, 4)).unwrap();
        assert!(r.holds && r.magnitude == b.x[0]);
        let sweep = check_block_claim_exhaustive(&b).unwrap();
        assert_eq!(sweep.pairs, 16 * 15);
        assert_eq!(sweep.violations, 0);
        assert!(sweep.attained, "{sweep:?}");
        assert!(check_block_claim(&b, &pattern_from_mask(3, 4), &pattern_from_mask(3, 4)).is_err());
    }

    #[test]
    fn y_discrepancy_on_full_schedule_block() {
        let s = full_schedule_series();
        // block 1 is (1, 257]; local position j has global index j + 2, so even j are even indices
        let mut e = vec![false; 256];
        for j in [0, 2, 4, 6, 8] {
            e[j] = true;
        }
        let r = check_y_discrepancy(s, 1, &e, &vec![false; 256], None).unwrap();
        assert_eq!(r.count_imbalance, 5);
        assert_eq!(r.signed_imbalance, 5);
        assert_eq!(r.delta_y, Rat::new(5, 2));
        assert!(r.triggered && r.holds);
        assert!(r.delta_y >= Rat::from(2));

        let mut balanced = vec![false; 256];
        balanced[0] = true;
        balanced[1] = true;
        let r = check_y_discrepancy(s, 1, &balanced, &vec![false; 256], None).unwrap();
        assert_eq!(r.delta_y, Rat::zero());
        assert!(!r.triggered && r.holds);
    }

    #[test]
    fn y_discrepancy_toy_threshold() {
        let s = toy(Rat::new(1, 4), &[(6, 9)]);
        let e = pattern_from_mask(0b10101, 6);
        let r = check_y_discrepancy(&s, 1, &e, &pattern_from_mask(0, 6), Some(BigUint::from(2u32))).unwrap();
        assert_eq!(r.signed_imbalance.abs(), 3);
        assert!(r.triggered && r.holds);
        assert_eq!(r.bound, Rat::one());
    }

    #[test]
    fn probe_two_toy_blocks() {
        let s = toy(Rat::new(1, 4), &[(4, 9), (4, 20)]);
        let r = vertical_section_probe(&s, 2, 1_000_000).unwrap();
        assert_eq!(r.patterns, 256);
        assert_eq!(r.claim_violations, 0);
        assert!(r.holds);
        let one = toy(Rat::new(1, 4), &[(4, 9)]);
        assert!(vertical_section_probe(&one, 1, 1000).unwrap().holds);
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = full_schedule_series();
        let j = serde_json::to_string(s).unwrap();
        assert!(j.contains("\"exp2\""));
        let back: ExtremeSeries = serde_json::from_str(&j).unwrap();
        assert_eq!(&back, s);
    }

    #[test]
    fn mutated_delta_is_visible() {
        let s = build_extreme_with(&ExtremeSchedule::Paper, 2, BuildOptions { mutate_delta: true }).unwrap();
        assert_ne!(s.deltas()[1], Dyadic::pow2(-512));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn toy_gap_matches_closed_form(seed_exp in 0i64..6, l in 2u32..=8, slack in 0u32..6) {
            let seed = Rat::pow2(-seed_exp);
            // dominance needs T >= seed_exp + 5
            let t = seed_exp as u32 + 5 + slack;
            let s = toy(seed, &[(l, t)]);
            let b = s.block_view(1).unwrap();
            let m = brute_min_signed_sum(&b.x).unwrap();
            prop_assert_eq!(&m.value, &Rat::pow2(-((t + l) as i64)));
            prop_assert_eq!(&m.value, &b.delta_next);
            prop_assert_eq!(m.value, min_subset_gap(&b.x));
            prop_assert_eq!(s.checks[0].delta_decay, Some(true));
            prop_assert!(s.checks[0].per_term_bound);
            prop_assert!(s.monotone_enumerable);
        }
    }
}
