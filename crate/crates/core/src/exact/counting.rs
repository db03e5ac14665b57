//! Strategy counting for a single `(d, M, R)` record.
//!
//! Loose counting multiplies admissible-set sizes block by block. Strict counting also forbids
//! equal topologies in neighbouring non-reference blocks. Within a run of neighbouring
//! non-reference blocks this is inclusion-exclusion over merged groups: a group of `k`
//! consecutive blocks contributes `(-1)^(k-1)` times the admissible count of its union.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::blocks::{admissible_topologies, Block, BlockConfiguration, BlockTable};
use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::objectives::lf1_tenths;

use super::ConfigRecord;

/// Signed counter used by the counting recurrences. `i128` arithmetic reports overflow so
/// callers can retry with [`BigInt`].
pub(crate) trait Count: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    /// `self += a * w`; `false` on overflow.
    fn add_mul(&mut self, a: &Self, w: i64) -> bool;
    fn try_sub(&self, other: &Self) -> Option<Self>;
    fn try_mul(&self, other: &Self) -> Option<Self>;
    fn to_big(&self) -> BigInt;
}

impl Count for i128 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_positive(&self) -> bool {
        *self > 0
    }
    fn add_mul(&mut self, a: &Self, w: i64) -> bool {
        match a.checked_mul(w as i128).and_then(|p| self.checked_add(p)) {
            Some(v) => {
                *self = v;
                true
            }
            None => false,
        }
    }
    fn try_sub(&self, other: &Self) -> Option<Self> {
        i128::checked_sub(*self, *other)
    }
    fn try_mul(&self, other: &Self) -> Option<Self> {
        i128::checked_mul(*self, *other)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Count for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn add_mul(&mut self, a: &Self, w: i64) -> bool {
        *self += a * w;
        true
    }
    fn try_sub(&self, other: &Self) -> Option<Self> {
        Some(self - other)
    }
    fn try_mul(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

pub(crate) fn to_unsigned(v: BigInt) -> BigUint {
    v.to_biguint().expect("strategy counts are non-negative")
}

/// Binomial coefficients `C(n, k)` for `n, k <= size`.
pub(crate) fn binomial_table(size: usize) -> Vec<Vec<i64>> {
    let mut c = vec![vec![0i64; size + 1]; size + 1];
    for n in 0..=size {
        c[n][0] = 1;
        for k in 1..=n {
            c[n][k] = c[n - 1][k - 1] + c[n - 1][k];
        }
    }
    c
}

/// Counts sequences over a run of `len` neighbouring blocks with consecutive entries
/// distinct, where `union(a, m)` is the admissible count shared by blocks `a..=m`.
pub(crate) fn run_count<C: Count>(
    len: usize,
    mut union: impl FnMut(usize, usize) -> u64,
) -> Option<C> {
    let mut f: Vec<C> = Vec::with_capacity(len + 1);
    f.push(C::one());
    for m in 1..=len {
        let mut acc = C::zero();
        for a in 1..=m {
            let n = union(a - 1, m - 1);
            if n == 0 {
                continue;
            }
            let sign = if (m - a) % 2 == 0 { 1i64 } else { -1 };
            let w = sign.checked_mul(i64::try_from(n).ok()?)?;
            if !acc.add_mul(&f[a - 1], w) {
                return None;
            }
        }
        f.push(acc);
    }
    f.pop()
}

/// Splits the configuration into maximal runs of non-reference blocks.
pub(crate) fn non_ref_runs(n_blocks: usize, is_ref: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n_blocks {
        if is_ref(i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n_blocks && !is_ref(i) {
            i += 1;
        }
        runs.push((start, i - start));
    }
    runs
}

/// Shared driver: `count(block)` gives the admissible count of a (possibly merged) block.
pub(crate) fn record_count<C: Count>(
    blocks: &[Block],
    is_ref: impl Fn(usize) -> bool,
    strict: bool,
    mut count: impl FnMut(Block) -> u64,
) -> Option<C> {
    let mut total = C::one();
    for (start, len) in non_ref_runs(blocks.len(), is_ref) {
        let run = &blocks[start..start + len];
        let factor: C = if strict {
            run_count(len, |a, m| count(Block::new(run[a].start, run[m].end)))?
        } else {
            let mut p = C::one();
            for b in run {
                let mut next = C::zero();
                if !next.add_mul(&p, i64::try_from(count(*b)).ok()?) {
                    return None;
                }
                p = next;
            }
            p
        };
        total = total.try_mul(&factor)?;
    }
    Some(total)
}

fn record_count_big(
    blocks: &[Block],
    is_ref: impl Fn(usize) -> bool + Copy,
    strict: bool,
    mut count: impl FnMut(Block) -> u64,
) -> BigUint {
    if let Some(v) = record_count::<i128>(blocks, is_ref, strict, &mut count) {
        return to_unsigned(BigInt::from(v));
    }
    // Overflowed: multiply run factors exactly.
    let mut total = <BigInt as One>::one();
    for (start, len) in non_ref_runs(blocks.len(), is_ref) {
        let run = &blocks[start..start + len];
        let factor: BigInt = if strict {
            run_count::<BigInt>(len, |a, m| count(Block::new(run[a].start, run[m].end)))
                .expect("BigInt never overflows")
        } else {
            run.iter().map(|b| BigInt::from(count(*b))).product()
        };
        total *= factor;
    }
    to_unsigned(total)
}

/// Number of strategies realising `record` with every non-reference block loading at most
/// `threshold`. Loose mode is the plain Cartesian product; strict mode forbids equal
/// topologies in neighbouring non-reference blocks.
pub fn count_strategies(
    instance: &Instance,
    config: &BlockConfiguration,
    record: &ConfigRecord,
    threshold: f64,
    strict_adjacency: bool,
) -> Result<BigUint> {
    if !record.is_feasible() {
        return Err(Error::validation(
            "cannot count strategies of an infeasible record",
        ));
    }
    let refs = record.refs;
    Ok(record_count_big(
        config.blocks(),
        |i| refs.contains(i),
        strict_adjacency,
        |b| admissible_topologies(instance, b, record.depth, threshold).len() as u64,
    ))
}

/// Table-backed [`count_strategies`].
pub(crate) fn count_with_table(
    table: &BlockTable,
    config: &BlockConfiguration,
    record: &ConfigRecord,
    threshold: f64,
    strict: bool,
) -> BigUint {
    let refs = record.refs;
    record_count_big(
        config.blocks(),
        |i| refs.contains(i),
        strict,
        |b| table.count_within(table.index(b), record.depth, threshold),
    )
}

/// Number of strategies on `(M, R)` with depth at most `depth` and every block loading
/// rounding to at most `tenths`; `None` on `i128` overflow.
pub(crate) fn rounded_count(
    table: &BlockTable,
    config: &BlockConfiguration,
    mask: u64,
    depth: u32,
    tenths: i64,
) -> Option<i128> {
    let blocks = config.blocks();
    for (i, b) in blocks.iter().enumerate() {
        if mask >> i & 1 == 1 && lf1_tenths(table.ref_max(table.index(*b))) > tenths {
            return Some(0);
        }
    }
    record_count::<i128>(
        blocks,
        |i| mask >> i & 1 == 1,
        true,
        |b| {
            let idx = table.index(b);
            (1..=depth)
                .map(|d| table.count_rounded_at(idx, d, tenths))
                .sum()
        },
    )
}

/// Strategies on `(M, R)` with maximum depth exactly `depth` and loading rounding exactly to
/// `tenths`; `None` on overflow.
pub(crate) fn exact_point_count(
    table: &BlockTable,
    config: &BlockConfiguration,
    mask: u64,
    depth: u32,
    tenths: i64,
) -> Option<i128> {
    let at = |d: Option<u32>, r: i64| match d {
        Some(d) => rounded_count(table, config, mask, d, r),
        None => Some(0),
    };
    let lower = depth.checked_sub(1);
    let a = at(Some(depth), tenths)?;
    let b = at(Some(depth), tenths - 1)?;
    let c = at(lower, tenths)?;
    let d = at(lower, tenths - 1)?;
    a.checked_sub(b)?.checked_sub(c)?.checked_add(d)
}
