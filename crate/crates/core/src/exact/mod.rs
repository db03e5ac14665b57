//! The block algorithm and exact dominance fronts.
//!
//! [`run_block_algorithm`] evaluates every `(d, M, R)` triple within the bounds,
//! [`filter_nondominated`] reduces the records to the nondominated discrete tuples, and
//! [`exact_fronts`] produces ranked unique objective points with strategy counts and a
//! representative strategy each.

mod counting;
mod filter;
mod fronts;
mod representative;
mod sweep;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::blocks::{
    enumerate_configurations, non_adjacent_masks, BlockConfiguration, BlockTable,
    ReferenceAssignment,
};
use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::objectives::{PointKey, Strategy};

pub use counting::count_strategies;
pub use filter::{filter_nondominated, NondominatedTuple, ObjectiveTensor};
pub use fronts::exact_fronts;
pub use representative::materialize_representative;

/// Best loading of one `(d, M, R)` triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfigRecord {
    /// Depth bound used for the non-reference blocks.
    pub depth: u32,
    /// Index into [`BlockRun::configurations`].
    pub config: u32,
    pub refs: ReferenceAssignment,
    pub switches: u32,
    pub non_ref: u32,
    /// `+inf` when some non-reference block has no admissible topology.
    pub lf1: f64,
}

impl ConfigRecord {
    pub fn is_feasible(&self) -> bool {
        self.lf1.is_finite()
    }
}

/// Output of [`run_block_algorithm`].
#[derive(Clone, Debug)]
pub struct BlockRun {
    pub d_max: u32,
    pub s_max: usize,
    pub t_max: usize,
    /// All configurations with at most `s_max` switches, grouped by switch count.
    pub configurations: Vec<BlockConfiguration>,
    /// One record per `(d, M, R)`, ordered by `d`, then configuration, then mask.
    pub records: Vec<ConfigRecord>,
    /// Number of `(d, M, R)` evaluations performed.
    pub eval_count: u64,
}

impl BlockRun {
    pub fn configuration(&self, record: &ConfigRecord) -> &BlockConfiguration {
        &self.configurations[record.config as usize]
    }

    /// Smallest and largest finite record loading.
    pub fn lf1_range(&self) -> Option<(f64, f64)> {
        let mut finite = self.records.iter().map(|r| r.lf1).filter(|v| v.is_finite());
        let first = finite.next()?;
        Some(finite.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }
}

pub(crate) fn check_bounds(instance: &Instance, d_max: u32, s_max: usize) -> Result<()> {
    let t_max = instance.t_max();
    if d_max > instance.max_depth() {
        return Err(Error::validation(format!(
            "d_max {d_max} exceeds the instance's maximum depth {}",
            instance.max_depth()
        )));
    }
    if t_max == 0 || s_max >= t_max {
        return Err(Error::validation(format!(
            "s_max {s_max} must lie in 0..{t_max}"
        )));
    }
    if s_max >= 64 {
        return Err(Error::validation("s_max must be below 64"));
    }
    Ok(())
}

/// Enumerates every `(d, M, R)` with `d <= d_max` and at most `s_max` switches.
pub fn run_block_algorithm(instance: &Instance, d_max: u32, s_max: usize) -> Result<BlockRun> {
    check_bounds(instance, d_max, s_max)?;
    let table = BlockTable::new(instance, d_max);
    Ok(run_with_table(&table, d_max, s_max))
}

pub(crate) fn all_configurations(t_max: usize, s_max: usize) -> Vec<BlockConfiguration> {
    (0..=s_max)
        .flat_map(|l| enumerate_configurations(t_max, l).expect("bounds checked"))
        .collect()
}

pub(crate) fn run_with_table(table: &BlockTable, d_max: u32, s_max: usize) -> BlockRun {
    let t_max = table.t_max();
    let configurations = all_configurations(t_max, s_max);
    let masks: Vec<Vec<u64>> = (0..=s_max + 1).map(non_adjacent_masks).collect();

    let per_config: Vec<Vec<ConfigRecord>> = configurations
        .par_iter()
        .enumerate()
        .map(|(ci, config)| {
            let idx: Vec<usize> = config.blocks().iter().map(|&b| table.index(b)).collect();
            let lens: Vec<u32> = config.blocks().iter().map(|b| b.len() as u32).collect();
            let refv: Vec<f64> = idx.iter().map(|&b| table.ref_max(b)).collect();
            let masks = &masks[config.len()];
            let mut out = Vec::with_capacity(masks.len() * (d_max as usize + 1));
            for d in 0..=d_max {
                let best: Vec<f64> = idx.iter().map(|&b| table.best_nonref(b, d)).collect();
                for &mask in masks {
                    let mut lf1 = f64::NEG_INFINITY;
                    let mut non_ref = 0;
                    for i in 0..idx.len() {
                        if mask >> i & 1 == 1 {
                            lf1 = lf1.max(refv[i]);
                        } else {
                            lf1 = lf1.max(best[i]);
                            non_ref += lens[i];
                        }
                    }
                    out.push(ConfigRecord {
                        depth: d,
                        config: ci as u32,
                        refs: ReferenceAssignment::from_mask(mask),
                        switches: config.switches() as u32,
                        non_ref,
                        lf1,
                    });
                }
            }
            out
        })
        .collect();

    // Canonical order: depth bound outermost.
    let total: usize = per_config.iter().map(Vec::len).sum();
    let mut records = Vec::with_capacity(total);
    for d in 0..=d_max {
        for chunk in &per_config {
            records.extend(chunk.iter().filter(|r| r.depth == d).copied());
        }
    }
    BlockRun {
        d_max,
        s_max,
        t_max,
        configurations,
        eval_count: records.len() as u64,
        records,
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn fibonacci(n: usize) -> u128 {
    let (mut a, mut b) = (0u128, 1u128);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

/// Number of `(d, M, R)` evaluations: `(d_max+1) * sum_l C(t_max-1, l) * F(l+3)`.
pub fn count_evaluations(d_max: u32, l_max: usize, t_max: usize) -> u128 {
    if t_max == 0 {
        return 0;
    }
    let per_depth: u128 = (0..=l_max.min(t_max - 1))
        .map(|l| binomial(t_max as u128 - 1, l as u128) * fibonacci(l + 3))
        .sum();
    (d_max as u128 + 1) * per_depth
}

/// How strategy counts are aggregated per objective point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountingMode {
    /// Sum of Cartesian-product sizes over matching records.
    Loose,
    /// Number of distinct strategies whose objectives round to the point.
    Strict,
}

impl CountingMode {
    pub fn from_strict(strict: bool) -> Self {
        if strict {
            CountingMode::Strict
        } else {
            CountingMode::Loose
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CountingMode::Loose => "loose",
            CountingMode::Strict => "strict",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactFrontEntry {
    pub front_rank: usize,
    pub depth: u32,
    pub switches: u32,
    pub non_ref: u32,
    /// Unrounded loading of the representative.
    pub lf1: f64,
    pub lf1_rounded: f64,
    pub strategy_count: BigUint,
    pub representative: Strategy,
}

impl ExactFrontEntry {
    pub fn key(&self) -> PointKey {
        PointKey {
            depth: self.depth,
            switches: self.switches,
            non_ref: self.non_ref,
            lf1_tenths: crate::objectives::lf1_tenths(self.lf1_rounded),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExactResult {
    /// `fronts[k]` holds the entries of rank `k + 1`, sorted by `(depth, switches, non_ref,
    /// lf1_rounded)`.
    pub fronts: Vec<Vec<ExactFrontEntry>>,
    pub eval_count: u64,
    pub counting: CountingMode,
    /// Smallest and largest finite record loading.
    pub lf1_range: Option<(f64, f64)>,
}

impl ExactResult {
    pub fn is_empty(&self) -> bool {
        self.fronts.iter().all(Vec::is_empty)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ExactFrontEntry> {
        self.fronts.iter().flatten()
    }
}
