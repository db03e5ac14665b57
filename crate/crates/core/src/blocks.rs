//! Block combinatorics.
//!
//! A block is a run of consecutive time steps held in one topology. A block configuration
//! partitions the horizon into blocks; a reference assignment marks a set of pairwise
//! non-adjacent blocks that run in the reference topology.

use std::fmt;

use rayon::prelude::*;

use crate::dataset::{Instance, TopologyId};
use crate::error::{Error, Result};
use crate::objectives::lf1_tenths;

/// Inclusive time interval `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub start: usize,
    pub end: usize,
}

impl Block {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "block start {start} after end {end}");
        Block { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    /// Position of this block in [`enumerate_blocks`] order.
    pub fn index(&self, t_max: usize) -> usize {
        block_offset(self.start, t_max) + (self.end - self.start)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..={}]", self.start, self.end)
    }
}

fn block_offset(start: usize, t_max: usize) -> usize {
    // Blocks starting before `start`: sum over s < start of (t_max - s).
    start * t_max - start * start.saturating_sub(1) / 2
}

/// Number of distinct blocks on a horizon of `t_max` steps, `C(t_max, 2) + t_max`.
pub fn block_count(t_max: usize) -> usize {
    t_max * (t_max + 1) / 2
}

/// All blocks ordered by `(start, end)`.
pub fn enumerate_blocks(t_max: usize) -> Vec<Block> {
    (0..t_max)
        .flat_map(|s| (s..t_max).map(move |e| Block::new(s, e)))
        .collect()
}

/// An ordered partition of the horizon into consecutive blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BlockConfiguration {
    blocks: Vec<Block>,
}

impl BlockConfiguration {
    /// Checks that `blocks` cover `0..t_max` consecutively.
    pub fn new(blocks: Vec<Block>, t_max: usize) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.end >= t_max {
                return Err(Error::validation(format!(
                    "blocks do not partition 0..{t_max}: {b} out of place"
                )));
            }
            next = b.end + 1;
        }
        if next != t_max {
            return Err(Error::validation(format!(
                "blocks stop at {next}, horizon is {t_max}"
            )));
        }
        Ok(BlockConfiguration { blocks })
    }

    /// Builds the configuration whose blocks start at 0 and at every step in `cuts`.
    /// `cuts` must be strictly increasing within `1..t_max`.
    pub fn from_cuts(t_max: usize, cuts: &[usize]) -> Self {
        let mut blocks = Vec::with_capacity(cuts.len() + 1);
        let mut start = 0;
        for &c in cuts {
            debug_assert!(c > start && c < t_max);
            blocks.push(Block::new(start, c - 1));
            start = c;
        }
        blocks.push(Block::new(start, t_max - 1));
        BlockConfiguration { blocks }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `|M| - 1`.
    pub fn switches(&self) -> usize {
        self.blocks.len() - 1
    }
}

/// Subset of a configuration's blocks (by index) run in the reference topology.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReferenceAssignment(u64);

impl ReferenceAssignment {
    pub const NONE: ReferenceAssignment = ReferenceAssignment(0);

    pub fn from_mask(mask: u64) -> Self {
        ReferenceAssignment(mask)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        ReferenceAssignment(indices.iter().fold(0, |m, &i| m | (1u64 << i)))
    }

    pub fn mask(&self) -> u64 {
        self.0
    }

    pub fn contains(&self, block: usize) -> bool {
        block < 64 && self.0 >> block & 1 == 1
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    /// No two selected blocks are neighbours.
    pub fn is_non_adjacent(&self) -> bool {
        self.0 & (self.0 >> 1) == 0
    }

    /// `z(R)`: steps of `config` not covered by the selected blocks.
    pub fn non_ref_steps(&self, config: &BlockConfiguration) -> usize {
        config
            .blocks
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.contains(*i))
            .map(|(_, b)| b.len())
            .sum()
    }
}

/// Every configuration with exactly `switches + 1` blocks, in lexicographic order of the
/// cut positions. There are `C(t_max - 1, switches)` of them.
pub fn enumerate_configurations(t_max: usize, switches: usize) -> Result<Vec<BlockConfiguration>> {
    if t_max == 0 || switches >= t_max {
        return Err(Error::validation(format!(
            "switch count {switches} outside 0..{t_max}"
        )));
    }
    let mut out = Vec::new();
    let mut cuts = Vec::with_capacity(switches);
    push_cuts(t_max, switches, 1, &mut cuts, &mut |c| {
        out.push(BlockConfiguration::from_cuts(t_max, c))
    });
    Ok(out)
}

fn push_cuts(
    t_max: usize,
    remaining: usize,
    first: usize,
    cuts: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if remaining == 0 {
        emit(cuts);
        return;
    }
    for c in first..=t_max - remaining {
        cuts.push(c);
        push_cuts(t_max, remaining - 1, c + 1, cuts, emit);
        cuts.pop();
    }
}

/// All non-adjacent subsets of the configuration's blocks, ascending by mask.
/// There are `F(n + 2)` of them for `n` blocks.
pub fn enumerate_reference_assignments(config: &BlockConfiguration) -> Vec<ReferenceAssignment> {
    non_adjacent_masks(config.len())
        .into_iter()
        .map(ReferenceAssignment)
        .collect()
}

pub(crate) fn non_adjacent_masks(n: usize) -> Vec<u64> {
    assert!(n <= 64, "at most 64 blocks are supported");
    let mut out = Vec::new();
    fn rec(i: usize, n: usize, mask: u64, out: &mut Vec<u64>) {
        if i >= n {
            out.push(mask);
            return;
        }
        rec(i + 1, n, mask, out);
        rec(i + 2, n, mask | 1 << i, out);
    }
    rec(0, n, 0, &mut out);
    out.sort_unstable();
    out
}

/// Best attainable loadings for a block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockStats {
    pub block: Block,
    /// Worst loading of the reference topology over the block.
    pub ref_lf1: f64,
    /// Index `d`: best block-worst loading among non-reference topologies available over the
    /// whole block with depth at most `d`; `+inf` if there are none.
    pub best_nonref_lf1: Vec<f64>,
}

pub(crate) fn block_max(instance: &Instance, id: TopologyId, block: Block) -> Option<f64> {
    block
        .steps()
        .map(|t| instance.lf1(id, t))
        .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
}

pub fn compute_block_stats(instance: &Instance, block: Block, d_max: u32) -> BlockStats {
    let reference = instance.reference_id();
    let ref_lf1 = block_max(instance, reference, block).unwrap_or(f64::INFINITY);
    let mut per_depth = vec![f64::INFINITY; d_max as usize + 1];
    for &g in instance.available(block.start) {
        if g == reference {
            continue;
        }
        let depth = instance.depth(g).unwrap_or(0);
        if depth == 0 || depth > d_max {
            continue;
        }
        if let Some(m) = block_max(instance, g, block) {
            let slot = &mut per_depth[depth as usize];
            *slot = slot.min(m);
        }
    }
    let mut best = f64::INFINITY;
    let best_nonref_lf1 = per_depth
        .into_iter()
        .map(|v| {
            best = best.min(v);
            best
        })
        .collect();
    BlockStats {
        block,
        ref_lf1,
        best_nonref_lf1,
    }
}

/// Non-reference topologies available over the whole block with depth at most `d` and
/// block-worst loading at most `threshold`, sorted by id.
pub fn admissible_topologies(
    instance: &Instance,
    block: Block,
    d: u32,
    threshold: f64,
) -> Vec<TopologyId> {
    let reference = instance.reference_id();
    instance
        .available(block.start)
        .iter()
        .copied()
        .filter(|&g| g != reference)
        .filter(|&g| instance.depth(g).is_some_and(|dg| dg <= d))
        .filter(|&g| block_max(instance, g, block).is_some_and(|m| m <= threshold))
        .collect()
}

/// Precomputed per-block data for every block of the horizon.
///
/// For each block and each depth `1..=depth_limit` it keeps the block-worst loadings of the
/// non-reference topologies available over the block, sorted ascending (ties by id), so that
/// admissible-set sizes for any threshold are a binary search away.
#[derive(Debug)]
pub struct BlockTable {
    t_max: usize,
    depth_limit: u32,
    ref_max: Vec<f64>,
    /// `[block][depth - 1]`
    values: Vec<Vec<Vec<f64>>>,
    /// Topology indices matching `values`.
    members: Vec<Vec<Vec<u32>>>,
}

/// Reference maximum, then per-depth sorted values and members, for one block.
type BlockEntry = (f64, Vec<Vec<f64>>, Vec<Vec<u32>>);

impl BlockTable {
    pub fn new(instance: &Instance, depth_limit: u32) -> Self {
        let t_max = instance.t_max();
        let reference = instance.reference_id();
        let ref_index = instance.index_of(reference);

        let per_start: Vec<Vec<BlockEntry>> = (0..t_max)
            .into_par_iter()
            .map(|start| {
                let mut alive: Vec<(u32, u32, f64)> = instance
                    .available(start)
                    .iter()
                    .filter(|&&g| g != reference)
                    .filter_map(|&g| {
                        let idx = instance.index_of(g)?;
                        let depth = instance.topologies()[idx].depth;
                        (depth >= 1 && depth <= depth_limit).then_some((
                            idx as u32,
                            depth,
                            f64::NEG_INFINITY,
                        ))
                    })
                    .collect();
                let mut ref_running = f64::NEG_INFINITY;
                let mut rows = Vec::with_capacity(t_max - start);
                for end in start..t_max {
                    ref_running = match ref_index {
                        Some(r) => {
                            let v = instance.profile(r)[end];
                            if v.is_nan() {
                                f64::INFINITY
                            } else {
                                ref_running.max(v)
                            }
                        }
                        None => f64::INFINITY,
                    };
                    alive.retain_mut(|(idx, _, running)| {
                        let v = instance.profile(*idx as usize)[end];
                        if v.is_nan() {
                            return false;
                        }
                        *running = running.max(v);
                        true
                    });
                    let mut by_depth: Vec<Vec<(f64, u32)>> = vec![Vec::new(); depth_limit as usize];
                    for &(idx, depth, running) in &alive {
                        by_depth[depth as usize - 1].push((running, idx));
                    }
                    let mut values = Vec::with_capacity(by_depth.len());
                    let mut members = Vec::with_capacity(by_depth.len());
                    for mut list in by_depth {
                        list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                        values.push(list.iter().map(|x| x.0).collect());
                        members.push(list.iter().map(|x| x.1).collect());
                    }
                    rows.push((ref_running, values, members));
                }
                rows
            })
            .collect();

        let mut ref_max = Vec::with_capacity(block_count(t_max));
        let mut values = Vec::with_capacity(block_count(t_max));
        let mut members = Vec::with_capacity(block_count(t_max));
        for rows in per_start {
            for (r, v, m) in rows {
                ref_max.push(r);
                values.push(v);
                members.push(m);
            }
        }
        BlockTable {
            t_max,
            depth_limit,
            ref_max,
            values,
            members,
        }
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    pub fn depth_limit(&self) -> u32 {
        self.depth_limit
    }

    pub fn index(&self, block: Block) -> usize {
        block.index(self.t_max)
    }

    /// Worst reference loading over the block.
    pub fn ref_max(&self, block: usize) -> f64 {
        self.ref_max[block]
    }

    /// Best block-worst loading among non-reference topologies of depth `1..=d`.
    pub fn best_nonref(&self, block: usize, d: u32) -> f64 {
        (1..=d.min(self.depth_limit))
            .filter_map(|depth| self.values[block][depth as usize - 1].first().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Sorted block-worst loadings (and matching topology indices) at exactly `depth`.
    pub fn at_depth(&self, block: usize, depth: u32) -> (&[f64], &[u32]) {
        if depth == 0 || depth > self.depth_limit {
            return (&[], &[]);
        }
        let d = depth as usize - 1;
        (&self.values[block][d], &self.members[block][d])
    }

    /// Admissible count with depth `1..=d` and block-worst loading `<= threshold`.
    pub fn count_within(&self, block: usize, d: u32, threshold: f64) -> u64 {
        (1..=d.min(self.depth_limit))
            .map(|depth| {
                self.values[block][depth as usize - 1].partition_point(|&v| v <= threshold) as u64
            })
            .sum()
    }

    /// Admissible count at exactly `depth` with rounded loading at most `tenths`.
    pub fn count_rounded_at(&self, block: usize, depth: u32, tenths: i64) -> u64 {
        let (values, _) = self.at_depth(block, depth);
        values.partition_point(|&v| lf1_tenths(v) <= tenths) as u64
    }

    pub fn stats(&self, block: Block, d_max: u32) -> BlockStats {
        let b = self.index(block);
        BlockStats {
            block,
            ref_lf1: self.ref_max(b),
            best_nonref_lf1: (0..=d_max).map(|d| self.best_nonref(b, d)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_instance, GeneratorConfig, TopologyRecord};
    use std::collections::BTreeMap;

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    fn fib(n: usize) -> u64 {
        let (mut a, mut b) = (0u64, 1u64);
        for _ in 0..n {
            (a, b) = (b, a + b);
        }
        a
    }

    #[test]
    fn block_counts() {
        assert_eq!(enumerate_blocks(24).len(), 300);
        assert_eq!(enumerate_blocks(1).len(), 1);
        let four = enumerate_blocks(4);
        assert_eq!(four.len(), 10);
        let mut brute = Vec::new();
        for s in 0..4 {
            for e in 0..4 {
                if s <= e {
                    brute.push(Block::new(s, e));
                }
            }
        }
        assert_eq!(four, brute);
        for (i, b) in enumerate_blocks(13).iter().enumerate() {
            assert_eq!(b.index(13), i);
        }
    }

    #[test]
    fn configuration_examples() {
        let one = enumerate_configurations(24, 0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].blocks(), &[Block::new(0, 23)]);
        assert_eq!(enumerate_configurations(24, 1).unwrap().len(), 23);
        let six = enumerate_configurations(6, 2).unwrap();
        assert_eq!(six.len(), 10);
        for c in &six {
            assert_eq!(c.len(), 3);
            assert!(BlockConfiguration::new(c.blocks().to_vec(), 6).is_ok());
        }
        assert!(enumerate_configurations(6, 6).is_err());
    }

    #[test]
    fn configuration_counts_are_binomial() {
        for t in 1..=12usize {
            let mut total = 0;
            for l in 0..t {
                let n = enumerate_configurations(t, l).unwrap().len() as u64;
                assert_eq!(n, binomial(t as u64 - 1, l as u64), "t={t} l={l}");
                total += n;
            }
            assert_eq!(total, 1 << (t - 1));
        }
    }

    #[test]
    fn reference_assignment_examples() {
        let one = BlockConfiguration::from_cuts(4, &[]);
        let a = enumerate_reference_assignments(&one);
        assert_eq!(
            a,
            vec![
                ReferenceAssignment::NONE,
                ReferenceAssignment::from_indices(&[0])
            ]
        );

        let two = BlockConfiguration::from_cuts(4, &[2]);
        let a = enumerate_reference_assignments(&two);
        assert_eq!(a.len(), 3);

        let five = BlockConfiguration::from_cuts(6, &[1, 2, 3, 4]);
        let a = enumerate_reference_assignments(&five);
        let brute: Vec<_> = (0u64..32)
            .filter(|m| m & (m >> 1) == 0)
            .map(ReferenceAssignment::from_mask)
            .collect();
        assert_eq!(a.len(), 13);
        assert_eq!(a, brute);
    }

    #[test]
    fn reference_assignment_counts_are_fibonacci() {
        for n in 1..=12usize {
            let cuts: Vec<usize> = (1..n).collect();
            let config = BlockConfiguration::from_cuts(12, &cuts);
            let a = enumerate_reference_assignments(&config);
            assert_eq!(a.len() as u64, fib(n + 2));
            assert!(a.iter().all(|r| r.is_non_adjacent()));
        }
    }

    #[test]
    fn non_ref_steps_counts_uncovered_steps() {
        let config = BlockConfiguration::from_cuts(10, &[3, 5]);
        let r = ReferenceAssignment::from_indices(&[0, 2]);
        assert_eq!(r.non_ref_steps(&config), 2);
        assert_eq!(ReferenceAssignment::NONE.non_ref_steps(&config), 10);
    }

    fn single_step_instance() -> Instance {
        let topologies = vec![
            TopologyRecord {
                id: TopologyId(0),
                depth: 0,
            },
            TopologyRecord {
                id: TopologyId(1),
                depth: 1,
            },
            TopologyRecord {
                id: TopologyId(2),
                depth: 2,
            },
        ];
        let rows = [
            (TopologyId(0), 0, 120.0),
            (TopologyId(1), 0, 90.0),
            (TopologyId(2), 0, 85.0),
        ];
        Instance::from_rows("one", 1, TopologyId(0), topologies, rows).unwrap()
    }

    #[test]
    fn singleton_block_stats() {
        let inst = single_step_instance();
        let stats = compute_block_stats(&inst, Block::new(0, 0), 2);
        assert_eq!(stats.ref_lf1, 120.0);
        assert_eq!(stats.best_nonref_lf1, vec![f64::INFINITY, 90.0, 85.0]);
    }

    fn synthetic(seed: u64) -> Instance {
        generate_instance(&GeneratorConfig {
            t_max: 6,
            count_per_depth: BTreeMap::from([(1, 3), (2, 5), (3, 8)]),
            availability_drop_rate: 0.3,
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn block_stats_match_nested_loops() {
        for seed in 0..5 {
            let inst = synthetic(seed);
            let table = BlockTable::new(&inst, 3);
            for block in enumerate_blocks(inst.t_max()) {
                let stats = compute_block_stats(&inst, block, 3);
                assert_eq!(table.stats(block, 3), stats);
                // Brute force: min over topologies of max over steps.
                for d in 0..=3u32 {
                    let mut best = f64::INFINITY;
                    for rec in inst.topologies() {
                        if rec.id == inst.reference_id() || rec.depth > d {
                            continue;
                        }
                        let mut worst = f64::NEG_INFINITY;
                        let mut ok = true;
                        for t in block.steps() {
                            match inst.lf1(rec.id, t) {
                                Some(v) => worst = worst.max(v),
                                None => ok = false,
                            }
                        }
                        if ok {
                            best = best.min(worst);
                        }
                    }
                    assert_eq!(stats.best_nonref_lf1[d as usize], best);
                }
                for w in stats.best_nonref_lf1.windows(2) {
                    assert!(w[1] <= w[0]);
                }
            }
        }
    }

    #[test]
    fn admissible_sets() {
        let inst = synthetic(11);
        let table = BlockTable::new(&inst, 3);
        for block in enumerate_blocks(inst.t_max()) {
            let all = admissible_topologies(&inst, block, 3, f64::INFINITY);
            let expected: Vec<TopologyId> = inst
                .topologies()
                .iter()
                .map(|r| r.id)
                .filter(|&g| g != inst.reference_id())
                .filter(|&g| block.steps().all(|t| inst.is_available(g, t)))
                .collect();
            assert_eq!(all, expected);
            assert!(admissible_topologies(&inst, block, 3, 0.5).is_empty());
            for d in 1..=3 {
                let best = table.best_nonref(table.index(block), d);
                let members = admissible_topologies(&inst, block, d, best);
                assert_eq!(members.is_empty(), best.is_infinite());
                for g in &members {
                    let worst = block
                        .steps()
                        .map(|t| inst.lf1(*g, t).unwrap())
                        .fold(f64::NEG_INFINITY, f64::max);
                    assert!(worst <= best);
                }
                assert_eq!(
                    table.count_within(table.index(block), d, 1e9) as usize,
                    admissible_topologies(&inst, block, d, 1e9).len()
                );
            }
        }
    }
}
