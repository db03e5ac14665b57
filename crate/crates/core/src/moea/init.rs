//! Structure-guided initial population.
//!
//! One stratum per switch count `l` in `0..t_max` (`l_bar` strategies each, with exactly `l`
//! switches) and one per maximum depth `d` in `1..=d_max` (`d_bar` strategies each, with depth
//! exactly `d`), plus the all-reference strategy.

use rand::seq::index::sample;
use rand::Rng;

use crate::blocks::{Block, BlockTable};
use crate::dataset::{Instance, TopologyId};
use crate::error::{Error, Result};
use crate::objectives::Strategy;

/// Attempts allowed per requested member before a stratum is declared unsatisfiable.
const BUDGET_FACTOR: usize = 100;

/// Uniform draw from the topologies available over `block` with depth at most `depth`
/// (reference included), avoiding `exclude`.
fn draw<R: Rng + ?Sized>(
    instance: &Instance,
    table: &BlockTable,
    block: Block,
    depth: u32,
    exclude: Option<TopologyId>,
    rng: &mut R,
) -> Option<TopologyId> {
    let b = table.index(block);
    let reference = instance.reference_id();
    let ref_ok = table.ref_max(b).is_finite();
    let sizes: Vec<usize> = (1..=depth).map(|d| table.at_depth(b, d).1.len()).collect();
    let total = usize::from(ref_ok) + sizes.iter().sum::<usize>();
    let excluded_present = match exclude {
        Some(g) if g == reference => ref_ok,
        Some(g) => {
            instance.depth(g).is_some_and(|d| d >= 1 && d <= depth)
                && block.steps().all(|t| instance.is_available(g, t))
        }
        None => false,
    };
    if total <= usize::from(excluded_present) {
        return None;
    }
    loop {
        let mut k = rng.random_range(0..total);
        let pick = if ref_ok && k == 0 {
            reference
        } else {
            if ref_ok {
                k -= 1;
            }
            let mut d = 1;
            while k >= sizes[d as usize - 1] {
                k -= sizes[d as usize - 1];
                d += 1;
            }
            instance.topologies()[table.at_depth(b, d).1[k] as usize].id
        };
        if Some(pick) != exclude {
            return Some(pick);
        }
    }
}

fn random_blocks<R: Rng + ?Sized>(t_max: usize, switches: usize, rng: &mut R) -> Vec<Block> {
    let mut cuts: Vec<usize> = sample(rng, t_max - 1, switches)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut blocks = Vec::with_capacity(switches + 1);
    let mut start = 0;
    for c in cuts {
        blocks.push(Block::new(start, c - 1));
        start = c;
    }
    blocks.push(Block::new(start, t_max - 1));
    blocks
}

fn expand(t_max: usize, blocks: &[Block], genes: &[TopologyId]) -> Strategy {
    let mut out = Vec::with_capacity(t_max);
    for (b, &g) in blocks.iter().zip(genes) {
        out.extend(std::iter::repeat_n(g, b.len()));
    }
    Strategy::new(out)
}

/// A strategy with exactly `switches` switches, or `None` if this draw hit a dead end.
fn sample_switch_stratum<R: Rng + ?Sized>(
    instance: &Instance,
    table: &BlockTable,
    switches: usize,
    rng: &mut R,
) -> Option<Strategy> {
    let blocks = random_blocks(instance.t_max(), switches, rng);
    let mut genes = Vec::with_capacity(blocks.len());
    for &b in &blocks {
        let prev = genes.last().copied();
        genes.push(draw(instance, table, b, table.depth_limit(), prev, rng)?);
    }
    Some(expand(instance.t_max(), &blocks, &genes))
}

/// A strategy whose topologies all have depth at most `depth`; callers reject those whose
/// maximum falls short.
fn sample_depth_stratum<R: Rng + ?Sized>(
    instance: &Instance,
    table: &BlockTable,
    depth: u32,
    s_max: usize,
    rng: &mut R,
) -> Option<Strategy> {
    let switches = rng.random_range(0..=s_max.min(instance.t_max() - 1));
    let blocks = random_blocks(instance.t_max(), switches, rng);
    let genes: Option<Vec<TopologyId>> = blocks
        .iter()
        .map(|&b| draw(instance, table, b, depth, None, rng))
        .collect();
    Some(expand(instance.t_max(), &blocks, &genes?))
}

fn max_depth(instance: &Instance, s: &Strategy) -> u32 {
    s.genes
        .iter()
        .map(|&g| instance.depth(g).unwrap_or(0))
        .max()
        .unwrap_or(0)
}

fn switch_count(s: &Strategy) -> usize {
    s.genes.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Builds the stratified initial population (see the module docs).
pub fn init_population<R: Rng + ?Sized>(
    instance: &Instance,
    table: &BlockTable,
    l_bar: usize,
    d_bar: usize,
    d_max: u32,
    s_max: usize,
    rng: &mut R,
) -> Result<Vec<Strategy>> {
    let t_max = instance.t_max();
    if d_max > table.depth_limit() {
        return Err(Error::validation(format!(
            "d_max {d_max} exceeds the instance's maximum depth {}",
            table.depth_limit()
        )));
    }
    let mut out = Vec::with_capacity(t_max * l_bar + d_max as usize * d_bar + 1);
    for l in 0..t_max {
        let mut got = 0;
        let mut attempts = 0;
        while got < l_bar {
            if attempts >= BUDGET_FACTOR * l_bar {
                return Err(Error::Initialization {
                    stratum: format!("switches = {l}"),
                    message: format!("found {got} of {l_bar} strategies after {attempts} draws"),
                });
            }
            attempts += 1;
            if let Some(s) = sample_switch_stratum(instance, table, l, rng) {
                debug_assert_eq!(switch_count(&s), l);
                out.push(s);
                got += 1;
            }
        }
    }
    for d in 1..=d_max {
        let mut got = 0;
        let mut attempts = 0;
        while got < d_bar {
            if attempts >= BUDGET_FACTOR * d_bar {
                return Err(Error::Initialization {
                    stratum: format!("depth = {d}"),
                    message: format!("found {got} of {d_bar} strategies after {attempts} draws"),
                });
            }
            attempts += 1;
            match sample_depth_stratum(instance, table, d, s_max, rng) {
                Some(s) if max_depth(instance, &s) == d => {
                    out.push(s);
                    got += 1;
                }
                _ => {}
            }
        }
    }
    out.push(Strategy::all_reference(instance));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_instance, GeneratorConfig, TopologyRecord};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    #[test]
    fn strata_have_the_requested_structure() {
        let inst = generate_instance(&GeneratorConfig {
            t_max: 12,
            seed: 3,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let table = BlockTable::new(&inst, inst.max_depth());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(&inst, &table, 4, 5, 3, 5, &mut rng).unwrap();
        assert_eq!(pop.len(), 12 * 4 + 3 * 5 + 1);
        for (i, s) in pop.iter().enumerate() {
            assert!(s.is_feasible(&inst));
            if i < 48 {
                assert_eq!(switch_count(s), i / 4);
            } else if i < 63 {
                assert_eq!(max_depth(&inst, s), 1 + (i - 48) as u32 / 5);
            }
        }
        assert_eq!(pop.last().unwrap(), &Strategy::all_reference(&inst));
    }

    #[test]
    fn tiny_population() {
        let inst = generate_instance(&GeneratorConfig {
            t_max: 2,
            count_per_depth: BTreeMap::from([(1, 3)]),
            availability_drop_rate: 0.0,
            seed: 1,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let table = BlockTable::new(&inst, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pop = init_population(&inst, &table, 1, 1, 1, 1, &mut rng).unwrap();
        assert_eq!(pop.len(), 4);
        assert!(pop.iter().all(|s| s.is_feasible(&inst)));
    }

    #[test]
    fn unsatisfiable_stratum_is_named() {
        // With the reference as the only topology no strategy can switch.
        let topologies = vec![TopologyRecord {
            id: TopologyId(0),
            depth: 0,
        }];
        let rows = vec![(TopologyId(0), 0, 100.0), (TopologyId(0), 1, 100.0)];
        let inst = Instance::from_rows("solo", 2, TopologyId(0), topologies, rows).unwrap();
        let table = BlockTable::new(&inst, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        match init_population(&inst, &table, 1, 0, 0, 1, &mut rng) {
            Err(Error::Initialization { stratum, .. }) => assert_eq!(stratum, "switches = 1"),
            other => panic!("expected an initialization error, got {other:?}"),
        }
    }
}
