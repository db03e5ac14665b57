use std::collections::HashMap;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::blocks::{non_adjacent_masks, BlockConfiguration, BlockTable};
use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::objectives::{evaluate, lf1_tenths, PointKey, Strategy};

use super::counting::{count_with_table, exact_point_count, to_unsigned};
use super::representative::{materialize_with_table, search_point};
use super::sweep::sweep_points;
use super::{check_bounds, run_with_table, BlockRun, CountingMode, ExactFrontEntry, ExactResult};

/// Dominance rank of each key (1 = nondominated); keys ranked above `k_max` get 0.
fn rank_keys(keys: &[PointKey], k_max: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    let sort_key = |k: &PointKey| (k.lf1_tenths, k.depth, k.switches, k.non_ref);
    order.sort_by_key(|&i| sort_key(&keys[i]));
    // Dominators precede the points they dominate in this order, so the rank is one more
    // than the largest dominator rank.
    let mut rank = vec![0usize; keys.len()];
    for (pos, &i) in order.iter().enumerate() {
        let mut r = 1;
        for &j in &order[..pos] {
            if rank[j] >= r && keys[j].dominates(&keys[i]) {
                r = rank[j] + 1;
            }
        }
        rank[i] = r;
    }
    rank.into_iter()
        .map(|r| if r <= k_max { r } else { 0 })
        .collect()
}

fn record_key(depth: u32, switches: u32, non_ref: u32, lf1: f64) -> PointKey {
    PointKey {
        depth,
        switches,
        non_ref,
        lf1_tenths: lf1_tenths(lf1),
    }
}

struct Context<'a> {
    instance: &'a Instance,
    table: &'a BlockTable,
    run: &'a BlockRun,
    /// Start of each switch count's configurations in `run.configurations`.
    offsets: Vec<usize>,
}

impl Context<'_> {
    fn configs_with(&self, switches: usize) -> &[BlockConfiguration] {
        &self.run.configurations[self.offsets[switches]..self.offsets[switches + 1]]
    }

    /// A strategy evaluating exactly to `key`: first from the matching records in order of
    /// loading, otherwise by searching the configurations of the point's class.
    fn representative(&self, key: &PointKey, records: &[usize]) -> Result<Strategy> {
        for &ri in records {
            let rec = &self.run.records[ri];
            let config = self.run.configuration(rec);
            if let Ok(s) = materialize_with_table(self.instance, self.table, config, rec) {
                if evaluate(self.instance, &s)?.key() == *key {
                    return Ok(s);
                }
            }
        }
        let blocks = key.switches as usize + 1;
        let masks: Vec<u64> = non_adjacent_masks(blocks);
        for config in self.configs_with(key.switches as usize) {
            let lens: Vec<u32> = config.blocks().iter().map(|b| b.len() as u32).collect();
            for &mask in &masks {
                let z: u32 = (0..blocks)
                    .filter(|i| mask >> i & 1 == 0)
                    .map(|i| lens[i])
                    .sum();
                if z != key.non_ref {
                    continue;
                }
                let possible =
                    exact_point_count(self.table, config, mask, key.depth, key.lf1_tenths)
                        .is_none_or(|c| c > 0);
                if !possible {
                    continue;
                }
                if let Some(s) = search_point(self.instance, self.table, config, mask, key) {
                    return Ok(s);
                }
            }
        }
        Err(Error::Infeasible(format!("no strategy realises {key}")))
    }

    fn loose_count(&self, records: &[usize]) -> BigUint {
        records
            .iter()
            .map(|&ri| {
                let rec = &self.run.records[ri];
                count_with_table(self.table, self.run.configuration(rec), rec, rec.lf1, false)
            })
            .sum()
    }
}

/// Ranked unique objective points within the bounds, fronts `1..=k_max`.
///
/// Points are exact: they are the rounded objective vectors of actual strategies, ranked by
/// dominance among all strategies within the bounds. In strict mode each count is the number
/// of strategies whose rounded objectives equal the point; in loose mode it sums the Cartesian
/// product sizes of the records sharing the point's discrete triple and rounded loading.
pub fn exact_fronts(
    instance: &Instance,
    d_max: u32,
    s_max: usize,
    k_max: usize,
    strict_adjacency: bool,
) -> Result<ExactResult> {
    check_bounds(instance, d_max, s_max)?;
    if k_max == 0 {
        return Err(Error::validation("at least one front is required"));
    }
    let table = BlockTable::new(instance, d_max);
    let run = run_with_table(&table, d_max, s_max);
    let points = sweep_points(&table, d_max, s_max, k_max);

    let keys: Vec<PointKey> = points.iter().map(|p| p.key).collect();
    let ranks = rank_keys(&keys, k_max);
    let kept: HashMap<PointKey, usize> = keys
        .iter()
        .enumerate()
        .filter(|(i, _)| ranks[*i] > 0)
        .map(|(i, k)| (*k, i))
        .collect();

    let mut matching: HashMap<usize, Vec<usize>> = HashMap::new();
    for (ri, rec) in run.records.iter().enumerate() {
        if !rec.is_feasible() {
            continue;
        }
        let key = record_key(rec.depth, rec.switches, rec.non_ref, rec.lf1);
        if let Some(&pi) = kept.get(&key) {
            matching.entry(pi).or_default().push(ri);
        }
    }
    for list in matching.values_mut() {
        list.sort_by(|&a, &b| {
            run.records[a]
                .lf1
                .total_cmp(&run.records[b].lf1)
                .then(a.cmp(&b))
        });
    }

    let mut offsets = vec![0usize];
    for l in 0..=s_max {
        let n = run
            .configurations
            .iter()
            .filter(|c| c.switches() == l)
            .count();
        offsets.push(offsets[l] + n);
    }
    let ctx = Context {
        instance,
        table: &table,
        run: &run,
        offsets,
    };

    let mut selected: Vec<usize> = kept.values().copied().collect();
    selected.sort_unstable();
    let empty = Vec::new();
    let entries: Vec<ExactFrontEntry> = selected
        .par_iter()
        .map(|&pi| {
            let key = keys[pi];
            let records = matching.get(&pi).unwrap_or(&empty);
            let representative = ctx.representative(&key, records)?;
            let lf1 = evaluate(instance, &representative)?.lf1;
            let strategy_count = if strict_adjacency {
                to_unsigned(points[pi].count.clone())
            } else {
                ctx.loose_count(records)
            };
            Ok(ExactFrontEntry {
                front_rank: ranks[pi],
                depth: key.depth,
                switches: key.switches,
                non_ref: key.non_ref,
                lf1,
                lf1_rounded: key.lf1(),
                strategy_count,
                representative,
            })
        })
        .collect::<Result<_>>()?;

    let n_fronts = entries.iter().map(|e| e.front_rank).max().unwrap_or(0);
    let mut fronts: Vec<Vec<ExactFrontEntry>> = vec![Vec::new(); n_fronts];
    for e in entries {
        fronts[e.front_rank - 1].push(e);
    }
    for front in &mut fronts {
        front.sort_by_key(|e| (e.depth, e.switches, e.non_ref, lf1_tenths(e.lf1_rounded)));
    }
    Ok(ExactResult {
        fronts,
        eval_count: run.eval_count,
        counting: CountingMode::from_strict(strict_adjacency),
        lf1_range: run.lf1_range(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{TopologyId, TopologyRecord};
    use crate::exact::filter_nondominated;
    use crate::exact::tests::small;

    #[test]
    fn rank_keys_peels_chains() {
        let k = |l: i64, d: u32| PointKey {
            depth: d,
            switches: 0,
            non_ref: 0,
            lf1_tenths: l,
        };
        let keys = vec![k(30, 0), k(10, 0), k(20, 0), k(5, 2)];
        assert_eq!(rank_keys(&keys, 10), vec![3, 1, 2, 1]);
        assert_eq!(rank_keys(&keys, 2), vec![0, 1, 2, 1]);
    }

    #[test]
    fn reference_only_instance() {
        let topologies = vec![
            TopologyRecord {
                id: TopologyId(0),
                depth: 0,
            },
            TopologyRecord {
                id: TopologyId(1),
                depth: 1,
            },
        ];
        let rows = vec![
            (TopologyId(0), 0, 110.0),
            (TopologyId(0), 1, 120.0),
            (TopologyId(1), 0, 90.0),
        ];
        let inst = Instance::from_rows("r", 2, TopologyId(0), topologies, rows).unwrap();
        let result = exact_fronts(&inst, 0, 1, 3, true).unwrap();
        assert_eq!(result.fronts.len(), 1);
        let e = &result.fronts[0][0];
        assert_eq!((e.depth, e.switches, e.non_ref, e.lf1), (0, 0, 0, 120.0));
        assert_eq!(e.strategy_count, BigUint::from(1u32));
    }

    #[test]
    fn first_front_matches_tensor_filter() {
        for seed in 0..8 {
            let inst = small(seed, 6);
            let (d_max, s_max) = (3, 3);
            let result = exact_fronts(&inst, d_max, s_max, 1, true).unwrap();
            let run = crate::exact::run_block_algorithm(&inst, d_max, s_max).unwrap();
            let mut filtered: Vec<PointKey> = filter_nondominated(&run.records, d_max, s_max, 6)
                .iter()
                .map(|t| record_key(t.depth, t.switches, t.non_ref, t.lf1))
                .collect();
            filtered.sort();
            let mut ours: Vec<PointKey> = result.fronts[0].iter().map(|e| e.key()).collect();
            ours.sort();
            assert_eq!(ours, filtered, "seed {seed}");
            // Front-1 loadings are the record minima.
            for t in filter_nondominated(&run.records, d_max, s_max, 6) {
                let key = record_key(t.depth, t.switches, t.non_ref, t.lf1);
                let e = result.fronts[0].iter().find(|e| e.key() == key).unwrap();
                assert_eq!(e.lf1, t.lf1);
            }
        }
    }

    #[test]
    fn representatives_evaluate_to_their_points() {
        for seed in 0..5 {
            let inst = small(seed, 5);
            for strict in [false, true] {
                let result = exact_fronts(&inst, 2, 3, 4, strict).unwrap();
                for e in result.entries() {
                    let v = evaluate(&inst, &e.representative).unwrap();
                    assert_eq!(v.key(), e.key());
                    assert!((v.lf1 - e.lf1).abs() < 1e-9);
                }
                for w in result.fronts.windows(2) {
                    for later in &w[1] {
                        assert!(w[0].iter().any(|e| e.key().dominates(&later.key())));
                    }
                }
            }
        }
    }
}
