use crate::blocks::{admissible_topologies, block_max, BlockConfiguration, BlockTable};
use crate::dataset::{Instance, TopologyId};
use crate::error::{Error, Result};
use crate::objectives::{lf1_tenths, PointKey, Strategy};

use super::ConfigRecord;

fn fill(
    instance: &Instance,
    config: &BlockConfiguration,
    is_ref: impl Fn(usize) -> bool,
    chosen: &[Option<TopologyId>],
) -> Strategy {
    let mut genes = vec![instance.reference_id(); instance.t_max()];
    for (i, block) in config.blocks().iter().enumerate() {
        if is_ref(i) {
            continue;
        }
        let g = chosen[i].expect("every non-reference block is assigned");
        for t in block.steps() {
            genes[t] = g;
        }
    }
    Strategy::new(genes)
}

/// Greedy choice per non-reference block: the admissible topology with the smallest
/// block-worst loading (lowest id on ties), taking the next best when it would repeat the
/// topology of the preceding non-reference block.
fn greedy(
    config: &BlockConfiguration,
    is_ref: impl Fn(usize) -> bool,
    mut ranked: impl FnMut(usize) -> Vec<TopologyId>,
) -> Result<Vec<Option<TopologyId>>> {
    let mut chosen: Vec<Option<TopologyId>> = vec![None; config.len()];
    for i in 0..config.len() {
        if is_ref(i) {
            continue;
        }
        let previous = if i > 0 { chosen[i - 1] } else { None };
        let pick = ranked(i)
            .into_iter()
            .find(|&g| Some(g) != previous)
            .ok_or_else(|| {
                Error::Infeasible(format!(
                    "no admissible topology for block {} distinct from its neighbour",
                    config.blocks()[i]
                ))
            })?;
        chosen[i] = Some(pick);
    }
    Ok(chosen)
}

/// One strategy realising `record`: reference blocks take the reference topology, every other
/// block its best admissible topology.
pub fn materialize_representative(
    instance: &Instance,
    config: &BlockConfiguration,
    record: &ConfigRecord,
) -> Result<Strategy> {
    if !record.is_feasible() {
        return Err(Error::Infeasible(
            "record has no admissible assignment".into(),
        ));
    }
    let refs = record.refs;
    let chosen = greedy(
        config,
        |i| refs.contains(i),
        |i| {
            let block = config.blocks()[i];
            let mut ranked: Vec<(f64, TopologyId)> =
                admissible_topologies(instance, block, record.depth, record.lf1)
                    .into_iter()
                    .map(|g| (block_max(instance, g, block).expect("admissible"), g))
                    .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked.into_iter().map(|x| x.1).collect()
        },
    )?;
    Ok(fill(instance, config, |i| refs.contains(i), &chosen))
}

/// Table-backed [`materialize_representative`]; only the two best candidates per block are
/// ever needed.
pub(crate) fn materialize_with_table(
    instance: &Instance,
    table: &BlockTable,
    config: &BlockConfiguration,
    record: &ConfigRecord,
) -> Result<Strategy> {
    let refs = record.refs;
    let chosen = greedy(
        config,
        |i| refs.contains(i),
        |i| {
            let b = table.index(config.blocks()[i]);
            let mut ranked: Vec<(f64, u32)> = Vec::new();
            for d in 1..=record.depth {
                let (values, members) = table.at_depth(b, d);
                for j in 0..values.len().min(2) {
                    if values[j] <= record.lf1 {
                        ranked.push((values[j], members[j]));
                    }
                }
            }
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            ranked
                .into_iter()
                .map(|x| instance.topologies()[x.1 as usize].id)
                .collect()
        },
    )?;
    Ok(fill(instance, config, |i| refs.contains(i), &chosen))
}

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    index: u32,
    hits_value: bool,
    hits_depth: bool,
}

/// Candidates of one block whose loading rounds to at most `key.lf1_tenths` and whose depth
/// is at most `key.depth`: up to three of each (hits value, hits depth) class, which always
/// suffices to keep neighbouring blocks distinct.
fn candidates(table: &BlockTable, block: usize, key: &PointKey) -> Vec<Candidate> {
    let mut out = Vec::new();
    for d in 1..=key.depth {
        let (values, members) = table.at_depth(block, d);
        let below = values.partition_point(|&v| lf1_tenths(v) < key.lf1_tenths);
        let upto = values.partition_point(|&v| lf1_tenths(v) <= key.lf1_tenths);
        for range in [0..below.min(3), below..upto.min(below + 3)] {
            for j in range {
                out.push(Candidate {
                    value: values[j],
                    index: members[j],
                    hits_value: j >= below,
                    hits_depth: d == key.depth,
                });
            }
        }
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
    out
}

struct Search<'a> {
    /// Position in the configuration and candidate list of each non-reference block.
    blocks: Vec<(usize, Vec<Candidate>)>,
    /// Whether some block from position `i` on can still reach the value or the depth.
    can_hit_value: Vec<bool>,
    can_hit_depth: Vec<bool>,
    need_value: bool,
    need_depth: bool,
    chosen: &'a mut Vec<u32>,
}

impl Search<'_> {
    fn go(&mut self, i: usize, hit_value: bool, hit_depth: bool) -> bool {
        if i == self.blocks.len() {
            return (hit_value || !self.need_value) && (hit_depth || !self.need_depth);
        }
        if self.need_value && !hit_value && !self.can_hit_value[i] {
            return false;
        }
        if self.need_depth && !hit_depth && !self.can_hit_depth[i] {
            return false;
        }
        let neighbour =
            (i > 0 && self.blocks[i - 1].0 + 1 == self.blocks[i].0).then(|| self.chosen[i - 1]);
        for c in 0..self.blocks[i].1.len() {
            let cand = self.blocks[i].1[c];
            if Some(cand.index) == neighbour {
                continue;
            }
            self.chosen.push(cand.index);
            if self.go(
                i + 1,
                hit_value || cand.hits_value,
                hit_depth || cand.hits_depth,
            ) {
                return true;
            }
            self.chosen.pop();
        }
        false
    }
}

/// A strategy on `(config, mask)` whose rounded objectives equal `key`, if one exists.
pub(crate) fn search_point(
    instance: &Instance,
    table: &BlockTable,
    config: &BlockConfiguration,
    mask: u64,
    key: &PointKey,
) -> Option<Strategy> {
    let is_ref = |i: usize| mask >> i & 1 == 1;
    let mut ref_hits = false;
    let mut blocks = Vec::new();
    for (i, block) in config.blocks().iter().enumerate() {
        let b = table.index(*block);
        if is_ref(i) {
            let r = lf1_tenths(table.ref_max(b));
            if r > key.lf1_tenths {
                return None;
            }
            ref_hits |= r == key.lf1_tenths;
        } else {
            let c = candidates(table, b, key);
            if c.is_empty() {
                return None;
            }
            blocks.push((i, c));
        }
    }
    let n = blocks.len();
    let mut can_hit_value = vec![false; n + 1];
    let mut can_hit_depth = vec![false; n + 1];
    for i in (0..n).rev() {
        can_hit_value[i] = can_hit_value[i + 1] || blocks[i].1.iter().any(|c| c.hits_value);
        can_hit_depth[i] = can_hit_depth[i + 1] || blocks[i].1.iter().any(|c| c.hits_depth);
    }
    let mut chosen = Vec::with_capacity(n);
    let mut search = Search {
        blocks,
        can_hit_value,
        can_hit_depth,
        need_value: !ref_hits,
        need_depth: key.depth > 0,
        chosen: &mut chosen,
    };
    if !search.go(0, false, false) {
        return None;
    }
    let mut assigned = vec![None; config.len()];
    for ((pos, _), idx) in search.blocks.iter().zip(chosen.iter()) {
        assigned[*pos] = Some(instance.topologies()[*idx as usize].id);
    }
    Some(fill(instance, config, is_ref, &assigned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::ReferenceAssignment;
    use crate::dataset::TopologyRecord;
    use crate::exact::run_block_algorithm;
    use crate::exact::tests::small;
    use crate::objectives::evaluate;

    #[test]
    fn all_reference_record() {
        let inst = small(1, 4);
        let config = BlockConfiguration::from_cuts(4, &[]);
        let record = ConfigRecord {
            depth: 1,
            config: 0,
            refs: ReferenceAssignment::from_indices(&[0]),
            switches: 0,
            non_ref: 0,
            lf1: 100.0,
        };
        let s = materialize_representative(&inst, &config, &record).unwrap();
        assert_eq!(s, Strategy::all_reference(&inst));
    }

    #[test]
    fn single_block_takes_best_topology() {
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
                depth: 1,
            },
        ];
        let mut rows = Vec::new();
        for t in 0..3 {
            rows.push((TopologyId(0), t, 120.0));
            rows.push((TopologyId(1), t, 95.0));
            rows.push((TopologyId(2), t, 90.0 + t as f64));
        }
        let inst = Instance::from_rows("b", 3, TopologyId(0), topologies, rows).unwrap();
        let config = BlockConfiguration::from_cuts(3, &[1]);
        let record = ConfigRecord {
            depth: 1,
            config: 0,
            refs: ReferenceAssignment::from_indices(&[0]),
            switches: 1,
            non_ref: 2,
            lf1: 120.0,
        };
        let s = materialize_representative(&inst, &config, &record).unwrap();
        assert_eq!(s.genes, vec![TopologyId(0), TopologyId(2), TopologyId(2)]);
    }

    #[test]
    fn representatives_reproduce_records() {
        for seed in 1..6 {
            let inst = small(seed, 4);
            let run = run_block_algorithm(&inst, 2, 2).unwrap();
            let table = BlockTable::new(&inst, 2);
            for rec in run.records.iter().filter(|r| r.is_feasible()) {
                let config = run.configuration(rec);
                let plain = materialize_representative(&inst, config, rec);
                let fast = materialize_with_table(&inst, &table, config, rec);
                match (plain, fast) {
                    (Ok(a), Ok(b)) => {
                        assert_eq!(a, b);
                        let v = evaluate(&inst, &a).unwrap();
                        assert!(v.lf1 <= rec.lf1);
                        assert_eq!(v.switches, rec.switches);
                        assert_eq!(v.non_ref, rec.non_ref);
                    }
                    (Err(_), Err(_)) => {}
                    other => panic!("table and plain materialization disagree: {other:?}"),
                }
            }
        }
    }
}
