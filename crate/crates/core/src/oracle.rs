//! Exhaustive ground truth for small instances.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::dataset::Instance;
use crate::error::{Error, Result};
use crate::exact::{exact_fronts, CountingMode, ExactResult};
use crate::objectives::{lf1_tenths, rank_fronts, ObjectiveVector, PointKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_strategy_count: u128,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_strategy_count: 10_000_000,
        }
    }
}

/// A unique rounded objective point and the number of strategies attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OraclePoint {
    pub point: ObjectiveVector,
    pub count: u128,
}

impl OraclePoint {
    pub fn key(&self) -> PointKey {
        self.point.key()
    }
}

/// Size of the full strategy space `prod_t |G_t|`, saturating.
pub fn strategy_space_size(instance: &Instance) -> u128 {
    (0..instance.t_max())
        .map(|t| instance.available(t).len() as u128)
        .fold(1u128, |a, n| a.saturating_mul(n))
}

/// Enumerates every strategy, keeps those within the bounds, and ranks the unique rounded
/// objective points into at most `k_max` fronts.
pub fn brute_force_fronts(
    instance: &Instance,
    d_max: u32,
    s_max: usize,
    k_max: usize,
    limits: OracleLimits,
) -> Result<Vec<Vec<OraclePoint>>> {
    let product = strategy_space_size(instance);
    if product > limits.max_strategy_count {
        return Err(Error::OracleLimit {
            product,
            limit: limits.max_strategy_count,
        });
    }
    let t_max = instance.t_max();
    let reference = instance.reference_id();
    // Per step: (id, depth, loading, is reference).
    let options: Vec<Vec<(u32, u32, f64, bool)>> = (0..t_max)
        .map(|t| {
            instance
                .available(t)
                .iter()
                .map(|&g| {
                    (
                        g.0,
                        instance.depth(g).unwrap_or(0),
                        instance.lf1(g, t).expect("available"),
                        g == reference,
                    )
                })
                .collect()
        })
        .collect();
    if t_max == 0 || options.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }

    let mut counts: BTreeMap<PointKey, u128> = BTreeMap::new();
    let mut digits = vec![0usize; t_max];
    loop {
        let mut lf1 = f64::NEG_INFINITY;
        let mut depth = 0;
        let mut switches = 0usize;
        let mut non_ref = 0;
        for t in 0..t_max {
            let (id, d, v, is_ref) = options[t][digits[t]];
            lf1 = lf1.max(v);
            depth = depth.max(d);
            if t > 0 && options[t - 1][digits[t - 1]].0 != id {
                switches += 1;
            }
            if !is_ref {
                non_ref += 1;
            }
        }
        if depth <= d_max && switches <= s_max {
            let key = PointKey {
                depth,
                switches: switches as u32,
                non_ref,
                lf1_tenths: lf1_tenths(lf1),
            };
            *counts.entry(key).or_default() += 1;
        }
        // Odometer step.
        let mut t = t_max;
        loop {
            if t == 0 {
                return Ok(rank(counts, k_max));
            }
            t -= 1;
            digits[t] += 1;
            if digits[t] < options[t].len() {
                break;
            }
            digits[t] = 0;
        }
    }
}

fn rank(counts: BTreeMap<PointKey, u128>, k_max: usize) -> Vec<Vec<OraclePoint>> {
    let points: Vec<ObjectiveVector> = counts.keys().map(PointKey::to_vector).collect();
    rank_fronts(&points, k_max)
        .into_iter()
        .map(|front| {
            let mut front: Vec<OraclePoint> = front
                .into_iter()
                .map(|p| OraclePoint {
                    point: p,
                    count: counts[&p.key()],
                })
                .collect();
            front.sort_by_key(|p| p.key());
            front
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub passed: bool,
    /// Counting mode whose counts agree with enumeration, if any.
    pub matched_mode: Option<CountingMode>,
    /// First disagreement, when the fronts differ or no mode's counts agree.
    pub discrepancy: Option<String>,
}

fn sorted_keys(front: &[PointKey]) -> Vec<PointKey> {
    let mut keys = front.to_vec();
    keys.sort();
    keys
}

/// First point-set difference between the exact fronts and the oracle.
fn compare_points(exact: &ExactResult, oracle: &[Vec<OraclePoint>]) -> Option<String> {
    let n = exact.fronts.len().max(oracle.len());
    for k in 0..n {
        let ours = sorted_keys(
            &exact
                .fronts
                .get(k)
                .map(|f| f.iter().map(|e| e.key()).collect::<Vec<_>>())
                .unwrap_or_default(),
        );
        let truth = sorted_keys(
            &oracle
                .get(k)
                .map(|f| f.iter().map(OraclePoint::key).collect::<Vec<_>>())
                .unwrap_or_default(),
        );
        if let Some(p) = ours.iter().find(|p| !truth.contains(p)) {
            return Some(format!(
                "front {}: exact point {p} not found by enumeration",
                k + 1
            ));
        }
        if let Some(p) = truth.iter().find(|p| !ours.contains(p)) {
            return Some(format!(
                "front {}: enumerated point {p} missing from exact output",
                k + 1
            ));
        }
    }
    None
}

/// First count difference, assuming the point sets agree.
fn compare_counts(exact: &ExactResult, oracle: &[Vec<OraclePoint>]) -> Option<String> {
    for (k, front) in exact.fronts.iter().enumerate() {
        for e in front {
            let key = e.key();
            let truth = oracle[k].iter().find(|p| p.key() == key).map(|p| p.count)?;
            if e.strategy_count != BigUint::from(truth) {
                return Some(format!(
                    "front {}: point {key} has {} strategies in {} mode, enumeration finds {truth}",
                    k + 1,
                    e.strategy_count,
                    exact.counting.name()
                ));
            }
        }
    }
    None
}

/// Compares a given exact result with enumeration: point sets per front, then counts under
/// the result's counting mode.
pub fn check_against(
    instance: &Instance,
    exact: &ExactResult,
    d_max: u32,
    s_max: usize,
    k_max: usize,
    limits: OracleLimits,
) -> Result<EquivalenceReport> {
    let oracle = brute_force_fronts(instance, d_max, s_max, k_max, limits)?;
    if let Some(msg) = compare_points(exact, &oracle) {
        return Ok(EquivalenceReport {
            passed: false,
            matched_mode: None,
            discrepancy: Some(msg),
        });
    }
    let counts = compare_counts(exact, &oracle);
    Ok(EquivalenceReport {
        passed: counts.is_none(),
        matched_mode: counts.is_none().then_some(exact.counting),
        discrepancy: counts,
    })
}

/// Runs the exact method in both counting modes and compares with enumeration. Passes when
/// the points agree and at least one mode's counts agree; strict is tried first.
pub fn check_equivalence(
    instance: &Instance,
    d_max: u32,
    s_max: usize,
    k_max: usize,
    limits: OracleLimits,
) -> Result<EquivalenceReport> {
    let product = strategy_space_size(instance);
    if product > limits.max_strategy_count {
        return Err(Error::OracleLimit {
            product,
            limit: limits.max_strategy_count,
        });
    }
    let oracle = brute_force_fronts(instance, d_max, s_max, k_max, limits)?;
    let mut first_failure = None;
    for strict in [true, false] {
        let exact = exact_fronts(instance, d_max, s_max, k_max, strict)?;
        if let Some(msg) = compare_points(&exact, &oracle) {
            return Ok(EquivalenceReport {
                passed: false,
                matched_mode: None,
                discrepancy: Some(msg),
            });
        }
        match compare_counts(&exact, &oracle) {
            None => {
                return Ok(EquivalenceReport {
                    passed: true,
                    matched_mode: Some(exact.counting),
                    discrepancy: None,
                })
            }
            Some(msg) => {
                first_failure.get_or_insert(msg);
            }
        }
    }
    Ok(EquivalenceReport {
        passed: false,
        matched_mode: None,
        discrepancy: first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_instance, GeneratorConfig, TopologyId, TopologyRecord};
    use std::collections::BTreeMap;

    fn small(seed: u64, t_max: usize) -> Instance {
        generate_instance(&GeneratorConfig {
            t_max,
            count_per_depth: BTreeMap::from([(1, 2), (2, 2), (3, 1)]),
            availability_drop_rate: 0.3,
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn single_step_two_topologies() {
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
        let rows = vec![(TopologyId(0), 0, 120.0), (TopologyId(1), 0, 90.0)];
        let inst = Instance::from_rows("one", 1, TopologyId(0), topologies, rows).unwrap();
        let fronts = brute_force_fronts(&inst, 1, 0, 3, OracleLimits::default()).unwrap();
        assert_eq!(fronts.len(), 1);
        assert_eq!(fronts[0].len(), 2);
    }

    #[test]
    fn identical_profiles_collapse() {
        let mut topologies = vec![TopologyRecord {
            id: TopologyId(0),
            depth: 0,
        }];
        let mut rows = Vec::new();
        for g in 1..=3 {
            topologies.push(TopologyRecord {
                id: TopologyId(g),
                depth: 1,
            });
        }
        for g in 0..=3 {
            for t in 0..2 {
                rows.push((TopologyId(g), t, 100.0));
            }
        }
        let inst = Instance::from_rows("flat", 2, TopologyId(0), topologies, rows).unwrap();
        // Without the depth objective pulling points apart only the reference plan is optimal;
        // the full space still has 16 strategies.
        let fronts = brute_force_fronts(&inst, 1, 1, 10, OracleLimits::default()).unwrap();
        let total: u128 = fronts.iter().flatten().map(|p| p.count).sum();
        assert_eq!(total, 16);
    }

    #[test]
    fn refuses_oversized_spaces() {
        let inst = small(1, 6);
        let err = brute_force_fronts(
            &inst,
            1,
            1,
            1,
            OracleLimits {
                max_strategy_count: 10,
            },
        );
        assert!(matches!(err, Err(Error::OracleLimit { .. })));
    }

    #[test]
    fn exact_matches_enumeration() {
        for seed in 0..30 {
            let inst = small(seed, 5);
            let report = check_equivalence(&inst, 2, 3, 3, OracleLimits::default()).unwrap();
            assert!(report.passed, "seed {seed}: {:?}", report.discrepancy);
            assert_eq!(report.matched_mode, Some(CountingMode::Strict));
        }
    }

    #[test]
    fn corrupted_output_is_named() {
        let inst = small(3, 4);
        let mut exact = exact_fronts(&inst, 2, 2, 2, true).unwrap();
        exact.fronts[0][0].non_ref += 7;
        let injected = exact.fronts[0][0].non_ref;
        let report = check_against(&inst, &exact, 2, 2, 2, OracleLimits::default()).unwrap();
        assert!(!report.passed);
        let msg = report.discrepancy.unwrap();
        assert!(msg.contains(&format!("non_ref={injected}")), "{msg}");
    }
}
