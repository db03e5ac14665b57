//! The four planning objectives, Pareto dominance and front peeling.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{Instance, TopologyId};
use crate::error::{Error, Result};

/// One topology per time step; `genes[t]` must be available at `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Strategy {
    pub genes: Vec<TopologyId>,
}

impl Strategy {
    pub fn new(genes: Vec<TopologyId>) -> Self {
        Strategy { genes }
    }

    /// The strategy that stays in the reference topology for the whole horizon.
    pub fn all_reference(instance: &Instance) -> Self {
        Strategy {
            genes: vec![instance.reference_id(); instance.t_max()],
        }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn is_feasible(&self, instance: &Instance) -> bool {
        self.genes.len() == instance.t_max()
            && self
                .genes
                .iter()
                .enumerate()
                .all(|(t, &g)| instance.is_available(g, t))
    }
}

impl fmt::Display for Strategy {
    /// Ids joined by `;` in time order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

/// Objective values of a strategy, all minimized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// Worst N-1 loading over the horizon, percent.
    pub lf1: f64,
    /// Maximum topological depth used.
    pub depth: u32,
    /// Number of topology changes.
    pub switches: u32,
    /// Number of steps not in the reference topology.
    pub non_ref: u32,
}

impl ObjectiveVector {
    pub fn new(lf1: f64, depth: u32, switches: u32, non_ref: u32) -> Self {
        ObjectiveVector {
            lf1,
            depth,
            switches,
            non_ref,
        }
    }

    /// Copy with `lf1` rounded to one decimal.
    pub fn rounded(&self) -> Self {
        ObjectiveVector {
            lf1: round_lf1(self.lf1),
            ..*self
        }
    }

    /// Hashable key on rounded `lf1`.
    pub fn key(&self) -> PointKey {
        PointKey {
            depth: self.depth,
            switches: self.switches,
            non_ref: self.non_ref,
            lf1_tenths: lf1_tenths(self.lf1),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [
            self.lf1,
            self.depth as f64,
            self.switches as f64,
            self.non_ref as f64,
        ]
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.lf1
            .total_cmp(&other.lf1)
            .then(self.depth.cmp(&other.depth))
            .then(self.switches.cmp(&other.switches))
            .then(self.non_ref.cmp(&other.non_ref))
    }
}

/// An objective point with `lf1` held as integer tenths of a percent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointKey {
    pub depth: u32,
    pub switches: u32,
    pub non_ref: u32,
    pub lf1_tenths: i64,
}

impl PointKey {
    pub fn lf1(&self) -> f64 {
        self.lf1_tenths as f64 / 10.0
    }

    pub fn to_vector(&self) -> ObjectiveVector {
        ObjectiveVector::new(self.lf1(), self.depth, self.switches, self.non_ref)
    }

    pub fn dominates(&self, other: &PointKey) -> bool {
        self.lf1_tenths <= other.lf1_tenths
            && self.depth <= other.depth
            && self.switches <= other.switches
            && self.non_ref <= other.non_ref
            && self != other
    }
}

impl fmt::Display for PointKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(lf1={:.1}, depth={}, switches={}, non_ref={})",
            self.lf1(),
            self.depth,
            self.switches,
            self.non_ref
        )
    }
}

/// Evaluates the four objectives of `strategy` on `instance`.
pub fn evaluate(instance: &Instance, strategy: &Strategy) -> Result<ObjectiveVector> {
    if strategy.len() != instance.t_max() {
        return Err(Error::validation(format!(
            "strategy has {} genes, instance has {} time steps",
            strategy.len(),
            instance.t_max()
        )));
    }
    let reference = instance.reference_id();
    let mut lf1 = f64::NEG_INFINITY;
    let mut depth = 0;
    let mut switches = 0;
    let mut non_ref = 0;
    for (t, &g) in strategy.genes.iter().enumerate() {
        let value = instance
            .lf1(g, t)
            .ok_or_else(|| Error::validation(format!("topology {g} is not available at t={t}")))?;
        lf1 = lf1.max(value);
        depth = depth.max(instance.depth(g).unwrap_or(0));
        if t > 0 && g != strategy.genes[t - 1] {
            switches += 1;
        }
        if g != reference {
            non_ref += 1;
        }
    }
    Ok(ObjectiveVector {
        lf1,
        depth,
        switches,
        non_ref,
    })
}

/// `a` is no worse than `b` in every objective and strictly better in one.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let weakly =
        a.lf1 <= b.lf1 && a.depth <= b.depth && a.switches <= b.switches && a.non_ref <= b.non_ref;
    weakly
        && (a.lf1 < b.lf1 || a.depth < b.depth || a.switches < b.switches || a.non_ref < b.non_ref)
}

fn unique_sorted(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);
    sorted
}

/// The unique points not dominated by any other input point.
pub fn pareto_front(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    // In lexicographic order a dominator always precedes the points it dominates, so each
    // point only needs checking against the front built so far.
    let mut front: Vec<ObjectiveVector> = Vec::new();
    for p in unique_sorted(points) {
        if !front.iter().any(|f| dominates(f, &p)) {
            front.push(p);
        }
    }
    front
}

/// Successive dominance fronts `F_1, F_2, ...`, at most `k_max` of them.
pub fn rank_fronts(points: &[ObjectiveVector], k_max: usize) -> Vec<Vec<ObjectiveVector>> {
    let mut remaining = unique_sorted(points);
    let mut fronts = Vec::new();
    while !remaining.is_empty() && fronts.len() < k_max {
        let mut front = Vec::new();
        let mut rest = Vec::new();
        for p in remaining {
            if front.iter().any(|f| dominates(f, &p)) {
                rest.push(p);
            } else {
                front.push(p);
            }
        }
        // Anything dominated by a point in `rest` is dominated by a front member too.
        fronts.push(front);
        remaining = rest;
    }
    fronts
}

/// Rounds to one decimal, ties away from zero. Infinities pass through.
pub fn round_lf1(x: f64) -> f64 {
    if x.is_infinite() {
        return x;
    }
    (x * 10.0).round() / 10.0
}

/// `round_lf1(x)` as integer tenths. `+inf` maps to `i64::MAX`.
pub fn lf1_tenths(x: f64) -> i64 {
    if x == f64::INFINITY {
        return i64::MAX;
    }
    (x * 10.0).round() as i64
}

#[cfg(test)]
mod tests {
    use super::{dominates, lf1_tenths, pareto_front, rank_fronts, round_lf1, ObjectiveVector};
    use proptest::prelude::*;

    fn v(lf1: f64, d: u32, w: u32, z: u32) -> ObjectiveVector {
        ObjectiveVector::new(lf1, d, w, z)
    }

    #[test]
    fn dominance_examples() {
        assert!(!dominates(&v(80.0, 1, 2, 3), &v(80.0, 1, 2, 3)));
        assert!(dominates(&v(80.0, 1, 2, 3), &v(80.0, 2, 2, 3)));
        assert!(!dominates(&v(80.0, 1, 2, 3), &v(79.0, 2, 2, 3)));
        assert!(!dominates(&v(79.0, 2, 2, 3), &v(80.0, 1, 2, 3)));
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_lf1(80.04), 80.0);
        assert_eq!(round_lf1(80.05), 80.1);
        assert_eq!(round_lf1(144.4), 144.4);
        assert_eq!(round_lf1(f64::INFINITY), f64::INFINITY);
        assert_eq!(lf1_tenths(80.05), 801);
        assert_eq!(lf1_tenths(100.04), 1000);
    }

    #[test]
    fn small_fronts() {
        assert_eq!(
            pareto_front(&[v(1.0, 0, 0, 0), v(2.0, 0, 0, 0)]),
            vec![v(1.0, 0, 0, 0)]
        );
        assert_eq!(pareto_front(&[v(5.0, 1, 1, 1)]), vec![v(5.0, 1, 1, 1)]);

        let chain = [v(3.0, 0, 0, 0), v(1.0, 0, 0, 0), v(2.0, 0, 0, 0)];
        let fronts = rank_fronts(&chain, 10);
        assert_eq!(fronts.len(), 3);
        assert!(fronts.iter().all(|f| f.len() == 1));
        assert_eq!(fronts[0][0].lf1, 1.0);

        let incomparable = [v(1.0, 3, 0, 0), v(2.0, 2, 0, 0), v(3.0, 1, 0, 0)];
        assert_eq!(rank_fronts(&incomparable, 10).len(), 1);
        assert_eq!(rank_fronts(&chain, 2).len(), 2);
    }

    fn arb_point() -> impl Strategy<Value = ObjectiveVector> {
        (0u32..40, 0u32..4, 0u32..4, 0u32..5)
            .prop_map(|(l, d, w, z)| v(70.0 + l as f64 * 0.5, d, w, z))
    }

    fn quadratic_front(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
        let mut out: Vec<ObjectiveVector> = Vec::new();
        for p in points {
            if points.iter().all(|q| !dominates(q, p)) && !out.contains(p) {
                out.push(*p);
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    proptest! {
        #[test]
        fn front_matches_quadratic_oracle(points in prop::collection::vec(arb_point(), 1..200)) {
            prop_assert_eq!(pareto_front(&points), quadratic_front(&points));
        }

        #[test]
        fn peeling_matches_quadratic_oracle(points in prop::collection::vec(arb_point(), 1..120)) {
            let fronts = rank_fronts(&points, usize::MAX);
            let mut rest = points.clone();
            for front in &fronts {
                let expected = quadratic_front(&rest);
                prop_assert_eq!(front, &expected);
                rest.retain(|p| !expected.contains(p));
            }
            prop_assert!(rest.is_empty());
            for j in 1..fronts.len() {
                for p in &fronts[j] {
                    prop_assert!(fronts[j - 1].iter().any(|q| dominates(q, p)));
                    prop_assert!(!fronts[j].iter().any(|q| dominates(q, p)));
                }
            }
        }

        #[test]
        fn front_ignores_duplication_and_order(points in prop::collection::vec(arb_point(), 1..60)) {
            let mut doubled = points.clone();
            doubled.extend(points.iter().rev().copied());
            prop_assert_eq!(pareto_front(&doubled), pareto_front(&points));
        }

        #[test]
        fn dominance_is_a_strict_partial_order(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert!(!dominates(&a, &a));
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }
    }
}
