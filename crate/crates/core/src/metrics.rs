//! Quality indicators: min-max normalization, IGD+ and front coverage.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{BlockRun, ExactResult};
use crate::objectives::{ObjectiveVector, PointKey};

/// Per-objective lower and upper bounds used for normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub ideal: ObjectiveVector,
    pub maximum: ObjectiveVector,
}

impl NormalizationBounds {
    pub fn new(ideal: ObjectiveVector, maximum: ObjectiveVector) -> Result<Self> {
        let lo = ideal.as_array();
        let hi = maximum.as_array();
        if lo.iter().chain(&hi).any(|x| !x.is_finite()) {
            return Err(Error::validation("normalization bounds must be finite"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::validation(format!(
                "ideal {lo:?} exceeds maximum {hi:?}"
            )));
        }
        Ok(NormalizationBounds { ideal, maximum })
    }

    /// Bounds of the reference study: loading 77.3..212.5, depth 0..3, switches 0..5,
    /// non-reference steps 0..24.
    pub fn benchmark() -> Self {
        NormalizationBounds {
            ideal: ObjectiveVector::new(77.3, 0, 0, 0),
            maximum: ObjectiveVector::new(212.5, 3, 5, 24),
        }
    }

    /// Loading bounds from the smallest and largest finite record value; discrete bounds
    /// from `(d_max, s_max, t_max)`.
    pub fn from_records(run: &BlockRun) -> Result<Self> {
        Self::from_parts(run.lf1_range(), run.d_max, run.s_max, run.t_max)
    }

    /// As [`NormalizationBounds::from_records`], given the record loading range directly.
    pub fn from_parts(
        lf1_range: Option<(f64, f64)>,
        d_max: u32,
        s_max: usize,
        t_max: usize,
    ) -> Result<Self> {
        let (lo, hi) = lf1_range
            .ok_or_else(|| Error::Infeasible("no finite loading among the records".into()))?;
        Self::new(
            ObjectiveVector::new(lo, 0, 0, 0),
            ObjectiveVector::new(hi, d_max, s_max as u32, t_max as u32),
        )
    }
}

/// Maps `v` into `[0, 1]^4`, clamping values outside the bounds.
pub fn normalize(v: &ObjectiveVector, bounds: &NormalizationBounds) -> Result<[f64; 4]> {
    let x = v.as_array();
    let lo = bounds.ideal.as_array();
    let hi = bounds.maximum.as_array();
    let mut out = [0.0; 4];
    for k in 0..4 {
        let width = hi[k] - lo[k];
        if width <= 0.0 {
            return Err(Error::validation(format!(
                "zero-width normalization bound for objective {k}"
            )));
        }
        out[k] = ((x[k] - lo[k]) / width).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// IGD+ of `approx` against `reference` on normalized objectives. An empty approximation
/// scores `+inf`.
pub fn igd_plus(
    approx: &[ObjectiveVector],
    reference: &[ObjectiveVector],
    bounds: &NormalizationBounds,
) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::validation("IGD+ needs a non-empty reference set"));
    }
    let a: Vec<[f64; 4]> = approx
        .iter()
        .map(|v| normalize(v, bounds))
        .collect::<Result<_>>()?;
    let z: Vec<[f64; 4]> = reference
        .iter()
        .map(|v| normalize(v, bounds))
        .collect::<Result<_>>()?;
    if a.is_empty() {
        return Ok(f64::INFINITY);
    }
    let total: f64 = z
        .iter()
        .map(|r| {
            a.iter()
                .map(|p| {
                    (0..4)
                        .map(|k| (p[k] - r[k]).max(0.0).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / z.len() as f64)
}

/// Exact dominance fronts `F_1..F_K` as rounded points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReferenceFronts {
    fronts: Vec<Vec<ObjectiveVector>>,
}

impl ReferenceFronts {
    /// Rounds every point; fails if two fronts share a point.
    pub fn new(fronts: Vec<Vec<ObjectiveVector>>) -> Result<Self> {
        let fronts: Vec<Vec<ObjectiveVector>> = fronts
            .into_iter()
            .map(|f| f.iter().map(ObjectiveVector::rounded).collect())
            .collect();
        let mut seen = BTreeSet::new();
        for (k, front) in fronts.iter().enumerate() {
            let keys: BTreeSet<PointKey> = front.iter().map(ObjectiveVector::key).collect();
            if let Some(dup) = keys.iter().find(|key| seen.contains(*key)) {
                return Err(Error::validation(format!(
                    "point {dup} appears in front {} and an earlier front",
                    k + 1
                )));
            }
            seen.extend(keys);
        }
        Ok(ReferenceFronts { fronts })
    }

    pub fn from_exact(result: &ExactResult) -> Result<Self> {
        Self::new(
            result
                .fronts
                .iter()
                .map(|f| f.iter().map(|e| e.key().to_vector()).collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.fronts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fronts.is_empty()
    }

    /// Front `k`, counted from 1.
    pub fn front(&self, k: usize) -> Option<&[ObjectiveVector]> {
        k.checked_sub(1)
            .and_then(|i| self.fronts.get(i))
            .map(Vec::as_slice)
    }

    pub fn fronts(&self) -> &[Vec<ObjectiveVector>] {
        &self.fronts
    }
}

/// `(I_k, Î_k)`: how many unique approximation points, after rounding the loading, lie on
/// front `k`, and that count as a fraction of `|F_k|`.
pub fn front_coverage(
    approx: &[ObjectiveVector],
    reference: &ReferenceFronts,
    k: usize,
) -> Result<(usize, f64)> {
    let front = reference.front(k).ok_or_else(|| {
        Error::validation(format!(
            "front {k} requested but the reference has {} fronts",
            reference.len()
        ))
    })?;
    if front.is_empty() {
        return Err(Error::validation(format!("reference front {k} is empty")));
    }
    let target: BTreeSet<PointKey> = front.iter().map(ObjectiveVector::key).collect();
    let hits = approx
        .iter()
        .map(ObjectiveVector::key)
        .collect::<BTreeSet<_>>()
        .intersection(&target)
        .count();
    Ok((hits, hits as f64 / target.len() as f64))
}

/// Indicator values for one generation.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub generation: usize,
    pub igd_plus: f64,
    /// `I_1..I_K`.
    pub counts: Vec<usize>,
    /// `Î_1..Î_K`.
    pub ratios: Vec<f64>,
}

/// One row per generation of `trace`: IGD+ against `F_1` plus coverage of every front, both
/// on loadings rounded to one decimal.
pub fn metrics_table(
    trace: &[Vec<ObjectiveVector>],
    reference: &ReferenceFronts,
    bounds: &NormalizationBounds,
) -> Result<Vec<MetricsRow>> {
    let first = reference
        .front(1)
        .ok_or_else(|| Error::validation("the reference has no fronts"))?;
    trace
        .iter()
        .enumerate()
        .map(|(generation, approx)| {
            let mut counts = Vec::with_capacity(reference.len());
            let mut ratios = Vec::with_capacity(reference.len());
            for k in 1..=reference.len() {
                let (c, r) = front_coverage(approx, reference, k)?;
                counts.push(c);
                ratios.push(r);
            }
            let rounded: Vec<ObjectiveVector> =
                approx.iter().map(ObjectiveVector::rounded).collect();
            Ok(MetricsRow {
                generation,
                igd_plus: igd_plus(&rounded, first, bounds)?,
                counts,
                ratios,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_instance, GeneratorConfig};
    use crate::exact::{exact_fronts, run_block_algorithm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_bounds() -> NormalizationBounds {
        NormalizationBounds::new(
            ObjectiveVector::new(0.0, 0, 0, 0),
            ObjectiveVector::new(1.0, 10, 10, 10),
        )
        .unwrap()
    }

    #[test]
    fn benchmark_bounds_map_to_unit_corners() {
        let b = NormalizationBounds::benchmark();
        assert_eq!(normalize(&b.ideal, &b).unwrap(), [0.0; 4]);
        assert_eq!(normalize(&b.maximum, &b).unwrap(), [1.0; 4]);
        let v = normalize(&ObjectiveVector::new(212.5, 3, 5, 24), &b).unwrap();
        assert_eq!(&v[1..], &[1.0, 1.0, 1.0]);
        let clamped = normalize(&ObjectiveVector::new(300.0, 9, 0, 0), &b).unwrap();
        assert_eq!(clamped, [1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn degenerate_bounds() {
        let flat = NormalizationBounds::new(
            ObjectiveVector::new(1.0, 0, 0, 0),
            ObjectiveVector::new(1.0, 3, 5, 24),
        )
        .unwrap();
        assert!(normalize(&flat.ideal, &flat).is_err());
        assert!(NormalizationBounds::new(
            ObjectiveVector::new(2.0, 0, 0, 0),
            ObjectiveVector::new(1.0, 3, 5, 24)
        )
        .is_err());
    }

    #[test]
    fn three_four_five() {
        let r = [ObjectiveVector::new(0.0, 0, 0, 0)];
        let a = [ObjectiveVector::new(0.3, 4, 0, 0)];
        let b = NormalizationBounds::new(
            ObjectiveVector::new(0.0, 0, 0, 0),
            ObjectiveVector::new(1.0, 10, 1, 1),
        )
        .unwrap();
        assert!((igd_plus(&a, &r, &b).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(igd_plus(&r, &r, &b).unwrap(), 0.0);
        assert_eq!(igd_plus(&[], &r, &b).unwrap(), f64::INFINITY);
        assert!(igd_plus(&a, &[], &b).is_err());
    }

    #[test]
    fn points_better_than_reference_cost_nothing() {
        let r = [ObjectiveVector::new(0.5, 5, 5, 5)];
        let a = [ObjectiveVector::new(0.2, 1, 5, 5)];
        assert_eq!(igd_plus(&a, &r, &unit_bounds()).unwrap(), 0.0);
    }

    #[test]
    fn growing_approximation_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = unit_bounds();
        let point = |rng: &mut ChaCha8Rng| {
            ObjectiveVector::new(
                rng.random::<f64>(),
                rng.random_range(0..=10),
                rng.random_range(0..=10),
                rng.random_range(0..=10),
            )
        };
        for _ in 0..200 {
            let reference: Vec<_> = (0..rng.random_range(1..8))
                .map(|_| point(&mut rng))
                .collect();
            let mut approx: Vec<_> = (0..rng.random_range(1..8))
                .map(|_| point(&mut rng))
                .collect();
            let before = igd_plus(&approx, &reference, &b).unwrap();
            approx.push(point(&mut rng));
            assert!(igd_plus(&approx, &reference, &b).unwrap() <= before);
        }
    }

    #[test]
    fn coverage_on_exact_fronts() {
        let inst = generate_instance(&GeneratorConfig {
            t_max: 6,
            seed: 2,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let exact = exact_fronts(&inst, 2, 3, 3, true).unwrap();
        let fronts = ReferenceFronts::from_exact(&exact).unwrap();
        let f1 = fronts.front(1).unwrap().to_vec();
        assert_eq!(front_coverage(&f1, &fronts, 1).unwrap(), (f1.len(), 1.0));
        if fronts.len() > 1 {
            assert_eq!(front_coverage(&f1, &fronts, 2).unwrap().0, 0);
        }
        assert!(front_coverage(&f1, &fronts, 0).is_err());
        assert!(front_coverage(&f1, &fronts, fronts.len() + 1).is_err());

        let run = run_block_algorithm(&inst, 2, 3).unwrap();
        let bounds = NormalizationBounds::from_records(&run).unwrap();
        let rows = metrics_table(&[f1.clone(), Vec::new()], &fronts, &bounds).unwrap();
        assert_eq!(rows[0].igd_plus, 0.0);
        assert_eq!(rows[0].ratios[0], 1.0);
        assert_eq!(rows[1].igd_plus, f64::INFINITY);
        assert!(rows[1].counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn coverage_rounds_loading() {
        let fronts =
            ReferenceFronts::new(vec![vec![ObjectiveVector::new(100.04, 1, 1, 1)]]).unwrap();
        let approx = [
            ObjectiveVector::new(99.96, 1, 1, 1),
            ObjectiveVector::new(100.0, 1, 1, 1),
        ];
        assert_eq!(front_coverage(&approx, &fronts, 1).unwrap(), (1, 1.0));
        assert!(ReferenceFronts::new(vec![
            vec![ObjectiveVector::new(1.0, 0, 0, 0)],
            vec![ObjectiveVector::new(1.01, 0, 0, 0)],
        ])
        .is_err());
    }
}
