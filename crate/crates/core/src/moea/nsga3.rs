//! NSGA-III environmental selection.

use nalgebra::{Matrix4, Vector4};
use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};

use super::refdirs::ReferenceDirections;

/// Objectives and bound violation of one candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fitness {
    pub objectives: [f64; 4],
    /// Total amount by which the candidate exceeds the bounds; 0 when within them.
    pub violation: f64,
}

impl Fitness {
    /// Constraint-domination: in-bounds beats out-of-bounds, smaller violation beats larger,
    /// and among in-bounds candidates ordinary Pareto dominance applies.
    pub fn dominates(&self, other: &Fitness) -> bool {
        match (self.violation > 0.0, other.violation > 0.0) {
            (false, true) => true,
            (true, false) => false,
            (true, true) => self.violation < other.violation,
            (false, false) => {
                let a = &self.objectives;
                let b = &other.objectives;
                a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
            }
        }
    }
}

/// Rank of each candidate (0 = first front) under constraint-domination.
pub fn nondominated_ranks(pop: &[Fitness]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    // Any dominator sorts before what it dominates.
    order.sort_by(|&i, &j| {
        let (a, b) = (&pop[i], &pop[j]);
        a.violation.total_cmp(&b.violation).then_with(|| {
            a.objectives
                .iter()
                .zip(&b.objectives)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut rank = vec![0usize; pop.len()];
    let mut fronts: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        // Smallest r such that no member of front r dominates i.
        let mut r = fronts.len();
        while r > 0 && !fronts[r - 1].iter().any(|&j| pop[j].dominates(&pop[i])) {
            r -= 1;
        }
        if r == fronts.len() {
            fronts.push(Vec::new());
        }
        fronts[r].push(i);
        rank[i] = r;
    }
    rank
}

/// Candidate indices grouped by front.
pub fn nondominated_fronts(pop: &[Fitness]) -> Vec<Vec<usize>> {
    let ranks = nondominated_ranks(pop);
    let n = ranks.iter().map(|r| r + 1).max().unwrap_or(0);
    let mut fronts = vec![Vec::new(); n];
    for (i, r) in ranks.into_iter().enumerate() {
        fronts[r].push(i);
    }
    fronts
}

fn intercepts(points: &[[f64; 4]], ideal: &[f64; 4]) -> [f64; 4] {
    let translated: Vec<[f64; 4]> = points
        .iter()
        .map(|p| std::array::from_fn(|k| p[k] - ideal[k]))
        .collect();
    let mut worst = [0.0f64; 4];
    for p in &translated {
        for k in 0..4 {
            worst[k] = worst[k].max(p[k]);
        }
    }
    let fallback: [f64; 4] = std::array::from_fn(|k| if worst[k] > 1e-10 { worst[k] } else { 1.0 });

    let mut extremes = Matrix4::<f64>::zeros();
    for axis in 0..4 {
        let asf = |p: &[f64; 4]| {
            (0..4)
                .map(|k| p[k] / if k == axis { 1.0 } else { 1e-6 })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let best = translated
            .iter()
            .min_by(|a, b| asf(a).total_cmp(&asf(b)))
            .expect("non-empty");
        for k in 0..4 {
            extremes[(axis, k)] = best[k];
        }
    }
    let solved = extremes.lu().solve(&Vector4::repeat(1.0));
    match solved {
        Some(a) if a.iter().all(|&x| x > 1e-10 && x.is_finite()) => {
            let out: [f64; 4] = std::array::from_fn(|k| 1.0 / a[k]);
            if out
                .iter()
                .zip(&fallback)
                .all(|(i, w)| *i > 1e-10 && *i <= 1e10 * w.max(1.0))
            {
                out
            } else {
                fallback
            }
        }
        _ => fallback,
    }
}

/// Nearest direction and perpendicular distance.
fn associate(p: &[f64; 4], dirs: &ReferenceDirections) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, w) in dirs.directions.iter().enumerate() {
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let pw: f64 = (0..4).map(|k| p[k] * w[k]).sum();
        let t = pw / ww;
        let d2: f64 = (0..4).map(|k| (p[k] - t * w[k]).powi(2)).sum();
        let d = d2.sqrt();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Chooses `target` candidate indices: whole fronts while they fit, then reference-direction
/// niching on the front that does not.
pub fn nsga3_select<R: Rng + ?Sized>(
    pop: &[Fitness],
    target: usize,
    dirs: &ReferenceDirections,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if target == 0 {
        return Err(Error::validation("selection target must be positive"));
    }
    if pop.len() < target {
        return Err(Error::validation(format!(
            "cannot select {target} of {} candidates",
            pop.len()
        )));
    }
    if dirs.dim() != 4 {
        return Err(Error::validation(
            "reference directions must be four-dimensional",
        ));
    }
    let fronts = nondominated_fronts(pop);
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    let mut last = Vec::new();
    for front in fronts {
        if chosen.len() + front.len() <= target {
            chosen.extend(front);
            if chosen.len() == target {
                return Ok(chosen);
            }
        } else {
            last = front;
            break;
        }
    }

    let considered: Vec<usize> = chosen.iter().chain(&last).copied().collect();
    let objs: Vec<[f64; 4]> = considered.iter().map(|&i| pop[i].objectives).collect();
    let mut ideal = [f64::INFINITY; 4];
    for p in &objs {
        for k in 0..4 {
            ideal[k] = ideal[k].min(p[k]);
        }
    }
    let scale = intercepts(&objs, &ideal);
    let normalized = |i: usize| -> [f64; 4] {
        std::array::from_fn(|k| (pop[i].objectives[k] - ideal[k]) / scale[k])
    };

    let mut niche = vec![0usize; dirs.len()];
    for &i in &chosen {
        niche[associate(&normalized(i), dirs).0] += 1;
    }
    let mut pool: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dirs.len()];
    for &i in &last {
        let (j, d) = associate(&normalized(i), dirs);
        pool[j].push((i, d));
    }
    let mut open: Vec<bool> = pool.iter().map(|p| !p.is_empty()).collect();
    while chosen.len() < target {
        let min = (0..dirs.len())
            .filter(|&j| open[j])
            .map(|j| niche[j])
            .min()
            .expect("the splitting front still has members");
        let ties: Vec<usize> = (0..dirs.len())
            .filter(|&j| open[j] && niche[j] == min)
            .collect();
        let j = *ties.choose(rng).expect("non-empty");
        let pick = if niche[j] == 0 {
            pool[j]
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(pos, _)| pos)
                .expect("open direction has members")
        } else {
            rng.random_range(0..pool[j].len())
        };
        let (i, _) = pool[j].swap_remove(pick);
        chosen.push(i);
        niche[j] += 1;
        if pool[j].is_empty() {
            open[j] = false;
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moea::refdirs::generate_reference_directions;
    use crate::objectives::{rank_fronts, ObjectiveVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fit(o: [f64; 4]) -> Fitness {
        Fitness {
            objectives: o,
            violation: 0.0,
        }
    }

    fn random_pop(rng: &mut ChaCha8Rng, n: usize) -> Vec<Fitness> {
        (0..n)
            .map(|_| {
                fit([
                    rng.random_range(80.0..140.0),
                    rng.random_range(0..4) as f64,
                    rng.random_range(0..6) as f64,
                    rng.random_range(0..25) as f64,
                ])
            })
            .collect()
    }

    #[test]
    fn ranks_match_peeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let pop = random_pop(&mut rng, 60);
            let ranks = nondominated_ranks(&pop);
            let vectors: Vec<ObjectiveVector> = pop
                .iter()
                .map(|f| {
                    let o = f.objectives;
                    ObjectiveVector::new(o[0], o[1] as u32, o[2] as u32, o[3] as u32)
                })
                .collect();
            let peeled = rank_fronts(&vectors, usize::MAX);
            for (i, v) in vectors.iter().enumerate() {
                let expected = peeled.iter().position(|f| f.contains(v)).unwrap();
                assert_eq!(ranks[i], expected);
            }
        }
    }

    #[test]
    fn in_bounds_candidates_come_first() {
        let mut pop = vec![fit([100.0, 1.0, 1.0, 1.0]), fit([90.0, 0.0, 0.0, 0.0])];
        pop[1].violation = 1.0;
        pop.push(Fitness {
            objectives: [80.0, 0.0, 0.0, 0.0],
            violation: 2.0,
        });
        assert_eq!(nondominated_ranks(&pop), vec![0, 1, 2]);
    }

    #[test]
    fn identity_when_everything_fits() {
        let dirs = generate_reference_directions(20, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pop = vec![
            fit([1.0, 2.0, 0.0, 0.0]),
            fit([2.0, 1.0, 0.0, 0.0]),
            fit([3.0, 0.0, 0.0, 0.0]),
        ];
        let mut sel = nsga3_select(&pop, 3, &dirs, &mut rng).unwrap();
        sel.sort();
        assert_eq!(sel, vec![0, 1, 2]);
        assert!(nsga3_select(&pop, 0, &dirs, &mut rng).is_err());
    }

    #[test]
    fn dominating_member_always_selected() {
        let dirs = generate_reference_directions(20, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut pop = random_pop(&mut rng, 40);
            pop.push(fit([10.0, 0.0, 0.0, 0.0]));
            let sel = nsga3_select(&pop, 1, &dirs, &mut rng).unwrap();
            assert_eq!(sel, vec![40]);
        }
    }

    #[test]
    fn first_front_kept_when_it_fits() {
        let dirs = generate_reference_directions(30, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let pop = random_pop(&mut rng, 80);
            let fronts = nondominated_fronts(&pop);
            let target = (fronts[0].len() + 5).min(pop.len());
            let sel = nsga3_select(&pop, target, &dirs, &mut rng).unwrap();
            assert_eq!(sel.len(), target);
            for i in &fronts[0] {
                assert!(sel.contains(i));
            }
            let mut unique = sel.clone();
            unique.sort();
            unique.dedup();
            assert_eq!(unique.len(), sel.len());
        }
    }

    #[test]
    fn degenerate_hyperplane_falls_back() {
        let pts = [[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]];
        let a = intercepts(&pts, &[0.0; 4]);
        assert!(a.iter().all(|x| x.is_finite() && *x > 0.0));
    }
}
