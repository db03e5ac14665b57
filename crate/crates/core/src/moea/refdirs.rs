//! Reference directions on the unit simplex.
//!
//! A Das-Dennis lattice (the largest one not exceeding `n` points), topped up with seeded
//! random simplex points, then spread by gradient descent on the Riesz s-energy
//! `sum 1 / |x_i - x_j|^s` with `s = 2 * dim`, projecting back onto the simplex after each step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 1000;
const TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceDirections {
    pub directions: Vec<Vec<f64>>,
}

impl ReferenceDirections {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.directions.first().map_or(0, Vec::len)
    }
}

fn lattice_size(h: usize, dim: usize) -> usize {
    // C(h + dim - 1, dim - 1)
    (0..dim - 1).fold(1usize, |acc, i| acc * (h + 1 + i) / (i + 1))
}

fn lattice(h: usize, dim: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slot: usize, h: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.iter().map(|&c| c as f64 / h as f64).collect());
            return;
        }
        for v in 0..=left {
            cur[slot] = v;
            rec(left - v, slot + 1, h, cur, out);
        }
    }
    let mut out = Vec::new();
    if h == 0 {
        out.push(vec![1.0 / dim as f64; dim]);
        return out;
    }
    rec(h, 0, h, &mut vec![0; dim], &mut out);
    out
}

/// Euclidean projection onto `{x >= 0, sum x = 1}`.
fn project_to_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i as f64 + 1.0);
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    // Remove rounding drift.
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
}

fn energy(points: &[Vec<f64>], s: f64) -> f64 {
    let mut e = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d2: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            e += d2.max(1e-300).powf(-s / 2.0);
        }
    }
    e
}

fn gradient(points: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut g = vec![vec![0.0; dim]; points.len()];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let diff: Vec<f64> = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a - b)
                .collect();
            let d2: f64 = diff.iter().map(|x| x * x).sum::<f64>().max(1e-300);
            let scale = -s * d2.powf(-s / 2.0 - 1.0);
            for k in 0..dim {
                g[i][k] += scale * diff[k];
                g[j][k] -= scale * diff[k];
            }
        }
    }
    g
}

/// `n` well-spread points on the `dim`-dimensional unit simplex.
pub fn generate_reference_directions(
    n: usize,
    dim: usize,
    seed: u64,
) -> Result<ReferenceDirections> {
    if dim == 0 || n < dim {
        return Err(Error::validation(format!(
            "need at least as many directions as dimensions, got n={n}, dim={dim}"
        )));
    }
    if dim == 1 {
        return Ok(ReferenceDirections {
            directions: vec![vec![1.0]; n],
        });
    }
    let mut h = 1;
    while lattice_size(h + 1, dim) <= n {
        h += 1;
    }
    let mut points = lattice(h, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < n {
        let raw: Vec<f64> = (0..dim)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        points.push(raw.into_iter().map(|x| x / sum).collect());
    }

    let s = 2.0 * dim as f64;
    let mut e = energy(&points, s);
    let mut step = 0.01;
    for _ in 0..MAX_ITERATIONS {
        let g = gradient(&points, s);
        let norm = g
            .iter()
            .flat_map(|row| row.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        let candidate: Vec<Vec<f64>> = points
            .iter()
            .zip(&g)
            .map(|(p, gi)| {
                let mut q: Vec<f64> = p.iter().zip(gi).map(|(x, d)| x - step * d / norm).collect();
                project_to_simplex(&mut q);
                q
            })
            .collect();
        let e_new = energy(&candidate, s);
        if e_new < e {
            let relative = (e - e_new) / e;
            points = candidate;
            e = e_new;
            step *= 1.2;
            if relative < TOLERANCE {
                break;
            }
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    Ok(ReferenceDirections { directions: points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_pairwise(points: &[Vec<f64>]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let d: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                m = m.min(d);
            }
        }
        m
    }

    #[test]
    fn hundred_directions_on_simplex() {
        let dirs = generate_reference_directions(100, 4, 7).unwrap();
        assert_eq!(dirs.len(), 100);
        for d in &dirs.directions {
            assert_eq!(d.len(), 4);
            assert!(d.iter().all(|&x| x >= 0.0));
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(min_pairwise(&dirs.directions) > 0.05);
    }

    #[test]
    fn four_directions_sit_at_vertices() {
        let dirs = generate_reference_directions(4, 4, 1).unwrap();
        for k in 0..4 {
            assert!(dirs.directions.iter().any(|d| d[k] > 0.99));
        }
    }

    #[test]
    fn spread_beats_random_points() {
        let dirs = generate_reference_directions(30, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let random: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let raw: Vec<f64> = (0..3).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            })
            .collect();
        assert!(min_pairwise(&dirs.directions) > min_pairwise(&random));
    }

    #[test]
    fn one_dimension_and_errors() {
        let dirs = generate_reference_directions(5, 1, 0).unwrap();
        assert!(dirs.directions.iter().all(|d| d == &vec![1.0]));
        assert!(generate_reference_directions(3, 4, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            generate_reference_directions(20, 4, 5).unwrap(),
            generate_reference_directions(20, 4, 5).unwrap()
        );
    }
}
