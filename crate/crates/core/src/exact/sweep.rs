//! Exact objective points by sweeping the rounded loading threshold.
//!
//! For a threshold `r` (tenths) and a depth cap `δ`, a dynamic program over time counts, for
//! every block count and non-reference step count, the strategies whose blocks all round to
//! at most `r` and whose topologies have depth at most `δ`. A strategy is decomposed into its
//! coarsest blocks: reference blocks are never neighbours, and neighbouring non-reference
//! blocks differ, which the program handles by inclusion-exclusion over merged groups.
//! Differencing over `δ` and over consecutive thresholds yields exact counts per point.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::blocks::{Block, BlockTable};
use crate::objectives::{lf1_tenths, PointKey};

use super::counting::{binomial_table, Count};

pub(crate) struct SweepPoint {
    pub key: PointKey,
    pub count: BigInt,
}

struct Shape {
    t_max: usize,
    b_max: usize,
}

impl Shape {
    /// Layout of one `G[b][z]` table.
    fn gz(&self) -> usize {
        (self.b_max + 1) * (self.t_max + 1)
    }
}

/// Distinct rounded single-step loadings of every topology the bounds can use. Every
/// strategy's rounded loading is one of them.
fn candidate_values(table: &BlockTable, d_max: u32) -> Vec<i64> {
    let t_max = table.t_max();
    let mut set = BTreeSet::new();
    for t in 0..t_max {
        let b = table.index(Block::new(t, t));
        let r = table.ref_max(b);
        if r.is_finite() {
            set.insert(lf1_tenths(r));
        }
        for d in 1..=d_max {
            for &v in table.at_depth(b, d).0 {
                set.insert(lf1_tenths(v));
            }
        }
    }
    set.into_iter().collect()
}

/// Counts strategies by (blocks, non-reference steps) for one threshold and depth cap.
/// `n[block]` is the admissible count, `ref_ok[block]` whether the reference fits.
fn count_table<C: Count>(
    shape: &Shape,
    binom: &[Vec<i64>],
    n: &[u64],
    ref_ok: &[bool],
    f: &mut Vec<C>,
) -> Option<Vec<C>> {
    let (t_max, b_max) = (shape.t_max, shape.b_max);
    let zs = t_max + 1;
    let per_t = (b_max + 1) * zs * 2;
    f.clear();
    f.resize((t_max + 1) * per_t, C::zero());
    let at = |t: usize, b: usize, z: usize, last: usize| t * per_t + (b * zs + z) * 2 + last;
    // last = 0: start or after a non-reference block; last = 1: after a reference block.
    f[at(0, 0, 0, 0)] = C::one();
    for t in 0..t_max {
        for b in 0..b_max {
            for z in 0..=t {
                for last in 0..2 {
                    let v = f[at(t, b, z, last)].clone();
                    if v.is_zero() {
                        continue;
                    }
                    for t2 in t + 1..=t_max {
                        let blk = Block::new(t, t2 - 1).index(t_max);
                        let len = t2 - t;
                        if last == 0 && ref_ok[blk] {
                            let p = at(t2, b + 1, z, 1);
                            if !f[p].add_mul(&v, 1) {
                                return None;
                            }
                        }
                        let count = n[blk];
                        if count == 0 {
                            continue;
                        }
                        let count = i64::try_from(count).ok()?;
                        for k in 1..=len.min(b_max - b) {
                            let sign = if k % 2 == 1 { 1 } else { -1 };
                            let w = binom[len - 1][k - 1]
                                .checked_mul(count)?
                                .checked_mul(sign)?;
                            let p = at(t2, b + k, z + len, 0);
                            if !f[p].add_mul(&v, w) {
                                return None;
                            }
                        }
                    }
                }
            }
        }
    }
    let mut out = vec![C::zero(); shape.gz()];
    for b in 1..=b_max {
        for z in 0..=t_max {
            let mut s = f[at(t_max, b, z, 0)].clone();
            if !s.add_mul(&f[at(t_max, b, z, 1)], 1) {
                return None;
            }
            out[b * zs + z] = s;
        }
    }
    Some(out)
}

struct Sweep<'a> {
    table: &'a BlockTable,
    shape: Shape,
    d_max: u32,
    binom: Vec<Vec<i64>>,
}

impl Sweep<'_> {
    /// Cumulative tables `G_δ(r)` for each `δ` in `depths`, others left empty.
    fn tables<C: Count>(
        &self,
        r: i64,
        needed: &[bool],
        scratch: &mut Vec<C>,
    ) -> Option<Vec<Vec<C>>> {
        let blocks = crate::blocks::block_count(self.shape.t_max);
        let ref_ok: Vec<bool> = (0..blocks)
            .map(|b| lf1_tenths(self.table.ref_max(b)) <= r)
            .collect();
        let mut n = vec![0u64; blocks];
        let mut out = Vec::with_capacity(self.d_max as usize + 1);
        for delta in 0..=self.d_max {
            if delta > 0 {
                for (b, slot) in n.iter_mut().enumerate() {
                    *slot += self.table.count_rounded_at(b, delta, r);
                }
            }
            if needed[delta as usize] {
                out.push(count_table(&self.shape, &self.binom, &n, &ref_ok, scratch)?);
            } else {
                out.push(Vec::new());
            }
        }
        Some(out)
    }

    /// `H_D = G_D - G_{D-1}` per exact depth.
    fn exact_depth<C: Count>(&self, g: &[Vec<C>], d: usize) -> Option<Vec<C>> {
        if d == 0 {
            return Some(g[0].clone());
        }
        g[d].iter()
            .zip(&g[d - 1])
            .map(|(a, b)| a.try_sub(b))
            .collect()
    }

    fn run<C: Count>(&self, k_max: usize) -> Option<Vec<SweepPoint>> {
        let candidates = candidate_values(self.table, self.d_max);
        let Some(&top) = candidates.last() else {
            return Some(Vec::new());
        };
        let depths = self.d_max as usize + 1;
        let gz = self.shape.gz();
        let zs = self.shape.t_max + 1;
        let mut scratch = Vec::new();

        let all = vec![true; depths];
        let g_top = self.tables::<C>(top, &all, &mut scratch)?;
        let h_top: Vec<Vec<C>> = (0..depths)
            .map(|d| self.exact_depth(&g_top, d))
            .collect::<Option<_>>()?;

        // Per (depth, blocks, z): values found so far and whether the class is still open.
        let mut found: Vec<usize> = vec![0; depths * gz];
        let mut open: Vec<bool> = (0..depths * gz)
            .map(|i| h_top[i / gz][i % gz].is_positive())
            .collect();
        let mut prev: Vec<Vec<C>> = vec![vec![C::zero(); gz]; depths];
        let mut points = Vec::new();

        for &r in &candidates {
            let open_depth: Vec<bool> = (0..depths)
                .map(|d| open[d * gz..(d + 1) * gz].iter().any(|&o| o))
                .collect();
            if !open_depth.iter().any(|&o| o) {
                break;
            }
            let needed: Vec<bool> = (0..depths)
                .map(|d| open_depth[d] || (d + 1 < depths && open_depth[d + 1]))
                .collect();
            let g = self.tables::<C>(r, &needed, &mut scratch)?;
            for d in 0..depths {
                if !open_depth[d] {
                    continue;
                }
                let h = self.exact_depth(&g, d)?;
                for i in 0..gz {
                    let cell = d * gz + i;
                    if !open[cell] {
                        continue;
                    }
                    let count = h[i].try_sub(&prev[d][i])?;
                    if count.is_positive() {
                        let (b, z) = (i / zs, i % zs);
                        points.push(SweepPoint {
                            key: PointKey {
                                depth: d as u32,
                                switches: (b - 1) as u32,
                                non_ref: z as u32,
                                lf1_tenths: r,
                            },
                            count: count.to_big(),
                        });
                        found[cell] += 1;
                    }
                    let exhausted = h[i].try_sub(&h_top[d][i])?.is_zero();
                    if found[cell] >= k_max || exhausted {
                        open[cell] = false;
                    }
                }
                prev[d] = h;
            }
        }
        Some(points)
    }
}

/// The first `k_max` rounded loadings of every `(depth, switches, non_ref)` class, with exact
/// strategy counts.
pub(crate) fn sweep_points(
    table: &BlockTable,
    d_max: u32,
    s_max: usize,
    k_max: usize,
) -> Vec<SweepPoint> {
    let t_max = table.t_max();
    let sweep = Sweep {
        table,
        shape: Shape {
            t_max,
            b_max: s_max + 1,
        },
        d_max,
        binom: binomial_table(t_max),
    };
    match sweep.run::<i128>(k_max) {
        Some(points) => points,
        None => sweep.run::<BigInt>(k_max).expect("BigInt never overflows"),
    }
}
