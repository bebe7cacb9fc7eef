//! The discrete stand-in for the deformed length metric: shortest paths on
//! the lattice of grid corners, with edge weights M^-m times the mean of
//! the stopped weights on the adjacent cells (single cell on the boundary).
//!
//! Corner-graph geodesics approximate the continuum length metric within a
//! small multiplicative factor, which is enough for the ratio audits run on
//! top of them. Edge weights are scaled to a common denominator and carried
//! as integers, so distances are exact: symmetry and the triangle
//! inequality hold with equality semantics, not up to rounding.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{digit_is_ring, GridParams, MultiIndex};
use crate::weight::{RhoVariant, WeightHierarchy};

/// Weighted lattice of the (M^m + 1)^2 corners of the level-m cells.
/// Edge weights are integers in units of 1/denom.
#[derive(Debug, Clone)]
pub struct GridMetric {
    level: u32,
    side: usize,
    /// hw[r * side + c]: units of the edge (c,r)-(c+1,r), r in 0..=side.
    hw: Vec<u64>,
    /// vw[c * side + r]: units of the edge (c,r)-(c,r+1), c in 0..=side.
    vw: Vec<u64>,
    denom: f64,
}

/// Ring2/Center exponent pair of the stopped weight of every level-m cell,
/// row-major (x fast), by depth-first descent over the square tree.
fn cell_exponents(params: &GridParams, level: u32) -> Vec<(u8, u8)> {
    let m = params.m() as usize;
    let side = m.pow(level);
    let mut out = vec![(0u8, 0u8); side * side];

    struct Frame {
        x0: usize,
        y0: usize,
        depth: u32,
        j_sum: u32,
        stopped: bool,
        a: u8,
        b: u8,
    }
    let mut stack = vec![Frame {
        x0: 0,
        y0: 0,
        depth: 0,
        j_sum: 0,
        stopped: false,
        a: 0,
        b: 0,
    }];
    let outer = |d: u32| d == 0 || d == params.m() - 1;
    while let Some(f) = stack.pop() {
        if f.depth == level {
            out[f.y0 * side + f.x0] = (f.a, f.b);
            continue;
        }
        let sub = m.pow(level - f.depth - 1);
        for di in 0..m as u32 {
            for dj in 0..m as u32 {
                let (mut j_sum, mut stopped, mut a, mut b) = (f.j_sum, f.stopped, f.a, f.b);
                if !stopped {
                    let ring = digit_is_ring(di, params.m()) || digit_is_ring(dj, params.m());
                    if ring {
                        j_sum += 1;
                    }
                    if 3 * j_sum > f.depth + 1 {
                        // weight freezes at the previous level
                        stopped = true;
                    } else if ring {
                        if !(outer(di) || outer(dj)) {
                            a += 1; // inner ring: factor M-3
                        }
                    } else {
                        b += 1; // center: factor r
                    }
                }
                stack.push(Frame {
                    x0: f.x0 + di as usize * sub,
                    y0: f.y0 + dj as usize * sub,
                    depth: f.depth + 1,
                    j_sum,
                    stopped,
                    a,
                    b,
                });
            }
        }
    }
    out
}

/// Builds the level-m metric from the constructed stopped weights.
pub fn build_metric(params: &GridParams, level: u32, max_vertices: u64) -> Result<GridMetric> {
    let m = params.m() as u64;
    let side = m
        .checked_pow(level)
        .ok_or_else(|| Error::Budget(format!("M^{level} overflows the lattice size")))?;
    let verts = (side + 1) * (side + 1);
    if verts > max_vertices {
        return Err(Error::Budget(format!(
            "metric at level {level} needs {verts} vertices, budget {max_vertices}"
        )));
    }
    let exps = cell_exponents(params, level);

    // cell weight rho = (M-3)^a r^b with r = p/q; scaled to the integer
    // s = rho q^m = (M-3)^a p^b q^(m-b). Edge units are s1 + s2 (interior)
    // or 2 s (boundary) over the common denominator 2 q^m M^m.
    let p = params.r().numer().clone();
    let q = params.r().denom().clone();
    let m3 = BigInt::from(params.m() - 3);
    let mut pow_m3 = vec![BigInt::from(1)];
    let mut pow_pq = vec![q.pow(level)];
    for a in 1..=level as usize {
        let prev = pow_m3[a - 1].clone();
        pow_m3.push(prev * &m3);
    }
    for b in 1..=level as usize {
        let prev = pow_pq[b - 1].clone();
        pow_pq.push(prev * &p / &q);
    }
    let scaled: Vec<u64> = exps
        .iter()
        .map(|&(a, b)| {
            let v = &pow_m3[a as usize] * &pow_pq[b as usize];
            v.to_u64().ok_or_else(|| {
                Error::Budget("scaled weights exceed the integer range".into())
            })
        })
        .collect::<Result<_>>()?;
    let denom_big = BigInt::from(2) * q.pow(level) * BigInt::from(m).pow(level);
    let denom = denom_big.to_f64().unwrap();
    Ok(GridMetric::from_scaled_cells(
        level,
        side as usize,
        &scaled,
        denom,
    ))
}

impl GridMetric {
    /// Assembles edge units from per-cell scaled weights: interior edges
    /// take the sum of both adjacent cells (twice the mean), boundary edges
    /// twice their single cell.
    pub fn from_scaled_cells(level: u32, side: usize, s: &[u64], denom: f64) -> Self {
        assert_eq!(s.len(), side * side);
        let mut hw = vec![0u64; (side + 1) * side];
        let mut vw = vec![0u64; (side + 1) * side];
        for r in 0..=side {
            for c in 0..side {
                let below = if r > 0 { Some(s[(r - 1) * side + c]) } else { None };
                let above = if r < side { Some(s[r * side + c]) } else { None };
                hw[r * side + c] = match (below, above) {
                    (Some(x), Some(y)) => x + y,
                    (Some(x), None) | (None, Some(x)) => 2 * x,
                    (None, None) => unreachable!(),
                };
            }
        }
        for c in 0..=side {
            for r in 0..side {
                let left = if c > 0 { Some(s[r * side + (c - 1)]) } else { None };
                let right = if c < side { Some(s[r * side + c]) } else { None };
                vw[c * side + r] = match (left, right) {
                    (Some(x), Some(y)) => x + y,
                    (Some(x), None) | (None, Some(x)) => 2 * x,
                    (None, None) => unreachable!(),
                };
            }
        }
        GridMetric {
            level,
            side,
            hw,
            vw,
            denom,
        }
    }

    /// Constant-weight lattice, the oracle for the unweighted grid metric.
    pub fn constant(level: u32, side: usize) -> Self {
        let s = vec![1u64; side * side];
        GridMetric::from_scaled_cells(level, side, &s, 2.0 * side as f64)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn denom(&self) -> f64 {
        self.denom
    }

    pub fn vertex_count(&self) -> usize {
        (self.side + 1) * (self.side + 1)
    }

    pub fn vid(&self, c: usize, r: usize) -> usize {
        r * (self.side + 1) + c
    }

    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % (self.side + 1), v / (self.side + 1))
    }

    /// Multiplies every edge weight by an integer factor; every distance
    /// scales by exactly that factor.
    pub fn scale_weights(&mut self, factor: u64) {
        for w in self.hw.iter_mut().chain(self.vw.iter_mut()) {
            *w *= factor;
        }
    }

    fn neighbors(&self, v: usize, out: &mut [(usize, u64); 4]) -> usize {
        let (c, r) = self.coords(v);
        let side = self.side;
        let mut k = 0;
        if c > 0 {
            out[k] = (v - 1, self.hw[r * side + (c - 1)]);
            k += 1;
        }
        if c < side {
            out[k] = (v + 1, self.hw[r * side + c]);
            k += 1;
        }
        if r > 0 {
            out[k] = (v - (side + 1), self.vw[c * side + (r - 1)]);
            k += 1;
        }
        if r < side {
            out[k] = (v + (side + 1), self.vw[c * side + r]);
            k += 1;
        }
        k
    }
}

/// Reusable Dijkstra scratch space; the generation stamp avoids clearing
/// the distance array between runs.
pub struct DijkstraScratch {
    dist: Vec<u64>,
    stamp: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
}

impl DijkstraScratch {
    pub fn new(n: usize) -> Self {
        DijkstraScratch {
            dist: vec![u64::MAX; n],
            stamp: vec![0; n],
            generation: 0,
            heap: BinaryHeap::new(),
        }
    }

    fn get(&self, v: usize) -> u64 {
        if self.stamp[v] == self.generation {
            self.dist[v]
        } else {
            u64::MAX
        }
    }

    fn set(&mut self, v: usize, d: u64) {
        self.stamp[v] = self.generation;
        self.dist[v] = d;
    }
}

impl GridMetric {
    /// Single-source shortest paths in integer units; stops early once all
    /// `targets` are settled (empty targets = full sweep).
    pub fn distances_units(
        &self,
        source: usize,
        targets: &[usize],
        scratch: &mut DijkstraScratch,
    ) -> Vec<u64> {
        scratch.generation = scratch.generation.wrapping_add(1);
        if scratch.generation == 0 {
            scratch.stamp.fill(0);
            scratch.generation = 1;
        }
        scratch.heap.clear();
        scratch.set(source, 0);
        scratch.heap.push(Reverse((0, source as u32)));
        let mut remaining: Vec<usize> = targets.to_vec();
        let mut nbuf = [(0usize, 0u64); 4];
        while let Some(Reverse((cost, v))) = scratch.heap.pop() {
            let v = v as usize;
            if cost > scratch.get(v) {
                continue;
            }
            if !remaining.is_empty() {
                remaining.retain(|&t| t != v);
                if remaining.is_empty() {
                    break;
                }
            }
            let k = self.neighbors(v, &mut nbuf);
            for &(u, w) in &nbuf[..k] {
                let nd = cost + w;
                if nd < scratch.get(u) {
                    scratch.set(u, nd);
                    scratch.heap.push(Reverse((nd, u as u32)));
                }
            }
        }
        targets.iter().map(|&t| scratch.get(t)).collect()
    }

    pub fn distance_units(&self, a: usize, b: usize, scratch: &mut DijkstraScratch) -> u64 {
        if a == b {
            return 0;
        }
        self.distances_units(a, &[b], scratch)[0]
    }

    pub fn distance(&self, a: usize, b: usize, scratch: &mut DijkstraScratch) -> f64 {
        self.distance_units(a, b, scratch) as f64 / self.denom
    }
}

#[derive(Debug, Clone)]
pub struct DiamRow {
    pub level: u32,
    pub index: MultiIndex,
    pub rho: f64,
    pub diam: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DiameterAudit {
    /// Fitted constant: the max ratio diam / (rho_k M^-k) over all squares.
    pub c1: f64,
    pub per_level_max: Vec<f64>,
    pub rows: Vec<DiamRow>,
}

/// Measures the corner-to-corner diameter of every level-k square, k <= m,
/// against rho_k(I_k) M^-k.
pub fn diameter_audit(
    metric: &GridMetric,
    params: &GridParams,
    keep_rows: bool,
) -> Result<DiameterAudit> {
    let m = params.m() as usize;
    let level = metric.level();
    let hierarchy = WeightHierarchy::new(params.clone());
    let mut scratch = DijkstraScratch::new(metric.vertex_count());
    let mut rows = Vec::new();
    let mut per_level_max = Vec::new();
    let mut c1 = 0.0f64;

    for k in 0..=level {
        let cells = m.pow(k);
        let span = metric.side() / cells;
        let mut level_max = 0.0f64;
        let mut digits = vec![(1u32, 1u32); k as usize];
        loop {
            let (cx, cy) = digits.iter().fold((0usize, 0usize), |(x, y), &(i, j)| {
                (x * m + (i as usize - 1), y * m + (j as usize - 1))
            });
            let idx = MultiIndex::new(digits.clone(), params.m())?;
            let x0 = cx * span;
            let y0 = cy * span;
            let corners = [
                metric.vid(x0, y0),
                metric.vid(x0 + span, y0),
                metric.vid(x0, y0 + span),
                metric.vid(x0 + span, y0 + span),
            ];
            let mut diam_units = 0u64;
            for a in 0..3 {
                let targets: Vec<usize> = corners[a + 1..].to_vec();
                let ds = metric.distances_units(corners[a], &targets, &mut scratch);
                for d in ds {
                    diam_units = diam_units.max(d);
                }
            }
            let diam = diam_units as f64 / metric.denom();
            let rho = hierarchy.rho_f64(&idx, RhoVariant::Stopped);
            let ratio = diam / (rho * (params.m() as f64).powi(-(k as i32)));
            level_max = level_max.max(ratio);
            if keep_rows {
                rows.push(DiamRow {
                    level: k,
                    index: idx,
                    rho,
                    diam,
                    ratio,
                });
            }
            // odometer over the digit pairs
            let mut pos = k as usize;
            loop {
                if pos == 0 {
                    break;
                }
                let d = &mut digits[pos - 1];
                if d.1 < params.m() {
                    d.1 += 1;
                    break;
                }
                if d.0 < params.m() {
                    d.0 += 1;
                    d.1 = 1;
                    break;
                }
                *d = (1, 1);
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
        }
        per_level_max.push(level_max);
        c1 = c1.max(level_max);
    }
    Ok(DiameterAudit {
        c1,
        per_level_max,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct QsBin {
    pub t_lo: f64,
    pub t_hi: f64,
    pub count: u64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct QsAudit {
    pub triples: u64,
    pub skipped_degenerate: u64,
    pub bins: Vec<QsBin>,
    /// Monotone upper envelope over the bins: (t_hi, eta).
    pub envelope: Vec<(f64, f64)>,
}

/// Samples corner triples (x, y, z), bins the Euclidean ratio
/// t = |x-y| / |x-z| and records the largest metric ratio d(x,y) / d(x,z)
/// per bin, then takes the running max as an empirical modulus envelope.
/// Deterministic for a fixed seed.
pub fn qs_ratio_audit(metric: &GridMetric, triples: u64, seed: u64) -> QsAudit {
    let n = metric.vertex_count();
    let side = metric.side() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = DijkstraScratch::new(n);

    // log-spaced bins for t in ~[1e-3, 1e3]
    let bins_per_decade = 8usize;
    let decades = 6usize;
    let nbins = bins_per_decade * decades;
    let t_min_log = -3.0f64;
    let mut bins: Vec<QsBin> = (0..nbins)
        .map(|i| {
            let lo = 10f64.powf(t_min_log + i as f64 / bins_per_decade as f64);
            let hi = 10f64.powf(t_min_log + (i + 1) as f64 / bins_per_decade as f64);
            QsBin {
                t_lo: lo,
                t_hi: hi,
                count: 0,
                max_ratio: 0.0,
            }
        })
        .collect();

    // batch triples by source so one Dijkstra serves many pairs
    let pairs_per_source = 64u64;
    let sources = triples.div_ceil(pairs_per_source);
    let mut skipped = 0u64;
    let mut done = 0u64;
    for _ in 0..sources {
        let x = rng.random_range(0..n);
        let take = pairs_per_source.min(triples - done);
        let mut ys = Vec::with_capacity(take as usize);
        let mut zs = Vec::with_capacity(take as usize);
        for _ in 0..take {
            ys.push(rng.random_range(0..n));
            zs.push(rng.random_range(0..n));
        }
        done += take;
        let mut targets: Vec<usize> = ys.iter().chain(zs.iter()).copied().collect();
        targets.sort_unstable();
        targets.dedup();
        let ds = metric.distances_units(x, &targets, &mut scratch);
        let lookup = |v: usize| -> u64 { ds[targets.binary_search(&v).unwrap()] };
        let (xc, xr) = metric.coords(x);
        for (&y, &z) in ys.iter().zip(&zs) {
            if z == x {
                skipped += 1;
                continue;
            }
            let (yc, yr) = metric.coords(y);
            let (zc, zr) = metric.coords(z);
            let e_xy = (((xc as f64 - yc as f64) / side).powi(2)
                + ((xr as f64 - yr as f64) / side).powi(2))
            .sqrt();
            let e_xz = (((xc as f64 - zc as f64) / side).powi(2)
                + ((xr as f64 - zr as f64) / side).powi(2))
            .sqrt();
            let t = e_xy / e_xz;
            let ratio = lookup(y) as f64 / lookup(z) as f64;
            if !t.is_finite() || !ratio.is_finite() {
                skipped += 1;
                continue;
            }
            let idx = (((t.log10() - t_min_log) * bins_per_decade as f64).floor() as i64)
                .clamp(0, nbins as i64 - 1) as usize;
            bins[idx].count += 1;
            if ratio > bins[idx].max_ratio {
                bins[idx].max_ratio = ratio;
            }
        }
    }

    let mut envelope = Vec::new();
    let mut running = 0.0f64;
    for b in &bins {
        if b.count > 0 {
            running = running.max(b.max_ratio);
            envelope.push((b.t_hi, running));
        }
    }
    QsAudit {
        triples: done,
        skipped_degenerate: skipped,
        bins,
        envelope,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{stopping_from_classes, IndexClass};
    use crate::weight::rho_from_classes;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn constant_metric_is_grid_path_metric() {
        // all cell weights equal: d((0,0),(1,1)) = 2, the L1 distance
        let g = GridMetric::constant(1, 5);
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        let d = g.distance(g.vid(0, 0), g.vid(5, 5), &mut scratch);
        assert_eq!(d, 2.0);
        let d = g.distance(g.vid(0, 0), g.vid(1, 0), &mut scratch);
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_metric_diameter_constant_is_two() {
        // brute force over every square: ratio = 2 exactly for the
        // unweighted oracle at every level
        let g = GridMetric::constant(2, 25);
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        for k in [1usize, 2] {
            let cells = 5usize.pow(k as u32);
            let span = 25 / cells;
            let mut worst: f64 = 0.0;
            for cx in 0..cells {
                for cy in 0..cells {
                    let corners = [
                        g.vid(cx * span, cy * span),
                        g.vid(cx * span + span, cy * span),
                        g.vid(cx * span, cy * span + span),
                        g.vid(cx * span + span, cy * span + span),
                    ];
                    let mut diam = 0.0f64;
                    for a in 0..3 {
                        for b in a + 1..4 {
                            diam = diam.max(g.distance(corners[a], corners[b], &mut scratch));
                        }
                    }
                    worst = worst.max(diam / (5f64.powi(-(k as i32))));
                }
            }
            assert!((worst - 2.0).abs() < 1e-12, "k={k} worst={worst}");
        }
    }

    #[test]
    fn metric_symmetry_exact() {
        let params = GridParams::demo();
        let g = build_metric(&params, 2, 1 << 20).unwrap();
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = rng.random_range(0..g.vertex_count());
            let b = rng.random_range(0..g.vertex_count());
            assert_eq!(
                g.distance_units(a, b, &mut scratch),
                g.distance_units(b, a, &mut scratch),
                "asymmetry between {a} and {b}"
            );
        }
    }

    #[test]
    fn triangle_inequality_exact() {
        let params = GridParams::demo();
        let g = build_metric(&params, 1, 10_000).unwrap();
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..60 {
            let a = rng.random_range(0..g.vertex_count());
            let b = rng.random_range(0..g.vertex_count());
            let c = rng.random_range(0..g.vertex_count());
            let ab = g.distance_units(a, b, &mut scratch);
            let bc = g.distance_units(b, c, &mut scratch);
            let ac = g.distance_units(a, c, &mut scratch);
            assert!(ac <= ab + bc);
        }
    }

    #[test]
    fn identity_of_indiscernibles() {
        let params = GridParams::demo();
        let g = build_metric(&params, 1, 10_000).unwrap();
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        for v in [0usize, 7, 35] {
            assert_eq!(g.distance_units(v, v, &mut scratch), 0);
        }
        assert!(g.distance_units(0, 1, &mut scratch) > 0);
    }

    #[test]
    fn center_cell_adjacent_corner_distance() {
        // M = 5, m = 1: every ring cell is stopped at level 1, so its
        // weight stays 1; the center cell's boundary edges cost
        // (1 + r) / 2 / M and no detour is cheaper
        let params = GridParams::demo();
        let g = build_metric(&params, 1, 10_000).unwrap();
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        let r = params.r_f64();
        let direct = (1.0 + r) / 2.0 / 5.0;
        let d = g.distance(g.vid(2, 2), g.vid(3, 2), &mut scratch);
        assert!((d - direct).abs() < 1e-15, "d = {d}, direct = {direct}");
    }

    #[test]
    fn exponents_match_exact_rho_level2() {
        // spot-check the DFS table against the rational formula, including
        // the freeze on stopped branches
        let params = GridParams::demo();
        let exps = cell_exponents(&params, 2);
        for (cx, cy, classes) in [
            (12usize, 12usize, vec![IndexClass::Center, IndexClass::Center]),
            (0, 0, vec![IndexClass::Ring1, IndexClass::Ring1]),
            (11, 12, vec![IndexClass::Center, IndexClass::Ring2]),
            (12, 11, vec![IndexClass::Center, IndexClass::Ring2]),
            (5, 12, vec![IndexClass::Ring2, IndexClass::Center]),
        ] {
            let (a, b) = exps[cy * 25 + cx];
            let got = 2f64.powi(a as i32) * (1.0 / 126.0f64).powi(b as i32);
            let want = rho_from_classes(&classes, 5, &rat(1, 126), RhoVariant::Stopped);
            let wantf = want.numer().to_f64().unwrap() / want.denom().to_f64().unwrap();
            assert!(
                (got - wantf).abs() < 1e-15,
                "({cx},{cy}) classes {classes:?} stopped at {:?}: {got} vs {wantf}",
                stopping_from_classes(&classes).stopped_at
            );
        }
    }

    #[test]
    fn scale_covariance_exact() {
        let params = GridParams::demo();
        let mut g = build_metric(&params, 1, 10_000).unwrap();
        let mut scratch = DijkstraScratch::new(g.vertex_count());
        let a = g.vid(0, 0);
        let b = g.vid(5, 3);
        let before = g.distance_units(a, b, &mut scratch);
        g.scale_weights(2);
        let after = g.distance_units(a, b, &mut scratch);
        assert_eq!(after, 2 * before);
    }

    #[test]
    fn diameter_audit_stability_demo() {
        let params = GridParams::demo();
        let audits: Vec<DiameterAudit> = (1..=2)
            .map(|m| {
                let g = build_metric(&params, m, 1 << 20).unwrap();
                diameter_audit(&g, &params, false).unwrap()
            })
            .collect();
        for a in &audits {
            assert!(a.c1.is_finite() && a.c1 > 0.0);
        }
        let ratio = audits[1].c1 / audits[0].c1;
        assert!(
            (0.5..2.0).contains(&ratio),
            "C1 drifted: {} vs {}",
            audits[0].c1,
            audits[1].c1
        );
    }

    #[test]
    fn diameter_audit_root_row_finite() {
        let params = GridParams::demo();
        let g = build_metric(&params, 1, 10_000).unwrap();
        let audit = diameter_audit(&g, &params, true).unwrap();
        let root = audit.rows.iter().find(|r| r.level == 0).unwrap();
        assert!(root.diam.is_finite() && root.diam > 0.0);
        assert_eq!(root.rho, 1.0);
    }

    #[test]
    fn qs_audit_identity_metric() {
        // constant weights: the metric is bi-Lipschitz to Euclidean, so
        // the envelope stays within a constant band of the identity
        let g = GridMetric::constant(1, 25);
        let audit = qs_ratio_audit(&g, 4000, 11);
        assert!(audit.triples > 0);
        for (t, eta) in &audit.envelope {
            assert!(*eta <= 2.0 * t.max(1.0) * 1.5 + 2.0, "eta({t}) = {eta}");
        }
    }

    #[test]
    fn qs_audit_scale_invariant() {
        let params = GridParams::demo();
        let mut g = build_metric(&params, 1, 10_000).unwrap();
        let a1 = qs_ratio_audit(&g, 2000, 9);
        g.scale_weights(2);
        let a2 = qs_ratio_audit(&g, 2000, 9);
        assert_eq!(a1.envelope.len(), a2.envelope.len());
        for ((t1, e1), (t2, e2)) in a1.envelope.iter().zip(&a2.envelope) {
            assert_eq!(t1, t2);
            assert!((e1 - e2).abs() < 1e-12, "envelope changed under scaling");
        }
    }

    #[test]
    fn budget_rejected() {
        let params = GridParams::demo();
        assert!(matches!(
            build_metric(&params, 6, 10_000),
            Err(Error::Budget(_))
        ));
    }
}
