//! Travel-time distances in the metric `c⁻² δ`.
//!
//! The distance from a source set is computed as the viscosity solution of
//! `|∇d| = 1/c` with first-order upwind fast marching on the eight-triangle
//! stencil. In exterior mode the
//! nodes of Ω (φ < 0) are removed from the stencil, which realises the
//! distance over curves confined to ℝⁿ∖Ω. [`dijkstra_oracle`] computes exact
//! shortest paths on a 16-neighbour graph and serves as an independent check.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::field::{dist, BoundaryNode, GridSpec, Point, Region, SpeedField};
use crate::{Error, Result};

/// Polyline `r` whose metric length is `∫ |r'| / c(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Path {
    pub fn open(points: Vec<Point>) -> Self {
        Self { points, closed: false }
    }
}

/// Composite midpoint rule: `Σ |segment| / c(midpoint)`.
pub fn curve_length(path: &Path, speed: &SpeedField) -> Result<f64> {
    let pts = &path.points;
    if pts.len() < 2 {
        return Err(Error::PathTooShort(pts.len()));
    }
    let grid = speed.grid();
    if let Some(p) = pts.iter().find(|p| !grid.contains(**p)) {
        return Err(Error::OutsideGrid(p[0], p[1]));
    }
    let mut segments: Vec<(Point, Point)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    if path.closed {
        segments.push((pts[pts.len() - 1], pts[0]));
    }
    let mut total = 0.0;
    for (a, b) in segments {
        let len = dist(a, b);
        if len == 0.0 {
            return Err(Error::InvalidPath("consecutive points coincide".into()));
        }
        total += len / speed.at(midpoint(a, b));
    }
    Ok(total)
}

#[inline]
fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Source set of a distance computation. Each point may carry an initial
/// value, so the solution is `min_k (offset_k + d(x, p_k))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub points: Vec<Point>,
    pub offsets: Vec<f64>,
    pub label: String,
}

impl Source {
    pub fn point(p: Point) -> Self {
        Self::points(vec![p])
    }

    pub fn points(points: Vec<Point>) -> Self {
        let n = points.len();
        Self { points, offsets: vec![0.0; n], label: format!("{n} point(s)") }
    }

    pub fn boundary(nodes: &[BoundaryNode]) -> Self {
        let mut s = Self::points(nodes.iter().map(|b| b.position).collect());
        s.label = format!("{} boundary sample(s)", nodes.len());
        s
    }

    pub fn with_offsets(points: Vec<Point>, offsets: Vec<f64>) -> Result<Self> {
        if points.len() != offsets.len() || offsets.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidParameter("offsets must be finite, one per source point".into()));
        }
        let n = points.len();
        Ok(Self { points, offsets, label: format!("{n} offset point(s)") })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Which curves the infimum runs over.
#[derive(Debug, Clone, Copy)]
pub enum Restriction<'a> {
    FreeSpace,
    /// Curves confined to the closure of ℝⁿ∖Ω.
    Exterior(&'a Region),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    FreeSpace,
    Exterior,
}

/// Distance values at grid nodes. Nodes that no admissible curve reaches
/// (inside the obstacle, or cut off) hold `None`.
#[derive(Debug, Clone)]
pub struct DistanceField {
    grid: GridSpec,
    values: Vec<Option<f64>>,
    witness: Vec<Option<u32>>,
    mode: DistanceMode,
    source_label: String,
    source_points: Vec<Point>,
    speed: SpeedField,
}

impl DistanceField {
    /// Rebuilds a field from a raster in which NaN marks unreachable nodes,
    /// e.g. one read back from disk.
    pub fn from_raster(
        speed: &SpeedField,
        raster: &[f64],
        mode: DistanceMode,
        source_points: Vec<Point>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let grid = *speed.grid();
        if raster.len() != grid.len() {
            return Err(Error::GridMismatch("distance raster"));
        }
        Ok(Self {
            grid,
            values: raster.iter().map(|v| (!v.is_nan()).then_some(*v)).collect(),
            witness: vec![None; grid.len()],
            mode,
            source_label: label.into(),
            source_points,
            speed: speed.clone(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    #[inline]
    pub fn get(&self, index: usize) -> Option<f64> {
        self.values[index]
    }

    /// Index (into the source's point list) of the source a node's value
    /// descends from.
    pub fn witness(&self, index: usize) -> Option<u32> {
        self.witness[index]
    }

    pub fn mode(&self) -> DistanceMode {
        self.mode
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn speed(&self) -> &SpeedField {
        &self.speed
    }

    pub fn source_points(&self) -> &[Point] {
        &self.source_points
    }

    /// Nodes within `radius` of some source point.
    pub fn near_sources(&self, radius: f64) -> Vec<bool> {
        let g = &self.grid;
        let mut mask = vec![false; g.len()];
        let reach = [(radius / g.spacing[0]).ceil() as usize + 1, (radius / g.spacing[1]).ceil() as usize + 1];
        for &p in &self.source_points {
            let loc = g.locate(p);
            for b in loc.j.saturating_sub(reach[1])..=(loc.j + reach[1]).min(g.dims[1]) {
                for a in loc.i.saturating_sub(reach[0])..=(loc.i + reach[0]).min(g.dims[0]) {
                    if dist(g.node(a, b), p) <= radius {
                        mask[g.index(a, b)] = true;
                    }
                }
            }
        }
        mask
    }

    /// Values with NaN for unreachable nodes, for export.
    pub fn to_raster(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().flatten().copied().reduce(f64::max)
    }

    /// Replaces one node value. Meant for fault-injection tests of the checks.
    pub fn set(&mut self, index: usize, value: Option<f64>) {
        self.values[index] = value;
    }

    /// Distance at an arbitrary point. Bilinear when the whole cell is
    /// reachable; otherwise the best continuation `d(n) + |x − n| / c(x)` from
    /// reachable nodes of the surrounding 4×4 block.
    pub fn at(&self, x: Point) -> Option<f64> {
        let g = &self.grid;
        let loc = g.locate(x);
        let corner = |a: usize, b: usize| self.values[g.index(a, b)];
        if let (Some(v00), Some(v10), Some(v01), Some(v11)) =
            (corner(loc.i, loc.j), corner(loc.i + 1, loc.j), corner(loc.i, loc.j + 1), corner(loc.i + 1, loc.j + 1))
        {
            let (fx, fy) = (loc.fx, loc.fy);
            return Some((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11));
        }
        let slowness = 1.0 / self.speed.at(x);
        let mut best: Option<f64> = None;
        for b in loc.j.saturating_sub(1)..=(loc.j + 2).min(g.dims[1]) {
            for a in loc.i.saturating_sub(1)..=(loc.i + 2).min(g.dims[0]) {
                if let Some(v) = corner(a, b) {
                    let cand = v + dist(g.node(a, b), x) * slowness;
                    best = Some(best.map_or(cand, |m: f64| m.min(cand)));
                }
            }
        }
        best
    }
}

/// Nodes seeded exactly around each source point lie within this many grid
/// spacings of it.
const SEED_RADIUS: f64 = 2.0;

/// Seeds nodes near each source with `offset + straight-line travel time`.
/// Returns `(node, value, source index)` sorted by node, keeping the smallest
/// value per node (lowest source index on ties).
fn seed_nodes(speed: &SpeedField, source: &Source, blocked: &[bool]) -> Vec<(usize, f64, u32)> {
    let g = speed.grid();
    let radius = SEED_RADIUS * g.h();
    let mut seeds: Vec<(usize, f64, u32)> = Vec::new();
    for (k, (&p, &offset)) in source.points.iter().zip(&source.offsets).enumerate() {
        let loc = g.locate(p);
        let reach_i = (radius / g.spacing[0]).ceil() as usize + 1;
        let reach_j = (radius / g.spacing[1]).ceil() as usize + 1;
        for b in loc.j.saturating_sub(reach_j)..=(loc.j + reach_j).min(g.dims[1]) {
            for a in loc.i.saturating_sub(reach_i)..=(loc.i + reach_i).min(g.dims[0]) {
                let idx = g.index(a, b);
                if blocked[idx] {
                    continue;
                }
                let x = g.node(a, b);
                let r = dist(x, p);
                let in_cell = a >= loc.i && a <= loc.i + 1 && b >= loc.j && b <= loc.j + 1;
                if r <= radius || in_cell {
                    let value = offset + r / speed.at(midpoint(x, p));
                    seeds.push((idx, value, k as u32));
                }
            }
        }
    }
    seeds.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    seeds.dedup_by_key(|s| s.0);
    seeds
}

fn blocked_mask(grid: &GridSpec, restriction: Restriction<'_>) -> Result<(Vec<bool>, DistanceMode)> {
    match restriction {
        Restriction::FreeSpace => Ok((vec![false; grid.len()], DistanceMode::FreeSpace)),
        Restriction::Exterior(region) => {
            if !region.grid().same_as(grid) {
                return Err(Error::GridMismatch("obstacle region and speed"));
            }
            Ok((region.interior_mask(), DistanceMode::Exterior))
        }
    }
}

fn check_source(source: &Source, grid: &GridSpec) -> Result<()> {
    if source.is_empty() {
        return Err(Error::EmptySource);
    }
    if let Some(p) = source.points.iter().find(|p| !grid.contains(**p)) {
        return Err(Error::OutsideGrid(p[0], p[1]));
    }
    Ok(())
}

/// Total order on (value, node) for the priority queues.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// First-order fast marching for `|∇d| = 1/c`.
pub fn solve_eikonal(speed: &SpeedField, source: &Source, restriction: Restriction<'_>) -> Result<DistanceField> {
    fast_march(speed, source, restriction, None)
}

/// Fast marching that stops once every node flagged in `targets` is final.
/// Nodes not finalised by then are reported unreachable, so the result is
/// only meaningful on the targets.
pub(crate) fn solve_eikonal_on(
    speed: &SpeedField,
    source: &Source,
    restriction: Restriction<'_>,
    targets: &[bool],
) -> Result<DistanceField> {
    fast_march(speed, source, restriction, Some(targets))
}

fn fast_march(
    speed: &SpeedField,
    source: &Source,
    restriction: Restriction<'_>,
    targets: Option<&[bool]>,
) -> Result<DistanceField> {
    let g = *speed.grid();
    check_source(source, &g)?;
    let (blocked, mode) = blocked_mask(&g, restriction)?;
    let mut remaining = targets.map_or(usize::MAX, |t| t.iter().zip(&blocked).filter(|(&t, &b)| t && !b).count());
    let seeds = seed_nodes(speed, source, &blocked);
    if seeds.is_empty() {
        return Err(Error::SourceInsideObstacle);
    }

    let n = g.len();
    let mut value = vec![f64::INFINITY; n];
    let mut label = vec![u32::MAX; n];
    let mut known = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(idx, v, k) in &seeds {
        value[idx] = v;
        label[idx] = k;
        heap.push(Reverse(Entry(v, idx)));
    }

    let (nx, ny) = (g.nx() as i64, g.ny() as i64);
    let offset = |k: usize| [g.spacing[0] * FAN[k].0 as f64, g.spacing[1] * FAN[k].1 as f64];
    while let Some(Reverse(Entry(v, idx))) = heap.pop() {
        if known[idx] || v > value[idx] {
            continue;
        }
        known[idx] = true;
        if targets.is_some_and(|t| t[idx]) {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        let (ci, cj) = g.ij(idx);
        for (di, dj) in FAN {
            let (a, b) = (ci as i64 + di, cj as i64 + dj);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let nb = g.index(a as usize, b as usize);
            if known[nb] || blocked[nb] {
                continue;
            }
            // neighbour k of `nb` in fan order, if known
            let vertex = |k: usize| {
                let (x, y) = (a + FAN[k].0, b + FAN[k].1);
                if x < 0 || y < 0 || x >= nx || y >= ny {
                    return None;
                }
                let m = g.index(x as usize, y as usize);
                known[m].then(|| (value[m], label[m]))
            };
            let slow = 1.0 / speed.node(nb);
            let mut best = (value[nb], label[nb]);
            let mut offer = |cand: (f64, u32)| {
                if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                    best = cand;
                }
            };
            for k in 0..8 {
                let Some((va, la)) = vertex(k) else { continue };
                let ea = offset(k);
                offer((va + slow * ea[0].hypot(ea[1]), la));
                let k2 = (k + 1) % 8;
                if let Some((vb, lb)) = vertex(k2) {
                    if let Some(u) = simplex_update(ea, offset(k2), va, vb, slow) {
                        offer((u, if va <= vb { la } else { lb }));
                    }
                }
            }
            if best.0 < value[nb] || (best.0 == value[nb] && best.1 < label[nb]) {
                value[nb] = best.0;
                label[nb] = best.1;
                heap.push(Reverse(Entry(best.0, nb)));
            }
        }
    }

    let values = value.iter().zip(&known).map(|(&v, &k)| k.then_some(v)).collect();
    let witness = label.iter().zip(&known).map(|(&l, &k)| k.then_some(l)).collect();
    Ok(DistanceField {
        grid: g,
        values,
        witness,
        mode,
        source_label: source.label.clone(),
        source_points: source.points.clone(),
        speed: speed.clone(),
    })
}

/// The eight neighbours in counter-clockwise order; consecutive entries span
/// the eight 45° triangles around a node.
const FAN: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Upwind update across the triangle spanned by edge vectors `ea`, `eb` from
/// the updated node to vertices with values `a`, `b`: the planar wave through
/// both vertices with `|∇u| = s`, accepted only when its characteristic
/// enters through the opposite edge.
fn simplex_update(ea: Point, eb: Point, a: f64, b: f64, s: f64) -> Option<f64> {
    let det = ea[0] * eb[1] - ea[1] * eb[0];
    if det.abs() < 1e-300 {
        return None;
    }
    // E⁻¹ applied to (a, b) and (1, 1), where E has rows ea, eb; ∇u = p − u q
    let inv = |v: [f64; 2]| [(eb[1] * v[0] - ea[1] * v[1]) / det, (-eb[0] * v[0] + ea[0] * v[1]) / det];
    let p = inv([a, b]);
    let q = inv([1.0, 1.0]);
    let qq = q[0] * q[0] + q[1] * q[1];
    let pq = p[0] * q[0] + p[1] * q[1];
    let pp = p[0] * p[0] + p[1] * p[1];
    let disc = pq * pq - qq * (pp - s * s);
    if disc < 0.0 {
        return None;
    }
    let u = (pq + disc.sqrt()) / qq;
    if u < a.max(b) {
        return None;
    }
    // the characteristic −∇u must point into the cone spanned by ea and eb
    let g = [u * q[0] - p[0], u * q[1] - p[1]];
    let alpha = (g[0] * eb[1] - g[1] * eb[0]) / det;
    let beta = (ea[0] * g[1] - ea[1] * g[0]) / det;
    (alpha >= 0.0 && beta >= 0.0).then_some(u)
}

/// 16-neighbour stencil offsets (the 8 king moves and 8 knight moves).
const STENCIL16: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (1, 2),
    (2, 1),
    (-1, 2),
    (-2, 1),
    (1, -2),
    (2, -1),
    (-1, -2),
    (-2, -1),
];

/// Exact shortest paths on the 16-neighbour grid graph with edge weight
/// `|edge| / c(midpoint)`. Obstacle nodes are removed, as are edges whose
/// midpoint lies inside the obstacle.
pub fn dijkstra_oracle(speed: &SpeedField, source: &Source, obstacle: Option<&Region>) -> Result<DistanceField> {
    let g = *speed.grid();
    check_source(source, &g)?;
    let restriction = obstacle.map_or(Restriction::FreeSpace, Restriction::Exterior);
    let (blocked, mode) = blocked_mask(&g, restriction)?;
    let edge_ok = |mid: Point| obstacle.is_none_or(|r| r.signed_distance(mid) >= 0.0);
    graph_shortest_paths(speed, source, &blocked, edge_ok, mode)
}

fn graph_shortest_paths(
    speed: &SpeedField,
    source: &Source,
    blocked: &[bool],
    edge_ok: impl Fn(Point) -> bool,
    mode: DistanceMode,
) -> Result<DistanceField> {
    let g = *speed.grid();
    let seeds = seed_nodes(speed, source, blocked);
    if seeds.is_empty() {
        return Err(Error::SourceInsideObstacle);
    }

    let n = g.len();
    let mut value = vec![f64::INFINITY; n];
    let mut label = vec![u32::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &(idx, v, k) in &seeds {
        value[idx] = v;
        label[idx] = k;
        heap.push(Reverse(Entry(v, idx)));
    }
    let (nx, ny) = (g.nx() as i64, g.ny() as i64);
    while let Some(Reverse(Entry(v, idx))) = heap.pop() {
        if done[idx] || v > value[idx] {
            continue;
        }
        done[idx] = true;
        let (i, j) = g.ij(idx);
        let x = g.node(i, j);
        for (di, dj) in STENCIL16 {
            let (a, b) = (i as i64 + di, j as i64 + dj);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let nb = g.index(a as usize, b as usize);
            if done[nb] || blocked[nb] {
                continue;
            }
            let y = g.node(a as usize, b as usize);
            let mid = midpoint(x, y);
            if !edge_ok(mid) {
                continue;
            }
            let cand = v + dist(x, y) / speed.at(mid);
            if cand < value[nb] || (cand == value[nb] && label[idx] < label[nb]) {
                value[nb] = cand;
                label[nb] = label[idx];
                heap.push(Reverse(Entry(cand, nb)));
            }
        }
    }
    let values = value.iter().zip(blocked).map(|(&v, &b)| (!b && v.is_finite()).then_some(v)).collect();
    let witness = label.iter().zip(&value).map(|(&l, v)| v.is_finite().then_some(l)).collect();
    Ok(DistanceField {
        grid: g,
        values,
        witness,
        mode,
        source_label: format!("oracle: {}", source.label),
        source_points: source.points.clone(),
        speed: speed.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `max (|∇d| − 1/c)` over interior nodes whose 4-neighbours are reachable.
    pub max_violation: f64,
    pub location: Option<Point>,
    pub node: Option<usize>,
    pub tolerance: f64,
    pub passed: bool,
    pub checked_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzOptions {
    /// Pass iff the excess is at most `constant · h`.
    pub constant: f64,
    /// Nodes within this many grid spacings of a source point are skipped:
    /// first-order schemes carry an O(h/r) gradient error at distance r from
    /// a point source.
    pub source_exclusion: f64,
    /// Checked nodes need every node within this many grid spacings to be
    /// reachable; the staircased obstacle boundary leaves an O(h)-wide layer
    /// where difference quotients are not meaningful.
    pub obstacle_clearance: f64,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        Self { constant: 2.0, source_exclusion: 8.0, obstacle_clearance: 4.0 }
    }
}

/// Discrete form of `|∇d| ≤ 1/c`: the central-difference gradient at a node
/// is compared with the largest slowness on its 5-point stencil. Nodes near
/// the sources or near unreachable nodes are skipped (see [`LipschitzOptions`]).
pub fn lipschitz_check(
    dist: &DistanceField,
    speed: &SpeedField,
    options: &LipschitzOptions,
) -> Result<LipschitzReport> {
    let g = dist.grid();
    if !g.same_as(speed.grid()) {
        return Err(Error::GridMismatch("lipschitz_check"));
    }
    let skip = gradient_exclusions(dist, options);
    let nx = g.nx();
    let mut worst = (f64::NEG_INFINITY, None);
    let mut checked = 0;
    for idx in 0..g.len() {
        if skip[idx] {
            continue;
        }
        let Some(grad) = central_gradient(dist, idx) else { continue };
        checked += 1;
        let slowness =
            [idx, idx - 1, idx + 1, idx - nx, idx + nx].iter().map(|&k| 1.0 / speed.node(k)).fold(0.0, f64::max);
        let excess = grad[0].hypot(grad[1]) - slowness;
        if excess > worst.0 {
            worst = (excess, Some(idx));
        }
    }
    let tolerance = options.constant * g.h();
    let max_violation = if checked == 0 { 0.0 } else { worst.0 };
    Ok(LipschitzReport {
        max_violation,
        location: worst.1.map(|k| g.coords(k)),
        node: worst.1,
        tolerance,
        passed: max_violation <= tolerance,
        checked_nodes: checked,
    })
}

/// Nodes where difference quotients of `dist` are not trusted: close to a
/// source point or to an unreachable node.
pub fn gradient_exclusions(dist: &DistanceField, options: &LipschitzOptions) -> Vec<bool> {
    let h = dist.grid().h();
    let mut skip = dist.near_sources(options.source_exclusion * h);
    mark_near_unreachable(dist, options.obstacle_clearance * h, &mut skip);
    skip
}

fn mark_near_unreachable(dist: &DistanceField, radius: f64, mask: &mut [bool]) {
    let g = dist.grid();
    let reach = [(radius / g.spacing[0]).ceil() as usize, (radius / g.spacing[1]).ceil() as usize];
    for idx in 0..g.len() {
        if dist.get(idx).is_some() || g.neighbors4(idx).all(|m| dist.get(m).is_none()) {
            continue;
        }
        let (i, j) = g.ij(idx);
        let x = g.node(i, j);
        for b in j.saturating_sub(reach[1])..=(j + reach[1]).min(g.dims[1]) {
            for a in i.saturating_sub(reach[0])..=(i + reach[0]).min(g.dims[0]) {
                if crate::field::dist(g.node(a, b), x) <= radius {
                    mask[g.index(a, b)] = true;
                }
            }
        }
    }
}

/// Central-difference gradient; `None` unless the node and its four
/// neighbours are reachable and the node is not on the grid edge.
pub fn central_gradient(dist: &DistanceField, index: usize) -> Option<Point> {
    let g = dist.grid();
    if g.is_edge_node(index) {
        return None;
    }
    let nx = g.nx();
    dist.get(index)?;
    let (e, w) = (dist.get(index + 1)?, dist.get(index - 1)?);
    let (n, s) = (dist.get(index + nx)?, dist.get(index - nx)?);
    Some([(e - w) / (2.0 * g.spacing[0]), (n - s) / (2.0 * g.spacing[1])])
}
