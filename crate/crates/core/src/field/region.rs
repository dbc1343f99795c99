use serde::{Deserialize, Serialize};

use super::{dist, fingerprint, GridSpec, Point};
use crate::{Error, Result};

/// Shape of the domain Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk {
        center: Point,
        radius: f64,
    },
    /// Axis-aligned ellipse with semi-axes `[a, b]` along `x₁` and `x₂`.
    Ellipse {
        center: Point,
        semi_axes: [f64; 2],
    },
    /// Convex polygon whose corners are rounded by offsetting it outward by
    /// `corner_radius`; the boundary is then C¹ (straight runs joined by arcs).
    RoundedPolygon {
        vertices: Vec<Point>,
        corner_radius: f64,
    },
}

/// A boundary sample with its outward unit normal. `arc_length` runs
/// counter-clockwise from the shape's start point; `param` is the same
/// position normalised by the perimeter, in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNode {
    pub position: Point,
    pub normal: Point,
    pub arc_length: f64,
    pub param: f64,
}

/// The domain Ω = {φ < 0} on a grid, with signed distance at every node and
/// an ordered, approximately uniform sampling of ∂Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: GridSpec,
    shape: Shape,
    phi: Vec<f64>,
    boundary: Vec<BoundaryNode>,
    perimeter: f64,
    id: u64,
}

pub fn make_region(grid: GridSpec, shape: Shape) -> Result<Region> {
    Region::new(grid, shape)
}

impl Region {
    pub fn new(grid: GridSpec, shape: Shape) -> Result<Self> {
        grid.validate()?;
        let shape = shape.normalized()?;
        let margin = 4.0 * grid.h();
        let (lo, hi) = shape.bounding_box();
        let top = grid.upper();
        if lo[0] < grid.origin[0] + margin
            || lo[1] < grid.origin[1] + margin
            || hi[0] > top[0] - margin
            || hi[1] > top[1] - margin
        {
            return Err(Error::ShapeOutsideGrid {
                margin,
                detail: format!("bounding box {lo:?}..{hi:?} vs grid {:?}..{top:?}", grid.origin),
            });
        }
        let phi: Vec<f64> = (0..grid.len()).map(|k| shape.signed_distance(grid.coords(k))).collect();
        if !phi.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidShape("shape contains no grid node".into()));
        }
        let (boundary, perimeter) = shape.sample_boundary(grid.h_min());
        let id = fingerprint(&phi);
        Ok(Self { grid, shape, phi, boundary, perimeter, id })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn boundary(&self) -> &[BoundaryNode] {
        &self.boundary
    }

    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    #[inline]
    pub fn is_inside(&self, index: usize) -> bool {
        self.phi[index] < 0.0
    }

    /// Exact signed distance at any point.
    pub fn signed_distance(&self, x: Point) -> f64 {
        self.shape.signed_distance(x)
    }

    pub fn interior_mask(&self) -> Vec<bool> {
        self.phi.iter().map(|&p| p < 0.0).collect()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.phi.len()).filter(|&k| self.phi[k] < 0.0)
    }

    /// Arc-length position of the boundary point closest to `x`, found from
    /// the nearest sample and refined on the two adjacent chords.
    pub fn project_to_arc_length(&self, x: Point) -> f64 {
        let n = self.boundary.len();
        let nearest = (0..n)
            .min_by(|&a, &b| dist(self.boundary[a].position, x).total_cmp(&dist(self.boundary[b].position, x)))
            .expect("region boundary is never empty");
        let mut best = (dist(self.boundary[nearest].position, x), self.boundary[nearest].arc_length);
        for (a, b) in [((nearest + n - 1) % n, nearest), (nearest, (nearest + 1) % n)] {
            let pa = self.boundary[a].position;
            let pb = self.boundary[b].position;
            let seg = [pb[0] - pa[0], pb[1] - pa[1]];
            let len2 = seg[0] * seg[0] + seg[1] * seg[1];
            let t = (((x[0] - pa[0]) * seg[0] + (x[1] - pa[1]) * seg[1]) / len2).clamp(0.0, 1.0);
            let q = [pa[0] + t * seg[0], pa[1] + t * seg[1]];
            let d = dist(q, x);
            if d < best.0 {
                let sa = self.boundary[a].arc_length;
                let mut sb = self.boundary[b].arc_length;
                if sb < sa {
                    sb += self.perimeter;
                }
                best = (d, (sa + t * (sb - sa)).rem_euclid(self.perimeter));
            }
        }
        best.1
    }
}

impl Shape {
    /// Validates parameters and puts polygons in counter-clockwise order.
    fn normalized(self) -> Result<Self> {
        let finite = |p: &Point| p[0].is_finite() && p[1].is_finite();
        match self {
            Shape::Disk { center, radius } => {
                if !(finite(&center) && radius.is_finite() && radius > 0.0) {
                    return Err(Error::InvalidShape(format!("disk radius must be positive, got {radius}")));
                }
                Ok(Shape::Disk { center, radius })
            }
            Shape::Ellipse { center, semi_axes } => {
                if !(finite(&center) && semi_axes.iter().all(|a| a.is_finite() && *a > 0.0)) {
                    return Err(Error::InvalidShape(format!("ellipse semi-axes must be positive, got {semi_axes:?}")));
                }
                Ok(Shape::Ellipse { center, semi_axes })
            }
            Shape::RoundedPolygon { mut vertices, corner_radius } => {
                if vertices.len() < 3 || !vertices.iter().all(finite) {
                    return Err(Error::InvalidShape("polygon needs at least three finite vertices".into()));
                }
                if !(corner_radius.is_finite() && corner_radius > 0.0) {
                    return Err(Error::InvalidShape(format!("corner radius must be positive, got {corner_radius}")));
                }
                let n = vertices.len();
                let area2: f64 = (0..n)
                    .map(|i| {
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum();
                if area2 < 0.0 {
                    vertices.reverse();
                }
                for i in 0..n {
                    let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
                    let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                    if cross <= 0.0 {
                        return Err(Error::InvalidShape("polygon must be strictly convex".into()));
                    }
                }
                Ok(Shape::RoundedPolygon { vertices, corner_radius })
            }
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Disk { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
            Shape::Ellipse { center, semi_axes: [a, b] } => {
                ([center[0] - a, center[1] - b], [center[0] + a, center[1] + b])
            }
            Shape::RoundedPolygon { vertices, corner_radius: r } => {
                let mut lo = [f64::MAX; 2];
                let mut hi = [f64::MIN; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k] - r);
                        hi[k] = hi[k].max(v[k] + r);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Signed distance to the boundary, negative inside.
    pub fn signed_distance(&self, x: Point) -> f64 {
        match self {
            Shape::Disk { center, radius } => dist(x, *center) - radius,
            Shape::Ellipse { center, semi_axes: [a, b] } => {
                let y = [(x[0] - center[0]).abs(), (x[1] - center[1]).abs()];
                let d =
                    if a >= b { ellipse_distance(*a, *b, y[0], y[1]) } else { ellipse_distance(*b, *a, y[1], y[0]) };
                let level = (y[0] / a).powi(2) + (y[1] / b).powi(2);
                if level < 1.0 {
                    -d
                } else {
                    d
                }
            }
            Shape::RoundedPolygon { vertices, corner_radius } => {
                let n = vertices.len();
                let mut d = f64::MAX;
                let mut inside = true;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    d = d.min(segment_distance(x, a, b));
                    let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                    if cross < 0.0 {
                        inside = false;
                    }
                }
                (if inside { -d } else { d }) - corner_radius
            }
        }
    }

    /// Samples ∂Ω counter-clockwise at uniform arc spacing no larger than
    /// `spacing`. Returns the samples and the perimeter.
    fn sample_boundary(&self, spacing: f64) -> (Vec<BoundaryNode>, f64) {
        let curve = BoundaryCurve::new(self);
        let perimeter = curve.perimeter();
        let count = (perimeter / spacing).ceil().max(3.0) as usize;
        let nodes = (0..count)
            .map(|i| {
                let s = perimeter * i as f64 / count as f64;
                let (position, normal) = curve.eval(s);
                BoundaryNode { position, normal, arc_length: s, param: i as f64 / count as f64 }
            })
            .collect();
        (nodes, perimeter)
    }
}

fn segment_distance(x: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let t = (((x[0] - a[0]) * ab[0] + (x[1] - a[1]) * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    dist(x, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Distance from `(y0, y1)`, both non-negative, to the ellipse with semi-axes
/// `e0 >= e1`. Robust bisection on the Lagrange multiplier (Eberly).
fn ellipse_distance(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g == 0.0 {
                return 0.0;
            }
            let r0 = (e0 / e1) * (e0 / e1);
            let s = ellipse_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (s + r0);
            let x1 = y1 / (s + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde0 = numer / denom;
            let x0 = e0 * xde0;
            let x1 = e1 * (1.0 - xde0 * xde0).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Arc-length parametrisation of a shape's boundary.
enum BoundaryCurve {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64, table: Vec<f64> },
    Pieces { pieces: Vec<Piece>, total: f64 },
}

enum Piece {
    Line { start: Point, dir: Point, normal: Point, len: f64 },
    Arc { center: Point, radius: f64, angle0: f64, sweep: f64 },
}

impl Piece {
    fn len(&self) -> f64 {
        match self {
            Piece::Line { len, .. } => *len,
            Piece::Arc { radius, sweep, .. } => radius * sweep,
        }
    }
}

const ELLIPSE_TABLE: usize = 1 << 15;

impl BoundaryCurve {
    fn new(shape: &Shape) -> Self {
        match shape {
            Shape::Disk { center, radius } => BoundaryCurve::Circle { center: *center, radius: *radius },
            Shape::Ellipse { center, semi_axes: [a, b] } => {
                // cumulative arc length at θ_k = 2πk/N; the trapezoid rule is
                // spectrally accurate for this periodic integrand
                let step = std::f64::consts::TAU / ELLIPSE_TABLE as f64;
                let speed = |t: f64| (a * t.sin()).hypot(b * t.cos());
                let mut table = Vec::with_capacity(ELLIPSE_TABLE + 1);
                let mut acc = 0.0;
                table.push(0.0);
                for k in 0..ELLIPSE_TABLE {
                    let t = k as f64 * step;
                    acc += 0.5 * step * (speed(t) + speed(t + step));
                    table.push(acc);
                }
                BoundaryCurve::Ellipse { center: *center, a: *a, b: *b, table }
            }
            Shape::RoundedPolygon { vertices, corner_radius: r } => {
                let n = vertices.len();
                let normal_of = |i: usize| {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    let len = dist(p, q);
                    ([(q[0] - p[0]) / len, (q[1] - p[1]) / len], [(q[1] - p[1]) / len, -(q[0] - p[0]) / len], len)
                };
                let mut pieces = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let (dir, normal, len) = normal_of(i);
                    let v = vertices[i];
                    pieces.push(Piece::Line { start: [v[0] + r * normal[0], v[1] + r * normal[1]], dir, normal, len });
                    let (_, next_normal, _) = normal_of((i + 1) % n);
                    let angle0 = normal[1].atan2(normal[0]);
                    let sweep = (next_normal[1].atan2(next_normal[0]) - angle0).rem_euclid(std::f64::consts::TAU);
                    pieces.push(Piece::Arc { center: vertices[(i + 1) % n], radius: *r, angle0, sweep });
                }
                let total = pieces.iter().map(Piece::len).sum();
                BoundaryCurve::Pieces { pieces, total }
            }
        }
    }

    fn perimeter(&self) -> f64 {
        match self {
            BoundaryCurve::Circle { radius, .. } => std::f64::consts::TAU * radius,
            BoundaryCurve::Ellipse { table, .. } => *table.last().unwrap(),
            BoundaryCurve::Pieces { total, .. } => *total,
        }
    }

    fn eval(&self, s: f64) -> (Point, Point) {
        match self {
            BoundaryCurve::Circle { center, radius } => {
                let t = s / radius;
                let n = [t.cos(), t.sin()];
                ([center[0] + radius * n[0], center[1] + radius * n[1]], n)
            }
            BoundaryCurve::Ellipse { center, a, b, table } => {
                let k = table.partition_point(|&v| v <= s).clamp(1, ELLIPSE_TABLE) - 1;
                let frac = (s - table[k]) / (table[k + 1] - table[k]);
                let t = (k as f64 + frac) * std::f64::consts::TAU / ELLIPSE_TABLE as f64;
                let n = [b * t.cos(), a * t.sin()];
                let norm = n[0].hypot(n[1]);
                ([center[0] + a * t.cos(), center[1] + b * t.sin()], [n[0] / norm, n[1] / norm])
            }
            BoundaryCurve::Pieces { pieces, .. } => {
                let mut rest = s;
                for (idx, piece) in pieces.iter().enumerate() {
                    let len = piece.len();
                    if rest <= len || idx + 1 == pieces.len() {
                        return match piece {
                            Piece::Line { start, dir, normal, .. } => {
                                ([start[0] + rest * dir[0], start[1] + rest * dir[1]], *normal)
                            }
                            Piece::Arc { center, radius, angle0, .. } => {
                                let t = angle0 + rest / radius;
                                let n = [t.cos(), t.sin()];
                                ([center[0] + radius * n[0], center[1] + radius * n[1]], n)
                            }
                        };
                    }
                    rest -= len;
                }
                unreachable!("pieces is never empty")
            }
        }
    }
}
