use serde::{Deserialize, Serialize};

use super::Point;
use crate::{Error, Result};

/// Uniform node-centred grid. `dims` counts cells, so each axis carries
/// `dims + 1` nodes. Node values are stored row-major with the first axis
/// varying fastest: `index = j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub origin: Point,
    pub spacing: [f64; 2],
    pub dims: [usize; 2],
    #[serde(default = "two")]
    pub dimension: usize,
}

fn two() -> usize {
    2
}

/// Cell containing a point, with local coordinates in `[0, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLocation {
    pub i: usize,
    pub j: usize,
    pub fx: f64,
    pub fy: f64,
}

impl GridSpec {
    pub fn new(origin: Point, spacing: [f64; 2], dims: [usize; 2]) -> Result<Self> {
        let grid = Self { origin, spacing, dims, dimension: 2 };
        grid.validate()?;
        Ok(grid)
    }

    /// Square grid `[lo, hi]²` with `cells` cells per axis.
    pub fn square(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        let h = (hi - lo) / cells as f64;
        Self::new([lo, lo], [h, h], [cells, cells])
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 2 {
            return Err(Error::InvalidGrid(format!(
                "only two spatial dimensions are supported, got {}",
                self.dimension
            )));
        }
        if !self.spacing.iter().all(|h| h.is_finite() && *h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {:?}", self.spacing)));
        }
        if !self.origin.iter().all(|o| o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        if self.dims.iter().any(|&n| n < 8) {
            return Err(Error::InvalidGrid(format!("need at least 8 cells per axis, got {:?}", self.dims)));
        }
        Ok(())
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.dims[0] + 1
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.dims[1] + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coarsest spacing; all O(h) tolerances are stated against it.
    #[inline]
    pub fn h(&self) -> f64 {
        self.spacing[0].max(self.spacing[1])
    }

    #[inline]
    pub fn h_min(&self) -> f64 {
        self.spacing[0].min(self.spacing[1])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    #[inline]
    pub fn ij(&self, index: usize) -> (usize, usize) {
        (index % self.nx(), index / self.nx())
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        [self.origin[0] + i as f64 * self.spacing[0], self.origin[1] + j as f64 * self.spacing[1]]
    }

    #[inline]
    pub fn coords(&self, index: usize) -> Point {
        let (i, j) = self.ij(index);
        self.node(i, j)
    }

    pub fn upper(&self) -> Point {
        self.node(self.dims[0], self.dims[1])
    }

    pub fn contains(&self, x: Point) -> bool {
        let hi = self.upper();
        let eps = 1e-12 * self.h();
        x[0] >= self.origin[0] - eps && x[0] <= hi[0] + eps && x[1] >= self.origin[1] - eps && x[1] <= hi[1] + eps
    }

    /// Cell holding `x`; points outside the grid are clamped to the edge,
    /// which extends sampled fields constantly beyond the grid.
    pub fn locate(&self, x: Point) -> CellLocation {
        let axis = |k: usize| {
            let s = ((x[k] - self.origin[k]) / self.spacing[k]).clamp(0.0, self.dims[k] as f64);
            let cell = (s.floor() as usize).min(self.dims[k] - 1);
            (cell, s - cell as f64)
        };
        let (i, fx) = axis(0);
        let (j, fy) = axis(1);
        CellLocation { i, j, fx, fy }
    }

    /// Bilinear interpolation of node values at `x`.
    pub fn interpolate(&self, values: &[f64], x: Point) -> f64 {
        let CellLocation { i, j, fx, fy } = self.locate(x);
        let v = |a, b| values[self.index(a, b)];
        (1.0 - fy) * ((1.0 - fx) * v(i, j) + fx * v(i + 1, j)) + fy * ((1.0 - fx) * v(i, j + 1) + fx * v(i + 1, j + 1))
    }

    /// Nearest node to `x` (clamped into the grid).
    pub fn nearest(&self, x: Point) -> usize {
        let axis = |k: usize| {
            let s = ((x[k] - self.origin[k]) / self.spacing[k]).round();
            s.clamp(0.0, self.dims[k] as f64) as usize
        };
        self.index(axis(0), axis(1))
    }

    /// The four edge neighbours of a node that exist in the grid.
    pub fn neighbors4(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.ij(index);
        let (nx, ny) = (self.nx(), self.ny());
        [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].into_iter().filter_map(move |(di, dj)| {
            let a = i as i64 + di;
            let b = j as i64 + dj;
            (a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny).then(|| b as usize * nx + a as usize)
        })
    }

    pub fn is_edge_node(&self, index: usize) -> bool {
        let (i, j) = self.ij(index);
        i == 0 || j == 0 || i == self.dims[0] || j == self.dims[1]
    }

    /// Trapezoidal quadrature weight of a node (1 inside, 1/2 on edges, 1/4 at corners).
    pub fn trapezoid_weight(&self, index: usize) -> f64 {
        let (i, j) = self.ij(index);
        let w = |k: usize, n: usize| if k == 0 || k == n { 0.5 } else { 1.0 };
        w(i, self.dims[0]) * w(j, self.dims[1])
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    pub(crate) fn same_as(&self, other: &GridSpec) -> bool {
        self.dims == other.dims
            && (0..2).all(|k| {
                (self.origin[k] - other.origin[k]).abs() <= 1e-12 * self.h()
                    && (self.spacing[k] - other.spacing[k]).abs() <= 1e-12 * self.h()
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(GridSpec::new([0.0, 0.0], [0.1, 0.1], [7, 8]).is_err());
        assert!(GridSpec::new([0.0, 0.0], [0.0, 0.1], [8, 8]).is_err());
        let mut g = GridSpec::square(0.0, 1.0, 8).unwrap();
        g.dimension = 3;
        assert!(g.validate().is_err());
    }

    #[test]
    fn node_indexing_round_trips() {
        let g = GridSpec::new([-1.0, 2.0], [0.5, 0.25], [8, 12]).unwrap();
        assert_eq!(g.len(), 9 * 13);
        for idx in [0, 5, 17, g.len() - 1] {
            let (i, j) = g.ij(idx);
            assert_eq!(g.index(i, j), idx);
        }
        assert_eq!(g.coords(g.index(2, 4)), [0.0, 3.0]);
    }

    #[test]
    fn interpolation_is_exact_for_bilinear_data() {
        let g = GridSpec::square(-1.0, 1.0, 16).unwrap();
        let f = |p: Point| 1.0 + 2.0 * p[0] - 0.5 * p[1] + 0.25 * p[0] * p[1];
        let vals: Vec<f64> = (0..g.len()).map(|k| f(g.coords(k))).collect();
        for x in [[0.013, -0.77], [0.999, 0.999], [-1.0, 1.0]] {
            assert!((g.interpolate(&vals, x) - f(x)).abs() < 1e-12);
        }
        // clamped beyond the edge
        assert!((g.interpolate(&vals, [3.0, 0.0]) - f([1.0, 0.0])).abs() < 1e-12);
    }
}
