use serde::{Deserialize, Serialize};

use super::{GridSpec, Point};
use crate::{Error, Result};

/// Sound speed sampled at grid nodes, with the bound `M > 1` such that
/// `1/M < c < M` everywhere. The speed induces the travel-time metric
/// `g = c⁻² δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedField {
    grid: GridSpec,
    values: Vec<f64>,
    bound: f64,
}

/// C¹ smoothstep on `[0, 1]`.
pub(crate) fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

impl SpeedField {
    pub fn new(grid: GridSpec, values: Vec<f64>, bound: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "speed has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if !(bound.is_finite() && bound > 1.0) {
            return Err(Error::InvalidParameter(format!("speed bound M must be finite and > 1, got {bound}")));
        }
        if let Some((index, &value)) =
            values.iter().enumerate().find(|(_, &c)| !(c.is_finite() && c > 1.0 / bound && c < bound))
        {
            return Err(Error::SpeedOutOfBounds { index, value, bound });
        }
        Ok(Self { grid, values, bound })
    }

    /// Builds a field from node values and picks `M = 2 max(c_max, 1/c_min)`.
    pub fn with_auto_bound(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let bound = values.iter().fold(1.0f64, |m, &c| if c > 0.0 { m.max(c).max(1.0 / c) } else { m }) * 2.0;
        Self::new(grid, values, bound)
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        Self::with_auto_bound(grid, values)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::with_auto_bound(grid, vec![c; grid.len()])
    }

    /// Two half-planes split at `x₂ = interface`, blended over `width` with a
    /// C¹ ramp centred on the interface.
    pub fn layered(grid: GridSpec, below: f64, above: f64, interface: f64, width: f64) -> Result<Self> {
        Self::from_fn(grid, |x| {
            let t = if width > 0.0 {
                (x[1] - interface) / width + 0.5
            } else if x[1] >= interface {
                1.0
            } else {
                0.0
            };
            below + (above - below) * smoothstep(t)
        })
    }

    /// Radially symmetric inclusion: `inside` within `radius` of `center`,
    /// `outside` beyond, with a C¹ transition of the given width.
    pub fn radial(grid: GridSpec, center: Point, inside: f64, outside: f64, radius: f64, width: f64) -> Result<Self> {
        Self::from_fn(grid, |x| {
            let r = super::dist(x, center);
            let t = if width > 0.0 {
                (r - radius) / width + 0.5
            } else if r >= radius {
                1.0
            } else {
                0.0
            };
            inside + (outside - inside) * smoothstep(t)
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    #[inline]
    pub fn node(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Speed at an arbitrary point; constant extension beyond the grid.
    pub fn at(&self, x: Point) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::MAX, f64::min)
    }

    /// Pointwise comparison used by the monotonicity properties.
    pub fn dominates(&self, other: &SpeedField) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::square(-1.0, 1.0, 16).unwrap()
    }

    #[test]
    fn bound_is_a_hard_invariant() {
        let g = grid();
        let mut v = vec![1.0; g.len()];
        v[7] = 0.4;
        match SpeedField::new(g, v, 2.0) {
            Err(Error::SpeedOutOfBounds { index: 7, .. }) => {}
            other => panic!("expected bound violation, got {other:?}"),
        }
        assert!(SpeedField::new(g, vec![2.0; g.len()], 2.0).is_err(), "c < M is strict");
        assert!(SpeedField::new(g, vec![1.0; g.len()], 1.0).is_err(), "M > 1");
        let mut v = vec![1.0; g.len()];
        v[0] = f64::NAN;
        assert!(SpeedField::new(g, v, 4.0).is_err());
    }

    #[test]
    fn layered_profile_hits_both_plateaus() {
        let g = grid();
        let c = SpeedField::layered(g, 1.0, 2.0, 0.0, 0.25).unwrap();
        assert_eq!(c.at([0.0, -0.5]), 1.0);
        assert_eq!(c.at([0.0, 0.5]), 2.0);
        assert!((c.at([0.0, 0.0]) - 1.5).abs() < 1e-12);
        assert!(c.bound() > 2.0);
    }
}
