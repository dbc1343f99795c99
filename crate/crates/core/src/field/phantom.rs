use serde::{Deserialize, Serialize};

use super::{dist, GridSpec, Point, Region};
use crate::{Error, Result};

/// Compactly supported polynomial bump `A (1 − |x − c|²/R²)^k` for
/// `|x − c| < R`. `smoothness = k` gives a C^{k−1} profile; the default
/// of 2 is C¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
    #[serde(default = "default_smoothness")]
    pub smoothness: u32,
}

fn default_smoothness() -> u32 {
    2
}

impl Bump {
    pub fn new(center: Point, radius: f64, amplitude: f64) -> Self {
        Self { center, radius, amplitude, smoothness: 2 }
    }

    pub fn value(&self, x: Point) -> f64 {
        let r2 = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)) / (self.radius * self.radius);
        if r2 < 1.0 {
            self.amplitude * (1.0 - r2).powi(self.smoothness as i32)
        } else {
            0.0
        }
    }
}

/// Initial pressure `f`, supported strictly inside Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    grid: GridSpec,
    values: Vec<f64>,
    /// Lower bound on the distance from supp f to ∂Ω; `None` for f ≡ 0.
    support_margin: Option<f64>,
}

pub fn make_phantom(region: &Region, bumps: &[Bump]) -> Result<Phantom> {
    Phantom::from_bumps(region, bumps)
}

impl Phantom {
    pub fn from_bumps(region: &Region, bumps: &[Bump]) -> Result<Self> {
        let grid = *region.grid();
        let required = 2.0 * grid.h();
        let mut margin: Option<f64> = None;
        for (index, bump) in bumps.iter().enumerate() {
            if !(bump.radius.is_finite() && bump.radius > 0.0 && bump.amplitude.is_finite() && bump.smoothness >= 2) {
                return Err(Error::InvalidParameter(format!(
                    "bump {index} needs a positive radius, finite amplitude and smoothness >= 2"
                )));
            }
            let clearance = -region.signed_distance(bump.center) - bump.radius;
            if clearance < required {
                return Err(Error::BumpOutsideDomain { index, clearance, required });
            }
            margin = Some(margin.map_or(clearance, |m: f64| m.min(clearance)));
        }
        let values = (0..grid.len())
            .map(|k| {
                let x = grid.coords(k);
                bumps.iter().map(|b| b.value(x)).sum()
            })
            .collect();
        Ok(Self { grid, values, support_margin: margin })
    }

    /// Wraps arbitrary node values (used by reconstructions and operator
    /// tests). No support margin is recorded.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("phantom values"));
        }
        Ok(Self { grid, values, support_margin: None })
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()], support_margin: None }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn support_margin(&self) -> Option<f64> {
        self.support_margin
    }

    /// Nodes where f is nonzero.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&k| self.values[k] != 0.0)
    }

    pub fn value_at(&self, x: Point) -> f64 {
        self.grid.interpolate(&self.values, x)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Smallest distance between any two bump supports; negative when they overlap.
pub fn bump_gap(a: &Bump, b: &Bump) -> f64 {
    dist(a.center, b.center) - a.radius - b.radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_region, Shape};

    fn disk() -> Region {
        let g = GridSpec::square(-2.0, 2.0, 128).unwrap();
        make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap()
    }

    #[test]
    fn empty_bump_list_is_zero() {
        let r = disk();
        let f = make_phantom(&r, &[]).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert_eq!(f.support_margin(), None);
    }

    #[test]
    fn single_bump_profile() {
        let r = disk();
        let f = make_phantom(&r, &[Bump::new([0.0, 0.0], 0.1, 1.0)]).unwrap();
        let g = r.grid();
        assert_eq!(f.values()[g.nearest([0.0, 0.0])], 1.0);
        for k in 0..g.len() {
            if dist(g.coords(k), [0.0, 0.0]) >= 0.1 {
                assert_eq!(f.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn disjoint_bumps_superpose() {
        let r = disk();
        let a = Bump::new([-0.375, 0.0], 0.2, 1.0);
        let b = Bump::new([0.375, 0.0], 0.2, 2.5);
        assert!(bump_gap(&a, &b) > 0.0);
        let f = make_phantom(&r, &[a, b]).unwrap();
        assert_eq!(f.max_abs(), 2.5);
        let g = r.grid();
        for k in 0..g.len() {
            let x = g.coords(k);
            assert_eq!(f.values()[k], a.value(x) + b.value(x));
        }
    }

    #[test]
    fn support_respects_margin() {
        let r = disk();
        let f = make_phantom(&r, &[Bump::new([0.3, 0.2], 0.4, 1.0), Bump::new([-0.5, -0.1], 0.3, -1.0)]).unwrap();
        let m = f.support_margin().unwrap();
        assert!(m >= 2.0 * r.grid().h());
        for (k, &phi) in r.phi().iter().enumerate() {
            if phi >= -m {
                assert_eq!(f.values()[k], 0.0);
            }
        }
    }

    #[test]
    fn protruding_bump_is_named() {
        let r = disk();
        let err = make_phantom(&r, &[Bump::new([0.0, 0.0], 0.2, 1.0), Bump::new([0.9, 0.0], 0.2, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::BumpOutsideDomain { index: 1, .. }), "{err}");
    }
}
