//! The detector coverage condition and the minimal observation time.
//!
//! For a detector patch Γ ⊂ ∂Ω the condition asks that every x ∈ Ω has some
//! p ∈ Γ with `d(x, p) < w(p)`, where the clearance `w(p) = d_{ℝⁿ∖Ω}(p, ∂Ω∖Γ)`
//! is measured along curves that stay outside Ω. The report carries the margin
//! `max_p [w(p) − d(x, p)]` at every node of Ω and the maximising detector.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::field::{BoundaryPatch, Region, SpeedField};
use crate::geodesic::{curve_length, solve_eikonal, solve_eikonal_on, Path, Restriction, Source};
use crate::{Error, Result};

/// A real number or one of the two infinities, kept apart from `f64`
/// infinities so nothing does arithmetic on them by accident.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Extended {
    NegInfinite,
    Finite(f64),
    PosInfinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Lossy conversion for rasters and plotting.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::NegInfinite => f64::NEG_INFINITY,
            Extended::Finite(v) => v,
            Extended::PosInfinite => f64::INFINITY,
        }
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::NegInfinite => s.serialize_str("-inf"),
            Extended::Finite(v) => s.serialize_f64(*v),
            Extended::PosInfinite => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Extended::Finite(v)),
            Repr::Str(s) if s == "+inf" => Ok(Extended::PosInfinite),
            Repr::Str(s) if s == "-inf" => Ok(Extended::NegInfinite),
            Repr::Str(s) => {
                Err(serde::de::Error::custom(format!("expected a number, \"+inf\" or \"-inf\", got {s:?}")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum Strategy {
    /// One free-space solve from Γ seeded with `−w(p)`.
    OffsetEikonal,
    /// One free-space solve per detector on a nested, evenly spread subset
    /// of `k` detectors; a lower bound on the true margin.
    Subsample(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageOptions {
    pub strategy: Strategy,
    /// Slack for the strict inequality, in grid spacings (ε_P = factor · h).
    pub epsilon_factor: f64,
    /// Subset size used when the offset seeding fails its compatibility check.
    pub fallback_k: usize,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self { strategy: Strategy::OffsetEikonal, epsilon_factor: 3.0, fallback_k: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageStatus {
    Satisfied,
    Violated,
    /// `|min margin| ≤ ε_P`: cannot be decided at this resolution.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub status: CoverageStatus,
    pub satisfied: bool,
    /// Per grid node; `None` outside Ω.
    pub margin: Vec<Option<Extended>>,
    /// Per grid node; index into the patch's Γ samples of the maximiser.
    pub witness: Vec<Option<usize>>,
    /// Per Γ sample.
    pub clearance: Vec<Extended>,
    pub min_margin: Extended,
    pub min_margin_node: Option<usize>,
    /// `max_{x ∈ Ω} d(x, Γ)`; `None` for Γ = ∅.
    pub t_min: Option<f64>,
    pub epsilon: f64,
    /// Strategy actually used (after any fallback).
    pub strategy: Strategy,
    /// Largest excess of `|w(p) − w(q)|` over `d(p, q)` between neighbouring
    /// detectors, when the offset strategy was attempted.
    pub compatibility_defect: Option<f64>,
}

impl CoverageReport {
    pub fn margin_at(&self, node: usize) -> Option<Extended> {
        self.margin[node]
    }
}

/// `w(p) = d_{ℝⁿ∖Ω}(p, ∂Ω∖Γ)` at every Γ sample: one exterior solve from the
/// unmeasured boundary. `+∞` when ∂Ω∖Γ is empty.
pub fn exterior_clearance(region: &Region, patch: &BoundaryPatch, speed: &SpeedField) -> Result<Vec<Extended>> {
    patch.check_region(region)?;
    check_grid(region, speed)?;
    if patch.is_empty() {
        return Ok(Vec::new());
    }
    if patch.complement().is_empty() {
        return Ok(vec![Extended::PosInfinite; patch.samples().len()]);
    }
    let field = solve_eikonal(
        speed,
        &Source::boundary(patch.complement()).with_label("unmeasured boundary"),
        Restriction::Exterior(region),
    )?;
    Ok(patch.samples().iter().map(|b| field.at(b.position).map_or(Extended::PosInfinite, Extended::Finite)).collect())
}

fn check_grid(region: &Region, speed: &SpeedField) -> Result<()> {
    if region.grid().same_as(speed.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch("region and speed"))
    }
}

/// `max_{x ∈ Ω} d(x, Γ)`: the observation time must exceed this.
pub fn min_time(region: &Region, patch: &BoundaryPatch, speed: &SpeedField) -> Result<f64> {
    patch.check_region(region)?;
    check_grid(region, speed)?;
    if patch.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let inside = region.interior_mask();
    let field = solve_eikonal_on(speed, &Source::boundary(patch.samples()), Restriction::FreeSpace, &inside)?;
    Ok(region.interior_nodes().filter_map(|k| field.get(k)).fold(0.0, f64::max))
}

/// Nested, evenly spread subset of `k` indices out of `n`: the first `k`
/// points of the base-2 van der Corput sequence scaled to `n`, skipping
/// duplicates. For `k` a power of two this is an exact uniform stride.
pub fn subsample_indices(n: usize, k: usize) -> Vec<usize> {
    subsample_with_anchors(n, k, &[])
}

/// As [`subsample_indices`], but the `anchors` come first. Taking a prefix of
/// one fixed ordering keeps the subsets nested in `k`.
fn subsample_with_anchors(n: usize, k: usize, anchors: &[usize]) -> Vec<usize> {
    let k = k.min(n);
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for &a in anchors {
        if out.len() == k {
            return out;
        }
        if !taken[a] {
            taken[a] = true;
            out.push(a);
        }
    }
    let mut i: u64 = 0;
    while out.len() < k {
        let t = (i.reverse_bits() as f64) / 2f64.powi(64);
        let idx = ((t * n as f64) as usize).min(n - 1);
        if !taken[idx] {
            taken[idx] = true;
            out.push(idx);
        }
        i += 1;
    }
    out
}

/// Local maxima of the clearance along Γ, highest first. The margin is
/// usually maximised at one of these kinks, so a subsample that misses them
/// loses up to half a sample spacing.
fn clearance_peaks(patch: &BoundaryPatch, w: &[f64]) -> Vec<usize> {
    let idx = patch.sample_indices();
    let total = patch.boundary_len();
    let m = idx.len();
    let neighbour = |a: usize, step: isize| -> Option<usize> {
        let b = (a as isize + step).rem_euclid(m as isize) as usize;
        let expect = (idx[a] as isize + step).rem_euclid(total as isize) as usize;
        (b != a && idx[b] == expect).then_some(b)
    };
    let mut peaks: Vec<usize> = (0..m)
        .filter(|&a| {
            let prev = neighbour(a, -1).map_or(f64::NEG_INFINITY, |b| w[b]);
            let next = neighbour(a, 1).map_or(f64::NEG_INFINITY, |b| w[b]);
            // ">" on one side breaks plateaus at their first sample
            w[a] > prev && w[a] >= next
        })
        .collect();
    peaks.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    peaks
}

/// Evaluates the coverage condition for Γ.
pub fn check_property_p(
    region: &Region,
    patch: &BoundaryPatch,
    speed: &SpeedField,
    options: &CoverageOptions,
) -> Result<CoverageReport> {
    patch.check_region(region)?;
    check_grid(region, speed)?;
    if let Strategy::Subsample(0) = options.strategy {
        return Err(Error::InvalidParameter("subsample size must be positive".into()));
    }
    let grid = region.grid();
    let epsilon = options.epsilon_factor * grid.h();
    let inside = region.interior_mask();
    let n = grid.len();

    let uniform = |m: Extended, w: Option<usize>, t_min, clearance| {
        let margin = (0..n).map(|k| inside[k].then_some(m)).collect();
        let witness = (0..n).map(|k| if inside[k] { w } else { None }).collect();
        let status = classify(m, epsilon);
        CoverageReport {
            status,
            satisfied: status == CoverageStatus::Satisfied,
            margin,
            witness,
            clearance,
            min_margin: m,
            min_margin_node: None,
            t_min,
            epsilon,
            strategy: options.strategy,
            compatibility_defect: None,
        }
    };

    if patch.is_empty() {
        return Ok(uniform(Extended::NegInfinite, None, None, Vec::new()));
    }
    let t_min = Some(min_time(region, patch, speed)?);
    let clearance = exterior_clearance(region, patch, speed)?;
    if let Some(first) = clearance.iter().position(|w| *w == Extended::PosInfinite) {
        return Ok(uniform(Extended::PosInfinite, Some(first), t_min, clearance));
    }
    let w: Vec<f64> = clearance.iter().map(|c| c.finite().expect("finite clearances")).collect();

    let mut strategy = options.strategy;
    let mut defect = None;
    if strategy == Strategy::OffsetEikonal {
        let d = compatibility_defect(region, patch, speed, &w)?;
        defect = Some(d);
        if d > 2.0 * grid.h() {
            strategy = Strategy::Subsample(options.fallback_k);
        }
    }

    let (margin_vals, witness): (Vec<f64>, Vec<Option<usize>>) = match strategy {
        Strategy::OffsetEikonal => {
            let source = Source::with_offsets(
                patch.samples().iter().map(|b| b.position).collect(),
                w.iter().map(|v| -v).collect(),
            )?
            .with_label("detectors offset by -clearance");
            let field = solve_eikonal_on(speed, &source, Restriction::FreeSpace, &inside)?;
            (0..n)
                .map(|k| match (inside[k], field.get(k)) {
                    (true, Some(v)) => (-v, field.witness(k).map(|l| l as usize)),
                    _ => (f64::NAN, None),
                })
                .unzip()
        }
        Strategy::Subsample(k) => subsample_margin(patch, speed, &w, &inside, k)?,
    };

    let mut min_margin = f64::INFINITY;
    let mut min_node = None;
    for k in 0..n {
        if inside[k] && margin_vals[k] < min_margin {
            min_margin = margin_vals[k];
            min_node = Some(k);
        }
    }
    let min_margin = Extended::Finite(min_margin);
    let status = classify(min_margin, epsilon);
    Ok(CoverageReport {
        status,
        satisfied: status == CoverageStatus::Satisfied,
        margin: (0..n).map(|k| inside[k].then(|| Extended::Finite(margin_vals[k]))).collect(),
        witness,
        clearance,
        min_margin,
        min_margin_node: min_node,
        t_min,
        epsilon,
        strategy,
        compatibility_defect: defect,
    })
}

fn classify(min_margin: Extended, epsilon: f64) -> CoverageStatus {
    if min_margin > Extended::Finite(epsilon) {
        CoverageStatus::Satisfied
    } else if min_margin < Extended::Finite(-epsilon) {
        CoverageStatus::Violated
    } else {
        CoverageStatus::Indeterminate
    }
}

/// Offsets `−w` are a valid seeding only if `w` is 1-Lipschitz in the metric
/// along Γ; this returns the worst excess over neighbouring detectors.
fn compatibility_defect(region: &Region, patch: &BoundaryPatch, speed: &SpeedField, w: &[f64]) -> Result<f64> {
    let idx = patch.sample_indices();
    let total = region.boundary().len();
    let mut worst: f64 = 0.0;
    for a in 0..idx.len() {
        let b = (a + 1) % idx.len();
        if b == a || (idx[a] + 1) % total != idx[b] {
            continue; // not neighbours on ∂Ω
        }
        let (p, q) = (patch.samples()[a].position, patch.samples()[b].position);
        let d = curve_length(&Path::open(vec![p, q]), speed)?;
        worst = worst.max((w[a] - w[b]).abs() - d);
    }
    Ok(worst)
}

fn subsample_margin(
    patch: &BoundaryPatch,
    speed: &SpeedField,
    w: &[f64],
    inside: &[bool],
    k: usize,
) -> Result<(Vec<f64>, Vec<Option<usize>>)> {
    let mut chosen = subsample_with_anchors(patch.samples().len(), k, &clearance_peaks(patch, w));
    chosen.sort_unstable();
    let fields = chosen
        .par_iter()
        .map(|&p| solve_eikonal_on(speed, &Source::point(patch.samples()[p].position), Restriction::FreeSpace, inside))
        .collect::<Result<Vec<_>>>()?;
    let n = inside.len();
    let mut margin = vec![f64::NAN; n];
    let mut witness = vec![None; n];
    for node in (0..n).filter(|&k| inside[k]) {
        let mut best = Extended::NegInfinite;
        for (&p, field) in chosen.iter().zip(&fields) {
            if let Some(d) = field.get(node) {
                let cand = Extended::Finite(w[p] - d);
                // strict comparison keeps the lowest sample index on ties
                if cand > best {
                    best = cand;
                    witness[node] = Some(p);
                }
            }
        }
        margin[node] = best.to_f64();
    }
    Ok((margin, witness))
}

/// Upper-level convenience: margin at one point by brute force over the
/// given per-detector distances `d(x, p)`.
pub fn margin_from_distances(clearance: &[Extended], distances: &[f64]) -> Extended {
    clearance.iter().zip(distances).fold(Extended::NegInfinite, |m, (w, d)| {
        let cand = match w {
            Extended::Finite(w) => Extended::Finite(w - d),
            other => *other,
        };
        m.max(cand)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_region, GridSpec, Shape};

    fn disk(cells: usize) -> (Region, SpeedField) {
        let g = GridSpec::square(-1.5, 1.5, cells).unwrap();
        (
            make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap(),
            SpeedField::constant(g, 1.0).unwrap(),
        )
    }

    #[test]
    fn full_boundary_gives_infinite_clearance() {
        let (r, c) = disk(96);
        let full = BoundaryPatch::full(&r);
        let w = exterior_clearance(&r, &full, &c).unwrap();
        assert!(w.iter().all(|w| *w == Extended::PosInfinite));
        let rep = check_property_p(&r, &full, &c, &CoverageOptions::default()).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.status, CoverageStatus::Satisfied);
        assert!(r.interior_nodes().all(|k| rep.margin[k] == Some(Extended::PosInfinite)));
    }

    #[test]
    fn empty_patch_is_unsatisfied() {
        let (r, c) = disk(96);
        let empty = BoundaryPatch::new(&r, &[]).unwrap();
        assert!(exterior_clearance(&r, &empty, &c).unwrap().is_empty());
        let rep = check_property_p(&r, &empty, &c, &CoverageOptions::default()).unwrap();
        assert!(!rep.satisfied);
        assert_eq!(rep.min_margin, Extended::NegInfinite);
        assert!(matches!(min_time(&r, &empty, &c), Err(Error::EmptyPatch)));
    }

    #[test]
    fn endpoint_clearance_is_small() {
        let (r, c) = disk(192);
        let h = r.grid().h();
        let upper = BoundaryPatch::new(&r, &[[0.0, 0.5]]).unwrap();
        let w = exterior_clearance(&r, &upper, &c).unwrap();
        assert!(w.first().unwrap().finite().unwrap() <= 2.0 * h);
        assert!(w.last().unwrap().finite().unwrap() <= 2.0 * h);
    }

    #[test]
    fn min_time_of_full_disk() {
        for speed in [1.0, 2.0] {
            let (r, _) = disk(192);
            let c = SpeedField::constant(*r.grid(), speed).unwrap();
            let t = min_time(&r, &BoundaryPatch::full(&r), &c).unwrap();
            assert!((t - 1.0 / speed).abs() <= 3.0 * r.grid().h(), "{t}");
        }
    }

    #[test]
    fn subsample_indices_are_nested_and_spread() {
        let a = subsample_indices(403, 16);
        let b = subsample_indices(403, 64);
        assert_eq!(&b[..16], &a[..]);
        let mut s = b.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 64);
        let mut all = subsample_indices(10, 64);
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn extended_serialises_infinities_as_strings() {
        let v = vec![Extended::NegInfinite, Extended::Finite(0.5), Extended::PosInfinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["-inf",0.5,"+inf"]"#);
        let back: Vec<Extended> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn strategies_agree_on_three_quarter_arc() {
        let g = GridSpec::square(-1.25, 1.25, 160).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let c = SpeedField::constant(g, 1.0).unwrap();
        let p = BoundaryPatch::new(&r, &[[0.0, 0.625], [0.875, 1.0]]).unwrap();
        let a = check_property_p(&r, &p, &c, &CoverageOptions::default()).unwrap();
        let sub = CoverageOptions { strategy: Strategy::Subsample(32), ..Default::default() };
        let b = check_property_p(&r, &p, &c, &sub).unwrap();
        assert_eq!(a.strategy, Strategy::OffsetEikonal);
        assert!(a.satisfied && b.satisfied);
        for k in r.interior_nodes() {
            let (x, y) = (a.margin[k].unwrap().to_f64(), b.margin[k].unwrap().to_f64());
            assert!((x - y).abs() <= 4.0 * g.h(), "node {k}: {x} vs {y}");
        }
    }

    #[test]
    fn subsample_starts_at_clearance_peak() {
        let g = GridSpec::square(-1.25, 1.25, 96).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let c = SpeedField::constant(g, 1.0).unwrap();
        let p = BoundaryPatch::new(&r, &[[0.0, 0.625], [0.875, 1.0]]).unwrap();
        let w: Vec<f64> = exterior_clearance(&r, &p, &c).unwrap().iter().map(|w| w.to_f64()).collect();
        let peaks = clearance_peaks(&p, &w);
        let top = p.samples()[peaks[0]].position;
        assert!(top[0].abs() < 0.1 && top[1] > 0.9, "{top:?}");
    }

    #[test]
    fn zero_subsample_is_rejected() {
        let (r, c) = disk(64);
        let p = BoundaryPatch::new(&r, &[[0.0, 0.5]]).unwrap();
        let opts = CoverageOptions { strategy: Strategy::Subsample(0), ..Default::default() };
        assert!(check_property_p(&r, &p, &c, &opts).is_err());
    }
}
