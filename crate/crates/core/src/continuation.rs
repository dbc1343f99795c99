//! Space-time sets on which a wave must vanish.
//!
//! Covers characteristic tests through the symbol `τ² − c²|ξ|²`, backward
//! domains of dependence outside the obstacle, and the cylinder-to-cone
//! growth of unique continuation together with its iterated form.

use serde::{Deserialize, Serialize};

use crate::field::{BoundaryPatch, GridSpec, Point, Region, SpeedField};
use crate::geodesic::{
    central_gradient, gradient_exclusions, solve_eikonal, DistanceField, LipschitzOptions, Restriction, Source,
};
use crate::wave::{snapshot_energy, WaveRun};
use crate::{Error, Result};

/// Boolean raster over nodes × time levels `t_start + k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeSet {
    pub grid: GridSpec,
    pub dt: f64,
    pub t_start: f64,
    pub slices: usize,
    indicator: Vec<bool>,
    pub label: String,
}

impl SpaceTimeSet {
    pub fn empty(grid: GridSpec, dt: f64, t_start: f64, slices: usize, label: impl Into<String>) -> Self {
        Self { grid, dt, t_start, slices, indicator: vec![false; grid.len() * slices], label: label.into() }
    }

    /// Builds the set slice by slice from a predicate on `(node, time)`.
    pub fn from_fn(
        grid: GridSpec,
        dt: f64,
        t_start: f64,
        slices: usize,
        label: impl Into<String>,
        mut member: impl FnMut(usize, f64) -> bool,
    ) -> Self {
        let n = grid.len();
        let mut indicator = Vec::with_capacity(n * slices);
        for s in 0..slices {
            let t = t_start + s as f64 * dt;
            indicator.extend((0..n).map(|k| member(k, t)));
        }
        Self { grid, dt, t_start, slices, indicator, label: label.into() }
    }

    pub fn time(&self, slice: usize) -> f64 {
        self.t_start + slice as f64 * self.dt
    }

    pub fn slice(&self, slice: usize) -> &[bool] {
        let n = self.grid.len();
        &self.indicator[slice * n..(slice + 1) * n]
    }

    pub fn contains(&self, slice: usize, node: usize) -> bool {
        self.indicator[slice * self.grid.len() + node]
    }

    /// Slice whose time is within `dt/2` of `t`.
    pub fn slice_at(&self, t: f64) -> Option<usize> {
        let s = ((t - self.t_start) / self.dt).round();
        (s >= 0.0 && (s as usize) < self.slices && (self.time(s as usize) - t).abs() <= 0.5 * self.dt)
            .then_some(s as usize)
    }

    pub fn count(&self) -> usize {
        self.indicator.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.indicator.contains(&true)
    }

    pub fn slice_as_f64(&self, slice: usize) -> Vec<f64> {
        self.slice(slice).iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    fn check_compatible(&self, other: &SpaceTimeSet) -> Result<()> {
        let same_time = (self.dt - other.dt).abs() <= 1e-9 * self.dt
            && (self.t_start - other.t_start).abs() <= 1e-9 * self.dt.max(1.0)
            && self.slices == other.slices;
        if self.grid.same_as(&other.grid) && same_time {
            Ok(())
        } else {
            Err(Error::GridMismatch("space-time sets"))
        }
    }

    pub fn is_subset_of(&self, other: &SpaceTimeSet) -> Result<bool> {
        self.check_compatible(other)?;
        Ok(self.indicator.iter().zip(&other.indicator).all(|(&a, &b)| !a || b))
    }

    /// Hausdorff distance between matching slices (∞ when exactly one is empty).
    pub fn hausdorff_per_slice(&self, other: &SpaceTimeSet) -> Result<Vec<f64>> {
        self.check_compatible(other)?;
        Ok((0..self.slices).map(|s| hausdorff(&self.grid, self.slice(s), other.slice(s))).collect())
    }
}

/// Hausdorff distance between two node sets.
pub fn hausdorff(grid: &GridSpec, a: &[bool], b: &[bool]) -> f64 {
    let (any_a, any_b) = (a.contains(&true), b.contains(&true));
    match (any_a, any_b) {
        (false, false) => return 0.0,
        (true, false) | (false, true) => return f64::INFINITY,
        _ => {}
    }
    let to_b = distance_transform(grid, b);
    let to_a = distance_transform(grid, a);
    let one_way =
        |set: &[bool], dist: &[f64]| set.iter().zip(dist).filter(|(&m, _)| m).map(|(_, &d)| d).fold(0.0, f64::max);
    one_way(a, &to_b).max(one_way(b, &to_a)).sqrt()
}

/// Squared Euclidean distance from every node to the nearest marked node,
/// by the separable lower-envelope transform.
pub fn distance_transform(grid: &GridSpec, mask: &[bool]) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut f: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let mut line = Vec::new();
    for j in 0..ny {
        line.clear();
        line.extend_from_slice(&f[j * nx..(j + 1) * nx]);
        let out = envelope_1d(&line, grid.spacing[0]);
        f[j * nx..(j + 1) * nx].copy_from_slice(&out);
    }
    for i in 0..nx {
        line.clear();
        line.extend((0..ny).map(|j| f[j * nx + i]));
        let out = envelope_1d(&line, grid.spacing[1]);
        for (j, v) in out.into_iter().enumerate() {
            f[j * nx + i] = v;
        }
    }
    f
}

/// `out[q] = min_p f[p] + (h·(q − p))²`.
fn envelope_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let finite: Vec<usize> = (0..n).filter(|&p| f[p].is_finite()).collect();
    if finite.is_empty() {
        return out;
    }
    let h2 = h * h;
    let mut v: Vec<usize> = Vec::with_capacity(finite.len());
    let mut z: Vec<f64> = Vec::with_capacity(finite.len() + 1);
    let cross = |p: usize, q: usize| {
        ((f[q] / h2 + (q * q) as f64) - (f[p] / h2 + (p * p) as f64)) / (2.0 * (q as f64 - p as f64))
    };
    for &q in &finite {
        while let Some(&p) = v.last() {
            let s = cross(p, q);
            if v.len() > 1 && s <= z[z.len() - 1] {
                v.pop();
                z.pop();
            } else {
                z.push(s);
                break;
            }
        }
        if v.is_empty() {
            z.clear();
            z.push(f64::NEG_INFINITY);
        }
        v.push(q);
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *slot = f[v[k]] + h2 * d * d;
    }
    out
}

/// A covector `(ξ, τ)` based at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovectorSample {
    pub x: Point,
    pub xi: Point,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Causality {
    Spacelike,
    Null,
    Timelike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalClass {
    pub causality: Causality,
    pub noncharacteristic: bool,
}

const SYMBOL_TOL: f64 = 1e-12;

/// `τ² − c(x)²|ξ|²`.
pub fn symbol(speed: &SpeedField, sample: &CovectorSample) -> Result<f64> {
    if !speed.grid().contains(sample.x) {
        return Err(Error::OutsideGrid(sample.x[0], sample.x[1]));
    }
    let c = speed.at(sample.x);
    Ok(sample.tau * sample.tau - c * c * (sample.xi[0] * sample.xi[0] + sample.xi[1] * sample.xi[1]))
}

pub fn classify_surface_normal(speed: &SpeedField, sample: &CovectorSample) -> Result<NormalClass> {
    if sample.tau == 0.0 && sample.xi == [0.0, 0.0] {
        return Err(Error::ZeroCovector);
    }
    let p = symbol(speed, sample)?;
    let c = speed.at(sample.x);
    let spatial = c * sample.xi[0].hypot(sample.xi[1]);
    let temporal = sample.tau.abs();
    let scale = temporal * temporal + spatial * spatial;
    let causality = if (spatial - temporal).abs() <= SYMBOL_TOL * spatial.max(temporal) {
        Causality::Null
    } else if spatial < temporal {
        Causality::Spacelike
    } else {
        Causality::Timelike
    };
    Ok(NormalClass { causality, noncharacteristic: p.abs() > SYMBOL_TOL * scale })
}

#[derive(Debug, Clone)]
pub struct DomainOfDependence {
    pub set: SpaceTimeSet,
    pub apex: Point,
    pub height: f64,
    pub delta_shrink: f64,
    /// Whether U meets ∂Ω only inside Γ.
    pub admissible: bool,
    /// `min_q (1−δ)d(q, p) − H` over unmeasured boundary samples `q`; the
    /// check passes iff this is ≥ 0.
    pub complement_slack: f64,
    /// Exterior nodes of the `t = 0` face (Σ₁).
    pub sigma1: Vec<usize>,
    /// Nodes under the graph face `t = H − (1−δ)d(x, p)` (Σ₂) with that time.
    pub sigma2: Vec<(usize, f64)>,
    /// Γ samples lying under the lateral face (Σ₃).
    pub sigma3: Vec<usize>,
    pub distance: DistanceField,
}

impl DomainOfDependence {
    /// Space-time normals `((1−δ)∇d, 1)` of the graph face at its nodes,
    /// skipping nodes where the gradient is not trusted (near the apex or
    /// the obstacle, see [`LipschitzOptions`]).
    pub fn sigma2_normals(&self, options: &LipschitzOptions) -> Vec<(usize, CovectorSample)> {
        let skip = gradient_exclusions(&self.distance, options);
        let s = 1.0 - self.delta_shrink;
        self.sigma2
            .iter()
            .filter(|(k, _)| !skip[*k])
            .filter_map(|&(k, _)| {
                let g = central_gradient(&self.distance, k)?;
                Some((k, CovectorSample { x: self.set.grid.coords(k), xi: [s * g[0], s * g[1]], tau: 1.0 }))
            })
            .collect()
    }
}

/// `U = {(x, t_k) : x ∉ Ω, (1−δ)·d_{ℝⁿ∖Ω}(x, p) + t_k < H}` on levels
/// `t_k = k·dt ≤ H`.
pub fn domain_of_dependence(
    p: Point,
    height: f64,
    region: &Region,
    patch: &BoundaryPatch,
    speed: &SpeedField,
    delta_shrink: f64,
    dt: f64,
) -> Result<DomainOfDependence> {
    patch.check_region(region)?;
    if !(0.0..1.0).contains(&delta_shrink) {
        return Err(Error::InvalidParameter(format!("deltaShrink must lie in [0, 1), got {delta_shrink}")));
    }
    if !(height >= 0.0 && height.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("need H ≥ 0 and dt > 0, got H = {height}, dt = {dt}")));
    }
    if region.signed_distance(p) <= 0.0 {
        return Err(Error::InsideRegion(p[0], p[1]));
    }
    let grid = *region.grid();
    let distance = solve_eikonal(speed, &Source::point(p).with_label("apex"), Restriction::Exterior(region))?;
    let shrink = 1.0 - delta_shrink;
    let slices = (height / dt + 1e-9).floor() as usize + 1;
    let set = SpaceTimeSet::from_fn(grid, dt, 0.0, slices, "domain of dependence", |k, t| {
        !region.is_inside(k) && distance.get(k).is_some_and(|d| shrink * d + t < height)
    });

    let complement_slack = patch
        .complement()
        .iter()
        .map(|q| distance.at(q.position).map_or(f64::INFINITY, |d| shrink * d - height))
        .fold(f64::INFINITY, f64::min);
    let sigma1 = (0..grid.len()).filter(|&k| set.contains(0, k)).collect();
    let sigma2 = (0..grid.len())
        .filter(|&k| set.contains(0, k))
        .map(|k| (k, height - shrink * distance.get(k).expect("member nodes are reachable")))
        .collect();
    let sigma3 = patch
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, b)| distance.at(b.position).is_some_and(|d| shrink * d < height))
        .map(|(i, _)| i)
        .collect();
    Ok(DomainOfDependence {
        set,
        apex: p,
        height,
        delta_shrink,
        admissible: complement_slack >= 0.0,
        complement_slack,
        sigma1,
        sigma2,
        sigma3,
        distance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DodReport {
    pub max_abs: f64,
    pub max_abs_node: Option<usize>,
    pub max_abs_time: Option<f64>,
    /// Largest per-slice ratio of the energy inside U to the total energy.
    pub energy_fraction: f64,
    pub checked_slices: usize,
}

/// Measures the field of an exterior run on U. Every time level of U needs
/// a snapshot in the run.
pub fn verify_dod(run: &WaveRun, set: &SpaceTimeSet) -> Result<DodReport> {
    if !run.grid.same_as(&set.grid) {
        return Err(Error::GridMismatch("run and space-time set"));
    }
    let mut report =
        DodReport { max_abs: 0.0, max_abs_node: None, max_abs_time: None, energy_fraction: 0.0, checked_slices: 0 };
    for s in 0..set.slices {
        let t = set.time(s);
        let snap = run.snapshots.iter().find(|snap| (snap.time - t).abs() <= 1e-6 * run.dt).ok_or_else(|| {
            Error::Discretization(format!("run has no snapshot at t = {t}; record one per set slice"))
        })?;
        let mask = set.slice(s);
        for (k, &inside) in mask.iter().enumerate() {
            if inside && snap.u[k].abs() > report.max_abs {
                report.max_abs = snap.u[k].abs();
                report.max_abs_node = Some(k);
                report.max_abs_time = Some(t);
            }
        }
        let total = snapshot_energy(&run.speed, &snap.u, &snap.velocity, None);
        if total > 0.0 {
            let part = snapshot_energy(&run.speed, &snap.u, &snap.velocity, Some(mask));
            report.energy_fraction = report.energy_fraction.max(part / total);
        }
        report.checked_slices += 1;
    }
    Ok(report)
}

/// Levels `k·dt` for `|k·dt| ≤ extent`.
fn symmetric_levels(extent: f64, dt: f64) -> (f64, usize) {
    let half = (extent / dt + 1e-9).floor() as usize;
    (-(half as f64) * dt, 2 * half + 1)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// The double cone `X = {(x, t) : d(x, z) + |t| < D}` that the vanishing
/// on `B(z, ρ) × [−D, D]` extends to. Its part inside the cylinder is
/// already contained in X, so X is returned on its own.
pub fn uc_cylinder_expand(z: Point, rho: f64, depth: f64, speed: &SpeedField, dt: f64) -> Result<SpaceTimeSet> {
    check_positive("rho", rho)?;
    check_positive("D", depth)?;
    check_positive("dt", dt)?;
    let d = solve_eikonal(speed, &Source::point(z), Restriction::FreeSpace)?;
    let (t0, slices) = symmetric_levels(depth, dt);
    Ok(SpaceTimeSet::from_fn(*speed.grid(), dt, t0, slices, "cone", |k, t| {
        d.get(k).is_some_and(|d| d + t.abs() < depth)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcIteration {
    pub set: SpaceTimeSet,
    pub iterations: usize,
    pub rho: f64,
    pub height: f64,
    pub delta_inj: f64,
    /// Input cylinder `B(p, ρ) × [−H, H]`.
    pub cylinder: SpaceTimeSet,
    /// `{d(x, p) + |t| < ρ + H + 3h}`.
    pub envelope: SpaceTimeSet,
}

/// Repeats the one-step growth from `B(p, ρ+nδ) × [−(H−nδ), H−nδ]`, which
/// gives `{d(x, p) < ρ + nδ + min(H − nδ − |t|, δ)}`, until the time extent
/// is used up. The result is the union of all steps and the input cylinder.
pub fn uc_iterate(p: Point, rho: f64, height: f64, delta_inj: f64, speed: &SpeedField, dt: f64) -> Result<UcIteration> {
    check_positive("rho", rho)?;
    check_positive("H", height)?;
    check_positive("deltaInj", delta_inj)?;
    check_positive("dt", dt)?;
    let grid = *speed.grid();
    let d = solve_eikonal(speed, &Source::point(p), Restriction::FreeSpace)?;
    let iterations = (height / delta_inj - 1e-12).ceil().max(1.0) as usize;
    let radius_at = |t: f64| -> f64 {
        let t = t.abs();
        (0..iterations)
            .filter_map(|n| {
                let reach = n as f64 * delta_inj;
                let h_n = height - reach;
                (t < h_n).then(|| rho + reach + (h_n - t).min(delta_inj))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (t0, slices) = symmetric_levels(height, dt);
    let radii: Vec<f64> = (0..slices).map(|s| radius_at(t0 + s as f64 * dt)).collect();
    let slice_of = |t: f64| (((t - t0) / dt).round() as usize).min(slices - 1);
    let in_cylinder = |k: usize, t: f64| t.abs() <= height + 1e-9 * dt && d.get(k).is_some_and(|d| d < rho);
    let set = SpaceTimeSet::from_fn(grid, dt, t0, slices, "iterated continuation", |k, t| {
        in_cylinder(k, t) || d.get(k).is_some_and(|d| d < radii[slice_of(t)])
    });
    let cylinder = SpaceTimeSet::from_fn(grid, dt, t0, slices, "cylinder", in_cylinder);
    let slack = 3.0 * grid.h();
    let envelope = SpaceTimeSet::from_fn(grid, dt, t0, slices, "causal envelope", |k, t| {
        d.get(k).is_some_and(|d| d + t.abs() < rho + height + slack)
    });
    Ok(UcIteration { set, iterations, rho, height, delta_inj, cylinder, envelope })
}
