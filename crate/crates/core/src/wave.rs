//! Explicit finite-difference solution of `u_tt = c²Δu`.
//!
//! Leapfrog in time with the 5-point Laplacian. The grid edge either
//! reflects (mirror ghost nodes, a homogeneous Neumann condition) or is
//! wrapped in a quadratic sponge that absorbs outgoing waves.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{BoundaryPatch, GridSpec, Phantom, Point, Region, SpeedField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    Reflecting,
    Sponge {
        /// Layer thickness in nodes.
        width: usize,
        /// Target amplitude reflection coefficient of the layer.
        reflection: f64,
    },
}

impl BoundaryCondition {
    pub fn sponge() -> Self {
        BoundaryCondition::Sponge { width: 16, reflection: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveOptions {
    pub cfl_factor: f64,
    /// Explicit time step; must satisfy the CFL bound. Derived when absent.
    pub dt: Option<f64>,
    pub boundary: BoundaryCondition,
    /// Times at which to keep the full field (rounded to the nearest step).
    pub snapshot_times: Vec<f64>,
}

impl Default for WaveOptions {
    fn default() -> Self {
        Self { cfl_factor: 0.9, dt: None, boundary: BoundaryCondition::sponge(), snapshot_times: Vec::new() }
    }
}

/// The field and its central-difference velocity at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub u: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Two consecutive time levels; enough to restart the scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub previous: Vec<f64>,
    pub current: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRun {
    pub grid: GridSpec,
    pub dt: f64,
    pub steps: usize,
    pub t_start: f64,
    pub snapshots: Vec<Snapshot>,
    /// `(u^{N−1}, u^N)`.
    pub final_state: WaveState,
    pub options: WaveOptions,
    pub speed: SpeedField,
    /// Nodes the scheme updates; `None` means every node.
    pub active: Option<Vec<bool>>,
}

impl WaveRun {
    pub fn t_max(&self) -> f64 {
        self.t_start + self.steps as f64 * self.dt
    }

    pub fn snapshot_at(&self, time: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - time).abs() <= 0.5 * self.dt)
    }
}

/// Values at receivers: `values[r][k]` is u at receiver `r`, time `t_start + k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub patch: BoundaryPatch,
    pub dt: f64,
    pub t_start: f64,
    pub values: Vec<Vec<f64>>,
}

impl Trace {
    pub fn zeros(patch: BoundaryPatch, dt: f64, samples: usize) -> Self {
        let values = vec![vec![0.0; samples]; patch.samples().len()];
        Self { patch, dt, t_start: 0.0, values }
    }

    pub fn samples(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn t_max(&self) -> f64 {
        self.t_start + (self.samples().max(1) - 1) as f64 * self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm, `sqrt(dt · Σ |Γ|/R · u²)`.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Trace) -> f64 {
        let w = self.dt / self.values.len().max(1) as f64;
        let s: f64 =
            self.values.iter().zip(&other.values).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()).sum();
        w * s
    }

    pub fn sub(&self, other: &Trace) -> Result<Trace> {
        if self.values.len() != other.values.len() || self.samples() != other.samples() {
            return Err(Error::InvalidParameter("traces have different shapes".into()));
        }
        let values =
            self.values.iter().zip(&other.values).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        Ok(Trace { values, ..self.clone() })
    }

    pub fn scaled(&self, a: f64) -> Trace {
        let values = self.values.iter().map(|row| row.iter().map(|v| a * v).collect()).collect();
        Trace { values, ..self.clone() }
    }

    /// CSV with a `time` column and one column per receiver headed by its
    /// boundary parameter.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "time")?;
        for s in self.patch.samples() {
            write!(out, ",{}", s.param)?;
        }
        writeln!(out)?;
        for k in 0..self.samples() {
            write!(out, "{}", self.t_start + k as f64 * self.dt)?;
            for row in &self.values {
                write!(out, ",{}", row[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Extends a trace evenly to `[−T, T]`. Only samples at `t ≥ 0` are used, so
/// extending an extended trace changes nothing.
pub fn even_extension(trace: &Trace) -> Result<Trace> {
    let zero = -trace.t_start / trace.dt;
    let first = zero.round();
    if first < 0.0 || (zero - first).abs() > 1e-6 || first as usize >= trace.samples().max(1) {
        return Err(Error::InvalidParameter("trace has no sample at t = 0".into()));
    }
    let first = first as usize;
    let values = trace
        .values
        .iter()
        .map(|row| {
            let half = &row[first..];
            half.iter().rev().chain(&half[1..]).copied().collect()
        })
        .collect();
    let n = trace.samples() - first;
    Ok(Trace { values, t_start: -((n - 1) as f64) * trace.dt, ..trace.clone() })
}

/// Largest stable step, `cfl · h_min / (√2 · c_max)`.
pub fn cfl_limit(speed: &SpeedField, cfl_factor: f64) -> f64 {
    cfl_factor * speed.grid().h_min() / (2f64.sqrt() * speed.max())
}

/// Time step and step count covering `[0, t_max]` exactly.
pub fn time_step(speed: &SpeedField, t_max: f64, options: &WaveOptions) -> Result<(f64, usize)> {
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("tMax must be finite and nonnegative, got {t_max}")));
    }
    if !(options.cfl_factor > 0.0 && options.cfl_factor <= 0.95) {
        return Err(Error::InvalidParameter(format!("cflFactor must lie in (0, 0.95], got {}", options.cfl_factor)));
    }
    let limit = cfl_limit(speed, 0.95);
    let dt = match options.dt {
        Some(dt) if !(dt > 0.0 && dt <= limit) => return Err(Error::CflViolation { dt, limit }),
        Some(dt) => dt,
        None => cfl_limit(speed, options.cfl_factor),
    };
    if t_max == 0.0 {
        return Ok((dt, 0));
    }
    let steps = (t_max / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((t_max / steps as f64, steps))
}

/// Bilinear sampling weights of a point: four node indices and weights.
pub(crate) type Stencil = [(usize, f64); 4];

pub(crate) fn bilinear_stencil(grid: &GridSpec, x: Point) -> Stencil {
    let c = grid.locate(x);
    let (i, j) = (c.i, c.j);
    [
        (grid.index(i, j), (1.0 - c.fx) * (1.0 - c.fy)),
        (grid.index(i + 1, j), c.fx * (1.0 - c.fy)),
        (grid.index(i, j + 1), (1.0 - c.fx) * c.fy),
        (grid.index(i + 1, j + 1), c.fx * c.fy),
    ]
}

pub(crate) fn sample(u: &[f64], s: &Stencil) -> f64 {
    s.iter().map(|&(k, w)| w * u[k]).sum()
}

/// The spatial part of the scheme: coefficients per node and the Laplacian.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    pub grid: GridSpec,
    /// `c² dt²`.
    pub courant: Vec<f64>,
    /// `σ dt / 2`; empty when there is no sponge.
    pub damping: Vec<f64>,
    pub active: Option<Vec<bool>>,
}

impl Stepper {
    pub fn new(speed: &SpeedField, dt: f64, boundary: BoundaryCondition, active: Option<Vec<bool>>) -> Result<Self> {
        let grid = *speed.grid();
        let courant = speed.values().iter().map(|c| c * c * dt * dt).collect();
        let damping = match boundary {
            BoundaryCondition::Reflecting => Vec::new(),
            BoundaryCondition::Sponge { width, reflection } => {
                if width == 0 || 2 * width >= grid.nx().min(grid.ny()) || !(reflection > 0.0 && reflection < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "sponge needs 0 < width < half the grid and 0 < reflection < 1, got {width}, {reflection}"
                    )));
                }
                sponge_profile(&grid, speed.max(), width, reflection).into_iter().map(|s| 0.5 * s * dt).collect()
            }
        };
        Ok(Self { grid, courant, damping, active })
    }

    /// 5-point Laplacian of `u` at row `j`, mirroring across the grid edge.
    pub fn laplacian_row(&self, u: &[f64], j: usize, out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (ax, ay) =
            (1.0 / (self.grid.spacing[0] * self.grid.spacing[0]), 1.0 / (self.grid.spacing[1] * self.grid.spacing[1]));
        let row = &u[j * nx..(j + 1) * nx];
        let down = if j == 0 { &u[nx..2 * nx] } else { &u[(j - 1) * nx..j * nx] };
        let up = if j + 1 == ny { &u[(ny - 2) * nx..(ny - 1) * nx] } else { &u[(j + 1) * nx..(j + 2) * nx] };
        for i in 0..nx {
            let left = if i == 0 { row[1] } else { row[i - 1] };
            let right = if i + 1 == nx { row[nx - 2] } else { row[i + 1] };
            out[i] = ax * (left - 2.0 * row[i] + right) + ay * (down[i] - 2.0 * row[i] + up[i]);
        }
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let nx = self.grid.nx();
        let mut out = vec![0.0; u.len()];
        out.par_chunks_mut(nx).enumerate().for_each(|(j, row)| self.laplacian_row(u, j, row));
        out
    }

    /// `u^{−1}` for a start at rest: `u^0 + ½ c²dt² Δu^0`.
    pub fn rest_previous(&self, u0: &[f64]) -> Vec<f64> {
        let lap = self.laplacian(u0);
        (0..u0.len()).map(|k| if self.is_active(k) { u0[k] + 0.5 * self.courant[k] * lap[k] } else { u0[k] }).collect()
    }

    fn is_active(&self, k: usize) -> bool {
        self.active.as_ref().is_none_or(|a| a[k])
    }

    /// One leapfrog step into `next`; inactive nodes are copied from `current`.
    /// Returns false if a non-finite value appeared.
    pub fn step(&self, previous: &[f64], current: &[f64], next: &mut [f64]) -> bool {
        let nx = self.grid.nx();
        next.par_chunks_mut(nx)
            .enumerate()
            .map(|(j, row)| {
                self.laplacian_row(current, j, row);
                let mut finite = true;
                for (i, out) in row.iter_mut().enumerate() {
                    let k = j * nx + i;
                    if !self.is_active(k) {
                        *out = current[k];
                        continue;
                    }
                    let drive = self.courant[k] * *out;
                    *out = match self.damping.get(k) {
                        Some(&a) if a > 0.0 => (2.0 * current[k] - (1.0 - a) * previous[k] + drive) / (1.0 + a),
                        _ => 2.0 * current[k] - previous[k] + drive,
                    };
                    finite &= out.is_finite();
                }
                finite
            })
            .reduce(|| true, |a, b| a && b)
    }
}

/// Quadratic damping `σ = σ_max (s/L)²`, with `s` the depth into the layer.
/// `σ_max = 3 c ln(1/R) / (2L)` gives round-trip attenuation `R` across a
/// layer of thickness `L`.
fn sponge_profile(grid: &GridSpec, c_max: f64, width: usize, reflection: f64) -> Vec<f64> {
    let thickness = width as f64 * grid.h();
    let sigma_max = 1.5 * c_max * (1.0 / reflection).ln() / thickness;
    let depth = |k: usize, n: usize| {
        let from_edge = k.min(n - 1 - k);
        if from_edge < width {
            (width - from_edge) as f64 / width as f64
        } else {
            0.0
        }
    };
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            let s = depth(i, grid.nx()).max(depth(j, grid.ny()));
            sigma_max * s * s
        })
        .collect()
}

/// Runs the leapfrog loop from `state`, calling `each(level_index, state)`
/// after every new level. `impose` may overwrite the new level first.
pub(crate) fn evolve_with(
    stepper: &Stepper,
    mut previous: Vec<f64>,
    mut current: Vec<f64>,
    steps: usize,
    first_step: usize,
    mut impose: impl FnMut(usize, &mut [f64]),
    mut each: impl FnMut(usize, &[f64], &[f64], &[f64]) -> Result<()>,
) -> Result<WaveState> {
    let mut next = vec![0.0; current.len()];
    for s in 0..steps {
        let level = first_step + s + 1;
        if !stepper.step(&previous, &current, &mut next) {
            return Err(Error::BlowUp { step: level });
        }
        impose(level, &mut next);
        each(level, &previous, &current, &next)?;
        std::mem::swap(&mut previous, &mut current);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(WaveState { previous, current })
}

/// Continues the undamped or damped scheme for `steps` steps from `state`.
/// Feeding `(u^N, u^{N−1})` back in runs time backwards.
pub fn evolve(
    speed: &SpeedField,
    state: WaveState,
    dt: f64,
    steps: usize,
    boundary: BoundaryCondition,
) -> Result<WaveState> {
    let limit = cfl_limit(speed, 0.95);
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::CflViolation { dt, limit });
    }
    let n = speed.grid().len();
    if state.previous.len() != n || state.current.len() != n {
        return Err(Error::GridMismatch("wave state and speed"));
    }
    let stepper = Stepper::new(speed, dt, boundary, None)?;
    evolve_with(&stepper, state.previous, state.current, steps, 0, |_, _| {}, |_, _, _, _| Ok(()))
}

fn snapshot_steps(times: &[f64], dt: f64, t_start: f64, steps: usize) -> Vec<usize> {
    let mut out: Vec<usize> =
        times.iter().map(|t| (((t - t_start) / dt).round().max(0.0) as usize).min(steps)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn make_snapshot(step: usize, dt: f64, t_start: f64, previous: &[f64], current: &[f64], next: &[f64]) -> Snapshot {
    let velocity = next.iter().zip(previous).map(|(a, b)| (a - b) / (2.0 * dt)).collect();
    Snapshot { step, time: t_start + step as f64 * dt, u: current.to_vec(), velocity }
}

/// Forward problem: `u(·,0) = f`, `u_t(·,0) = 0`. Records the trace on the
/// patch samples when a patch is given.
pub fn simulate(
    speed: &SpeedField,
    phantom: &Phantom,
    t_max: f64,
    patch: Option<&BoundaryPatch>,
    options: &WaveOptions,
) -> Result<(WaveRun, Option<Trace>)> {
    let grid = *speed.grid();
    if !grid.same_as(phantom.grid()) {
        return Err(Error::GridMismatch("phantom and speed"));
    }
    let (dt, steps) = time_step(speed, t_max, options)?;
    let stepper = Stepper::new(speed, dt, options.boundary, None)?;
    let stencils: Vec<Stencil> =
        patch.map_or_else(Vec::new, |p| p.samples().iter().map(|b| bilinear_stencil(&grid, b.position)).collect());
    let mut trace_values: Vec<Vec<f64>> = stencils.iter().map(|_| Vec::with_capacity(steps + 1)).collect();

    let u0 = phantom.values().to_vec();
    if let Some(k) = u0.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("initial value at node {k} is not finite")));
    }
    let previous = stepper.rest_previous(&u0);
    for (row, s) in trace_values.iter_mut().zip(&stencils) {
        row.push(sample(&u0, s));
    }

    let wanted = snapshot_steps(&options.snapshot_times, dt, 0.0, steps);
    let mut snapshots = Vec::with_capacity(wanted.len());
    if wanted.first() == Some(&0) {
        snapshots.push(Snapshot { step: 0, time: 0.0, u: u0.clone(), velocity: vec![0.0; u0.len()] });
    }
    let state = evolve_with(
        &stepper,
        previous,
        u0,
        steps,
        0,
        |_, _| {},
        |level, previous, current, next| {
            if wanted.binary_search(&(level - 1)).is_ok() && level > 1 {
                snapshots.push(make_snapshot(level - 1, dt, 0.0, previous, current, next));
            }
            for (row, s) in trace_values.iter_mut().zip(&stencils) {
                row.push(sample(next, s));
            }
            Ok(())
        },
    )?;
    if wanted.last() == Some(&steps) && steps > 0 {
        let mut next = vec![0.0; grid.len()];
        if !stepper.step(&state.previous, &state.current, &mut next) {
            return Err(Error::BlowUp { step: steps + 1 });
        }
        snapshots.push(make_snapshot(steps, dt, 0.0, &state.previous, &state.current, &next));
    }

    let run = WaveRun {
        grid,
        dt,
        steps,
        t_start: 0.0,
        snapshots,
        final_state: state,
        options: options.clone(),
        speed: speed.clone(),
        active: None,
    };
    let trace = patch.map(|p| Trace { patch: p.clone(), dt, t_start: 0.0, values: trace_values });
    Ok((run, trace))
}

/// Exterior nodes with at least one interior 4-neighbour; their values are
/// imposed from the boundary data.
pub fn dirichlet_nodes(region: &Region) -> Vec<usize> {
    let grid = region.grid();
    (0..grid.len()).filter(|&k| !region.is_inside(k) && grid.neighbors4(k).any(|n| region.is_inside(n))).collect()
}

/// Linear interpolation in arc length (periodic) and time of data given on
/// every boundary sample.
struct BoundaryData<'a> {
    trace: &'a Trace,
    arcs: Vec<f64>,
    perimeter: f64,
}

impl BoundaryData<'_> {
    fn value(&self, s: f64, t: f64) -> f64 {
        let n = self.arcs.len();
        let s = s.rem_euclid(self.perimeter);
        let hi = self.arcs.partition_point(|&a| a <= s);
        let (a, b) = ((hi + n - 1) % n, hi % n);
        let (sa, mut sb) = (self.arcs[a], self.arcs[b]);
        if sb <= sa {
            sb += self.perimeter;
        }
        let s = if s < sa { s + self.perimeter } else { s };
        let w = if sb > sa { (s - sa) / (sb - sa) } else { 0.0 };
        (1.0 - w) * self.at_time(a, t) + w * self.at_time(b, t)
    }

    fn at_time(&self, r: usize, t: f64) -> f64 {
        let row = &self.trace.values[r];
        let x = (t - self.trace.t_start) / self.trace.dt;
        if x <= 0.0 {
            return row[0];
        }
        let k = x.floor() as usize;
        if k + 1 >= row.len() {
            return row[row.len() - 1];
        }
        let f = x - k as f64;
        (1.0 - f) * row[k] + f * row[k + 1]
    }
}

/// Exterior problem with zero initial data and Dirichlet data on ∂Ω. The
/// boundary trace must cover every boundary sample.
pub fn simulate_exterior(
    speed: &SpeedField,
    region: &Region,
    boundary_data: &Trace,
    t_max: f64,
    options: &WaveOptions,
) -> Result<WaveRun> {
    let grid = *speed.grid();
    if !grid.same_as(region.grid()) {
        return Err(Error::GridMismatch("region and speed"));
    }
    boundary_data.patch.check_region(region)?;
    if !boundary_data.patch.complement().is_empty() {
        return Err(Error::InvalidParameter("exterior data must cover the whole boundary".into()));
    }
    if boundary_data.samples() == 0 {
        return Err(Error::InvalidParameter("exterior data has no time samples".into()));
    }
    if boundary_data.values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("exterior data contains non-finite values".into()));
    }
    let (dt, steps) = time_step(speed, t_max, options)?;
    let active: Vec<bool> = (0..grid.len()).map(|k| !region.is_inside(k)).collect();
    let fixed = dirichlet_nodes(region);
    let mut update = active.clone();
    for &k in &fixed {
        update[k] = false;
    }
    let stepper = Stepper::new(speed, dt, options.boundary, Some(update))?;
    let data = BoundaryData {
        trace: boundary_data,
        arcs: boundary_data.patch.samples().iter().map(|b| b.arc_length).collect(),
        perimeter: region.perimeter(),
    };
    let arc_of: Vec<f64> = fixed.iter().map(|&k| region.project_to_arc_length(grid.coords(k))).collect();
    let impose = |level: usize, u: &mut [f64]| {
        let t = level as f64 * dt;
        for (&k, &s) in fixed.iter().zip(&arc_of) {
            u[k] = data.value(s, t);
        }
    };

    let mut u0 = vec![0.0; grid.len()];
    impose(0, &mut u0);
    // u_t = 0 only holds if the data start at rest; take u^{−1} from the data.
    let mut previous = vec![0.0; grid.len()];
    for (&k, &s) in fixed.iter().zip(&arc_of) {
        previous[k] = data.value(s, -dt);
    }
    let wanted = snapshot_steps(&options.snapshot_times, dt, 0.0, steps);
    let mut snapshots = Vec::with_capacity(wanted.len());
    let state = evolve_with(&stepper, previous, u0, steps, 0, impose, |level, previous, current, next| {
        if wanted.binary_search(&(level - 1)).is_ok() {
            snapshots.push(make_snapshot(level - 1, dt, 0.0, previous, current, next));
        }
        Ok(())
    })?;
    if wanted.last() == Some(&steps) {
        let mut next = vec![0.0; grid.len()];
        stepper.step(&state.previous, &state.current, &mut next);
        impose(steps + 1, &mut next);
        snapshots.push(make_snapshot(steps, dt, 0.0, &state.previous, &state.current, &next));
    }
    Ok(WaveRun {
        grid,
        dt,
        steps,
        t_start: 0.0,
        snapshots,
        final_state: state,
        options: options.clone(),
        speed: speed.clone(),
        active: Some(active),
    })
}

/// `½ Σ [c⁻² u_t² + |∇u|²] h²` over `subset` (all nodes by default), with
/// trapezoid weights on nodes and half weights on edges along the grid
/// boundary. Each edge's gradient energy is split between its endpoints, so
/// energies of disjoint subsets add up.
pub fn snapshot_energy(speed: &SpeedField, u: &[f64], velocity: &[f64], subset: Option<&[bool]>) -> f64 {
    let grid = speed.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let (hx, hy) = (grid.spacing[0], grid.spacing[1]);
    let inside = |k: usize| subset.is_none_or(|s| s[k]);
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for k in 0..grid.len() {
        if inside(k) {
            let c = speed.node(k);
            kinetic += grid.trapezoid_weight(k) * velocity[k] * velocity[k] / (c * c);
        }
    }
    let edge_weight = |along_edge: bool| if along_edge { 0.5 } else { 1.0 };
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if i + 1 < nx {
                let g = (u[k + 1] - u[k]) / hx;
                let share = (inside(k) as u8 + inside(k + 1) as u8) as f64 * 0.5;
                potential += share * edge_weight(j == 0 || j + 1 == ny) * g * g;
            }
            if j + 1 < ny {
                let g = (u[k + nx] - u[k]) / hy;
                let share = (inside(k) as u8 + inside(k + nx) as u8) as f64 * 0.5;
                potential += share * edge_weight(i == 0 || i + 1 == nx) * g * g;
            }
        }
    }
    0.5 * (kinetic + potential) * grid.cell_area()
}

/// Energy at the final level of a run, taking one extra step for the
/// central velocity.
pub fn energy(run: &WaveRun, subset: Option<&[bool]>) -> Result<f64> {
    let stepper = Stepper::new(&run.speed, run.dt, run.options.boundary, run.active.clone())?;
    let mut next = vec![0.0; run.grid.len()];
    stepper.step(&run.final_state.previous, &run.final_state.current, &mut next);
    let velocity: Vec<f64> =
        next.iter().zip(&run.final_state.previous).map(|(a, b)| (a - b) / (2.0 * run.dt)).collect();
    Ok(snapshot_energy(&run.speed, &run.final_state.current, &velocity, subset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_region, Bump, Shape};
    use std::f64::consts::PI;

    fn box_grid(cells: usize) -> GridSpec {
        GridSpec::square(0.0, 1.0, cells).unwrap()
    }

    fn standing(x: Point, t: f64) -> f64 {
        (PI * x[0]).cos() * (PI * x[1]).cos() * (2f64.sqrt() * PI * t).cos()
    }

    fn standing_error(cells: usize) -> (f64, f64) {
        let g = box_grid(cells);
        let c = SpeedField::constant(g, 1.0).unwrap();
        let f = Phantom::from_values(g, (0..g.len()).map(|k| standing(g.coords(k), 0.0)).collect()).unwrap();
        let opts = WaveOptions { boundary: BoundaryCondition::Reflecting, ..Default::default() };
        let (run, _) = simulate(&c, &f, 1.0, None, &opts).unwrap();
        let err =
            (0..g.len()).map(|k| (run.final_state.current[k] - standing(g.coords(k), 1.0)).abs()).fold(0.0, f64::max);
        (err, run.dt)
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = GridSpec::square(-1.5, 1.5, 48).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let c = SpeedField::constant(g, 1.0).unwrap();
        let p = BoundaryPatch::full(&r);
        let (run, trace) = simulate(&c, &Phantom::zero(g), 1.0, Some(&p), &WaveOptions::default()).unwrap();
        assert!(run.final_state.current.iter().all(|&v| v == 0.0));
        let trace = trace.unwrap();
        assert_eq!(trace.values.len(), p.samples().len());
        assert_eq!(trace.samples(), run.steps + 1);
        assert_eq!(trace.max_abs(), 0.0);
        assert_eq!(energy(&run, None).unwrap(), 0.0);
    }

    #[test]
    fn standing_wave_matches_analytic_solution() {
        let (err, _) = standing_error(128);
        assert!(err <= 5e-3, "{err}");
    }

    #[test]
    fn refinement_is_second_order() {
        let (coarse, dt_c) = standing_error(32);
        let (fine, dt_f) = standing_error(64);
        assert!((dt_c / dt_f - 2.0).abs() < 0.05);
        let ratio = coarse / fine;
        assert!((3.2..=4.8).contains(&ratio), "{ratio}");
    }

    #[test]
    fn time_step_divides_duration() {
        let c = SpeedField::constant(box_grid(64), 2.0).unwrap();
        let (dt, n) = time_step(&c, 1.0, &WaveOptions::default()).unwrap();
        assert!((dt * n as f64 - 1.0).abs() < 1e-12);
        assert!(dt <= cfl_limit(&c, 0.9) * (1.0 + 1e-12));
        let bad = WaveOptions { dt: Some(cfl_limit(&c, 1.0)), ..Default::default() };
        assert!(matches!(time_step(&c, 1.0, &bad), Err(Error::CflViolation { .. })));
        let too_big = WaveOptions { cfl_factor: 0.99, ..Default::default() };
        assert!(time_step(&c, 1.0, &too_big).is_err());
    }

    #[test]
    fn energy_is_conserved_in_a_box() {
        let g = box_grid(64);
        let c = SpeedField::constant(g, 1.0).unwrap();
        let f = Phantom::from_values(g, (0..g.len()).map(|k| standing(g.coords(k), 0.0)).collect()).unwrap();
        let opts = WaveOptions {
            boundary: BoundaryCondition::Reflecting,
            snapshot_times: vec![0.0, 0.5, 1.0, 1.5, 2.0],
            ..Default::default()
        };
        let (run, _) = simulate(&c, &f, 2.0, None, &opts).unwrap();
        assert_eq!(run.snapshots.len(), 5);
        let e: Vec<f64> = run.snapshots.iter().map(|s| snapshot_energy(&c, &s.u, &s.velocity, None)).collect();
        // exact continuum energy: ½ · π² · ¼ · 2 = π²/4
        assert!((e[0] - PI * PI / 4.0).abs() / e[0] < 1e-3, "{}", e[0]);
        for v in &e {
            assert!((v - e[0]).abs() / e[0] <= 2e-3, "{e:?}");
        }
        assert!((energy(&run, None).unwrap() - e[4]).abs() < 1e-12 * e[4]);
    }

    #[test]
    fn sponge_absorbs_outgoing_energy() {
        let g = GridSpec::square(-1.0, 1.0, 128).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 0.5 }).unwrap();
        let c = SpeedField::constant(g, 1.0).unwrap();
        let f = Phantom::from_bumps(&r, &[Bump::new([0.0, 0.0], 0.2, 1.0)]).unwrap();
        let opts = WaveOptions { snapshot_times: vec![0.0], ..Default::default() };
        let (run, _) = simulate(&c, &f, 4.0, None, &opts).unwrap();
        let e0 = snapshot_energy(&c, &run.snapshots[0].u, &run.snapshots[0].velocity, None);
        let left = energy(&run, None).unwrap() / e0;
        // the 2-D wake decays slowly, so only the bulk has left
        assert!(left < 1e-2, "{left}");
    }

    #[test]
    fn reversal_returns_to_the_start() {
        let g = GridSpec::square(-1.0, 1.0, 64).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 0.8 }).unwrap();
        let c = SpeedField::radial(g, [0.1, 0.0], 1.5, 1.0, 0.4, 0.1).unwrap();
        let f = Phantom::from_bumps(&r, &[Bump::new([0.2, 0.1], 0.3, 1.0)]).unwrap();
        let opts = WaveOptions { boundary: BoundaryCondition::Reflecting, ..Default::default() };
        let (run, _) = simulate(&c, &f, 1.0, None, &opts).unwrap();
        let WaveState { previous, current } = run.final_state.clone();
        let back = evolve(&c, WaveState { previous: current, current: previous }, run.dt, run.steps - 1, opts.boundary)
            .unwrap();
        let scale = f.max_abs();
        let err = back.current.iter().zip(f.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8 * scale, "{err}");
    }

    #[test]
    fn even_extension_mirrors_and_is_idempotent() {
        let g = GridSpec::square(-1.5, 1.5, 32).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let p = BoundaryPatch::new(&r, &[[0.0, 0.1]]).unwrap();
        let mut t = Trace::zeros(p, 0.5, 3);
        for row in &mut t.values {
            *row = vec![1.0, 2.0, 3.0];
        }
        let e = even_extension(&t).unwrap();
        assert_eq!(e.values[0], vec![3.0, 2.0, 1.0, 2.0, 3.0]);
        assert_eq!(e.t_start, -1.0);
        assert_eq!(even_extension(&e).unwrap(), e);
        let z = even_extension(&Trace::zeros(t.patch.clone(), 0.5, 4)).unwrap();
        assert_eq!(z.samples(), 7);
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn csv_has_time_and_receiver_columns() {
        let g = GridSpec::square(-1.5, 1.5, 32).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let p = BoundaryPatch::new(&r, &[[0.0, 0.05]]).unwrap();
        let t = Trace::zeros(p.clone(), 0.25, 2);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("time,0,"));
        assert_eq!(lines[0].split(',').count(), p.samples().len() + 1);
        assert!(lines[2].starts_with("0.25,"));
    }

    #[test]
    fn zero_exterior_data_gives_zero_field() {
        let g = GridSpec::square(-1.5, 1.5, 48).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let c = SpeedField::constant(g, 1.0).unwrap();
        let data = Trace::zeros(BoundaryPatch::full(&r), 0.01, 101);
        let run = simulate_exterior(&c, &r, &data, 1.0, &WaveOptions::default()).unwrap();
        assert!(run.final_state.current.iter().all(|&v| v == 0.0));
        let partial = Trace::zeros(BoundaryPatch::new(&r, &[[0.0, 0.5]]).unwrap(), 0.01, 101);
        assert!(simulate_exterior(&c, &r, &partial, 1.0, &WaveOptions::default()).is_err());
    }
}
