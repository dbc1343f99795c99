//! Recovering the initial pressure from partial boundary traces.
//!
//! The measurement map `Λ: f ↦ u|_{Γ×[0,T]}` is the discrete forward solver
//! followed by sampling. Its adjoint is the exact transpose of that discrete
//! map, computed by running the scheme's reverse recursion. Reconstructions
//! use projected Landweber iteration.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{BoundaryPatch, GridSpec, Phantom, Region, SpeedField};
use crate::wave::{bilinear_stencil, simulate, time_step, Stencil, Stepper, Trace, WaveOptions};
use crate::{Error, Result};

/// `Λ` for a fixed patch, speed and duration, with the support projection.
///
/// Model space carries the inner product `h² Σ f g`, data space the one of
/// [`Trace::dot`].
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    speed: SpeedField,
    patch: BoundaryPatch,
    t_max: f64,
    options: WaveOptions,
    dt: f64,
    steps: usize,
    stepper: Stepper,
    stencils: Vec<Stencil>,
    support: Option<Vec<bool>>,
    weights: Vec<f64>,
}

impl MeasurementOperator {
    pub fn new(
        speed: &SpeedField,
        patch: &BoundaryPatch,
        t_max: f64,
        options: &WaveOptions,
        support: Option<&Region>,
    ) -> Result<Self> {
        let grid = *speed.grid();
        if let Some(region) = support {
            patch.check_region(region)?;
            if !grid.same_as(region.grid()) {
                return Err(Error::GridMismatch("support region and speed"));
            }
        }
        if patch.is_empty() {
            return Err(Error::EmptyPatch);
        }
        let (dt, steps) = time_step(speed, t_max, options)?;
        let stepper = Stepper::new(speed, dt, options.boundary, None)?;
        Ok(Self {
            speed: speed.clone(),
            patch: patch.clone(),
            t_max,
            options: WaveOptions { snapshot_times: Vec::new(), ..options.clone() },
            dt,
            steps,
            stepper,
            stencils: patch.samples().iter().map(|b| bilinear_stencil(&grid, b.position)).collect(),
            support: support.map(Region::interior_mask),
            weights: (0..grid.len()).map(|k| grid.trapezoid_weight(k)).collect(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.speed.grid()
    }

    pub fn patch(&self) -> &BoundaryPatch {
        &self.patch
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn support(&self) -> Option<&[bool]> {
        self.support.as_deref()
    }

    /// Zeroes values outside the support.
    pub fn project(&self, f: &mut [f64]) {
        if let Some(mask) = &self.support {
            for (v, &inside) in f.iter_mut().zip(mask) {
                if !inside {
                    *v = 0.0;
                }
            }
        }
    }

    pub fn model_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid().cell_area() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    pub fn model_norm(&self, a: &[f64]) -> f64 {
        self.model_dot(a, a).sqrt()
    }

    pub fn apply(&self, f: &[f64]) -> Result<Trace> {
        let phantom = Phantom::from_values(*self.grid(), f.to_vec())?;
        let (_, trace) = simulate(&self.speed, &phantom, self.t_max, Some(&self.patch), &self.options)?;
        Ok(trace.expect("a patch was given"))
    }

    fn check_trace(&self, g: &Trace) -> Result<()> {
        let shape_ok = g.values.len() == self.stencils.len() && g.samples() == self.steps + 1;
        if !shape_ok || (g.dt - self.dt).abs() > 1e-12 * self.dt || g.t_start != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "trace is {}×{} with dt {}, operator expects {}×{} with dt {}",
                g.values.len(),
                g.samples(),
                g.dt,
                self.stencils.len(),
                self.steps + 1,
                self.dt
            )));
        }
        if g.patch.sample_indices() != self.patch.sample_indices() || g.patch.region_id() != self.patch.region_id() {
            return Err(Error::PatchMismatch);
        }
        Ok(())
    }

    /// `Lᵀv = w ⊙ L(v / w)`: the mirrored Laplacian is symmetric in the
    /// trapezoid-weighted inner product.
    fn laplacian_transpose(&self, v: &[f64]) -> Vec<f64> {
        let scaled: Vec<f64> = v.iter().zip(&self.weights).map(|(a, w)| a / w).collect();
        let mut out = self.stepper.laplacian(&scaled);
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o *= w;
        }
        out
    }

    /// `Λ*g`, the transpose of the discrete forward map with respect to the
    /// two inner products, projected onto the support.
    pub fn adjoint(&self, g: &Trace) -> Result<Vec<f64>> {
        self.check_trace(g)?;
        let n = self.grid().len();
        let sample_weight = self.dt / self.stencils.len() as f64 / self.grid().cell_area();
        let (inv_d, b): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|k| {
                let a = self.stepper.damping.get(k).copied().unwrap_or(0.0);
                (1.0 / (1.0 + a), (1.0 - a) / (1.0 + a))
            })
            .unzip();
        let courant = &self.stepper.courant;

        // λ^k = Sᵀg_k + Mᵀλ^{k+1} − Bλ^{k+2}, with M = D⁻¹(2 + CL), B = D⁻¹E.
        let mut next = vec![0.0; n]; // λ^{k+1}
        let mut after = vec![0.0; n]; // λ^{k+2}
        for k in (0..=self.steps).rev() {
            let mut lam = vec![0.0; n];
            for (row, st) in g.values.iter().zip(&self.stencils) {
                for &(idx, w) in st {
                    lam[idx] += sample_weight * w * row[k];
                }
            }
            if k < self.steps {
                let drive: Vec<f64> = (0..n).map(|m| courant[m] * inv_d[m] * next[m]).collect();
                let lt = self.laplacian_transpose(&drive);
                for m in 0..n {
                    lam[m] += 2.0 * inv_d[m] * next[m] + lt[m];
                }
            }
            if k + 1 < self.steps {
                for m in 0..n {
                    lam[m] -= b[m] * after[m];
                }
            }
            after = std::mem::replace(&mut next, lam);
        }
        let mut out = next;
        if self.steps > 0 {
            // u^{−1} = (I + ½CL)u^0 feeds the first step through −B.
            let start: Vec<f64> = (0..n).map(|m| -b[m] * after[m]).collect();
            let drive: Vec<f64> = (0..n).map(|m| 0.5 * courant[m] * start[m]).collect();
            let lt = self.laplacian_transpose(&drive);
            for m in 0..n {
                out[m] += start[m] + lt[m];
            }
        }
        self.project(&mut out);
        Ok(out)
    }
}

pub fn forward_operator(op: &MeasurementOperator, f: &Phantom) -> Result<Trace> {
    if !f.grid().same_as(op.grid()) {
        return Err(Error::GridMismatch("phantom and operator"));
    }
    op.apply(f.values())
}

pub fn adjoint_operator(op: &MeasurementOperator, residual: &Trace) -> Result<Vec<f64>> {
    op.adjoint(residual)
}

/// `√λ_max(Λ*Λ)` by power iteration from a seeded random start.
pub fn estimate_operator_norm(op: &MeasurementOperator, iterations: usize, seed: u64) -> Result<f64> {
    if iterations < 5 {
        return Err(Error::InvalidParameter(format!("need at least 5 power iterations, got {iterations}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..op.grid().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    op.project(&mut v);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let norm = op.model_norm(&v);
        if norm == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let w = op.adjoint(&op.apply(&v)?)?;
        estimate = op.model_dot(&v, &w).max(0.0).sqrt();
        v = w;
    }
    Ok(estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionRun {
    pub estimate: Phantom,
    /// `‖data − Λf_k‖` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub step_size: f64,
    pub iterations: usize,
    pub t_max: f64,
    pub arcs: Vec<[f64; 2]>,
}

/// `f_{k+1} = Π[f_k + ω Λ*(data − Λf_k)]` from `f_0 = 0`. Aborts when the
/// residual grows three iterations in a row.
pub fn landweber(op: &MeasurementOperator, data: &Trace, iterations: usize, step_size: f64) -> Result<InversionRun> {
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::InvalidParameter(format!("stepSize must be positive, got {step_size}")));
    }
    op.check_trace(data)?;
    let mut f = vec![0.0; op.grid().len()];
    let mut residual = data.clone();
    let mut history = vec![residual.norm()];
    let mut rising = 0;
    for iteration in 1..=iterations {
        let grad = op.adjoint(&residual)?;
        for (x, g) in f.iter_mut().zip(&grad) {
            *x += step_size * g;
        }
        op.project(&mut f);
        residual = data.sub(&op.apply(&f)?)?;
        let r = residual.norm();
        if !r.is_finite() {
            return Err(Error::Divergence { iteration, consecutive: rising + 1, residual: r, step_size });
        }
        rising = if r > history[history.len() - 1] { rising + 1 } else { 0 };
        history.push(r);
        if rising >= 3 {
            return Err(Error::Divergence { iteration, consecutive: rising, residual: r, step_size });
        }
    }
    Ok(InversionRun {
        estimate: Phantom::from_values(*op.grid(), f)?,
        residual_history: history,
        step_size,
        iterations,
        t_max: op.t_max(),
        arcs: op.patch().arcs().to_vec(),
    })
}

/// `‖a − b‖ / ‖b‖` over the nodes of `mask` (all nodes if `None`).
pub fn relative_error(estimate: &[f64], truth: &[f64], mask: Option<&[bool]>) -> f64 {
    let inside = |k: usize| mask.is_none_or(|m| m[k]);
    let (mut num, mut den) = (0.0, 0.0);
    for k in (0..truth.len()).filter(|&k| inside(k)) {
        num += (estimate[k] - truth[k]).powi(2);
        den += truth[k] * truth[k];
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_region, Bump, Shape};
    use crate::wave::BoundaryCondition;

    fn setup(cells: usize, boundary: BoundaryCondition) -> (Region, MeasurementOperator) {
        let g = GridSpec::square(-1.5, 1.5, cells).unwrap();
        let r = make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 1.0 }).unwrap();
        let c = SpeedField::layered(g, 1.0, 1.3, 0.0, 0.3).unwrap();
        let p = BoundaryPatch::new(&r, &[[0.0, 0.625], [0.875, 1.0]]).unwrap();
        let opts = WaveOptions { boundary, ..Default::default() };
        let op = MeasurementOperator::new(&c, &p, 1.0, &opts, Some(&r)).unwrap();
        (r, op)
    }

    fn random_field(op: &MeasurementOperator, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f: Vec<f64> = (0..op.grid().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        op.project(&mut f);
        f
    }

    fn random_trace(op: &MeasurementOperator, seed: u64) -> Trace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Trace::zeros(op.patch().clone(), op.dt(), op.steps() + 1);
        t.values.iter_mut().flatten().for_each(|v| *v = rng.random_range(-1.0..1.0));
        t
    }

    #[test]
    fn adjoint_identity_holds() {
        for boundary in [BoundaryCondition::Reflecting, BoundaryCondition::Sponge { width: 6, reflection: 1e-3 }] {
            let (_, op) = setup(40, boundary);
            for seed in 0..3 {
                let f = random_field(&op, seed);
                let g = random_trace(&op, 100 + seed);
                let lhs = op.apply(&f).unwrap().dot(&g);
                let rhs = op.model_dot(&f, &op.adjoint(&g).unwrap());
                assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let (r, op) = setup(32, BoundaryCondition::Reflecting);
        let g = *r.grid();
        assert_eq!(forward_operator(&op, &Phantom::zero(g)).unwrap().max_abs(), 0.0);
        let zero = Trace::zeros(op.patch().clone(), op.dt(), op.steps() + 1);
        assert!(adjoint_operator(&op, &zero).unwrap().iter().all(|&v| v == 0.0));
        let run = landweber(&op, &zero, 3, 1.0).unwrap();
        assert!(run.estimate.values().iter().all(|&v| v == 0.0));
        assert_eq!(run.residual_history, vec![0.0; 4]);
    }

    #[test]
    fn forward_map_is_linear() {
        let (_, op) = setup(32, BoundaryCondition::sponge());
        let f = random_field(&op, 7);
        let a = op.apply(&f).unwrap();
        let scaled: Vec<f64> = f.iter().map(|v| 3.5 * v).collect();
        let b = op.apply(&scaled).unwrap();
        let diff = b.sub(&a.scaled(3.5)).unwrap().norm();
        assert!(diff <= 1e-10 * b.norm(), "{diff}");
    }

    #[test]
    fn landweber_residual_decreases() {
        let (r, op) = setup(48, BoundaryCondition::sponge());
        let truth = Phantom::from_bumps(&r, &[Bump::new([0.2, 0.1], 0.3, 1.0)]).unwrap();
        let data = op.apply(truth.values()).unwrap();
        let norm = estimate_operator_norm(&op, 10, 1).unwrap();
        let run = landweber(&op, &data, 10, 0.9 / (norm * norm)).unwrap();
        assert_eq!(run.residual_history.len(), 11);
        for w in run.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", run.residual_history);
        }
        assert!(run.residual_history[10] < 0.5 * run.residual_history[0]);
    }

    #[test]
    fn oversized_step_is_reported_as_divergence() {
        let (r, op) = setup(32, BoundaryCondition::sponge());
        let truth = Phantom::from_bumps(&r, &[Bump::new([0.0, 0.0], 0.4, 1.0)]).unwrap();
        let data = op.apply(truth.values()).unwrap();
        let norm = estimate_operator_norm(&op, 10, 1).unwrap();
        let err = landweber(&op, &data, 30, 5.0 / (norm * norm)).unwrap_err();
        assert!(matches!(err, Error::Divergence { consecutive: 3, .. }), "{err:?}");
    }

    #[test]
    fn norm_estimate_bounds_rayleigh_quotients() {
        let (_, op) = setup(32, BoundaryCondition::sponge());
        let norm = estimate_operator_norm(&op, 20, 3).unwrap();
        for seed in 10..13 {
            let f = random_field(&op, seed);
            let ratio = op.apply(&f).unwrap().norm() / op.model_norm(&f);
            assert!(ratio <= norm * 1.05, "{ratio} > {norm}");
        }
        assert!(estimate_operator_norm(&op, 4, 3).is_err());
    }

    #[test]
    fn mismatched_trace_is_rejected() {
        let (_, op) = setup(32, BoundaryCondition::sponge());
        let short = Trace::zeros(op.patch().clone(), op.dt(), op.steps());
        assert!(op.adjoint(&short).is_err());
    }
}
