//! One function per subcommand.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tat_core::continuation::{
    classify_surface_normal, domain_of_dependence, uc_cylinder_expand, uc_iterate, verify_dod, Causality,
};
use tat_core::coverage::{check_property_p, min_time, CoverageOptions, CoverageStatus, Extended};
use tat_core::field::io::{self, sha256_hex, FORMAT_VERSION};
use tat_core::field::{BoundaryPatch, Point};
use tat_core::geodesic::{
    dijkstra_oracle, lipschitz_check, solve_eikonal, DistanceField, DistanceMode, Restriction, Source,
};
use tat_core::inversion::{estimate_operator_norm, landweber, relative_error, MeasurementOperator};
use tat_core::wave::{cfl_limit, simulate, simulate_exterior, snapshot_energy, time_step, Trace};

use crate::config::{split_stem, Loaded, Setup, StepRule};
use crate::output::Output;
use crate::CliError;

/// Tolerance on `max|v| / max|data|` inside an admissible domain of dependence.
const DOD_TOLERANCE: f64 = 1e-3;

pub struct Context {
    pub loaded: Loaded,
    pub setup: Setup,
}

impl Context {
    pub fn new(loaded: Loaded) -> Result<Self, CliError> {
        let setup = loaded.config.setup()?;
        Ok(Self { loaded, setup })
    }

    fn dir(&self, command: &str) -> PathBuf {
        self.loaded.config.output.join(command)
    }

    fn output(&self, command: &str) -> Result<Output, CliError> {
        let mut out = Output::create(self.dir(command), command)?;
        out.input_bytes(&self.loaded.path.display().to_string(), &self.loaded.bytes);
        Ok(out)
    }

    /// Effective config recorded in manifests.
    fn effective(&self) -> Value {
        json!({ "config": self.loaded.config, "overrides": self.loaded.overrides })
    }

    /// Directory of an upstream command's output, or a "run X first" error.
    fn upstream(&self, command: &str, file: &str) -> Result<PathBuf, CliError> {
        let dir = self.dir(command);
        if dir.join(file).is_file() {
            Ok(dir)
        } else {
            Err(CliError::Missing(format!(
                "{} not found; run `tat {command}` with this config first",
                dir.join(file).display()
            )))
        }
    }
}

fn fmt_point(p: Point) -> String {
    format!("({:.4}, {:.4})", p[0], p[1])
}

pub fn distance(ctx: &Context) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let cfg = &ctx.loaded.config.distance;
    let Setup { speed, region, patch, grid, .. } = &ctx.setup;
    let mut out = ctx.output("distance")?;
    let restriction = match cfg.mode {
        DistanceMode::FreeSpace => Restriction::FreeSpace,
        DistanceMode::Exterior => Restriction::Exterior(region),
    };

    let (field, oracle) = if let Some(path) = &cfg.check {
        let (dir, stem) = split_stem(path)?;
        let (meta, raster) = io::read_field(&dir, &stem)?;
        out.input(&io::data_path(&dir, &stem))?;
        if !meta.grid.dims.eq(&grid.dims) {
            return Err(CliError::Config(format!("{} is on a different grid", path.display())));
        }
        let sources: Vec<Point> = serde_json::from_value(meta.extra.get("sources").cloned().unwrap_or(json!([])))
            .map_err(|e| CliError::Config(format!("{}: bad source list: {e}", path.display())))?;
        let field = DistanceField::from_raster(speed, &raster, cfg.mode, sources, path.display().to_string())?;
        (field, None)
    } else {
        let source = if cfg.sources.is_empty() {
            Source::boundary(patch.samples()).with_label("detectors")
        } else {
            Source::points(cfg.sources.clone()).with_label("points")
        };
        let field = solve_eikonal(speed, &source, restriction)?;
        let points: Vec<Point> = if cfg.sources.is_empty() {
            patch.samples().iter().map(|b| b.position).collect()
        } else {
            cfg.sources.clone()
        };
        out.field("distance", grid, &field.to_raster(), "distance", json!({ "mode": cfg.mode, "sources": points }))?;
        let oracle = if cfg.oracle {
            let obstacle = matches!(cfg.mode, DistanceMode::Exterior).then_some(region);
            let o = dijkstra_oracle(speed, &source, obstacle)?;
            let mut worst = (0.0f64, 0.0f64);
            for k in 0..grid.len() {
                if let (Some(a), Some(b)) = (field.get(k), o.get(k)) {
                    worst.0 = worst.0.max((a - b).abs());
                    if b > 0.0 {
                        worst.1 = worst.1.max((a - b).abs() / b);
                    }
                }
            }
            out.field("oracle", grid, &o.to_raster(), "distance", json!({ "mode": cfg.mode, "oracle": "dijkstra16" }))?;
            Some(worst)
        } else {
            None
        };
        (field, oracle)
    };

    let report = lipschitz_check(&field, speed, &cfg.lipschitz)?;
    out.json(
        "report.json",
        &json!({
            "lipschitz": report,
            "oracle_max_discrepancy": oracle.map(|o| o.0),
            "oracle_max_relative_discrepancy": oracle.map(|o| o.1),
        }),
    )?;
    if let Some((abs, rel)) = oracle {
        println!("oracle: max discrepancy = {abs:.6} (relative {rel:.4})");
    }
    out.finish(&ctx.effective(), clock.elapsed().as_secs_f64())?;
    if report.passed {
        println!(
            "lipschitz: pass (max excess {:.3e} <= {:.3e}, {} nodes)",
            report.max_violation, report.tolerance, report.checked_nodes
        );
        Ok(())
    } else {
        let at = report.location.map_or_else(|| "unknown".into(), fmt_point);
        println!("lipschitz: fail at {at}, excess {:.3e} > {:.3e}", report.max_violation, report.tolerance);
        Err(CliError::Invariant("Lipschitz bound violated".into()))
    }
}

fn status_name(status: CoverageStatus) -> &'static str {
    match status {
        CoverageStatus::Satisfied => "satisfied",
        CoverageStatus::Violated => "violated",
        CoverageStatus::Indeterminate => "indeterminate",
    }
}

pub fn coverage(ctx: &Context) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let Setup { speed, region, patch, grid, .. } = &ctx.setup;
    let out = ctx.output("coverage")?;
    let report = check_property_p(region, patch, speed, &ctx.loaded.config.coverage)?;
    let margin: Vec<f64> = report.margin.iter().map(|m| m.map_or(f64::NAN, Extended::to_f64)).collect();
    out.field("margin", grid, &margin, "coverage margin", json!({ "arcs": patch.arcs() }))?;
    out.json(
        "report.json",
        &json!({
            "format_version": FORMAT_VERSION,
            "status": report.status,
            "satisfied": report.satisfied,
            "min_margin": report.min_margin,
            "min_margin_location": report.min_margin_node.map(|k| grid.coords(k)),
            "t_min": report.t_min,
            "epsilon": report.epsilon,
            "strategy": report.strategy,
            "compatibility_defect": report.compatibility_defect,
            "clearance": report.clearance,
            "arcs": patch.arcs(),
        }),
    )?;
    let t_min = report.t_min.map_or_else(|| "undefined".into(), |t| format!("{t:.6}"));
    println!("property_p: {}, tMin = {t_min}", status_name(report.status));
    out.finish(&ctx.effective(), clock.elapsed().as_secs_f64())
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulateSummary {
    format_version: u32,
    name: String,
    t_max: f64,
    t_min: f64,
    dt: f64,
    steps: usize,
    receivers: usize,
    energy_initial: f64,
    energy_final: f64,
    trace_max: f64,
}

fn write_trace(out: &Output, stem: &str, trace: &Trace, ctx: &Context) -> Result<(), CliError> {
    let flat: Vec<f64> = trace.values.iter().flatten().copied().collect();
    out.raw(
        stem,
        &ctx.setup.grid,
        &flat,
        "trace",
        json!({
            "dt": trace.dt,
            "t_start": trace.t_start,
            "receivers": trace.values.len(),
            "samples": trace.samples(),
            "arcs": trace.patch.arcs(),
            "sample_indices": trace.patch.sample_indices(),
        }),
    )?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    fs::write(out.dir().join(format!("{stem}.csv")), csv)?;
    Ok(())
}

fn read_trace(dir: &Path, stem: &str, patch: &BoundaryPatch) -> Result<Trace, CliError> {
    let (meta, flat) = io::read_field(dir, stem)?;
    let field = |k: &str| meta.extra.get(k).cloned().unwrap_or(Value::Null);
    let indices: Vec<usize> = serde_json::from_value(field("sample_indices")).unwrap_or_default();
    if indices != patch.sample_indices() {
        return Err(CliError::Config(format!(
            "{}/{stem} was recorded on different detectors; rerun `tat simulate`",
            dir.display()
        )));
    }
    let samples = field("samples").as_u64().unwrap_or(0) as usize;
    let dt = field("dt").as_f64().unwrap_or(f64::NAN);
    if samples == 0 || flat.len() != samples * indices.len() || dt.is_nan() || dt <= 0.0 {
        return Err(CliError::Config(format!("{}/{stem} has an inconsistent header", dir.display())));
    }
    Ok(Trace {
        patch: patch.clone(),
        dt,
        t_start: field("t_start").as_f64().unwrap_or(0.0),
        values: flat.chunks(samples).map(<[f64]>::to_vec).collect(),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path)?;
    let value: Value =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if value.get("format_version").and_then(Value::as_u64) != Some(u64::from(FORMAT_VERSION)) {
        return Err(CliError::Config(format!("{}: missing or unsupported format_version", path.display())));
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn observation_time(ctx: &Context) -> Result<(f64, f64), CliError> {
    let Setup { speed, region, patch, .. } = &ctx.setup;
    let solver = &ctx.loaded.config.solver;
    let t_min = if patch.is_empty() { f64::NAN } else { min_time(region, patch, speed)? };
    let t_max = match solver.t_max {
        Some(t) => t,
        None if t_min.is_finite() => solver.t_factor * t_min,
        None => return Err(CliError::Config("solver.t_max is required when the patch is empty".into())),
    };
    Ok((t_max, t_min))
}

pub fn simulate_cmd(ctx: &Context) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let Setup { speed, region, patch, grid, phantom } = &ctx.setup;
    let out = ctx.output("simulate")?;
    let (t_max, t_min) = observation_time(ctx)?;
    let full = BoundaryPatch::full(region);
    let options = ctx.loaded.config.solver.wave_options();
    let (run, trace) = simulate(speed, phantom, t_max, Some(&full), &options)?;
    let boundary = trace.expect("a patch was given");
    let measured = Trace {
        patch: patch.clone(),
        dt: boundary.dt,
        t_start: boundary.t_start,
        values: patch.sample_indices().iter().map(|&i| boundary.values[i].clone()).collect(),
    };
    write_trace(&out, "trace", &measured, ctx)?;
    write_trace(&out, "boundary_trace", &boundary, ctx)?;
    out.field("final", grid, &run.final_state.current, "pressure", json!({ "time": run.t_max() }))?;
    for (i, s) in run.snapshots.iter().enumerate() {
        out.field(&format!("snapshot_{i:04}"), grid, &s.u, "pressure", json!({ "time": s.time, "step": s.step }))?;
    }
    let summary = SimulateSummary {
        format_version: FORMAT_VERSION,
        name: ctx.loaded.config.name.clone(),
        t_max,
        t_min,
        dt: run.dt,
        steps: run.steps,
        receivers: measured.values.len(),
        energy_initial: snapshot_energy(speed, phantom.values(), &vec![0.0; grid.len()], None),
        energy_final: tat_core::wave::energy(&run, None)?,
        trace_max: measured.max_abs(),
    };
    out.json("summary.json", &summary)?;
    println!(
        "simulate: {} steps of dt = {:.6} to t = {:.4}, energy {:.6e} -> {:.6e}",
        run.steps, run.dt, t_max, summary.energy_initial, summary.energy_final
    );
    out.finish(&ctx.effective(), clock.elapsed().as_secs_f64())
}

pub fn verify_dod_cmd(ctx: &Context) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let Setup { speed, region, patch, grid, .. } = &ctx.setup;
    let cont = &ctx.loaded.config.continuation;
    let sim_dir = ctx.upstream("simulate", "summary.json")?;
    let summary: SimulateSummary = read_json(&sim_dir.join("summary.json"))?;
    let full = BoundaryPatch::full(region);
    let mut data = read_trace(&sim_dir, "boundary_trace", &full)?;
    let mut out = ctx.output("verify-dod")?;
    out.input(&io::data_path(&sim_dir, "boundary_trace"))?;

    // Zero on Γ, the forward solution elsewhere.
    for &i in patch.sample_indices() {
        data.values[i].iter_mut().for_each(|v| *v = 0.0);
    }
    let clearance = (!patch.complement().is_empty())
        .then(|| solve_eikonal(speed, &Source::boundary(patch.complement()), Restriction::Exterior(region)))
        .transpose()?;
    let clearance_at = |x: Point| clearance.as_ref().map_or(Some(f64::INFINITY), |c| c.at(x));
    let apex = match cont.apex {
        Some(p) => p,
        None => {
            let best = patch
                .samples()
                .iter()
                .max_by(|a, b| {
                    let ca = clearance_at(a.position).unwrap_or(f64::NEG_INFINITY);
                    let cb = clearance_at(b.position).unwrap_or(f64::NEG_INFINITY);
                    ca.total_cmp(&cb)
                })
                .ok_or_else(|| CliError::Config("verify-dod needs a nonempty patch".into()))?;
            [best.position[0] + 0.05 * best.normal[0], best.position[1] + 0.05 * best.normal[1]]
        }
    };
    let shrink = 1.0 - cont.delta_shrink;
    let height = match cont.height {
        Some(h) => h,
        None => {
            let c = clearance_at(apex)
                .ok_or_else(|| CliError::Config(format!("apex {} is not reachable", fmt_point(apex))))?;
            (shrink * (c - 3.0 * grid.h())).min(summary.t_max).max(0.0)
        }
    };
    if height > summary.t_max + 1e-12 {
        return Err(CliError::Config(format!("height {height} exceeds the simulated time {}", summary.t_max)));
    }
    if cont.time_stride == 0 {
        return Err(CliError::Config("continuation.time_stride must be positive".into()));
    }

    let mut options = ctx.loaded.config.solver.wave_options();
    let (dt, _) = time_step(speed, height.max(f64::MIN_POSITIVE), &options)?;
    let slice_dt = dt * cont.time_stride as f64;
    let dod = domain_of_dependence(apex, height, region, patch, speed, cont.delta_shrink, slice_dt)?;
    options.snapshot_times = (0..dod.set.slices).map(|s| dod.set.time(s)).collect();
    let run = simulate_exterior(speed, region, &data, height, &options)?;
    let report = verify_dod(&run, &dod.set)?;
    let normals = dod.sigma2_normals(&ctx.loaded.config.distance.lipschitz);
    let timelike = normals
        .iter()
        .filter(|(_, n)| classify_surface_normal(speed, n).map_or(true, |c| c.causality != Causality::Spacelike))
        .count();
    let data_max = data.max_abs();
    let relative = if data_max > 0.0 { report.max_abs / data_max } else { report.max_abs };
    let passed = !dod.admissible || (relative <= DOD_TOLERANCE && timelike == 0);

    for (i, s) in export_slices(dod.set.slices, cont.export_slices).into_iter().enumerate() {
        out.field(
            &format!("U_{i:04}"),
            grid,
            &dod.set.slice_as_f64(s),
            "indicator",
            json!({ "time": dod.set.time(s) }),
        )?;
    }
    out.json(
        "report.json",
        &json!({
            "format_version": FORMAT_VERSION,
            "apex": apex,
            "height": height,
            "delta_shrink": cont.delta_shrink,
            "admissible": dod.admissible,
            "complement_slack": dod.complement_slack,
            "max_abs": report.max_abs,
            "max_abs_location": report.max_abs_node.map(|k| grid.coords(k)),
            "max_abs_time": report.max_abs_time,
            "data_max": data_max,
            "relative": relative,
            "energy_fraction": report.energy_fraction,
            "tolerance": DOD_TOLERANCE,
            "sigma2_normals": normals.len(),
            "sigma2_not_spacelike": timelike,
            "passed": passed,
        }),
    )?;
    out.finish(&ctx.effective(), clock.elapsed().as_secs_f64())?;
    if !dod.admissible {
        println!(
            "dod: apex {} is not admissible (slack {:.4}); max|v|/max|data| = {relative:.3e}",
            fmt_point(apex),
            dod.complement_slack
        );
        return Ok(());
    }
    if passed {
        println!("dod: pass, max|v|/max|data| = {relative:.3e}, {} spacelike normals", normals.len());
        Ok(())
    } else {
        println!("dod: fail, max|v|/max|data| = {relative:.3e} (tolerance {DOD_TOLERANCE:.0e}), {timelike} normals not spacelike");
        Err(CliError::Invariant("field does not vanish on the domain of dependence".into()))
    }
}

/// Up to `count` slice indices spread over `0..slices`.
fn export_slices(slices: usize, count: usize) -> Vec<usize> {
    if slices == 0 || count == 0 {
        return Vec::new();
    }
    let mut v: Vec<usize> =
        (0..count.min(slices)).map(|i| i * (slices - 1) / count.min(slices).max(2).saturating_sub(1).max(1)).collect();
    v.dedup();
    v
}

pub fn uc(ctx: &Context) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let Setup { speed, grid, .. } = &ctx.setup;
    let cont = &ctx.loaded.config.continuation;
    let cfg = &cont.uc;
    let out = ctx.output("uc")?;
    let dt = cfl_limit(speed, ctx.loaded.config.solver.cfl_factor) * cont.time_stride.max(1) as f64;
    let delta_inj = cfg.delta_inj.unwrap_or(cfg.height / 8.0);
    let cone = uc_cylinder_expand(cfg.center, cfg.rho, cfg.height, speed, dt)?;
    let iterated = uc_iterate(cfg.center, cfg.rho, cfg.height, delta_inj, speed, dt)?;
    let single = uc_iterate(cfg.center, cfg.rho, cfg.height, cfg.height, speed, dt)?;
    let spread = iterated.set.hausdorff_per_slice(&single.set)?.into_iter().fold(0.0, f64::max);
    let cylinder_inside = iterated.cylinder.is_subset_of(&iterated.set)?;
    let inside_envelope = iterated.set.is_subset_of(&iterated.envelope)?;
    for (i, s) in export_slices(iterated.set.slices, cont.export_slices).into_iter().enumerate() {
        let t = iterated.set.time(s);
        out.field(&format!("Y_{i:04}"), grid, &iterated.set.slice_as_f64(s), "indicator", json!({ "time": t }))?;
    }
    let passed = cylinder_inside && inside_envelope;
    out.json(
        "report.json",
        &json!({
            "format_version": FORMAT_VERSION,
            "center": cfg.center,
            "rho": cfg.rho,
            "height": cfg.height,
            "delta_inj": delta_inj,
            "iterations": iterated.iterations,
            "dt": dt,
            "slices": iterated.set.slices,
            "cone_count": cone.count(),
            "final_count": iterated.set.count(),
            "hausdorff_vs_single_step": spread,
            "cylinder_inside_final": cylinder_inside,
            "final_inside_envelope": inside_envelope,
            "passed": passed,
        }),
    )?;
    out.finish(&ctx.effective(), clock.elapsed().as_secs_f64())?;
    println!(
        "uc: {} iterations, Hausdorff distance to the single-step set {spread:.4}, containment {}",
        iterated.iterations,
        if passed { "holds" } else { "broken" }
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::Invariant("containment chain cylinder ⊆ Y ⊆ envelope broken".into()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReconstructSummary {
    pub format_version: u32,
    pub name: String,
    pub arcs: Vec<[f64; 2]>,
    pub property_p: CoverageStatus,
    pub t_min: f64,
    pub t_max: f64,
    pub iterations: usize,
    pub step_size: f64,
    pub operator_norm: f64,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub relative_error: f64,
}

pub fn reconstruct(ctx: &Context) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let Setup { speed, region, patch, grid, phantom } = &ctx.setup;
    let cfg = &ctx.loaded.config;
    let sim_dir = ctx.upstream("simulate", "summary.json")?;
    let summary: SimulateSummary = read_json(&sim_dir.join("summary.json"))?;
    let data = read_trace(&sim_dir, "trace", patch)?;
    let mut out = ctx.output("reconstruct")?;
    out.input(&io::data_path(&sim_dir, "trace"))?;

    let options = cfg.solver.wave_options();
    let op = MeasurementOperator::new(speed, patch, summary.t_max, &options, Some(region))?;
    if (op.dt() - data.dt).abs() > 1e-12 * data.dt || op.steps() + 1 != data.samples() {
        return Err(CliError::Config(
            "the simulate output used different solver settings; rerun `tat simulate`".into(),
        ));
    }
    let norm = estimate_operator_norm(&op, cfg.inversion.power_iterations, cfg.seed)?;
    let step_size = match cfg.inversion.step {
        StepRule::BoundFraction { factor } => factor / (norm * norm),
        StepRule::Fixed { value } => value,
    };
    let run = landweber(&op, &data, cfg.inversion.iterations, step_size)?;
    let coverage = check_property_p(region, patch, speed, &CoverageOptions::default())?;
    let mask = region.interior_mask();
    let summary = ReconstructSummary {
        format_version: FORMAT_VERSION,
        name: cfg.name.clone(),
        arcs: patch.arcs().to_vec(),
        property_p: coverage.status,
        t_min: summary.t_min,
        t_max: summary.t_max,
        iterations: run.iterations,
        step_size,
        operator_norm: norm,
        initial_residual: run.residual_history[0],
        final_residual: *run.residual_history.last().expect("history holds iteration 0"),
        relative_error: relative_error(run.estimate.values(), phantom.values(), Some(&mask)),
    };
    out.field("estimate", grid, run.estimate.values(), "initial pressure", json!({ "iterations": run.iterations }))?;
    let mut csv = String::from("iteration,residual\n");
    for (k, r) in run.residual_history.iter().enumerate() {
        writeln!(csv, "{k},{r}").expect("writing to a String");
    }
    out.text("residual.csv", &csv)?;
    out.json("summary.json", &summary)?;
    println!(
        "reconstruction: relative error = {:.4}, residual {:.4e} -> {:.4e} after {} iterations",
        summary.relative_error, summary.initial_residual, summary.final_residual, summary.iterations
    );
    out.finish(&ctx.effective(), clock.elapsed().as_secs_f64())
}

/// Collates reconstruction summaries, ordered by final residual.
pub fn report(contexts: &[Loaded], out_dir: &Path) -> Result<(), CliError> {
    let clock = std::time::Instant::now();
    let mut out = Output::create(out_dir.to_path_buf(), "report")?;
    let mut rows = Vec::new();
    for loaded in contexts {
        let path = loaded.config.output.join("reconstruct").join("summary.json");
        if !path.is_file() {
            return Err(CliError::Missing(format!(
                "{} not found; run `tat reconstruct {}` first",
                path.display(),
                loaded.path.display()
            )));
        }
        out.input(&path)?;
        rows.push(read_json::<ReconstructSummary>(&path)?);
    }
    rows.sort_by(|a, b| a.final_residual.total_cmp(&b.final_residual).then_with(|| a.name.cmp(&b.name)));

    let mut csv =
        String::from("name,arcs,property_p,t_min,t_max,iterations,final_residual,relative_residual,relative_error\n");
    let mut text = format!(
        "{:<24} {:<14} {:>8} {:>8} {:>6} {:>12} {:>10}\n",
        "name", "property_p", "tMin", "T", "iters", "residual", "error"
    );
    for r in &rows {
        let arcs = r.arcs.iter().map(|a| format!("{}-{}", a[0], a[1])).collect::<Vec<_>>().join(" ");
        let rel = if r.initial_residual > 0.0 { r.final_residual / r.initial_residual } else { 0.0 };
        let status = status_name(r.property_p);
        writeln!(
            csv,
            "{},{arcs},{status},{},{},{},{},{rel},{}",
            r.name, r.t_min, r.t_max, r.iterations, r.final_residual, r.relative_error
        )
        .expect("writing to a String");
        writeln!(
            text,
            "{:<24} {status:<14} {:>8.4} {:>8.4} {:>6} {:>12.4e} {:>10.4}",
            r.name, r.t_min, r.t_max, r.iterations, r.final_residual, r.relative_error
        )
        .expect("writing to a String");
    }
    out.text("report.csv", &csv)?;
    out.text("report.txt", &text)?;
    print!("{text}");
    let configs: Vec<Value> = contexts
        .iter()
        .map(|l| json!({ "path": l.path.display().to_string(), "sha256": sha256_hex(&l.bytes), "overrides": l.overrides }))
        .collect();
    out.finish(&json!({ "configs": configs }), clock.elapsed().as_secs_f64())
}
