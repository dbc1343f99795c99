//! Property tests for the geometric and dynamical invariants.

use proptest::prelude::*;
use tat_core::continuation::{domain_of_dependence, uc_iterate};
use tat_core::coverage::{check_property_p, min_time, CoverageOptions, CoverageStatus};
use tat_core::field::{make_region, BoundaryPatch, GridSpec, Point, Region, Shape, SpeedField};
use tat_core::geodesic::{solve_eikonal, Restriction, Source};
use tat_core::wave::{cfl_limit, evolve, BoundaryCondition, WaveState};

fn grid(cells: usize) -> GridSpec {
    GridSpec::square(-1.5, 1.5, cells).unwrap()
}

fn radial(g: GridSpec, inside: f64) -> SpeedField {
    SpeedField::radial(g, [0.2, -0.1], inside, 1.0, 0.6, 0.3).unwrap()
}

fn disk(g: GridSpec) -> Region {
    make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 0.8 }).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (-1.2..1.2f64, -1.2..1.2f64).prop_map(|(x, y)| [x, y])
}

/// A point at least `gap` outside the unit-ish disk used below.
fn exterior_point(gap: f64) -> impl Strategy<Value = Point> {
    (0.0..std::f64::consts::TAU, 0.8 + gap..1.3f64).prop_map(|(a, r)| [r * a.cos(), r * a.sin()])
}

fn dist(speed: &SpeedField, from: Point, to: Point, restriction: Restriction<'_>) -> f64 {
    solve_eikonal(speed, &Source::point(from), restriction).unwrap().at(to).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn distance_is_symmetric_up_to_discretisation(p in point(), q in point(), inside in 0.6..1.6f64) {
        let g = grid(96);
        let c = radial(g, inside);
        let (a, b) = (dist(&c, p, q, Restriction::FreeSpace), dist(&c, q, p, Restriction::FreeSpace));
        prop_assert!((a - b).abs() <= 3.0 * g.h() / c.min() + 0.03 * a.max(b), "{a} vs {b}");
    }

    #[test]
    fn distance_obeys_the_triangle_inequality(p in point(), q in point(), r in point()) {
        let g = grid(96);
        let c = radial(g, 1.4);
        let pr = dist(&c, p, r, Restriction::FreeSpace);
        let pq = dist(&c, p, q, Restriction::FreeSpace);
        let qr = dist(&c, q, r, Restriction::FreeSpace);
        prop_assert!(pr <= pq + qr + 4.0 * g.h() / c.min(), "{pr} > {pq} + {qr}");
    }

    #[test]
    fn exterior_distance_dominates_free_space(p in exterior_point(0.1)) {
        let g = grid(96);
        let c = radial(g, 0.8);
        let region = disk(g);
        let free = solve_eikonal(&c, &Source::point(p), Restriction::FreeSpace).unwrap();
        let ext = solve_eikonal(&c, &Source::point(p), Restriction::Exterior(&region)).unwrap();
        for k in 0..g.len() {
            if let (Some(e), Some(f)) = (ext.get(k), free.get(k)) {
                prop_assert!(e >= f - 1e-12, "node {k}: {e} < {f}");
            }
        }
    }

    #[test]
    fn faster_media_give_shorter_distances(p in point(), lo in 0.5..1.0f64, boost in 0.0..0.8f64) {
        let g = grid(64);
        let slow = radial(g, lo);
        let fast = radial(g, lo + boost);
        prop_assert!(fast.dominates(&slow));
        let ds = solve_eikonal(&slow, &Source::point(p), Restriction::FreeSpace).unwrap();
        let df = solve_eikonal(&fast, &Source::point(p), Restriction::FreeSpace).unwrap();
        for k in 0..g.len() {
            prop_assert!(df.get(k).unwrap() <= ds.get(k).unwrap() + 1e-12);
        }
    }

    #[test]
    fn growing_the_patch_never_breaks_coverage(start in 0.0..0.5f64, width in 0.2..0.45f64, extra in 0.0..0.3f64) {
        let g = grid(64);
        let c = SpeedField::constant(g, 1.0).unwrap();
        let region = disk(g);
        let small = BoundaryPatch::new(&region, &[[start, start + width]]).unwrap();
        let large = BoundaryPatch::new(&region, &[[start, (start + width + extra).min(1.0)]]).unwrap();
        prop_assume!(!small.is_empty());
        prop_assert!(small.is_subset_of(&large));
        let opts = CoverageOptions::default();
        let rs = check_property_p(&region, &small, &c, &opts).unwrap();
        let rl = check_property_p(&region, &large, &c, &opts).unwrap();
        if rs.status == CoverageStatus::Satisfied {
            prop_assert_ne!(rl.status, CoverageStatus::Violated);
        }
        let slack = 2.0 * g.h();
        prop_assert!(rl.min_margin.to_f64() >= rs.min_margin.to_f64() - slack);
        let (ts, tl) = (min_time(&region, &small, &c).unwrap(), min_time(&region, &large, &c).unwrap());
        prop_assert!(tl <= ts + slack, "tMin grew from {ts} to {tl}");
    }

    #[test]
    fn wave_evolution_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, seed in 0u64..1000) {
        let g = grid(40);
        let c = radial(g, 1.3);
        let field = |shift: u64| -> Vec<f64> {
            (0..g.len()).map(|k| {
                let x = g.coords(k);
                let s = (seed + shift) as f64;
                (-((x[0] - 0.3 * s.sin()).powi(2) + (x[1] - 0.3 * s.cos()).powi(2)) * 8.0).exp()
            }).collect()
        };
        let (f, h) = (field(0), field(17));
        let run = |u: Vec<f64>| {
            let state = WaveState { previous: u.clone(), current: u };
            evolve(&c, state, cfl_limit(&c, 0.9), 40, BoundaryCondition::sponge()).unwrap().current
        };
        let combo: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + b * y).collect();
        let (uf, uh, uc) = (run(f), run(h), run(combo));
        let scale = uf.iter().chain(&uh).fold(0.0f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs()) + 1e-300;
        for k in 0..g.len() {
            prop_assert!((uc[k] - a * uf[k] - b * uh[k]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn domain_of_dependence_grows_with_height(p in exterior_point(0.15), h1 in 0.1..0.5f64, dh in 0.0..0.4f64) {
        let g = grid(64);
        let c = SpeedField::constant(g, 1.0).unwrap();
        let region = disk(g);
        let patch = BoundaryPatch::new(&region, &[[0.0, 1.0]]).unwrap();
        let dt = 0.05;
        let lo = domain_of_dependence(p, h1, &region, &patch, &c, 0.05, dt).unwrap();
        let hi = domain_of_dependence(p, h1 + dh, &region, &patch, &c, 0.05, dt).unwrap();
        for s in 0..lo.set.slices {
            let t = lo.set.time(s);
            let Some(sh) = hi.set.slice_at(t) else { continue };
            for (k, (&x, &y)) in lo.set.slice(s).iter().zip(hi.set.slice(sh)).enumerate() {
                prop_assert!(!x || y, "node {k} at t = {t}");
            }
        }
    }

    #[test]
    fn uc_iteration_stays_between_cylinder_and_envelope(
        z in (-0.4..0.4f64, -0.4..0.4f64), rho in 0.1..0.3f64, height in 0.2..0.6f64, parts in 1usize..6, inside in 0.7..1.3f64,
    ) {
        let g = grid(48);
        let c = radial(g, inside);
        let it = uc_iterate([z.0, z.1], rho, height, height / parts as f64, &c, 0.05).unwrap();
        prop_assert!(it.cylinder.is_subset_of(&it.set).unwrap());
        prop_assert!(it.set.is_subset_of(&it.envelope).unwrap());
    }
}
