//! Fast marching against the 16-neighbour Dijkstra oracle, plus the
//! Lipschitz check, on a corpus of speeds, obstacles and sources.

use tat_core::field::{make_region, BoundaryPatch, GridSpec, Region, Shape, SpeedField};
use tat_core::geodesic::{dijkstra_oracle, lipschitz_check, solve_eikonal, LipschitzOptions, Restriction, Source};

struct Case {
    name: &'static str,
    grid: GridSpec,
    speed: SpeedField,
    obstacle: Option<Region>,
    source: Source,
}

fn corpus() -> Vec<Case> {
    let fine = GridSpec::square(-1.0, 1.0, 256).unwrap();
    let finer = GridSpec::square(-1.0, 1.0, 384).unwrap();
    let disk = |g| make_region(g, Shape::Disk { center: [0.0, 0.0], radius: 0.5 }).unwrap();
    let ellipse = |g| make_region(g, Shape::Ellipse { center: [0.05, 0.0], semi_axes: [0.6, 0.35] }).unwrap();
    let layered = |g| SpeedField::layered(g, 1.0, 1.6, 0.1, 0.2).unwrap();
    let radial = |g| SpeedField::radial(g, [0.1, 0.1], 0.7, 1.2, 0.4, 0.2).unwrap();
    let unit = |g| SpeedField::constant(g, 1.0).unwrap();
    let detectors = |r: &Region| Source::boundary(BoundaryPatch::new(r, &[[0.0, 0.4]]).unwrap().samples());
    vec![
        Case {
            name: "disk exterior, c = 1",
            grid: fine,
            speed: unit(fine),
            obstacle: Some(disk(fine)),
            source: Source::point([-0.8, 0.1]),
        },
        Case {
            name: "ellipse exterior, c = 1",
            grid: finer,
            speed: unit(finer),
            obstacle: Some(ellipse(finer)),
            source: Source::point([0.0, 0.8]),
        },
        Case {
            name: "layered, free space",
            grid: fine,
            speed: layered(fine),
            obstacle: None,
            source: Source::point([0.0, -0.5]),
        },
        Case {
            name: "radial, free space",
            grid: fine,
            speed: radial(fine),
            obstacle: None,
            source: Source::point([-0.6, -0.6]),
        },
        Case {
            name: "layered, disk exterior",
            grid: fine,
            speed: layered(fine),
            obstacle: Some(disk(fine)),
            source: Source::point([0.7, -0.7]),
        },
        Case {
            name: "radial, ellipse exterior",
            grid: finer,
            speed: radial(finer),
            obstacle: Some(ellipse(finer)),
            source: Source::point([-0.85, 0.3]),
        },
        Case {
            name: "layered, disk detectors",
            grid: fine,
            speed: layered(fine),
            obstacle: Some(disk(fine)),
            source: detectors(&disk(fine)),
        },
    ]
}

#[test]
fn fast_marching_matches_the_graph_oracle() {
    for case in corpus() {
        let restriction = case.obstacle.as_ref().map_or(Restriction::FreeSpace, Restriction::Exterior);
        let fmm = solve_eikonal(&case.speed, &case.source, restriction).unwrap();
        let oracle = dijkstra_oracle(&case.speed, &case.source, case.obstacle.as_ref()).unwrap();
        let h = case.grid.h();
        let mut worst = 0.0f64;
        for k in 0..case.grid.len() {
            match (fmm.get(k), oracle.get(k)) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs() / (3.0 * h).max(0.03 * b)),
                (None, None) => {}
                (a, b) => panic!("{}: reachability differs at node {k}: {a:?} vs {b:?}", case.name),
            }
        }
        assert!(worst <= 1.0, "{}: discrepancy is {worst:.2} times the tolerance", case.name);

        let report = lipschitz_check(&fmm, &case.speed, &LipschitzOptions::default()).unwrap();
        assert!(report.passed, "{}: {report:?}", case.name);
        assert!(
            report.checked_nodes > case.grid.len() / 2,
            "{}: only {} nodes checked",
            case.name,
            report.checked_nodes
        );
    }
}
