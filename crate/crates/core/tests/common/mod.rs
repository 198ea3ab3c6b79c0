//! Checks shared by the acceptance harness and the property tests.
#![allow(dead_code)]

use cem_core::cem::{advance_front, edge_stretch, energy_release_rate, CrackFront, TipOrigin};
use cem_core::esfem::{ElementState, SmoothingDomains};
use cem_core::material::Voigt;
use cem_core::mesh::{
    build_edge_topology, generate_structured_grid, CellFill, DiagonalRule, ElementKind, GridLayout, Mesh2D, Point,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

/// Moves interior nodes by up to `amount` cell sizes, deterministically.
fn jitter(mesh: &mut Mesh2D, w: f64, h: f64, cell: f64, amount: f64) {
    for (i, p) in mesh.nodes.iter_mut().enumerate() {
        let inside = p[0] > 1e-12 && p[0] < w - 1e-12 && p[1] > 1e-12 && p[1] < h - 1e-12;
        if inside {
            let k = i as f64;
            p[0] += amount * cell * (1.7 * k + 0.3).sin();
            p[1] += amount * cell * (2.3 * k + 1.1).cos();
        }
    }
}

/// Structured CST (both diagonals), irregular CST, quadrilateral and mixed
/// meshes of the unit square.
pub fn patch_meshes() -> Vec<(&'static str, Mesh2D)> {
    let main = generate_structured_grid(1.0, 1.0, 4, 4, ElementKind::Cst, DiagonalRule::Main).unwrap();
    let anti = generate_structured_grid(1.0, 1.0, 4, 4, ElementKind::Cst, DiagonalRule::Anti).unwrap();
    let mut irregular = generate_structured_grid(1.0, 1.0, 5, 5, ElementKind::Cst, DiagonalRule::Alternating).unwrap();
    jitter(&mut irregular, 1.0, 1.0, 0.2, 0.25);
    let mut quad = generate_structured_grid(1.0, 1.0, 4, 4, ElementKind::Quad, DiagonalRule::Main).unwrap();
    jitter(&mut quad, 1.0, 1.0, 0.25, 0.15);
    let mut g = GridLayout::uniform(1.0, 1.0, 4, 4, CellFill::Quad);
    for (k, fill) in [
        CellFill::Split(DiagonalRule::Main),
        CellFill::Crossed,
        CellFill::Split(DiagonalRule::Anti),
        CellFill::Quad,
    ]
    .into_iter()
    .cycle()
    .take(16)
    .enumerate()
    {
        g.set(k % 4, k / 4, fill);
    }
    let mut mixed = g.build().unwrap();
    jitter(&mut mixed, 1.0, 1.0, 0.25, 0.1);
    vec![
        ("structured CST, main diagonal", main),
        ("structured CST, anti diagonal", anti),
        ("irregular CST", irregular),
        ("quadrilateral", quad),
        ("mixed", mixed),
    ]
}

/// Worst relative deviation of the smoothed strain from the exact strain
/// of a few affine displacement fields.
pub fn patch_error(mesh: &Mesh2D) -> f64 {
    let topo = build_edge_topology(mesh).unwrap();
    let states = vec![ElementState::Intact; mesh.elements.len()];
    let domains = SmoothingDomains::build(mesh, &topo, &states).unwrap();
    let fields = [
        ([[1e-3, 0.0], [0.0, 0.0]], [0.0, 0.0]),
        ([[0.0, 2e-3], [-1e-3, 0.0]], [0.5, -0.2]),
        ([[3e-3, -4e-3], [5e-4, -2e-3]], [1e-2, 3e-2]),
        ([[0.0, 0.0], [0.0, 7.0]], [0.0, 0.0]),
    ];
    let mut worst: f64 = 0.0;
    for (a, b) in fields {
        let u: Vec<f64> = mesh
            .nodes
            .iter()
            .flat_map(|p| {
                [
                    a[0][0] * p[0] + a[0][1] * p[1] + b[0],
                    a[1][0] * p[0] + a[1][1] * p[1] + b[1],
                ]
            })
            .collect();
        let exact = [a[0][0], a[1][1], a[0][1] + a[1][0]];
        let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for d in &domains.domains {
            let e = d.strain(&u);
            for k in 0..3 {
                worst = worst.max((e[k] - exact[k]).abs() / scale);
            }
        }
    }
    worst
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn stress_from_principal(s1: f64, s2: f64, angle: f64) -> Voigt {
    let (c, s) = (angle.cos(), angle.sin());
    [
        s1 * c * c + s2 * s * s,
        s1 * s * s + s2 * c * c,
        (s1 - s2) * c * s,
    ]
}

fn point() -> impl Strategy<Value = Point> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| [x, y])
}

/// Compressing an edge zeroes its stretch and every release rate computed
/// with it.
pub fn heaviside_gate(cases: u32) -> Result<(), String> {
    let strat = (point(), point(), point(), 0.01f64..0.9, prop::array::uniform3(-1e8f64..1e8), point(), point());
    runner(cases)
        .run(&strat, |(a, b, t, shrink, stress, from, to)| {
            prop_assume!((b[0] - a[0]).hypot(b[1] - a[1]) > 1e-3);
            prop_assume!((to[0] - from[0]).hypot(to[1] - from[1]) > 1e-6);
            let x = vec![a, b];
            // Rigid translation plus shortening along the edge.
            let u = vec![
                t[0],
                t[1],
                t[0] - shrink * (b[0] - a[0]),
                t[1] - shrink * (b[1] - a[1]),
            ];
            let delta = edge_stretch([0, 1], &u, &x).unwrap();
            prop_assert_eq!(delta, [0.0, 0.0]);
            prop_assert_eq!(energy_release_rate(from, to, &stress, delta).unwrap(), 0.0);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// A segment parallel to the principal direction has a normal orthogonal to
/// it, so it releases nothing.
pub fn projection_annihilation(cases: u32) -> Result<(), String> {
    let strat = (point(), 1e-3f64..1.0, 0.0f64..std::f64::consts::TAU, 1e6f64..1e9, -1.0f64..0.99, point());
    runner(cases)
        .run(&strat, |(from, len, angle, s1, ratio, delta)| {
            let to = [from[0] + len * angle.cos(), from[1] + len * angle.sin()];
            let stress = stress_from_principal(s1, ratio * s1, angle);
            let g = energy_release_rate(from, to, &stress, delta).unwrap();
            let scale = s1 * delta[0].hypot(delta[1]);
            prop_assert!(g.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE), "G = {g} for scale {scale}");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Scaling stress by `lambda` and stretch by `mu` scales every release rate
/// by `lambda * mu` and keeps the winner.
pub fn argmax_invariance(cases: u32) -> Result<(), String> {
    let strat = (
        point(),
        prop::collection::vec(point(), 2..6),
        prop::array::uniform3(-1e8f64..1e8),
        point(),
        1e-3f64..1e3,
        1e-3f64..1e3,
    );
    runner(cases)
        .run(&strat, |(from, tos, stress, delta, lambda, mu)| {
            prop_assume!(tos.iter().all(|t| (t[0] - from[0]).hypot(t[1] - from[1]) > 1e-6));
            let argmax = |gs: &[f64]| {
                let mut best = 0;
                for (k, g) in gs.iter().enumerate() {
                    if *g > gs[best] {
                        best = k;
                    }
                }
                best
            };
            let scaled = [lambda * stress[0], lambda * stress[1], lambda * stress[2]];
            let sd = [mu * delta[0], mu * delta[1]];
            let g0: Vec<f64> = tos.iter().map(|&t| energy_release_rate(from, t, &stress, delta).unwrap()).collect();
            let g1: Vec<f64> = tos.iter().map(|&t| energy_release_rate(from, t, &scaled, sd).unwrap()).collect();
            let top = g0.iter().cloned().fold(0.0, f64::max);
            for (a, b) in g0.iter().zip(&g1) {
                prop_assert!((a * lambda * mu - b).abs() <= 1e-9 * (top * lambda * mu).max(f64::MIN_POSITIVE));
            }
            // Near-ties may swap under rounding; only a clear winner must stay.
            let second = g0
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != argmax(&g0))
                .map(|(_, g)| *g)
                .fold(0.0, f64::max);
            if top > 0.0 && top - second > 1e-9 * top {
                prop_assert_eq!(argmax(&g0), argmax(&g1));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

#[derive(Debug, Clone)]
pub struct RandomFront {
    nx: usize,
    ny: usize,
    fills: Vec<u8>,
    jitter: Vec<f64>,
    values: Vec<f64>,
    gc: f64,
    pick: usize,
}

fn random_front() -> impl Strategy<Value = RandomFront> {
    (
        1usize..5,
        1usize..5,
        prop::collection::vec(0u8..4, 16),
        prop::collection::vec(-1.0f64..1.0, 64),
        prop::collection::vec(-1.0f64..1.0, 1024),
        0.0f64..0.05,
        any::<usize>(),
    )
        .prop_map(|(nx, ny, fills, jitter, values, gc, pick)| RandomFront {
            nx,
            ny,
            fills,
            jitter,
            values,
            gc,
            pick,
        })
}

fn random_mesh(r: &RandomFront) -> Mesh2D {
    let mut g = GridLayout::uniform(r.nx as f64, r.ny as f64, r.nx, r.ny, CellFill::Quad);
    for j in 0..r.ny {
        for i in 0..r.nx {
            let fill = match r.fills[(j * 4 + i) % 16] {
                0 => CellFill::Split(DiagonalRule::Main),
                1 => CellFill::Split(DiagonalRule::Anti),
                2 => CellFill::Quad,
                _ => CellFill::Crossed,
            };
            g.set(i, j, fill);
        }
    }
    let mut mesh = g.build().unwrap();
    let (w, h) = (r.nx as f64, r.ny as f64);
    for (k, p) in mesh.nodes.iter_mut().enumerate() {
        if p[0] > 1e-9 && p[0] < w - 1e-9 && p[1] > 1e-9 && p[1] < h - 1e-9 {
            // Crossed-cell centers sit half a cell from the corners, so 0.2
            // keeps every element convex.
            p[0] += 0.2 * r.jitter[(2 * k) % 64];
            p[1] += 0.2 * r.jitter[(2 * k + 1) % 64];
        }
    }
    mesh
}

/// Drives a crack front over random meshes and fields and checks that
/// failures are never undone and that every advance crosses one live
/// element between two of its edges. Returns the number of advances seen.
pub fn front_properties(cases: u32) -> Result<usize, String> {
    let advances = std::cell::Cell::new(0usize);
    runner(cases)
        .run(&random_front(), |r| {
            let mesh = random_mesh(&r);
            let topo = build_edge_topology(&mesh).unwrap();
            let boundary: Vec<usize> = topo.boundary_edges().collect();
            let start = boundary[r.pick % boundary.len()];
            let mut front = CrackFront::new(mesh.elements.len());
            front.add_tip(&topo, start, TipOrigin::Initial, 0.0).unwrap();
            let gc = vec![r.gc; mesh.elements.len()];
            let mut next = {
                let mut k = r.pick % r.values.len();
                move || {
                    k = (k + 7) % r.values.len();
                    r.values[k]
                }
            };
            let mut last = start;
            for step in 0..12 {
                let stresses: Vec<Option<Voigt>> = (0..topo.edges.len()).map(|_| Some([next(), next(), next()])).collect();
                let u: Vec<f64> = (0..2 * mesh.nodes.len()).map(|_| 0.05 * next()).collect();
                let before = front.states.clone();
                let dissipated = front.dissipated;
                let events = advance_front(&mut front, &mesh, &topo, &stresses, &u, &gc, step as f64)
                    .map_err(|e| TestCaseError::fail(e.to_string()))?;
                prop_assert!(events.len() <= 1);
                prop_assert!(front.dissipated >= dissipated);
                for (e, (b, a)) in before.iter().zip(&front.states).enumerate() {
                    match (b, a) {
                        (ElementState::Failed, ElementState::Failed) | (ElementState::Intact, _) => {}
                        (ElementState::Partial { .. }, ElementState::Failed) => {}
                        (ElementState::Partial { surviving: s }, ElementState::Partial { surviving: t }) => {
                            prop_assert_eq!(s, t, "element {} changed its surviving half", e);
                        }
                        _ => return Err(TestCaseError::fail(format!("element {e} went from {b:?} to {a:?}"))),
                    }
                }
                for ev in &events {
                    let edges = &topo.element_edges[ev.element];
                    prop_assert_eq!(ev.from_edge, last);
                    prop_assert!(edges.contains(&ev.from_edge) && edges.contains(&ev.to_edge));
                    prop_assert!(ev.from_edge != ev.to_edge);
                    prop_assert!(before[ev.element] != ElementState::Failed);
                    prop_assert!(ev.g > r.gc);
                    last = ev.to_edge;
                    advances.set(advances.get() + 1);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(advances.get())
}
