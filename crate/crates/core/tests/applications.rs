use l1pde::applications::masks::indicator;
use l1pde::applications::{
    make_box_mask, make_star_mask, run_graph_diffusion, run_heat_1d, run_heat_2d_star, sandpile_solve,
    sandpile_topple, GraphScenario, HeatOptions, Region, SandpileProblem, StarShape,
};
use l1pde::operators::Graph;
use l1pde::schemes::SolverConfig;
use l1pde::{Field, Grid};

fn point_mass(n: usize, m: f64) -> SandpileProblem {
    let grid = Grid::square(n, -1.0, 1.0).unwrap();
    let mut mask = vec![false; grid.len()];
    mask[(n / 2) * n + n / 2] = true;
    SandpileProblem::new(grid, vec![Region { mask, alpha: m }]).unwrap()
}

#[test]
fn unit_region_stays_put() {
    let grid = Grid::square(32, -1.0, 1.0).unwrap();
    let mask = make_box_mask(&grid, (-0.5, 0.25), (-0.25, 0.5)).unwrap();
    let p = SandpileProblem::new(grid, vec![Region { mask: mask.clone(), alpha: 1.0 }]).unwrap();
    let top = sandpile_topple(&p, None, 100).unwrap();
    assert_eq!(top.occupied.mask(), mask.as_slice());
    // the odometer of a full unit region vanishes
    let sol = sandpile_solve(&p, &SolverConfig::stationary(&grid, 1.0)).unwrap();
    assert!(sol.u.max_abs() < 1e-9, "{}", sol.u.max_abs());
}

#[test]
fn point_mass_topples_with_square_symmetry() {
    let n = 16;
    let top = sandpile_topple(&point_mass(n, 2.0), Some(1e-12), 1_000_000).unwrap();
    assert!(top.mass_drift < 1e-12);
    let m = top.mass.values();
    let c = n / 2;
    let at = |i: isize, j: isize| m[((c as isize + i) as usize) * n + (c as isize + j) as usize];
    for i in -4isize..=4 {
        for j in -4isize..=4 {
            let v = at(i, j);
            for w in [at(-i, j), at(i, -j), at(j, i), at(-j, -i)] {
                assert!((v - w).abs() < 1e-9, "({i},{j}): {v} vs {w}");
            }
        }
    }
    assert!(m.iter().all(|&x| x <= 1.0 + 1e-9));
}

#[test]
fn four_point_star_decay_is_rotation_invariant() {
    let n = 64;
    let grid = Grid::square(n, -1.0, 1.0).unwrap();
    let star = StarShape { center: [0.0, 0.0], r0: 0.4, eps: 0.3, points: 4, phase: 0.0 };
    let g = indicator(&grid, &make_star_mask(&grid, &star).unwrap(), 1.0).unwrap();
    let run = run_heat_2d_star(&g, &SolverConfig::dr(1e-3, 2.0, 0.05), &[0.01]).unwrap();
    let (_, snap) = &run.snapshots[0];
    let v = snap.values();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            // (x, y) -> (-y, x) on the periodic grid
            let (ri, rj) = ((n - j) % n, i);
            worst = worst.max((v[i * n + j] - v[ri * n + rj]).abs());
        }
    }
    assert!(worst < 1e-10, "{worst}");
    assert!(!snap.is_zero());
}

#[test]
fn pure_heat_conserves_mass() {
    let g = Grid::line(256, -4.0, 4.0).unwrap();
    let g0 = Field::from_fn_1d(g, |x| (-x * x).exp() * (1.0 + 0.5 * (3.0 * x).sin())).unwrap();
    let tau = 0.25 * g.spacing().powi(2);
    let run = run_heat_1d(&Field::zeros(g), &g0, &SolverConfig::imex(tau, 0.0, 0.5), &HeatOptions::new()).unwrap();
    let rel = (run.final_field.integral() - g0.integral()).abs() / g0.integral();
    assert!(rel < 1e-12, "{rel}");
}

#[test]
fn graph_diffusion_stays_in_its_component() {
    let graph = Graph::from_triplets(5, &[(0, 1, 1.0), (1, 2, 0.5), (3, 4, 1.0)]).unwrap();
    let sc = GraphScenario { graph, source: 0, gamma: 0.0, tau: 0.5, t_end: 20.0, track: vec![2, 3] };
    let run = run_graph_diffusion(&sc, &[]).unwrap();
    assert_eq!(run.final_state[3], 0.0);
    assert_eq!(run.final_state[4], 0.0);
    assert!(run.final_state[2] > 0.0);
    assert!(run.trajectories.column("node_3").unwrap().iter().all(|&v| v == 0.0));
    assert_eq!(run.max_support, 3);
}

#[test]
fn graph_diffusion_with_threshold_dies_out() {
    let graph = Graph::from_triplets(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap();
    let sc = GraphScenario { graph, source: 1, gamma: 0.05, tau: 0.5, t_end: 100.0, track: vec![] };
    let run = run_graph_diffusion(&sc, &[]).unwrap();
    let te = run.extinction_time.expect("extinction");
    assert!(te < 100.0);
    assert!(run.final_state.iter().all(|&v| v == 0.0));
}
