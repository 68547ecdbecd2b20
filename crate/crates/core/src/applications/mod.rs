//! The experiments as reusable scenarios.

pub mod graph;
pub mod heat;
pub mod masks;
pub mod sandpile;
pub mod signum_gordon;

pub use graph::{knn_graph, run_graph_diffusion, GraphRun, GraphScenario, KnnGraph, KnnGraphSpec};
pub use heat::{imex_twin_distances, run_heat_1d, run_heat_2d_star, run_parabolic, HeatOptions, HeatRun};
pub use masks::{gaussian_smooth, make_box_mask, make_flower_mask, make_fractal_mask, make_star_mask, StarShape};
pub use sandpile::{sandpile_solve, sandpile_topple, Region, SandpileProblem, SandpileSolution, Toppler};
pub use signum_gordon::{oscillon_initial, run_signum_gordon, sg_time_step, SignumGordonRun};
