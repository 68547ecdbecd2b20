//! Diffusion with the L1 term on a seeded kNN graph: the support of a unit
//! point mass grows, then the solution dies out in finite time.

use l1pde::applications::{knn_graph, run_graph_diffusion, GraphScenario, KnnGraphSpec};

fn main() -> l1pde::Result<()> {
    let spec = KnnGraphSpec { nodes: 500, ambient_dim: 20, ..Default::default() };
    let knn = knn_graph(&spec)?;
    println!("graph: {} nodes, {} edges, {} bridges", knn.graph.node_count(), knn.graph.edge_count(), knn.bridges);

    for gamma in [0.0, 5e-5] {
        let sc = GraphScenario {
            source: knn.leftmost(),
            graph: knn.graph.clone(),
            gamma,
            tau: 0.5,
            t_end: 2000.0,
            track: vec![],
        };
        let run = run_graph_diffusion(&sc, &[])?;
        println!(
            "gamma {gamma:<6} max support {:>4}  extinction {:?}  steps {}",
            run.max_support, run.extinction_time, run.steps
        );
    }
    Ok(())
}
