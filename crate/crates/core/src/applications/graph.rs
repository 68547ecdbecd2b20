//! Diffusion with the L1 term on a weighted k-nearest-neighbor graph.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsTrace;
use crate::error::{Error, Result};
use crate::operators::Graph;
use crate::schemes::GraphStepper;

/// Point cloud near a random plane in a high-dimensional space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnGraphSpec {
    pub nodes: usize,
    pub ambient_dim: usize,
    pub k: usize,
    /// Standard deviation of the off-plane noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for KnnGraphSpec {
    fn default() -> Self {
        Self {
            nodes: 2000,
            ambient_dim: 100,
            k: 8,
            noise: 0.05,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub graph: Graph,
    /// In-plane coordinates of every node.
    pub latent: Vec<[f64; 2]>,
    /// Kernel width, the median k-th neighbor distance.
    pub scale: f64,
    /// Edges added to join components that the kNN rule left apart.
    pub bridges: usize,
}

impl KnnGraph {
    /// Node with the smallest first in-plane coordinate.
    pub fn leftmost(&self) -> usize {
        (0..self.latent.len())
            .min_by(|&a, &b| self.latent[a][0].total_cmp(&self.latent[b][0]))
            .unwrap_or(0)
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded kNN graph with Gaussian weights `exp(-d^2 / 2 s^2)`, `s` the median
/// distance to the k-th neighbor. Components left disconnected are joined
/// through their closest pair of points so the graph is connected.
pub fn knn_graph(spec: &KnnGraphSpec) -> Result<KnnGraph> {
    let (n, dim, k) = (spec.nodes, spec.ambient_dim, spec.k);
    if n < 2 || dim < 2 || k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "need nodes >= 2, ambient_dim >= 2 and 0 < k < nodes, got {spec:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };

    // orthonormal basis of the plane
    let mut e1: Vec<f64> = (0..dim).map(|_| gauss()).collect();
    let n1 = e1.iter().map(|v| v * v).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|v| *v /= n1);
    let mut e2: Vec<f64> = (0..dim).map(|_| gauss()).collect();
    let dot: f64 = e1.iter().zip(&e2).map(|(a, b)| a * b).sum();
    e2.iter_mut().zip(&e1).for_each(|(v, a)| *v -= dot * a);
    let n2 = e2.iter().map(|v| v * v).sum::<f64>().sqrt();
    e2.iter_mut().for_each(|v| *v /= n2);

    let mut latent = Vec::with_capacity(n);
    let mut points = vec![0.0; n * dim];
    for i in 0..n {
        let z = [gauss(), gauss()];
        latent.push(z);
        for d in 0..dim {
            points[i * dim + d] = z[0] * e1[d] + z[1] * e2[d] + spec.noise * gauss();
        }
    }
    let pt = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut neighbors: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut d: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, dist2(pt(i), pt(j)))).collect();
        d.select_nth_unstable_by(k - 1, |a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.truncate(k);
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        neighbors.push(d);
    }
    let mut kth: Vec<f64> = neighbors.iter().map(|v| v[k - 1].1.sqrt()).collect();
    kth.sort_by(f64::total_cmp);
    let scale = if n % 2 == 1 {
        kth[n / 2]
    } else {
        0.5 * (kth[n / 2 - 1] + kth[n / 2])
    };
    let weight = |d2: f64| (-d2 / (2.0 * scale * scale)).exp().max(f64::MIN_POSITIVE);

    let mut edges = std::collections::BTreeMap::new();
    for (i, list) in neighbors.iter().enumerate() {
        for &(j, d2) in list {
            edges.insert((i.min(j), i.max(j)), weight(d2));
        }
    }
    let mut triplets: Vec<(usize, usize, f64)> = edges.iter().map(|(&(i, j), &w)| (i, j, w)).collect();
    let mut graph = Graph::from_triplets(n, &triplets)?;
    let mut bridges = 0;
    loop {
        let label = graph.components();
        if label.iter().all(|&c| c == 0) {
            break;
        }
        // join component 0 to its nearest outside point
        let mut best = (f64::INFINITY, 0, 0);
        for i in (0..n).filter(|&i| label[i] == 0) {
            for j in (0..n).filter(|&j| label[j] != 0) {
                let d2 = dist2(pt(i), pt(j));
                if d2 < best.0 {
                    best = (d2, i, j);
                }
            }
        }
        let (d2, i, j) = best;
        triplets.push((i.min(j), i.max(j), weight(d2)));
        graph = Graph::from_triplets(n, &triplets)?;
        bridges += 1;
    }
    Ok(KnnGraph {
        graph,
        latent,
        scale,
        bridges,
    })
}

#[derive(Debug, Clone)]
pub struct GraphScenario {
    pub graph: Graph,
    /// Node carrying the unit initial mass.
    pub source: usize,
    pub gamma: f64,
    pub tau: f64,
    pub t_end: f64,
    /// Nodes whose values are recorded after every step.
    pub track: Vec<usize>,
}

impl GraphScenario {
    pub fn validate(&self) -> Result<()> {
        if self.source >= self.graph.node_count() {
            return Err(Error::InvalidParameter(format!("source {} out of range", self.source)));
        }
        if let Some(&i) = self.track.iter().find(|&&i| i >= self.graph.node_count()) {
            return Err(Error::InvalidParameter(format!("tracked node {i} out of range")));
        }
        if !(self.gamma >= 0.0) || !(self.t_end > 0.0) {
            return Err(Error::InvalidParameter("need gamma >= 0 and t_end > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GraphRun {
    /// Columns `support` (node count), `l1` (sum of |u|), `linf`.
    pub trace: DiagnosticsTrace,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    /// Values of the tracked nodes, one row per recorded time.
    pub trajectories: DiagnosticsTrace,
    pub final_state: Vec<f64>,
    pub max_support: usize,
    pub extinction_time: Option<f64>,
    pub steps: usize,
}

/// Steps `u <- shrink(u - tau L u, tau gamma)` from a Kronecker delta until
/// `t_end`, or until extinction when `gamma > 0`.
pub fn run_graph_diffusion(sc: &GraphScenario, sample_times: &[f64]) -> Result<GraphRun> {
    sc.validate()?;
    let n = sc.graph.node_count();
    let mut stepper = GraphStepper::new(&sc.graph, sc.tau, sc.gamma)?;
    let mut u = vec![0.0; n];
    u[sc.source] = 1.0;
    let mut trace = DiagnosticsTrace::new(&["support", "l1", "linf"]);
    let row = |u: &[f64]| {
        [
            u.iter().filter(|&&v| v != 0.0).count() as f64,
            u.iter().map(|v| v.abs()).sum::<f64>(),
            u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        ]
    };
    trace.push(0.0, &row(&u))?;
    let names: Vec<String> = sc.track.iter().map(|i| format!("node_{i}")).collect();
    let mut trajectories = DiagnosticsTrace::new(&names);
    let pick = |u: &[f64]| sc.track.iter().map(|&i| u[i]).collect::<Vec<f64>>();
    trajectories.push(0.0, &pick(&u))?;
    let mut samples = sample_times.to_vec();
    samples.sort_by(f64::total_cmp);
    let mut next = 0;
    let mut snapshots = Vec::new();
    while next < samples.len() && samples[next] <= 0.5 * sc.tau {
        snapshots.push((0.0, u.clone()));
        next += 1;
    }
    let steps = ((sc.t_end / sc.tau) - 1e-9).ceil() as usize;
    let mut max_support = 1;
    let mut extinction_time = None;
    let mut done = steps;
    for k in 1..=steps {
        stepper.step(&mut u);
        let t = k as f64 * sc.tau;
        let r = row(&u);
        max_support = max_support.max(r[0] as usize);
        trace.push(t, &r)?;
        trajectories.push(t, &pick(&u))?;
        while next < samples.len() && samples[next] <= t + 0.5 * sc.tau {
            snapshots.push((t, u.clone()));
            next += 1;
        }
        if r[0] == 0.0 {
            extinction_time = Some(t);
            done = k;
            break;
        }
    }
    Ok(GraphRun {
        trace,
        snapshots,
        trajectories,
        final_state: u,
        max_support,
        extinction_time,
        steps: done,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_knn_graph_is_connected_and_seeded() {
        let spec = KnnGraphSpec { nodes: 200, ambient_dim: 20, k: 5, noise: 0.05, seed: 3 };
        let a = knn_graph(&spec).unwrap();
        let b = knn_graph(&spec).unwrap();
        assert_eq!(a.graph, b.graph);
        assert!(a.graph.components().iter().all(|&c| c == 0));
        assert!(a.graph.edge_count() >= 200 * 5 / 2);
    }

    #[test]
    fn disconnected_component_stays_zero() {
        let g = Graph::from_triplets(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let sc = GraphScenario { graph: g, source: 0, gamma: 0.0, tau: 0.5, t_end: 5.0, track: vec![0, 2] };
        let run = run_graph_diffusion(&sc, &[]).unwrap();
        assert_eq!(&run.final_state[2..], &[0.0, 0.0]);
    }
}
