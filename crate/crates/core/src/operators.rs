//! Proximal machinery for the L1 term and the linear operators it is split
//! against: periodic finite-difference Laplacians, their FFT resolvents, and
//! the normalized graph Laplacian.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{Field, Grid};

/// Scalar soft threshold `max(|v| - sigma, 0) sign(v)`.
#[inline]
pub fn shrink_scalar(v: f64, sigma: f64) -> f64 {
    let a = v.abs() - sigma;
    if a > 0.0 {
        a.copysign(v)
    } else {
        0.0
    }
}

/// In-place soft threshold of a slice.
pub fn shrink_in_place(values: &mut [f64], sigma: f64) {
    if sigma == 0.0 {
        return;
    }
    for v in values.iter_mut() {
        *v = shrink_scalar(*v, sigma);
    }
}

/// Pointwise soft threshold, the proximal map of `sigma * ||.||_1`.
pub fn shrink(v: &Field, sigma: f64) -> Result<Field> {
    check_threshold(sigma)?;
    let mut values = v.values().to_vec();
    shrink_in_place(&mut values, sigma);
    Ok(Field::from_parts(*v.grid(), values))
}

pub(crate) fn check_threshold(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "shrink threshold must be finite and nonnegative, got {sigma}"
        )))
    }
}

/// Element of the L1 subdifferential picked by the stationary equation:
/// `sign(u)` off zero, otherwise the point of `[-1, 1]` closest to `f / gamma`.
pub fn subgradient_select(u: f64, f: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    Ok(if u != 0.0 {
        u.signum()
    } else {
        (f / gamma).clamp(-1.0, 1.0)
    })
}

/// Eigenvalues of the negated periodic second-difference stencil.
#[derive(Debug, Clone)]
pub struct LaplacianSymbol {
    dim: usize,
    per_axis: Vec<f64>,
}

impl LaplacianSymbol {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n();
        let h2 = grid.spacing().powi(2);
        let per_axis = (0..n)
            .map(|k| 2.0 / h2 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos()))
            .collect();
        Self { dim: grid.dim(), per_axis }
    }

    /// Eigenvalue of the 1D mode `k`, or the per-axis term in 2D.
    pub fn axis(&self, k: usize) -> f64 {
        self.per_axis[k]
    }

    pub fn mode(&self, k: [usize; 2]) -> f64 {
        match self.dim {
            1 => self.per_axis[k[0]],
            _ => self.per_axis[k[0]] + self.per_axis[k[1]],
        }
    }

    /// All eigenvalues in the field's storage order.
    pub fn values(&self) -> Vec<f64> {
        let n = self.per_axis.len();
        match self.dim {
            1 => self.per_axis.clone(),
            _ => (0..n * n).map(|i| self.mode([i / n, i % n])).collect(),
        }
    }
}

/// Periodic discrete Laplacian written into `out`.
pub(crate) fn laplacian_into(grid: &Grid, u: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    match grid.dim() {
        1 => {
            out[0] = (u[n - 1] - 2.0 * u[0] + u[1]) * inv_h2;
            for i in 1..n - 1 {
                out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
            }
            out[n - 1] = (u[n - 2] - 2.0 * u[n - 1] + u[0]) * inv_h2;
        }
        _ => {
            for i in 0..n {
                let up = if i == 0 { n - 1 } else { i - 1 } * n;
                let down = if i == n - 1 { 0 } else { i + 1 } * n;
                let row = i * n;
                for j in 0..n {
                    let left = if j == 0 { n - 1 } else { j - 1 };
                    let right = if j == n - 1 { 0 } else { j + 1 };
                    let c = u[row + j];
                    out[row + j] = (u[up + j] + u[down + j] + u[row + left] + u[row + right]
                        - 4.0 * c)
                        * inv_h2;
                }
            }
        }
    }
}

/// Periodic second-difference Laplacian (3-point in 1D, 5-point in 2D).
pub fn laplacian_apply(u: &Field) -> Field {
    let mut out = vec![0.0; u.len()];
    laplacian_into(u.grid(), u.values(), &mut out);
    Field::from_parts(*u.grid(), out)
}

/// `(I - tau * Lap_h)^{-1}` on a periodic grid, diagonalized by the FFT with
/// the exact symbol of the discrete stencil. Plans are shared; work buffers
/// are allocated per call, so one value can serve many threads.
#[derive(Clone)]
pub struct Resolvent {
    grid: Grid,
    tau: f64,
    inv_denominator: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Resolvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Resolvent")
            .field("grid", &self.grid)
            .field("tau", &self.tau)
            .finish()
    }
}

impl Resolvent {
    pub fn new(grid: &Grid, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        let n = grid.n();
        let symbol = LaplacianSymbol::new(grid);
        // the 2D transform leaves the data transposed before the division;
        // the symbol is symmetric in (k1, k2) so storage order is unaffected
        let scale = 1.0 / grid.len() as f64;
        let inv_denominator = symbol
            .values()
            .into_iter()
            .map(|lam| scale / (1.0 + tau * lam))
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid: *grid,
            tau,
            inv_denominator,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Solves `w - tau Lap_h w = z`, writing `w` into `out`.
    pub fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        let n = self.grid.n();
        let mut buf: Vec<Complex64> = z.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch =
            vec![Complex64::default(); self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        match self.grid.dim() {
            1 => {
                self.forward.process_with_scratch(&mut buf, &mut scratch);
                for (c, d) in buf.iter_mut().zip(&self.inv_denominator) {
                    *c *= d;
                }
                self.inverse.process_with_scratch(&mut buf, &mut scratch);
            }
            _ => {
                let mut tmp = vec![Complex64::default(); buf.len()];
                self.forward.process_with_scratch(&mut buf, &mut scratch);
                transpose(&buf, &mut tmp, n);
                self.forward.process_with_scratch(&mut tmp, &mut scratch);
                for (c, d) in tmp.iter_mut().zip(&self.inv_denominator) {
                    *c *= d;
                }
                self.inverse.process_with_scratch(&mut tmp, &mut scratch);
                transpose(&tmp, &mut buf, n);
                self.inverse.process_with_scratch(&mut buf, &mut scratch);
            }
        }
        for (o, c) in out.iter_mut().zip(&buf) {
            *o = c.re;
        }
    }

    pub fn apply(&self, z: &Field) -> Result<Field> {
        self.grid.ensure_same(z.grid())?;
        let mut out = vec![0.0; z.len()];
        self.apply_into(z.values(), &mut out);
        Field::new(self.grid, out)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// One-shot `(I - tau Lap_h)^{-1} z`.
pub fn resolvent_inverse(z: &Field, tau: f64) -> Result<Field> {
    Resolvent::new(z.grid(), tau)?.apply(z)
}

/// Sparse symmetric weighted graph in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    weight: Vec<f64>,
    degree: Vec<f64>,
    inv_sqrt_degree: Vec<f64>,
}

impl Graph {
    /// Builds a graph on `nodes` vertices from upper-triangle triplets
    /// `(i, j, w)` with `i < j` and `w > 0`.
    pub fn from_triplets(nodes: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if nodes == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        let mut counts = vec![0usize; nodes];
        for (k, &(i, j, w)) in edges.iter().enumerate() {
            if i >= j {
                return Err(Error::InvalidGraph(format!("edge {k}: need i < j, got ({i}, {j})")));
            }
            if j >= nodes {
                return Err(Error::InvalidGraph(format!("edge {k}: node {j} out of range")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidGraph(format!("edge {k}: weight {w} is not positive")));
            }
            counts[i] += 1;
            counts[j] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nodes + 1);
        row_ptr.push(0);
        for c in &counts {
            row_ptr.push(row_ptr.last().unwrap() + c);
        }
        let mut fill = row_ptr[..nodes].to_vec();
        let mut col = vec![0usize; row_ptr[nodes]];
        let mut weight = vec![0.0; row_ptr[nodes]];
        for &(i, j, w) in edges {
            col[fill[i]] = j;
            weight[fill[i]] = w;
            fill[i] += 1;
            col[fill[j]] = i;
            weight[fill[j]] = w;
            fill[j] += 1;
        }
        for i in 0..nodes {
            let (a, b) = (row_ptr[i], row_ptr[i + 1]);
            let mut row: Vec<(usize, f64)> = col[a..b].iter().copied().zip(weight[a..b].iter().copied()).collect();
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidGraph(format!("duplicate edge at node {i}")));
            }
            for (k, (c, w)) in row.into_iter().enumerate() {
                col[a + k] = c;
                weight[a + k] = w;
            }
        }
        let degree: Vec<f64> = (0..nodes)
            .map(|i| weight[row_ptr[i]..row_ptr[i + 1]].iter().sum())
            .collect();
        if let Some(i) = degree.iter().position(|&d| d <= 0.0) {
            return Err(Error::InvalidGraph(format!("node {i} is isolated")));
        }
        let inv_sqrt_degree = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
        Ok(Self {
            row_ptr,
            col,
            weight,
            degree,
            inv_sqrt_degree,
        })
    }

    /// Parses `i j w` lines. Blank lines and `#` comments are skipped; a
    /// `# nodes: N` comment fixes the node count, otherwise it is one more
    /// than the largest index.
    pub fn parse(text: &str) -> Result<Self> {
        let mut nodes: Option<usize> = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let loc = || format!("line {}", lineno + 1);
            let line = raw.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("nodes:") {
                    nodes = Some(v.trim().parse().map_err(|_| Error::parse(loc(), "bad node count"))?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(loc(), "expected `i j w`"));
            }
            let i: usize = toks[0].parse().map_err(|_| Error::parse(loc(), "bad index"))?;
            let j: usize = toks[1].parse().map_err(|_| Error::parse(loc(), "bad index"))?;
            let w: f64 = toks[2].parse().map_err(|_| Error::parse(loc(), "bad weight"))?;
            edges.push((i, j, w));
        }
        let n = nodes.unwrap_or_else(|| edges.iter().map(|e| e.1 + 1).max().unwrap_or(0));
        Self::from_triplets(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# nodes: {}\n", self.node_count());
        for i in 0..self.node_count() {
            for (j, w) in self.neighbors(i) {
                if i < j {
                    let _ = writeln!(s, "{i} {j} {w:.17e}");
                }
            }
        }
        s
    }

    pub fn node_count(&self) -> usize {
        self.degree.len()
    }

    pub fn edge_count(&self) -> usize {
        self.col.len() / 2
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    /// Connected-component label of every node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for (j, _) in self.neighbors(i) {
                    if label[j] == usize::MAX {
                        label[j] = next;
                        stack.push(j);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub(crate) fn laplacian_into(&self, u: &[f64], out: &mut [f64]) {
        for i in 0..self.node_count() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k];
                acc += self.weight[k] * self.inv_sqrt_degree[j] * u[j];
            }
            out[i] = u[i] - self.inv_sqrt_degree[i] * acc;
        }
    }
}

/// Normalized graph Laplacian `(I - D^{-1/2} A D^{-1/2}) u`.
pub fn graph_laplacian_apply(g: &Graph, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != g.node_count() {
        return Err(Error::InvalidParameter(format!(
            "vector has {} entries, graph has {} nodes",
            u.len(),
            g.node_count()
        )));
    }
    let mut out = vec![0.0; u.len()];
    g.laplacian_into(u, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink_scalar(2.0, 0.5), 1.5);
        assert_eq!(shrink_scalar(0.3, 0.5), 0.0);
        assert_eq!(shrink_scalar(-1.0, 0.25), -0.75);
        assert_eq!(shrink_scalar(0.5, 0.5), 0.0);
        assert_eq!(shrink_scalar(0.0, 0.0), 0.0);
    }

    #[test]
    fn shrink_rejects_negative_threshold() {
        let g = Grid::line(4, 0.0, 1.0).unwrap();
        assert!(shrink(&Field::zeros(g), -1.0).is_err());
    }

    #[test]
    fn subgradient_examples() {
        assert_eq!(subgradient_select(0.7, 5.0, 1.0).unwrap(), 1.0);
        assert_eq!(subgradient_select(0.0, 0.3, 1.0).unwrap(), 0.3);
        assert_eq!(subgradient_select(0.0, 2.0, 1.0).unwrap(), 1.0);
        assert!(subgradient_select(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn cosine_is_an_eigenvector() {
        let n = 32;
        let g = Grid::line(n, 0.0, 3.0).unwrap();
        let sym = LaplacianSymbol::new(&g);
        for k in [0usize, 1, 5, 16] {
            let u = Field::new(
                g,
                (0..n).map(|i| (2.0 * PI * (k * i) as f64 / n as f64).cos()).collect(),
            )
            .unwrap();
            let lu = laplacian_apply(&u);
            for (a, b) in lu.values().iter().zip(u.values()) {
                assert!((a + sym.axis(k) * b).abs() < 1e-9 * sym.axis(16));
            }
        }
    }

    #[test]
    fn resolvent_of_constant() {
        let g = Grid::square(6, 0.0, 1.0).unwrap();
        let z = Field::constant(g, 2.5).unwrap();
        let w = resolvent_inverse(&z, 0.3).unwrap();
        for v in w.values() {
            assert!((v - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn two_node_graph() {
        let g = Graph::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(graph_laplacian_apply(&g, &[1.0, -1.0]).unwrap(), vec![2.0, -2.0]);
        assert!(Graph::from_triplets(3, &[(0, 1, 1.0)]).is_err());
        assert!(Graph::from_triplets(2, &[(1, 0, 1.0)]).is_err());
        assert!(Graph::from_triplets(2, &[(0, 1, 0.0)]).is_err());
    }

    #[test]
    fn graph_text_round_trip() {
        let text = "# a triangle\n0 1 1.5\n1 2 0.25\n0 2 2\n";
        let g = Graph::parse(text).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degree(), &[3.5, 1.75, 2.25]);
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
        assert!(Graph::parse("0 1\n").is_err());
    }
}
