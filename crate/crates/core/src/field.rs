//! Uniform periodic grids, the fields that live on them, and the basic
//! measurements every solver reports: discrete norms, total variation and
//! the exact-zero support set.
//!
//! Grids follow the periodic convention: `n` points per axis at
//! `x_i = x_min + i h` with `h = (x_max - x_min) / n`. Two dimensional
//! fields are stored row-major, `(i, j) -> i * n + j`, where `i` indexes the
//! first coordinate.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    x_min: f64,
    x_max: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points per axis, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "extent [{x_min}, {x_max}) is empty or not finite"
            )));
        }
        Ok(Self { dim, n, x_min, x_max })
    }

    pub fn line(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(1, n, x_min, x_max)
    }

    pub fn square(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(2, n, x_min, x_max)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of one cell, `h^dim`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        (self.x_max - self.x_min).powi(self.dim as i32)
    }

    /// Coordinate of the `i`-th point along an axis.
    pub fn coord(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    /// Coordinates of the point with flat index `idx`; the second entry is
    /// zero on 1D grids.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without the finiteness scan; callers guarantee the
    /// invariants.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_parts(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    /// Samples `f` at every grid point. On 1D grids the second coordinate
    /// passed to `f` is zero.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.point(idx);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn from_fn_1d(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x, _| f(x))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map; fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field::new(self.grid, values)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Discrete integral `sum(u) h^d`.
    pub fn integral(&self) -> f64 {
        self.sum() * self.grid.cell_measure()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete energy `0.5 sum(u^2) h^d`.
    pub fn energy(&self) -> f64 {
        0.5 * self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_measure()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(self.to_csv_string().as_bytes())
    }

    pub fn to_csv_string(&self) -> String {
        let g = &self.grid;
        let mut s = format!(
            "# grid: d={} n={} xmin={} xmax={}\n",
            g.dim, g.n, g.x_min, g.x_max
        );
        match g.dim {
            1 => {
                for v in &self.values {
                    let _ = writeln!(s, "{v:.16e}");
                }
            }
            _ => {
                for row in self.values.chunks(g.n) {
                    let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                    s.push_str(&line.join(","));
                    s.push('\n');
                }
            }
        }
        s
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Field> {
        let mut lines = input.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line.map_err(|e| Error::parse("line 1", e.to_string()))?,
            None => return Err(Error::parse("line 1", "empty input")),
        };
        let grid = parse_grid_header(&header)?;
        let mut values = Vec::with_capacity(grid.len());
        let mut rows = 0usize;
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::parse(format!("line {}", lineno + 1), e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let before = values.len();
            for tok in line.split(',') {
                let v: f64 = tok.trim().parse().map_err(|_| {
                    Error::parse(format!("line {}", lineno + 1), format!("bad number {tok:?}"))
                })?;
                values.push(v);
            }
            let per_line = values.len() - before;
            let expected = if grid.dim == 1 { 1 } else { grid.n };
            if per_line != expected {
                return Err(Error::parse(
                    format!("line {}", lineno + 1),
                    format!("expected {expected} values, found {per_line}"),
                ));
            }
            rows += 1;
        }
        let expected_rows = grid.n;
        if rows != expected_rows {
            return Err(Error::parse(
                "body",
                format!("expected {expected_rows} rows, found {rows}"),
            ));
        }
        Field::new(grid, values)
    }
}

fn parse_grid_header(line: &str) -> Result<Grid> {
    let rest = line
        .strip_prefix("# grid:")
        .ok_or_else(|| Error::parse("line 1", "missing '# grid:' header"))?;
    let (mut d, mut n, mut lo, mut hi) = (None, None, None, None);
    for tok in rest.split_whitespace() {
        let (key, val) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse("line 1", format!("bad token {tok:?}")))?;
        let bad = || Error::parse("line 1", format!("bad value in {tok:?}"));
        match key {
            "d" => d = Some(val.parse::<usize>().map_err(|_| bad())?),
            "n" => n = Some(val.parse::<usize>().map_err(|_| bad())?),
            "xmin" => lo = Some(val.parse::<f64>().map_err(|_| bad())?),
            "xmax" => hi = Some(val.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(Error::parse("line 1", format!("unknown key {key:?}"))),
        }
    }
    match (d, n, lo, hi) {
        (Some(d), Some(n), Some(lo), Some(hi)) => Grid::new(d, n, lo, hi),
        _ => Err(Error::parse("line 1", "header needs d, n, xmin and xmax")),
    }
}

/// Which discrete Lq norm to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    pub fn label(&self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

/// Discrete Lq norm; the L1 and L2 sums carry the cell measure `h^d`.
pub fn norm(u: &Field, q: Norm) -> f64 {
    norm_of_slice(u.values(), u.grid().cell_measure(), q)
}

pub(crate) fn norm_of_slice(values: &[f64], cell: f64, q: Norm) -> f64 {
    match q {
        Norm::L1 => values.iter().map(|v| v.abs()).sum::<f64>() * cell,
        Norm::L2 => (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt(),
        Norm::Linf => values.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Discrete total variation with periodic wrap. In 2D this is the sum of
/// absolute differences along both axes (anisotropic TV).
pub fn total_variation(u: &Field) -> f64 {
    let n = u.grid().n();
    let v = u.values();
    match u.grid().dim() {
        1 => (0..n).map(|i| (v[(i + 1) % n] - v[i]).abs()).sum(),
        _ => {
            let mut tv = 0.0;
            for i in 0..n {
                let ip = (i + 1) % n;
                for j in 0..n {
                    let jp = (j + 1) % n;
                    let c = v[i * n + j];
                    tv += (v[ip * n + j] - c).abs() + (v[i * n + jp] - c).abs();
                }
            }
            tv
        }
    }
}

/// Exact-zero mask of a field together with its measure.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    mask: Vec<bool>,
    cell_measure: f64,
}

impl SupportSet {
    pub fn from_mask(mask: Vec<bool>, cell_measure: f64) -> Self {
        Self { mask, cell_measure }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Count times the cell measure (`h^d` on grids, 1 on graphs).
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.cell_measure
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// |A ∩ B| / |A ∪ B|; two empty sets have index 1.
    pub fn jaccard(&self, other: &SupportSet) -> f64 {
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.mask.iter().zip(&other.mask) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Smallest distance, in cells, between a support point and the edge of
    /// the index box. `None` for an empty support.
    pub fn boundary_margin(&self, grid: &Grid) -> Option<usize> {
        let n = grid.n();
        let mut margin: Option<usize> = None;
        for (idx, _) in self.mask.iter().enumerate().filter(|(_, &b)| b) {
            let d = match grid.dim() {
                1 => idx.min(n - 1 - idx),
                _ => {
                    let (i, j) = (idx / n, idx % n);
                    i.min(n - 1 - i).min(j).min(n - 1 - j)
                }
            };
            margin = Some(margin.map_or(d, |m| m.min(d)));
        }
        margin
    }
}

/// Support of `u`: every entry that is not exactly zero.
pub fn support(u: &Field) -> SupportSet {
    SupportSet::from_mask(
        u.values().iter().map(|&v| v != 0.0).collect(),
        u.grid().cell_measure(),
    )
}

/// Cells within which a support touching the domain edge triggers a warning.
pub const BOUNDARY_WARNING_CELLS: usize = 5;

/// Human-readable warning when the support of `u` comes within
/// [`BOUNDARY_WARNING_CELLS`] of the domain edge.
pub fn boundary_warning(u: &Field) -> Option<String> {
    let margin = support(u).boundary_margin(u.grid())?;
    (margin < BOUNDARY_WARNING_CELLS).then(|| {
        format!(
            "support reaches within {margin} cells of the domain boundary; periodic wrap may affect the solution"
        )
    })
}
