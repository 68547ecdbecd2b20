//! Region masks on 2D grids and their smoothed indicators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, Grid};

fn check_2d(grid: &Grid) -> Result<()> {
    if grid.dim() == 2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter("masks need a 2D grid".into()))
    }
}

/// Polar star `r <= r0 (1 + eps cos(k (theta - phase)))` around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarShape {
    pub center: [f64; 2],
    pub r0: f64,
    pub eps: f64,
    pub points: u32,
    #[serde(default)]
    pub phase: f64,
}

impl StarShape {
    fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) || !(0.0..1.0).contains(&self.eps) {
            return Err(Error::InvalidParameter(format!(
                "star needs r0 > 0 and 0 <= eps < 1, got r0={} eps={}",
                self.r0, self.eps
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let r = dx.hypot(dy);
        let theta = dy.atan2(dx);
        r <= self.r0 * (1.0 + self.eps * (self.points as f64 * (theta - self.phase)).cos())
    }
}

pub fn make_star_mask(grid: &Grid, shape: &StarShape) -> Result<Vec<bool>> {
    check_2d(grid)?;
    shape.validate()?;
    Ok((0..grid.len())
        .map(|i| {
            let [x, y] = grid.point(i);
            shape.contains(x, y)
        })
        .collect())
}

/// Flower: a star with deep petals (`eps` defaults to 0.6).
pub fn make_flower_mask(grid: &Grid, center: [f64; 2], r0: f64, petals: u32, eps: Option<f64>) -> Result<Vec<bool>> {
    make_star_mask(
        grid,
        &StarShape {
            center,
            r0,
            eps: eps.unwrap_or(0.6),
            points: petals,
            phase: 0.0,
        },
    )
}

/// Vertices of a Koch snowflake of circumradius `radius` after `depth`
/// refinements.
pub fn koch_snowflake(center: [f64; 2], radius: f64, depth: u32) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = (0..3)
        .map(|k| {
            let a = PI / 2.0 - 2.0 * PI * k as f64 / 3.0;
            [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
        })
        .collect();
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for i in 0..pts.len() {
            let p = pts[i];
            let q = pts[(i + 1) % pts.len()];
            let d = [(q[0] - p[0]) / 3.0, (q[1] - p[1]) / 3.0];
            let a = [p[0] + d[0], p[1] + d[1]];
            let b = [p[0] + 2.0 * d[0], p[1] + 2.0 * d[1]];
            // vertices run clockwise, so outward is a left turn
            let (c, s) = ((PI / 3.0).cos(), (PI / 3.0).sin());
            let tip = [a[0] + d[0] * c - d[1] * s, a[1] + d[0] * s + d[1] * c];
            next.extend_from_slice(&[p, a, tip, b]);
        }
        pts = next;
    }
    pts
}

fn point_in_polygon(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (pi, pj) = (poly[i], poly[j]);
        if (pi[1] > y) != (pj[1] > y) && x < (pj[0] - pi[0]) * (y - pi[1]) / (pj[1] - pi[1]) + pi[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Filled Koch snowflake.
pub fn make_fractal_mask(grid: &Grid, center: [f64; 2], radius: f64, depth: u32) -> Result<Vec<bool>> {
    check_2d(grid)?;
    if !(radius > 0.0) || depth > 8 {
        return Err(Error::InvalidParameter(format!(
            "snowflake needs radius > 0 and depth <= 8, got {radius}, {depth}"
        )));
    }
    let poly = koch_snowflake(center, radius, depth);
    Ok((0..grid.len())
        .map(|i| {
            let [x, y] = grid.point(i);
            point_in_polygon(&poly, x, y)
        })
        .collect())
}

/// Axis-aligned box `[x0, x1) x [y0, y1)`.
pub fn make_box_mask(grid: &Grid, x: (f64, f64), y: (f64, f64)) -> Result<Vec<bool>> {
    check_2d(grid)?;
    Ok((0..grid.len())
        .map(|i| {
            let [px, py] = grid.point(i);
            px >= x.0 && px < x.1 && py >= y.0 && py < y.1
        })
        .collect())
}

pub fn mask_area(grid: &Grid, mask: &[bool]) -> f64 {
    mask.iter().filter(|&&b| b).count() as f64 * grid.cell_measure()
}

/// Periodic separable Gaussian blur with standard deviation `std_cells`
/// (in cells), truncated at `truncate` deviations. Values below `floor` are
/// set to exactly zero so the smoothed data stays compactly supported.
pub fn gaussian_smooth(u: &Field, std_cells: f64, truncate: f64, floor: f64) -> Result<Field> {
    check_2d(u.grid())?;
    if !(std_cells > 0.0) {
        return Ok(u.clone());
    }
    let n = u.grid().n();
    let radius = (truncate * std_cells).round() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-0.5 * (k as f64 / std_cells).powi(2)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;

    let src = u.values();
    let mut tmp = vec![0.0; src.len()];
    for i in 0..n {
        for j in 0..n {
            tmp[i * n + j] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[i * n + wrap(j as isize + k as isize - radius)])
                .sum();
        }
    }
    let mut out = vec![0.0; src.len()];
    for i in 0..n {
        for j in 0..n {
            let v: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * tmp[wrap(i as isize + k as isize - radius) * n + j])
                .sum();
            out[i * n + j] = if v.abs() < floor { 0.0 } else { v };
        }
    }
    Field::new(*u.grid(), out)
}

/// `amplitude` times the indicator of `mask`, as a field.
pub fn indicator(grid: &Grid, mask: &[bool], amplitude: f64) -> Result<Field> {
    Field::new(*grid, mask.iter().map(|&b| if b { amplitude } else { 0.0 }).collect())
}
