//! Axis-aligned rectangular grids on `(0,W)×(0,H)` with the element/edge
//! adjacency used by the mixed finite-volume scheme.
//!
//! Elements are numbered row-major (`k = i + nx·j`). Edges are numbered by an
//! x-sweep (all vertical edges, bottom row first, left to right) followed by a
//! y-sweep (all horizontal edges, bottom line first). Interior edges are
//! oriented from the left/lower element (`K⁺`) to the right/upper one (`K⁻`);
//! boundary edges carry the outward normal.

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Which side of the rectangle a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub length: f64,
    /// Unit normal `n⁺`, pointing from `plus` to `minus` (outward on the boundary).
    pub normal: [f64; 2],
    pub midpoint: [f64; 2],
    pub plus: usize,
    pub minus: Option<usize>,
    /// Center-to-center distance, or center-to-midpoint on the boundary.
    pub d: f64,
    /// Distances from the `plus` / `minus` centers to the edge line.
    pub d_plus: f64,
    pub d_minus: f64,
    pub side: Option<Side>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }
}

/// Edge `e` seen from element `K`: `sign = +1` when `K = K⁺_e`.
#[derive(Debug, Clone, Copy)]
pub struct LocalEdge {
    pub edge: usize,
    pub sign: f64,
    pub neighbor: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct StructuredGrid2D {
    nx: usize,
    ny: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    edges: Vec<Edge>,
    /// Local edges in the order left, right, bottom, top.
    element_edges: Vec<[LocalEdge; 4]>,
}

impl StructuredGrid2D {
    /// Uniform `nx × ny` grid on `(0,W)×(0,H)`.
    pub fn uniform(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "grid needs at least one element per axis, got {nx}x{ny}"
            )));
        }
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Config(format!(
                "grid extents must be positive, got W={width}, H={height}"
            )));
        }
        let xs = (0..=nx).map(|i| width * i as f64 / nx as f64).collect();
        let ys = (0..=ny).map(|j| height * j as f64 / ny as f64).collect();
        Self::from_lines(xs, ys)
    }

    /// Tensor-product grid from strictly increasing grid lines starting at 0.
    pub fn from_lines(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let check = |v: &[f64], axis: &str| -> Result<()> {
            if v.len() < 2 {
                return Err(Error::Config(format!("{axis} needs at least two grid lines")));
            }
            if v[0] != 0.0 {
                return Err(Error::Config(format!("{axis} grid lines must start at 0")));
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::Config(format!(
                    "{axis} grid lines must be strictly increasing"
                )));
            }
            Ok(())
        };
        check(&xs, "x")?;
        check(&ys, "y")?;
        let nx = xs.len() - 1;
        let ny = ys.len() - 1;
        let cx = |i: usize| 0.5 * (xs[i] + xs[i + 1]);
        let cy = |j: usize| 0.5 * (ys[j] + ys[j + 1]);
        let idx = |i: usize, j: usize| i + nx * j;

        let mut edges = Vec::with_capacity((nx + 1) * ny + nx * (ny + 1));
        let mut element_edges = vec![
            [LocalEdge {
                edge: usize::MAX,
                sign: 0.0,
                neighbor: None,
            }; 4];
            nx * ny
        ];

        // x-sweep: vertical edges
        for j in 0..ny {
            for i in 0..=nx {
                let e = edges.len();
                let length = ys[j + 1] - ys[j];
                let midpoint = [xs[i], cy(j)];
                let edge = if i == 0 {
                    let k = idx(0, j);
                    element_edges[k][0] = LocalEdge { edge: e, sign: 1.0, neighbor: None };
                    Edge {
                        length,
                        normal: [-1.0, 0.0],
                        midpoint,
                        plus: k,
                        minus: None,
                        d: cx(0) - xs[0],
                        d_plus: cx(0) - xs[0],
                        d_minus: 0.0,
                        side: Some(Side::Left),
                    }
                } else if i == nx {
                    let k = idx(nx - 1, j);
                    element_edges[k][1] = LocalEdge { edge: e, sign: 1.0, neighbor: None };
                    Edge {
                        length,
                        normal: [1.0, 0.0],
                        midpoint,
                        plus: k,
                        minus: None,
                        d: xs[nx] - cx(nx - 1),
                        d_plus: xs[nx] - cx(nx - 1),
                        d_minus: 0.0,
                        side: Some(Side::Right),
                    }
                } else {
                    let p = idx(i - 1, j);
                    let m = idx(i, j);
                    element_edges[p][1] = LocalEdge { edge: e, sign: 1.0, neighbor: Some(m) };
                    element_edges[m][0] = LocalEdge { edge: e, sign: -1.0, neighbor: Some(p) };
                    Edge {
                        length,
                        normal: [1.0, 0.0],
                        midpoint,
                        plus: p,
                        minus: Some(m),
                        d: cx(i) - cx(i - 1),
                        d_plus: xs[i] - cx(i - 1),
                        d_minus: cx(i) - xs[i],
                        side: None,
                    }
                };
                edges.push(edge);
            }
        }
        // y-sweep: horizontal edges
        for j in 0..=ny {
            for i in 0..nx {
                let e = edges.len();
                let length = xs[i + 1] - xs[i];
                let midpoint = [cx(i), ys[j]];
                let edge = if j == 0 {
                    let k = idx(i, 0);
                    element_edges[k][2] = LocalEdge { edge: e, sign: 1.0, neighbor: None };
                    Edge {
                        length,
                        normal: [0.0, -1.0],
                        midpoint,
                        plus: k,
                        minus: None,
                        d: cy(0) - ys[0],
                        d_plus: cy(0) - ys[0],
                        d_minus: 0.0,
                        side: Some(Side::Bottom),
                    }
                } else if j == ny {
                    let k = idx(i, ny - 1);
                    element_edges[k][3] = LocalEdge { edge: e, sign: 1.0, neighbor: None };
                    Edge {
                        length,
                        normal: [0.0, 1.0],
                        midpoint,
                        plus: k,
                        minus: None,
                        d: ys[ny] - cy(ny - 1),
                        d_plus: ys[ny] - cy(ny - 1),
                        d_minus: 0.0,
                        side: Some(Side::Top),
                    }
                } else {
                    let p = idx(i, j - 1);
                    let m = idx(i, j);
                    element_edges[p][3] = LocalEdge { edge: e, sign: 1.0, neighbor: Some(m) };
                    element_edges[m][2] = LocalEdge { edge: e, sign: -1.0, neighbor: Some(p) };
                    Edge {
                        length,
                        normal: [0.0, 1.0],
                        midpoint,
                        plus: p,
                        minus: Some(m),
                        d: cy(j) - cy(j - 1),
                        d_plus: ys[j] - cy(j - 1),
                        d_minus: cy(j) - ys[j],
                        side: None,
                    }
                };
                edges.push(edge);
            }
        }
        Ok(Self {
            nx,
            ny,
            xs,
            ys,
            edges,
            element_edges,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn width(&self) -> f64 {
        self.xs[self.nx]
    }

    pub fn height(&self) -> f64 {
        self.ys[self.ny]
    }

    pub fn x_lines(&self) -> &[f64] {
        &self.xs
    }

    pub fn y_lines(&self) -> &[f64] {
        &self.ys
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    /// `(i, j)` of element `k`.
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn center(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        [
            0.5 * (self.xs[i] + self.xs[i + 1]),
            0.5 * (self.ys[j] + self.ys[j + 1]),
        ]
    }

    pub fn area(&self, k: usize) -> f64 {
        let (i, j) = self.ij(k);
        (self.xs[i + 1] - self.xs[i]) * (self.ys[j + 1] - self.ys[j])
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn element_edges(&self, k: usize) -> &[LocalEdge; 4] {
        &self.element_edges[k]
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary())
    }

    /// Element containing `p`; points on an interior grid line go to the
    /// element above/right of it, points on the outer boundary to the adjacent
    /// element. `None` outside the closed rectangle.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let find = |lines: &[f64], v: f64| -> Option<usize> {
            let n = lines.len() - 1;
            if !(v >= lines[0] && v <= lines[n]) {
                return None;
            }
            let pos = lines.partition_point(|&l| l <= v);
            Some(pos.saturating_sub(1).min(n - 1))
        };
        let i = find(&self.xs, p[0])?;
        let j = find(&self.ys, p[1])?;
        Some(self.index(i, j))
    }
}

/// Piecewise-constant scalar, one value per element.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField(Vec<f64>);

impl CellField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn from_fn(grid: &StructuredGrid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self((0..grid.num_elements()).map(|k| f(grid.center(k))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Area-weighted mean over the grid.
    pub fn mean(&self, grid: &StructuredGrid2D) -> f64 {
        let total: f64 = (0..grid.num_elements()).map(|k| grid.area(k)).sum();
        self.0
            .iter()
            .enumerate()
            .map(|(k, v)| v * grid.area(k))
            .sum::<f64>()
            / total
    }
}

impl Index<usize> for CellField {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl IndexMut<usize> for CellField {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.0[k]
    }
}

/// One signed flux per edge, positive in the direction of `n⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFluxField(Vec<f64>);

impl EdgeFluxField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for EdgeFluxField {
    type Output = f64;
    fn index(&self, e: usize) -> &f64 {
        &self.0[e]
    }
}

/// Jump `⟦w⟧_e = w⁺n⁺ + w⁻n⁻` and average `{w}_e = (w⁺ + w⁻)/2` across edge
/// `e`; on boundary edges `w⁻ := 0`.
pub fn jump_and_average(grid: &StructuredGrid2D, field: &CellField, e: usize) -> ([f64; 2], f64) {
    let edge = grid.edge(e);
    let wp = field[edge.plus];
    let wm = edge.minus.map_or(0.0, |m| field[m]);
    let n = edge.normal;
    ([(wp - wm) * n[0], (wp - wm) * n[1]], 0.5 * (wp + wm))
}
