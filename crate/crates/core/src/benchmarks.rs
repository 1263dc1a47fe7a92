//! Verification problems with known answers: the manufactured-solution
//! convergence study and the two sharp-layer problems for the 2D scheme, and
//! the three-segment tree with closed-form solution for the network scheme.

use crate::error::Result;
use crate::mesh::{CellField, Side, StructuredGrid2D};
use crate::mfv::{self, AdrProblem2D, BoundaryCondition, StabilizationKind};
use crate::pipenet::{
    build_network, exact_network_solution, recover_element_fluxes, solve_pm, NetworkProblem1D, NetworkSpec,
    NodeCondition, PipeNetwork, VertexRole,
};
use crate::quadrature::composite;
use serde::Serialize;

/// Least-squares slope of `log e` against `log h`.
pub fn estimated_order(h: &[f64], e: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub const REFERENCE_ALPHAS: [f64; 5] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4];
pub const REFERENCE_NS: [usize; 5] = [4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub n: usize,
    pub h: f64,
    /// `max_K |u(x_K) − u_K|`.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub stabilization: StabilizationKind,
    pub rows: Vec<ConvergenceRow>,
    /// `(α, estimated order)`.
    pub orders: Vec<(f64, f64)>,
}

fn manufactured(p: [f64; 2]) -> f64 {
    p[0].cos() * p[1].sin()
}

/// `u = cos x sin y` on the unit square with `β = (0, 1)`, `γ = 1` and
/// Dirichlet data from `u`.
pub fn manufactured_problem(grid: &StructuredGrid2D, alpha: f64) -> AdrProblem2D {
    let mut p = AdrProblem2D::constant(grid, alpha, 1.0, 0.0).with_uniform_beta(grid, [0.0, 1.0]);
    // −αΔu + ∂_y u + u with Δu = −2u
    p.f = CellField::from_fn(grid, |x| (2.0 * alpha + 1.0) * manufactured(x) + x[0].cos() * x[1].cos());
    p.set_bc_fn(grid, |m, _| BoundaryCondition::Dirichlet(manufactured(m)));
    p
}

pub fn convergence_2d(kind: StabilizationKind, alphas: &[f64], ns: &[usize], tol: f64) -> Result<ConvergenceStudy> {
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    for &alpha in alphas {
        let mut hs = Vec::new();
        let mut es = Vec::new();
        for &n in ns {
            let grid = StructuredGrid2D::uniform(n, n, 1.0, 1.0)?;
            let u = mfv::solve_problem(&manufactured_problem(&grid, alpha), &grid, kind, tol)?;
            let error = (0..grid.num_elements())
                .map(|k| (manufactured(grid.center(k)) - u[k]).abs())
                .fold(0.0, f64::max);
            let h = 1.0 / n as f64;
            rows.push(ConvergenceRow { alpha, n, h, error });
            hs.push(h);
            es.push(error);
        }
        orders.push((alpha, estimated_order(&hs, &es)));
    }
    Ok(ConvergenceStudy { stabilization: kind, rows, orders })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerCase {
    /// `f = 1`, `β = (−y, x)`, zero Dirichlet data.
    Boundary,
    /// `f = 0`, `β = ∇ψ` with the radial band potential.
    Interior,
}

impl std::str::FromStr for LayerCase {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "boundary" => Ok(Self::Boundary),
            "interior" => Ok(Self::Interior),
            other => Err(crate::Error::Config(format!("unknown layer case '{other}'"))),
        }
    }
}

pub const LAYER_ALPHA: f64 = 1e-6;
pub const LAYER_N: usize = 64;

/// `∇ψ` for `ψ = 0` on `d + x < 0.55`, `2(d − 0.55)` up to `d + x < 0.65`,
/// `0.2` beyond, `d = |x|`.
pub fn band_gradient(p: [f64; 2]) -> [f64; 2] {
    let d = p[0].hypot(p[1]);
    let s = d + p[0];
    if (0.55..0.65).contains(&s) && d > 0.0 {
        [2.0 * p[0] / d, 2.0 * p[1] / d]
    } else {
        [0.0, 0.0]
    }
}

/// Layer problems on the unit square. The interior case uses `u = 1` on the
/// left side, `u = 0` on the right and top, and a zero total flux (Robin
/// type) on the bottom.
pub fn layer_problem(case: LayerCase, grid: &StructuredGrid2D, alpha: f64) -> AdrProblem2D {
    match case {
        LayerCase::Boundary => {
            let mut p = AdrProblem2D::constant(grid, alpha, 0.0, 1.0);
            p.set_beta_fn(grid, |x| [-x[1], x[0]]);
            p
        }
        LayerCase::Interior => {
            let mut p = AdrProblem2D::constant(grid, alpha, 0.0, 0.0);
            p.set_beta_fn(grid, band_gradient);
            p.set_bc_fn(grid, |_, side| match side {
                Side::Left => BoundaryCondition::Dirichlet(1.0),
                Side::Right | Side::Top => BoundaryCondition::Dirichlet(0.0),
                Side::Bottom => BoundaryCondition::ZeroTotalFlux,
            });
            p
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerResult {
    pub case: LayerCase,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    /// Bounds implied by comparison with constants, `±∞` where none is.
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Cells where `K·1` has the wrong sign for an upper bound (`β`
    /// converging into the cell).
    pub compressive_cells: usize,
    /// Largest excursion outside `[lower_bound, upper_bound]`, zero if none.
    pub overshoot: f64,
    #[serde(skip)]
    pub grid: StructuredGrid2D,
    #[serde(skip)]
    pub solution: CellField,
}

/// Solves a layer problem and checks it against the bounds implied by the
/// M-matrix property: since `K⁻¹ ≥ 0`, a constant `c` with `K·c ≤ g` is a
/// lower bound and one with `K·c ≥ g` an upper bound. Candidates are the
/// extreme Dirichlet values together with 0.
pub fn layers_2d(case: LayerCase, n: usize, alpha: f64, kind: StabilizationKind, tol: f64) -> Result<LayerResult> {
    let grid = StructuredGrid2D::uniform(n, n, 1.0, 1.0)?;
    let p = layer_problem(case, &grid, alpha);
    let (k, g) = mfv::assemble(&p, &grid, kind)?;
    let u = mfv::solve(&k, &g, tol)?;
    let data: Vec<f64> = p
        .bc
        .iter()
        .zip(grid.edges())
        .filter(|(_, e)| e.is_boundary())
        .filter_map(|(bc, _)| match bc {
            BoundaryCondition::Dirichlet(v) => Some(*v),
            _ => None,
        })
        .collect();
    let lo = data.iter().copied().fold(0.0, f64::min);
    let hi = data.iter().copied().fold(0.0, f64::max);
    let ones = vec![1.0; grid.num_elements()];
    let row_sums = k.mul_vec(&ones);
    let slack = 1e-13 * k.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let below = |c: f64| row_sums.iter().zip(g.values()).all(|(r, g)| c * r - g <= slack * c.abs().max(1.0));
    let above = |c: f64| row_sums.iter().zip(g.values()).all(|(r, g)| c * r - g >= -slack * c.abs().max(1.0));
    let lower_bound = if below(lo) { lo } else { f64::NEG_INFINITY };
    let upper_bound = if above(hi) { hi } else { f64::INFINITY };
    let compressive_cells = row_sums.iter().filter(|r| **r < -slack).count();
    let (min, max) = (u.min(), u.max());
    let overshoot = (lower_bound - min).max(max - upper_bound).max(0.0);
    Ok(LayerResult {
        case,
        n,
        min,
        max,
        lower_bound,
        upper_bound,
        compressive_cells,
        overshoot,
        grid,
        solution: u,
    })
}

/// The three-segment test tree: `σ₁` of unit length into a junction, `σ₂`,
/// `σ₃` of unit length out of it.
pub fn tree_network(h: f64) -> Result<PipeNetwork> {
    let mut s = NetworkSpec::default();
    let x0 = s.vertex(0.0, 0.0, VertexRole::Inlet);
    let x1 = s.vertex(1.0, 0.0, VertexRole::Junction);
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let x2 = s.vertex(1.0 + c, c, VertexRole::Outlet);
    let x3 = s.vertex(1.0 + c, -c, VertexRole::Outlet);
    for (a, b) in [(x0, x1), (x1, x2), (x1, x3)] {
        s.segment(a, b, 0.01, 1);
    }
    build_network(&s, Some(h * (1.0 + 1e-12)))
}

pub const TREE_BETA: [f64; 3] = [3.0, 2.0, 1.0];
pub const TREE_BOUNDARY: [f64; 3] = [1.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkRow {
    pub h: f64,
    /// `‖u − u_h‖` in `H¹` over the whole network.
    pub error_v: f64,
    /// `‖J − J_h‖` in `L²`.
    pub error_q: f64,
    /// `max |J − J_h| / |J|` over elements.
    pub flux_relative: f64,
    pub omega_h: f64,
    /// Nodal values monotone along every segment.
    pub monotone: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkStudy {
    pub eps: f64,
    pub omega: f64,
    pub rows: Vec<NetworkRow>,
    pub order_v: f64,
    pub order_q: f64,
}

/// Solution of the tree problem at one mesh size, as nodal values along each
/// segment (arc length, `u_h`) for plotting.
pub fn network_profiles(eps: f64, h: f64, tol: f64) -> Result<Vec<Vec<(f64, f64)>>> {
    let net = tree_network(h)?;
    let u = solve_tree(&net, eps, tol)?;
    Ok(net
        .segments()
        .iter()
        .map(|s| {
            let step = s.length / (s.nodes.len() - 1) as f64;
            s.nodes.iter().enumerate().map(|(i, &n)| (i as f64 * step, u[n])).collect()
        })
        .collect())
}

fn tree_problem(net: &PipeNetwork, eps: f64) -> NetworkProblem1D {
    let mut p = NetworkProblem1D::new(net).with_segment_data(net, &[eps; 3], &TREE_BETA);
    p.nodes[net.inlet()] = NodeCondition::Dirichlet(TREE_BOUNDARY[0]);
    for (i, &o) in net.outlets().iter().enumerate() {
        p.nodes[o] = NodeCondition::Dirichlet(TREE_BOUNDARY[1 + i.min(1)]);
    }
    p
}

fn solve_tree(net: &PipeNetwork, eps: f64, tol: f64) -> Result<Vec<f64>> {
    solve_pm(&tree_problem(net, eps), net, true, tol)
}

/// Upwind PM on the tree at each `h` against the closed-form solution.
/// Norms use composite Gauss quadrature with 8 sub-intervals of 5 points
/// per element.
pub fn network_test(eps: f64, hs: &[f64], tol: f64) -> Result<NetworkStudy> {
    let mut rows = Vec::new();
    let mut omega = f64::NAN;
    for &h in hs {
        let net = tree_network(h)?;
        let exact = exact_network_solution(&net, eps, &TREE_BETA, TREE_BOUNDARY)?;
        omega = exact.omega;
        let problem = tree_problem(&net, eps);
        let u = solve_pm(&problem, &net, true, tol)?;
        let j = recover_element_fluxes(&u, &problem, &net, true)?;
        let (mut ev, mut eq, mut rel) = (0.0, 0.0, 0.0f64);
        let mut monotone = true;
        for (si, seg) in net.segments().iter().enumerate() {
            let ex = exact.segments[si];
            let jx = ex.flux();
            let nel = seg.elements.len();
            let step = seg.length / nel as f64;
            for (local, k) in seg.elements.clone().enumerate() {
                let e = &net.elements()[k];
                let s0 = local as f64 * step;
                let (ua, ub) = (u[e.a], u[e.b]);
                let slope = (ub - ua) / step;
                for (s, w) in composite(s0, s0 + step, 8, 5) {
                    let uh = ua + slope * (s - s0);
                    ev += w * ((ex.u(s) - uh).powi(2) + (ex.du(s) - slope).powi(2));
                }
                eq += step * (jx - j[k]).powi(2);
                rel = rel.max((jx - j[k]).abs() / jx.abs().max(f64::MIN_POSITIVE));
            }
            let vals: Vec<f64> = seg.nodes.iter().map(|&n| u[n]).collect();
            let up = vals.windows(2).all(|w| w[1] >= w[0] - 1e-14);
            let down = vals.windows(2).all(|w| w[1] <= w[0] + 1e-14);
            monotone &= up || down;
        }
        let junction = net.segments()[0].to;
        rows.push(NetworkRow {
            h,
            error_v: ev.sqrt(),
            error_q: eq.sqrt(),
            flux_relative: rel,
            omega_h: u[junction],
            monotone,
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let ev: Vec<f64> = rows.iter().map(|r| r.error_v).collect();
    let eq: Vec<f64> = rows.iter().map(|r| r.error_q).collect();
    Ok(NetworkStudy {
        eps,
        omega,
        order_v: estimated_order(&h, &ev),
        order_q: estimated_order(&h, &eq),
        rows,
    })
}

/// `2⁻ᵏ` for `k` in `from..=to`.
pub fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}
