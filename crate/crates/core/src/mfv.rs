//! Stabilized mixed finite-volume scheme for
//! `−∇·(α∇u − βu) + γu = f` on a [`StructuredGrid2D`].
//!
//! The lowest-order mixed system is solved in its reduced five-point form:
//! the edge flux
//!
//! ```text
//! j_e = [ −α(1+ϱ_e)(u⁻ − u⁺)/d_e + (β·n_e⁺)(u⁺ + u⁻)/2 ] |e|
//! ```
//!
//! is eliminated into the cell balance `Σ_e ±j_e + γ|K|u_K = f|K|`.

use crate::error::{Error, Result};
use crate::mesh::{CellField, EdgeFluxField, Side, StructuredGrid2D};
use crate::sparse::{self, SparseMatrix, TripletBuilder};

/// `ℬ(x) = x/(eˣ − 1)`.
pub fn bernoulli(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("Bernoulli function of NaN".into()));
    }
    Ok(bern(x))
}

#[inline]
pub(crate) fn bern(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - 0.5 * x + x * x / 12.0
    } else if x > 0.0 {
        // large positive x: ℬ(x) = x e^{-x} / (1 − e^{-x})
        x * (-x).exp() / -(-x).exp_m1()
    } else {
        x / x.exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilizationKind {
    Upwind,
    ScharfetterGummel,
}

impl std::str::FromStr for StabilizationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upwind" | "uw" => Ok(Self::Upwind),
            "sg" | "scharfetter-gummel" | "scharfetter_gummel" => Ok(Self::ScharfetterGummel),
            other => Err(Error::Config(format!("unknown stabilization '{other}'"))),
        }
    }
}

/// Artificial-diffusion factor `ϱ(Pe)`.
pub fn stabilization(kind: StabilizationKind, pe: f64) -> Result<f64> {
    if !(pe >= 0.0) {
        return Err(Error::Domain(format!("Peclet number must be nonnegative, got {pe}")));
    }
    Ok(rho(kind, pe))
}

#[inline]
fn rho(kind: StabilizationKind, pe: f64) -> f64 {
    match kind {
        StabilizationKind::Upwind => pe,
        StabilizationKind::ScharfetterGummel => pe - 1.0 + bern(2.0 * pe),
    }
}

/// `Pe_e = |β·n| d_e / (2α)`.
pub fn local_peclet(alpha: f64, beta_n: f64, d: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("diffusion coefficient must be positive, got {alpha}")));
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!("edge distance must be positive, got {d}")));
    }
    Ok(beta_n.abs() * d / (2.0 * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    Dirichlet(f64),
    /// `α∇u·n = 0`: only the advective flux `β·n u` crosses the edge.
    ZeroDiffusiveFlux,
    /// `(α∇u − βu)·n = 0`.
    ZeroTotalFlux,
}

/// Coefficients and boundary data of one advection–diffusion–reaction problem.
///
/// The advective field is stored as `β·n_e⁺` per edge.
#[derive(Debug, Clone)]
pub struct AdrProblem2D {
    pub alpha: CellField,
    pub beta_n: Vec<f64>,
    pub gamma: CellField,
    pub f: CellField,
    /// Indexed by edge; entries of interior edges are ignored.
    pub bc: Vec<BoundaryCondition>,
}

impl AdrProblem2D {
    /// Constant coefficients, `β = 0`, homogeneous Dirichlet data.
    pub fn constant(grid: &StructuredGrid2D, alpha: f64, gamma: f64, f: f64) -> Self {
        let n = grid.num_elements();
        Self {
            alpha: CellField::constant(n, alpha),
            beta_n: vec![0.0; grid.num_edges()],
            gamma: CellField::constant(n, gamma),
            f: CellField::constant(n, f),
            bc: vec![BoundaryCondition::Dirichlet(0.0); grid.num_edges()],
        }
    }

    pub fn with_uniform_beta(mut self, grid: &StructuredGrid2D, beta: [f64; 2]) -> Self {
        self.set_beta_fn(grid, |_| beta);
        self
    }

    /// Samples `β` at edge midpoints.
    pub fn set_beta_fn(&mut self, grid: &StructuredGrid2D, beta: impl Fn([f64; 2]) -> [f64; 2]) {
        self.beta_n = grid
            .edges()
            .iter()
            .map(|e| {
                let b = beta(e.midpoint);
                b[0] * e.normal[0] + b[1] * e.normal[1]
            })
            .collect();
    }

    /// Per-element `β`, averaged across interior edges.
    pub fn set_cell_beta(&mut self, grid: &StructuredGrid2D, beta: &[[f64; 2]]) {
        self.beta_n = grid
            .edges()
            .iter()
            .map(|e| {
                let bp = beta[e.plus];
                let b = match e.minus {
                    Some(m) => [0.5 * (bp[0] + beta[m][0]), 0.5 * (bp[1] + beta[m][1])],
                    None => bp,
                };
                b[0] * e.normal[0] + b[1] * e.normal[1]
            })
            .collect();
    }

    pub fn set_side_bc(&mut self, grid: &StructuredGrid2D, side: Side, bc: BoundaryCondition) {
        for (e, edge) in grid.boundary_edges() {
            if edge.side == Some(side) {
                self.bc[e] = bc;
            }
        }
    }

    /// Sets boundary data from a function of the edge midpoint and side.
    pub fn set_bc_fn(
        &mut self,
        grid: &StructuredGrid2D,
        bc: impl Fn([f64; 2], Side) -> BoundaryCondition,
    ) {
        for (e, edge) in grid.boundary_edges() {
            self.bc[e] = bc(edge.midpoint, edge.side.expect("boundary edge"));
        }
    }

    pub fn validate(&self, grid: &StructuredGrid2D) -> Result<()> {
        let n = grid.num_elements();
        let m = grid.num_edges();
        if self.alpha.len() != n || self.gamma.len() != n || self.f.len() != n {
            return Err(Error::Config("coefficient fields do not match the grid".into()));
        }
        if self.beta_n.len() != m || self.bc.len() != m {
            return Err(Error::Config("edge data do not match the grid".into()));
        }
        if let Some(k) = (0..n).find(|&k| !(self.gamma[k] >= 0.0) || !self.gamma[k].is_finite()) {
            return Err(Error::Domain(format!("reaction coefficient at element {k} is {}", self.gamma[k])));
        }
        if !self.f.all_finite() || self.beta_n.iter().any(|b| !b.is_finite()) {
            return Err(Error::Domain("non-finite source or advection data".into()));
        }
        Ok(())
    }
}

/// Face diffusion: distance-weighted harmonic mean on interior edges.
fn face_alpha(problem: &AdrProblem2D, grid: &StructuredGrid2D, e: usize) -> f64 {
    let edge = grid.edge(e);
    let ap = problem.alpha[edge.plus];
    match edge.minus {
        Some(m) => {
            let am = problem.alpha[m];
            if ap <= 0.0 || am <= 0.0 {
                0.0
            } else {
                edge.d / (edge.d_plus / ap + edge.d_minus / am)
            }
        }
        None => ap,
    }
}

/// `(D, c)` with `D = α(1+ϱ)|e|/d` and `c = (β·n⁺)|e|/2`, so that
/// `j_e = (D + c)u⁺ + (c − D)u⁻`.
fn edge_coefficients(
    problem: &AdrProblem2D,
    grid: &StructuredGrid2D,
    kind: StabilizationKind,
    e: usize,
) -> Result<(f64, f64)> {
    let edge = grid.edge(e);
    let bn = problem.beta_n[e];
    let a = face_alpha(problem, grid, e);
    if !(a > 0.0) || !a.is_finite() {
        return Err(if bn != 0.0 {
            Error::Unsupported(format!(
                "edge {e} carries advection but has diffusion coefficient {a}"
            ))
        } else {
            Error::Domain(format!("diffusion coefficient on edge {e} is {a}"))
        });
    }
    let pe = bn.abs() * edge.d / (2.0 * a);
    let d_coef = a * (1.0 + rho(kind, pe)) * edge.length / edge.d;
    Ok((d_coef, 0.5 * bn * edge.length))
}

/// Assembles the cell system `K u = g`.
pub fn assemble(
    problem: &AdrProblem2D,
    grid: &StructuredGrid2D,
    kind: StabilizationKind,
) -> Result<(SparseMatrix, CellField)> {
    problem.validate(grid)?;
    let n = grid.num_elements();
    let mut k = TripletBuilder::new(n);
    let mut g = vec![0.0; n];
    for (e, edge) in grid.edges().iter().enumerate() {
        let p = edge.plus;
        match edge.minus {
            Some(m) => {
                let (d, c) = edge_coefficients(problem, grid, kind, e)?;
                k.add(p, p, d + c);
                k.add(p, m, c - d);
                k.add(m, m, d - c);
                k.add(m, p, -d - c);
            }
            None => match problem.bc[e] {
                BoundaryCondition::Dirichlet(v) => {
                    let (d, c) = edge_coefficients(problem, grid, kind, e)?;
                    k.add(p, p, d + c);
                    g[p] += (d - c) * v;
                }
                BoundaryCondition::ZeroDiffusiveFlux => {
                    k.add(p, p, problem.beta_n[e] * edge.length);
                }
                BoundaryCondition::ZeroTotalFlux => {}
            },
        }
    }
    for c in 0..n {
        let area = grid.area(c);
        k.add(c, c, problem.gamma[c] * area);
        g[c] += problem.f[c] * area;
    }
    Ok((k.build(), CellField::new(g)))
}

/// Direct solve with residual check `‖Ku − g‖∞ ≤ tol·max(‖g‖∞, ‖K‖‖u‖)`.
///
/// A system whose columns all sum to zero (pure flux boundaries without
/// reaction) is rejected as rank deficient.
pub fn solve(k: &SparseMatrix, g: &CellField, tol: f64) -> Result<CellField> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("solver tolerance must be positive, got {tol}")));
    }
    let scale = k.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if k.column_sums().iter().all(|s| s.abs() <= 1e-12 * scale) {
        return Err(Error::RankDeficient(
            "every column sums to zero; the problem has no Dirichlet data or reaction".into(),
        ));
    }
    sparse::solve(k, g.values(), tol).map(CellField::new)
}

/// Convenience wrapper: assemble then solve.
pub fn solve_problem(
    problem: &AdrProblem2D,
    grid: &StructuredGrid2D,
    kind: StabilizationKind,
    tol: f64,
) -> Result<CellField> {
    let (k, g) = assemble(problem, grid, kind)?;
    solve(&k, &g, tol)
}

/// Edge fluxes along `n_e⁺` recovered from a cell solution.
pub fn recover_fluxes(
    u: &CellField,
    problem: &AdrProblem2D,
    grid: &StructuredGrid2D,
    kind: StabilizationKind,
) -> Result<EdgeFluxField> {
    let mut j = Vec::with_capacity(grid.num_edges());
    for (e, edge) in grid.edges().iter().enumerate() {
        let up = u[edge.plus];
        let flux = match edge.minus {
            Some(m) => {
                let (d, c) = edge_coefficients(problem, grid, kind, e)?;
                (d + c) * up + (c - d) * u[m]
            }
            None => match problem.bc[e] {
                BoundaryCondition::Dirichlet(v) => {
                    let (d, c) = edge_coefficients(problem, grid, kind, e)?;
                    (d + c) * up + (c - d) * v
                }
                BoundaryCondition::ZeroDiffusiveFlux => problem.beta_n[e] * edge.length * up,
                BoundaryCondition::ZeroTotalFlux => 0.0,
            },
        };
        j.push(flux);
    }
    Ok(EdgeFluxField::new(j))
}

/// Per-element residual `Σ_l ±j_l + γ|K|u_K − f|K|` of the local balance.
pub fn balance_residuals(
    u: &CellField,
    fluxes: &EdgeFluxField,
    problem: &AdrProblem2D,
    grid: &StructuredGrid2D,
) -> Vec<f64> {
    (0..grid.num_elements())
        .map(|k| {
            let out: f64 = grid
                .element_edges(k)
                .iter()
                .map(|le| le.sign * fluxes[le.edge])
                .sum();
            let area = grid.area(k);
            out + problem.gamma[k] * area * u[k] - problem.f[k] * area
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0.0).unwrap(), 1.0);
        // 2/(e² − 1) to 16 digits
        assert_relative_eq!(bernoulli(2.0).unwrap(), 0.313_035_285_499_331_3, max_relative = 1e-14);
        for x in [0.5, 2.0, 10.0] {
            let lhs = bernoulli(-x).unwrap() - bernoulli(x).unwrap();
            assert_relative_eq!(lhs, x, max_relative = 1e-13);
        }
        assert!(matches!(bernoulli(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn bernoulli_extremes() {
        let b = bernoulli(-800.0).unwrap();
        assert_relative_eq!(b, 800.0, max_relative = 1e-15);
        assert!(bernoulli(800.0).unwrap() >= 0.0);
        assert!(bernoulli(800.0).unwrap() < 1e-300);
        // continuity across the series switch
        let below = bernoulli(0.99e-4).unwrap();
        let above = bernoulli(1.01e-4).unwrap();
        assert!((below - above).abs() < 1e-5);
        assert_relative_eq!(bernoulli(1e-3).unwrap(), 1e-3 / (1e-3f64).exp_m1(), max_relative = 1e-14);
    }

    #[test]
    fn stabilization_values() {
        assert_eq!(stabilization(StabilizationKind::ScharfetterGummel, 0.0).unwrap(), 0.0);
        assert_eq!(stabilization(StabilizationKind::Upwind, 7.5).unwrap(), 7.5);
        // 2 + 6/(e⁶ − 1)
        let oracle = 2.0 + 6.0 / (6.0f64.exp() - 1.0);
        let sg = stabilization(StabilizationKind::ScharfetterGummel, 3.0).unwrap();
        assert_relative_eq!(sg, oracle, max_relative = 1e-14);
        assert_relative_eq!(sg, 2.014_909_47, max_relative = 1e-9);
        assert!(stabilization(StabilizationKind::Upwind, -1.0).is_err());
    }

    #[test]
    fn peclet_values() {
        assert_eq!(local_peclet(1.0, 0.0, 0.1).unwrap(), 0.0);
        assert_eq!(local_peclet(1.0, 1.0, 1.0 / 64.0).unwrap(), 0.0078125);
        assert_relative_eq!(local_peclet(1e-6, 1.0, 2f64.powi(-6)).unwrap(), 7812.5, max_relative = 1e-12);
        assert!(local_peclet(0.0, 1.0, 0.1).is_err());
        assert_eq!(local_peclet(1.0, -2.0, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn two_by_two_laplacian() {
        let g = StructuredGrid2D::uniform(2, 2, 1.0, 1.0).unwrap();
        let p = AdrProblem2D::constant(&g, 1.0, 0.0, 0.0);
        for kind in [StabilizationKind::Upwind, StabilizationKind::ScharfetterGummel] {
            let (k, _) = assemble(&p, &g, kind).unwrap();
            for i in 0..4 {
                assert_relative_eq!(k.get(i, i), 6.0, max_relative = 1e-14);
            }
            for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
                assert_relative_eq!(k.get(i, j), -1.0, max_relative = 1e-14);
                assert_relative_eq!(k.get(j, i), -1.0, max_relative = 1e-14);
            }
            assert_eq!(k.get(0, 3), 0.0);
            assert!(k.is_symmetric(1e-14));
            assert!(k.max_row_nnz() <= 5);
        }
    }

    #[test]
    fn two_by_two_uniform_load_is_symmetric() {
        let g = StructuredGrid2D::uniform(2, 2, 1.0, 1.0).unwrap();
        let p = AdrProblem2D::constant(&g, 1.0, 0.0, 1.0);
        let u = solve_problem(&p, &g, StabilizationKind::ScharfetterGummel, 1e-12).unwrap();
        // 6u − 2u = 0.25
        for k in 0..4 {
            assert_relative_eq!(u[k], 0.0625, max_relative = 1e-13);
        }
    }

    #[test]
    fn one_cell_system() {
        let g = StructuredGrid2D::uniform(1, 1, 1.0, 1.0).unwrap();
        let mut p = AdrProblem2D::constant(&g, 1.0, 2.0, 3.0);
        p.bc.iter_mut().for_each(|b| *b = BoundaryCondition::ZeroTotalFlux);
        let (k, rhs) = assemble(&p, &g, StabilizationKind::Upwind).unwrap();
        assert_eq!(k.get(0, 0), 2.0);
        let u = solve(&k, &rhs, 1e-14).unwrap();
        assert_relative_eq!(u[0], 1.5);
    }

    #[test]
    fn constant_state_reproduction() {
        let g = StructuredGrid2D::uniform(5, 3, 2.0, 1.0).unwrap();
        let c = 4.25;
        let gamma = 0.7;
        let mut p = AdrProblem2D::constant(&g, 0.3, gamma, gamma * c).with_uniform_beta(&g, [1.5, -0.4]);
        p.bc.iter_mut().for_each(|b| *b = BoundaryCondition::Dirichlet(c));
        for kind in [StabilizationKind::Upwind, StabilizationKind::ScharfetterGummel] {
            let u = solve_problem(&p, &g, kind, 1e-13).unwrap();
            for k in 0..g.num_elements() {
                assert_relative_eq!(u[k], c, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zero_beta_gives_symmetric_matrix() {
        let g = StructuredGrid2D::from_lines(vec![0.0, 0.1, 0.4, 1.0], vec![0.0, 0.3, 0.5]).unwrap();
        let mut p = AdrProblem2D::constant(&g, 1.0, 0.5, 0.0);
        for (k, v) in p.alpha.values_mut().iter_mut().enumerate() {
            *v = 1.0 + k as f64;
        }
        let (k, _) = assemble(&p, &g, StabilizationKind::ScharfetterGummel).unwrap();
        assert!(k.is_symmetric(1e-14));
    }

    #[test]
    fn all_flux_boundaries_are_rank_deficient() {
        let g = StructuredGrid2D::uniform(3, 3, 1.0, 1.0).unwrap();
        let mut p = AdrProblem2D::constant(&g, 1.0, 0.0, 0.0);
        p.bc.iter_mut().for_each(|b| *b = BoundaryCondition::ZeroTotalFlux);
        let (k, rhs) = assemble(&p, &g, StabilizationKind::ScharfetterGummel).unwrap();
        assert!(matches!(solve(&k, &rhs, 1e-12), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn fluxes_of_constant_state_vanish() {
        let g = StructuredGrid2D::uniform(3, 2, 1.0, 1.0).unwrap();
        let mut p = AdrProblem2D::constant(&g, 2.0, 0.0, 0.0);
        p.bc.iter_mut().for_each(|b| *b = BoundaryCondition::Dirichlet(3.0));
        let u = CellField::constant(g.num_elements(), 3.0);
        let j = recover_fluxes(&u, &p, &g, StabilizationKind::ScharfetterGummel).unwrap();
        assert!(j.values().iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn strip_flux() {
        let (w, h) = (2.0, 0.5);
        let g = StructuredGrid2D::uniform(4, 8, w, h).unwrap();
        let mut p = AdrProblem2D::constant(&g, 1.0, 0.0, 0.0);
        p.set_side_bc(&g, Side::Left, BoundaryCondition::ZeroTotalFlux);
        p.set_side_bc(&g, Side::Right, BoundaryCondition::ZeroTotalFlux);
        p.set_side_bc(&g, Side::Bottom, BoundaryCondition::Dirichlet(1.0));
        p.set_side_bc(&g, Side::Top, BoundaryCondition::Dirichlet(0.0));
        let kind = StabilizationKind::Upwind;
        let u = solve_problem(&p, &g, kind, 1e-13).unwrap();
        let j = recover_fluxes(&u, &p, &g, kind).unwrap();
        // total upward flux through every horizontal grid line is W/H
        for row in 0..=g.ny() {
            let total: f64 = g
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.normal[1] != 0.0 && (e.midpoint[1] - row as f64 * h / 8.0).abs() < 1e-12)
                .map(|(i, e)| j[i] * e.normal[1])
                .sum();
            assert_relative_eq!(total, w / h, max_relative = 1e-11);
        }
        let res = balance_residuals(&u, &j, &p, &g);
        assert!(res.iter().all(|r| r.abs() < 1e-11));
    }

    #[test]
    fn affine_solution_reproduced() {
        let g = StructuredGrid2D::uniform(6, 5, 1.0, 1.0).unwrap();
        let exact = |x: [f64; 2]| 0.3 + 2.0 * x[0] - 1.5 * x[1];
        let mut p = AdrProblem2D::constant(&g, 1.0, 0.0, 0.0);
        p.set_bc_fn(&g, |m, _| BoundaryCondition::Dirichlet(exact(m)));
        for kind in [StabilizationKind::Upwind, StabilizationKind::ScharfetterGummel] {
            let u = solve_problem(&p, &g, kind, 1e-13).unwrap();
            for k in 0..g.num_elements() {
                assert!((u[k] - exact(g.center(k))).abs() < 1e-12);
            }
        }
    }

    fn random_problem(
        nx: usize,
        ny: usize,
        seed_vals: &[f64],
    ) -> (StructuredGrid2D, AdrProblem2D) {
        let g = StructuredGrid2D::uniform(nx, ny, 1.0, 1.0).unwrap();
        let n = g.num_elements();
        let mut p = AdrProblem2D::constant(&g, 1.0, 0.0, 0.0);
        let pick = |i: usize| seed_vals[i % seed_vals.len()];
        for k in 0..n {
            p.alpha[k] = 10f64.powf(-6.0 + 6.0 * pick(3 * k));
            p.gamma[k] = pick(3 * k + 1);
        }
        let betas: Vec<[f64; 2]> = (0..n)
            .map(|k| [200.0 * (pick(3 * k + 2) - 0.5), 200.0 * (pick(5 * k + 1) - 0.5)])
            .collect();
        p.set_cell_beta(&g, &betas);
        (g, p)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn assembled_matrix_is_m_matrix(
            nx in 1usize..6, ny in 1usize..6,
            vals in prop::collection::vec(0.0f64..1.0, 30),
            sg in any::<bool>(),
        ) {
            let (g, p) = random_problem(nx, ny, &vals);
            let kind = if sg { StabilizationKind::ScharfetterGummel } else { StabilizationKind::Upwind };
            let (k, _) = assemble(&p, &g, kind).unwrap();
            let r = k.mmatrix_report(1e-12);
            prop_assert!(r.passes(), "{r:?}");
            prop_assert!(k.max_row_nnz() <= 5);
        }

        #[test]
        fn stabilization_lower_bound(pe in 0.0f64..1e4) {
            for kind in [StabilizationKind::Upwind, StabilizationKind::ScharfetterGummel] {
                prop_assert!(rho(kind, pe) >= pe - 1.0 - 1e-12 * pe.max(1.0));
            }
        }

        #[test]
        fn local_conservation(
            nx in 1usize..6, ny in 1usize..6,
            vals in prop::collection::vec(0.0f64..1.0, 30),
        ) {
            let (g, mut p) = random_problem(nx, ny, &vals);
            for k in 0..g.num_elements() {
                p.f[k] = vals[k % vals.len()] - 0.3;
            }
            let kind = StabilizationKind::ScharfetterGummel;
            let u = solve_problem(&p, &g, kind, 1e-12).unwrap();
            let j = recover_fluxes(&u, &p, &g, kind).unwrap();
            let scale = p.f.values().iter().fold(1e-300f64, |m, v| m.max(v.abs())) ;
            for r in balance_residuals(&u, &j, &p, &g) {
                prop_assert!(r.abs() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}
