//! Primal-mixed discretization of `−ε∂u + βu = J + g`, `∂J = f` on a network.
//!
//! With piecewise-linear `u` and piecewise-constant `J` the flux eliminates
//! element by element,
//!
//! ```text
//! J_k = −ε_k(u_b − u_a)/h_k + β_k(u_a + u_b)/2 − g_k,
//! ```
//!
//! and testing with hat functions leaves one Kirchhoff row per free node.
//! With upwinding `ε_k` is replaced by `ε_k + |β_k|h_k/2`.

use super::PipeNetwork;
use crate::error::{Error, Result};
use crate::sparse::{self, SparseMatrix, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NodeCondition {
    #[default]
    Free,
    Dirichlet(f64),
    /// Flux entering the network at the node.
    Inflow(f64),
    /// Flux `c·u` leaving the network at the node.
    Outflow(f64),
}

/// Element-wise data of one network problem plus per-node boundary data.
#[derive(Debug, Clone)]
pub struct NetworkProblem1D {
    pub eps: Vec<f64>,
    pub beta: Vec<f64>,
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub nodes: Vec<NodeCondition>,
}

impl NetworkProblem1D {
    pub fn new(net: &PipeNetwork) -> Self {
        let m = net.num_elements();
        Self {
            eps: vec![0.0; m],
            beta: vec![0.0; m],
            g: vec![0.0; m],
            f: vec![0.0; m],
            nodes: vec![NodeCondition::Free; net.num_nodes()],
        }
    }

    /// Sets `ε` and `β` per segment.
    pub fn with_segment_data(mut self, net: &PipeNetwork, eps: &[f64], beta: &[f64]) -> Self {
        for (k, e) in net.elements().iter().enumerate() {
            self.eps[k] = eps[e.segment];
            self.beta[k] = beta[e.segment];
        }
        self
    }

    /// Largest violation of `∂_s(β/ε) ≥ 0` between consecutive elements of a
    /// segment; zero when the condition holds. Elements with `ε = 0` are
    /// skipped.
    pub fn coercivity_defect(&self, net: &PipeNetwork) -> f64 {
        let mut worst = 0.0f64;
        for s in net.segments() {
            let r = s.elements.clone();
            for k in r.start..r.end.saturating_sub(1) {
                if self.eps[k] > 0.0 && self.eps[k + 1] > 0.0 {
                    let d = self.beta[k + 1] / self.eps[k + 1] - self.beta[k] / self.eps[k];
                    worst = worst.max(-d);
                }
            }
        }
        worst
    }

    fn check(&self, net: &PipeNetwork) -> Result<()> {
        let m = net.num_elements();
        if self.eps.len() != m || self.beta.len() != m || self.g.len() != m || self.f.len() != m {
            return Err(Error::Config("element data do not match the network".into()));
        }
        if self.nodes.len() != net.num_nodes() {
            return Err(Error::Config("node conditions do not match the network".into()));
        }
        Ok(())
    }
}

/// `(c_a, c_b)` with `J_k = c_a u_a + c_b u_b − g_k`.
fn element_coefficients(eps: f64, beta: f64, h: f64, upwind: bool, k: usize) -> Result<(f64, f64)> {
    if !(eps >= 0.0) || !eps.is_finite() || !beta.is_finite() {
        return Err(Error::DegenerateElement {
            element: k,
            reason: format!("invalid coefficients eps={eps}, beta={beta}"),
        });
    }
    if eps == 0.0 && beta == 0.0 {
        return Err(Error::DegenerateElement {
            element: k,
            reason: "both diffusion and advection vanish".into(),
        });
    }
    if upwind {
        Ok((eps / h + beta.max(0.0), -eps / h + beta.min(0.0)))
    } else {
        if eps == 0.0 {
            return Err(Error::Unsupported(format!(
                "element {k} is purely hyperbolic and stabilization is disabled"
            )));
        }
        Ok((eps / h + 0.5 * beta, -eps / h + 0.5 * beta))
    }
}

/// Reduced nodal system over the non-Dirichlet nodes.
#[derive(Debug, Clone)]
pub struct PmSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Row/column of each global node, `None` for Dirichlet nodes.
    pub dof_of_node: Vec<Option<usize>>,
    pub node_of_dof: Vec<usize>,
}

pub fn assemble_pm(problem: &NetworkProblem1D, net: &PipeNetwork, upwind: bool) -> Result<PmSystem> {
    problem.check(net)?;
    let nn = net.num_nodes();
    let mut dof_of_node = vec![None; nn];
    let mut node_of_dof = Vec::with_capacity(nn);
    for (i, c) in problem.nodes.iter().enumerate() {
        if !matches!(c, NodeCondition::Dirichlet(_)) {
            dof_of_node[i] = Some(node_of_dof.len());
            node_of_dof.push(i);
        }
    }
    let n = node_of_dof.len();
    let mut m = TripletBuilder::new(n);
    let mut rhs = vec![0.0; n];

    // row r gets `sign·(c_a u_a + c_b u_b)` with Dirichlet columns lifted
    let put = |m: &mut TripletBuilder, rhs: &mut [f64], r: usize, node: usize, v: f64| match problem.nodes[node] {
        NodeCondition::Dirichlet(d) => rhs[r] -= v * d,
        _ => m.add(r, dof_of_node[node].unwrap(), v),
    };
    for (k, e) in net.elements().iter().enumerate() {
        let (ca, cb) = element_coefficients(problem.eps[k], problem.beta[k], e.length, upwind, k)?;
        let half = 0.5 * problem.f[k] * e.length;
        if let Some(r) = dof_of_node[e.a] {
            put(&mut m, &mut rhs, r, e.a, ca);
            put(&mut m, &mut rhs, r, e.b, cb);
            rhs[r] += problem.g[k] + half;
        }
        if let Some(r) = dof_of_node[e.b] {
            put(&mut m, &mut rhs, r, e.a, -ca);
            put(&mut m, &mut rhs, r, e.b, -cb);
            rhs[r] += -problem.g[k] + half;
        }
    }
    for (i, c) in problem.nodes.iter().enumerate() {
        match *c {
            NodeCondition::Inflow(q) => rhs[dof_of_node[i].unwrap()] += q,
            NodeCondition::Outflow(c) => {
                let r = dof_of_node[i].unwrap();
                m.add(r, r, c);
            }
            _ => {}
        }
    }
    Ok(PmSystem {
        matrix: m.build(),
        rhs,
        dof_of_node,
        node_of_dof,
    })
}

/// Solves the nodal system and returns `u` at every global node.
pub fn solve_pm(problem: &NetworkProblem1D, net: &PipeNetwork, upwind: bool, tol: f64) -> Result<Vec<f64>> {
    let sys = assemble_pm(problem, net, upwind)?;
    let x = sparse::solve(&sys.matrix, &sys.rhs, tol)?;
    let mut u = vec![0.0; net.num_nodes()];
    for (i, c) in problem.nodes.iter().enumerate() {
        u[i] = match (c, sys.dof_of_node[i]) {
            (NodeCondition::Dirichlet(d), _) => *d,
            (_, Some(r)) => x[r],
            (_, None) => unreachable!(),
        };
    }
    Ok(u)
}

/// Element fluxes `J_k` in segment orientation.
pub fn recover_element_fluxes(
    u: &[f64],
    problem: &NetworkProblem1D,
    net: &PipeNetwork,
    upwind: bool,
) -> Result<Vec<f64>> {
    net.elements()
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let (ca, cb) = element_coefficients(problem.eps[k], problem.beta[k], e.length, upwind, k)?;
            Ok(ca * u[e.a] + cb * u[e.b] - problem.g[k])
        })
        .collect()
}

/// Nodal balance residual `Σ_out J − Σ_in J + (outflow) − (inflow) − P_i` for
/// every non-Dirichlet node (zero for Dirichlet nodes).
pub fn node_residuals(u: &[f64], fluxes: &[f64], problem: &NetworkProblem1D, net: &PipeNetwork) -> Vec<f64> {
    let mut r = vec![0.0; net.num_nodes()];
    for (k, e) in net.elements().iter().enumerate() {
        let half = 0.5 * problem.f[k] * e.length;
        r[e.a] += fluxes[k] - half;
        r[e.b] += -fluxes[k] - half;
    }
    for (i, c) in problem.nodes.iter().enumerate() {
        match *c {
            NodeCondition::Dirichlet(_) => r[i] = 0.0,
            NodeCondition::Inflow(q) => r[i] -= q,
            NodeCondition::Outflow(c) => r[i] += c * u[i],
            NodeCondition::Free => {}
        }
    }
    r
}
