//! One-dimensional pipe networks: geometry, the upwind-stabilized primal-mixed
//! discretization, and the mass/momentum and energy solves built on it.

mod exact;
mod flow;
mod pm;

pub use exact::{exact_network_solution, ExactSegment, NetworkExact};
pub use flow::{
    mass_balance, solve_energy, solve_mass_momentum, update_conductance, EnergyOptions,
    FluidState, MassBalance, MomentumOptions, GRAVITY,
};
pub use pm::{
    assemble_pm, node_residuals, recover_element_fluxes, solve_pm, NetworkProblem1D,
    NodeCondition, PmSystem,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexRole {
    Inlet,
    Outlet,
    #[default]
    Junction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub role: VertexRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub from: usize,
    pub to: usize,
    /// Hydraulic diameter (m).
    pub hydraulic_diameter: f64,
    /// Flow cross-section (m²); defaults to `πD²/4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_area: Option<f64>,
    /// Width of the wall contact strip (m) entering the coolant/wall
    /// conductance `h_wc·w·L`; defaults to the hydraulic diameter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange_width: Option<f64>,
    /// Minimum number of elements.
    #[serde(default = "default_elements")]
    pub elements: usize,
}

fn default_elements() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct NetworkSpec {
    pub vertices: Vec<VertexSpec>,
    pub segments: Vec<SegmentSpec>,
}

impl NetworkSpec {
    pub fn vertex(&mut self, x: f64, y: f64, role: VertexRole) -> usize {
        self.vertices.push(VertexSpec { x, y, role });
        self.vertices.len() - 1
    }

    pub fn segment(&mut self, from: usize, to: usize, hydraulic_diameter: f64, elements: usize) -> usize {
        self.segments.push(SegmentSpec {
            from,
            to,
            hydraulic_diameter,
            flow_area: None,
            exchange_width: None,
            elements,
        });
        self.segments.len() - 1
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub position: [f64; 2],
    pub role: VertexRole,
    /// `I⁻`: segments whose first endpoint is this vertex.
    pub outgoing: Vec<usize>,
    /// `I⁺`: segments whose second endpoint is this vertex.
    pub incoming: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Segment {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    pub direction: [f64; 2],
    pub hydraulic_diameter: f64,
    pub flow_area: f64,
    pub exchange_width: f64,
    pub elements: Range<usize>,
    /// Global node indices from `from` to `to`, endpoints included.
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub segment: usize,
    /// Upstream (`s` small) and downstream node in the segment orientation.
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub midpoint: [f64; 2],
}

/// Directed segments joined at vertices, each carrying a uniform 1D mesh.
///
/// Global nodes are the vertices (same index) followed by the interior nodes
/// of each segment in segment order.
#[derive(Debug, Clone)]
pub struct PipeNetwork {
    vertices: Vec<Vertex>,
    segments: Vec<Segment>,
    elements: Vec<Element>,
    node_positions: Vec<[f64; 2]>,
    inlet: usize,
    outlets: Vec<usize>,
}

/// Builds the network; every segment gets `max(elements, ⌈L/h_max⌉)` elements.
pub fn build_network(spec: &NetworkSpec, max_element_length: Option<f64>) -> Result<PipeNetwork> {
    let nv = spec.vertices.len();
    if spec.segments.is_empty() {
        return Err(Error::Config("network has no segments".into()));
    }
    if let Some(h) = max_element_length {
        if !(h > 0.0) {
            return Err(Error::Config(format!("maximum element length must be positive, got {h}")));
        }
    }
    let mut vertices: Vec<Vertex> = spec
        .vertices
        .iter()
        .map(|v| Vertex {
            position: [v.x, v.y],
            role: v.role,
            outgoing: Vec::new(),
            incoming: Vec::new(),
        })
        .collect();
    if vertices.iter().any(|v| !v.position.iter().all(|c| c.is_finite())) {
        return Err(Error::Config("vertex coordinates must be finite".into()));
    }

    let mut node_positions: Vec<[f64; 2]> = vertices.iter().map(|v| v.position).collect();
    let mut segments = Vec::with_capacity(spec.segments.len());
    let mut elements = Vec::new();
    for (j, s) in spec.segments.iter().enumerate() {
        if s.from >= nv || s.to >= nv {
            return Err(Error::Config(format!("segment {j} references an undeclared vertex")));
        }
        if s.from == s.to {
            return Err(Error::Config(format!("segment {j} is a loop on vertex {}", s.from)));
        }
        let p0 = vertices[s.from].position;
        let p1 = vertices[s.to].position;
        let length = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
        if !(length > 0.0) {
            return Err(Error::Config(format!("segment {j} has zero length")));
        }
        if !(s.hydraulic_diameter > 0.0) {
            return Err(Error::Config(format!("segment {j} needs a positive hydraulic diameter")));
        }
        let flow_area = s
            .flow_area
            .unwrap_or(std::f64::consts::PI * s.hydraulic_diameter.powi(2) / 4.0);
        let exchange_width = s.exchange_width.unwrap_or(s.hydraulic_diameter);
        if !(flow_area > 0.0) || !(exchange_width >= 0.0) {
            return Err(Error::Config(format!("segment {j} has invalid flow area or exchange width")));
        }
        let mut n = s.elements.max(1);
        if let Some(h) = max_element_length {
            n = n.max((length / h - 1e-9).ceil() as usize);
        }
        let direction = [(p1[0] - p0[0]) / length, (p1[1] - p0[1]) / length];
        let mut nodes = Vec::with_capacity(n + 1);
        nodes.push(s.from);
        for i in 1..n {
            let t = i as f64 / n as f64;
            nodes.push(node_positions.len());
            node_positions.push([p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])]);
        }
        nodes.push(s.to);
        let first = elements.len();
        let h = length / n as f64;
        for i in 0..n {
            let (a, b) = (nodes[i], nodes[i + 1]);
            let t = (i as f64 + 0.5) / n as f64;
            elements.push(Element {
                segment: j,
                a,
                b,
                length: h,
                midpoint: [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])],
            });
        }
        vertices[s.from].outgoing.push(j);
        vertices[s.to].incoming.push(j);
        segments.push(Segment {
            from: s.from,
            to: s.to,
            length,
            direction,
            hydraulic_diameter: s.hydraulic_diameter,
            flow_area,
            exchange_width,
            elements: first..elements.len(),
            nodes,
        });
    }

    let inlets: Vec<usize> = (0..nv).filter(|&i| vertices[i].role == VertexRole::Inlet).collect();
    let outlets: Vec<usize> = (0..nv).filter(|&i| vertices[i].role == VertexRole::Outlet).collect();
    if inlets.len() != 1 {
        return Err(Error::Config(format!("network needs exactly one inlet, found {}", inlets.len())));
    }
    if outlets.is_empty() {
        return Err(Error::Config("network needs at least one outlet".into()));
    }
    let inlet = inlets[0];
    for (i, v) in vertices.iter().enumerate() {
        match v.role {
            VertexRole::Inlet if !(v.outgoing.len() == 1 && v.incoming.is_empty()) => {
                return Err(Error::Config(format!(
                    "inlet vertex {i} must start exactly one segment and end none"
                )));
            }
            VertexRole::Outlet if !(v.incoming.len() == 1 && v.outgoing.is_empty()) => {
                return Err(Error::Config(format!(
                    "outlet vertex {i} must end exactly one segment and start none"
                )));
            }
            VertexRole::Junction if v.incoming.is_empty() && v.outgoing.is_empty() => {
                return Err(Error::Config(format!("vertex {i} is not attached to any segment")));
            }
            VertexRole::Junction if v.incoming.len() + v.outgoing.len() < 2 => {
                return Err(Error::Config(format!("junction {i} is dangling")));
            }
            _ => {}
        }
    }
    // every vertex must be reachable from the inlet, ignoring orientation
    let mut seen = vec![false; nv];
    let mut queue = VecDeque::from([inlet]);
    seen[inlet] = true;
    while let Some(v) = queue.pop_front() {
        for &j in vertices[v].outgoing.iter().chain(&vertices[v].incoming) {
            let w = if segments[j].from == v { segments[j].to } else { segments[j].from };
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Config(format!("vertex {i} is disconnected from the inlet")));
    }

    Ok(PipeNetwork {
        vertices,
        segments,
        elements,
        node_positions,
        inlet,
        outlets,
    })
}

impl PipeNetwork {
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn num_nodes(&self) -> usize {
        self.node_positions.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_position(&self, n: usize) -> [f64; 2] {
        self.node_positions[n]
    }

    pub fn inlet(&self) -> usize {
        self.inlet
    }

    pub fn outlets(&self) -> &[usize] {
        &self.outlets
    }

    /// Segment attached to the inlet vertex.
    pub fn inlet_segment(&self) -> usize {
        self.vertices[self.inlet].outgoing[0]
    }

    /// Element of `segment` adjacent to vertex `v`.
    pub fn end_element(&self, segment: usize, v: usize) -> usize {
        let s = &self.segments[segment];
        if s.from == v {
            s.elements.start
        } else {
            s.elements.end - 1
        }
    }

    /// Flow area of the segment owning element `k`.
    pub fn element_area(&self, k: usize) -> f64 {
        self.segments[self.elements[k].segment].flow_area
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tree_spec() -> NetworkSpec {
        let mut s = NetworkSpec::default();
        let x0 = s.vertex(0.0, 0.0, VertexRole::Inlet);
        let x1 = s.vertex(1.0, 0.0, VertexRole::Junction);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let x2 = s.vertex(1.0 + c, c, VertexRole::Outlet);
        let x3 = s.vertex(1.0 + c, -c, VertexRole::Outlet);
        s.segment(x0, x1, 0.01, 4);
        s.segment(x1, x2, 0.01, 4);
        s.segment(x1, x3, 0.01, 4);
        s
    }

    #[test]
    fn single_segment() {
        let mut s = NetworkSpec::default();
        let a = s.vertex(0.0, 0.0, VertexRole::Inlet);
        let b = s.vertex(0.0, 1.0, VertexRole::Outlet);
        s.segment(a, b, 0.01, 4);
        let net = build_network(&s, None).unwrap();
        assert_eq!(net.num_nodes(), 5);
        assert_eq!(net.num_elements(), 4);
        assert_eq!(net.segments()[0].direction, [0.0, 1.0]);
        assert_eq!(net.segments()[0].nodes, vec![0, 2, 3, 4, 1]);
    }

    #[test]
    fn tree_incidence() {
        let net = build_network(&tree_spec(), None).unwrap();
        let x1 = &net.vertices()[1];
        assert_eq!(x1.outgoing, vec![1, 2]);
        assert_eq!(x1.incoming, vec![0]);
        assert_eq!(net.vertices()[0].outgoing, vec![0]);
        for s in net.segments() {
            let d = s.direction;
            assert!((d[0].hypot(d[1]) - 1.0).abs() < 1e-14);
            assert!((s.length - 1.0).abs() < 1e-14);
        }
        assert_eq!(net.outlets(), &[2, 3]);
    }

    #[test]
    fn refinement_by_length() {
        let net = build_network(&tree_spec(), Some(0.1)).unwrap();
        assert!(net.segments().iter().all(|s| s.elements.len() == 10));
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = tree_spec();
        s.vertices[3].x = 1.0;
        s.vertices[3].y = 0.0;
        assert!(matches!(build_network(&s, None), Err(Error::Config(_))));

        let mut s = tree_spec();
        s.vertex(5.0, 5.0, VertexRole::Junction);
        assert!(matches!(build_network(&s, None), Err(Error::Config(_))));

        let mut s = tree_spec();
        let v = s.vertex(5.0, 5.0, VertexRole::Junction);
        s.segment(1, v, 0.01, 1);
        assert!(matches!(build_network(&s, None), Err(Error::Config(_))));

        let mut s = tree_spec();
        s.segments.push(SegmentSpec {
            from: 7,
            to: 1,
            hydraulic_diameter: 0.01,
            flow_area: None,
            exchange_width: None,
            elements: 1,
        });
        assert!(matches!(build_network(&s, None), Err(Error::Config(_))));

        // two disjoint pieces
        let mut s = tree_spec();
        let p = s.vertex(3.0, 3.0, VertexRole::Junction);
        let q = s.vertex(4.0, 3.0, VertexRole::Junction);
        let r = s.vertex(4.0, 4.0, VertexRole::Junction);
        s.segment(p, q, 0.01, 1);
        s.segment(q, r, 0.01, 1);
        s.segment(r, p, 0.01, 1);
        assert!(matches!(build_network(&s, None), Err(Error::Config(_))));
    }
}
