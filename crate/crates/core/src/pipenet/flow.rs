//! Mass/momentum and energy solves for the coolant.
//!
//! Both are posed in rate form on the network so that junction rows balance
//! mass flow `ṁ = A·G` and enthalpy flow `A·𝒲` even where the flow area
//! changes. Momentum maps onto the nodal scheme with `u = φ`, `J = ṁ`,
//! `ε = A/R`, `β = 0`, `g = −(A/R)ρ𝐠·d`; energy with `u = ℋ`, `J = A𝒲`,
//! `ε = 0`, `β = ṁ` and the wall exchange as source.

use super::pm::{recover_element_fluxes, solve_pm, NetworkProblem1D, NodeCondition};
use super::PipeNetwork;
use crate::error::{Error, Result};
use crate::twophase::{FrictionModel, HeatTransferModel, PhaseFlag, SaturationModel};

/// Gravitational acceleration in the panel plane (`y` points up).
pub const GRAVITY: [f64; 2] = [0.0, -9.81];

/// Coolant state: `φ` and `ℋ` per node, everything else per element.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub phi: Vec<f64>,
    pub node_enthalpy: Vec<f64>,
    pub mass_flux: Vec<f64>,
    pub mass_flow: Vec<f64>,
    pub enthalpy_flux: Vec<f64>,
    pub enthalpy: Vec<f64>,
    pub density: Vec<f64>,
    pub viscosity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub temperature: Vec<f64>,
    pub quality: Vec<f64>,
    pub flags: Vec<PhaseFlag>,
    /// Coolant-side heat-transfer coefficient (W·m⁻²·K⁻¹).
    pub heat_coefficient: Vec<f64>,
    /// Coolant/wall conductance `h_wc·w·L` (W/K).
    pub conductance: Vec<f64>,
}

impl FluidState {
    /// Saturated vapor at `temp` everywhere, flowing at `g` in every element.
    pub fn saturated_vapor(net: &PipeNetwork, temp: f64, p: f64, g: f64, sat: &SaturationModel) -> Result<Self> {
        let s = sat.props(temp)?;
        let m = net.num_elements();
        let n = net.num_nodes();
        Ok(Self {
            phi: vec![p; n],
            node_enthalpy: vec![s.h_v; n],
            mass_flux: vec![g; m],
            mass_flow: (0..m).map(|k| g * net.element_area(k)).collect(),
            enthalpy_flux: vec![g * s.h_v; m],
            enthalpy: vec![s.h_v; m],
            density: vec![s.rho_v; m],
            viscosity: vec![s.mu_v; m],
            pressure: vec![p; m],
            temperature: vec![temp; m],
            quality: vec![1.0; m],
            flags: vec![PhaseFlag::Saturated; m],
            heat_coefficient: vec![0.0; m],
            conductance: vec![0.0; m],
        })
    }

    pub fn clamped_count(&self) -> usize {
        self.flags.iter().filter(|f| **f != PhaseFlag::Saturated).count()
    }

    /// Heat released by the coolant to the wall, `Σ c_e (T_c − T_w)` (W).
    pub fn heat_release(&self, wall: &[f64]) -> f64 {
        self.conductance
            .iter()
            .zip(&self.temperature)
            .zip(wall)
            .map(|((c, tc), tw)| c * (tc - tw))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct MomentumOptions {
    pub p_inlet: f64,
    /// Mass flux in the inlet segment (kg·m⁻²·s⁻¹).
    pub g_tot: f64,
    pub friction: FrictionModel,
    pub gravity: [f64; 2],
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation on `G` between Picard sweeps.
    pub damping: f64,
    pub linear_tol: f64,
}

impl MomentumOptions {
    pub fn new(p_inlet: f64, g_tot: f64) -> Self {
        Self {
            p_inlet,
            g_tot,
            friction: FrictionModel::Blasius,
            gravity: GRAVITY,
            tol: 1e-10,
            max_iter: 200,
            damping: 0.57,
            linear_tol: 1e-12,
        }
    }
}

fn single_outlet(net: &PipeNetwork) -> Result<usize> {
    match net.outlets() {
        [o] => Ok(*o),
        _ => Err(Error::Unsupported(
            "flow solves need exactly one outlet vertex".into(),
        )),
    }
}

/// Picard iteration on `R(G)` for the mass/momentum pair. `φ` is fixed to
/// `p_inlet` at the inlet and the outlet withdraws `G_tot·A_inlet`. Updates
/// `φ`, `G`, `ṁ` and `p = φ̄ − G²/ρ`; returns the number of sweeps.
pub fn solve_mass_momentum(net: &PipeNetwork, state: &mut FluidState, opts: &MomentumOptions) -> Result<usize> {
    let outlet = single_outlet(net)?;
    if !(opts.g_tot > 0.0) {
        return Err(Error::Config(format!("total mass flux must be positive, got {}", opts.g_tot)));
    }
    let m_tot = opts.g_tot * net.segments()[net.inlet_segment()].flow_area;
    let g_floor = 1e-6 * opts.g_tot;
    let mut problem = NetworkProblem1D::new(net);
    // solve for the gauge φ − p_inlet, then shift by the datum
    problem.nodes[net.inlet()] = NodeCondition::Dirichlet(0.0);
    problem.nodes[outlet] = NodeCondition::Inflow(-m_tot);

    let mut history = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    for it in 1..=opts.max_iter {
        for (k, e) in net.elements().iter().enumerate() {
            let seg = &net.segments()[e.segment];
            let g = state.mass_flux[k].abs().max(g_floor);
            let r = opts
                .friction
                .resistance(g, state.density[k], state.viscosity[k], seg.hydraulic_diameter);
            let eps = seg.flow_area / r;
            let gd = opts.gravity[0] * seg.direction[0] + opts.gravity[1] * seg.direction[1];
            problem.eps[k] = eps;
            problem.g[k] = -eps * state.density[k] * gd;
        }
        let phi = solve_pm(&problem, net, true, opts.linear_tol)?;
        let mdot = recover_element_fluxes(&phi, &problem, net, true)?;
        let g_new: Vec<f64> = mdot.iter().enumerate().map(|(k, m)| m / net.element_area(k)).collect();
        let change = match &previous {
            Some(p) => p.iter().zip(&g_new).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / opts.g_tot,
            None => f64::INFINITY,
        };
        history.push(change);
        state.phi = phi.iter().map(|v| v + opts.p_inlet).collect();
        if change <= opts.tol {
            state.mass_flux = g_new;
            state.mass_flow = mdot;
            update_pressure(net, state);
            return Ok(it);
        }
        for (g, gn) in state.mass_flux.iter_mut().zip(&g_new) {
            *g += opts.damping * (gn - *g);
        }
        state.mass_flow = state
            .mass_flux
            .iter()
            .enumerate()
            .map(|(k, g)| g * net.element_area(k))
            .collect();
        previous = Some(g_new);
    }
    Err(Error::NotConverged {
        what: "mass/momentum Picard iteration".into(),
        iterations: opts.max_iter,
        last: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

fn update_pressure(net: &PipeNetwork, state: &mut FluidState) {
    for (k, e) in net.elements().iter().enumerate() {
        let phi_bar = 0.5 * (state.phi[e.a] + state.phi[e.b]);
        let g = state.mass_flux[k];
        state.pressure[k] = phi_bar - g * g / state.density[k];
    }
}

#[derive(Debug, Clone)]
pub struct EnergyOptions<'a> {
    pub h_inlet: f64,
    pub g_tot: f64,
    pub heat_transfer: &'a HeatTransferModel,
    pub sat: &'a SaturationModel,
    pub linear_tol: f64,
}

/// Recomputes the coolant-side coefficient and conductance of every element
/// from the current `G`, `x` and `T_c`.
pub fn update_conductance(
    net: &PipeNetwork,
    state: &mut FluidState,
    model: &HeatTransferModel,
    sat: &SaturationModel,
) -> Result<()> {
    for (k, e) in net.elements().iter().enumerate() {
        let seg = &net.segments()[e.segment];
        let props = sat.props(state.temperature[k])?;
        let h = model.coefficient(state.mass_flux[k].abs(), state.quality[k], seg.hydraulic_diameter, &props)?;
        state.heat_coefficient[k] = h;
        state.conductance[k] = h * seg.exchange_width * e.length;
    }
    Ok(())
}

/// Upwind enthalpy transport with wall exchange `∂(A𝒲) = h_wc·w·(T_w − T_c)`,
/// `T_c` taken from `state`. `wall` holds `T_w` per element. Updates `ℋ`
/// (nodal and per element), `𝒲` and the conductances; returns the number of
/// stagnant elements that were regularized.
pub fn solve_energy(net: &PipeNetwork, state: &mut FluidState, wall: &[f64], opts: &EnergyOptions) -> Result<usize> {
    if wall.len() != net.num_elements() {
        return Err(Error::Config("wall temperature does not match the network".into()));
    }
    update_conductance(net, state, opts.heat_transfer, opts.sat)?;
    let m_ref = opts.g_tot * net.segments()[net.inlet_segment()].flow_area;
    let mut problem = NetworkProblem1D::new(net);
    let mut stagnant = 0;
    for (k, e) in net.elements().iter().enumerate() {
        let seg = &net.segments()[e.segment];
        problem.beta[k] = state.mass_flow[k];
        problem.f[k] = state.heat_coefficient[k] * seg.exchange_width * (wall[k] - state.temperature[k]);
        if state.mass_flux[k].abs() < 1e-8 * opts.g_tot {
            problem.eps[k] = 1e-10 * m_ref * e.length;
            stagnant += 1;
        }
    }
    if stagnant > 0 {
        log::warn!("energy solve: {stagnant} stagnant elements regularized");
    }
    problem.nodes[net.inlet()] = NodeCondition::Dirichlet(opts.h_inlet);
    for &o in net.outlets() {
        let seg = net.vertices()[o].incoming[0];
        let k = net.end_element(seg, o);
        problem.nodes[o] = NodeCondition::Outflow(state.mass_flow[k].max(0.0));
    }
    let h = solve_pm(&problem, net, true, opts.linear_tol)?;
    let j = recover_element_fluxes(&h, &problem, net, true)?;
    for (k, e) in net.elements().iter().enumerate() {
        let area = net.element_area(k);
        state.enthalpy_flux[k] = j[k] / area;
        let m = state.mass_flow[k];
        state.enthalpy[k] = if m.abs() > 1e-8 * m_ref {
            j[k] / m
        } else {
            0.5 * (h[e.a] + h[e.b])
        };
    }
    state.node_enthalpy = h;
    Ok(stagnant)
}

/// Conservation diagnostics of the current mass flow field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBalance {
    /// Largest spread of `ṁ` within a segment, relative to the inlet flow.
    pub segment: f64,
    /// Largest junction imbalance, relative to the inlet flow.
    pub junction: f64,
    /// `|ṁ_in − ṁ_out| / ṁ_in`.
    pub global: f64,
}

pub fn mass_balance(net: &PipeNetwork, state: &FluidState) -> MassBalance {
    let m = &state.mass_flow;
    let m_in = m[net.end_element(net.inlet_segment(), net.inlet())];
    let scale = m_in.abs().max(f64::MIN_POSITIVE);
    let segment = net
        .segments()
        .iter()
        .map(|s| {
            let r = s.elements.clone();
            let (lo, hi) = r.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(m[k]), hi.max(m[k])));
            hi - lo
        })
        .fold(0.0, f64::max)
        / scale;
    let mut junction = 0.0f64;
    for (i, v) in net.vertices().iter().enumerate() {
        if v.incoming.is_empty() || v.outgoing.is_empty() {
            continue;
        }
        let inflow: f64 = v.incoming.iter().map(|&s| m[net.end_element(s, i)]).sum();
        let outflow: f64 = v.outgoing.iter().map(|&s| m[net.end_element(s, i)]).sum();
        junction = junction.max((inflow - outflow).abs() / scale);
    }
    let m_out: f64 = net
        .outlets()
        .iter()
        .map(|&o| m[net.end_element(net.vertices()[o].incoming[0], o)])
        .sum();
    MassBalance {
        segment,
        junction,
        global: (m_in - m_out).abs() / scale,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_network, NetworkSpec, VertexRole};
    use super::*;
    use approx::assert_relative_eq;

    fn sat() -> SaturationModel {
        SaturationModel::r245fa()
    }

    fn pipe(vertical: bool, n: usize) -> PipeNetwork {
        let mut s = NetworkSpec::default();
        let a = s.vertex(0.0, 0.0, VertexRole::Inlet);
        let b = if vertical { s.vertex(0.0, 0.3, VertexRole::Outlet) } else { s.vertex(0.4, 0.0, VertexRole::Outlet) };
        s.segment(a, b, 0.005, n);
        build_network(&s, None).unwrap()
    }

    /// Two pipes between a feeder and a drain, the second with half the diameter.
    fn parallel(d2: f64) -> PipeNetwork {
        let mut s = NetworkSpec::default();
        let i = s.vertex(0.0, 0.0, VertexRole::Inlet);
        let a = s.vertex(0.1, 0.0, VertexRole::Junction);
        let b = s.vertex(0.5, 0.0, VertexRole::Junction);
        let o = s.vertex(0.6, 0.0, VertexRole::Outlet);
        s.segment(i, a, 0.01, 2);
        s.segment(a, b, 0.005, 8);
        s.segment(a, b, d2, 8);
        s.segment(b, o, 0.01, 2);
        build_network(&s, None).unwrap()
    }

    #[test]
    fn horizontal_pipe_constant_resistance() {
        let net = pipe(false, 8);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        let mut opts = MomentumOptions::new(8e5, 5.8);
        opts.friction = FrictionModel::Laminar;
        let it = solve_mass_momentum(&net, &mut st, &opts).unwrap();
        assert!(it <= 2);
        for g in &st.mass_flux {
            assert_relative_eq!(*g, 5.8, max_relative = 1e-12);
        }
        let r = FrictionModel::Laminar.resistance(5.8, st.density[0], st.viscosity[0], 0.005);
        // φ decreases linearly with slope R·G along the flow
        for node in 0..net.num_nodes() {
            let x = net.node_position(node)[0];
            assert!((st.phi[node] - (8e5 - r * 5.8 * x)).abs() < 1e-9 * 8e5);
        }
    }

    #[test]
    fn vertical_pipe_is_hydrostatic_plus_friction() {
        let net = pipe(true, 6);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        let opts = MomentumOptions::new(8e5, 5.8);
        solve_mass_momentum(&net, &mut st, &opts).unwrap();
        let r = blasius(5.8, &st);
        let outlet = net.outlets()[0];
        let expect = 8e5 - (r * 5.8 + st.density[0] * 9.81) * 0.3;
        assert_relative_eq!(st.phi[outlet], expect, max_relative = 1e-12);
    }

    fn blasius(g: f64, st: &FluidState) -> f64 {
        crate::twophase::blasius_resistance(g, st.density[0], st.viscosity[0], 0.005)
    }

    #[test]
    fn identical_parallel_pipes_split_evenly() {
        let net = parallel(0.005);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        solve_mass_momentum(&net, &mut st, &MomentumOptions::new(8e5, 5.8)).unwrap();
        let s = net.segments();
        let g1 = st.mass_flux[s[1].elements.start];
        let g2 = st.mass_flux[s[2].elements.start];
        assert_relative_eq!(g1, g2, max_relative = 1e-10);
        let bal = mass_balance(&net, &st);
        assert!(bal.global < 1e-10 && bal.junction < 1e-10 && bal.segment < 1e-10);
    }

    #[test]
    fn resistor_network_split() {
        // halving the diameter quadruples the laminar resistance
        let net = parallel(0.0025);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        let mut opts = MomentumOptions::new(8e5, 5.8);
        opts.friction = FrictionModel::Laminar;
        solve_mass_momentum(&net, &mut st, &opts).unwrap();
        let s = net.segments();
        let g1 = st.mass_flux[s[1].elements.start];
        let g2 = st.mass_flux[s[2].elements.start];
        assert_relative_eq!(g1 / g2, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn blasius_split_matches_power_law() {
        // equal Δφ: R(G)·G ∝ G^{1.75} D^{-1.25} ⇒ G₁/G₂ = (D₁/D₂)^{5/7}
        let net = parallel(0.0025);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        solve_mass_momentum(&net, &mut st, &MomentumOptions::new(8e5, 5.8)).unwrap();
        let s = net.segments();
        let g1 = st.mass_flux[s[1].elements.start];
        let g2 = st.mass_flux[s[2].elements.start];
        assert_relative_eq!(g1 / g2, 2f64.powf(5.0 / 7.0), max_relative = 1e-8);
    }

    #[test]
    fn energy_without_exchange_transports_inlet() {
        let net = pipe(false, 10);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        let model = HeatTransferModel::Constant { h: 3.0 };
        let h_in = st.enthalpy[0];
        let wall = st.temperature.clone();
        let opts = EnergyOptions { h_inlet: h_in, g_tot: 5.8, heat_transfer: &model, sat: &m, linear_tol: 1e-13 };
        solve_energy(&net, &mut st, &wall, &opts).unwrap();
        assert!(st.node_enthalpy.iter().all(|h| (h - h_in).abs() < 1e-9 * h_in));
        let w0 = st.enthalpy_flux[0];
        assert!(st.enthalpy_flux.iter().all(|w| (w - w0).abs() < 1e-9 * w0));
    }

    #[test]
    fn energy_with_constant_wall_is_linear() {
        let net = pipe(false, 10);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        let model = HeatTransferModel::Constant { h: 3.0 };
        let h_in = st.enthalpy[0];
        let wall = vec![360.0; net.num_elements()];
        let opts = EnergyOptions { h_inlet: h_in, g_tot: 5.8, heat_transfer: &model, sat: &m, linear_tol: 1e-13 };
        solve_energy(&net, &mut st, &wall, &opts).unwrap();
        let seg = &net.segments()[0];
        let q = 3.0 * seg.exchange_width * (360.0 - 358.15);
        let mdot = st.mass_flow[0];
        // nodal ℋ(s) = ℋ_in + q s/ṁ at every node except the outflow node,
        // which carries the last half-element of source
        for (i, &node) in seg.nodes.iter().enumerate().take(seg.nodes.len() - 1) {
            let s = i as f64 * seg.length / 10.0;
            assert!((st.node_enthalpy[node] - (h_in + q * s / mdot)).abs() < 1e-9 * h_in);
        }
        let total: f64 = st.heat_release(&wall);
        assert_relative_eq!(-total, q * seg.length, max_relative = 1e-12);
        // the half-element of source at the Dirichlet inlet node is not carried
        let out = st.mass_flow[9] * st.node_enthalpy[seg.to];
        assert_relative_eq!(out - mdot * h_in, q * seg.length * 0.95, max_relative = 1e-9);
    }

    #[test]
    fn zero_flow_branch_is_regularized() {
        let net = parallel(0.005);
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        let s2 = net.segments()[2].elements.clone();
        let s1 = net.segments()[1].elements.clone();
        for k in s2.clone() {
            st.mass_flux[k] = 0.0;
            st.mass_flow[k] = 0.0;
        }
        for k in s1 {
            st.mass_flux[k] = 5.8 * 4.0;
            st.mass_flow[k] = 5.8 * net.element_area(0);
        }
        let model = HeatTransferModel::Constant { h: 3.0 };
        let h_in = st.enthalpy[0];
        let wall = vec![340.0; net.num_elements()];
        let opts = EnergyOptions { h_inlet: h_in, g_tot: 5.8, heat_transfer: &model, sat: &m, linear_tol: 1e-10 };
        let n = solve_energy(&net, &mut st, &wall, &opts).unwrap();
        assert_eq!(n, s2.len());
        assert!(st.node_enthalpy.iter().all(|h| h.is_finite()));
    }

    #[test]
    fn two_outlets_are_rejected_for_momentum() {
        let net = build_network(&super::super::tests::tree_spec(), None).unwrap();
        let m = sat();
        let mut st = FluidState::saturated_vapor(&net, 358.15, 8e5, 5.8, &m).unwrap();
        assert!(matches!(
            solve_mass_momentum(&net, &mut st, &MomentumOptions::new(8e5, 5.8)),
            Err(Error::Unsupported(_))
        ));
    }
}
