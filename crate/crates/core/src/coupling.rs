//! Staggered coupling of the air/panel pair with the coolant network.
//!
//! Outer loop: solve the 2D pair for given `T_c`, sample `T_w` on the
//! network, run the 1D inner loop (momentum, energy, state inversion) to
//! convergence, broadcast `T_c` back to the grid. Exchanged fields are
//! relaxed with `θ`.

use crate::error::{Error, Result};
use crate::mesh::{CellField, Side, StructuredGrid2D};
use crate::mfv::{self, AdrProblem2D, BoundaryCondition, StabilizationKind};
use crate::pipenet::{
    build_network, solve_energy, solve_mass_momentum, update_conductance, EnergyOptions, FluidState,
    MomentumOptions, PipeNetwork, GRAVITY,
};
use crate::reduction::{power_law_conductivity, reduction_coefficients};
use crate::scenario::{AnchorMode, ScenarioConfig};
use crate::sparse::{self, TripletBuilder};
use crate::twophase::{invert_state, mixture_enthalpy, SaturationAnchor, SaturationModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    /// Relaxation on the exchanged `T_w`/`T_c` fields, in `(0, 1]`.
    pub theta: f64,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub inner_2d_tol: f64,
    pub inner_2d_max_iter: usize,
    pub inner_1d_tol: f64,
    pub inner_1d_max_iter: usize,
    pub linear_tol: f64,
    pub stabilization: StabilizationKind,
    /// Largest admissible fraction of clamped network elements.
    pub max_clamped_fraction: f64,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            theta: 0.7,
            outer_tol: 1e-6,
            outer_max_iter: 200,
            inner_2d_tol: 1e-8,
            inner_2d_max_iter: 50,
            inner_1d_tol: 1e-8,
            inner_1d_max_iter: 50,
            linear_tol: 1e-10,
            stabilization: StabilizationKind::ScharfetterGummel,
            max_clamped_fraction: 0.01,
        }
    }
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("coupling.theta must lie in (0, 1], got {}", self.theta)));
        }
        for (key, v) in [
            ("outer_tol", self.outer_tol),
            ("inner_2d_tol", self.inner_2d_tol),
            ("inner_1d_tol", self.inner_1d_tol),
            ("linear_tol", self.linear_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("coupling.{key} must be positive, got {v}")));
            }
        }
        if self.outer_max_iter == 0 || self.inner_2d_max_iter == 0 || self.inner_1d_max_iter == 0 {
            return Err(Error::Config("coupling iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Grid cell containing each network element, plus the reverse map.
#[derive(Debug, Clone)]
pub struct ChannelMask {
    pub element_cell: Vec<usize>,
    /// Network elements inside each cell, in element order.
    pub cell_elements: Vec<Vec<usize>>,
}

impl ChannelMask {
    pub fn new(grid: &StructuredGrid2D, net: &PipeNetwork) -> Result<Self> {
        let mut element_cell = Vec::with_capacity(net.num_elements());
        let mut cell_elements = vec![Vec::new(); grid.num_elements()];
        for (k, e) in net.elements().iter().enumerate() {
            let c = grid.locate(e.midpoint).ok_or_else(|| {
                Error::Geometry(format!(
                    "network element {k} at ({}, {}) lies outside the panel",
                    e.midpoint[0], e.midpoint[1]
                ))
            })?;
            element_cell.push(c);
            cell_elements[c].push(k);
        }
        Ok(Self { element_cell, cell_elements })
    }

    /// Segment indices crossing each cell.
    pub fn cell_segments(&self, net: &PipeNetwork) -> Vec<Vec<usize>> {
        self.cell_elements
            .iter()
            .map(|els| {
                let mut s: Vec<usize> = els.iter().map(|&k| net.elements()[k].segment).collect();
                s.dedup();
                s
            })
            .collect()
    }
}

/// `T_w` of the cell containing each element midpoint.
pub fn sample_wall_to_network(t_w: &CellField, mask: &ChannelMask) -> Vec<f64> {
    mask.element_cell.iter().map(|&c| t_w[c]).collect()
}

/// Cell coolant temperature and wall/coolant coefficient `h*_wc`.
///
/// `conductance[k]` is the element conductance `h_wc·w·L` (W/K); a cell gets
/// `h*_wc = Σ c_e / (λ₁|K|)` and the conductance-weighted mean of `T_c`.
/// Cells without coolant get `h*_wc = 0` and `T_c = 0`. If every element in a
/// cell has zero conductance, the lowest-indexed element's `T_c` is used.
pub fn broadcast_coolant_to_grid(
    t_c: &[f64],
    conductance: &[f64],
    mask: &ChannelMask,
    grid: &StructuredGrid2D,
    lambda1: f64,
) -> (CellField, CellField) {
    let n = grid.num_elements();
    let mut tc = vec![0.0; n];
    let mut h = vec![0.0; n];
    for (cell, els) in mask.cell_elements.iter().enumerate() {
        if els.is_empty() {
            continue;
        }
        let total: f64 = els.iter().map(|&k| conductance[k]).sum();
        if total > 0.0 {
            tc[cell] = els.iter().map(|&k| conductance[k] * t_c[k]).sum::<f64>() / total;
            h[cell] = total / (lambda1 * grid.area(cell));
        } else {
            tc[cell] = t_c[els[0]];
        }
    }
    (CellField::new(tc), CellField::new(h))
}

/// Everything fixed for a scenario: grids, network, closures and scalings.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub config: ScenarioConfig,
    pub grid: StructuredGrid2D,
    pub net: PipeNetwork,
    pub mask: ChannelMask,
    pub sat: SaturationModel,
    pub lambda1: f64,
    pub lambda2: f64,
    pub h_inlet: f64,
    pub p_inlet: f64,
}

impl CoupledModel {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let g = &config.grid;
        let grid = StructuredGrid2D::uniform(g.nx, g.ny, g.width, g.height)?;
        let net = build_network(&config.network_spec(), Some(config.max_element_length()))?;
        let mask = ChannelMask::new(&grid, &net)?;
        let sat = config.saturation_model()?;
        let (lambda1, lambda2) = reduction_coefficients(&config.reduction, 8)?;
        let t0 = config.coolant.inlet_temperature;
        let h_inlet = match config.coolant.inlet_enthalpy {
            Some(h) => h,
            None => mixture_enthalpy(t0, config.coolant.inlet_quality, &sat)?,
        };
        let p_inlet = match config.coolant.p_inlet {
            Some(p) => p,
            None => sat.p_sat(t0)?,
        };
        Ok(Self {
            config: config.clone(),
            grid,
            net,
            mask,
            sat,
            lambda1,
            lambda2,
            h_inlet,
            p_inlet,
        })
    }

    /// `T₀ − T_a^in`, the temperature scale of all residuals.
    pub fn temperature_scale(&self) -> f64 {
        (self.config.coolant.inlet_temperature - self.config.air.inlet_temperature)
            .abs()
            .max(1.0)
    }

    /// `h̃_aw = h*_aw = h_aw/λ₁`.
    pub fn h_aw_scaled(&self) -> f64 {
        self.config.panel.h_aw / self.lambda1
    }

    /// Initial coolant state: inlet enthalpy everywhere at `T₀`.
    pub fn initial_fluid(&self) -> Result<FluidState> {
        let c = &self.config.coolant;
        let mut st = FluidState::saturated_vapor(&self.net, c.inlet_temperature, self.p_inlet, c.g_tot, &self.sat)?;
        let inv = invert_state(self.h_inlet, SaturationAnchor::Temperature(c.inlet_temperature), &self.sat)?;
        for k in 0..self.net.num_elements() {
            st.enthalpy[k] = self.h_inlet;
            st.enthalpy_flux[k] = c.g_tot * self.h_inlet;
            st.quality[k] = inv.quality;
            st.density[k] = inv.density;
            st.viscosity[k] = inv.viscosity;
            st.flags[k] = inv.flag;
        }
        st.node_enthalpy.fill(self.h_inlet);
        update_conductance(&self.net, &mut st, &self.config.correlations.heat_transfer, &self.sat)?;
        Ok(st)
    }

    /// `k_a(T_a)` per cell.
    pub fn air_conductivity(&self, t_a: &CellField) -> Result<CellField> {
        let air = &self.config.air;
        let exponent = self.config.reduction.exponent;
        let v = t_a
            .values()
            .iter()
            .map(|t| power_law_conductivity(air.conductivity, air.reference_temperature, exponent, *t))
            .collect::<Result<Vec<f64>>>()?;
        Ok(CellField::new(v))
    }

    fn air_problem(&self, alpha: &CellField, speed: f64) -> AdrProblem2D {
        let air = &self.config.air;
        let mut p = AdrProblem2D::constant(&self.grid, air.conductivity, self.h_aw_scaled(), 0.0);
        p.alpha = alpha.clone();
        let beta = air.density * air.heat_capacity * speed;
        let mut p = p.with_uniform_beta(&self.grid, [0.0, beta]);
        p.set_side_bc(&self.grid, Side::Bottom, BoundaryCondition::Dirichlet(air.inlet_temperature));
        p.set_side_bc(&self.grid, Side::Top, BoundaryCondition::ZeroDiffusiveFlux);
        p.set_side_bc(&self.grid, Side::Left, BoundaryCondition::ZeroTotalFlux);
        p.set_side_bc(&self.grid, Side::Right, BoundaryCondition::ZeroTotalFlux);
        p
    }

    fn wall_problem(&self, t_c: &CellField, h_wc: &CellField) -> AdrProblem2D {
        let haw = self.h_aw_scaled();
        let mut p = AdrProblem2D::constant(&self.grid, self.config.panel.conductivity, haw, 0.0);
        for k in 0..self.grid.num_elements() {
            p.gamma[k] = haw + h_wc[k];
            p.f[k] = h_wc[k] * t_c[k];
        }
        for side in [Side::Left, Side::Right, Side::Bottom, Side::Top] {
            p.set_side_bc(&self.grid, side, BoundaryCondition::ZeroDiffusiveFlux);
        }
        p
    }

    /// Effective air speed `v̂ = (λ₂/λ₁)V` for the current mean panel temperature.
    pub fn air_speed(&self, t_w: &CellField) -> f64 {
        let v = self.config.correlations.air_velocity.speed(
            t_w.mean(&self.grid),
            self.config.air.inlet_temperature,
            self.grid.height(),
        );
        self.lambda2 / self.lambda1 * v
    }

    /// Air and wall problems with the coupling terms moved to the sources,
    /// using the coefficients of the pair's last linear solve.
    pub fn pair_problems(
        &self,
        pair: &PairSolution,
        t_c: &CellField,
        h_wc: &CellField,
    ) -> Result<(AdrProblem2D, AdrProblem2D)> {
        let haw = self.h_aw_scaled();
        let mut air = self.air_problem(&pair.air_alpha, pair.air_speed);
        let mut wall = self.wall_problem(t_c, h_wc);
        for k in 0..self.grid.num_elements() {
            air.f[k] = haw * pair.t_w[k];
            wall.f[k] += haw * pair.t_a[k];
        }
        Ok((air, wall))
    }
}

#[derive(Debug, Clone)]
pub struct PairSolution {
    pub t_a: CellField,
    pub t_w: CellField,
    pub iterations: usize,
    /// `v̂` and `k_a` of the last linear solve.
    pub air_speed: f64,
    pub air_alpha: CellField,
}

/// Solves the air/panel pair as one interleaved block system, with Picard
/// iteration on `k_a(T_a)` and the air speed.
pub fn solve_2d_pair(
    model: &CoupledModel,
    t_c: &CellField,
    h_wc: &CellField,
    initial: (&CellField, &CellField),
) -> Result<PairSolution> {
    let cfg = &model.config.coupling;
    let grid = &model.grid;
    let n = grid.num_elements();
    let haw = model.h_aw_scaled();
    let wall_free = haw == 0.0 && h_wc.values().iter().all(|h| *h == 0.0);
    let linear = model.config.reduction.exponent == 0.0 && model.config.correlations.air_velocity.is_constant();
    let scale = model.temperature_scale();
    let mut t_a = initial.0.clone();
    let mut t_w = initial.1.clone();
    let mut history = Vec::new();
    for it in 1..=cfg.inner_2d_max_iter {
        let speed = model.air_speed(&t_w);
        let alpha = model.air_conductivity(&t_a)?;
        let air = model.air_problem(&alpha, speed);
        let (ka, ga) = mfv::assemble(&air, grid, cfg.stabilization)?;
        let (new_a, new_w) = if wall_free {
            // an isolated wall keeps its current temperature
            (mfv::solve(&ka, &ga, cfg.linear_tol)?, t_w.clone())
        } else {
            let wall = model.wall_problem(t_c, h_wc);
            let (kw, gw) = mfv::assemble(&wall, grid, cfg.stabilization)?;
            let mut b = TripletBuilder::new(2 * n);
            for (i, j, v) in ka.triplets() {
                b.add(2 * i, 2 * j, v);
            }
            for (i, j, v) in kw.triplets() {
                b.add(2 * i + 1, 2 * j + 1, v);
            }
            let mut rhs = vec![0.0; 2 * n];
            for k in 0..n {
                let area = grid.area(k);
                b.add(2 * k, 2 * k + 1, -haw * area);
                b.add(2 * k + 1, 2 * k, -haw * area);
                rhs[2 * k] = ga[k];
                rhs[2 * k + 1] = gw[k];
            }
            let x = sparse::solve(&b.build(), &rhs, cfg.linear_tol)?;
            (
                CellField::new(x.iter().step_by(2).copied().collect()),
                CellField::new(x.iter().skip(1).step_by(2).copied().collect()),
            )
        };
        let change = new_a
            .values()
            .iter()
            .zip(t_a.values())
            .chain(new_w.values().iter().zip(t_w.values()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        history.push(change);
        t_a = new_a;
        t_w = new_w;
        if linear || change <= cfg.inner_2d_tol {
            return Ok(PairSolution { t_a, t_w, iterations: it, air_speed: speed, air_alpha: alpha });
        }
    }
    Err(Error::NotConverged {
        what: "air/panel Picard iteration".into(),
        iterations: cfg.inner_2d_max_iter,
        last: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// Network inner loop for a fixed wall temperature per element: momentum,
/// energy and state inversion repeated until `G`, `x` and `T_c` settle.
pub fn solve_network(model: &CoupledModel, state: &mut FluidState, wall: &[f64]) -> Result<usize> {
    let cfg = &model.config;
    let net = &model.net;
    let mut mom = MomentumOptions::new(model.p_inlet, cfg.coolant.g_tot);
    mom.friction = cfg.correlations.friction;
    mom.gravity = GRAVITY;
    let energy = EnergyOptions {
        h_inlet: model.h_inlet,
        g_tot: cfg.coolant.g_tot,
        heat_transfer: &cfg.correlations.heat_transfer,
        sat: &model.sat,
        linear_tol: cfg.coupling.linear_tol,
    };
    let scale = model.temperature_scale();
    let mut history = Vec::new();
    for it in 1..=cfg.coupling.inner_1d_max_iter {
        let g_old = state.mass_flux.clone();
        let x_old = state.quality.clone();
        let t_old = state.temperature.clone();
        solve_mass_momentum(net, state, &mom)?;
        solve_energy(net, state, wall, &energy)?;
        for k in 0..net.num_elements() {
            let anchor = match cfg.coolant.saturation_anchor {
                AnchorMode::Temperature => SaturationAnchor::Temperature(state.temperature[k]),
                AnchorMode::Pressure => SaturationAnchor::Pressure(state.pressure[k]),
            };
            let inv = invert_state(state.enthalpy[k], anchor, &model.sat)?;
            state.temperature[k] = inv.temperature;
            state.quality[k] = inv.quality;
            state.density[k] = inv.density;
            state.viscosity[k] = inv.viscosity;
            state.flags[k] = inv.flag;
        }
        let mut change = 0.0f64;
        for k in 0..net.num_elements() {
            change = change
                .max((state.mass_flux[k] - g_old[k]).abs() / cfg.coolant.g_tot)
                .max((state.quality[k] - x_old[k]).abs())
                .max((state.temperature[k] - t_old[k]).abs() / scale);
        }
        history.push(change);
        if change <= cfg.coupling.inner_1d_tol {
            return Ok(it);
        }
    }
    Err(Error::NotConverged {
        what: "network inner iteration".into(),
        iterations: cfg.coupling.inner_1d_max_iter,
        last: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}

/// One outer iteration of the history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterRecord {
    pub iteration: usize,
    pub d_air: f64,
    pub d_wall: f64,
    pub d_coolant: f64,
    pub residual: f64,
    pub inner_2d: usize,
    pub inner_1d: usize,
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct CoupledState {
    pub t_a: CellField,
    pub t_w: CellField,
    pub fluid: FluidState,
    /// Coolant temperature and `h*_wc` as last seen by the 2D solve.
    pub t_c_cells: CellField,
    pub h_wc_cells: CellField,
    /// `T_w` per element as last seen by the network solve.
    pub wall_elements: Vec<f64>,
    pub air_speed: f64,
    pub air_alpha: CellField,
    pub history: Vec<OuterRecord>,
    pub converged: bool,
}

impl CoupledState {
    pub fn outer_iterations(&self) -> usize {
        self.history.len()
    }

    pub fn clamped(&self) -> usize {
        self.fluid.clamped_count()
    }

    pub fn check_clamps(&self, limit: f64) -> Result<()> {
        let n = self.fluid.flags.len().max(1);
        let frac = self.clamped() as f64 / n as f64;
        if frac > limit {
            return Err(Error::Domain(format!(
                "{} of {} network elements clamped ({:.2}% > {:.2}%)",
                self.clamped(),
                n,
                100.0 * frac,
                100.0 * limit
            )));
        }
        Ok(())
    }
}

/// Heat balance of a coupled state (W).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBookkeeping {
    /// `Σ c_e (T_c − T_w)` over network elements.
    pub network_release: f64,
    /// `Σ h_aw (T_w − T_a)|K|` over cells.
    pub panel_to_air: f64,
    /// `Σ h*_wc λ₁ (T_c − T_w)|K|`, the coolant term seen by the panel.
    pub panel_from_coolant: f64,
    /// Enthalpy carried off by the air through the outflow boundary.
    pub air_enthalpy_gain: f64,
}

impl EnergyBookkeeping {
    pub fn relative_mismatch(&self) -> f64 {
        let scale = self.network_release.abs().max(self.panel_to_air.abs()).max(f64::MIN_POSITIVE);
        (self.network_release - self.panel_to_air).abs() / scale
    }
}

pub fn energy_bookkeeping(model: &CoupledModel, state: &CoupledState) -> Result<EnergyBookkeeping> {
    let grid = &model.grid;
    let wall = sample_wall_to_network(&state.t_w, &model.mask);
    let network_release = state.fluid.heat_release(&wall);
    let mut panel_to_air = 0.0;
    let mut panel_from_coolant = 0.0;
    for k in 0..grid.num_elements() {
        let a = grid.area(k);
        panel_to_air += model.config.panel.h_aw * (state.t_w[k] - state.t_a[k]) * a;
        panel_from_coolant += state.h_wc_cells[k] * model.lambda1 * (state.t_c_cells[k] - state.t_w[k]) * a;
    }
    let pair = PairSolution {
        t_a: state.t_a.clone(),
        t_w: state.t_w.clone(),
        iterations: 0,
        air_speed: state.air_speed,
        air_alpha: state.air_alpha.clone(),
    };
    let (air, _) = model.pair_problems(&pair, &state.t_c_cells, &state.h_wc_cells)?;
    let fluxes = mfv::recover_fluxes(&state.t_a, &air, grid, model.config.coupling.stabilization)?;
    let mut net_out = 0.0;
    for (e, edge) in grid.edges().iter().enumerate() {
        if edge.is_boundary() {
            net_out += fluxes[e];
        }
    }
    Ok(EnergyBookkeeping {
        network_release,
        panel_to_air,
        panel_from_coolant,
        air_enthalpy_gain: net_out * model.lambda1,
    })
}

/// Largest per-element balance residual of the air and the wall equation,
/// each relative to the largest absolute term of any element balance.
pub fn pair_balance(model: &CoupledModel, state: &CoupledState) -> Result<(f64, f64)> {
    let grid = &model.grid;
    let kind = model.config.coupling.stabilization;
    let pair = PairSolution {
        t_a: state.t_a.clone(),
        t_w: state.t_w.clone(),
        iterations: 0,
        air_speed: state.air_speed,
        air_alpha: state.air_alpha.clone(),
    };
    let (air, wall) = model.pair_problems(&pair, &state.t_c_cells, &state.h_wc_cells)?;
    let rel = |u: &CellField, p: &AdrProblem2D| -> Result<f64> {
        let j = mfv::recover_fluxes(u, p, grid, kind)?;
        let r = mfv::balance_residuals(u, &j, p, grid);
        let mut scale = 0.0f64;
        for k in 0..grid.num_elements() {
            let a = grid.area(k);
            let flux: f64 = grid.element_edges(k).iter().map(|le| j[le.edge].abs()).sum();
            scale = scale.max(flux + (p.gamma[k] * u[k] * a).abs() + (p.f[k] * a).abs());
        }
        Ok(sparse::norm_inf(&r) / scale.max(f64::MIN_POSITIVE))
    };
    Ok((rel(&state.t_a, &air)?, rel(&state.t_w, &wall)?))
}

/// Runs the staggered iteration for a scenario.
///
/// Failures of an inner solve are errors; running out of outer iterations
/// is not, the returned state then has `converged == false`.
pub fn run_staggered(model: &CoupledModel) -> Result<CoupledState> {
    let cfg = &model.config.coupling;
    let n = model.grid.num_elements();
    let ta_in = model.config.air.inlet_temperature;
    let scale = model.temperature_scale();
    let fluid = model.initial_fluid()?;
    let mut tc_x = fluid.temperature.clone();
    let t_w = CellField::constant(n, ta_in);
    let mut st = CoupledState {
        t_a: CellField::constant(n, ta_in),
        wall_elements: sample_wall_to_network(&t_w, &model.mask),
        t_w,
        fluid,
        t_c_cells: CellField::constant(n, 0.0),
        h_wc_cells: CellField::constant(n, 0.0),
        air_speed: 0.0,
        air_alpha: CellField::constant(n, model.config.air.conductivity),
        history: Vec::new(),
        converged: false,
    };
    let max_diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    for it in 1..=cfg.outer_max_iter {
        let (tc_cells, hwc_cells) =
            broadcast_coolant_to_grid(&tc_x, &st.fluid.conductance, &model.mask, &model.grid, model.lambda1);
        let pair = solve_2d_pair(model, &tc_cells, &hwc_cells, (&st.t_a, &st.t_w))?;
        let sampled = sample_wall_to_network(&pair.t_w, &model.mask);
        let theta = if it == 1 { 1.0 } else { cfg.theta };
        let tw_new: Vec<f64> = sampled
            .iter()
            .zip(&st.wall_elements)
            .map(|(s, o)| o + theta * (s - o))
            .collect();
        let inner_1d = solve_network(model, &mut st.fluid, &tw_new)?;
        let tc_new: Vec<f64> = st
            .fluid
            .temperature
            .iter()
            .zip(&tc_x)
            .map(|(s, o)| o + theta * (s - o))
            .collect();

        let d_air = max_diff(pair.t_a.values(), st.t_a.values()) / scale;
        let d_wall = max_diff(pair.t_w.values(), st.t_w.values()) / scale;
        let d_coolant = max_diff(&tc_new, &tc_x) / scale;
        let residual = d_air.max(d_wall).max(d_coolant);
        log::debug!("outer {it}: residual {residual:.3e} (air {d_air:.2e}, wall {d_wall:.2e}, coolant {d_coolant:.2e})");
        st.history.push(OuterRecord {
            iteration: it,
            d_air,
            d_wall,
            d_coolant,
            residual,
            inner_2d: pair.iterations,
            inner_1d,
            clamped: st.fluid.clamped_count(),
        });
        st.t_a = pair.t_a;
        st.t_w = pair.t_w;
        st.air_speed = pair.air_speed;
        st.air_alpha = pair.air_alpha;
        st.t_c_cells = tc_cells;
        st.h_wc_cells = hwc_cells;
        st.wall_elements = tw_new;
        tc_x = tc_new;
        if residual <= cfg.outer_tol {
            st.converged = true;
            return Ok(st);
        }
    }
    log::warn!(
        "staggered iteration stopped after {} outer iterations, residual {:.3e}",
        cfg.outer_max_iter,
        st.history.last().map_or(f64::NAN, |r| r.residual)
    );
    Ok(st)
}
