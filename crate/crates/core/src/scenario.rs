//! Scenario configuration (TOML) and the shipped device layouts.
//!
//! Device layouts are reconstructions of the panel drawings and are
//! approximate: channel counts, header positions and diameters were chosen to
//! reproduce the qualitative flow patterns, not measured geometry.

use crate::coupling::CouplingConfig;
use crate::error::{Error, Result};
use crate::pipenet::{NetworkSpec, SegmentSpec, VertexRole};
use crate::reduction::ReductionSpec;
use crate::twophase::{AirVelocityModel, CorrelationSet, FrictionModel, HeatTransferModel, SaturationModel};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirConfig {
    /// `T_a^in` (K).
    pub inlet_temperature: f64,
    pub density: f64,
    pub heat_capacity: f64,
    /// `k₀` of the power law `k_a = k₀(T/u₀)^β`, `β` from the reduction spec.
    pub conductivity: f64,
    /// `u₀` (K).
    pub reference_temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    pub conductivity: f64,
    /// Air/wall coefficient `h_aw` (W·m⁻²·K⁻¹).
    pub h_aw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorMode {
    /// `T_c` carried from the previous state; pressure only diagnosed.
    #[default]
    Temperature,
    /// `T_c = T_sat(p)` from the momentum solve.
    Pressure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoolantConfig {
    /// `T₀` (K).
    pub inlet_temperature: f64,
    #[serde(default = "one")]
    pub inlet_quality: f64,
    /// Overrides `ℋ_inlet` computed from `T₀` and the inlet quality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inlet_enthalpy: Option<f64>,
    /// `G_tot` in the inlet segment (kg·m⁻²·s⁻¹).
    pub g_tot: f64,
    /// Defaults to `p_sat(T₀)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_inlet: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property_file: Option<PathBuf>,
    #[serde(default)]
    pub saturation_anchor: AnchorMode,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    DeviceA,
    DeviceB,
    DeviceC,
    Horizontal11,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "devicea" => Ok(Self::DeviceA),
            "deviceb" => Ok(Self::DeviceB),
            "devicec" => Ok(Self::DeviceC),
            "horizontal11" => Ok(Self::Horizontal11),
            _ => Err(Error::Config(format!("unknown preset '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vertices: Vec<crate::pipenet::VertexSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentSpec>,
    /// Upper bound on 1D element length; defaults to half the smaller cell size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_element_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub grid: GridConfig,
    pub reduction: ReductionSpec,
    pub air: AirConfig,
    pub panel: PanelConfig,
    pub coolant: CoolantConfig,
    pub correlations: CorrelationSet,
    pub network: NetworkConfig,
    #[serde(default)]
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    /// Model parameters of the reference panel with the given layout.
    pub fn reference(preset: Preset) -> Self {
        let (grid, name) = match preset {
            Preset::Horizontal11 => (GridConfig { nx: 50, ny: 25, width: 0.5, height: 0.25 }, "horizontal11"),
            Preset::DeviceA => (GridConfig { nx: 45, ny: 20, width: 0.45, height: 0.2 }, "device_a"),
            Preset::DeviceB => (GridConfig { nx: 45, ny: 20, width: 0.45, height: 0.2 }, "device_b"),
            Preset::DeviceC => (GridConfig { nx: 45, ny: 20, width: 0.45, height: 0.2 }, "device_c"),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            grid,
            reduction: ReductionSpec { pitch: 0.05, exponent: 0.9, ..Default::default() },
            air: AirConfig {
                inlet_temperature: 298.15,
                density: 1.18,
                heat_capacity: 1007.0,
                conductivity: 0.026,
                reference_temperature: 298.15,
            },
            panel: PanelConfig { conductivity: 200.0, h_aw: 1.1 },
            coolant: CoolantConfig {
                inlet_temperature: 358.15,
                inlet_quality: 1.0,
                inlet_enthalpy: None,
                g_tot: 5.8,
                p_inlet: None,
                property_file: None,
                saturation_anchor: AnchorMode::Temperature,
            },
            correlations: CorrelationSet {
                heat_transfer: HeatTransferModel::Constant { h: 3.0 },
                friction: FrictionModel::Blasius,
                air_velocity: AirVelocityModel::Constant { speed: 1.0 },
            },
            network: NetworkConfig { preset: Some(preset), ..Default::default() },
            coupling: CouplingConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(p), Some(dir)) = (&cfg.coolant.property_file, path.parent()) {
            if p.is_relative() {
                cfg.coolant.property_file = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let positive = [
            ("grid.width", self.grid.width),
            ("grid.height", self.grid.height),
            ("air.inlet_temperature", self.air.inlet_temperature),
            ("air.density", self.air.density),
            ("air.heat_capacity", self.air.heat_capacity),
            ("air.conductivity", self.air.conductivity),
            ("air.reference_temperature", self.air.reference_temperature),
            ("panel.conductivity", self.panel.conductivity),
            ("coolant.inlet_temperature", self.coolant.inlet_temperature),
            ("coolant.g_tot", self.coolant.g_tot),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{key} must be positive, got {v}")));
            }
        }
        if self.grid.nx == 0 || self.grid.ny == 0 {
            return Err(Error::Config("grid needs at least one cell per direction".into()));
        }
        if !(self.panel.h_aw >= 0.0) {
            return Err(Error::Config(format!("panel.h_aw must be nonnegative, got {}", self.panel.h_aw)));
        }
        if !(0.0..=1.0).contains(&self.coolant.inlet_quality) {
            return Err(Error::Config("coolant.inlet_quality must lie in [0, 1]".into()));
        }
        if let Some(p) = self.coolant.p_inlet {
            if !(p > 0.0) {
                return Err(Error::Config(format!("coolant.p_inlet must be positive, got {p}")));
            }
        }
        if let HeatTransferModel::Constant { h } = self.correlations.heat_transfer {
            if !(h >= 0.0) {
                return Err(Error::Config(format!("heat-transfer coefficient must be nonnegative, got {h}")));
            }
        }
        if let AirVelocityModel::Constant { speed } = self.correlations.air_velocity {
            if !(speed >= 0.0) {
                return Err(Error::Config(format!("air speed must be nonnegative, got {speed}")));
            }
        }
        if self.network.preset.is_some() && !self.network.segments.is_empty() {
            return Err(Error::Config("network: give either a preset or an explicit layout".into()));
        }
        if self.network.preset.is_none() && self.network.segments.is_empty() {
            return Err(Error::Config("network: no preset and no segments".into()));
        }
        self.reduction.validate()?;
        self.coupling.validate()
    }

    /// Explicit network layout, expanding presets to the grid extents.
    pub fn network_spec(&self) -> NetworkSpec {
        match self.network.preset {
            Some(p) => preset_network(p, self.grid.width, self.grid.height),
            None => NetworkSpec {
                vertices: self.network.vertices.clone(),
                segments: self.network.segments.clone(),
            },
        }
    }

    pub fn max_element_length(&self) -> f64 {
        self.network.max_element_length.unwrap_or_else(|| {
            0.5 * (self.grid.width / self.grid.nx as f64).min(self.grid.height / self.grid.ny as f64)
        })
    }

    pub fn saturation_model(&self) -> Result<SaturationModel> {
        match &self.coolant.property_file {
            Some(p) => SaturationModel::from_file(p),
            None => Ok(SaturationModel::r245fa()),
        }
    }

    /// Copy with the preset replaced by its explicit layout.
    pub fn expanded(&self) -> Self {
        let mut out = self.clone();
        let spec = self.network_spec();
        out.network.preset = None;
        out.network.vertices = spec.vertices;
        out.network.segments = spec.segments;
        out
    }
}

const FEEDER_D: f64 = 0.019;
const HEADER_D: f64 = 0.007;
const CHANNEL_D: f64 = 0.005;
const STRIP: f64 = 0.01;

struct Builder {
    spec: NetworkSpec,
}

impl Builder {
    fn vertex(&mut self, x: f64, y: f64, role: VertexRole) -> usize {
        self.spec.vertex(x, y, role)
    }

    fn pipe(&mut self, from: usize, to: usize, d: f64) {
        self.spec.segments.push(SegmentSpec {
            from,
            to,
            hydraulic_diameter: d,
            flow_area: None,
            exchange_width: Some(STRIP),
            elements: 1,
        });
    }
}

/// Ladder of horizontal channels between a right (supply) header and a left
/// (return) header, fed by a short feeder at the bottom right. `reverse`
/// drains at the top left, otherwise at the bottom left. `drop` lowers the
/// left end of every channel.
fn ladder(w: f64, h: f64, n: usize, reverse: bool, drop: f64) -> NetworkSpec {
    let mut b = Builder { spec: NetworkSpec::default() };
    let margin = 0.1 * h;
    let xr = w - 0.045 * w;
    let xl = 0.045 * w;
    let y0 = margin;
    let y1 = h - margin;
    let ys: Vec<f64> = (0..n).map(|k| y0 + (y1 - y0) * k as f64 / (n - 1) as f64).collect();
    let inlet = b.vertex(w - 0.01 * w, ys[0] + drop, VertexRole::Inlet);
    let right: Vec<usize> = ys.iter().map(|y| b.vertex(xr, y + drop, VertexRole::Junction)).collect();
    let left: Vec<usize> = ys.iter().map(|y| b.vertex(xl, *y, VertexRole::Junction)).collect();
    let out_y = if reverse { ys[n - 1] } else { ys[0] };
    let outlet = b.vertex(0.01 * w, out_y, VertexRole::Outlet);
    b.pipe(inlet, right[0], FEEDER_D);
    for k in 0..n - 1 {
        b.pipe(right[k], right[k + 1], HEADER_D);
    }
    for k in 0..n {
        b.pipe(right[k], left[k], CHANNEL_D);
    }
    if reverse {
        for k in 0..n - 1 {
            b.pipe(left[k], left[k + 1], HEADER_D);
        }
        b.pipe(left[n - 1], outlet, FEEDER_D);
    } else {
        for k in (0..n - 1).rev() {
            b.pipe(left[k + 1], left[k], HEADER_D);
        }
        b.pipe(left[0], outlet, FEEDER_D);
    }
    b.spec
}

/// Explicit layout of a preset on a `w × h` panel.
pub fn preset_network(preset: Preset, w: f64, h: f64) -> NetworkSpec {
    match preset {
        Preset::DeviceA => ladder(w, h, 8, false, 0.0),
        Preset::DeviceB => ladder(w, h, 8, true, 0.0),
        Preset::DeviceC => ladder(w, h, 7, false, 0.05 * h),
        Preset::Horizontal11 => ladder(w, h, 11, false, 0.0),
    }
}
