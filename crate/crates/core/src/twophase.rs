//! Homogeneous two-phase closures: saturation properties, mixture rules,
//! state inversion and the friction / heat-transfer / air-velocity
//! correlations.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

const DEFAULT_TABLE: &str = include_str!("../data/r245fa_fit.txt");

/// Saturation properties at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationProps {
    pub rho_l: f64,
    pub rho_v: f64,
    pub h_l: f64,
    pub h_v: f64,
    pub p_sat: f64,
    pub mu_l: f64,
    pub mu_v: f64,
}

impl SaturationProps {
    pub fn latent_heat(&self) -> f64 {
        self.h_v - self.h_l
    }
}

/// Saturation curves linearly interpolated from a table with columns
/// `T ρ_L ρ_V ℋ_L ℋ_V p_sat μ_L μ_V` (SI units, `#` starts a comment).
#[derive(Debug, Clone, PartialEq)]
pub struct SaturationModel {
    t: Vec<f64>,
    rows: Vec<[f64; 7]>,
}

impl SaturationModel {
    /// Bundled R245fa fit over 290–370 K (smooth correlations, not reference data).
    pub fn r245fa() -> Self {
        Self::from_table_str(DEFAULT_TABLE).expect("bundled property table is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table_str(&text)
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|e| Error::Config(format!("property table line {}: {e}", ln + 1)))?;
            if vals.len() != 8 {
                return Err(Error::Config(format!(
                    "property table line {}: expected 8 columns, found {}",
                    ln + 1,
                    vals.len()
                )));
            }
            t.push(vals[0]);
            rows.push([vals[1], vals[2], vals[3], vals[4], vals[5], vals[6], vals[7]]);
        }
        let model = Self { t, rows };
        model.validate()?;
        Ok(model)
    }

    /// Checks ordering, positivity, `ρ_L > ρ_V`, positive latent heat and
    /// increasing `p_sat` at the table rows and at 1000 interior samples.
    pub fn validate(&self) -> Result<()> {
        if self.t.len() < 2 {
            return Err(Error::Config("property table needs at least two rows".into()));
        }
        if self.t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("property table temperatures must increase".into()));
        }
        let (lo, hi) = self.range();
        let mut last_p = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let temp = lo + (hi - lo) * i as f64 / 1000.0;
            let s = self.props(temp)?;
            let ok = s.rho_v > 0.0
                && s.rho_l > s.rho_v
                && s.h_v > s.h_l
                && s.p_sat > last_p
                && s.mu_l > 0.0
                && s.mu_v > 0.0;
            if !ok {
                return Err(Error::Config(format!("saturation properties inconsistent at {temp} K")));
            }
            last_p = s.p_sat;
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn props(&self, temp: f64) -> Result<SaturationProps> {
        let (lo, hi) = self.range();
        if !(temp >= lo && temp <= hi) {
            return Err(Error::PropertyRange { value: temp, min: lo, max: hi });
        }
        let i = self.t.partition_point(|&v| v <= temp).clamp(1, self.t.len() - 1) - 1;
        let w = (temp - self.t[i]) / (self.t[i + 1] - self.t[i]);
        let (a, b) = (&self.rows[i], &self.rows[i + 1]);
        let v = |c: usize| a[c] + w * (b[c] - a[c]);
        Ok(SaturationProps {
            rho_l: v(0),
            rho_v: v(1),
            h_l: v(2),
            h_v: v(3),
            p_sat: v(4),
            mu_l: v(5),
            mu_v: v(6),
        })
    }

    pub fn p_sat(&self, temp: f64) -> Result<f64> {
        Ok(self.props(temp)?.p_sat)
    }

    /// Inverse of `p_sat` by bisection.
    pub fn t_sat(&self, p: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.range();
        let (plo, phi) = (self.p_sat(lo)?, self.p_sat(hi)?);
        if !(p >= plo && p <= phi) {
            return Err(Error::Inversion(format!(
                "pressure {p} Pa outside saturation range [{plo}, {phi}] Pa"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.p_sat(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn check_quality(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("vapor quality {x} outside [0, 1]")));
    }
    Ok(())
}

/// `ρ = ρ_Vρ_L / (ρ_V(1−x) + ρ_L x)`.
pub fn mixture_density(temp: f64, x: f64, sat: &SaturationModel) -> Result<f64> {
    check_quality(x)?;
    let s = sat.props(temp)?;
    Ok(mixture_density_from(s.rho_l, s.rho_v, x))
}

pub fn mixture_density_from(rho_l: f64, rho_v: f64, x: f64) -> f64 {
    rho_v * rho_l / (rho_v * (1.0 - x) + rho_l * x)
}

/// `ℋ = ℋ_L(1−x) + ℋ_V x`.
pub fn mixture_enthalpy(temp: f64, x: f64, sat: &SaturationModel) -> Result<f64> {
    check_quality(x)?;
    let s = sat.props(temp)?;
    Ok(s.h_l * (1.0 - x) + s.h_v * x)
}

/// McAdams mixture viscosity `1/μ = x/μ_V + (1−x)/μ_L`.
pub fn mixture_viscosity(x: f64, mu_l: f64, mu_v: f64) -> f64 {
    1.0 / (x / mu_v + (1.0 - x) / mu_l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFlag {
    #[default]
    Saturated,
    Subcooled,
    Superheated,
}

/// Variable that fixes the saturation state during inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SaturationAnchor {
    Temperature(f64),
    Pressure(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateInversion {
    pub temperature: f64,
    pub quality: f64,
    pub density: f64,
    pub pressure: f64,
    pub viscosity: f64,
    pub flag: PhaseFlag,
}

/// Recovers `(T_c, x, ρ, p)` from the specific enthalpy. Enthalpies outside
/// `[ℋ_L, ℋ_V]` are clamped to `x = 0` or `x = 1` and flagged.
pub fn invert_state(h: f64, anchor: SaturationAnchor, sat: &SaturationModel) -> Result<StateInversion> {
    if !h.is_finite() {
        return Err(Error::Inversion(format!("non-finite enthalpy {h}")));
    }
    let temp = match anchor {
        SaturationAnchor::Temperature(t) => t,
        SaturationAnchor::Pressure(p) => sat.t_sat(p)?,
    };
    let s = sat.props(temp).map_err(|e| Error::Inversion(e.to_string()))?;
    let raw = (h - s.h_l) / s.latent_heat();
    // round-off at the phase boundaries is not a clamp
    let (quality, flag) = if raw < -1e-12 {
        (0.0, PhaseFlag::Subcooled)
    } else if raw > 1.0 + 1e-12 {
        (1.0, PhaseFlag::Superheated)
    } else {
        (raw.clamp(0.0, 1.0), PhaseFlag::Saturated)
    };
    Ok(StateInversion {
        temperature: temp,
        quality,
        density: mixture_density_from(s.rho_l, s.rho_v, quality),
        pressure: s.p_sat,
        viscosity: mixture_viscosity(quality, s.mu_l, s.mu_v),
        flag,
    })
}

/// Blasius resistance per unit length `R = 0.3164 Re^{-1/4} |G| / (2 D_h ρ)`
/// with `Re = |G| D_h / μ`, so that the friction gradient is `R·G`.
pub fn blasius_resistance(g: f64, rho: f64, mu: f64, d_h: f64) -> f64 {
    let ga = g.abs();
    if ga == 0.0 {
        return 0.0;
    }
    let re = ga * d_h / mu;
    0.3164 * re.powf(-0.25) * ga / (2.0 * d_h * rho)
}

/// Hagen–Poiseuille resistance `R = 32μ/(ρD_h²)`, independent of `G`.
pub fn laminar_resistance(rho: f64, mu: f64, d_h: f64) -> f64 {
    32.0 * mu / (rho * d_h * d_h)
}

/// `Nu = 0.023 Re^{0.8} Pr^{0.4}`, returned as `h = Nu·k/D`.
pub fn dittus_boelter(re: f64, pr: f64, k: f64, d_h: f64) -> f64 {
    0.023 * re.abs().powf(0.8) * pr.powf(0.4) * k / d_h
}

/// Shah film-condensation coefficient
/// `h_L[(1−x)^{0.8} + 3.8 x^{0.76}(1−x)^{0.04} / p_r^{0.38}]`.
pub fn shah_baseline_h(h_l: f64, x: f64, p_reduced: f64) -> Result<f64> {
    if !(p_reduced > 0.0 && p_reduced < 1.0) {
        return Err(Error::Domain(format!("reduced pressure {p_reduced} outside (0, 1)")));
    }
    check_quality(x)?;
    let om = 1.0 - x;
    Ok(h_l * (om.powf(0.8) + 3.8 * x.powf(0.76) * om.powf(0.04) / p_reduced.powf(0.38)))
}

fn default_k_l() -> f64 {
    0.075
}
fn default_pr_l() -> f64 {
    5.5
}
fn default_k_v() -> f64 {
    0.016
}
fn default_pr_v() -> f64 {
    0.9
}
fn default_p_crit() -> f64 {
    3.651e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeatTransferModel {
    /// Fixed coefficient (W·m⁻²·K⁻¹).
    Constant { h: f64 },
    /// Shah correlation on a Dittus–Boelter liquid-only coefficient, floored
    /// at the vapor-only coefficient.
    ShahBaseline {
        #[serde(default = "default_k_l")]
        k_liquid: f64,
        #[serde(default = "default_pr_l")]
        pr_liquid: f64,
        #[serde(default = "default_k_v")]
        k_vapor: f64,
        #[serde(default = "default_pr_v")]
        pr_vapor: f64,
        #[serde(default = "default_p_crit")]
        p_critical: f64,
    },
}

impl HeatTransferModel {
    pub fn shah_default() -> Self {
        Self::ShahBaseline {
            k_liquid: default_k_l(),
            pr_liquid: default_pr_l(),
            k_vapor: default_k_v(),
            pr_vapor: default_pr_v(),
            p_critical: default_p_crit(),
        }
    }

    /// Coefficient for mass flux `g`, quality `x` in a channel of diameter `d_h`.
    pub fn coefficient(&self, g: f64, x: f64, d_h: f64, s: &SaturationProps) -> Result<f64> {
        match *self {
            Self::Constant { h } => Ok(h),
            Self::ShahBaseline {
                k_liquid,
                pr_liquid,
                k_vapor,
                pr_vapor,
                p_critical,
            } => {
                let h_lo = dittus_boelter(g * d_h / s.mu_l, pr_liquid, k_liquid, d_h);
                let h_vo = dittus_boelter(g * d_h / s.mu_v, pr_vapor, k_vapor, d_h);
                let h = shah_baseline_h(h_lo, x, s.p_sat / p_critical)?;
                Ok(h.max(h_vo))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionModel {
    #[default]
    Blasius,
    Laminar,
}

impl FrictionModel {
    pub fn resistance(&self, g: f64, rho: f64, mu: f64, d_h: f64) -> f64 {
        match self {
            Self::Blasius => blasius_resistance(g, rho, mu, d_h),
            Self::Laminar => laminar_resistance(rho, mu, d_h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AirVelocityModel {
    /// Fixed air speed (m/s).
    Constant { speed: f64 },
    /// Chimney-type buoyant channel flow `V = C·sqrt(g·ΔT·H/T_in)` driven by the
    /// mean panel-to-inlet temperature difference.
    NaturalConvection {
        #[serde(default = "default_chimney")]
        coefficient: f64,
    },
}

fn default_chimney() -> f64 {
    0.3
}

impl AirVelocityModel {
    /// Air speed for mean panel temperature `t_wall`, inlet temperature
    /// `t_in` and panel height `height`.
    pub fn speed(&self, t_wall: f64, t_in: f64, height: f64) -> f64 {
        match *self {
            Self::Constant { speed } => speed,
            Self::NaturalConvection { coefficient } => {
                let dt = (t_wall - t_in).max(0.0);
                // small floor keeps the air equation advective at zero load
                (coefficient * (9.81 * dt * height / t_in).sqrt()).max(1e-3)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub heat_transfer: HeatTransferModel,
    #[serde(default)]
    pub friction: FrictionModel,
    pub air_velocity: AirVelocityModel,
}

impl Default for CorrelationSet {
    fn default() -> Self {
        Self {
            heat_transfer: HeatTransferModel::Constant { h: 3.0 },
            friction: FrictionModel::Blasius,
            air_velocity: AirVelocityModel::Constant { speed: 1.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> SaturationModel {
        SaturationModel::r245fa()
    }

    #[test]
    fn bundled_table_is_consistent() {
        let m = model();
        assert_eq!(m.range(), (290.0, 370.0));
        m.validate().unwrap();
    }

    #[test]
    fn density_limits() {
        let m = model();
        let s = m.props(330.0).unwrap();
        assert_relative_eq!(mixture_density(330.0, 0.0, &m).unwrap(), s.rho_l, max_relative = 1e-14);
        assert_relative_eq!(mixture_density(330.0, 1.0, &m).unwrap(), s.rho_v, max_relative = 1e-14);
        assert_relative_eq!(mixture_density_from(1000.0, 10.0, 0.5), 10000.0 / 505.0, max_relative = 1e-14);
        assert!(matches!(mixture_density(400.0, 0.5, &m), Err(Error::PropertyRange { .. })));
        assert!(matches!(mixture_density(330.0, 1.5, &m), Err(Error::Domain(_))));
    }

    #[test]
    fn enthalpy_limits() {
        let m = model();
        let s = m.props(350.0).unwrap();
        assert_relative_eq!(mixture_enthalpy(350.0, 0.0, &m).unwrap(), s.h_l, max_relative = 1e-14);
        assert_relative_eq!(mixture_enthalpy(350.0, 1.0, &m).unwrap(), s.h_v, max_relative = 1e-14);
        let blend = 200e3 * 0.75 + 430e3 * 0.25;
        assert_relative_eq!(blend, 257.5e3, max_relative = 1e-15);
    }

    #[test]
    fn inversion_cases() {
        let m = model();
        let t0 = 358.15;
        let s = m.props(t0).unwrap();
        let r = invert_state(s.h_l, SaturationAnchor::Temperature(t0), &m).unwrap();
        assert_eq!((r.temperature, r.quality, r.flag), (t0, 0.0, PhaseFlag::Saturated));
        let r = invert_state(0.5 * (s.h_l + s.h_v), SaturationAnchor::Temperature(t0), &m).unwrap();
        assert_relative_eq!(r.quality, 0.5, max_relative = 1e-14);
        let r = invert_state(s.h_l - 1e3, SaturationAnchor::Temperature(t0), &m).unwrap();
        assert_eq!((r.quality, r.flag), (0.0, PhaseFlag::Subcooled));
        let r = invert_state(s.h_v + 1e3, SaturationAnchor::Temperature(t0), &m).unwrap();
        assert_eq!((r.quality, r.flag), (1.0, PhaseFlag::Superheated));
        assert!(matches!(
            invert_state(s.h_l, SaturationAnchor::Pressure(1.0), &m),
            Err(Error::Inversion(_))
        ));
    }

    #[test]
    fn round_trip_random_states() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t: f64 = rng.gen_range(290.0..370.0);
            let x: f64 = rng.gen_range(0.0..=1.0);
            let h = mixture_enthalpy(t, x, &m).unwrap();
            let p = m.p_sat(t).unwrap();
            let r = invert_state(h, SaturationAnchor::Pressure(p), &m).unwrap();
            assert!((r.temperature - t).abs() <= 1e-8 * t);
            assert!((r.quality - x).abs() <= 1e-8 * x.max(1e-3));
        }
    }

    #[test]
    fn blasius_properties() {
        assert_eq!(blasius_resistance(0.0, 50.0, 1e-5, 0.005), 0.0);
        let r1 = blasius_resistance(3.0, 50.0, 1e-5, 0.005);
        let r2 = blasius_resistance(6.0, 50.0, 1e-5, 0.005);
        assert_relative_eq!(r2 / r1, 2f64.powf(0.75), max_relative = 1e-13);
        assert!(blasius_resistance(-1e-3, 50.0, 1e-5, 0.005) > 0.0);
    }

    #[test]
    fn shah_limits() {
        assert_relative_eq!(shah_baseline_h(120.0, 0.0, 0.2).unwrap(), 120.0);
        assert_eq!(shah_baseline_h(120.0, 1.0, 0.2).unwrap(), 0.0);
        assert!(shah_baseline_h(1.0, 0.5, 1.2).is_err());
        let mut last = shah_baseline_h(1.0, 0.0, 0.1).unwrap();
        for i in 1..=90 {
            let v = shah_baseline_h(1.0, i as f64 * 0.01, 0.1).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn shah_model_is_floored_at_vapor_coefficient() {
        let m = model();
        let s = m.props(358.15).unwrap();
        let hm = HeatTransferModel::shah_default();
        let h1 = hm.coefficient(5.8, 1.0, 0.005, &s).unwrap();
        assert!(h1 > 0.0);
        assert!(hm.coefficient(5.8, 0.9, 0.005, &s).unwrap() > h1);
    }

    #[test]
    fn natural_convection_speed() {
        let v = AirVelocityModel::NaturalConvection { coefficient: 0.3 };
        let s = v.speed(330.0, 298.15, 0.2);
        let oracle = 0.3 * (9.81 * 31.85 * 0.2 / 298.15f64).sqrt();
        assert_relative_eq!(s, oracle, max_relative = 1e-14);
        assert_eq!(AirVelocityModel::Constant { speed: 1.0 }.speed(400.0, 298.0, 0.2), 1.0);
    }

    proptest! {
        #[test]
        fn density_is_bounded(t in 290.0f64..370.0, x in 0.0f64..=1.0) {
            let m = model();
            let s = m.props(t).unwrap();
            let rho = mixture_density(t, x, &m).unwrap();
            prop_assert!(rho >= s.rho_v * (1.0 - 1e-14) && rho <= s.rho_l * (1.0 + 1e-14));
        }

        #[test]
        fn enthalpy_increases_with_quality(t in 290.0f64..370.0, x in 0.0f64..0.99) {
            let m = model();
            prop_assert!(mixture_enthalpy(t, x + 0.01, &m).unwrap() > mixture_enthalpy(t, x, &m).unwrap());
        }

        #[test]
        fn temperature_anchor_round_trip(t in 290.0f64..370.0, x in 0.0f64..=1.0) {
            let m = model();
            let h = mixture_enthalpy(t, x, &m).unwrap();
            let r = invert_state(h, SaturationAnchor::Temperature(t), &m).unwrap();
            prop_assert!((r.quality - x).abs() <= 1e-8 * x.max(1e-3));
        }
    }
}
