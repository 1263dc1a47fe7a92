//! Vertical averaging of the air slab: characteristic lengths `λ₁`, `λ₂`
//! from the shape functions `Z`, `B`, the scaled 2D coefficients, and the
//! power-law air conductivity.

use crate::error::{Error, Result};
use crate::quadrature::composite;
use serde::{Deserialize, Serialize};

/// Vertical profile on `[0, S/2]`, written in `ξ = z/S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `1`
    #[default]
    Constant,
    /// `1 − 2ξ`, vanishing at the mid-plane.
    Linear,
    /// `4ξ(1 − ξ)`, plane channel flow with unit peak at the mid-plane.
    Parabolic,
}

impl Shape {
    pub fn eval(&self, z: f64, s: f64) -> f64 {
        let xi = z / s;
        match self {
            Shape::Constant => 1.0,
            Shape::Linear => 1.0 - 2.0 * xi,
            Shape::Parabolic => 4.0 * xi * (1.0 - xi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionSpec {
    /// Panel pitch `S` (m).
    pub pitch: f64,
    /// Conductivity exponent.
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub temperature_shape: Shape,
    #[serde(default)]
    pub velocity_shape: Shape,
}

impl Default for ReductionSpec {
    fn default() -> Self {
        Self {
            pitch: 0.05,
            exponent: 0.0,
            temperature_shape: Shape::Constant,
            velocity_shape: Shape::Constant,
        }
    }
}

impl ReductionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch > 0.0) || !self.pitch.is_finite() {
            return Err(Error::Config(format!("pitch must be positive, got {}", self.pitch)));
        }
        if !self.exponent.is_finite() {
            return Err(Error::Config("conductivity exponent must be finite".into()));
        }
        if (self.temperature_shape.eval(0.0, self.pitch) - 1.0).abs() > 1e-12 {
            return Err(Error::Config("temperature shape must equal 1 at the wall".into()));
        }
        Ok(())
    }
}

fn integrate(f: impl Fn(f64) -> f64, b: f64, parts: usize) -> Result<f64> {
    let mut sum = 0.0;
    for (z, w) in composite(0.0, b, parts, 8) {
        let v = f(z);
        if !v.is_finite() {
            return Err(Error::Domain(format!("shape integrand is not finite at z = {z}")));
        }
        sum += w * v;
    }
    Ok(sum)
}

/// `λ₁ = ∫ Z^{β+1}`, `λ₂ = ∫ Z·B` over `[0, S/2]`, composite Gauss with
/// `parts` sub-intervals of 8 points.
pub fn reduction_coefficients(spec: &ReductionSpec, parts: usize) -> Result<(f64, f64)> {
    spec.validate()?;
    let s = spec.pitch;
    let zf = |z: f64| spec.temperature_shape.eval(z, s);
    let bf = |z: f64| spec.velocity_shape.eval(z, s);
    let l1 = integrate(|z| zf(z).max(0.0).powf(spec.exponent + 1.0), s / 2.0, parts.max(1))?;
    let l2 = integrate(|z| zf(z) * bf(z), s / 2.0, parts.max(1))?;
    if !(l1 > 0.0) || !(l2 > 0.0) {
        return Err(Error::Domain(format!("characteristic lengths must be positive, got {l1}, {l2}")));
    }
    Ok((l1, l2))
}

/// `ĥ = h/λ₁`, `v̂ = (λ₂/λ₁)·V`.
pub fn effective_coefficients(l1: f64, l2: f64, h: f64, v: f64) -> Result<(f64, f64)> {
    if !(l1 > 0.0) {
        return Err(Error::Domain(format!("λ₁ must be positive, got {l1}")));
    }
    Ok((h / l1, l2 / l1 * v))
}

/// `k₀(T/u₀)^β`.
pub fn power_law_conductivity(k0: f64, u0: f64, exponent: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    if !(u0 > 0.0) {
        return Err(Error::Domain(format!("reference temperature must be positive, got {u0}")));
    }
    Ok(k0 * (t / u0).powf(exponent))
}

/// `dk/dT` of [`power_law_conductivity`].
pub fn power_law_derivative(k0: f64, u0: f64, exponent: f64, t: f64) -> f64 {
    k0 * exponent / u0 * (t / u0).powf(exponent - 1.0)
}
