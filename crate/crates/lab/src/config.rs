//! JSON configuration files.
//!
//! A reaction term:
//!
//! ```json
//! { "kind": "stacked",
//!   "intervals": [
//!     { "lower": 0.0, "upper": 0.5, "shape": "monostable", "amplitude": 0.125 },
//!     { "lower": 0.5, "upper": 1.0, "shape": "bistable", "theta": 0.25 } ],
//!   "modulation_eps": 0.0, "period_L": 1.0 }
//! ```
//!
//! `kind` is one of `kpp`, `bistable`, `ignition`, `stacked`, `zero`,
//! `series`. For `series`, `fourier_coeffs[j]` is the flat trigonometric
//! series `[a0, a1, b1, a2, b2, ...]` of the coefficient of `u^(j+1)`.
//!
//! A diffusion coefficient is `{ "value": 1.0 }` or
//! `{ "fourier_coeffs": [1.0, 0.2, 0.0] }`, with an optional `period_L`.
//!
//! Unknown fields are rejected everywhere.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use terrace_core::model::{
    build_nonlinearity, IntervalShape, IntervalSpec, Nonlinearity, NonlinearitySpec, PeriodicCoefficient, Preset,
    TrigSeries,
};
use terrace_core::terrace::{Datum, TerraceConfig};

fn default_period() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Kpp,
    Bistable,
    Ignition,
    Stacked,
    Zero,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Bistable,
    Monostable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub lower: f64,
    pub upper: f64,
    pub shape: ShapeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

impl IntervalConfig {
    pub fn bistable(lower: f64, upper: f64, theta: f64, amplitude: f64) -> Self {
        Self { lower, upper, shape: ShapeName::Bistable, theta: Some(theta), amplitude }
    }

    pub fn monostable(lower: f64, upper: f64, amplitude: f64) -> Self {
        Self { lower, upper, shape: ShapeName::Monostable, theta: None, amplitude }
    }

    pub fn spec(&self) -> Result<IntervalSpec> {
        let shape = match (self.shape, self.theta) {
            (ShapeName::Bistable, Some(theta)) => IntervalShape::Bistable { theta },
            (ShapeName::Bistable, None) => bail!("bistable interval [{}, {}] needs theta", self.lower, self.upper),
            (ShapeName::Monostable, None) => IntervalShape::Monostable,
            (ShapeName::Monostable, Some(_)) => bail!("monostable interval takes no theta"),
        };
        Ok(IntervalSpec { lower: self.lower, upper: self.upper, shape, amplitude: self.amplitude })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<IntervalConfig>>,
    #[serde(default)]
    pub modulation_eps: f64,
    #[serde(rename = "period_L", default = "default_period")]
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier_coeffs: Option<Vec<Vec<f64>>>,
}

impl NonlinearityConfig {
    pub fn new(kind: Kind) -> Self {
        Self { kind, theta: None, intervals: None, modulation_eps: 0.0, period: 1.0, fourier_coeffs: None }
    }

    pub fn bistable(theta: f64) -> Self {
        Self { theta: Some(theta), ..Self::new(Kind::Bistable) }
    }

    pub fn stacked(intervals: Vec<IntervalConfig>) -> Self {
        Self { intervals: Some(intervals), ..Self::new(Kind::Stacked) }
    }

    pub fn spec(&self) -> Result<NonlinearitySpec> {
        let theta = || self.theta.with_context(|| format!("kind {:?} needs theta", self.kind));
        let unused = |present: bool, field: &str| -> Result<()> {
            if present {
                bail!("field {field} does not apply to kind {:?}", self.kind);
            }
            Ok(())
        };
        let preset = match self.kind {
            Kind::Kpp | Kind::Zero => {
                unused(self.theta.is_some(), "theta")?;
                unused(self.intervals.is_some(), "intervals")?;
                unused(self.fourier_coeffs.is_some(), "fourier_coeffs")?;
                if self.kind == Kind::Kpp {
                    Preset::Kpp
                } else {
                    Preset::Zero
                }
            }
            Kind::Bistable | Kind::Ignition => {
                unused(self.intervals.is_some(), "intervals")?;
                unused(self.fourier_coeffs.is_some(), "fourier_coeffs")?;
                if self.kind == Kind::Bistable {
                    Preset::Bistable { theta: theta()? }
                } else {
                    Preset::Ignition { theta: theta()? }
                }
            }
            Kind::Stacked => {
                unused(self.theta.is_some(), "theta")?;
                unused(self.fourier_coeffs.is_some(), "fourier_coeffs")?;
                let pieces = self.intervals.as_ref().context("kind stacked needs intervals")?;
                Preset::Stacked(pieces.iter().map(IntervalConfig::spec).collect::<Result<_>>()?)
            }
            Kind::Series => {
                unused(self.theta.is_some(), "theta")?;
                unused(self.intervals.is_some(), "intervals")?;
                Preset::Series(self.fourier_coeffs.clone().context("kind series needs fourier_coeffs")?)
            }
        };
        Ok(NonlinearitySpec { preset, modulation_eps: self.modulation_eps, period: self.period, lipschitz_hint: None })
    }

    pub fn build(&self) -> Result<Nonlinearity> {
        Ok(build_nonlinearity(&self.spec()?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier_coeffs: Option<Vec<f64>>,
    #[serde(rename = "period_L", default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { value: Some(1.0), fourier_coeffs: None, period: None }
    }
}

impl CoefficientConfig {
    pub fn series(coeffs: &[f64]) -> Self {
        Self { value: None, fourier_coeffs: Some(coeffs.to_vec()), period: None }
    }

    /// Builds the coefficient on the period of the reaction term.
    pub fn build(&self, period: f64) -> Result<PeriodicCoefficient> {
        if let Some(p) = self.period {
            if (p - period).abs() > 1e-12 {
                bail!("coefficient period {p} differs from the reaction period {period}");
            }
        }
        Ok(match (self.value, &self.fourier_coeffs) {
            (Some(v), None) => PeriodicCoefficient::constant(period, v)?,
            (None, Some(c)) => PeriodicCoefficient::series(period, TrigSeries::from_flat(c)?)?,
            _ => bail!("give exactly one of value and fourier_coeffs for the diffusion coefficient"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "NumericsConfig::default_dx")]
    pub dx: f64,
    /// Explicit time step; by default a fraction of `1 / Lip f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "NumericsConfig::default_dt_fraction")]
    pub dt_fraction: f64,
    #[serde(rename = "T", default = "NumericsConfig::default_horizon")]
    pub horizon: f64,
    /// Periods on each side of the origin.
    #[serde(default = "NumericsConfig::default_domain")]
    pub domain_periods: usize,
    /// Implicitness of the diffusion step.
    #[serde(default = "NumericsConfig::default_theta")]
    pub theta: f64,
}

impl NumericsConfig {
    fn default_dx() -> f64 {
        0.02
    }
    fn default_dt_fraction() -> f64 {
        0.05
    }
    fn default_horizon() -> f64 {
        100.0
    }
    fn default_domain() -> usize {
        100
    }
    fn default_theta() -> f64 {
        1.0
    }

    pub fn terrace_config(&self) -> TerraceConfig {
        TerraceConfig {
            dx: self.dx,
            dt: self.dt,
            dt_fraction: self.dt_fraction,
            horizon: self.horizon,
            periods_left: self.domain_periods,
            periods_right: self.domain_periods,
            theta_scheme: self.theta,
            datum: Datum::Heaviside { x0: 0.0 },
            ..TerraceConfig::default()
        }
    }
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dx: Self::default_dx(),
            dt: None,
            dt_fraction: Self::default_dt_fraction(),
            horizon: Self::default_horizon(),
            domain_periods: Self::default_domain(),
            theta: Self::default_theta(),
        }
    }
}

/// Everything needed to run one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub coefficient: CoefficientConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    /// Constant initial guess for the top state.
    #[serde(default = "ProblemConfig::default_top_guess")]
    pub top_guess: f64,
}

impl ProblemConfig {
    fn default_top_guess() -> f64 {
        1.0
    }

    pub fn new(nonlinearity: NonlinearityConfig) -> Self {
        Self {
            nonlinearity,
            coefficient: CoefficientConfig::default(),
            numerics: NumericsConfig::default(),
            top_guess: Self::default_top_guess(),
        }
    }

    pub fn cells(&self) -> Result<usize> {
        Ok(terrace_core::model::Grid::cells_for_spacing(self.nonlinearity.period, self.numerics.dx)?)
    }

    pub fn build(&self) -> Result<(Nonlinearity, PeriodicCoefficient)> {
        let nl = self.nonlinearity.build()?;
        let a = self.coefficient.build(self.nonlinearity.period)?;
        Ok((nl, a))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stacked_round_trip() {
        let text = r#"{ "kind": "stacked", "intervals": [
            { "lower": 0.0, "upper": 0.5, "shape": "monostable", "amplitude": 0.125 },
            { "lower": 0.5, "upper": 1.0, "shape": "bistable", "theta": 0.25 } ] }"#;
        let cfg: NonlinearityConfig = serde_json::from_str(text).unwrap();
        let nl = cfg.build().unwrap();
        assert!(nl.f(0.0, 0.5).abs() < 1e-12);
        let back: NonlinearityConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<NonlinearityConfig>(r#"{ "kind": "kpp", "thetta": 0.2 }"#).is_err());
        assert!(serde_json::from_str::<CoefficientConfig>(r#"{ "value": 1.0, "scale": 2 }"#).is_err());
        assert!(serde_json::from_str::<ProblemConfig>(r#"{ "nonlinearity": { "kind": "kpp" }, "extra": 1 }"#).is_err());
    }

    #[test]
    fn misplaced_fields_are_errors() {
        let cfg: NonlinearityConfig = serde_json::from_str(r#"{ "kind": "kpp", "theta": 0.2 }"#).unwrap();
        assert!(cfg.build().is_err());
        let cfg: NonlinearityConfig = serde_json::from_str(r#"{ "kind": "bistable" }"#).unwrap();
        assert!(cfg.build().is_err());
    }

    #[test]
    fn series_and_coefficients() {
        let cfg: NonlinearityConfig =
            serde_json::from_str(r#"{ "kind": "series", "fourier_coeffs": [[1.0, 0.0, 0.5], [-1.0]], "period_L": 2.0 }"#)
                .unwrap();
        let nl = cfg.build().unwrap();
        // f = (1 + 0.5 sin(pi x)) u - u^2
        assert!((nl.f(0.5, 0.5) - (1.5 * 0.5 - 0.25)).abs() < 1e-12);
        let a: CoefficientConfig = serde_json::from_str(r#"{ "fourier_coeffs": [1.0, 0.2] }"#).unwrap();
        assert!((a.build(2.0).unwrap().eval(0.0) - 1.2).abs() < 1e-12);
        let both: CoefficientConfig = serde_json::from_str(r#"{ "value": 1.0, "fourier_coeffs": [1.0] }"#).unwrap();
        assert!(both.build(1.0).is_err());
    }
}
