//! Scenario configuration: TOML (or JSON) with one flat section per concern.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use afiso_core::radial::RadialAFMetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Flat,
    Schwarzschild,
    /// Schwarzschild with an extra `eps rho^-tau` term in the conformal factor.
    Perturbed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSection {
    pub family: Family,
    pub mass: f64,
    /// Decay rate; also the exponent in `sup |u_sigma| ~ sigma^-tau`.
    pub tau: f64,
    pub eps: f64,
}

impl Default for MetricSection {
    fn default() -> Self {
        Self {
            family: Family::Schwarzschild,
            mass: 1.0,
            tau: 1.0,
            eps: 0.0,
        }
    }
}

/// One term `c P_l^m(cos theta) cos(m phi) + s P_l^m(cos theta) sin(m phi)`,
/// with unnormalised Legendre functions.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicTerm {
    pub l: usize,
    #[serde(default)]
    pub m: usize,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// Terms used as given for every sigma.
    Fixed,
    /// Terms multiplied by `sigma^-tau`.
    Decay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySection {
    pub scaling: Scaling,
    pub term: Vec<HarmonicTerm>,
}

impl Default for BoundarySection {
    fn default() -> Self {
        // (1 + cos theta) / 2
        Self {
            scaling: Scaling::Decay,
            term: vec![
                HarmonicTerm {
                    l: 0,
                    m: 0,
                    cos: 0.5,
                    sin: 0.0,
                },
                HarmonicTerm {
                    l: 1,
                    m: 0,
                    cos: 0.5,
                    sin: 0.0,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub sigma: Vec<f64>,
    /// Explicit smoothing widths; when empty `delta = sigma^-delta_power`.
    pub delta: Vec<f64>,
    pub delta_power: f64,
    pub rho: Vec<f64>,
    /// Offsets |xi| of trial balls, in units of rho.
    pub xi: Vec<f64>,
    /// Radii for ADM extrapolation; empty means `2^5 .. 2^9` times `max(m, 1)`.
    pub adm_radii: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sigma: vec![64.0, 128.0, 256.0],
            delta: Vec::new(),
            delta_power: 4.0,
            rho: vec![100.0, 1000.0, 10000.0],
            xi: vec![0.0, 0.5, 1.0, 2.0],
            adm_radii: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolutionSection {
    /// Gauss-Legendre nodes in theta; the grid is `n_theta x 2 n_theta`.
    pub n_theta: usize,
    pub steps: usize,
    pub outer_steps: usize,
    pub refine: usize,
    pub mc_samples: usize,
}

impl Default for ResolutionSection {
    fn default() -> Self {
        Self {
            n_theta: 32,
            steps: 200,
            outer_steps: 4000,
            refine: 1,
            mc_samples: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub area: f64,
    pub mass_rel: f64,
    pub identity: f64,
    pub exponent: f64,
    pub mc_std_errors: f64,
    pub spike_rel: f64,
    pub ratio: f64,
    pub bound_fraction: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            area: 1e-3,
            mass_rel: 1e-2,
            identity: 1e-3,
            exponent: 0.3,
            mc_std_errors: 3.0,
            spike_rel: 1e-2,
            ratio: 0.875,
            bound_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CenteringSection {
    pub eps0: f64,
}

impl Default for CenteringSection {
    fn default() -> Self {
        Self { eps0: 0.125 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "runs".into() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub metric: MetricSection,
    pub boundary: BoundarySection,
    pub sweep: SweepSection,
    pub resolution: ResolutionSection,
    pub tolerances: ToleranceSection,
    pub centering: CenteringSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Warning,
    Error,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostic {
    pub level: Level,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Warning => "warning",
            Level::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.field, self.message)
    }
}

/// Parses TOML, or JSON when the path ends in `.json`.
pub fn parse(path: &Path, text: &str) -> anyhow::Result<ScenarioConfig> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(text).with_context(|| format!("{}", path.display()))
    } else {
        toml::from_str(text).with_context(|| format!("{}", path.display()))
    }
}

pub fn load(path: &Path) -> anyhow::Result<(ScenarioConfig, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok((parse(path, &text)?, text))
}

impl ScenarioConfig {
    pub fn metric(&self) -> anyhow::Result<RadialAFMetric> {
        let m = &self.metric;
        Ok(match m.family {
            Family::Flat => RadialAFMetric::flat(),
            Family::Schwarzschild => RadialAFMetric::schwarzschild(m.mass),
            Family::Perturbed => RadialAFMetric::perturbed(m.mass, m.eps, m.tau)?,
        })
    }

    /// ADM mass of the configured metric.
    pub fn mass(&self) -> f64 {
        match self.metric.family {
            Family::Flat => 0.0,
            _ => self.metric.mass,
        }
    }

    /// Smoothing widths to use at a given sigma.
    pub fn deltas(&self, sigma: f64) -> Vec<f64> {
        if self.sweep.delta.is_empty() {
            vec![sigma.powf(-self.sweep.delta_power)]
        } else {
            self.sweep.delta.clone()
        }
    }

    pub fn adm_radii(&self) -> Vec<f64> {
        if self.sweep.adm_radii.is_empty() {
            let base = self.mass().max(1.0);
            (5..=9).map(|k| 2f64.powi(k) * base).collect()
        } else {
            self.sweep.adm_radii.clone()
        }
    }

    /// Schema and range checks. Errors make the run invalid; warnings are
    /// recorded and the run proceeds.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut error = |field: &str, message: String| {
            out.push(Diagnostic {
                level: Level::Error,
                field: field.into(),
                message,
            })
        };
        let m = &self.metric;
        if !(m.tau > 0.5) {
            error(
                "metric.tau",
                format!(
                    "decay rate {} below 1/2: the metric is not asymptotically flat",
                    m.tau
                ),
            );
        }
        if !(m.mass >= 0.0) || !m.mass.is_finite() {
            error(
                "metric.mass",
                format!("mass {} must be finite and non-negative", m.mass),
            );
        }
        if m.family != Family::Flat && m.mass == 0.0 {
            error(
                "metric.mass",
                "mass must be positive for this family".into(),
            );
        }
        if !m.eps.is_finite() {
            error("metric.eps", "must be finite".into());
        }
        if self.boundary.term.iter().any(|t| t.m > t.l) {
            error("boundary.term", "order m must not exceed degree l".into());
        }
        if let Some(t) = self
            .boundary
            .term
            .iter()
            .find(|t| 2 * t.l >= self.resolution.n_theta)
        {
            error(
                "boundary.term",
                format!(
                    "degree {} is not resolved by n_theta = {}",
                    t.l, self.resolution.n_theta
                ),
            );
        }
        let positive =
            |name: &str, v: &[f64], allow_empty: bool, error: &mut dyn FnMut(&str, String)| {
                if v.is_empty() && !allow_empty {
                    error(name, "sweep list is empty".into());
                }
                if let Some(x) = v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                    error(name, format!("value {x} must be positive"));
                }
            };
        positive("sweep.sigma", &self.sweep.sigma, false, &mut error);
        positive("sweep.delta", &self.sweep.delta, true, &mut error);
        positive("sweep.rho", &self.sweep.rho, false, &mut error);
        positive("sweep.adm_radii", &self.sweep.adm_radii, true, &mut error);
        if self.sweep.xi.is_empty() {
            error("sweep.xi", "sweep list is empty".into());
        }
        if let Some(x) = self
            .sweep
            .xi
            .iter()
            .find(|x| !(**x >= 0.0) || !x.is_finite())
        {
            error("sweep.xi", format!("offset {x} must be non-negative"));
        }
        if !(self.sweep.delta_power > 0.0) {
            error("sweep.delta_power", "must be positive".into());
        }
        let r = &self.resolution;
        if r.n_theta < 4 {
            error(
                "resolution.n_theta",
                format!("{} is below the minimum 4", r.n_theta),
            );
        }
        if r.steps < 2 {
            error("resolution.steps", "need at least 2 steps".into());
        }
        if r.outer_steps < 16 {
            error("resolution.outer_steps", "need at least 16 steps".into());
        }
        if r.refine == 0 {
            error("resolution.refine", "must be at least 1".into());
        }
        if r.mc_samples < 2 {
            error("resolution.mc_samples", "need at least 2 samples".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.area", t.area),
            ("tolerances.mass_rel", t.mass_rel),
            ("tolerances.identity", t.identity),
            ("tolerances.exponent", t.exponent),
            ("tolerances.mc_std_errors", t.mc_std_errors),
            ("tolerances.spike_rel", t.spike_rel),
            ("tolerances.ratio", t.ratio),
            ("tolerances.bound_fraction", t.bound_fraction),
        ] {
            if !(v > 0.0) {
                error(name, format!("tolerance {v} must be positive"));
            }
        }
        let eps0 = self.centering.eps0;
        if !(eps0 > 0.0 && eps0 < 1.0) {
            error("centering.eps0", format!("{eps0} must lie in (0, 1)"));
        }

        // Regime warnings: the smoothing estimates need delta <~ sigma^-3.
        if self.sweep.delta.is_empty() {
            if self.sweep.delta_power < 3.0 {
                out.push(Diagnostic {
                    level: Level::Warning,
                    field: "sweep.delta_power".into(),
                    message: format!(
                        "delta = sigma^-{} is outside the delta <~ sigma^-3 regime",
                        self.sweep.delta_power
                    ),
                });
            }
        } else {
            for &s in self.sweep.sigma.iter().filter(|s| **s > 0.0) {
                if let Some(d) = self.sweep.delta.iter().find(|d| **d > s.powi(-3)) {
                    out.push(Diagnostic {
                        level: Level::Warning,
                        field: "sweep.delta".into(),
                        message: format!(
                            "delta {d} exceeds sigma^-3 = {:e} at sigma {s}: outside the delta <~ sigma^-3 regime",
                            s.powi(-3)
                        ),
                    });
                }
            }
        }
        out
    }

    /// Validates and fails on the first error-level diagnostic set.
    pub fn check(&self) -> anyhow::Result<Vec<Diagnostic>> {
        let diags = self.validate();
        let errors: Vec<String> = diags
            .iter()
            .filter(|d| d.level == Level::Error)
            .map(|d| d.to_string())
            .collect();
        if !errors.is_empty() {
            bail!(InvalidConfig(errors));
        }
        Ok(diags)
    }
}

/// All error-level diagnostics of a rejected config.
#[derive(Debug)]
pub struct InvalidConfig(pub Vec<String>);

impl fmt::Display for InvalidConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for InvalidConfig {}
