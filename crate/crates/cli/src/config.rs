//! Declarative run configuration: TOML schema and conversion into solver
//! types. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use circstab::dispersion::Branch;
use circstab::mode_search::{RegionSource, SearchRegion, ETA_FLOOR};
use circstab::profiles::{AngularProfile, Domain, ProblemSetup};
use circstab::rayleigh::SolveOptions;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Option<String>,
    pub setup: Option<SetupSpec>,
    pub mode: Option<ModeSpec>,
    pub region: Option<RegionSpec>,
    pub tolerances: Option<ToleranceSpec>,
    pub critical_layer: Option<CriticalLayerSpec>,
    pub scaling: Option<ScalingSpec>,
    pub sweep: Option<SweepSpec>,
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSpec {
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub alpha: f64,
    pub r_in: f64,
    /// `inf` selects an exterior outer region.
    pub r_out: f64,
    pub profile_plus: ProfileSpec,
    pub profile_minus: ProfileSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    /// One of `constant`, `taylor-couette`, `piecewise-outer`, `tabulated`.
    pub kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub omega_star: Option<f64>,
    pub s_star: Option<f64>,
    pub nodes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Option<i32>,
    /// Inclusive range, e.g. `[2, 8]`.
    pub k_range: Option<[i32; 2]>,
    /// Initial guess `[re, im]` for `solve-mode`.
    pub c0: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

/// Effective numeric settings embedded in every output file.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EffectiveTolerances {
    pub rtol: f64,
    pub atol: f64,
    pub acceptance_rel: f64,
    pub eta_floor: f64,
}

impl EffectiveTolerances {
    pub fn from_spec(spec: Option<&ToleranceSpec>) -> Self {
        let defaults = SolveOptions::default();
        Self {
            rtol: spec.and_then(|t| t.rtol).unwrap_or(defaults.rtol),
            atol: spec.and_then(|t| t.atol).unwrap_or(defaults.atol),
            acceptance_rel: circstab::dispersion::ACCEPTANCE_REL,
            eta_floor: ETA_FLOOR,
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { rtol: self.rtol, atol: self.atol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalLayerSpec {
    /// `plus` or `minus`.
    pub branch: String,
    pub epsilon: f64,
    pub eta_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub omega_star: f64,
    pub b: f64,
    pub big_b: f64,
    pub alpha: f64,
    pub rho_plus: f64,
    pub k: i32,
    /// Calibrated automatically when absent.
    pub s_star: Option<f64>,
    pub eps_min: f64,
    pub eps_max: f64,
    pub points_per_decade: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    /// One of: `k`, `eps`, `alpha`, `plus.a`, `plus.b`, `minus.a`,
    /// `minus.b`, `minus.omega_star`, `minus.s_star`.
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug)]
pub enum ConfigError {
    Validation(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Validation(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Validation(msg.into()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Validation(format!("config parse error: {e}")))?;
        if cfg.schema_version != 1 {
            return err(format!("unsupported schema_version {}", cfg.schema_version));
        }
        Ok(cfg)
    }
}

impl ProfileSpec {
    fn reject_extra(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        let mut extra = Vec::new();
        if self.a.is_some() && !allowed.contains(&"a") {
            extra.push("a");
        }
        if self.b.is_some() && !allowed.contains(&"b") {
            extra.push("b");
        }
        if self.omega_star.is_some() && !allowed.contains(&"omega_star") {
            extra.push("omega_star");
        }
        if self.s_star.is_some() && !allowed.contains(&"s_star") {
            extra.push("s_star");
        }
        if self.nodes.is_some() && !allowed.contains(&"nodes") {
            extra.push("nodes");
        }
        if extra.is_empty() {
            Ok(())
        } else {
            err(format!("profile kind '{}' does not accept fields {extra:?}", self.kind))
        }
    }

    pub fn build(&self, domain: Domain) -> Result<AngularProfile, ConfigError> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| ConfigError::Validation(format!("profile kind '{}' needs field '{name}'", self.kind)))
        };
        match self.kind.as_str() {
            "constant" => {
                self.reject_extra(&["b"])?;
                Ok(AngularProfile::constant(need(self.b, "b")?, domain))
            }
            "taylor-couette" => {
                self.reject_extra(&["a", "b"])?;
                AngularProfile::taylor_couette(need(self.a, "a")?, need(self.b, "b")?, domain)
                    .map_err(|e| ConfigError::Validation(e.to_string()))
            }
            "piecewise-outer" => {
                self.reject_extra(&["omega_star", "b", "s_star"])?;
                AngularProfile::piecewise_outer(
                    need(self.omega_star, "omega_star")?,
                    need(self.b, "b")?,
                    need(self.s_star, "s_star")?,
                    domain,
                )
                .map_err(|e| ConfigError::Validation(e.to_string()))
            }
            "tabulated" => {
                self.reject_extra(&["nodes"])?;
                let nodes = self
                    .nodes
                    .as_ref()
                    .ok_or_else(|| ConfigError::Validation("profile kind 'tabulated' needs field 'nodes'".into()))?;
                let pairs: Vec<(f64, f64)> = nodes.iter().map(|n| (n[0], n[1])).collect();
                let profile = if domain.lo == f64::NEG_INFINITY {
                    AngularProfile::tabulated_disk(&pairs)
                } else {
                    AngularProfile::tabulated(&pairs)
                }
                .map_err(|e| ConfigError::Validation(e.to_string()))?;
                // The node span must realize the requested domain.
                let d = profile.domain();
                let close = |x: f64, y: f64| x == y || (x - y).abs() <= 1e-9 * (1.0 + x.abs().min(y.abs()));
                if !(close(d.lo, domain.lo) && close(d.hi, domain.hi)) {
                    return err(format!(
                        "tabulated nodes span [{}, {}] but the geometry requires [{}, {}]",
                        d.lo, d.hi, domain.lo, domain.hi
                    ));
                }
                Ok(profile)
            }
            other => err(format!(
                "unknown profile kind '{other}' (expected constant, taylor-couette, piecewise-outer, or tabulated)"
            )),
        }
    }
}

impl SetupSpec {
    pub fn build(&self) -> Result<ProblemSetup, ConfigError> {
        if !(0.0..1.0).contains(&self.r_in) {
            return err(format!("r_in = {} must lie in [0, 1)", self.r_in));
        }
        if !(self.r_out > 1.0) {
            return err(format!("r_out = {} must exceed 1", self.r_out));
        }
        let s_in = if self.r_in == 0.0 { f64::NEG_INFINITY } else { self.r_in.ln() };
        let s_out = if self.r_out == f64::INFINITY { f64::INFINITY } else { self.r_out.ln() };
        let plus = self.profile_plus.build(Domain { lo: s_in, hi: 0.0 })?;
        let minus = self.profile_minus.build(Domain { lo: 0.0, hi: s_out })?;
        ProblemSetup::new(self.rho_plus, self.rho_minus, self.alpha, self.r_in, self.r_out, plus, minus)
            .map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

impl ModeSpec {
    pub fn wave_numbers(&self) -> Result<Vec<i32>, ConfigError> {
        match (self.k, self.k_range) {
            (Some(k), None) => {
                if k == 0 {
                    err("k must be nonzero")
                } else {
                    Ok(vec![k])
                }
            }
            (None, Some([lo, hi])) => {
                if lo > hi {
                    return err(format!("k_range [{lo}, {hi}] is empty"));
                }
                Ok((lo..=hi).filter(|&k| k != 0).collect())
            }
            (Some(_), Some(_)) => err("specify either mode.k or mode.k_range, not both"),
            (None, None) => err("missing mode.k or mode.k_range"),
        }
    }
}

impl RegionSpec {
    pub fn build(&self) -> Result<SearchRegion, ConfigError> {
        SearchRegion::user((self.re[0], self.re[1]), (self.im[0], self.im[1]))
            .map_err(|e| ConfigError::Validation(e.to_string()))
    }
}

impl CriticalLayerSpec {
    pub fn branch(&self) -> Result<Branch, ConfigError> {
        match self.branch.as_str() {
            "plus" => Ok(Branch::Plus),
            "minus" => Ok(Branch::Minus),
            other => err(format!("unknown branch '{other}' (expected plus or minus)")),
        }
    }
}

/// Default search region for sweeps and range commands when the config
/// does not pin one: the inflated semicircle box, widened enough to cover
/// the closed-form families even when the angular-velocity range is
/// degenerate.
pub fn default_region(setup: &ProblemSetup, k: i32) -> Result<SearchRegion, ConfigError> {
    let report = circstab::semicircle::bound(setup, k).map_err(|e| ConfigError::Validation(e.to_string()))?;
    let ka = (k.abs() as f64).max(1.0);
    let extent = 1.0
        + 2.0 * report.m.abs().max(report.big_m.abs())
        + report.radius
        + (setup.alpha * (ka + 1.0) / setup.rho_plus).sqrt();
    Ok(SearchRegion {
        re_lo: report.center - extent,
        re_hi: report.center + extent,
        im_lo: ETA_FLOOR,
        im_hi: extent,
        source: RegionSource::SemicircleBound,
    })
}
