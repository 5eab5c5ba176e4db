//! Scenario files: a network, an observation grid, and optional simulation
//! and mark settings, loaded from a single JSON document.
//!
//! The network diagram behind [`NetworkConfig`] has five arches: `a` carries
//! contributor arrivals, `b` routes contributor completions into the pension
//! node, `c` lets the remaining completions leave, `d` carries external
//! pensioner arrivals, and `e` is the pension exit. Setting `p = 0`, `p = 1`
//! or `lambda_b = 0` suppresses an arch; these are legal degenerate
//! configurations and are reported as notices, not errors.

use serde::{Deserialize, Serialize};

use crate::equilibrium::MeanValueFunction;
use crate::error::{Error, Result};
use crate::transient::NetworkConfig;

/// Observation grid: either an even subdivision of `(0, t_max]` or an
/// explicit list of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    /// `t_i = i * t_max / steps` for `i = 1..=steps`; zero is excluded
    /// because every curve starts there identically.
    Range { t_max: f64, steps: u32 },
    Explicit { times: Vec<f64> },
}

impl GridSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            GridSpec::Range { t_max, steps } => {
                if !(t_max.is_finite() && *t_max > 0.0) {
                    out.push(format!("grid.t_max must be finite and > 0, got {t_max}"));
                }
                if *steps == 0 {
                    out.push("grid.steps must be >= 1".to_string());
                }
            }
            GridSpec::Explicit { times } => {
                if times.is_empty() {
                    out.push("grid.times must not be empty".to_string());
                }
                let mut prev = f64::NEG_INFINITY;
                for &t in times {
                    if !t.is_finite() || t < 0.0 {
                        out.push(format!("grid.times entries must be finite and >= 0, got {t}"));
                        break;
                    }
                    if t <= prev {
                        out.push(format!(
                            "grid.times must be strictly increasing, got {t} after {prev}"
                        ));
                        break;
                    }
                    prev = t;
                }
            }
        }
        out
    }

    /// Materialize the grid. Assumes validation has passed.
    pub fn times(&self) -> Vec<f64> {
        match self {
            GridSpec::Range { t_max, steps } => (1..=*steps)
                .map(|i| i as f64 * t_max / *steps as f64)
                .collect(),
            GridSpec::Explicit { times } => times.clone(),
        }
    }
}

/// Replication budget and seed for the simulation commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub replications: usize,
    pub seed: u64,
}

/// Mark functions for the contribution and pension flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanValues {
    pub m_a: MeanValueFunction,
    pub m_b: MeanValueFunction,
}

/// A complete scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: NetworkConfig,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_values: Option<MeanValues>,
}

impl Scenario {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Every constraint violation in the document, one message each, so a
    /// user can fix the whole file in one pass.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let rate = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("network.{name} must be finite and >= 0, got {v}"));
            }
        };
        rate("lambda_a", self.network.lambda_a, &mut out);
        rate("lambda_b", self.network.lambda_b, &mut out);
        if !(self.network.p.is_finite() && (0.0..=1.0).contains(&self.network.p)) {
            out.push(format!(
                "network.p must lie in [0, 1], got {}",
                self.network.p
            ));
        }
        if let Err(e) = self.network.service_a.validate() {
            out.push(format!("network.service_a: {e}"));
        }
        if let Err(e) = self.network.service_b.validate() {
            out.push(format!("network.service_b: {e}"));
        }
        out.extend(self.grid.violations());
        if let Some(sim) = &self.simulation {
            if sim.replications == 0 {
                out.push("simulation.replications must be >= 1".to_string());
            }
        }
        if let Some(mv) = &self.mean_values {
            if let Err(e) = mv.m_a.validate() {
                out.push(format!("mean_values.m_a: {e}"));
            }
            if let Err(e) = mv.m_b.validate() {
                out.push(format!("mean_values.m_b: {e}"));
            }
        }
        out
    }

    /// First violation as an error, for callers that just need a gate.
    pub fn validate(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange(violations.join("; ")))
        }
    }

    /// Informational notes about suppressed arches. These configurations
    /// are valid; the notes explain which flows are structurally absent.
    pub fn notices(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.network.lambda_a == 0.0 {
            out.push(
                "arch a suppressed: no contributor arrivals (lambda_a = 0)".to_string(),
            );
        }
        if self.network.p == 0.0 {
            out.push(
                "arch b suppressed: contributor completions never enter the pension node (p = 0)"
                    .to_string(),
            );
        }
        if self.network.p == 1.0 {
            out.push(
                "arch c suppressed: every contributor completion enters the pension node (p = 1)"
                    .to_string(),
            );
        }
        if self.network.lambda_b == 0.0 {
            out.push(
                "arch d suppressed: no external pensioner arrivals (lambda_b = 0)".to_string(),
            );
        }
        out
    }

    pub fn grid_times(&self) -> Vec<f64> {
        self.grid.times()
    }
}

// ============================================================
// Tests
// ============================================================
