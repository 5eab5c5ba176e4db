//! Service time laws for the two fund nodes.
//!
//! Five families are supported. Each knows its cdf, the exact running
//! survival integral `integral_0^t (1 - cdf(v)) dv` that drives every
//! occupancy formula, its mean, its quantile function (used for inversion
//! sampling), and the time points where its cdf has kinks or atoms (used to
//! pre-split quadrature panels).
//!
//! Conventions:
//! - `cdf(v) = 0` for `v < 0`; an atom at the origin shows up as `cdf(0) > 0`.
//! - Sampling is inversion through the quantile function, so one uniform
//!   draw per sample regardless of family, and atoms receive exactly their
//!   cdf mass.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A service time law.
///
/// The `special` family has survival
/// `1 - G(v) = (1 - e^{-rho}) (gamma + beta) / (gamma e^{-rho} (e^{(gamma+beta) v} - 1) + gamma)`
/// for `v >= 0`, mean `rho / gamma`, and an atom at the origin of mass
/// `cdf(0) = 1 - (1 - e^{-rho})(gamma + beta) / gamma` whenever `beta` sits
/// strictly below its upper bound `gamma / (e^{rho} - 1)`. At the permitted
/// lower boundary `beta = -gamma` the survival vanishes identically, so the
/// law degenerates to a unit mass at 0 and the mean is 0 rather than
/// `rho / gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServiceDistribution {
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Uniform on `[0, 2 * mean]`; the mean pins the support.
    #[serde(rename = "uniform")]
    UniformOnDoubleMean { mean: f64 },
    /// Three-parameter family described above.
    #[serde(rename = "special")]
    SpecialFamily { gamma: f64, beta: f64, rho: f64 },
    /// Unit mass at a single duration.
    Deterministic {
        #[serde(rename = "mean")]
        value: f64,
    },
    /// Piecewise-linear cdf through `(time, probability)` knots.
    ///
    /// The cdf is 0 strictly before the first knot (a first knot with
    /// positive probability is therefore an atom), linear between knots, and
    /// the last probability must be exactly 1 so the mean is finite.
    #[serde(rename = "table")]
    EmpiricalTable { knots: Vec<(f64, f64)> },
}

use ServiceDistribution::*;

impl ServiceDistribution {
    /// Short family name, matching the scenario-file `type` tag.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Exponential { .. } => "exponential",
            UniformOnDoubleMean { .. } => "uniform",
            SpecialFamily { .. } => "special",
            Deterministic { .. } => "deterministic",
            EmpiricalTable { .. } => "table",
        }
    }

    /// Check every parameter constraint, naming the violated one on failure.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ParameterOutOfRange(msg));
        match self {
            Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad(format!("exponential mean must be finite and > 0, got {mean}"));
                }
            }
            UniformOnDoubleMean { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return bad(format!("uniform mean must be finite and > 0, got {mean}"));
                }
            }
            SpecialFamily { gamma, beta, rho } => {
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return bad(format!("special gamma must be finite and > 0, got {gamma}"));
                }
                if !(rho.is_finite() && *rho > 0.0) {
                    return bad(format!("special rho must be finite and > 0, got {rho}"));
                }
                if !beta.is_finite() {
                    return bad(format!("special beta must be finite, got {beta}"));
                }
                if *beta < -*gamma {
                    return bad(format!(
                        "special beta must satisfy beta >= -gamma, got beta = {beta}, gamma = {gamma}"
                    ));
                }
                let upper = gamma / rho.exp_m1();
                if *beta > upper {
                    return bad(format!(
                        "special beta must satisfy beta <= gamma / (e^rho - 1) = {upper}, got {beta}"
                    ));
                }
            }
            Deterministic { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("deterministic value must be finite and >= 0, got {value}"));
                }
            }
            EmpiricalTable { knots } => {
                if knots.is_empty() {
                    return bad("table must have at least one knot".to_string());
                }
                let mut prev_t = -1.0;
                let mut prev_p = 0.0;
                for (i, &(t, p)) in knots.iter().enumerate() {
                    if !(t.is_finite() && t >= 0.0) {
                        return bad(format!("table knot {i} time must be finite and >= 0, got {t}"));
                    }
                    if t <= prev_t {
                        return bad(format!(
                            "table knot times must be strictly increasing, knot {i} has {t} after {prev_t}"
                        ));
                    }
                    if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                        return bad(format!("table knot {i} probability must lie in [0, 1], got {p}"));
                    }
                    if p < prev_p {
                        return bad(format!(
                            "table knot probabilities must be nondecreasing, knot {i} has {p} after {prev_p}"
                        ));
                    }
                    prev_t = t;
                    prev_p = p;
                }
                if knots.last().unwrap().1 != 1.0 {
                    return bad(format!(
                        "table must end at probability exactly 1, got {}",
                        knots.last().unwrap().1
                    ));
                }
            }
        }
        Ok(())
    }

    /// `P(X <= v)`, with `cdf(v) = 0` for `v < 0`.
    pub fn cdf(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        match self {
            Exponential { mean } => -(-v / mean).exp_m1(),
            UniformOnDoubleMean { mean } => (v / (2.0 * mean)).min(1.0),
            SpecialFamily { gamma, beta, rho } => 1.0 - special_survival(*gamma, *beta, *rho, v),
            Deterministic { value } => {
                if v >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            EmpiricalTable { knots } => {
                let first = knots[0];
                if v < first.0 {
                    return 0.0;
                }
                let last = *knots.last().unwrap();
                if v >= last.0 {
                    return last.1;
                }
                // v sits strictly inside; find the bracketing knot pair.
                let hi = knots.partition_point(|&(t, _)| t <= v);
                let (t0, p0) = knots[hi - 1];
                let (t1, p1) = knots[hi];
                p0 + (p1 - p0) * (v - t0) / (t1 - t0)
            }
        }
    }

    /// Exact `integral_0^t (1 - cdf(v)) dv`.
    ///
    /// Nondecreasing and concave in `t`, bounded by `min(t, mean)`, and
    /// converging to the mean as `t` grows.
    pub fn survival_integral(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(match self {
            Exponential { mean } => -mean * (-t / mean).exp_m1(),
            UniformOnDoubleMean { mean } => {
                if t >= 2.0 * mean {
                    *mean
                } else {
                    t - t * t / (4.0 * mean)
                }
            }
            SpecialFamily { gamma, beta, rho } => {
                // Stable form of (1/gamma) ln(e^{st} / (e^{-rho}(e^{st}-1) + 1)), s = gamma + beta.
                let s = gamma + beta;
                let c = (-rho).exp();
                -(c + (1.0 - c) * (-s * t).exp()).ln() / gamma
            }
            Deterministic { value } => t.min(*value),
            EmpiricalTable { knots } => {
                let t0 = knots[0].0;
                if t <= t0 {
                    // Survival is identically 1 before the first knot.
                    return Ok(t);
                }
                let mut acc = t0;
                let mut prev = knots[0];
                for &(kt, kp) in &knots[1..] {
                    let (pt, pp) = prev;
                    let s0 = 1.0 - pp;
                    let s1 = 1.0 - kp;
                    if t < kt {
                        let frac = (t - pt) / (kt - pt);
                        let st = s0 + frac * (s1 - s0);
                        acc += 0.5 * (s0 + st) * (t - pt);
                        return Ok(acc);
                    }
                    acc += 0.5 * (s0 + s1) * (kt - pt);
                    prev = (kt, kp);
                }
                acc
            }
        })
    }

    /// Expected service time.
    pub fn mean(&self) -> f64 {
        match self {
            Exponential { mean } | UniformOnDoubleMean { mean } => *mean,
            SpecialFamily { gamma, beta, rho } => {
                if gamma + beta == 0.0 {
                    0.0
                } else {
                    rho / gamma
                }
            }
            Deterministic { value } => *value,
            EmpiricalTable { .. } => {
                // The survival integral is exact and flat past the last knot.
                self.survival_integral(self.support_upper()).expect("nonnegative bound")
            }
        }
    }

    /// Supremum of the support; infinite for the exponential and
    /// (nondegenerate) special families.
    pub fn support_upper(&self) -> f64 {
        match self {
            Exponential { .. } => f64::INFINITY,
            UniformOnDoubleMean { mean } => 2.0 * mean,
            SpecialFamily { gamma, beta, .. } => {
                if gamma + beta == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Deterministic { value } => *value,
            EmpiricalTable { knots } => knots.last().unwrap().0,
        }
    }

    /// Generalized inverse of the cdf for `p` in `[0, 1)`. Over flat cdf
    /// stretches ties break toward the smaller time.
    pub fn quantile(&self, p: f64) -> f64 {
        assert!((0.0..1.0).contains(&p), "quantile needs p in [0, 1), got {p}");
        match self {
            Exponential { mean } => -mean * (-p).ln_1p(),
            UniformOnDoubleMean { mean } => 2.0 * mean * p,
            SpecialFamily { gamma, beta, rho } => {
                let s = gamma + beta;
                if s == 0.0 {
                    return 0.0;
                }
                let c = (-rho).exp();
                let atom = 1.0 - (1.0 - c) * s / gamma;
                if p <= atom {
                    return 0.0;
                }
                let q = 1.0 - p;
                // Solving 1 - G(v) = q for w = e^{-s v}; p > atom keeps the
                // denominator strictly positive.
                let w = q * gamma * c / ((1.0 - c) * (s - q * gamma));
                (-w.ln() / s).max(0.0)
            }
            Deterministic { value } => *value,
            EmpiricalTable { knots } => {
                if p <= knots[0].1 {
                    return knots[0].0;
                }
                let mut prev = knots[0];
                for &(kt, kp) in &knots[1..] {
                    if p <= kp {
                        let (pt, pp) = prev;
                        // kp > pp here because p > pp held on the previous step.
                        return pt + (kt - pt) * (p - pp) / (kp - pp);
                    }
                    prev = (kt, kp);
                }
                knots.last().unwrap().0
            }
        }
    }

    /// Draw one service time by inversion. Consumes exactly one uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Times in `(0, inf)` where the cdf has a kink or jump. Quadrature over
    /// anything involving this law splits its panels here.
    pub(crate) fn cdf_kinks(&self) -> Vec<f64> {
        match self {
            Exponential { .. } | SpecialFamily { .. } => Vec::new(),
            UniformOnDoubleMean { mean } => vec![2.0 * mean],
            Deterministic { value } => {
                if *value > 0.0 {
                    vec![*value]
                } else {
                    Vec::new()
                }
            }
            EmpiricalTable { knots } => knots.iter().map(|&(t, _)| t).filter(|&t| t > 0.0).collect(),
        }
    }

    /// Rescale the law in time so its mean becomes `target`. Used by
    /// parameter sweeps; every family is closed under time scaling.
    pub fn scaled_to_mean(&self, target: f64) -> Result<Self> {
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "target mean must be finite and > 0, got {target}"
            )));
        }
        let scaled = match self {
            Exponential { .. } => Exponential { mean: target },
            UniformOnDoubleMean { .. } => UniformOnDoubleMean { mean: target },
            SpecialFamily { gamma, beta, rho } => {
                let current = self.mean();
                if current == 0.0 {
                    return Err(Error::ParameterOutOfRange(
                        "cannot rescale a special law degenerate at 0 (beta = -gamma)".to_string(),
                    ));
                }
                // Scaling time by k divides both rates by k and keeps rho,
                // so the constraint on beta is preserved.
                let k = target / current;
                SpecialFamily {
                    gamma: gamma / k,
                    beta: beta / k,
                    rho: *rho,
                }
            }
            Deterministic { .. } => Deterministic { value: target },
            EmpiricalTable { knots } => {
                let current = self.mean();
                if current == 0.0 {
                    return Err(Error::ParameterOutOfRange(
                        "cannot rescale a table law with mean 0".to_string(),
                    ));
                }
                let k = target / current;
                EmpiricalTable {
                    knots: knots.iter().map(|&(t, p)| (t * k, p)).collect(),
                }
            }
        };
        debug_assert!(scaled.validate().is_ok());
        Ok(scaled)
    }
}

/// `1 - G(v)` for the special family, written to stay finite for large
/// `(gamma + beta) * v`: numerator and denominator are both multiplied by
/// `e^{-(gamma+beta) v}` relative to the defining expression.
fn special_survival(gamma: f64, beta: f64, rho: f64, v: f64) -> f64 {
    let s = gamma + beta;
    let c = (-rho).exp();
    let w = (-s * v).exp();
    (1.0 - c) * s * w / (gamma * (c + (1.0 - c) * w))
}

// ============================================================
// Tests
// ============================================================
