//! Transient occupancy analysis of the two-node network.
//!
//! Node A is an infinite-server queue fed by a Poisson stream with rate
//! `lambda_a` and service law `G_A`. Node B is an infinite-server queue fed
//! by the time-varying stream `p * lambda_a * G_A(t) + lambda_b` (routed
//! completions plus external entrants) with service law `G_B`. Starting
//! empty,
//!
//! ```text
//! E[N_A(t)] = lambda_a * S_A(t)
//! E[N_B(t)] = (p lambda_a + lambda_b) * S_B(t) - p lambda_a * C(t)
//! ```
//!
//! where `S_X(t) = integral_0^t (1 - G_X(v)) dv` and
//! `C(t) = integral_0^t (1 - G_A(v)) (1 - G_B(t - v)) dv`. The `S` terms are
//! exact for every supported law, so a closed form for a service pair only
//! needs the cross term `C`. Two independent routes exist for `E[N_B]`:
//! the decomposition above with a per-pair `C`, and direct quadrature of the
//! defining integrand. They are developed separately and the tests hold them
//! together, so neither can silently drift.

use serde::{Deserialize, Serialize};

use crate::distributions::ServiceDistribution;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_split, QuadConfig};

/// How `occupancy_b` evaluates the convolution integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OccupancyMethod {
    /// Require the per-pair closed form; error if the pair has none.
    ClosedForm,
    /// Force adaptive quadrature at the given tolerances.
    Quadrature { abs_tol: f64, rel_tol: f64 },
    /// Closed form when the pair has one, otherwise default quadrature.
    Auto,
}

/// The two-node network parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Contributor arrival rate at node A.
    pub lambda_a: f64,
    /// External pensioner arrival rate at node B.
    pub lambda_b: f64,
    /// Probability that a completed contributor retires into node B.
    pub p: f64,
    /// Service law at node A (contribution period).
    pub service_a: ServiceDistribution,
    /// Service law at node B (pension period).
    pub service_b: ServiceDistribution,
}

impl NetworkConfig {
    /// Check rates, routing probability, and both service laws.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_a.is_finite() && self.lambda_a >= 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "lambda_a must be finite and >= 0, got {}",
                self.lambda_a
            )));
        }
        if !(self.lambda_b.is_finite() && self.lambda_b >= 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "lambda_b must be finite and >= 0, got {}",
                self.lambda_b
            )));
        }
        if !(self.p.is_finite() && (0.0..=1.0).contains(&self.p)) {
            return Err(Error::ParameterOutOfRange(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        self.service_a.validate()?;
        self.service_b.validate()?;
        Ok(())
    }

    /// `E[N_A(t)] = lambda_a * integral_0^t (1 - G_A(v)) dv`.
    pub fn occupancy_a(&self, t: f64) -> Result<f64> {
        Ok(self.lambda_a * self.service_a.survival_integral(t)?)
    }

    /// Arrival intensity at node B, `p * lambda_a * G_A(t) + lambda_b`.
    ///
    /// Nondecreasing from `lambda_b` (plus any origin atom of `G_A`) to
    /// `p * lambda_a + lambda_b`.
    pub fn arrival_intensity_b(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.intensity_b_raw(t))
    }

    fn intensity_b_raw(&self, v: f64) -> f64 {
        self.p * self.lambda_a * self.service_a.cdf(v) + self.lambda_b
    }

    /// Whether this service pair has a closed-form cross term.
    pub fn has_closed_form(&self) -> bool {
        use ServiceDistribution::*;
        matches!(
            (&self.service_a, &self.service_b),
            (Exponential { .. }, Exponential { .. })
                | (UniformOnDoubleMean { .. }, UniformOnDoubleMean { .. })
                | (SpecialFamily { .. }, SpecialFamily { .. })
        )
    }

    /// `E[N_B(t)]` by the requested method. Result is clamped at 0 against
    /// rounding in the subtraction; the true value is nonnegative.
    pub fn occupancy_b(&self, t: f64, method: OccupancyMethod) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        match method {
            OccupancyMethod::ClosedForm => self.occupancy_b_closed(t),
            OccupancyMethod::Quadrature { abs_tol, rel_tol } => self.occupancy_b_quad(
                t,
                QuadConfig {
                    abs_tol,
                    rel_tol,
                    max_depth: 60,
                },
            ),
            OccupancyMethod::Auto => {
                if self.has_closed_form() {
                    self.occupancy_b_closed(t)
                } else {
                    self.occupancy_b_quad(t, QuadConfig::default())
                }
            }
        }
    }

    /// Always-quadrature route for `E[N_B(t)]`, the oracle the closed forms
    /// are certified against. Integrates the defining integrand
    /// `(p lambda_a G_A(v) + lambda_b)(1 - G_B(t - v))` directly, splitting
    /// panels at the kinks of `G_A` and at the image `t - k` of each kink of
    /// `G_B` (in particular at `t - support_upper(G_B)` and
    /// `support_upper(G_A)`).
    pub fn occupancy_b_quadrature(&self, t: f64, abs_tol: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        self.occupancy_b_quad(t, QuadConfig::absolute(abs_tol))
    }

    fn occupancy_b_quad(&self, t: f64, cfg: QuadConfig) -> Result<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        let f = |v: f64| self.intensity_b_raw(v) * (1.0 - self.service_b.cdf(t - v));
        let mut splits = self.service_a.cdf_kinks();
        splits.extend(self.service_b.cdf_kinks().into_iter().map(|k| t - k));
        Ok(integrate_split(&f, 0.0, t, &splits, cfg)?.max(0.0))
    }

    fn occupancy_b_closed(&self, t: f64) -> Result<f64> {
        use ServiceDistribution::*;
        let cross = match (&self.service_a, &self.service_b) {
            (Exponential { mean: a }, Exponential { mean: b }) => cross_exponential(*a, *b, t),
            (UniformOnDoubleMean { mean: a }, UniformOnDoubleMean { mean: b }) => {
                cross_uniform(*a, *b, t)
            }
            (SpecialFamily { .. }, SpecialFamily { .. }) => {
                self.special_family_i(t, QuadConfig::default().abs_tol)?
            }
            (a, b) => {
                return Err(Error::NoClosedForm {
                    service_a: a.kind_name(),
                    service_b: b.kind_name(),
                })
            }
        };
        let inflow = self.p * self.lambda_a + self.lambda_b;
        let s_b = self.service_b.survival_integral(t)?;
        Ok((inflow * s_b - self.p * self.lambda_a * cross).max(0.0))
    }

    /// The cross integral
    /// `I(t) = integral_0^t (1 - G_A(v)) (1 - G_B(t - v)) dv` for a pair of
    /// special-family laws, by quadrature at the given absolute tolerance.
    /// Always nonnegative.
    pub fn special_family_i(&self, t: f64, abs_tol: f64) -> Result<f64> {
        use ServiceDistribution::*;
        let (SpecialFamily { .. }, SpecialFamily { .. }) = (&self.service_a, &self.service_b) else {
            let got = if matches!(self.service_a, SpecialFamily { .. }) {
                self.service_b.kind_name()
            } else {
                self.service_a.kind_name()
            };
            return Err(Error::WrongDistributionKind {
                expected: "special",
                got,
            });
        };
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let f = |v: f64| (1.0 - self.service_a.cdf(v)) * (1.0 - self.service_b.cdf(t - v));
        Ok(integrate(&f, 0.0, t, QuadConfig::absolute(abs_tol))?.max(0.0))
    }
}

/// Cross term for two exponential laws:
/// `C(t) = integral_0^t e^{-v/a} e^{-(t-v)/b} dv`.
///
/// Written through `expm1` so the `a != b` and `a == b` branches meet
/// smoothly; near-equal means would otherwise cancel catastrophically in
/// `(e^{-t/a} - e^{-t/b}) / (1/b - 1/a)`.
fn cross_exponential(a: f64, b: f64, t: f64) -> f64 {
    let d = (a - b) / (a * b);
    if d == 0.0 {
        return t * (-t / a).exp();
    }
    let x = t * d;
    if x.abs() <= 0.5 {
        (-t / b).exp() * x.exp_m1() / d
    } else {
        ((-t / a).exp() - (-t / b).exp()) / d
    }
}

/// Cross term for two uniform-on-double-mean laws.
///
/// With `A = 2 mean_a`, `B = 2 mean_b` the integrand
/// `(1 - v/A)(1 - (t - v)/B)` is supported on `[max(0, t - B), min(t, A)]`,
/// so `C(t)` is one cubic antiderivative evaluated on that interval. This
/// single expression covers every regime: `t` below both supports, between
/// them in either order of `mean_a` and `mean_b`, and past `A + B` where the
/// interval empties and `C = 0`. Deriving the middle regime (`B <= t < A`)
/// by hand gives a per-arrival term `+ t B / (4A) - B^2 / (12 A)`, i.e.
/// `+ t mean_b / (2 mean_a) - mean_b^2 / (3 mean_a)`; a sign slip on the
/// first of those terms is easy to make and is caught by the quadrature
/// cross-checks in this crate's tests.
fn cross_uniform(mean_a: f64, mean_b: f64, t: f64) -> f64 {
    let ua = 2.0 * mean_a;
    let ub = 2.0 * mean_b;
    let lo = (t - ub).max(0.0);
    let hi = t.min(ua);
    if lo >= hi {
        return 0.0;
    }
    let antiderivative = |v: f64| {
        let c0 = 1.0 - t / ub;
        let c1 = 1.0 / ub - c0 / ua;
        c0 * v + 0.5 * c1 * v * v - v * v * v / (3.0 * ua * ub)
    };
    antiderivative(hi) - antiderivative(lo)
}

// ============================================================
// Tests
// ============================================================
