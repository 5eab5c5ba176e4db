//! Equilibrium between contributions and pensions.
//!
//! With per-capita mean mark functions `m_A(t)` (contribution) and `m_B(t)`
//! (pension), Wald's identity balances expected flows at time t when
//! `m_A(t) E[N_A(t)] = m_B(t) E[N_B(t)]`. Everything here is a view of that
//! identity: the ratio `m_B/m_A = E[N_A]/E[N_B]`, the family of solution
//! pairs `(m_A, m_A E[N_A]/E[N_B])`, its long-run and short-horizon limits,
//! the time after which the long-run value is exact, and the excess of
//! expected pension outflow over contribution inflow when the balance is
//! broken.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transient::{NetworkConfig, OccupancyMethod};

/// Deterministic per-capita mean mark as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeanValueFunction {
    /// Flat mean mark.
    Constant { value: f64 },
    /// `initial * e^{rate * t}`, the interest-indexed scenario.
    ExponentialGrowth { initial: f64, rate: f64 },
    /// Linear interpolation through `(time, value)` knots, clamped to the
    /// end values outside the knot range.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl MeanValueFunction {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ParameterOutOfRange(msg));
        match self {
            MeanValueFunction::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("constant mean value must be finite and >= 0, got {value}"));
                }
            }
            MeanValueFunction::ExponentialGrowth { initial, rate } => {
                if !(initial.is_finite() && *initial >= 0.0) {
                    return bad(format!("growth initial value must be finite and >= 0, got {initial}"));
                }
                if !rate.is_finite() {
                    return bad(format!("growth rate must be finite, got {rate}"));
                }
            }
            MeanValueFunction::Tabulated { knots } => {
                if knots.is_empty() {
                    return bad("tabulated mean value needs at least one knot".to_string());
                }
                let mut prev = -1.0;
                for (i, &(t, v)) in knots.iter().enumerate() {
                    if !(t.is_finite() && t >= 0.0) {
                        return bad(format!("tabulated knot {i} time must be finite and >= 0, got {t}"));
                    }
                    if t <= prev {
                        return bad(format!(
                            "tabulated knot times must be strictly increasing, knot {i} has {t} after {prev}"
                        ));
                    }
                    if !(v.is_finite() && v >= 0.0) {
                        return bad(format!("tabulated knot {i} value must be finite and >= 0, got {v}"));
                    }
                    prev = t;
                }
            }
        }
        Ok(())
    }

    /// Evaluate at `t >= 0`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            MeanValueFunction::Constant { value } => *value,
            MeanValueFunction::ExponentialGrowth { initial, rate } => initial * (rate * t).exp(),
            MeanValueFunction::Tabulated { knots } => {
                let first = knots[0];
                if t <= first.0 {
                    return first.1;
                }
                let last = *knots.last().unwrap();
                if t >= last.0 {
                    return last.1;
                }
                let hi = knots.partition_point(|&(kt, _)| kt <= t);
                let (t0, v0) = knots[hi - 1];
                let (t1, v1) = knots[hi];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// Outcome of a ratio of occupancies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    /// Finite ratio; the denominator occupancy is positive.
    Defined(f64),
    /// Both occupancies are zero.
    Undefined,
    /// Denominator occupancy is zero while the numerator is positive.
    Unbounded,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Defined(v) => Some(*v),
            _ => None,
        }
    }

    /// Collapse to a float for serialization: `Unbounded -> inf`,
    /// `Undefined -> nan`.
    pub fn as_f64(&self) -> f64 {
        match self {
            Ratio::Defined(v) => *v,
            Ratio::Undefined => f64::NAN,
            Ratio::Unbounded => f64::INFINITY,
        }
    }
}

/// One point on the solution family of the balance identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPair {
    pub t: f64,
    /// Chosen contribution mean mark at `t`.
    pub m_a: f64,
    /// Pension mean mark forced by the balance, `m_a * E[N_A](t) / E[N_B](t)`.
    pub m_b: f64,
    pub e_n_a: f64,
    pub e_n_b: f64,
}

fn ratio_of(e_n_a: f64, e_n_b: f64) -> Ratio {
    if e_n_b > 0.0 {
        Ratio::Defined(e_n_a / e_n_b)
    } else if e_n_a > 0.0 {
        Ratio::Unbounded
    } else {
        Ratio::Undefined
    }
}

/// `m_B(t)/m_A(t) = E[N_A(t)]/E[N_B(t)]` at one time point.
///
/// At `t = 0` both occupancies vanish; the ratio is answered by its
/// short-horizon limit `lambda_a / lambda_b` when `lambda_b > 0` and `G_A`
/// has no origin atom, and is `Undefined` otherwise.
pub fn equilibrium_ratio(cfg: &NetworkConfig, t: f64) -> Result<Ratio> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        if cfg.lambda_b > 0.0 && cfg.service_a.cdf(0.0) == 0.0 {
            return Ok(Ratio::Defined(cfg.lambda_a / cfg.lambda_b));
        }
        return Ok(Ratio::Undefined);
    }
    let e_n_a = cfg.occupancy_a(t)?;
    let e_n_b = cfg.occupancy_b(t, OccupancyMethod::Auto)?;
    Ok(ratio_of(e_n_a, e_n_b))
}

/// Pick `m_A(t)` from the given function and force `m_B(t)` from the balance.
pub fn equilibrium_pair(
    cfg: &NetworkConfig,
    m_a: &MeanValueFunction,
    t: f64,
) -> Result<EquilibriumPair> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let e_n_a = cfg.occupancy_a(t)?;
    let e_n_b = cfg.occupancy_b(t, OccupancyMethod::Auto)?;
    let ratio = match ratio_of(e_n_a, e_n_b) {
        Ratio::Defined(v) => v,
        Ratio::Undefined => return Err(Error::RatioUndefined),
        Ratio::Unbounded => return Err(Error::RatioUnbounded),
    };
    let m_a_val = m_a.value(t);
    Ok(EquilibriumPair {
        t,
        m_a: m_a_val,
        m_b: m_a_val * ratio,
        e_n_a,
        e_n_b,
    })
}

/// Contribution mean mark under pension indexation `m_B(t) = e^{r t}`:
/// `m_A(t) = e^{r t} E[N_B(t)] / E[N_A(t)]`.
///
/// Whenever `E[N_A](t) < E[N_B](t)` this exceeds `e^{r t}`: each contributor
/// must put in more than an indexed pension pays out.
pub fn indexed_contribution(cfg: &NetworkConfig, r: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let e_n_a = cfg.occupancy_a(t)?;
    if e_n_a == 0.0 {
        return Err(Error::NoContributors);
    }
    let e_n_b = cfg.occupancy_b(t, OccupancyMethod::Auto)?;
    Ok((r * t).exp() * e_n_b / e_n_a)
}

/// Long-run balance ratio
/// `m_B/m_A = lambda_a alpha_a / ((p lambda_a + lambda_b) alpha_b)`.
pub fn long_run_ratio(cfg: &NetworkConfig) -> Result<f64> {
    let inflow = cfg.p * cfg.lambda_a + cfg.lambda_b;
    if inflow <= 0.0 {
        return Err(Error::NoPensionInflow(format!(
            "p * lambda_a + lambda_b must be > 0, got {inflow}"
        )));
    }
    let alpha_b = cfg.service_b.mean();
    if alpha_b <= 0.0 {
        return Err(Error::NoPensionInflow(format!(
            "pension service mean must be > 0, got {alpha_b}"
        )));
    }
    Ok(cfg.lambda_a * cfg.service_a.mean() / (inflow * alpha_b))
}

/// After this time the transient ratio equals [`long_run_ratio`] exactly;
/// finite only when both service supports are bounded, in which case it is
/// `support_upper(G_A) + support_upper(G_B)`.
pub fn settling_time(cfg: &NetworkConfig) -> f64 {
    cfg.service_a.support_upper() + cfg.service_b.support_upper()
}

/// Long-horizon approximation of the balance ratio; same value and contract
/// as [`long_run_ratio`], kept as its own operation because it is quoted as
/// an approximation for large `t` rather than a limit.
pub fn approx_ratio_long(cfg: &NetworkConfig) -> Result<f64> {
    long_run_ratio(cfg)
}

/// Short-horizon approximation `m_B/m_A ~ lambda_a / lambda_b` as `t -> 0`,
/// valid when neither service law has an origin atom.
pub fn approx_ratio_short(cfg: &NetworkConfig) -> Ratio {
    if cfg.lambda_b > 0.0 {
        Ratio::Defined(cfg.lambda_a / cfg.lambda_b)
    } else if cfg.lambda_a > 0.0 {
        Ratio::Unbounded
    } else {
        Ratio::Undefined
    }
}

/// Which leading mark the excess function pairs with the pension integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExcessForm {
    /// `h(t) = m_B(t) * c * B(t) - m_A(t) * A(t)` where
    /// `c = lambda_a alpha_a / ((p lambda_a + lambda_b) alpha_b)`,
    /// `B(t) = E[N_B](t)` and `A(t) = E[N_A](t)`.
    Printed,
    /// Alternative reading with `m_A(t)` in both terms:
    /// `h(t) = m_A(t) * c * B(t) - m_A(t) * A(t)`.
    ConstantRatio,
}

/// Excess of expected pension outflow over expected contribution inflow at
/// time `t` when marks follow `m_A`, `m_B` instead of an exact balance.
/// Zero at `t = 0` and identically zero when `lambda_a = 0`.
///
/// Two published readings of the leading mark disagree; both are exposed via
/// `form` and neither is asserted correct here. They coincide whenever
/// `m_A(t) = m_B(t)`.
pub fn excess_function(
    cfg: &NetworkConfig,
    m_b: &MeanValueFunction,
    m_a: &MeanValueFunction,
    t: f64,
    form: ExcessForm,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let c = long_run_ratio(cfg)?;
    let e_n_a = cfg.occupancy_a(t)?;
    let e_n_b = cfg.occupancy_b(t, OccupancyMethod::Auto)?;
    Ok(excess_from_parts(c, m_b, m_a, t, e_n_a, e_n_b, form))
}

fn excess_from_parts(
    c: f64,
    m_b: &MeanValueFunction,
    m_a: &MeanValueFunction,
    t: f64,
    e_n_a: f64,
    e_n_b: f64,
    form: ExcessForm,
) -> f64 {
    let lead = match form {
        ExcessForm::Printed => m_b.value(t),
        ExcessForm::ConstantRatio => m_a.value(t),
    };
    lead * c * e_n_b - m_a.value(t) * e_n_a
}

/// Occupancy curves and every derived ratio over a time grid; the row data
/// behind the `compute` command.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientProfile {
    pub times: Vec<f64>,
    pub e_n_a: Vec<f64>,
    pub e_n_b: Vec<f64>,
    /// `E[N_A]/E[N_B]` per row, with the `t = 0` convention of
    /// [`equilibrium_ratio`].
    pub ratio: Vec<Ratio>,
    /// Excess function per row ([`ExcessForm::Printed`]), NaN when the
    /// long-run constant does not exist.
    pub excess: Vec<f64>,
    /// Long-run ratio, also the large-t approximation.
    pub ratio_long_run: Ratio,
    /// Short-horizon approximation `lambda_a / lambda_b`.
    pub ratio_short: Ratio,
    pub settling_time: f64,
    /// Whether rows were produced by the closed form (else quadrature).
    pub closed_form: bool,
}

/// Evaluate the full profile on a grid. `m_a`, `m_b` feed the excess column.
pub fn transient_profile(
    cfg: &NetworkConfig,
    times: &[f64],
    m_a: &MeanValueFunction,
    m_b: &MeanValueFunction,
    method: OccupancyMethod,
) -> Result<TransientProfile> {
    cfg.validate()?;
    let closed_form = match method {
        OccupancyMethod::ClosedForm => true,
        OccupancyMethod::Quadrature { .. } => false,
        OccupancyMethod::Auto => cfg.has_closed_form(),
    };
    let long_run = match long_run_ratio(cfg) {
        Ok(v) => Ratio::Defined(v),
        Err(_) => {
            if cfg.lambda_a * cfg.service_a.mean() > 0.0 {
                Ratio::Unbounded
            } else {
                Ratio::Undefined
            }
        }
    };
    let mut profile = TransientProfile {
        times: times.to_vec(),
        e_n_a: Vec::with_capacity(times.len()),
        e_n_b: Vec::with_capacity(times.len()),
        ratio: Vec::with_capacity(times.len()),
        excess: Vec::with_capacity(times.len()),
        ratio_long_run: long_run,
        ratio_short: approx_ratio_short(cfg),
        settling_time: settling_time(cfg),
        closed_form,
    };
    for &t in times {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let e_n_a = cfg.occupancy_a(t)?;
        let e_n_b = cfg.occupancy_b(t, method)?;
        let ratio = if t == 0.0 {
            // Same convention as equilibrium_ratio at the origin.
            if cfg.lambda_b > 0.0 && cfg.service_a.cdf(0.0) == 0.0 {
                Ratio::Defined(cfg.lambda_a / cfg.lambda_b)
            } else {
                Ratio::Undefined
            }
        } else {
            ratio_of(e_n_a, e_n_b)
        };
        let excess = match long_run {
            Ratio::Defined(c) => excess_from_parts(c, m_b, m_a, t, e_n_a, e_n_b, ExcessForm::Printed),
            _ => f64::NAN,
        };
        profile.e_n_a.push(e_n_a);
        profile.e_n_b.push(e_n_b);
        profile.ratio.push(ratio);
        profile.excess.push(excess);
    }
    Ok(profile)
}

// ============================================================
// Tests
// ============================================================
