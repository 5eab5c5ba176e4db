//! Analytic and Monte Carlo tooling for a pensions fund modeled as a
//! two-node infinite-server network.
//!
//! Contributors arrive at node A as a Poisson stream with rate `lambda_a` and
//! stay for a service time drawn from `G_A`. On leaving A, each contributor
//! retires into node B with probability `p` (otherwise leaves the scheme).
//! Node B also receives an external Poisson stream with rate `lambda_b`, and
//! pensioners stay for a time drawn from `G_B`. Both nodes have infinitely
//! many servers, so occupancy at time t is Poisson with mean given by the
//! usual infinite-server integrals. Starting from an empty system:
//!
//! ```text
//! E[N_A(t)] = lambda_a * integral_0^t (1 - G_A(v)) dv
//! E[N_B(t)] = integral_0^t (p * lambda_a * G_A(v) + lambda_b) * (1 - G_B(t - v)) dv
//! ```
//!
//! Balancing expected contributions against expected pension payments at
//! time t, via Wald's identity, ties the per-capita mean mark functions
//! together as `m_A(t) * E[N_A(t)] = m_B(t) * E[N_B(t)]`.
//!
//! Layout:
//! - [`distributions`]: the supported service time laws and their exact
//!   survival integrals, sampling, and validation.
//! - [`quadrature`]: adaptive Simpson integration, the oracle every closed
//!   form is certified against.
//! - [`transient`]: the network configuration and occupancy curves, with
//!   closed forms where a pair of laws admits one and quadrature always
//!   available as an independent route.
//! - [`equilibrium`]: equilibrium ratios, long-run and short-horizon
//!   approximations, settling time, and the excess function.
//! - [`simulator`]: a discrete-event Monte Carlo engine with reproducible
//!   per-replication random streams and z-score comparison against the
//!   analytic curves.
//! - [`scenario`]: the JSON scenario document shared by the CLI and tests.

pub mod distributions;
pub mod equilibrium;
pub mod error;
pub mod quadrature;
pub mod scenario;
pub mod simulator;
pub mod transient;

pub use distributions::ServiceDistribution;
pub use equilibrium::{
    approx_ratio_long, approx_ratio_short, equilibrium_pair, equilibrium_ratio, excess_function,
    indexed_contribution, long_run_ratio, settling_time, transient_profile, EquilibriumPair,
    ExcessForm, MeanValueFunction, Ratio, TransientProfile,
};
pub use error::{Error, Result};
pub use quadrature::QuadConfig;
pub use scenario::{GridSpec, MeanValues, Scenario, SimulationSettings};
pub use simulator::{
    compare_with_analytic, simulate, simulate_cash_flows, CashFlowStats, CoverageReport,
    EventCounts, MarkMode, SimulationEstimate, SimulationPlan,
};
pub use transient::{NetworkConfig, OccupancyMethod};
