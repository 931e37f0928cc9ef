//! Throughput analysis and simulation of a buffer-aided underlay cognitive
//! relay network with a direct source-destination path.
//!
//! A secondary source reaches its destination through a decode-and-forward
//! relay with an unbounded buffer, or directly. Every slot one link is chosen
//! from discrete rates so that the buffer stays stable while the throughput
//! is maximized, subject to a peak interference limit at a primary receiver.
//!
//! - [`channel`]: fading model, SNR sampling, CCDFs of the link SNRs.
//! - [`lattice`]: exact rates, thresholds, decision metrics and modes.
//! - [`analytic`]: mode probabilities, stability cases, optimal throughput.
//! - [`sim`]: slot-level simulation of the selection policy.
//! - [`validate`]: quadrature and Monte Carlo oracles.

pub mod analytic;
pub mod channel;
pub mod error;
pub mod lattice;
pub mod sim;
pub mod validate;

pub use analytic::{
    analyze, classify_stability, joint_pmf, joint_prob, mode_table, solve_operating_point,
    system_throughput, Analysis, CoinToss, ModeRateTable, OperatingPoint, Policy, Stability,
    StabilityCase, ThroughputCurve,
};
pub use channel::{
    derive_stats, LinkStats, PowerConstraints, Regime, Scheme, SnrTriplet, SystemGeometry,
};
pub use error::{Error, Result};
pub use lattice::{
    build_alpha_lattice, classify_mode, decision_metrics, enumerate_domain_sets, parse_rational,
    thresholds, AlphaLattice, Mode, ModeMap, RateSet, RateTripletIndex, Rational, SnrThresholds,
};
pub use sim::{feasible_indices, run_policy, run_simulation, select_link, SimConfig, SimReport};
