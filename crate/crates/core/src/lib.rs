//! Exponential-utility value functions and indifference prices in a market
//! with one stock that jumps at a default time.
//!
//! The value function restricted to strategies in `[-k, k]` solves a
//! Lipschitz BSDE whose driver is the infimum of linear drivers; the
//! unconstrained value function is its nonincreasing limit as `k` grows.
//! [`solver`] discretizes the BSDE on a grid, [`approx`] runs the limit,
//! [`pricing`] turns value functions into Hodges prices and [`oracle`]
//! cross-checks with brute-force dynamic programming and Monte Carlo.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod driver;
pub mod error;
pub mod minimize;
pub mod model;
pub mod oracle;
pub mod pricing;
pub mod quadrature;
pub mod report;
pub mod solver;

pub use approx::{converge, k_sweep, KSweepResult, Numerics};
pub use driver::{f_pi, g_quadratic, minimize_driver, CoeffSnapshot, DriverMin, StrategySet};
pub use error::{Error, Result};
pub use model::{
    claim_payoff, simulate_paths, validate_model, Claim, MarketModel, PathEnsemble,
    PiecewiseConstant, RegimeCoefficients, Strategy, TimeGrid, ValidationReport,
};
pub use oracle::{brute_force_dp, martingale_check, DpTree, DriftReport};
pub use pricing::{
    buy_price, indifference_price, indifference_price_at, selling_price, wealth_scaling, PriceReport,
    PriceSettings,
};
pub use quadrature::Quadrature;
pub use solver::{
    extract_optimal_strategy, solve_bsde, solve_bsde_with, surface_at_origin, SolveOptions, SpaceGrid,
    ValueSurface,
};
