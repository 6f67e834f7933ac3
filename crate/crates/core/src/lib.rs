//! Upstream merger effects on Nash-in-Nash negotiated fees.
//!
//! A monopoly intermediary carries a portfolio of products and pays each
//! supplier a lump-sum fee. This crate evaluates the intermediary's profit
//! over portfolios, either from the one-stop-shopping reduced form
//! ([`reduced_form`]) or by optimising quantities against a demand system
//! ([`demand`], [`optimizer`]), classifies pairs of products as complements
//! or substitutes on the portfolio hypercube ([`portfolio`]), and computes
//! fees before and after two suppliers merge ([`bargaining`]).
//!
//! Math is generic over the scalar type. The aliases below fix `f64`, which
//! is what the CLI and the reproduction suites use.

pub mod bargaining;
pub mod demand;
mod error;
pub(crate) mod linalg;
pub mod optimizer;
pub mod portfolio;
pub mod reduced_form;
pub mod reproduce;
pub mod roots;
pub mod scalar;

pub use error::{Error, Result};
pub use portfolio::{Portfolio, RelationKind, SetFunction};
pub use scalar::{Real, Scalar};

/// Default tolerance (profit units) for complement/substitute verdicts.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub type Cdf = reduced_form::ShoppingCostCdf<f64>;
pub type Market = reduced_form::ReducedFormMarket<f64>;
pub type Model = demand::DemandModel<f64>;
pub type Region = demand::EvaluationRegion<f64>;
pub type Config = optimizer::OptimizerConfig<f64>;
pub type Oracle = optimizer::ProfitOracle<f64>;
pub type Ownership = bargaining::OwnershipStructure;
