//! Profit- and price-preference-aware re-ranking for score-based
//! recommenders.
//!
//! The pipeline: ingest an event log and catalog ([`io`], [`domain`]), split
//! it by time ([`eval::time_split`]), train the WARP matrix-factorization
//! baseline ([`mf::fit`]), re-rank its scores with the `(alpha, beta)`
//! multiplier ([`rerank`]), and measure ranking quality and profit at hit
//! over a hyperparameter grid ([`eval::grid_sweep`]). [`datagen`] produces
//! synthetic logs with planted price segments for end-to-end runs.

pub mod datagen;
pub mod domain;
mod error;
pub mod eval;
pub mod io;
pub mod mf;
pub mod rerank;

pub use domain::{
    build_customer_profiles, validate_dataset, Action, Catalog, CustomerId, CustomerProfile, Dataset, HyperParams,
    Interaction, ItemId, ItemRecord, PriceProfiles, ScoredItem, Violation,
};
pub use error::{Error, Result};
pub use eval::{EvalContext, EvalOptions, MetricsRow, SplitSpec, SweepReport};
pub use mf::{MfModel, ModelParams, TrainConfig};
pub use rerank::{Recommendation, Recommender};
