//! Dynamic pricing of perishable SKUs under stochastic basket demand.
//!
//! The crate simulates Poisson customer arrivals choosing baskets by
//! multinomial logit from whatever is in stock, tracks finite inventory that
//! is salvaged at the horizon, and evaluates pricing policies by expected total
//! profit: a fixed-price baseline, a myopic profit maximizer, target-demand
//! ("guardrail") pricing with price inertia, and a greedy policy against a
//! linear value function fitted by backward least squares.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adp;
pub mod arrivals;
pub mod catalog;
pub mod choice;
pub mod error;
pub mod market;
pub mod policies;
pub mod report;
pub mod simulator;

pub use adp::{
    fit_weights, train_adp, AdpGreedyPolicy, Continuation, TrainSettings, TrainingReport,
    TrajectorySample, ValueWeights,
};
pub use arrivals::{
    estimate_rate_profile, poisson_pmf, sample_arrival_count, ArrivalModel, OrderLog, RateProfile,
};
pub use catalog::{EpisodeConfig, InventoryState, PriceBracket, PriceVector, Sku, SkuCatalog};
pub use choice::{
    basket_probabilities, basket_utility, enumerate_baskets, expected_demand,
    expected_item_demand, Basket, BasketDistribution,
};
pub use error::{CatalogError, Error, Result};
pub use market::Market;
pub use policies::{
    apply_inertia, FixedPricePolicy, GuardrailPolicy, MyopicPolicy, PolicyDecision, PricingPolicy,
};
pub use simulator::{
    evaluate_policy, run_episode, run_episodes, simulate_epoch, terminal_salvage, EpisodeResult,
    EpochRecord, PolicyEvaluation,
};
