//! Pricing policies behind a common interface, plus the inertia clamp they
//! all share.

pub mod guardrail;
pub mod lattice;

use rand::{Rng, RngCore};

use crate::catalog::{InventoryState, PriceBracket, PriceVector};
use crate::error::Result;
use crate::market::Market;

pub use guardrail::{solve_price_for_targets, target_demand, GuardrailPolicy, SolverSettings};
pub use lattice::{price_grid, MyopicPolicy};

/// Per-decision bookkeeping. Fields a policy has nothing to say about stay empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Safety-adjusted sales targets.
    pub targets: Vec<f64>,
    /// Expected demand at the prices before the inertia clamp.
    pub achieved_demand: Vec<f64>,
    /// Bisection steps spent per SKU.
    pub iterations: Vec<usize>,
    pub sweeps: usize,
    /// Target could not be met inside the price bracket.
    pub unreachable: Vec<bool>,
    /// Price moved by the inertia clamp.
    pub inertia_clamped: Vec<bool>,
    /// Prices before the inertia clamp.
    pub raw_prices: Option<PriceVector>,
    /// Lattice objective at the chosen point.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub prices: PriceVector,
    pub diagnostics: Diagnostics,
}

impl PolicyDecision {
    pub fn new(prices: PriceVector) -> Self {
        PolicyDecision {
            prices,
            diagnostics: Diagnostics::default(),
        }
    }

    /// Prices before inertia, falling back to the posted prices.
    pub fn raw_prices(&self) -> &PriceVector {
        self.diagnostics.raw_prices.as_ref().unwrap_or(&self.prices)
    }
}

/// Chooses the next epoch's prices. `state.epoch` is the 0-based index of the
/// epoch about to be priced; `previous` are the prices posted in the epoch
/// before it. `rng` is a stream dedicated to the policy so that policy-side
/// randomness never shifts the demand draws.
pub trait PricingPolicy: Send + Sync {
    fn name(&self) -> &str;

    fn decide(
        &self,
        market: &Market,
        state: &InventoryState,
        previous: &PriceVector,
        rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision>;
}

impl<P: PricingPolicy + ?Sized> PricingPolicy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(
        &self,
        market: &Market,
        state: &InventoryState,
        previous: &PriceVector,
        rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision> {
        (**self).decide(market, state, previous, rng)
    }
}

/// Clamps each price into `[prev - delta_max, prev + delta_max]` and then into
/// the bracket.
pub fn apply_inertia(
    proposed: &[f64],
    previous: &[f64],
    delta_max: f64,
    bracket: PriceBracket,
) -> PriceVector {
    proposed
        .iter()
        .zip(previous)
        .map(|(&p, &prev)| {
            let banded = if delta_max.is_finite() {
                p.clamp(prev - delta_max, prev + delta_max)
            } else {
                p
            };
            bracket.clamp(banded)
        })
        .collect::<Vec<_>>()
        .into()
}

/// Finishes a decision: inertia-clamps `raw` toward `previous` and records
/// which coordinates moved.
pub(crate) fn finish(
    market: &Market,
    raw: PriceVector,
    previous: &PriceVector,
    mut diagnostics: Diagnostics,
) -> PolicyDecision {
    let prices = apply_inertia(&raw, previous, market.episode.delta_max, market.bracket());
    diagnostics.inertia_clamped = prices.iter().zip(raw.iter()).map(|(a, b)| a != b).collect();
    diagnostics.raw_prices = Some(raw);
    PolicyDecision {
        prices,
        diagnostics,
    }
}

/// Posts the same prices every epoch, subject to inertia.
#[derive(Debug, Clone)]
pub struct FixedPricePolicy {
    pub prices: PriceVector,
}

impl FixedPricePolicy {
    pub fn new(prices: impl Into<PriceVector>) -> Self {
        FixedPricePolicy {
            prices: prices.into(),
        }
    }
}

impl PricingPolicy for FixedPricePolicy {
    fn name(&self) -> &str {
        "fixed"
    }

    fn decide(
        &self,
        market: &Market,
        _state: &InventoryState,
        previous: &PriceVector,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision> {
        Ok(finish(market, self.prices.clone(), previous, Diagnostics::default()))
    }
}

/// Wraps a policy with uniform noise of +-`amplitude` on its pre-inertia prices,
/// then re-applies the inertia clamp. Used to spread training trajectories
/// over prices.
#[derive(Debug, Clone)]
pub struct ExploringPolicy<P> {
    pub inner: P,
    pub amplitude: f64,
}

impl<P> ExploringPolicy<P> {
    pub fn new(inner: P, amplitude: f64) -> Self {
        ExploringPolicy { inner, amplitude }
    }

    /// Noise of `delta_max / 2`, capped at a quarter of the bracket when
    /// inertia is unlimited.
    pub fn default_amplitude(market: &Market) -> f64 {
        let b = market.bracket();
        (market.episode.delta_max / 2.0).min((b.ceiling - b.floor) / 4.0)
    }
}

impl<P: PricingPolicy> PricingPolicy for ExploringPolicy<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn decide(
        &self,
        market: &Market,
        state: &InventoryState,
        previous: &PriceVector,
        rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision> {
        let base = self.inner.decide(market, state, previous, rng)?;
        if !(self.amplitude > 0.0) {
            return Ok(base);
        }
        let noisy: Vec<f64> = base
            .raw_prices()
            .iter()
            .map(|&p| p + rng.random_range(-self.amplitude..=self.amplitude))
            .collect();
        Ok(finish(market, noisy.into(), previous, base.diagnostics))
    }
}
