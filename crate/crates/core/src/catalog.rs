//! Static market description (SKUs, commission, basket interaction) and the
//! per-episode inventory state.

use std::collections::HashSet;
use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::CatalogError;

/// One perishable product and its economics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sku {
    pub id: String,
    /// Utility intercept.
    pub alpha: f64,
    /// Price sensitivity, utils per currency unit. Must be positive.
    pub beta: f64,
    pub unit_cost: f64,
    /// Per-unit loss for stock left at the horizon. Negative values are salvage revenue.
    pub salvage_penalty: f64,
    pub initial_inventory: i64,
    /// Overrides the catalog-wide commission for this SKU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commission: Option<f64>,
}

impl Sku {
    pub fn new(id: impl Into<String>, alpha: f64, beta: f64) -> Self {
        Sku {
            id: id.into(),
            alpha,
            beta,
            unit_cost: 0.0,
            salvage_penalty: 0.0,
            initial_inventory: 0,
            commission: None,
        }
    }

    pub fn with_cost(mut self, unit_cost: f64) -> Self {
        self.unit_cost = unit_cost;
        self
    }

    pub fn with_salvage(mut self, salvage_penalty: f64) -> Self {
        self.salvage_penalty = salvage_penalty;
        self
    }

    pub fn with_inventory(mut self, units: i64) -> Self {
        self.initial_inventory = units;
        self
    }

    pub fn with_commission(mut self, commission: f64) -> Self {
        self.commission = Some(commission);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkuCatalog {
    pub skus: Vec<Sku>,
    /// Platform commission fraction, applied unless a SKU overrides it.
    #[serde(default)]
    pub commission: f64,
    /// Basket interaction: positive for complements, negative for substitutes.
    #[serde(default)]
    pub gamma: f64,
}

impl SkuCatalog {
    /// Builds and validates a catalog.
    pub fn new(skus: Vec<Sku>, commission: f64, gamma: f64) -> Result<Self, CatalogError> {
        SkuCatalog {
            skus,
            commission,
            gamma,
        }
        .validate()
    }

    /// Returns the catalog if every invariant holds, otherwise a report listing
    /// each violation.
    pub fn validate(self) -> Result<Self, CatalogError> {
        let mut violations = Vec::new();
        let mut seen = HashSet::new();
        if self.skus.is_empty() {
            violations.push("catalog must contain at least one SKU".to_string());
        }
        if !self.gamma.is_finite() {
            violations.push("gamma must be finite".to_string());
        }
        if !(0.0..1.0).contains(&self.commission) {
            violations.push(format!(
                "commission must be < 1 and >= 0 (got {})",
                self.commission
            ));
        }
        for sku in &self.skus {
            if !seen.insert(sku.id.as_str()) {
                violations.push(format!("duplicate SKU id `{}`", sku.id));
            }
            if !(sku.beta > 0.0) || !sku.beta.is_finite() {
                violations.push(format!(
                    "SKU `{}`: beta must be positive (got {})",
                    sku.id, sku.beta
                ));
            }
            if !sku.alpha.is_finite() {
                violations.push(format!("SKU `{}`: alpha must be finite", sku.id));
            }
            if !(sku.unit_cost >= 0.0) || !sku.unit_cost.is_finite() {
                violations.push(format!(
                    "SKU `{}`: unit_cost must be >= 0 (got {})",
                    sku.id, sku.unit_cost
                ));
            }
            if !sku.salvage_penalty.is_finite() {
                violations.push(format!("SKU `{}`: salvage_penalty must be finite", sku.id));
            }
            if sku.initial_inventory < 0 {
                violations.push(format!(
                    "SKU `{}`: initial_inventory must be >= 0 (got {})",
                    sku.id, sku.initial_inventory
                ));
            }
            if sku.initial_inventory > u32::MAX as i64 {
                violations.push(format!("SKU `{}`: initial_inventory too large", sku.id));
            }
            if let Some(eta) = sku.commission {
                if !(0.0..1.0).contains(&eta) {
                    violations.push(format!(
                        "SKU `{}`: commission must be < 1 and >= 0 (got {})",
                        sku.id, eta
                    ));
                }
            }
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(CatalogError { violations })
        }
    }

    pub fn len(&self) -> usize {
        self.skus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skus.is_empty()
    }

    /// Effective commission for SKU `i`.
    pub fn commission_of(&self, i: usize) -> f64 {
        self.skus[i].commission.unwrap_or(self.commission)
    }

    /// Seller's margin per unit of SKU `i` sold at `price`: `(1 - eta_i) p - c_i`.
    pub fn unit_margin(&self, i: usize, price: f64) -> f64 {
        (1.0 - self.commission_of(i)) * price - self.skus[i].unit_cost
    }

    pub fn salvage_penalties(&self) -> Vec<f64> {
        self.skus.iter().map(|s| s.salvage_penalty).collect()
    }

    pub fn initial_state(&self) -> InventoryState {
        InventoryState {
            epoch: 0,
            on_hand: self
                .skus
                .iter()
                .map(|s| s.initial_inventory.max(0) as u32)
                .collect(),
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.skus.iter().position(|s| s.id == id)
    }
}

/// On-hand units at the start of epoch index `epoch` (0 = before any sales).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InventoryState {
    pub epoch: usize,
    pub on_hand: Vec<u32>,
}

impl InventoryState {
    pub fn new(epoch: usize, on_hand: Vec<u32>) -> Self {
        InventoryState { epoch, on_hand }
    }

    /// Indices of SKUs with stock left.
    pub fn availability_set(&self) -> Vec<usize> {
        availability_set(&self.on_hand)
    }

    pub fn total_units(&self) -> u64 {
        self.on_hand.iter().map(|&u| u as u64).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.on_hand.iter().map(|&u| u as f64).collect()
    }
}

pub fn availability_set(on_hand: &[u32]) -> Vec<usize> {
    on_hand
        .iter()
        .enumerate()
        .filter(|(_, &units)| units > 0)
        .map(|(i, _)| i)
        .collect()
}

/// Posted prices, one per SKU.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector(pub Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Self {
        PriceVector(prices)
    }

    pub fn uniform(n: usize, price: f64) -> Self {
        PriceVector(vec![price; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PriceVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for PriceVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for PriceVector {
    fn from(v: Vec<f64>) -> Self {
        PriceVector(v)
    }
}

impl fmt::Display for PriceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:.4}")?;
        }
        write!(f, "]")
    }
}

/// Closed price interval searched by every policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBracket {
    pub floor: f64,
    pub ceiling: f64,
}

impl PriceBracket {
    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.floor, self.ceiling)
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.floor && p <= self.ceiling
    }
}

fn default_price_floor() -> f64 {
    0.0
}

/// Horizon discretization and guardrail parameters for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeConfig {
    pub num_epochs: usize,
    pub epoch_length: f64,
    pub rho: f64,
    pub delta_max: f64,
    #[serde(default = "default_price_floor")]
    pub price_floor: f64,
    /// Defaults to ten times the largest choke price `alpha / beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_ceiling: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
    /// Prices posted before the first epoch. Defaults to the unconstrained
    /// myopic solution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_prices: Option<Vec<f64>>,
}

impl EpisodeConfig {
    pub fn new(num_epochs: usize, epoch_length: f64) -> Self {
        EpisodeConfig {
            num_epochs,
            epoch_length,
            rho: 0.9,
            delta_max: f64::INFINITY,
            price_floor: 0.0,
            price_ceiling: None,
            rng_seed: 0,
            initial_prices: None,
        }
    }

    /// Horizon length `K * dt`.
    pub fn horizon(&self) -> f64 {
        self.num_epochs as f64 * self.epoch_length
    }

    pub fn price_bracket(&self, catalog: &SkuCatalog) -> PriceBracket {
        let ceiling = self
            .price_ceiling
            .unwrap_or_else(|| default_price_ceiling(catalog, self.price_floor));
        PriceBracket {
            floor: self.price_floor,
            ceiling,
        }
    }

    pub fn validate(&self, catalog: &SkuCatalog) -> Result<(), CatalogError> {
        let mut violations = Vec::new();
        if self.num_epochs < 1 {
            violations.push("num_epochs must be >= 1".to_string());
        }
        if !(self.epoch_length > 0.0) || !self.epoch_length.is_finite() {
            violations.push(format!(
                "epoch_length must be positive (got {})",
                self.epoch_length
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            violations.push(format!("rho must lie in (0, 1) (got {})", self.rho));
        }
        if !(self.delta_max >= 0.0) {
            violations.push(format!("delta_max must be >= 0 (got {})", self.delta_max));
        }
        if !(self.price_floor >= 0.0) || !self.price_floor.is_finite() {
            violations.push(format!(
                "price_floor must be >= 0 (got {})",
                self.price_floor
            ));
        }
        let bracket = self.price_bracket(catalog);
        if !(bracket.ceiling > bracket.floor) || !bracket.ceiling.is_finite() {
            violations.push(format!(
                "price_ceiling must exceed price_floor (got {} <= {})",
                bracket.ceiling, bracket.floor
            ));
        }
        if let Some(p0) = &self.initial_prices {
            if p0.len() != catalog.len() {
                violations.push(format!(
                    "initial_prices has {} entries, catalog has {} SKUs",
                    p0.len(),
                    catalog.len()
                ));
            } else if p0.iter().any(|&p| !bracket.contains(p)) {
                violations.push("initial_prices must lie within [price_floor, price_ceiling]".to_string());
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CatalogError { violations })
        }
    }
}

/// `10 * max_i(alpha_i / beta_i)`. When every SKU has a non-positive intercept
/// that product sits at or below the floor, so fall back to ten utils of
/// headroom for the least price-sensitive SKU.
pub fn default_price_ceiling(catalog: &SkuCatalog, floor: f64) -> f64 {
    let choke = catalog
        .skus
        .iter()
        .map(|s| s.alpha / s.beta)
        .fold(f64::NEG_INFINITY, f64::max);
    let ceiling = 10.0 * choke;
    if ceiling > floor {
        ceiling
    } else {
        let min_beta = catalog
            .skus
            .iter()
            .map(|s| s.beta)
            .fold(f64::INFINITY, f64::min);
        floor + 10.0 / min_beta
    }
}
