//! Multinomial-logit basket choice over the power set of available SKUs.
//!
//! Each arriving customer picks one basket `b` of currently stocked SKUs (the
//! empty basket is the no-purchase option, utility 0). Basket utility is
//!
//! ```text
//! U_b(p) = sum_{i in b} (alpha_i - beta_i p_i) + gamma * max(0, |b| - 1)
//! ```
//!
//! and `P(b) = exp(U_b) / sum_b' exp(U_b')`. The per-arrival purchase
//! probability of SKU `i` is `d_i = sum_{b contains i} P(b)`, and expected units
//! sold in an epoch are `lambda * dt * d_i`.

use itertools::Itertools;
use rand::Rng;

use crate::catalog::SkuCatalog;
use crate::error::{Error, Result};

/// Largest availability set enumerated in full (2^16 baskets).
pub const MAX_FULL_ENUMERATION: usize = 16;

/// A set of SKU indices, kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Basket {
    items: Vec<usize>,
}

impl Basket {
    pub fn empty() -> Self {
        Basket::default()
    }

    pub fn new(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Basket { items }
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, sku: usize) -> bool {
        self.items.binary_search(&sku).is_ok()
    }
}

impl<const N: usize> From<[usize; N]> for Basket {
    fn from(items: [usize; N]) -> Self {
        Basket::new(items.to_vec())
    }
}

pub fn basket_utility(basket: &Basket, prices: &[f64], catalog: &SkuCatalog) -> Result<f64> {
    let n = catalog.len();
    if prices.len() != n {
        return Err(Error::InvalidArgument(format!(
            "price vector has {} entries, catalog has {n}",
            prices.len()
        )));
    }
    if let Some(&bad) = basket.items.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    Ok(utility_unchecked(basket.items(), prices, catalog))
}

fn utility_unchecked(items: &[usize], prices: &[f64], catalog: &SkuCatalog) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let own: f64 = items
        .iter()
        .map(|&i| {
            let sku = &catalog.skus[i];
            sku.alpha - sku.beta * prices[i]
        })
        .sum();
    own + catalog.gamma * (items.len() - 1) as f64
}

/// All subsets of `available`, smallest first and lexicographic within a size.
pub fn enumerate_baskets(available: &[usize], max_basket_size: Option<usize>) -> Result<Vec<Basket>> {
    let mut avail = available.to_vec();
    avail.sort_unstable();
    avail.dedup();
    let largest = match max_basket_size {
        Some(k) => k.min(avail.len()),
        None if avail.len() > MAX_FULL_ENUMERATION => {
            return Err(Error::EnumerationCap {
                available: avail.len(),
                cap: MAX_FULL_ENUMERATION,
            })
        }
        None => avail.len(),
    };
    let mut baskets = Vec::new();
    for size in 0..=largest {
        baskets.extend(
            avail
                .iter()
                .copied()
                .combinations(size)
                .map(|items| Basket { items }),
        );
    }
    Ok(baskets)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasketDistribution {
    pub baskets: Vec<Basket>,
    pub probabilities: Vec<f64>,
}

impl BasketDistribution {
    /// Draws one basket by inverse-CDF on a single uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Basket {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (basket, &p) in self.baskets.iter().zip(&self.probabilities) {
            acc += p;
            if u < acc {
                return basket;
            }
        }
        // Rounding left the cumulative sum just under 1.
        let last = self
            .probabilities
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(0);
        &self.baskets[last]
    }

    pub fn probability_of(&self, basket: &Basket) -> f64 {
        self.baskets
            .iter()
            .position(|b| b == basket)
            .map_or(0.0, |k| self.probabilities[k])
    }

    /// Per-SKU purchase probability `d_i` for a catalog of `n` SKUs.
    pub fn item_demand(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for (basket, &p) in self.baskets.iter().zip(&self.probabilities) {
            for &i in basket.items() {
                d[i] += p;
            }
        }
        d
    }
}

/// The baskets reachable from one availability set. Reusable across many price
/// vectors, which is what the lattice-search policies need.
#[derive(Debug, Clone)]
pub struct ChoiceSet {
    baskets: Vec<Basket>,
    scratch_len: usize,
}

impl ChoiceSet {
    pub fn new(available: &[usize], max_basket_size: Option<usize>) -> Result<Self> {
        let baskets = enumerate_baskets(available, max_basket_size)?;
        Ok(ChoiceSet {
            scratch_len: baskets.len(),
            baskets,
        })
    }

    pub fn baskets(&self) -> &[Basket] {
        &self.baskets
    }

    fn check(&self, prices: &[f64], catalog: &SkuCatalog) -> Result<()> {
        let n = catalog.len();
        if prices.len() != n {
            return Err(Error::InvalidArgument(format!(
                "price vector has {} entries, catalog has {n}",
                prices.len()
            )));
        }
        for basket in &self.baskets {
            if let Some(&bad) = basket.items.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange { index: bad, len: n });
            }
        }
        Ok(())
    }

    /// Softmax weights with the largest utility shifted to zero.
    fn weights(&self, prices: &[f64], catalog: &SkuCatalog) -> Vec<f64> {
        let mut w: Vec<f64> = Vec::with_capacity(self.scratch_len);
        w.extend(
            self.baskets
                .iter()
                .map(|b| utility_unchecked(b.items(), prices, catalog)),
        );
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for u in w.iter_mut() {
            *u = (*u - max).exp();
            total += *u;
        }
        for u in w.iter_mut() {
            *u /= total;
        }
        w
    }

    pub fn distribution(&self, prices: &[f64], catalog: &SkuCatalog) -> Result<BasketDistribution> {
        self.check(prices, catalog)?;
        Ok(BasketDistribution {
            baskets: self.baskets.clone(),
            probabilities: self.weights(prices, catalog),
        })
    }

    pub fn item_demand(&self, prices: &[f64], catalog: &SkuCatalog) -> Result<Vec<f64>> {
        self.check(prices, catalog)?;
        Ok(self.item_demand_unchecked(prices, catalog))
    }

    pub(crate) fn item_demand_unchecked(&self, prices: &[f64], catalog: &SkuCatalog) -> Vec<f64> {
        let probs = self.weights(prices, catalog);
        let mut d = vec![0.0; catalog.len()];
        for (basket, p) in self.baskets.iter().zip(probs) {
            for &i in basket.items() {
                d[i] += p;
            }
        }
        // Guard the [0, 1] contract against summation rounding.
        for x in d.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        d
    }
}

pub fn basket_probabilities(
    prices: &[f64],
    available: &[usize],
    catalog: &SkuCatalog,
) -> Result<BasketDistribution> {
    ChoiceSet::new(available, None)?.distribution(prices, catalog)
}

/// Per-arrival purchase probability `d_i`; zero for unavailable SKUs.
pub fn expected_item_demand(
    prices: &[f64],
    available: &[usize],
    catalog: &SkuCatalog,
) -> Result<Vec<f64>> {
    ChoiceSet::new(available, None)?.item_demand(prices, catalog)
}

/// Expected units sold per SKU in an epoch: `lambda * dt * d_i`.
pub fn expected_demand(
    prices: &[f64],
    available: &[usize],
    catalog: &SkuCatalog,
    lambda: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidRate(lambda));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("epoch length must be positive (got {dt})")));
    }
    let scale = lambda * dt;
    Ok(expected_item_demand(prices, available, catalog)?
        .into_iter()
        .map(|d| scale * d)
        .collect())
}
