//! Arrival-level episode simulation and Monte Carlo policy evaluation.
//!
//! Each epoch draws a Poisson number of arrivals; every arrival picks a basket
//! from the items still in stock at that moment and takes one unit of each.
//! Realized sales therefore never exceed stock and the inventory update needs
//! no explicit noise term.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arrivals::sample_arrival_count;
use crate::catalog::{availability_set, InventoryState, PriceVector, SkuCatalog};
use crate::choice::BasketDistribution;
use crate::error::{Error, Result};
use crate::market::Market;
use crate::policies::PricingPolicy;

/// Slack allowed on the inertia bound when auditing policy output.
pub const INERTIA_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub prices: PriceVector,
    pub arrivals: u64,
    pub realized_sales: Vec<u32>,
    pub expected_sales: Vec<f64>,
    /// Seller revenue net of commission.
    pub revenue: f64,
    pub profit: f64,
    pub inventory_before: Vec<u32>,
    pub inventory_after: Vec<u32>,
}

impl EpochRecord {
    /// Profit contribution of SKU `i`.
    pub fn sku_profit(&self, catalog: &SkuCatalog, i: usize) -> f64 {
        self.realized_sales[i] as f64 * catalog.unit_margin(i, self.prices[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub records: Vec<EpochRecord>,
    pub salvage_loss: f64,
    pub total_profit: f64,
}

impl EpisodeResult {
    pub fn leftover(&self) -> &[u32] {
        &self.records.last().expect("episodes have at least one epoch").inventory_after
    }

    pub fn units_unsold(&self) -> u64 {
        self.leftover().iter().map(|&u| u as u64).sum()
    }
}

/// Salvage loss `sum_i s_i I_i` on the stock left at the horizon. Negative
/// penalties turn the loss into revenue.
pub fn terminal_salvage(final_state: &InventoryState, catalog: &SkuCatalog) -> f64 {
    final_state
        .on_hand
        .iter()
        .zip(&catalog.skus)
        .map(|(&units, sku)| sku.salvage_penalty * units as f64)
        .sum()
}

/// Plays one epoch at frozen `prices`.
pub fn simulate_epoch<R: Rng + ?Sized>(
    market: &Market,
    state: &InventoryState,
    prices: &PriceVector,
    rng: &mut R,
) -> Result<(EpochRecord, InventoryState)> {
    market.check_epoch(state)?;
    let catalog = &market.catalog;
    let rate = market.epoch_rate(state.epoch)?;
    let expected_sales = market.expected_demand(state, prices)?;
    let arrivals = sample_arrival_count(rate, market.episode.epoch_length, rng)?;

    let mut on_hand = state.on_hand.clone();
    let mut sales = vec![0u32; catalog.len()];
    let mut available = availability_set(&on_hand);
    let mut dist: Option<BasketDistribution> = None;
    for _ in 0..arrivals {
        if available.is_empty() {
            break;
        }
        if dist.is_none() {
            dist = Some(market.choice_set(&available)?.distribution(prices, catalog)?);
        }
        let d = dist.as_ref().expect("distribution was just built");
        let basket = d.sample(rng);
        let mut stocked_out = false;
        for &i in basket.items() {
            on_hand[i] -= 1;
            sales[i] += 1;
            stocked_out |= on_hand[i] == 0;
        }
        if stocked_out {
            available = availability_set(&on_hand);
            dist = None;
        }
    }

    let revenue = sales
        .iter()
        .enumerate()
        .map(|(i, &q)| q as f64 * (1.0 - catalog.commission_of(i)) * prices[i])
        .sum();
    let profit = sales
        .iter()
        .enumerate()
        .map(|(i, &q)| q as f64 * catalog.unit_margin(i, prices[i]))
        .sum();
    let next = InventoryState::new(state.epoch + 1, on_hand.clone());
    let record = EpochRecord {
        epoch: state.epoch + 1,
        prices: prices.clone(),
        arrivals,
        realized_sales: sales,
        expected_sales,
        revenue,
        profit,
        inventory_before: state.on_hand.clone(),
        inventory_after: on_hand,
    };
    Ok((record, next))
}

fn audit(market: &Market, epoch: usize, prices: &PriceVector, previous: &PriceVector) -> Result<()> {
    let violation = |sku: usize, reason: String| Error::ContractViolation { epoch, sku, reason };
    if prices.len() != market.num_skus() {
        return Err(violation(0, format!("{} prices for {} SKUs", prices.len(), market.num_skus())));
    }
    let delta = market.episode.delta_max;
    for (i, (&p, &prev)) in prices.iter().zip(previous.iter()).enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(violation(i, format!("price {p} is negative or not finite")));
        }
        if (p - prev).abs() > delta + INERTIA_SLACK {
            return Err(violation(
                i,
                format!("price moved {prev} -> {p}, more than delta_max {delta}"),
            ));
        }
    }
    Ok(())
}

/// Random streams for one episode. Demand and policy draws come from separate
/// ChaCha streams of the same seed, so policies that randomize do not disturb
/// the demand sequence seen by other policies.
pub fn episode_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let demand = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = ChaCha8Rng::seed_from_u64(seed);
    policy.set_stream(1);
    (demand, policy)
}

/// Runs all epochs with explicit random streams, starting from `initial_prices`.
pub fn run_episode_with<P, R>(
    market: &Market,
    policy: &P,
    initial_prices: &PriceVector,
    demand_rng: &mut R,
    policy_rng: &mut dyn RngCore,
) -> Result<EpisodeResult>
where
    P: PricingPolicy + ?Sized,
    R: Rng + ?Sized,
{
    let mut state = market.catalog.initial_state();
    let mut previous = initial_prices.clone();
    let mut records = Vec::with_capacity(market.num_epochs());
    for _ in 0..market.num_epochs() {
        let decision = policy.decide(market, &state, &previous, policy_rng)?;
        audit(market, state.epoch + 1, &decision.prices, &previous)?;
        let (record, next) = simulate_epoch(market, &state, &decision.prices, demand_rng)?;
        previous = decision.prices;
        state = next;
        records.push(record);
    }
    let salvage_loss = terminal_salvage(&state, &market.catalog);
    let total_profit = records.iter().map(|r| r.profit).sum::<f64>() - salvage_loss;
    Ok(EpisodeResult {
        records,
        salvage_loss,
        total_profit,
    })
}

/// One episode, fully determined by `seed`.
pub fn run_episode<P: PricingPolicy + ?Sized>(
    market: &Market,
    policy: &P,
    seed: u64,
) -> Result<EpisodeResult> {
    let initial = market.initial_prices()?;
    let (mut demand, mut policy_rng) = episode_streams(seed);
    run_episode_with(market, policy, &initial, &mut demand, &mut policy_rng)
}

/// Seed of episode `j` in a batch.
pub fn episode_seed(base_seed: u64, j: usize) -> u64 {
    base_seed.wrapping_add(j as u64)
}

/// Runs `num_episodes` independent episodes in parallel; the result order
/// and content do not depend on the thread count.
pub fn run_episodes<P: PricingPolicy + ?Sized>(
    market: &Market,
    policy: &P,
    num_episodes: usize,
    base_seed: u64,
) -> Result<Vec<EpisodeResult>> {
    let initial = market.initial_prices()?;
    (0..num_episodes)
        .into_par_iter()
        .map(|j| {
            let (mut demand, mut policy_rng) = episode_streams(episode_seed(base_seed, j));
            run_episode_with(market, policy, &initial, &mut demand, &mut policy_rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub policy: String,
    pub num_episodes: usize,
    pub mean_profit: f64,
    /// Standard error of `mean_profit`; zero for a single episode.
    pub stderr: f64,
    pub mean_leftover: Vec<f64>,
    pub mean_salvage_loss: f64,
    pub mean_units_unsold: f64,
}

impl PolicyEvaluation {
    pub fn summarize(policy: &str, episodes: &[EpisodeResult]) -> Result<Self> {
        let n = episodes.len();
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one episode".into()));
        }
        let nf = n as f64;
        let mean = episodes.iter().map(|e| e.total_profit).sum::<f64>() / nf;
        let stderr = if n > 1 {
            let var = episodes
                .iter()
                .map(|e| (e.total_profit - mean).powi(2))
                .sum::<f64>()
                / (nf - 1.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        let skus = episodes[0].leftover().len();
        let mean_leftover = (0..skus)
            .map(|i| episodes.iter().map(|e| e.leftover()[i] as f64).sum::<f64>() / nf)
            .collect();
        Ok(PolicyEvaluation {
            policy: policy.to_string(),
            num_episodes: n,
            mean_profit: mean,
            stderr,
            mean_leftover,
            mean_salvage_loss: episodes.iter().map(|e| e.salvage_loss).sum::<f64>() / nf,
            mean_units_unsold: episodes.iter().map(|e| e.units_unsold() as f64).sum::<f64>() / nf,
        })
    }
}

/// Monte Carlo estimate of expected total profit with episode seeds
/// `base_seed + j`.
pub fn evaluate_policy<P: PricingPolicy + ?Sized>(
    market: &Market,
    policy: &P,
    num_episodes: usize,
    base_seed: u64,
) -> Result<PolicyEvaluation> {
    if num_episodes == 0 {
        return Err(Error::InvalidArgument("num_episodes must be >= 1".into()));
    }
    let episodes = run_episodes(market, policy, num_episodes, base_seed)?;
    PolicyEvaluation::summarize(policy.name(), &episodes)
}
