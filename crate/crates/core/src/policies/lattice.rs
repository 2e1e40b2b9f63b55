//! Grid search over per-SKU price lattices. Shared by the myopic baseline and
//! the greedy value-function policy so both break ties the same way.

use rand::RngCore;

use super::{finish, Diagnostics, PolicyDecision, PricingPolicy};
use crate::catalog::{InventoryState, PriceBracket, PriceVector};
use crate::choice::ChoiceSet;
use crate::error::{Error, Result};
use crate::market::Market;

pub const DEFAULT_GRID_POINTS: usize = 101;
/// Above this many searched SKUs the full lattice gives way to coordinate ascent.
pub const FULL_LATTICE_MAX_DIMS: usize = 3;
pub const COORDINATE_PASSES: usize = 5;

/// `points` evenly spaced prices from floor to ceiling inclusive.
pub fn price_grid(bracket: PriceBracket, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::EmptyGrid),
        1 => Ok(vec![bracket.floor]),
        _ => {
            let step = (bracket.ceiling - bracket.floor) / (points - 1) as f64;
            let mut grid: Vec<f64> = (0..points).map(|k| bracket.floor + step * k as f64).collect();
            grid[points - 1] = bracket.ceiling;
            Ok(grid)
        }
    }
}

/// Maximizes `score` over the lattice `grid^dims`, with all other coordinates
/// fixed at `base`. Ties go to the lexicographically smallest price vector
/// (first searched SKU most significant). Returns the maximizer and its score.
pub fn lattice_argmax<F>(
    dims: &[usize],
    base: &[f64],
    grid: &[f64],
    mut score: F,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> f64,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut prices = base.to_vec();
    let finite = |s: f64| if s.is_nan() { f64::NEG_INFINITY } else { s };

    if dims.len() <= FULL_LATTICE_MAX_DIMS {
        let mut idx = vec![0usize; dims.len()];
        let mut best = (prices.clone(), f64::NEG_INFINITY);
        let mut first = true;
        loop {
            for (&d, &k) in dims.iter().zip(&idx) {
                prices[d] = grid[k];
            }
            let s = finite(score(&prices));
            if first || s > best.1 {
                best = (prices.clone(), s);
                first = false;
            }
            // Odometer with the last searched SKU least significant.
            let mut pos = dims.len();
            loop {
                if pos == 0 {
                    return Ok(best);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < grid.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    for &d in dims {
        prices[d] = grid[0];
    }
    let mut best_score = finite(score(&prices));
    for _ in 0..COORDINATE_PASSES {
        let mut moved = false;
        for &d in dims {
            let current = prices[d];
            let mut best_k = None;
            let mut best_here = f64::NEG_INFINITY;
            for (k, &p) in grid.iter().enumerate() {
                prices[d] = p;
                let s = finite(score(&prices));
                if best_k.is_none() || s > best_here {
                    best_k = Some(k);
                    best_here = s;
                }
            }
            prices[d] = grid[best_k.expect("grid is non-empty")];
            if prices[d] != current {
                moved = true;
            }
            best_score = best_here;
        }
        if !moved {
            break;
        }
    }
    Ok((prices, best_score))
}

/// Expected epoch profit at `prices` given the reachable baskets and
/// expected arrivals, together with expected per-SKU demand.
pub(crate) fn epoch_profit(
    market: &Market,
    choices: &ChoiceSet,
    arrivals: f64,
    prices: &[f64],
) -> (f64, Vec<f64>) {
    let demand: Vec<f64> = choices
        .item_demand_unchecked(prices, &market.catalog)
        .into_iter()
        .map(|d| arrivals * d)
        .collect();
    let profit = demand
        .iter()
        .enumerate()
        .map(|(i, d)| d * market.catalog.unit_margin(i, prices[i]))
        .sum();
    (profit, demand)
}

/// Searches the lattice over in-stock SKUs; out-of-stock SKUs hold `hold`
/// (clamped into the bracket). Returns prices before inertia.
pub(crate) fn search<F>(
    market: &Market,
    state: &InventoryState,
    hold: &[f64],
    grid_points: usize,
    mut extra: F,
) -> Result<(PriceVector, f64)>
where
    F: FnMut(&[f64], &[f64]) -> f64,
{
    let bracket = market.bracket();
    let available = state.availability_set();
    let choices = market.choice_set(&available)?;
    let arrivals = market.expected_arrivals(state.epoch)?;
    let grid = price_grid(bracket, grid_points)?;
    let base: Vec<f64> = hold.iter().map(|&p| bracket.clamp(p)).collect();
    let (prices, score) = lattice_argmax(&available, &base, &grid, |p| {
        let (profit, demand) = epoch_profit(market, &choices, arrivals, p);
        profit + extra(p, &demand)
    })?;
    Ok((prices.into(), score))
}

/// Maximizes expected profit of the current epoch alone over the price
/// lattice, then applies inertia. With nothing in stock the previous prices stand.
#[derive(Debug, Clone)]
pub struct MyopicPolicy {
    pub grid_points: usize,
}

impl Default for MyopicPolicy {
    fn default() -> Self {
        MyopicPolicy {
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl MyopicPolicy {
    pub fn new(grid_points: usize) -> Self {
        MyopicPolicy { grid_points }
    }

    /// The lattice argmax with no inertia limit; out-of-stock SKUs sit at the floor.
    pub fn unconstrained(&self, market: &Market, state: &InventoryState) -> Result<PriceVector> {
        let hold = vec![market.bracket().floor; market.num_skus()];
        Ok(search(market, state, &hold, self.grid_points, |_, _| 0.0)?.0)
    }
}

impl PricingPolicy for MyopicPolicy {
    fn name(&self) -> &str {
        "myopic"
    }

    fn decide(
        &self,
        market: &Market,
        state: &InventoryState,
        previous: &PriceVector,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision> {
        market.check_epoch(state)?;
        if state.total_units() == 0 {
            return Ok(PolicyDecision::new(previous.clone()));
        }
        let (raw, objective) = search(market, state, previous, self.grid_points, |_, _| 0.0)?;
        let diagnostics = Diagnostics {
            objective: Some(objective),
            ..Diagnostics::default()
        };
        Ok(finish(market, raw, previous, diagnostics))
    }
}
