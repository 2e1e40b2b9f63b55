//! Target-demand pricing: aim expected sales at a fixed fraction of the stock
//! that remains per remaining epoch, find the price that delivers it, then
//! limit the move from last epoch's price.

use rand::RngCore;

use super::{finish, Diagnostics, PolicyDecision, PricingPolicy};
use crate::catalog::{InventoryState, PriceVector};
use crate::choice::ChoiceSet;
use crate::error::{Error, Result};
use crate::market::Market;

/// Sales target `rho * I / (K - t + 1)` for the 1-based epoch `t`.
pub fn target_demand(inventory: f64, epoch: usize, num_epochs: usize, rho: f64) -> Result<f64> {
    if epoch < 1 || epoch > num_epochs {
        return Err(Error::EpochOutOfRange {
            epoch,
            max: num_epochs,
        });
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1) (got {rho})")));
    }
    Ok(rho * inventory / (num_epochs - epoch + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Demand tolerance as a fraction of expected arrivals `lambda * dt`.
    pub demand_tol_rel: f64,
    pub max_sweeps: usize,
    pub max_bisection_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            demand_tol_rel: 1e-6,
            max_sweeps: 50,
            max_bisection_steps: 200,
        }
    }
}

struct Coordinate {
    price: f64,
    steps: usize,
    unreachable: bool,
}

/// Solves `D_i(p) = target` for one SKU with the other prices held fixed.
/// `D_i` falls strictly in `p_i`, so the root is bracketed whenever the target
/// lies between the demands at the ceiling and at the floor.
#[allow(clippy::too_many_arguments)]
fn solve_coordinate(
    i: usize,
    target: f64,
    prices: &mut [f64],
    choices: &ChoiceSet,
    market: &Market,
    arrivals: f64,
    tol: f64,
    max_steps: usize,
) -> Coordinate {
    let bracket = market.bracket();
    let demand_at = |p: f64, prices: &mut [f64]| {
        prices[i] = p;
        arrivals * choices.item_demand_unchecked(prices, &market.catalog)[i]
    };
    let at_floor = demand_at(bracket.floor, prices) - target;
    if at_floor <= tol {
        prices[i] = bracket.floor;
        return Coordinate {
            price: bracket.floor,
            steps: 0,
            unreachable: at_floor < -tol,
        };
    }
    let at_ceiling = demand_at(bracket.ceiling, prices) - target;
    if at_ceiling >= -tol {
        prices[i] = bracket.ceiling;
        return Coordinate {
            price: bracket.ceiling,
            steps: 0,
            unreachable: at_ceiling > tol,
        };
    }
    let (mut lo, mut hi) = (bracket.floor, bracket.ceiling);
    let mut mid = 0.5 * (lo + hi);
    let mut steps = 0;
    while steps < max_steps {
        steps += 1;
        mid = 0.5 * (lo + hi);
        let excess = demand_at(mid, prices) - target;
        if excess.abs() <= tol || mid == lo || mid == hi {
            break;
        }
        if excess > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    prices[i] = mid;
    Coordinate {
        price: mid,
        steps,
        unreachable: false,
    }
}

/// Finds prices whose expected demand meets `targets` (Gauss-Seidel sweeps of
/// per-SKU bisection), then applies the inertia clamp toward `previous`.
/// Out-of-stock SKUs keep their previous price.
pub fn solve_price_for_targets(
    targets: &[f64],
    state: &InventoryState,
    market: &Market,
    previous: &PriceVector,
    settings: &SolverSettings,
) -> Result<PolicyDecision> {
    market.check_epoch(state)?;
    let n = market.num_skus();
    if targets.len() != n || previous.len() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n} targets and previous prices"
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument(format!("targets must be >= 0 (got {bad})")));
    }
    let bracket = market.bracket();
    let available = state.availability_set();
    let arrivals = market.expected_arrivals(state.epoch)?;
    let tol = settings.demand_tol_rel * arrivals;
    let choices = market.choice_set(&available)?;

    let mut prices: Vec<f64> = previous.iter().map(|&p| bracket.clamp(p)).collect();
    let mut diagnostics = Diagnostics {
        targets: targets.to_vec(),
        iterations: vec![0; n],
        unreachable: vec![false; n],
        ..Diagnostics::default()
    };

    if available.is_empty() {
        diagnostics.achieved_demand = vec![0.0; n];
        return Ok(finish(market, prices.into(), previous, diagnostics));
    }

    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for sweep in 1..=settings.max_sweeps {
        for &i in &available {
            let c = solve_coordinate(
                i,
                targets[i],
                &mut prices,
                &choices,
                market,
                arrivals,
                tol,
                settings.max_bisection_steps,
            );
            prices[i] = c.price;
            diagnostics.iterations[i] += c.steps;
            diagnostics.unreachable[i] = c.unreachable;
        }
        let demand: Vec<f64> = choices
            .item_demand_unchecked(&prices, &market.catalog)
            .into_iter()
            .map(|d| arrivals * d)
            .collect();
        let residuals: Vec<f64> = (0..n).map(|i| demand[i] - targets[i]).collect();
        let worst = available
            .iter()
            .filter(|&&i| !(diagnostics.unreachable[i] || at_bracket_end(prices[i], market)))
            .map(|&i| residuals[i].abs())
            .fold(0.0, f64::max);
        diagnostics.sweeps = sweep;
        if worst <= tol {
            diagnostics.achieved_demand = demand;
            return Ok(finish(market, prices.into(), previous, diagnostics));
        }
        if best.as_ref().is_none_or(|(w, _, _)| worst < *w) {
            best = Some((worst, prices.clone(), residuals));
        }
    }
    let (_, best_prices, residuals) = best.expect("at least one sweep ran");
    Err(Error::NotConverged {
        sweeps: settings.max_sweeps,
        best: best_prices.into(),
        residuals,
    })
}

fn at_bracket_end(p: f64, market: &Market) -> bool {
    let b = market.bracket();
    p == b.floor || p == b.ceiling
}

/// The safety-stock pricing rule: per-SKU targets, root-finding, inertia.
#[derive(Debug, Clone, Default)]
pub struct GuardrailPolicy {
    pub settings: SolverSettings,
}

impl GuardrailPolicy {
    pub fn new(settings: SolverSettings) -> Self {
        GuardrailPolicy { settings }
    }

    pub fn targets(&self, market: &Market, state: &InventoryState) -> Result<Vec<f64>> {
        state
            .on_hand
            .iter()
            .map(|&units| {
                target_demand(
                    units as f64,
                    state.epoch + 1,
                    market.num_epochs(),
                    market.episode.rho,
                )
            })
            .collect()
    }
}

impl PricingPolicy for GuardrailPolicy {
    fn name(&self) -> &str {
        "guardrail"
    }

    fn decide(
        &self,
        market: &Market,
        state: &InventoryState,
        previous: &PriceVector,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision> {
        market.check_epoch(state)?;
        let targets = self.targets(market, state)?;
        solve_price_for_targets(&targets, state, market, previous, &self.settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrivals::ArrivalModel;
    use crate::catalog::{EpisodeConfig, Sku, SkuCatalog};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// alpha = 0, beta = 1: d(p) = 1 / (1 + e^p), so D = target inverts to
    /// p = ln(L / target - 1).
    fn logistic_market(arrivals: f64, ceiling: f64) -> Market {
        let catalog = SkuCatalog::new(vec![Sku::new("x", 0.0, 1.0).with_inventory(100)], 0.0, 0.0).unwrap();
        let mut cfg = EpisodeConfig::new(10, 1.0);
        cfg.price_floor = 0.0;
        cfg.price_ceiling = Some(ceiling);
        Market::new(catalog, cfg, ArrivalModel::Constant(arrivals)).unwrap()
    }

    #[test]
    fn target_examples() {
        assert!((target_demand(100.0, 1, 10, 0.9).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(target_demand(0.0, 3, 10, 0.9).unwrap(), 0.0);
        assert_eq!(target_demand(7.0, 4, 4, 0.5).unwrap(), 3.5);
        assert!(target_demand(7.0, 0, 4, 0.5).is_err());
        assert!(target_demand(7.0, 5, 4, 0.5).is_err());
    }

    #[test]
    fn half_demand_target_solves_to_zero_price() {
        let market = logistic_market(10.0, 20.0);
        let state = market.catalog.initial_state();
        // Start away from the root so the bisection has work to do.
        let prev = PriceVector::new(vec![3.0]);
        let settings = SolverSettings::default();
        let decision = solve_price_for_targets(&[5.0], &state, &market, &prev, &settings).unwrap();
        assert!(decision.prices[0].abs() < 1e-5, "{}", decision.prices);
    }

    #[test]
    fn matches_logistic_inversion() {
        let market = logistic_market(10.0, 20.0);
        let state = market.catalog.initial_state();
        let prev = PriceVector::new(vec![0.0]);
        for target in [0.1, 0.5, 1.0, 2.5, 4.0, 4.99] {
            let d = solve_price_for_targets(&[target], &state, &market, &prev, &Default::default()).unwrap();
            let exact = (10.0f64 / target - 1.0).ln();
            assert!((d.prices[0] - exact).abs() < 1e-4, "target {target}: {} vs {exact}", d.prices[0]);
        }
    }

    #[test]
    fn zero_target_clamps_to_ceiling() {
        let market = logistic_market(10.0, 5.0);
        let state = market.catalog.initial_state();
        let d = solve_price_for_targets(&[0.0], &state, &market, &PriceVector::new(vec![1.0]), &Default::default())
            .unwrap();
        assert_eq!(d.prices[0], 5.0);
        assert!(d.diagnostics.unreachable[0]);
        assert!(d.diagnostics.achieved_demand[0] > 0.0);
    }

    #[test]
    fn oversized_target_clamps_to_floor() {
        let market = logistic_market(10.0, 20.0);
        let state = market.catalog.initial_state();
        let d = solve_price_for_targets(&[12.0], &state, &market, &PriceVector::new(vec![1.0]), &Default::default())
            .unwrap();
        assert_eq!(d.prices[0], 0.0);
        assert!(d.diagnostics.unreachable[0]);
    }

    fn two_sku_market(gamma: f64, delta_max: f64) -> Market {
        let skus = vec![
            Sku::new("a", 2.0, 0.8).with_inventory(30).with_cost(0.5),
            Sku::new("b", 2.0, 0.8).with_inventory(30).with_cost(0.5),
        ];
        let catalog = SkuCatalog::new(skus, 0.1, gamma).unwrap();
        let mut cfg = EpisodeConfig::new(6, 1.0);
        cfg.delta_max = delta_max;
        cfg.initial_prices = Some(vec![2.0, 2.0]);
        Market::new(catalog, cfg, ArrivalModel::Constant(12.0)).unwrap()
    }

    #[test]
    fn symmetric_skus_get_identical_prices() {
        let market = two_sku_market(0.4, f64::INFINITY);
        let state = market.catalog.initial_state();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = GuardrailPolicy::default()
            .decide(&market, &state, &PriceVector::new(vec![2.0, 2.0]), &mut rng)
            .unwrap();
        assert!((d.prices[0] - d.prices[1]).abs() < 1e-6, "{}", d.prices);
        for i in 0..2 {
            assert!((d.diagnostics.achieved_demand[i] - 4.5).abs() <= 12.0 * 1e-6);
        }
    }

    #[test]
    fn stocked_out_state_keeps_previous_prices() {
        let market = two_sku_market(0.0, 1.0);
        let state = InventoryState::new(2, vec![0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let prev = PriceVector::new(vec![1.25, 3.5]);
        let d = GuardrailPolicy::default().decide(&market, &state, &prev, &mut rng).unwrap();
        assert_eq!(d.prices, prev);
        assert_eq!(d.diagnostics.targets, vec![0.0, 0.0]);
    }

    #[test]
    fn inertia_limits_the_solved_move() {
        let market = two_sku_market(0.0, 0.25);
        let state = market.catalog.initial_state();
        let prev = PriceVector::new(vec![0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = GuardrailPolicy::default().decide(&market, &state, &prev, &mut rng).unwrap();
        let raw = d.raw_prices();
        for i in 0..2 {
            assert!(raw[i] > 0.75);
            assert_eq!(d.prices[i], 0.75);
            assert!(d.diagnostics.inertia_clamped[i]);
        }
    }

    #[test]
    fn larger_target_never_raises_price() {
        let market = two_sku_market(-0.3, f64::INFINITY);
        let state = market.catalog.initial_state();
        let prev = PriceVector::new(vec![2.0, 2.0]);
        let settings = SolverSettings::default();
        let mut last = f64::INFINITY;
        for k in 1..=20 {
            let target = 0.5 * k as f64;
            let d = solve_price_for_targets(&[target, 3.0], &state, &market, &prev, &settings).unwrap();
            let p = d.raw_prices()[0];
            assert!(p <= last + 1e-9, "target {target}: {p} > {last}");
            last = p;
        }
    }

    #[test]
    fn non_convergence_reports_best_iterate() {
        let market = two_sku_market(0.8, f64::INFINITY);
        let state = market.catalog.initial_state();
        let settings = SolverSettings {
            max_sweeps: 1,
            max_bisection_steps: 3,
            ..Default::default()
        };
        let err = solve_price_for_targets(&[4.0, 4.0], &state, &market, &PriceVector::new(vec![2.0, 2.0]), &settings)
            .unwrap_err();
        match err {
            Error::NotConverged { best, residuals, .. } => {
                assert_eq!(best.len(), 2);
                assert_eq!(residuals.len(), 2);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
