use crate::arrivals::ArrivalModel;
use crate::catalog::{EpisodeConfig, InventoryState, PriceBracket, PriceVector, SkuCatalog};
use crate::choice::ChoiceSet;
use crate::error::{Error, Result};
use crate::policies::lattice::MyopicPolicy;

/// Everything an episode needs besides a policy and a random stream: the
/// catalog, the horizon and guardrail settings, and the arrival process.
/// Shared read-only across concurrent episodes.
#[derive(Debug, Clone)]
pub struct Market {
    pub catalog: SkuCatalog,
    pub episode: EpisodeConfig,
    pub arrivals: ArrivalModel,
    /// Required when more than 16 SKUs can be in stock at once.
    pub max_basket_size: Option<usize>,
}

impl Market {
    pub fn new(catalog: SkuCatalog, episode: EpisodeConfig, arrivals: ArrivalModel) -> Result<Self> {
        let catalog = catalog.validate()?;
        episode.validate(&catalog)?;
        arrivals.validate(episode.num_epochs, episode.epoch_length)?;
        Ok(Market {
            catalog,
            episode,
            arrivals,
            max_basket_size: None,
        })
    }

    pub fn with_max_basket_size(mut self, size: Option<usize>) -> Self {
        self.max_basket_size = size;
        self
    }

    pub fn num_skus(&self) -> usize {
        self.catalog.len()
    }

    pub fn num_epochs(&self) -> usize {
        self.episode.num_epochs
    }

    pub fn bracket(&self) -> PriceBracket {
        self.episode.price_bracket(&self.catalog)
    }

    /// Arrival rate during the 0-based epoch index.
    pub fn epoch_rate(&self, epoch_index: usize) -> Result<f64> {
        self.arrivals
            .rate_for_epoch(epoch_index, self.episode.epoch_length)
    }

    /// Expected arrivals `lambda * dt` during the 0-based epoch index.
    pub fn expected_arrivals(&self, epoch_index: usize) -> Result<f64> {
        Ok(self.epoch_rate(epoch_index)? * self.episode.epoch_length)
    }

    pub fn choice_set(&self, available: &[usize]) -> Result<ChoiceSet> {
        ChoiceSet::new(available, self.max_basket_size)
    }

    /// Expected units sold per SKU in the state's epoch at `prices`.
    pub fn expected_demand(&self, state: &InventoryState, prices: &[f64]) -> Result<Vec<f64>> {
        let scale = self.expected_arrivals(state.epoch)?;
        let d = self
            .choice_set(&state.availability_set())?
            .item_demand(prices, &self.catalog)?;
        Ok(d.into_iter().map(|x| scale * x).collect())
    }

    /// Expected epoch profit `sum_i D_i(p) ((1 - eta_i) p_i - c_i)`.
    pub fn expected_profit(&self, state: &InventoryState, prices: &[f64]) -> Result<f64> {
        Ok(self
            .expected_demand(state, prices)?
            .iter()
            .enumerate()
            .map(|(i, d)| d * self.catalog.unit_margin(i, prices[i]))
            .sum())
    }

    /// Prices posted before the first epoch: the configured vector, or the
    /// myopic optimum at the initial state with no inertia limit.
    pub fn initial_prices(&self) -> Result<PriceVector> {
        match &self.episode.initial_prices {
            Some(p) => Ok(PriceVector::new(p.clone())),
            None => MyopicPolicy::default().unconstrained(self, &self.catalog.initial_state()),
        }
    }

    pub(crate) fn check_epoch(&self, state: &InventoryState) -> Result<()> {
        if state.epoch >= self.num_epochs() {
            return Err(Error::EpochOutOfRange {
                epoch: state.epoch + 1,
                max: self.num_epochs(),
            });
        }
        if state.on_hand.len() != self.num_skus() {
            return Err(Error::InvalidArgument(format!(
                "state tracks {} SKUs, catalog has {}",
                state.on_hand.len(),
                self.num_skus()
            )));
        }
        Ok(())
    }
}
