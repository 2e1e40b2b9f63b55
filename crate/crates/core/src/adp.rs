//! Linear value-function approximation over inventory.
//!
//! `V_t(I) = w_t . I`, with `w_{K+1} = -s` fixed by the salvage loss. Earlier
//! weights come from one backward least-squares sweep over sampled
//! trajectories: for t = K..1 regress `r_t + w_{t+1} . I_{t+1}` on `I_t`.
//! The greedy policy then maximizes expected epoch profit plus the
//! continuation value of the expected next inventory.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{InventoryState, PriceVector, SkuCatalog};
use crate::error::{Error, Result};
use crate::market::Market;
use crate::policies::lattice::{search, DEFAULT_GRID_POINTS};
use crate::policies::{finish, Diagnostics, ExploringPolicy, GuardrailPolicy, PolicyDecision, PricingPolicy};
use crate::simulator::{run_episodes, simulate_epoch, EpisodeResult};

pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Per-epoch weights for epochs `1..=K+1`; the last row is the terminal `-s`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueWeights {
    rows: Vec<Vec<f64>>,
}

impl ValueWeights {
    /// Zero weights for epochs `1..=K`, terminal row `-s`.
    pub fn terminal_only(catalog: &SkuCatalog, num_epochs: usize) -> Self {
        let mut rows = vec![vec![0.0; catalog.len()]; num_epochs];
        rows.push(catalog.skus.iter().map(|s| -s.salvage_penalty).collect());
        ValueWeights { rows }
    }

    /// Builds weights from explicit rows for epochs `1..=K`; the terminal row
    /// is appended from the catalog.
    pub fn from_rows(catalog: &SkuCatalog, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = rows.iter().position(|r| r.len() != catalog.len()) {
            return Err(Error::InvalidArgument(format!(
                "weight row for epoch {} has {} entries, catalog has {}",
                bad + 1,
                rows[bad].len(),
                catalog.len()
            )));
        }
        if rows.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("value weights must be finite".into()));
        }
        let mut rows = rows;
        rows.push(catalog.skus.iter().map(|s| -s.salvage_penalty).collect());
        Ok(ValueWeights { rows })
    }

    pub fn num_epochs(&self) -> usize {
        self.rows.len() - 1
    }

    /// Weights of the 1-based epoch `t`, `1 <= t <= K + 1`.
    pub fn get(&self, t: usize) -> Result<&[f64]> {
        if t == 0 || t > self.rows.len() {
            return Err(Error::MissingWeights(t));
        }
        Ok(&self.rows[t - 1])
    }

    pub fn terminal(&self) -> &[f64] {
        self.rows.last().expect("terminal row always present")
    }

    pub fn value_estimate(&self, t: usize, inventory: &[f64]) -> Result<f64> {
        let w = self.get(t).map_err(|_| Error::EpochOutOfRange {
            epoch: t,
            max: self.rows.len(),
        })?;
        if w.len() != inventory.len() {
            return Err(Error::InvalidArgument(format!(
                "inventory has {} entries, weights have {}",
                inventory.len(),
                w.len()
            )));
        }
        Ok(dot(w, inventory))
    }

    /// Writes `epoch,sku_id,weight`, including the terminal epoch `K + 1`.
    pub fn write_csv(&self, catalog: &SkuCatalog, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "sku_id", "weight"])?;
        for (t, row) in self.rows.iter().enumerate() {
            for (sku, weight) in catalog.skus.iter().zip(row) {
                w.write_record([(t + 1).to_string(), sku.id.clone(), weight.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads weights written by [`ValueWeights::write_csv`]. The terminal rows
    /// must match `-s` from the catalog.
    pub fn read_csv(catalog: &SkuCatalog, path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let display = path.display().to_string();
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["epoch", "sku_id", "weight"] {
            return Err(Error::Parse {
                path: display,
                line: 1,
                message: "expected header `epoch,sku_id,weight`".into(),
            });
        }
        let mut by_epoch: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let line = row + 2;
            let parse_err = |message: String| Error::Parse {
                path: display.clone(),
                line,
                message,
            };
            let epoch: usize = record[0].trim().parse().map_err(|e| parse_err(format!("epoch: {e}")))?;
            let sku = catalog
                .index_of(record[1].trim())
                .ok_or_else(|| parse_err(format!("unknown SKU `{}`", &record[1])))?;
            let weight: f64 = record[2].trim().parse().map_err(|e| parse_err(format!("weight: {e}")))?;
            by_epoch.entry(epoch).or_insert_with(|| vec![None; catalog.len()])[sku] = Some(weight);
        }
        let last = by_epoch.keys().next_back().copied().unwrap_or(0);
        if last < 2 || by_epoch.keys().copied().ne(1..=last) {
            return Err(Error::InvalidArgument(format!(
                "{display}: weights must cover epochs 1..=K+1 contiguously"
            )));
        }
        let mut rows = Vec::with_capacity(last);
        for (epoch, row) in by_epoch {
            let row: Option<Vec<f64>> = row.into_iter().collect();
            rows.push(row.ok_or_else(|| {
                Error::InvalidArgument(format!("{display}: epoch {epoch} is missing a SKU"))
            })?);
        }
        let terminal = rows.pop().expect("at least two epochs");
        let weights = ValueWeights::from_rows(catalog, rows)?;
        if terminal != weights.terminal() {
            return Err(Error::InvalidArgument(format!(
                "{display}: terminal weights {terminal:?} do not equal -salvage_penalty"
            )));
        }
        Ok(weights)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One `(I_t, p_t, r_t, I_{t+1})` transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    /// 1-based epoch.
    pub epoch: usize,
    pub inventory: Vec<f64>,
    pub prices: PriceVector,
    pub reward: f64,
    pub next_inventory: Vec<f64>,
}

impl TrajectorySample {
    pub fn from_episode(episode: &EpisodeResult) -> impl Iterator<Item = TrajectorySample> + '_ {
        episode.records.iter().map(|r| TrajectorySample {
            epoch: r.epoch,
            inventory: r.inventory_before.iter().map(|&u| u as f64).collect(),
            prices: r.prices.clone(),
            reward: r.profit,
            next_inventory: r.inventory_after.iter().map(|&u| u as f64).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub weights: ValueWeights,
    /// Root-mean-square regression residual per epoch `1..=K`.
    pub residual_rms: Vec<f64>,
}

/// Backward fitted value iteration. Each epoch solves the ridge-regularized
/// normal equations of the mean squared error, with the penalty centered on the
/// already-fitted `w_{t+1}`:
/// `(X'X / n + ridge I) w = X'y / n + ridge w_{t+1}`.
/// Replicating every sample leaves the solution unchanged, and directions the
/// data cannot identify (for example when inventory never moves) keep the
/// next epoch's weights instead of collapsing to zero.
pub fn fit_weights(
    samples: &[TrajectorySample],
    catalog: &SkuCatalog,
    num_epochs: usize,
    ridge: f64,
) -> Result<FitReport> {
    let n_skus = catalog.len();
    let mut by_epoch: Vec<Vec<&TrajectorySample>> = vec![Vec::new(); num_epochs];
    for s in samples {
        if s.epoch == 0 || s.epoch > num_epochs {
            return Err(Error::EpochOutOfRange {
                epoch: s.epoch,
                max: num_epochs,
            });
        }
        if s.inventory.len() != n_skus || s.next_inventory.len() != n_skus {
            return Err(Error::InvalidArgument(format!(
                "sample at epoch {} does not match the {n_skus}-SKU catalog",
                s.epoch
            )));
        }
        by_epoch[s.epoch - 1].push(s);
    }

    let mut rows = vec![vec![0.0; n_skus]; num_epochs];
    let mut residual_rms = vec![0.0; num_epochs];
    let mut next_w: Vec<f64> = catalog.skus.iter().map(|s| -s.salvage_penalty).collect();
    for t in (1..=num_epochs).rev() {
        let group = &by_epoch[t - 1];
        if group.is_empty() {
            return Err(Error::EmptyEpoch(t));
        }
        let m = group.len();
        let x = DMatrix::from_fn(m, n_skus, |r, c| group[r].inventory[c]);
        let y = DVector::from_iterator(m, group.iter().map(|s| s.reward + dot(&next_w, &s.next_inventory)));
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteTarget(t));
        }
        let scale = 1.0 / m as f64;
        let gram = x.transpose() * &x * scale + DMatrix::identity(n_skus, n_skus) * ridge;
        // Solved for the offset from w_{t+1}, which is exact when w_{t+1}
        // already fits the targets.
        let anchor = DVector::from_column_slice(&next_w);
        let rhs = x.transpose() * (&y - &x * &anchor) * scale;
        let offset = match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => gram.lu().solve(&rhs).ok_or(Error::Singular(t))?,
        };
        let w = anchor + offset;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(t));
        }
        let resid = &y - &x * &w;
        residual_rms[t - 1] = (resid.norm_squared() / m as f64).sqrt();
        rows[t - 1] = w.iter().copied().collect();
        next_w = rows[t - 1].clone();
    }
    Ok(FitReport {
        weights: ValueWeights::from_rows(catalog, rows)?,
        residual_rms,
    })
}

/// How the greedy policy evaluates `E[V_{t+1}(I_{t+1})]` for a candidate price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Continuation {
    /// `w . max(0, I - D(p))`.
    CertaintyEquivalent,
    /// Average of `w . I_{t+1}` over simulated epochs, with the same draws
    /// reused for every candidate price.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Greedy one-step lookahead against the fitted value function.
#[derive(Debug, Clone)]
pub struct AdpGreedyPolicy {
    pub weights: ValueWeights,
    pub grid_points: usize,
    pub continuation: Continuation,
}

impl AdpGreedyPolicy {
    pub fn new(weights: ValueWeights) -> Self {
        AdpGreedyPolicy {
            weights,
            grid_points: DEFAULT_GRID_POINTS,
            continuation: Continuation::CertaintyEquivalent,
        }
    }

    pub fn with_grid_points(mut self, points: usize) -> Self {
        self.grid_points = points;
        self
    }

    pub fn with_continuation(mut self, continuation: Continuation) -> Self {
        self.continuation = continuation;
        self
    }
}

impl PricingPolicy for AdpGreedyPolicy {
    fn name(&self) -> &str {
        "adp"
    }

    fn decide(
        &self,
        market: &Market,
        state: &InventoryState,
        previous: &PriceVector,
        _rng: &mut dyn RngCore,
    ) -> Result<PolicyDecision> {
        market.check_epoch(state)?;
        let next_w = self.weights.get(state.epoch + 2)?;
        if state.total_units() == 0 {
            return Ok(PolicyDecision::new(previous.clone()));
        }
        let inventory = state.as_f64();
        let (raw, objective) = match self.continuation {
            Continuation::CertaintyEquivalent => {
                search(market, state, previous, self.grid_points, |_, demand| {
                    inventory
                        .iter()
                        .zip(demand)
                        .zip(next_w)
                        .map(|((i, d), w)| w * (i - d).max(0.0))
                        .sum()
                })?
            }
            Continuation::MonteCarlo { samples, seed } => {
                let mut failure = None;
                let samples = samples.max(1);
                let out = search(market, state, previous, self.grid_points, |p, _| {
                    let prices = PriceVector::new(p.to_vec());
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ state.epoch as u64);
                    let mut total = 0.0;
                    for _ in 0..samples {
                        match simulate_epoch(market, state, &prices, &mut rng) {
                            Ok((_, next)) => total += dot(next_w, &next.as_f64()),
                            Err(e) => {
                                failure.get_or_insert(e);
                                return f64::NEG_INFINITY;
                            }
                        }
                    }
                    total / samples as f64
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                out
            }
        };
        let diagnostics = Diagnostics {
            objective: Some(objective),
            ..Diagnostics::default()
        };
        Ok(finish(market, raw, previous, diagnostics))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub episodes: usize,
    pub ridge: f64,
    /// Extra rounds of re-simulating under the fitted greedy policy (with
    /// exploration) and refitting. Zero gives the single backward pass.
    pub refit_iterations: usize,
    /// Exploration amplitude; `None` uses half of `delta_max`.
    pub exploration: Option<f64>,
    pub grid_points: usize,
    pub continuation: Continuation,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            episodes: 200,
            ridge: DEFAULT_RIDGE,
            refit_iterations: 0,
            exploration: None,
            grid_points: DEFAULT_GRID_POINTS,
            continuation: Continuation::CertaintyEquivalent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub weights: ValueWeights,
    pub residual_rms: Vec<f64>,
    pub samples: usize,
}

impl TrainingReport {
    pub fn policy(&self, settings: &TrainSettings) -> AdpGreedyPolicy {
        AdpGreedyPolicy::new(self.weights.clone())
            .with_grid_points(settings.grid_points)
            .with_continuation(settings.continuation)
    }
}

/// Guardrail pricing with uniform price noise, the default data-collection policy.
pub fn default_behavior(market: &Market, settings: &TrainSettings) -> ExploringPolicy<GuardrailPolicy> {
    let amplitude = settings
        .exploration
        .unwrap_or_else(|| ExploringPolicy::<GuardrailPolicy>::default_amplitude(market));
    ExploringPolicy::new(GuardrailPolicy::default(), amplitude)
}

fn collect(episodes: &[EpisodeResult]) -> Vec<TrajectorySample> {
    episodes.iter().flat_map(TrajectorySample::from_episode).collect()
}

/// Simulates `settings.episodes` trajectories under `behavior`, fits the
/// weights, and optionally refits under the resulting greedy policy.
pub fn train_adp<P: PricingPolicy + ?Sized>(
    market: &Market,
    behavior: &P,
    settings: &TrainSettings,
    seed: u64,
) -> Result<TrainingReport> {
    if settings.episodes == 0 {
        return Err(Error::InvalidArgument("training needs at least one episode".into()));
    }
    let k = market.num_epochs();
    let episodes = run_episodes(market, behavior, settings.episodes, seed)?;
    let samples = collect(&episodes);
    let mut fit = fit_weights(&samples, &market.catalog, k, settings.ridge)?;
    let mut sample_count = samples.len();
    log::debug!("fitted {} samples, residual rms {:?}", sample_count, fit.residual_rms);

    let amplitude = settings
        .exploration
        .unwrap_or_else(|| ExploringPolicy::<GuardrailPolicy>::default_amplitude(market));
    for round in 1..=settings.refit_iterations {
        let greedy = AdpGreedyPolicy::new(fit.weights.clone())
            .with_grid_points(settings.grid_points)
            .with_continuation(settings.continuation);
        let explorer = ExploringPolicy::new(greedy, amplitude);
        let round_seed = seed.wrapping_add((round * settings.episodes) as u64);
        let episodes = run_episodes(market, &explorer, settings.episodes, round_seed)?;
        let samples = collect(&episodes);
        sample_count = samples.len();
        fit = fit_weights(&samples, &market.catalog, k, settings.ridge)?;
        log::debug!("refit round {round}: residual rms {:?}", fit.residual_rms);
    }
    Ok(TrainingReport {
        weights: fit.weights,
        residual_rms: fit.residual_rms,
        samples: sample_count,
    })
}
