//! CSV exports of episodes and policy evaluations, with readers for each.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::SkuCatalog;
use crate::error::{Error, Result};
use crate::simulator::{EpisodeResult, PolicyEvaluation};

/// One SKU in one epoch of one episode. `epoch_profit` is this SKU's share
/// of the epoch profit, so the rows of an epoch sum to its total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub episode: usize,
    pub epoch: usize,
    pub sku_id: String,
    pub price: f64,
    pub expected_sales: f64,
    pub realized_sales: u32,
    pub inventory_after: u32,
    pub epoch_profit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTotalRow {
    pub episode: usize,
    pub total_profit: f64,
    pub salvage_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub mean_profit: f64,
    pub stderr: f64,
    pub mean_salvage_loss: f64,
    pub mean_units_unsold: f64,
}

impl From<&PolicyEvaluation> for ComparisonRow {
    fn from(e: &PolicyEvaluation) -> Self {
        ComparisonRow {
            policy: e.policy.clone(),
            mean_profit: e.mean_profit,
            stderr: e.stderr,
            mean_salvage_loss: e.mean_salvage_loss,
            mean_units_unsold: e.mean_units_unsold,
        }
    }
}

pub fn trajectory_rows<'a>(
    catalog: &'a SkuCatalog,
    episodes: &'a [EpisodeResult],
) -> impl Iterator<Item = TrajectoryRow> + 'a {
    episodes.iter().enumerate().flat_map(move |(j, ep)| {
        ep.records.iter().flat_map(move |r| {
            catalog.skus.iter().enumerate().map(move |(i, sku)| TrajectoryRow {
                episode: j,
                epoch: r.epoch,
                sku_id: sku.id.clone(),
                price: r.prices[i],
                expected_sales: r.expected_sales[i],
                realized_sales: r.realized_sales[i],
                inventory_after: r.inventory_after[i],
                epoch_profit: r.sku_profit(catalog, i),
            })
        })
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_trajectories(path: &Path, catalog: &SkuCatalog, episodes: &[EpisodeResult]) -> Result<()> {
    write_rows(path, trajectory_rows(catalog, episodes))
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>> {
    read_rows(path)
}

pub fn write_episode_totals(path: &Path, episodes: &[EpisodeResult]) -> Result<()> {
    write_rows(
        path,
        episodes.iter().enumerate().map(|(j, e)| EpisodeTotalRow {
            episode: j,
            total_profit: e.total_profit,
            salvage_loss: e.salvage_loss,
        }),
    )
}

pub fn read_episode_totals(path: &Path) -> Result<Vec<EpisodeTotalRow>> {
    read_rows(path)
}

pub fn write_comparison(path: &Path, evaluations: &[PolicyEvaluation]) -> Result<()> {
    write_rows(path, evaluations.iter().map(ComparisonRow::from))
}

pub fn read_comparison(path: &Path) -> Result<Vec<ComparisonRow>> {
    read_rows(path)
}

/// `policy,mean_profit,stderr,mean_leftover_<sku_id>...`
pub fn write_summary(path: &Path, catalog: &SkuCatalog, evaluations: &[PolicyEvaluation]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["policy".to_string(), "mean_profit".into(), "stderr".into()];
    header.extend(catalog.skus.iter().map(|s| format!("mean_leftover_{}", s.id)));
    w.write_record(&header)?;
    for e in evaluations {
        let mut row = vec![e.policy.clone(), e.mean_profit.to_string(), e.stderr.to_string()];
        row.extend(e.mean_leftover.iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub mean_profit: f64,
    pub stderr: f64,
    /// `(sku_id, mean leftover)` in column order.
    pub mean_leftover: Vec<(String, f64)>,
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let display = path.display().to_string();
    let skus: Vec<String> = headers
        .iter()
        .skip(3)
        .map(|h| {
            h.strip_prefix("mean_leftover_").map(str::to_string).ok_or_else(|| Error::Parse {
                path: display.clone(),
                line: 1,
                message: format!("unexpected column `{h}`"),
            })
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record?;
        let num = |field: usize| -> Result<f64> {
            record[field].parse().map_err(|e| Error::Parse {
                path: display.clone(),
                line: k + 2,
                message: format!("column {}: {e}", &headers[field]),
            })
        };
        rows.push(SummaryRow {
            policy: record[0].to_string(),
            mean_profit: num(1)?,
            stderr: num(2)?,
            mean_leftover: skus
                .iter()
                .enumerate()
                .map(|(i, id)| Ok((id.clone(), num(3 + i)?)))
                .collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrivals::ArrivalModel;
    use crate::catalog::{EpisodeConfig, Sku};
    use crate::market::Market;
    use crate::policies::GuardrailPolicy;
    use crate::simulator::{evaluate_policy, run_episodes};

    fn market() -> Market {
        let skus = vec![
            Sku::new("milk", 2.0, 1.0).with_inventory(9).with_salvage(0.4).with_cost(0.3),
            Sku::new("curd", 1.0, 0.6).with_inventory(5).with_salvage(-0.1),
        ];
        let catalog = SkuCatalog::new(skus, 0.1, 0.2).unwrap();
        let mut cfg = EpisodeConfig::new(4, 1.0);
        cfg.delta_max = 0.5;
        cfg.initial_prices = Some(vec![2.0, 2.0]);
        Market::new(catalog, cfg, ArrivalModel::Constant(3.0)).unwrap()
    }

    #[test]
    fn trajectory_and_totals_round_trip() {
        let m = market();
        let episodes = run_episodes(&m, &GuardrailPolicy::default(), 3, 10).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectories(&path, &m.catalog, &episodes).unwrap();
        let rows = read_trajectories(&path).unwrap();
        assert_eq!(rows, trajectory_rows(&m.catalog, &episodes).collect::<Vec<_>>());
        assert_eq!(rows.len(), 3 * 4 * 2);

        // Per-SKU profit rows add back to the episode total.
        for (j, ep) in episodes.iter().enumerate() {
            let sum: f64 = rows.iter().filter(|r| r.episode == j).map(|r| r.epoch_profit).sum();
            assert!((sum - ep.salvage_loss - ep.total_profit).abs() < 1e-9);
        }

        let totals = dir.path().join("e.csv");
        write_episode_totals(&totals, &episodes).unwrap();
        let back = read_episode_totals(&totals).unwrap();
        assert_eq!(back[2].total_profit, episodes[2].total_profit);
    }

    #[test]
    fn summary_and_comparison_round_trip() {
        let m = market();
        let eval = evaluate_policy(&m, &GuardrailPolicy::default(), 5, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_summary(&path, &m.catalog, std::slice::from_ref(&eval)).unwrap();
        let rows = read_summary(&path).unwrap();
        assert_eq!(rows[0].mean_profit, eval.mean_profit);
        assert_eq!(rows[0].mean_leftover[1], ("curd".to_string(), eval.mean_leftover[1]));

        let path = dir.path().join("c.csv");
        write_comparison(&path, &[eval.clone(), eval.clone()]).unwrap();
        let rows = read_comparison(&path).unwrap();
        assert_eq!(rows[0], ComparisonRow::from(&eval));
        assert_eq!(rows[0], rows[1]);
    }
}
