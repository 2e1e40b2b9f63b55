//! Scenarios shared by the benchmarks under `benches/`.

use freshprice::{ArrivalModel, EpisodeConfig, Market, Sku, SkuCatalog};

/// `n` SKUs with spread-out attractiveness and prices around 1 to 3.
pub fn catalog(n: usize, inventory: i64) -> SkuCatalog {
    let skus = (0..n)
        .map(|i| {
            let f = i as f64 / n.max(1) as f64;
            Sku::new(format!("sku{i}"), 0.5 + f, 0.6 + 0.4 * f)
                .with_cost(0.3 + 0.2 * f)
                .with_salvage(0.5)
                .with_inventory(inventory)
        })
        .collect();
    SkuCatalog::new(skus, 0.1, 0.2).expect("valid benchmark catalog")
}

pub fn market(n: usize, epochs: usize, rate: f64) -> Market {
    let mut cfg = EpisodeConfig::new(epochs, 1.0);
    cfg.delta_max = 0.5;
    cfg.price_ceiling = Some(6.0);
    cfg.initial_prices = Some(vec![2.0; n]);
    Market::new(catalog(n, 40), cfg, ArrivalModel::Constant(rate)).expect("valid benchmark market")
}
