use freshprice::{
    evaluate_policy, expected_demand, run_episode, run_episodes, ArrivalModel, EpisodeConfig,
    FixedPricePolicy, GuardrailPolicy, Market, MyopicPolicy, PriceVector, Sku, SkuCatalog,
};

/// `E[min(I, N)]`-style recursion for one SKU at fixed prices, computed from
/// the Poisson pmf by hand. Returns the exact expected total profit.
fn exact_fixed_price_profit(
    lambda_dt: f64,
    buy: f64,
    margin: f64,
    salvage: f64,
    initial: usize,
    epochs: usize,
) -> f64 {
    let mean = lambda_dt * buy;
    let pmf = |inv: usize| -> Vec<f64> {
        let mut out = Vec::new();
        let mut term = (-mean).exp();
        let mut cum = 0.0;
        for k in 0..inv {
            out.push(term);
            cum += term;
            term *= mean / (k + 1) as f64;
        }
        out.push(1.0 - cum);
        out
    };
    let mut v: Vec<f64> = (0..=initial).map(|i| -salvage * i as f64).collect();
    for _ in 0..epochs {
        v = (0..=initial)
            .map(|i| {
                pmf(i)
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p * (k as f64 * margin + v[i - k]))
                    .sum()
            })
            .collect();
    }
    v[initial]
}

#[test]
fn fixed_price_evaluation_matches_exact_enumeration() {
    let (alpha, beta, price, cost, commission, salvage) = (1.0, 1.0, 1.5, 0.4, 0.1, 0.7);
    let sku = Sku::new("x", alpha, beta)
        .with_cost(cost)
        .with_salvage(salvage)
        .with_inventory(3);
    let catalog = SkuCatalog::new(vec![sku], commission, 0.0).unwrap();
    let mut cfg = EpisodeConfig::new(2, 1.0);
    cfg.initial_prices = Some(vec![price]);
    let market = Market::new(catalog, cfg, ArrivalModel::Constant(2.5)).unwrap();

    let buy = 1.0 / (1.0 + (-(alpha - beta * price)).exp());
    let margin = (1.0 - commission) * price - cost;
    let exact = exact_fixed_price_profit(2.5, buy, margin, salvage, 3, 2);
    let eval = evaluate_policy(&market, &FixedPricePolicy::new(vec![price]), 20_000, 77).unwrap();
    assert!(
        (eval.mean_profit - exact).abs() <= 3.0 * eval.stderr,
        "{} +- {} vs {exact}",
        eval.mean_profit,
        eval.stderr
    );
}

#[test]
fn mean_sales_converge_to_expected_demand() {
    let skus = vec![
        Sku::new("a", 0.5, 0.7).with_inventory(10_000),
        Sku::new("b", 1.0, 1.1).with_inventory(10_000),
    ];
    let catalog = SkuCatalog::new(skus, 0.0, -0.3).unwrap();
    let prices = vec![1.0, 1.2];
    let mut cfg = EpisodeConfig::new(1, 1.0);
    cfg.initial_prices = Some(prices.clone());
    let market = Market::new(catalog, cfg, ArrivalModel::Constant(8.0)).unwrap();
    let expected = expected_demand(&prices, &[0, 1], &market.catalog, 8.0, 1.0).unwrap();

    let episodes = run_episodes(&market, &FixedPricePolicy::new(prices), 10_000, 3).unwrap();
    for i in 0..2 {
        let sales: Vec<f64> = episodes.iter().map(|e| e.records[0].realized_sales[i] as f64).collect();
        let n = sales.len() as f64;
        let mean = sales.iter().sum::<f64>() / n;
        let var = sales.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!((mean - expected[i]).abs() <= 3.0 * se, "sku {i}: {mean} vs {}", expected[i]);
    }
}

#[test]
fn epoch_accounting_is_exact() {
    let skus = vec![
        Sku::new("a", 1.5, 0.5).with_inventory(7).with_cost(0.25).with_salvage(0.5),
        Sku::new("b", 1.0, 0.5).with_inventory(5).with_cost(0.5).with_commission(0.25),
    ];
    let catalog = SkuCatalog::new(skus, 0.125, 0.5).unwrap();
    let mut cfg = EpisodeConfig::new(4, 1.0);
    cfg.delta_max = 0.5;
    cfg.initial_prices = Some(vec![2.0, 2.5]);
    let market = Market::new(catalog, cfg, ArrivalModel::Constant(4.0)).unwrap();
    for seed in 0..50 {
        let ep = run_episode(&market, &MyopicPolicy::new(21), seed).unwrap();
        let mut total = 0.0;
        for r in &ep.records {
            let mut profit = 0.0;
            for i in 0..2 {
                let eta = if i == 0 { 0.125 } else { 0.25 };
                let cost = if i == 0 { 0.25 } else { 0.5 };
                profit += r.realized_sales[i] as f64 * ((1.0 - eta) * r.prices[i] - cost);
                assert!(r.realized_sales[i] <= r.inventory_before[i]);
            }
            assert_eq!(r.profit, profit);
            total += profit;
        }
        let leftover = ep.leftover();
        assert_eq!(ep.salvage_loss, 0.5 * leftover[0] as f64);
        assert_eq!(ep.total_profit, total - ep.salvage_loss);
    }
}

#[test]
fn degenerate_evaluations() {
    let skus = vec![Sku::new("a", 1.0, 1.0).with_inventory(4).with_salvage(1.25)];
    let catalog = SkuCatalog::new(skus, 0.0, 0.0).unwrap();
    let mut cfg = EpisodeConfig::new(3, 1.0);
    cfg.initial_prices = Some(vec![1.0]);
    let idle = Market::new(catalog.clone(), cfg.clone(), ArrivalModel::Constant(0.0)).unwrap();
    let eval = evaluate_policy(&idle, &GuardrailPolicy::default(), 25, 0).unwrap();
    assert_eq!(eval.stderr, 0.0);
    assert_eq!(eval.mean_profit, -5.0);

    let busy = Market::new(catalog, cfg, ArrivalModel::Constant(3.0)).unwrap();
    let one = evaluate_policy(&busy, &GuardrailPolicy::default(), 1, 12).unwrap();
    let direct = run_episode(&busy, &GuardrailPolicy::default(), 12).unwrap();
    assert_eq!(one.mean_profit, direct.total_profit);
    assert_eq!(one.stderr, 0.0);
}

#[test]
fn common_random_numbers_make_identical_policies_agree() {
    let skus = vec![
        Sku::new("a", 1.0, 0.8).with_inventory(6),
        Sku::new("b", 0.4, 0.6).with_inventory(6),
    ];
    let catalog = SkuCatalog::new(skus, 0.1, 0.2).unwrap();
    let mut cfg = EpisodeConfig::new(3, 1.0);
    cfg.initial_prices = Some(vec![1.0, 1.0]);
    let market = Market::new(catalog, cfg, ArrivalModel::Constant(4.0)).unwrap();
    let p = PriceVector::new(vec![1.5, 1.0]);
    let a = evaluate_policy(&market, &FixedPricePolicy::new(p.clone()), 200, 5).unwrap();
    let b = evaluate_policy(&market, &FixedPricePolicy::new(p), 200, 5).unwrap();
    assert_eq!(a, b);
}
