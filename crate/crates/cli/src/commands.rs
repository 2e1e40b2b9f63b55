use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use freshprice::adp::default_behavior;
use freshprice::arrivals::MINUTES_PER_DAY;
use freshprice::report;
use freshprice::{
    estimate_rate_profile, run_episodes, train_adp, AdpGreedyPolicy, FixedPricePolicy,
    GuardrailPolicy, MyopicPolicy, OrderLog, PolicyEvaluation, PricingPolicy, ValueWeights,
};

use crate::config::Scenario;

pub const POLICY_NAMES: [&str; 4] = ["fixed", "myopic", "guardrail", "adp"];

/// Runs `f` on a pool of `threads` workers, or the global pool when zero.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building thread pool")?;
    Ok(pool.install(f))
}

/// Builds a policy from its config block. ADP either loads weights from
/// `policy.adp.weights_path` or trains first.
pub fn build_policy(scenario: &Scenario, name: &str) -> Result<Box<dyn PricingPolicy>> {
    let cfg = &scenario.config.policy;
    let market = &scenario.market;
    Ok(match name {
        "fixed" => {
            let prices = match &cfg.fixed.prices {
                Some(p) => {
                    if p.len() != market.num_skus() {
                        bail!(
                            "policy.fixed.prices has {} entries for {} SKUs",
                            p.len(),
                            market.num_skus()
                        );
                    }
                    p.clone().into()
                }
                None => market.initial_prices()?,
            };
            Box::new(FixedPricePolicy::new(prices))
        }
        "myopic" => Box::new(MyopicPolicy::new(cfg.myopic.grid_points)),
        "guardrail" => Box::new(GuardrailPolicy::new(cfg.guardrail.settings())),
        "adp" => {
            let settings = cfg.adp.train_settings(scenario.base_seed());
            let weights = match &cfg.adp.weights_path {
                Some(path) => ValueWeights::read_csv(&market.catalog, &scenario.resolve(path))?,
                None => fit(scenario)?.weights,
            };
            Box::new(
                AdpGreedyPolicy::new(weights)
                    .with_grid_points(settings.grid_points)
                    .with_continuation(settings.continuation),
            )
        }
        other => bail!(
            "unknown policy `{other}` (expected one of {})",
            POLICY_NAMES.join(", ")
        ),
    })
}

fn fit(scenario: &Scenario) -> Result<freshprice::TrainingReport> {
    let adp = &scenario.config.policy.adp;
    let base = scenario.base_seed();
    let settings = adp.train_settings(base);
    let behavior = default_behavior(&scenario.market, &settings);
    Ok(train_adp(&scenario.market, &behavior, &settings, adp.training_seed(base))?)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn hhmm(minutes: f64) -> String {
    let m = minutes.round() as i64;
    let (days, rest) = (m / 1440, m % 1440);
    let clock = format!("{:02}:{:02}", rest / 60, rest % 60);
    if days > 0 {
        format!("day {} {clock}", days + 1)
    } else {
        clock
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSummary {
    pub total_orders: usize,
    pub first: Option<String>,
    pub last: Option<String>,
    pub windows: usize,
    pub peak_window_start: f64,
    pub peak_lambda: f64,
}

pub fn estimate_lambda(
    log_path: &Path,
    window_minutes: f64,
    period_minutes: Option<f64>,
    out: &Path,
) -> Result<EstimateSummary> {
    let log = OrderLog::read_csv(log_path)?;
    if log.is_empty() {
        log::warn!("{} has no orders; writing an all-zero profile", log_path.display());
    }
    let period = period_minutes.unwrap_or(MINUTES_PER_DAY);
    let profile = estimate_rate_profile(&log, window_minutes, period)?;
    ensure_parent(out)?;
    profile
        .write_csv(out)
        .with_context(|| format!("writing {}", out.display()))?;

    let (peak, peak_lambda) = profile
        .rates
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &r)| if r > best.1 { (i, r) } else { best });
    let ts = log.timestamps();
    let summary = EstimateSummary {
        total_orders: log.len(),
        first: ts.first().map(|t| t.to_rfc3339()),
        last: ts.last().map(|t| t.to_rfc3339()),
        windows: profile.rates.len(),
        peak_window_start: profile.window_start(peak),
        peak_lambda,
    };
    println!("total orders: {}", summary.total_orders);
    match (&summary.first, &summary.last) {
        (Some(a), Some(b)) => println!("coverage: {a} .. {b}"),
        _ => println!("coverage: none"),
    }
    println!(
        "peak window: {}-{} at {} orders/min",
        hhmm(summary.peak_window_start),
        hhmm(summary.peak_window_start + window_minutes),
        summary.peak_lambda
    );
    println!("wrote {} windows to {}", summary.windows, out.display());
    Ok(summary)
}

/// Paths written by [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulateOutputs {
    pub trajectories: PathBuf,
    pub episodes: PathBuf,
    pub summary: PathBuf,
    pub evaluation: PolicyEvaluation,
}

pub fn simulate(config: &Path, out_dir: &Path, threads: Option<usize>) -> Result<SimulateOutputs> {
    let scenario = Scenario::load(config)?;
    let exp = &scenario.config.experiment;
    let name = scenario.config.policy.name.clone();
    let (episodes, evaluation) = with_threads(threads.unwrap_or(exp.threads), || -> Result<_> {
        let policy = build_policy(&scenario, &name)?;
        let episodes = run_episodes(&scenario.market, &policy, exp.num_episodes, scenario.base_seed())?;
        let evaluation = PolicyEvaluation::summarize(policy.name(), &episodes)?;
        Ok((episodes, evaluation))
    })??;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let outputs = SimulateOutputs {
        trajectories: out_dir.join(&exp.trajectory_file),
        episodes: out_dir.join(&exp.episodes_file),
        summary: out_dir.join(&exp.summary_file),
        evaluation,
    };
    let catalog = &scenario.market.catalog;
    report::write_trajectories(&outputs.trajectories, catalog, &episodes)
        .with_context(|| format!("writing {}", outputs.trajectories.display()))?;
    report::write_episode_totals(&outputs.episodes, &episodes)
        .with_context(|| format!("writing {}", outputs.episodes.display()))?;
    report::write_summary(&outputs.summary, catalog, std::slice::from_ref(&outputs.evaluation))
        .with_context(|| format!("writing {}", outputs.summary.display()))?;

    let e = &outputs.evaluation;
    println!(
        "{}: mean profit {:.4} (stderr {:.4}) over {} episodes",
        e.policy, e.mean_profit, e.stderr, e.num_episodes
    );
    println!("wrote {}", out_dir.display());
    Ok(outputs)
}

/// Parses a comma-separated policy list.
pub fn parse_policy_list(list: &str) -> Result<Vec<String>> {
    let names: Vec<String> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    if names.len() < 2 {
        bail!("need at least two policies");
    }
    Ok(names)
}

/// Evaluates every policy on the same episode seeds.
pub fn compare(
    config: &Path,
    policies: &[String],
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<PolicyEvaluation>> {
    if policies.len() < 2 {
        bail!("need at least two policies");
    }
    let scenario = Scenario::load(config)?;
    let exp = &scenario.config.experiment;
    let evaluations = with_threads(threads.unwrap_or(exp.threads), || -> Result<Vec<_>> {
        let built = policies
            .iter()
            .map(|name| build_policy(&scenario, name))
            .collect::<Result<Vec<_>>>()?;
        built
            .iter()
            .map(|policy| {
                let episodes =
                    run_episodes(&scenario.market, policy, exp.num_episodes, scenario.base_seed())?;
                Ok(PolicyEvaluation::summarize(policy.name(), &episodes)?)
            })
            .collect()
    })??;

    ensure_parent(out)?;
    report::write_comparison(out, &evaluations).with_context(|| format!("writing {}", out.display()))?;
    for e in &evaluations {
        println!(
            "{:<10} mean profit {:>12.4}  stderr {:>9.4}  salvage loss {:>9.4}  unsold {:>8.3}",
            e.policy, e.mean_profit, e.stderr, e.mean_salvage_loss, e.mean_units_unsold
        );
    }
    Ok(evaluations)
}

/// Trains the value function and writes its weights. Returns the per-epoch
/// residual RMS.
pub fn fit_adp(config: &Path, out: &Path, threads: Option<usize>) -> Result<Vec<f64>> {
    let scenario = Scenario::load(config)?;
    let report = with_threads(threads.unwrap_or(scenario.config.experiment.threads), || {
        fit(&scenario)
    })??;
    ensure_parent(out)?;
    report
        .weights
        .write_csv(&scenario.market.catalog, out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("fitted on {} transitions", report.samples);
    for (t, rms) in report.residual_rms.iter().enumerate() {
        println!("epoch {:>3}: residual rms {rms:.6}", t + 1);
    }
    println!("wrote {}", out.display());
    Ok(report.residual_rms)
}
