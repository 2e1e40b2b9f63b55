//! Poisson order arrivals and piecewise-constant rate profiles estimated from
//! order logs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: f64 = 1440.0;
pub const MINUTES_PER_WEEK: f64 = 7.0 * MINUTES_PER_DAY;

/// Periods are aligned to Monday 1970-01-05 00:00 UTC so that weekly profiles
/// start on a Monday; daily profiles start at midnight UTC either way.
fn period_anchor() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(1970, 1, 5, 0, 0, 0).unwrap()
}

/// `lambda^k e^{-lambda} / k!`, evaluated in log space.
pub fn poisson_pmf(k: u64, lambda_dt: f64) -> Result<f64> {
    if !(lambda_dt >= 0.0) || !lambda_dt.is_finite() {
        return Err(Error::InvalidRate(lambda_dt));
    }
    if lambda_dt == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
    Ok((k as f64 * lambda_dt.ln() - lambda_dt - ln_fact).exp())
}

/// Number of orders arriving in `dt` at constant rate `lambda`.
pub fn sample_arrival_count<R: Rng + ?Sized>(lambda: f64, dt: f64, rng: &mut R) -> Result<u64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidRate(lambda));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("duration must be positive (got {dt})")));
    }
    let mean = lambda * dt;
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| Error::InvalidRate(mean))?;
    Ok(dist.sample(rng) as u64)
}

/// Arrival rate per window; windows are half-open and tile `[0, horizon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    pub window_length: f64,
    pub rates: Vec<f64>,
}

impl RateProfile {
    pub fn new(window_length: f64, rates: Vec<f64>) -> Result<Self> {
        if !(window_length > 0.0) || !window_length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "window length must be positive (got {window_length})"
            )));
        }
        if let Some(&bad) = rates.iter().find(|&&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidRate(bad));
        }
        if rates.is_empty() {
            return Err(Error::InvalidArgument("rate profile has no windows".into()));
        }
        Ok(RateProfile {
            window_length,
            rates,
        })
    }

    pub fn constant(rate: f64, horizon: f64) -> Result<Self> {
        RateProfile::new(horizon, vec![rate])
    }

    pub fn horizon(&self) -> f64 {
        self.window_length * self.rates.len() as f64
    }

    pub fn window_start(&self, w: usize) -> f64 {
        w as f64 * self.window_length
    }

    /// Rate of the window containing `t`.
    pub fn rate_at(&self, t: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t < horizon) {
            return Err(Error::OutsideHorizon { t, horizon });
        }
        let w = ((t / self.window_length).floor() as usize).min(self.rates.len() - 1);
        Ok(self.rates[w])
    }

    /// Writes `window_start,lambda` rows, window starts in profile time units.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["window_start", "lambda"])?;
        for (i, rate) in self.rates.iter().enumerate() {
            w.write_record([self.window_start(i).to_string(), rate.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a profile written by [`RateProfile::write_csv`]. The window length
    /// is taken from the spacing of the rows; a single-row file needs it passed in.
    pub fn read_csv(path: &Path, window_length: Option<f64>) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["window_start", "lambda"] {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                message: "expected header `window_start,lambda`".into(),
            });
        }
        let mut starts = Vec::new();
        let mut rates = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |field: usize| -> Result<f64> {
                record[field].trim().parse::<f64>().map_err(|e| Error::Parse {
                    path: path.display().to_string(),
                    line: row + 2,
                    message: e.to_string(),
                })
            };
            starts.push(parse(0)?);
            rates.push(parse(1)?);
        }
        let window = match (window_length, starts.len()) {
            (Some(w), _) => w,
            (None, n) if n >= 2 => starts[1] - starts[0],
            _ => {
                return Err(Error::InvalidArgument(
                    "cannot infer the window length of a single-window profile".into(),
                ))
            }
        };
        for (i, &s) in starts.iter().enumerate() {
            if (s - i as f64 * window).abs() > 1e-9 * window.max(1.0) {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: i + 2,
                    message: format!("window_start {s} breaks the uniform {window} spacing"),
                });
            }
        }
        RateProfile::new(window, rates)
    }
}

/// Order timestamps in nondecreasing order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrderLog {
    timestamps: Vec<DateTime<Utc>>,
}

impl OrderLog {
    pub fn new(timestamps: Vec<DateTime<Utc>>) -> Result<Self> {
        if let Some(row) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NonMonotoneLog { row: row + 1 });
        }
        Ok(OrderLog { timestamps })
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Parses a CSV with a single `timestamp` column of RFC 3339 / ISO-8601 UTC times.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(file);
        let display = path.display().to_string();
        let mut records = reader.records();
        match records.next() {
            None => {
                return Err(Error::Parse {
                    path: display,
                    line: 1,
                    message: "missing header: expected `timestamp`".into(),
                })
            }
            Some(header) => {
                let header = header?;
                if header.len() != 1 || &header[0] != "timestamp" {
                    return Err(Error::Parse {
                        path: display,
                        line: 1,
                        message: format!(
                            "missing header: expected `timestamp`, found `{}`",
                            header.iter().collect::<Vec<_>>().join(",")
                        ),
                    });
                }
            }
        }
        let mut timestamps = Vec::new();
        for record in records {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let raw = record.get(0).unwrap_or("");
            let ts = DateTime::parse_from_rfc3339(raw).map_err(|e| Error::Parse {
                path: display.clone(),
                line,
                message: format!("malformed timestamp `{raw}`: {e}"),
            })?;
            timestamps.push(ts.with_timezone(&Utc));
        }
        OrderLog::new(timestamps).map_err(|e| match e {
            Error::NonMonotoneLog { row } => Error::Parse {
                path: display,
                line: row + 2,
                message: "timestamps must be nondecreasing".into(),
            },
            other => other,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "timestamp")?;
            for ts in &self.timestamps {
                writeln!(out, "{}", ts.to_rfc3339_opts(SecondsFormat::Millis, true))?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Aggregates a log onto a repeating period (a day or a week, in minutes) cut
/// into windows of `window_minutes`. Each window's rate is its order count over
/// all observed periods divided by the time observed in that window, giving
/// orders per minute.
pub fn estimate_rate_profile(
    log: &OrderLog,
    window_minutes: f64,
    period_minutes: f64,
) -> Result<RateProfile> {
    if !(window_minutes > 0.0) || !(period_minutes > 0.0) {
        return Err(Error::InvalidArgument(
            "window and period lengths must be positive".into(),
        ));
    }
    let windows = period_minutes / window_minutes;
    if (windows - windows.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "window of {window_minutes} min does not tile a {period_minutes} min period"
        )));
    }
    let windows = windows.round() as usize;
    let mut counts = vec![0u64; windows];
    let Some((first, last)) = log.timestamps.first().zip(log.timestamps.last()) else {
        return RateProfile::new(window_minutes, vec![0.0; windows]);
    };

    let anchor = period_anchor();
    let minutes = |ts: &DateTime<Utc>| (*ts - anchor).num_milliseconds() as f64 / 60_000.0;
    let period_index = |m: f64| (m / period_minutes).floor() as i64;
    let periods_observed = (period_index(minutes(last)) - period_index(minutes(first)) + 1) as f64;

    for ts in &log.timestamps {
        let offset = minutes(ts).rem_euclid(period_minutes);
        let w = ((offset / window_minutes).floor() as usize).min(windows - 1);
        counts[w] += 1;
    }
    let exposure = periods_observed * window_minutes;
    RateProfile::new(
        window_minutes,
        counts.into_iter().map(|c| c as f64 / exposure).collect(),
    )
}

/// Samples a log from a per-minute profile over `num_periods` consecutive
/// repetitions starting at `start`. Counts per window are Poisson; times are
/// uniform within their window.
pub fn synthesize_order_log<R: Rng + ?Sized>(
    profile: &RateProfile,
    start: DateTime<Utc>,
    num_periods: usize,
    rng: &mut R,
) -> Result<OrderLog> {
    let period_ms = profile.horizon() * 60_000.0;
    let window_ms = profile.window_length * 60_000.0;
    let mut timestamps = Vec::new();
    for p in 0..num_periods {
        for (w, &rate) in profile.rates.iter().enumerate() {
            let n = sample_arrival_count(rate, profile.window_length, rng)?;
            let base = p as f64 * period_ms + w as f64 * window_ms;
            let mut offsets: Vec<f64> = (0..n).map(|_| base + rng.random::<f64>() * window_ms).collect();
            offsets.sort_by(f64::total_cmp);
            timestamps.extend(
                offsets
                    .into_iter()
                    .map(|ms| start + chrono::Duration::milliseconds(ms.floor() as i64)),
            );
        }
    }
    OrderLog::new(timestamps)
}

/// Arrival rate seen by the simulator in each epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    /// One rate for the whole horizon.
    Constant(f64),
    /// Rate frozen at the profile value at each epoch's start. `offset` is the
    /// profile time at which the horizon begins.
    Profile { profile: RateProfile, offset: f64 },
}

impl ArrivalModel {
    /// Rate for the 0-based epoch index.
    pub fn rate_for_epoch(&self, epoch_index: usize, epoch_length: f64) -> Result<f64> {
        match self {
            ArrivalModel::Constant(rate) => Ok(*rate),
            ArrivalModel::Profile { profile, offset } => {
                profile.rate_at(offset + epoch_index as f64 * epoch_length)
            }
        }
    }

    /// Checks that every epoch start of a `num_epochs` horizon maps into the profile.
    pub fn validate(&self, num_epochs: usize, epoch_length: f64) -> Result<()> {
        match self {
            ArrivalModel::Constant(rate) if !(*rate >= 0.0) || !rate.is_finite() => {
                Err(Error::InvalidRate(*rate))
            }
            ArrivalModel::Constant(_) => Ok(()),
            ArrivalModel::Profile { profile, offset } => {
                let end = offset + num_epochs as f64 * epoch_length;
                if *offset < 0.0 || end > profile.horizon() + 1e-9 {
                    Err(Error::InvalidArgument(format!(
                        "episode spans profile time [{offset}, {end}) but the profile covers [0, {})",
                        profile.horizon()
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}
