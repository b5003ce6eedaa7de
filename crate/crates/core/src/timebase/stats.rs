use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Rate, Tick};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("series `{0}` has no samples")]
    EmptySeries(String),
}

/// Ordered tick samples for one named metric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub name: String,
    pub samples: Vec<Tick>,
}

impl MeasurementSeries {
    pub fn new(name: impl Into<String>) -> Self {
        MeasurementSeries {
            name: name.into(),
            samples: Vec::new(),
        }
    }

    pub fn with_samples(name: impl Into<String>, samples: Vec<Tick>) -> Self {
        MeasurementSeries {
            name: name.into(),
            samples,
        }
    }

    pub fn push(&mut self, sample: Tick) {
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn summarize(&self, rate: Rate, with_stddev: bool) -> Result<SummaryStats, StatsError> {
        summarize(&self.name, &self.samples, rate, with_stddev)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub samples: usize,
    pub bcet_ticks: Tick,
    pub wcet_ticks: Tick,
    /// Unrounded arithmetic mean.
    pub average_ticks: f64,
    pub bcet_us: f64,
    pub wcet_us: f64,
    pub average_us: f64,
    /// Population standard deviation of the samples expressed in microseconds.
    pub stddev_us: f64,
}

/// Best, worst and mean execution time of a series plus the population
/// standard deviation in microseconds (zero when `with_stddev` is off).
pub fn summarize(name: &str, samples: &[Tick], rate: Rate, with_stddev: bool) -> Result<SummaryStats, StatsError> {
    let (&first, rest) = samples
        .split_first()
        .ok_or_else(|| StatsError::EmptySeries(name.to_string()))?;
    let mut bcet = first;
    let mut wcet = first;
    let mut sum = first as u128;
    for &s in rest {
        bcet = bcet.min(s);
        wcet = wcet.max(s);
        sum += s as u128;
    }
    let n = samples.len();
    let mean_ticks = sum as f64 / n as f64;
    // integer sums above 2^53 can round the mean just outside [bcet, wcet]
    let mean_ticks = mean_ticks.clamp(bcet as f64, wcet as f64);
    let mean_us = rate.ticks_to_micros(mean_ticks);

    let stddev_us = if with_stddev && n > 1 {
        rate.ticks_to_micros(stddev_ticks(samples, bcet, wcet, mean_ticks))
    } else {
        0.0
    };

    Ok(SummaryStats {
        samples: n,
        bcet_ticks: bcet,
        wcet_ticks: wcet,
        average_ticks: mean_ticks,
        bcet_us: rate.ticks_to_micros(bcet as f64),
        wcet_us: rate.ticks_to_micros(wcet as f64),
        average_us: mean_us,
        stddev_us,
    })
}

/// Population standard deviation in ticks.
///
/// Moments of the samples shifted by the first one are exact in integers as
/// long as the spread stays below 2^36 ticks and the series below 2^24
/// samples, so the only rounding left is one division and the square root.
/// Anything wider falls back to a floating two-pass sum.
fn stddev_ticks(samples: &[Tick], bcet: Tick, wcet: Tick, mean: f64) -> f64 {
    let n = samples.len() as u128;
    if wcet - bcet < 1 << 36 && n < 1 << 24 {
        let x0 = samples[0] as i128;
        let (mut sy, mut syy) = (0i128, 0u128);
        for &s in samples {
            let y = s as i128 - x0;
            sy += y;
            syy += (y * y) as u128;
        }
        // n * sum(y^2) - (sum y)^2 = n^2 * variance, never negative
        let num = n * syy - (sy * sy) as u128;
        return (num as f64 / (n * n) as f64).sqrt();
    }
    let var = samples.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Tick count as microseconds with exactly two decimals, truncated toward
/// zero (29 ticks at 75/us is "0.38", not "0.39").
pub fn ticks_to_micros_display(ticks: Tick, rate: Rate) -> String {
    let h = rate.hundredths(ticks);
    format!("{}.{:02}", h / 100, h % 100)
}

/// Two-decimal truncation for values that are already in microseconds.
pub fn micros_display(us: f64) -> String {
    if !us.is_finite() || us <= 0.0 {
        return "0.00".to_string();
    }
    // nudge so that 0.01 stored as 0.00999.. still shows as 0.01
    let h = (us * 100.0 * (1.0 + 1e-12)).floor() as u128;
    format!("{}.{:02}", h / 100, h % 100)
}
