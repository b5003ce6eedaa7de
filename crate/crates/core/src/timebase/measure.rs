use thiserror::Error;

use super::{MeasurementSeries, Tick};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("measurement `{0}` already has an open sample")]
    AlreadyOpen(String),
    #[error("measurement `{0}` ended without a matching begin")]
    UnmatchedEnd(String),
}

/// Begin/end bracketing for a single metric. Each matched pair appends
/// `end - begin` to the series.
#[derive(Debug, Clone)]
pub struct SampleRecorder {
    series: MeasurementSeries,
    open: Option<Tick>,
}

impl SampleRecorder {
    pub fn new(name: impl Into<String>) -> Self {
        SampleRecorder {
            series: MeasurementSeries::new(name),
            open: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.series.name
    }

    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    pub fn begin(&mut self, now: Tick) -> Result<(), MeasureError> {
        if self.open.is_some() {
            return Err(MeasureError::AlreadyOpen(self.series.name.clone()));
        }
        self.open = Some(now);
        Ok(())
    }

    pub fn end(&mut self, now: Tick) -> Result<Tick, MeasureError> {
        let start = self
            .open
            .take()
            .ok_or_else(|| MeasureError::UnmatchedEnd(self.series.name.clone()))?;
        let sample = now.saturating_sub(start);
        self.series.push(sample);
        Ok(sample)
    }

    /// Drop a begun sample without recording it.
    pub fn cancel(&mut self) {
        self.open = None;
    }

    pub fn series(&self) -> &MeasurementSeries {
        &self.series
    }

    pub fn into_series(self) -> MeasurementSeries {
        self.series
    }
}
