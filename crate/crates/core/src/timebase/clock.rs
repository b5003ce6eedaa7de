use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Tick;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RateError {
    #[error("tick rate must be positive")]
    NotPositive,
    #[error("cannot parse tick rate `{0}`")]
    Parse(String),
}

/// Ticks per microsecond, kept as an exact fraction so that display
/// truncation never suffers from binary floating point drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rate {
    num: u64,
    den: u64,
}

impl Rate {
    /// The P2020 time base: a 1.2 GHz core clock divided by 16.
    pub const DEFAULT: Rate = Rate { num: 75, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, RateError> {
        if num == 0 || den == 0 {
            return Err(RateError::NotPositive);
        }
        let g = gcd(num, den);
        Ok(Rate {
            num: num / g,
            den: den / g,
        })
    }

    pub fn per_micro(ticks: u64) -> Result<Self, RateError> {
        Self::new(ticks, 1)
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn ticks_to_micros(&self, ticks: f64) -> f64 {
        ticks * self.den as f64 / self.num as f64
    }

    /// Whole hundredths of a microsecond in `ticks`, rounded toward zero.
    pub fn hundredths(&self, ticks: u64) -> u128 {
        (ticks as u128 * 100 * self.den as u128) / self.num as u128
    }

    fn ticks_for_nanos(&self, nanos: u128) -> Tick {
        (nanos * self.num as u128 / (self.den as u128 * 1000)) as Tick
    }
}

impl Default for Rate {
    fn default() -> Self {
        Rate::DEFAULT
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Accepts `75`, `37.5` or `75/2`.
impl FromStr for Rate {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || RateError::Parse(s.to_string());
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse::<u64>().map_err(|_| bad())?;
            let d = d.trim().parse::<u64>().map_err(|_| bad())?;
            return Rate::new(n, d);
        }
        match s.split_once('.') {
            None => Rate::new(s.parse().map_err(|_| bad())?, 1),
            Some((int, frac)) => {
                if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                let int: u64 = if int.is_empty() {
                    0
                } else {
                    int.parse().map_err(|_| bad())?
                };
                let scale = 10u64.pow(frac.len() as u32);
                let frac: u64 = frac.parse().map_err(|_| bad())?;
                let num = int
                    .checked_mul(scale)
                    .and_then(|v| v.checked_add(frac))
                    .ok_or_else(bad)?;
                Rate::new(num, scale)
            }
        }
    }
}

impl TryFrom<String> for Rate {
    type Error = RateError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rate> for String {
    fn from(r: Rate) -> String {
        r.to_string()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    Virtual,
    Host,
}

impl FromStr for ClockKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "virtual" => Ok(ClockKind::Virtual),
            "host" => Ok(ClockKind::Host),
            other => Err(format!("unknown clock `{other}` (expected virtual or host)")),
        }
    }
}

/// The executive's time source.
///
/// A virtual clock only moves when the scheduler charges work to it. A host
/// clock follows `Instant` from the moment the backend was created; asking it
/// to advance busy-waits until the host catches up.
#[derive(Debug, Clone)]
pub struct ClockBackend {
    kind: ClockKind,
    rate: Rate,
    virtual_now: Tick,
    origin: Instant,
}

impl ClockBackend {
    pub fn new(kind: ClockKind, rate: Rate) -> Self {
        ClockBackend {
            kind,
            rate,
            virtual_now: 0,
            origin: Instant::now(),
        }
    }

    pub fn virtual_clock(rate: Rate) -> Self {
        Self::new(ClockKind::Virtual, rate)
    }

    pub fn host(rate: Rate) -> Self {
        Self::new(ClockKind::Host, rate)
    }

    pub fn kind(&self) -> ClockKind {
        self.kind
    }

    pub fn rate(&self) -> Rate {
        self.rate
    }

    /// Cost-table charges only apply to the virtual clock; on the host the
    /// real work already took real time.
    pub fn models_costs(&self) -> bool {
        self.kind == ClockKind::Virtual
    }

    pub fn now(&self) -> Tick {
        match self.kind {
            ClockKind::Virtual => self.virtual_now,
            ClockKind::Host => self.rate.ticks_for_nanos(self.origin.elapsed().as_nanos()),
        }
    }

    pub fn advance_to(&mut self, target: Tick) {
        match self.kind {
            ClockKind::Virtual => {
                debug_assert!(target >= self.virtual_now, "virtual clock moved backwards");
                self.virtual_now = self.virtual_now.max(target);
            }
            ClockKind::Host => {
                while self.now() < target {
                    std::hint::spin_loop();
                }
            }
        }
    }

    pub fn advance_by(&mut self, ticks: Tick) {
        let target = self.now().saturating_add(ticks);
        self.advance_to(target);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_virtual_clock_reads_zero() {
        let c = ClockBackend::virtual_clock(Rate::DEFAULT);
        assert_eq!(c.now(), 0);
    }

    #[test]
    fn virtual_clock_accumulates_charges() {
        let mut c = ClockBackend::virtual_clock(Rate::DEFAULT);
        c.advance_by(100);
        c.advance_by(13);
        assert_eq!(c.now(), 113);
    }

    #[test]
    fn host_clock_is_monotone() {
        let c = ClockBackend::host(Rate::DEFAULT);
        let a = c.now();
        let b = c.now();
        assert!(b >= a);
    }

    #[test]
    fn host_advance_waits() {
        let mut c = ClockBackend::host(Rate::DEFAULT);
        let start = c.now();
        c.advance_by(750);
        assert!(c.now() >= start + 750);
    }

    #[test]
    fn rate_parsing() {
        assert_eq!("75".parse::<Rate>().unwrap(), Rate::DEFAULT);
        assert_eq!("37.5".parse::<Rate>().unwrap(), Rate::new(75, 2).unwrap());
        assert_eq!("150/2".parse::<Rate>().unwrap(), Rate::DEFAULT);
        assert_eq!("0".parse::<Rate>(), Err(RateError::NotPositive));
        assert!("abc".parse::<Rate>().is_err());
        assert!("1.".parse::<Rate>().is_err());
    }
}
