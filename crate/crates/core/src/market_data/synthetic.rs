use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{align_universe, Bar, PriceSeries, Universe};
use crate::error::{Error, Result};

/// Fewest days from which one (window, label) sample can be built.
pub const MIN_DAYS_FOR_SAMPLES: usize = 31;

/// Lower clamp on generated daily returns; keeps prices positive.
const RETURN_FLOOR: f64 = -0.5;

/// Words of keystream reserved per (ticker, day) draw block.
const WORDS_PER_DAY: u128 = 64;

/// Parameters of the AR(2) synthetic return process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_tickers: usize,
    pub n_days: usize,
    pub seed: u64,
    pub phi1: f64,
    pub phi2: f64,
    pub sigma: f64,
    pub init_price: f64,
    pub base_volume: f64,
    pub volume_noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_tickers: 3,
            n_days: 600,
            seed: 7,
            phi1: 0.3,
            phi2: -0.2,
            sigma: 0.01,
            init_price: 100.0,
            base_volume: 1_000_000.0,
            volume_noise: 0.3,
        }
    }
}

impl SyntheticSpec {
    /// Hard preconditions for generation. A series shorter than
    /// [`MIN_DAYS_FOR_SAMPLES`] is allowed here but yields no samples.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n_tickers == 0 {
            return bad("n_tickers must be at least 1".into());
        }
        if self.n_days == 0 {
            return bad("n_days must be at least 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.init_price > 0.0 && self.init_price.is_finite()) {
            return bad(format!("init_price must be positive, got {}", self.init_price));
        }
        if !(self.phi1.abs() + self.phi2.abs() < 1.0) {
            return bad(format!(
                "|phi1| + |phi2| must be below 1, got {} + {}",
                self.phi1.abs(),
                self.phi2.abs()
            ));
        }
        if !(self.base_volume >= 0.0) || !(self.volume_noise >= 0.0) {
            return bad("base_volume and volume_noise must be non-negative".into());
        }
        Ok(())
    }

    pub fn yields_samples(&self) -> bool {
        self.n_days >= MIN_DAYS_FOR_SAMPLES
    }

    pub fn ticker_name(index: usize) -> String {
        format!("SYN{index:03}")
    }
}

/// Per-day AR coefficients and noise scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArRegime {
    pub phi1: f64,
    pub phi2: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub universe: Universe,
    /// Number of (ticker, day) returns raised to the floor.
    pub clamp_events: usize,
}

/// Generates the universe with constant coefficients from the spec.
pub fn generate_synthetic_universe(spec: &SyntheticSpec) -> Result<Synthetic> {
    let regime = ArRegime {
        phi1: spec.phi1,
        phi2: spec.phi2,
        sigma: spec.sigma,
    };
    generate_with_regime(spec, |_| regime)
}

/// Generates the universe with coefficients chosen per day index. The spec's
/// own `phi1`/`phi2`/`sigma` are validated but otherwise ignored.
pub fn generate_with_regime(
    spec: &SyntheticSpec,
    regime: impl Fn(usize) -> ArRegime,
) -> Result<Synthetic> {
    spec.validate()?;
    let dates = business_days(start_date(), spec.n_days);
    let mut clamp_events = 0;
    let mut series = Vec::with_capacity(spec.n_tickers);

    for ticker in 0..spec.n_tickers {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(ticker as u64);

        let (mut r1, mut r2) = (0.0, 0.0);
        let mut prev_close = spec.init_price;
        let mut bars = Vec::with_capacity(spec.n_days);
        for (day, &date) in dates.iter().enumerate() {
            rng.set_word_pos(day as u128 * WORDS_PER_DAY);
            let eps: f64 = rng.sample(StandardNormal);
            let eta: f64 = rng.sample(StandardNormal);
            let zeta: f64 = rng.sample(StandardNormal);

            let ArRegime { phi1, phi2, sigma } = regime(day);
            let mut r = phi1 * r1 + phi2 * r2 + sigma * eps;
            if r < RETURN_FLOOR {
                r = RETURN_FLOOR;
                clamp_events += 1;
            }
            let close = prev_close * (1.0 + r);
            let open = prev_close;
            let wick = eta.abs() * 0.001;
            bars.push(Bar {
                date,
                open,
                high: open.max(close) * (1.0 + wick),
                low: open.min(close) * (1.0 - wick),
                close,
                volume: (spec.base_volume * (1.0 + spec.volume_noise * zeta.abs())).round() as u64,
            });
            r2 = r1;
            r1 = r;
            prev_close = close;
        }
        series.push(PriceSeries::new(SyntheticSpec::ticker_name(ticker), bars)?);
    }

    Ok(Synthetic {
        universe: align_universe(series)?,
        clamp_events,
    })
}

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 10, 4).expect("valid date")
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut date = start;
    while out.len() < n {
        if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(date);
        }
        date = date + Days::new(1);
    }
    out
}
