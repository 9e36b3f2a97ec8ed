//! Outdoor weather series: CSV ingestion, resampling to the model grid,
//! a seeded synthetic generator, and episode-level train/test splitting.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::episode::csv_error;
use crate::params::SAMPLE_INTERVAL_S;
use crate::types::Disturbance;
use crate::{Error, Result};

pub const WEATHER_HEADER: [&str; 5] = ["timestamp_s", "rad_w_m2", "temp_c", "co2_kg_m3", "hum_kg_m3"];

const SECONDS_PER_DAY: i64 = 86_400;

/// Evenly spaced disturbance samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSeries {
    pub start_s: i64,
    pub interval_s: i64,
    pub samples: Vec<Disturbance>,
}

impl DisturbanceSeries {
    pub fn new(start_s: i64, interval_s: i64, samples: Vec<Disturbance>) -> Result<Self> {
        if interval_s <= 0 {
            return Err(Error::Invalid(format!("interval must be positive, got {interval_s}")));
        }
        for s in &samples {
            s.validate()?;
        }
        Ok(Self { start_s, interval_s, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> i64 {
        self.start_s + self.interval_s * i as i64
    }

    /// Sub-series `[from, from + len)`, keeping absolute timestamps.
    pub fn slice(&self, from: usize, len: usize) -> Result<Self> {
        if from + len > self.samples.len() {
            return Err(Error::Invalid(format!("slice {from}..{} exceeds {} samples", from + len, self.samples.len())));
        }
        Ok(Self { start_s: self.timestamp(from), interval_s: self.interval_s, samples: self.samples[from..from + len].to_vec() })
    }

    pub fn to_csv(&self) -> String {
        let mut out = WEATHER_HEADER.join(",");
        out.push('\n');
        for (i, s) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", self.timestamp(i), s.radiation, s.temp, s.co2, s.humidity);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parse the weather CSV format: header
    /// `timestamp_s,rad_w_m2,temp_c,co2_kg_m3,hum_kg_m3`, integer timestamps
    /// strictly increasing at a constant spacing, at least two rows.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        if headers.len() != WEATHER_HEADER.len() {
            return Err(Error::Parse { line: 1, msg: format!("expected header {}", WEATHER_HEADER.join(",")) });
        }
        if let Some(missing) = WEATHER_HEADER.iter().zip(headers.iter()).find(|(want, got)| *want != got) {
            return Err(Error::Parse { line: 1, msg: format!("missing column {:?}", missing.0) });
        }
        let mut stamps: Vec<i64> = Vec::new();
        let mut samples = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| csv_error(e, 0))?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != WEATHER_HEADER.len() {
                return Err(Error::Parse { line, msg: format!("expected 5 fields, found {}", row.len()) });
            }
            let ts: i64 = row[0]
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("invalid integer timestamp {:?}", &row[0]) })?;
            let mut v = [0.0; 4];
            for (i, slot) in v.iter_mut().enumerate() {
                *slot = row[i + 1]
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| Error::Parse { line, msg: format!("invalid number {:?} in column {}", &row[i + 1], WEATHER_HEADER[i + 1]) })?;
            }
            let d = Disturbance::new(v[0], v[2], v[1], v[3]);
            d.validate().map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            if let Some(&prev) = stamps.last() {
                if ts <= prev {
                    return Err(Error::Parse { line, msg: format!("timestamp {ts} does not increase (previous {prev})") });
                }
                if stamps.len() >= 2 && ts - prev != stamps[1] - stamps[0] {
                    return Err(Error::Parse { line, msg: format!("spacing {} differs from {}", ts - prev, stamps[1] - stamps[0]) });
                }
            }
            stamps.push(ts);
            samples.push(d);
        }
        if stamps.len() < 2 {
            return Err(Error::Parse { line: 1, msg: "need at least two samples".into() });
        }
        Self::new(stamps[0], stamps[1] - stamps[0], samples)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Linear interpolation of every channel onto a grid with spacing
    /// `target_interval_s`, starting at the first sample and ending at the
    /// last grid point not past the final sample.
    pub fn resample(&self, target_interval_s: i64) -> Result<Self> {
        if self.samples.len() < 2 {
            return Err(Error::Invalid("resampling needs at least two samples".into()));
        }
        if target_interval_s <= 0 {
            return Err(Error::Invalid(format!("target interval must be positive, got {target_interval_s}")));
        }
        if target_interval_s == self.interval_s {
            return Ok(self.clone());
        }
        let span = self.interval_s * (self.samples.len() as i64 - 1);
        let count = span / target_interval_s + 1;
        let mut out = Vec::with_capacity(count as usize);
        for j in 0..count {
            let offset = j * target_interval_s;
            let idx = (offset / self.interval_s) as usize;
            let rem = offset - idx as i64 * self.interval_s;
            let a = self.samples[idx].to_array();
            let v = if rem == 0 {
                a
            } else {
                let b = self.samples[idx + 1].to_array();
                let w = rem as f64 / self.interval_s as f64;
                std::array::from_fn(|c| a[c] + w * (b[c] - a[c]))
            };
            out.push(Disturbance::new(v[0].max(0.0), v[1].max(0.0), v[2], v[3].max(0.0)));
        }
        Self::new(self.start_s, target_interval_s, out)
    }

    /// Resample onto the model's 15-minute grid.
    pub fn to_model_grid(&self) -> Result<Self> {
        self.resample(SAMPLE_INTERVAL_S as i64)
    }
}

/// Parameters of the synthetic weather generator. A profile describes one
/// season: the generated series repeats the same mean day, perturbed by
/// seeded noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherProfile {
    /// Peak clear-sky radiation at solar noon, W·m⁻².
    pub rad_peak: f64,
    /// Hours of daylight.
    pub day_length_h: f64,
    /// Daily mean outdoor temperature, °C.
    pub temp_mean: f64,
    /// Half the diurnal temperature swing, °C.
    pub temp_amplitude: f64,
    /// Hours by which the temperature maximum trails solar noon.
    pub temp_lag_h: f64,
    /// Outdoor relative humidity at the daily mean temperature, fraction.
    pub rel_humidity: f64,
    /// Outdoor CO₂, kg·m⁻³.
    pub co2: f64,
    /// Relative noise level in [0, 1]; 0 gives an exactly periodic series.
    pub noise: f64,
    pub seed: u64,
}

impl Default for WeatherProfile {
    fn default() -> Self {
        Self {
            rad_peak: 600.0,
            day_length_h: 15.0,
            temp_mean: 13.0,
            temp_amplitude: 5.0,
            temp_lag_h: 3.0,
            rel_humidity: 0.8,
            co2: 7.2e-4,
            noise: 0.3,
            seed: 0,
        }
    }
}

impl WeatherProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rad_peak >= 0.0
            && self.day_length_h > 0.0
            && self.day_length_h < 24.0
            && self.temp_amplitude >= 0.0
            && (0.0..=1.0).contains(&self.rel_humidity)
            && self.co2 >= 0.0
            && (0.0..=1.0).contains(&self.noise)
            && [self.temp_mean, self.temp_lag_h].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid weather profile {self:?}")))
        }
    }
}

/// Absolute humidity at saturation (kg·m⁻³), Magnus form.
fn saturation_humidity(temp_c: f64) -> f64 {
    let vapor_kpa = 0.6108 * (17.27 * temp_c / (temp_c + 237.3)).exp();
    vapor_kpa * 1e3 * 0.018_015 / (8.314 * (temp_c + 273.15))
}

/// Generate `days` days of weather on the 15-minute grid (`96·days + 1`
/// samples so that a `96·days`-step episode has a terminal disturbance).
pub fn synth_weather(profile: &WeatherProfile, days: usize) -> Result<DisturbanceSeries> {
    profile.validate()?;
    if days == 0 {
        return Err(Error::Invalid("need at least one day of weather".into()));
    }
    let step = SAMPLE_INTERVAL_S as i64;
    let per_day = (SECONDS_PER_DAY / step) as usize;
    let n = days * per_day + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = profile.noise;

    // Per-day cloudiness and temperature offsets, AR(1) within the series.
    let mut cloud = Vec::with_capacity(days + 1);
    let mut temp_offset = Vec::with_capacity(days + 1);
    let mut prev_offset = 0.0;
    for _ in 0..=days {
        cloud.push(1.0 - noise * 0.7 * rng.gen::<f64>());
        prev_offset = 0.6 * prev_offset + noise * 4.0 * (rng.gen::<f64>() - 0.5);
        temp_offset.push(prev_offset);
    }

    let sunrise = 12.0 - profile.day_length_h / 2.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as i64 * step;
        let day = (t / SECONDS_PER_DAY) as usize;
        let hour = (t % SECONDS_PER_DAY) as f64 / 3600.0;
        let into_day = hour - sunrise;
        let clear = if into_day > 0.0 && into_day < profile.day_length_h {
            profile.rad_peak * (PI * into_day / profile.day_length_h).sin()
        } else {
            0.0
        };
        let jitter = 1.0 - noise * 0.2 * rng.gen::<f64>();
        let radiation = (clear * cloud[day] * jitter).clamp(0.0, profile.rad_peak);

        let phase = 2.0 * PI * (hour - 12.0 - profile.temp_lag_h) / 24.0;
        let temp = profile.temp_mean
            + profile.temp_amplitude * phase.cos()
            + temp_offset[day]
            + noise * 0.5 * (rng.gen::<f64>() - 0.5);

        // Humidity follows the daily mean dew point, so relative humidity
        // drops in the afternoon.
        let base_hum = profile.rel_humidity * saturation_humidity(profile.temp_mean + temp_offset[day]);
        let humidity = (base_hum * (1.0 + noise * 0.05 * (rng.gen::<f64>() - 0.5))).min(saturation_humidity(temp)).max(0.0);

        let co2 = (profile.co2 * (1.0 + noise * 0.02 * (rng.gen::<f64>() - 0.5))).max(0.0);
        samples.push(Disturbance::new(radiation, co2, temp, humidity));
    }
    DisturbanceSeries::new(0, step, samples)
}

/// Split whole episodes (never individual samples) into a training and a
/// test part. The first `round(n·ratio)` items, clamped to leave at least
/// one item on each side, go to training.
pub fn split_train_test<T: Clone>(items: &[T], ratio: f64) -> Result<(Vec<T>, Vec<T>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    if items.len() < 2 {
        return Err(Error::Invalid(format!("need at least two episodes to split, got {}", items.len())));
    }
    let n_train = ((items.len() as f64 * ratio).round() as usize).clamp(1, items.len() - 1);
    Ok((items[..n_train].to_vec(), items[n_train..].to_vec()))
}
