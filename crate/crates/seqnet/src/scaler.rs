//! Min–max scaling to the unit range, fitted on training data only.

use greenhouse_core::{EpisodeLog, Record};

use crate::{Error, Result};

/// Input features per time step: disturbances, inputs, outputs.
pub const FEATURES: usize = 11;
/// Predicted outputs.
pub const TARGETS: usize = 4;
/// Scaler channels: the input features followed by the targets.
pub const CHANNELS: usize = FEATURES + TARGETS;
/// Width given to channels that are constant over the training set.
pub const DEGENERATE_WIDTH: f64 = 1e-9;

/// Feature vector of one record: `[d1..d4, u1..u3, y1..y4]`.
pub fn record_features(r: &Record) -> [f64; FEATURES] {
    let mut f = [0.0; FEATURES];
    f[..4].copy_from_slice(&r.d.to_array());
    f[4..7].copy_from_slice(&r.u.to_array());
    f[7..].copy_from_slice(&r.y.to_array());
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl Scaler {
    /// Channels with `max == min` are widened to `min + DEGENERATE_WIDTH`.
    pub fn new(min: Vec<f64>, mut max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::Shape(format!("scaler bounds have {} and {} channels", min.len(), max.len())));
        }
        for (c, (lo, hi)) in min.iter().zip(max.iter_mut()).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || *hi < *lo {
                return Err(Error::Shape(format!("channel {c}: invalid range [{lo}, {hi}]")));
            }
            if *hi == *lo {
                *hi = lo + DEGENERATE_WIDTH;
            }
        }
        Ok(Self { min, max })
    }

    /// Maps every channel onto itself.
    pub fn identity(channels: usize) -> Self {
        Self { min: vec![0.0; channels], max: vec![1.0; channels] }
    }

    /// Fit on training episodes. Features come from records that precede a
    /// transition, targets from records that follow one, which are exactly
    /// the values the windows will contain.
    pub fn fit(episodes: &[EpisodeLog]) -> Result<Self> {
        let mut min = vec![f64::INFINITY; CHANNELS];
        let mut max = vec![f64::NEG_INFINITY; CHANNELS];
        let mut seen = false;
        for ep in episodes {
            let n = ep.records.len();
            if n < 2 {
                continue;
            }
            seen = true;
            for r in &ep.records[..n - 1] {
                for (c, v) in record_features(r).into_iter().enumerate() {
                    min[c] = min[c].min(v);
                    max[c] = max[c].max(v);
                }
            }
            for r in &ep.records[1..] {
                for (c, v) in r.y.to_array().into_iter().enumerate() {
                    min[FEATURES + c] = min[FEATURES + c].min(v);
                    max[FEATURES + c] = max[FEATURES + c].max(v);
                }
            }
        }
        if !seen {
            return Err(Error::Empty("no episode with at least one transition to fit the scaler"));
        }
        Self::new(min, max)
    }

    pub fn channels(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    /// `max − min` of a channel.
    pub fn span(&self, channel: usize) -> f64 {
        self.max[channel] - self.min[channel]
    }

    pub fn normalize(&self, channel: usize, v: f64) -> f64 {
        (v - self.min[channel]) / self.span(channel)
    }

    pub fn denormalize(&self, channel: usize, v: f64) -> f64 {
        v * self.span(channel) + self.min[channel]
    }

    /// Normalize consecutive channels starting at `first` in place.
    pub fn normalize_slice(&self, first: usize, values: &mut [f64]) {
        for (i, v) in values.iter_mut().enumerate() {
            *v = self.normalize(first + i, *v);
        }
    }

    pub fn denormalize_slice(&self, first: usize, values: &mut [f64]) {
        for (i, v) in values.iter_mut().enumerate() {
            *v = self.denormalize(first + i, *v);
        }
    }

    /// Normalized feature vector of a record.
    pub fn features(&self, r: &Record) -> [f64; FEATURES] {
        let mut f = record_features(r);
        self.normalize_slice(0, &mut f);
        f
    }

    /// Normalized target (the record's outputs).
    pub fn target(&self, r: &Record) -> [f64; TARGETS] {
        let mut y = r.y.to_array();
        self.normalize_slice(FEATURES, &mut y);
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_channel_is_widened() {
        let s = Scaler::new(vec![0.0, 3.0], vec![10.0, 3.0]).unwrap();
        assert_eq!(s.normalize(0, 5.0), 0.5);
        assert!((s.span(1) - DEGENERATE_WIDTH).abs() < 1e-15);
        assert_eq!(s.normalize(1, 3.0), 0.0);
        assert!(Scaler::new(vec![1.0], vec![0.0]).is_err());
        assert!(Scaler::new(vec![0.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn out_of_range_values_are_not_clipped() {
        let s = Scaler::new(vec![0.0], vec![10.0]).unwrap();
        assert_eq!(s.normalize(0, 15.0), 1.5);
        assert_eq!(s.normalize(0, -5.0), -0.5);
    }
}
