//! Sliding windows over episode logs.

use greenhouse_core::EpisodeLog;

use crate::scaler::{Scaler, FEATURES, TARGETS};
use crate::{Error, Result};

/// Normalized `w × 11` window ending at step `t` and the outputs at `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub input: Vec<f64>,
    pub target: [f64; TARGETS],
}

impl WindowSample {
    pub fn steps(&self) -> usize {
        self.input.len() / FEATURES
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WindowSet {
    pub samples: Vec<WindowSample>,
    /// Episodes too short for a single window.
    pub skipped: usize,
}

/// All windows of length `w`: an episode of `L` records yields `L − w`
/// samples and none crosses an episode boundary.
pub fn make_windows(episodes: &[EpisodeLog], w: usize, scaler: &Scaler) -> Result<WindowSet> {
    if w == 0 {
        return Err(Error::Config("window length must be positive".into()));
    }
    let mut set = WindowSet::default();
    for ep in episodes {
        let n = ep.records.len();
        if n < w + 1 {
            set.skipped += 1;
            continue;
        }
        let feats: Vec<[f64; FEATURES]> = ep.records[..n - 1].iter().map(|r| scaler.features(r)).collect();
        for t in w - 1..n - 1 {
            let input = feats[t + 1 - w..=t].iter().flatten().copied().collect();
            set.samples.push(WindowSample { input, target: scaler.target(&ep.records[t + 1]) });
        }
    }
    Ok(set)
}
