//! Closed-loop rollouts and the episode log.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{measure, rk4_step};
use crate::params::ModelParams;
use crate::types::{ControlInput, Disturbance, Output, State};
use crate::{Error, Result};

/// Column order of the episode CSV.
pub const EPISODE_HEADER: [&str; 17] = [
    "k", "t_s", "d1", "d2", "d3", "d4", "u1", "u2", "u3", "x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4",
];

/// One sampling instant. `u` is the input applied over `[k, k+1)`; the
/// terminal record of a log carries a zero input that is never applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub k: usize,
    pub t: f64,
    pub d: Disturbance,
    pub u: ControlInput,
    pub x: State,
    pub y: Output,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub seed: u64,
    pub scenario: String,
    pub controller: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub meta: EpisodeMeta,
    pub records: Vec<Record>,
}

/// What a policy sees when asked for the next input.
pub struct StepView<'a> {
    pub k: usize,
    pub x: State,
    pub y: Output,
    /// Records before `k`, with their applied inputs.
    pub history: &'a [Record],
    /// Disturbances from `k` onwards.
    pub weather: &'a [Disturbance],
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of control intervals (length − 1).
    pub fn control_steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Check the structural invariants: non-empty, consecutive `k`, fixed
    /// spacing `h`, admissible inputs, and `y = measure(x)` on every record.
    pub fn validate(&self, p: &ModelParams, h: f64) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Invalid("episode log is empty".into()));
        }
        let t0 = self.records[0].t;
        for (i, r) in self.records.iter().enumerate() {
            if r.k != self.records[0].k + i {
                return Err(Error::Invalid(format!("record {i}: step index {} is not consecutive", r.k)));
            }
            let expected_t = t0 + h * i as f64;
            if (r.t - expected_t).abs() > 1e-9 * expected_t.abs().max(1.0) {
                return Err(Error::Invalid(format!("record {i}: time {} s, expected {expected_t}", r.t)));
            }
            r.x.validate()?;
            r.d.validate()?;
            if !r.u.within_bounds() {
                return Err(Error::Invalid(format!("record {i}: input out of bounds {:?}", r.u)));
            }
            if measure(&r.x, p)? != r.y {
                return Err(Error::Invalid(format!("record {i}: output does not match state")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = EPISODE_HEADER.join(",");
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{}", r.k, r.t);
            for v in r.d.to_array().iter().chain(&r.u.to_array()).chain(&r.x.to_array()).chain(&r.y.to_array()) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parse an episode CSV. The metadata is not part of the file and comes
    /// back as the default.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        if headers.iter().ne(EPISODE_HEADER.iter().copied()) {
            return Err(Error::Parse { line: 1, msg: format!("expected header {}", EPISODE_HEADER.join(",")) });
        }
        let mut records: Vec<Record> = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| csv_error(e, 0))?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != EPISODE_HEADER.len() {
                return Err(Error::Parse { line, msg: format!("expected {} fields, found {}", EPISODE_HEADER.len(), row.len()) });
            }
            let k: usize = row[0]
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("invalid step index {:?}", &row[0]) })?;
            let mut v = [0.0; 16];
            for (i, slot) in v.iter_mut().enumerate() {
                let field = &row[i + 1];
                *slot = field
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| Error::Parse { line, msg: format!("invalid number {field:?} in column {}", EPISODE_HEADER[i + 1]) })?;
            }
            if let Some(prev) = records.last() {
                if k != prev.k + 1 {
                    return Err(Error::Parse { line, msg: format!("step index {k} does not follow {}", prev.k) });
                }
                if v[0] <= prev.t {
                    return Err(Error::Parse { line, msg: "time is not increasing".into() });
                }
            }
            records.push(Record {
                k,
                t: v[0],
                d: Disturbance::new(v[1], v[2], v[3], v[4]),
                u: ControlInput::new(v[5], v[6], v[7]),
                x: State::new(v[8], v[9], v[10], v[11]),
                y: Output::new(v[12], v[13], v[14], v[15]),
            });
        }
        if records.is_empty() {
            return Err(Error::Parse { line: 1, msg: "episode has no records".into() });
        }
        Ok(Self { meta: EpisodeMeta::default(), records })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }
}

pub(crate) fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse { line, msg: format!("{kind:?}") },
    }
}

/// Roll a policy forward against the simulator for `steps` intervals.
///
/// The policy must return admissible inputs; anything outside the actuator
/// box is reported as an error rather than clamped.
pub fn simulate_episode<F, E>(
    x0: State,
    mut policy: F,
    weather: &[Disturbance],
    steps: usize,
    p: &ModelParams,
    h: f64,
    meta: EpisodeMeta,
) -> std::result::Result<EpisodeLog, E>
where
    F: FnMut(&StepView<'_>) -> std::result::Result<ControlInput, E>,
    E: From<Error>,
{
    if weather.len() < steps + 1 {
        return Err(Error::Invalid(format!("weather has {} samples, need {}", weather.len(), steps + 1)).into());
    }
    x0.validate()?;
    let mut records = Vec::with_capacity(steps + 1);
    let mut x = x0;
    for k in 0..=steps {
        let y = measure(&x, p)?;
        let d = weather[k];
        d.validate()?;
        let u = if k < steps {
            let view = StepView { k, x, y, history: &records, weather: &weather[k..] };
            let u = policy(&view)?;
            if !u.within_bounds() {
                return Err(Error::PolicyBounds { step: k, input: u }.into());
            }
            u
        } else {
            ControlInput::zero()
        };
        records.push(Record { k, t: k as f64 * h, d, u, x, y });
        if k < steps {
            x = rk4_step(&x, &u, &d, p, h)?;
        }
    }
    Ok(EpisodeLog { meta, records })
}
