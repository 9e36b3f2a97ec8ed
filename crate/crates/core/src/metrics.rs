//! Economic and constraint-violation metrics over episode logs.
//!
//! All functions are pure in the log. Violations are evaluated on the
//! `N = len − 1` controlled records (records `1..=N`), each classified as
//! day or night from its own radiation sample.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::episode::EpisodeLog;
use crate::params::SAMPLE_INTERVAL_S;
use crate::{Error, Result, NIGHT_RADIATION};

/// Night and day lower temperature limits, °C.
pub const NIGHT_TEMP_MIN: f64 = 10.0;
pub const DAY_TEMP_MIN: f64 = 15.0;
/// Upper relative humidity limit, %.
pub const HUMIDITY_MAX: f64 = 85.0;

/// Prices used by the economic performance index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBook {
    /// CO₂ enrichment, Hf·kg⁻¹.
    pub co2: f64,
    /// Heating energy, Hf·J⁻¹.
    pub heat: f64,
    /// Fixed crop revenue, Hf·m⁻².
    pub base: f64,
    /// Crop revenue per kg dry matter, Hf·kg⁻¹.
    pub per_kg: f64,
}

impl Default for PriceBook {
    fn default() -> Self {
        Self { co2: 42e-2, heat: 6.35e-9, base: 1.8, per_kg: 16.0 }
    }
}

/// Net profit per area: crop revenue from the final dry weight minus heating
/// and CO₂ costs of every applied input.
pub fn epi(log: &EpisodeLog, prices: &PriceBook) -> Result<f64> {
    epi_with_interval(log, prices, SAMPLE_INTERVAL_S)
}

pub fn epi_with_interval(log: &EpisodeLog, prices: &PriceBook, h: f64) -> Result<f64> {
    let last = log.last().ok_or_else(|| Error::Invalid("EPI of an empty log".into()))?;
    let revenue = prices.base + prices.per_kg * last.y.dry_weight * 1e-3;
    let cost: f64 = log.records[..log.control_steps()]
        .iter()
        .map(|r| (prices.heat * r.u.heating + prices.co2 * r.u.co2_injection * 1e-6) * h)
        .sum();
    Ok(revenue - cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Control steps considered.
    pub steps: usize,
    pub temp_count: usize,
    pub temp_rate_pct: f64,
    /// Mean magnitude over day-time violating steps, °C.
    pub day_temp_mean: f64,
    /// Mean magnitude over night-time violating steps, °C.
    pub night_temp_mean: f64,
    pub hum_count: usize,
    pub hum_rate_pct: f64,
    /// Mean excess over the humidity limit among violating steps, %.
    pub hum_mean: f64,
}

fn mean_or_zero(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn rate(count: usize, steps: usize) -> f64 {
    if steps == 0 {
        0.0
    } else {
        count as f64 / steps as f64 * 100.0
    }
}

/// Temperature violations: below 10 °C at night or below 15 °C by day.
pub fn thermal_violations(log: &EpisodeLog) -> ViolationReport {
    let steps = log.control_steps();
    let (mut day_n, mut day_sum, mut night_n, mut night_sum) = (0usize, 0.0, 0usize, 0.0);
    for r in log.records.iter().skip(1) {
        if r.d.radiation < NIGHT_RADIATION {
            if r.y.temp < NIGHT_TEMP_MIN {
                night_n += 1;
                night_sum += NIGHT_TEMP_MIN - r.y.temp;
            }
        } else if r.y.temp < DAY_TEMP_MIN {
            day_n += 1;
            day_sum += DAY_TEMP_MIN - r.y.temp;
        }
    }
    let temp_count = day_n + night_n;
    ViolationReport {
        steps,
        temp_count,
        temp_rate_pct: rate(temp_count, steps),
        day_temp_mean: mean_or_zero(day_sum, day_n),
        night_temp_mean: mean_or_zero(night_sum, night_n),
        ..Default::default()
    }
}

/// Relative humidity above 85 %.
pub fn humidity_violations(log: &EpisodeLog) -> ViolationReport {
    let steps = log.control_steps();
    let (mut n, mut sum) = (0usize, 0.0);
    for r in log.records.iter().skip(1) {
        if r.y.rel_humidity > HUMIDITY_MAX {
            n += 1;
            sum += r.y.rel_humidity - HUMIDITY_MAX;
        }
    }
    ViolationReport { steps, hum_count: n, hum_rate_pct: rate(n, steps), hum_mean: mean_or_zero(sum, n), ..Default::default() }
}

/// Both violation families in one report.
pub fn violations(log: &EpisodeLog) -> ViolationReport {
    let t = thermal_violations(log);
    let h = humidity_violations(log);
    ViolationReport { hum_count: h.hum_count, hum_rate_pct: h.hum_rate_pct, hum_mean: h.hum_mean, ..t }
}

/// Timing and outcome of one controlled run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlStats {
    /// Wall time of each solve, seconds.
    pub step_times_s: Vec<f64>,
    pub total_time_s: f64,
    pub epi: f64,
    /// Final dry matter, g·m⁻².
    pub dry_matter: f64,
}

impl ControlStats {
    pub fn from_log(log: &EpisodeLog, step_times_s: Vec<f64>, prices: &PriceBook) -> Result<Self> {
        let total_time_s = step_times_s.iter().sum();
        let dry_matter = log.last().map(|r| r.y.dry_weight).unwrap_or(0.0);
        Ok(Self { step_times_s, total_time_s, epi: epi(log, prices)?, dry_matter })
    }
}

/// Columns of the comparison table. Wall-clock solve time goes to a
/// separate file so that reruns reproduce this one byte for byte.
pub const REPORT_HEADER: [&str; 8] = [
    "label",
    "temp_viol_pct",
    "day_temp_mag_c",
    "night_temp_mag_c",
    "hum_viol_pct",
    "hum_mean_pct",
    "epi_hf_m2",
    "dry_matter_g_m2",
];

pub const TIMING_HEADER: [&str; 2] = ["label", "proc_time_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub violations: ViolationReport,
    pub epi: f64,
    pub dry_matter: f64,
    pub proc_time_s: f64,
}

/// One row per run with the comparison-table columns.
pub fn report(runs: &[(String, &EpisodeLog, &ControlStats)], prices: &PriceBook) -> Result<Vec<ReportRow>> {
    if runs.is_empty() {
        return Err(Error::Invalid("report needs at least one run".into()));
    }
    runs.iter()
        .map(|(label, log, stats)| {
            Ok(ReportRow {
                label: label.clone(),
                violations: violations(log),
                epi: epi(log, prices)?,
                dry_matter: log.last().map(|r| r.y.dry_weight).unwrap_or(0.0),
                proc_time_s: stats.total_time_s,
            })
        })
        .collect()
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = REPORT_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let v = &r.violations;
        let _ = writeln!(
            out,
            "{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.4},{:.4}",
            r.label,
            v.temp_rate_pct,
            v.day_temp_mean,
            v.night_temp_mean,
            v.hum_rate_pct,
            v.hum_mean,
            r.epi,
            r.dry_matter
        );
    }
    out
}

pub fn timing_csv(rows: &[ReportRow]) -> String {
    let mut out = TIMING_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{:.3}", r.label, r.proc_time_s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode::{EpisodeMeta, Record};
    use crate::types::{ControlInput, Disturbance, Output, State};

    fn log_from(rows: &[(f64, f64, f64, ControlInput, f64)]) -> EpisodeLog {
        // (radiation, temp, rh, input, dry weight g)
        let records = rows
            .iter()
            .enumerate()
            .map(|(k, &(rad, temp, rh, u, dw))| Record {
                k,
                t: k as f64 * 900.0,
                d: Disturbance::new(rad, 7.2e-4, 10.0, 0.006),
                u,
                x: State::new(dw * 1e-3, 7e-4, temp, 0.008),
                y: Output::new(dw, 400.0, temp, rh),
            })
            .collect();
        EpisodeLog { meta: EpisodeMeta::default(), records }
    }

    #[test]
    fn epi_of_idle_empty_crop_is_base_price() {
        let log = log_from(&[(0.0, 16.0, 60.0, ControlInput::zero(), 0.0); 5]);
        assert_eq!(epi(&log, &PriceBook::default()).unwrap(), 1.8);
    }

    #[test]
    fn epi_revenue_and_heating_cost() {
        let log = log_from(&[(0.0, 16.0, 60.0, ControlInput::zero(), 11.47); 3]);
        let v = epi(&log, &PriceBook::default()).unwrap();
        assert!((v - 1.98352).abs() < 1e-12);
        let heat = ControlInput::new(0.0, 0.0, 100.0);
        let log = log_from(&[(0.0, 16.0, 60.0, heat, 0.0), (0.0, 16.0, 60.0, ControlInput::zero(), 0.0)]);
        let v = epi(&log, &PriceBook::default()).unwrap();
        assert!((v - (1.8 - 5.715e-4)).abs() < 1e-15);
    }

    #[test]
    fn epi_of_empty_log_fails() {
        let log = EpisodeLog { meta: EpisodeMeta::default(), records: vec![] };
        assert!(epi(&log, &PriceBook::default()).is_err());
    }

    #[test]
    fn thermal_magnitudes() {
        let z = ControlInput::zero();
        let log = log_from(&[(0.0, 16.0, 60.0, z, 1.0), (0.0, 8.0, 60.0, z, 1.0), (200.0, 12.0, 60.0, z, 1.0)]);
        let r = thermal_violations(&log);
        assert_eq!(r.temp_count, 2);
        assert_eq!(r.night_temp_mean, 2.0);
        assert_eq!(r.day_temp_mean, 3.0);
        assert_eq!(r.temp_rate_pct, 100.0);
        let log = log_from(&[(0.0, 16.0, 60.0, z, 1.0); 4]);
        assert_eq!(thermal_violations(&log).temp_count, 0);
    }

    #[test]
    fn humidity_counting() {
        let z = ControlInput::zero();
        let mut rows = vec![(0.0, 16.0, 80.0, z, 1.0); 101];
        for row in rows.iter_mut().skip(1).take(5) {
            row.2 = 86.0;
        }
        let r = humidity_violations(&log_from(&rows));
        assert_eq!(r.hum_count, 5);
        assert!((r.hum_rate_pct - 5.0).abs() < 1e-12);
        assert!((r.hum_mean - 1.0).abs() < 1e-12);
        let r = humidity_violations(&log_from(&[(0.0, 16.0, 90.0, z, 1.0); 2]));
        assert_eq!(r.hum_mean, 5.0);
    }

    #[test]
    fn report_rows() {
        let log = log_from(&[(0.0, 16.0, 60.0, ControlInput::zero(), 1.0); 3]);
        let stats = ControlStats::from_log(&log, vec![0.5, 0.25], &PriceBook::default()).unwrap();
        let rows = report(&[("a".into(), &log, &stats), ("b".into(), &log, &stats)], &PriceBook::default()).unwrap();
        let csv = report_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER.join(","));
        assert!(lines[1].starts_with("a,0.00,0.00,0.00,0.00,0.00,"));
        assert_eq!(lines[1][1..], lines[2][1..]);
        assert_eq!(lines[1].split(',').count(), REPORT_HEADER.len());
        assert_eq!(timing_csv(&rows), "label,proc_time_s\na,0.750\nb,0.750\n");
        assert!(report(&[], &PriceBook::default()).is_err());
    }
}
