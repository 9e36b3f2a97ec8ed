//! Stacked time-series charts of an episode as standalone SVG 1.1.

use std::fmt::Write as _;

use greenhouse_core::{EpisodeLog, Record};

use crate::{Error, Result};

/// One plottable column of an episode log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Radiation,
    OutdoorCo2,
    OutdoorTemp,
    OutdoorHumidity,
    Co2Injection,
    Ventilation,
    Heating,
    DryWeight,
    Co2Ppm,
    Temperature,
    RelHumidity,
}

impl Channel {
    pub const ALL: [Channel; 11] = [
        Channel::Radiation,
        Channel::OutdoorCo2,
        Channel::OutdoorTemp,
        Channel::OutdoorHumidity,
        Channel::Co2Injection,
        Channel::Ventilation,
        Channel::Heating,
        Channel::DryWeight,
        Channel::Co2Ppm,
        Channel::Temperature,
        Channel::RelHumidity,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Channel::Radiation => "Solar radiation (W/m²)",
            Channel::OutdoorCo2 => "Outdoor CO₂ (kg/m³)",
            Channel::OutdoorTemp => "Outdoor temperature (°C)",
            Channel::OutdoorHumidity => "Outdoor humidity (kg/m³)",
            Channel::Co2Injection => "CO₂ injection (mg/m²/s)",
            Channel::Ventilation => "Ventilation (mm/s)",
            Channel::Heating => "Heating (W/m²)",
            Channel::DryWeight => "Dry matter (g/m²)",
            Channel::Co2Ppm => "Indoor CO₂ (ppm)",
            Channel::Temperature => "Indoor temperature (°C)",
            Channel::RelHumidity => "Relative humidity (%)",
        }
    }

    pub fn value(self, r: &Record) -> f64 {
        match self {
            Channel::Radiation => r.d.radiation,
            Channel::OutdoorCo2 => r.d.co2,
            Channel::OutdoorTemp => r.d.temp,
            Channel::OutdoorHumidity => r.d.humidity,
            Channel::Co2Injection => r.u.co2_injection,
            Channel::Ventilation => r.u.ventilation,
            Channel::Heating => r.u.heating,
            Channel::DryWeight => r.y.dry_weight,
            Channel::Co2Ppm => r.y.co2_ppm,
            Channel::Temperature => r.y.temp,
            Channel::RelHumidity => r.y.rel_humidity,
        }
    }

    /// Inputs are only applied on the control steps, not the terminal record.
    fn is_input(self) -> bool {
        matches!(self, Channel::Co2Injection | Channel::Ventilation | Channel::Heating)
    }
}

/// A constraint level drawn as a dashed line on a channel's panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub channel: Channel,
    pub value: f64,
}

/// The controller's output limits.
pub fn default_bounds() -> Vec<Bound> {
    let b = |channel, value| Bound { channel, value };
    vec![
        b(Channel::Co2Ppm, 1000.0),
        b(Channel::Temperature, 10.0),
        b(Channel::Temperature, 15.0),
        b(Channel::Temperature, 20.0),
        b(Channel::RelHumidity, 50.0),
        b(Channel::RelHumidity, 85.0),
    ]
}

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 140.0;
const GAP: f64 = 50.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis tick label with few significant digits.
fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

/// One panel per channel, sharing the time axis (days).
pub fn emit_svg(log: &EpisodeLog, channels: &[Channel], bounds: &[Bound]) -> Result<String> {
    if channels.is_empty() {
        return Err(Error::Data("no channels to plot".into()));
    }
    if log.records.is_empty() {
        return Err(Error::Data("cannot plot an empty episode".into()));
    }
    let height = TOP + channels.len() as f64 * (PANEL_H + GAP);
    let plot_w = WIDTH - LEFT - RIGHT;
    let t_end = log.records.last().map_or(0.0, |r| r.t) / 86_400.0;
    let t_start = log.records[0].t / 86_400.0;
    let t_span = if t_end > t_start { t_end - t_start } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let title = format!("{} / {} / seed {}", log.meta.controller, log.meta.scenario, log.meta.seed);
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&title));
    let _ = writeln!(s, r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#, escape(&title));

    for (p, &ch) in channels.iter().enumerate() {
        let top = TOP + p as f64 * (PANEL_H + GAP);
        let n = if ch.is_input() && log.records.len() > 1 { log.records.len() - 1 } else { log.records.len() };
        let pts: Vec<(f64, f64)> = log.records[..n].iter().map(|r| (r.t / 86_400.0, ch.value(r))).collect();
        let levels: Vec<f64> = bounds.iter().filter(|b| b.channel == ch).map(|b| b.value).collect();
        let (mut lo, mut hi) = pts.iter().map(|p| p.1).chain(levels.iter().copied()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Data(format!("non-finite values in {}", ch.label())));
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5 * lo.abs().max(1.0);
            hi += 0.5 * hi.abs().max(1.0);
        }
        let x = |t: f64| LEFT + (t - t_start) / t_span * plot_w;
        let y = |v: f64| top + PANEL_H - (v - lo) / (hi - lo) * PANEL_H;

        let _ = writeln!(s, r#"<g>"#);
        let _ = writeln!(s, r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#888"/>"##);
        let _ = writeln!(s, r#"<text x="{LEFT}" y="{:.1}">{}</text>"#, top - 6.0, escape(ch.label()));
        for (v, anchor_y) in [(hi, top + 4.0), (lo, top + PANEL_H)] {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 4.0, anchor_y, tick(v));
        }
        for v in levels {
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#c33" stroke-dasharray="6,4"/>"##,
                y(v),
                LEFT + plot_w
            );
        }
        if pts.len() == 1 {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"/>"##, x(pts[0].0), y(pts[0].1));
        } else {
            let mut path = String::new();
            for (i, (t, v)) in pts.iter().enumerate() {
                let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, x(*t), y(*v));
            }
            let _ = writeln!(s, r##"<path d="{path}" fill="none" stroke="#1f5fa8" stroke-width="1"/>"##);
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">time (days)</text>"#, LEFT + plot_w, top + PANEL_H + 14.0);
        let _ = writeln!(s, r#"<text x="{LEFT}" y="{:.1}">{}</text>"#, top + PANEL_H + 14.0, tick(t_start));
        let _ = writeln!(s, r#"</g>"#);
    }
    s.push_str("</svg>\n");
    Ok(s)
}
