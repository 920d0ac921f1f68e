//! Output writers: JSON report, CSV schedule and SVG plot.

use std::fmt::Write as _;

use super::report::{PlotData, SolveReport};
use crate::curves::Pwl;
use crate::string_solver::{ContactKind, Vertex};

pub fn json(report: &SolveReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn csv(report: &SolveReport) -> String {
    let mut out = String::new();
    match &report.user_schedules {
        None => {
            out.push_str("t_start,t_end,power\n");
            for s in report.schedule.segments() {
                let _ = writeln!(out, "{},{},{}", s.t_start, s.t_end, s.power);
            }
        }
        Some(users) => {
            out.push_str("t_start,t_end,power,power_user1,power_user2\n");
            let rows = report
                .schedule
                .segments()
                .iter()
                .zip(users.user1.segments())
                .zip(users.user2.segments());
            for ((s, u1), u2) in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.t_start, s.t_end, s.power, u1.power, u2.power
                );
            }
        }
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;

struct Frame {
    horizon: f64,
    top: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        MARGIN + (WIDTH - 2.0 * MARGIN) * t / self.horizon
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / self.top
    }
}

fn path_data(frame: &Frame, curve: &Pwl) -> String {
    let mut d = String::new();
    let mut first = true;
    let mut point = |d: &mut String, t: f64, v: f64| {
        let cmd = if first { 'M' } else { 'L' };
        first = false;
        let _ = write!(d, "{cmd}{:.2},{:.2} ", frame.x(t), frame.y(v));
    };
    for b in curve.breakpoints() {
        point(&mut d, b.t, b.v_left);
        if b.v_right != b.v_left {
            point(&mut d, b.t, b.v_right);
        }
    }
    let last = curve.breakpoints().last().map_or(0.0, |b| b.t);
    let horizon = curve.horizon();
    if last < horizon {
        point(&mut d, horizon, curve.value_left_at(horizon));
    }
    d.trim_end().to_string()
}

/// Last vertex of each maximal run of consecutive contacts that stay on the
/// same envelope in between.
pub fn contact_markers(contacts: &[Vertex], plot: &PlotData) -> Vec<Vertex> {
    let on_envelope = |a: &Vertex, b: &Vertex| -> bool {
        let Some(kind) = a.contact else { return false };
        if b.contact != Some(kind) {
            return false;
        }
        let curve = match kind {
            ContactKind::Upper => Some(&plot.upper),
            ContactKind::Lower => plot.lower.as_ref(),
        };
        let Some(curve) = curve else { return false };
        let tm = 0.5 * (a.t + b.t);
        let em = 0.5 * (a.e + b.e);
        (curve.value_at(tm) - em).abs() <= 1e-9 * (1.0 + em.abs())
    };
    let mut markers = Vec::new();
    for (i, v) in contacts.iter().enumerate() {
        let continues = contacts.get(i + 1).is_some_and(|next| on_envelope(v, next));
        if !continues {
            markers.push(*v);
        }
    }
    markers
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn svg(report: &SolveReport, plot: &PlotData) -> String {
    let horizon = plot.upper.horizon().max(plot.energy.horizon());
    let mut top = plot
        .upper
        .value_at(plot.upper.horizon())
        .max(plot.energy.value_at(plot.energy.horizon()));
    for b in plot.upper.breakpoints() {
        top = top.max(b.v_left).max(b.v_right);
    }
    let frame = Frame {
        horizon: if horizon > 0.0 { horizon } else { 1.0 },
        top: if top > 0.0 { top * 1.05 } else { 1.0 },
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "  <title>{}</title>", escape(&report.name));
    let _ = writeln!(
        out,
        r#"  <g class="axes" stroke="black" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}"/></g>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        out,
        r#"  <path class="curve-upper" data-label="{}" d="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        escape(plot.upper_label),
        path_data(&frame, &plot.upper)
    );
    if let Some(lower) = &plot.lower {
        let _ = writeln!(
            out,
            r#"  <path class="curve-lower" data-label="{}" d="{}" fill="none" stroke="black" stroke-dasharray="6 4" stroke-width="1.5"/>"#,
            escape(plot.lower_label),
            path_data(&frame, lower)
        );
    }
    let _ = writeln!(
        out,
        r#"  <path class="curve-energy" data-label="E" d="{}" fill="none" stroke="red" stroke-width="2"/>"#,
        path_data(&frame, &plot.energy)
    );
    for v in contact_markers(&report.contacts, plot) {
        let _ = writeln!(
            out,
            r#"  <circle class="contact-marker" cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="blue"/>"#,
            frame.x(v.t),
            frame.y(v.e)
        );
    }
    let labels = [(plot.upper_label, 0), (plot.lower_label, 1), ("E", 2)];
    for (label, row) in labels {
        if row == 1 && plot.lower.is_none() {
            continue;
        }
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (row as f64 + 1.0),
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}
