//! Kaplan-Meier step plots as standalone SVG. Output depends only on the
//! curve, so identical inputs give identical bytes.

use std::fmt::Write;

use patflow::survival::SurvivalCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Survival probability against months since the lag origin, with a dashed
/// line at the plateau.
pub fn step_plot(curve: &SurvivalCurve, horizon: u32, x_label: &str) -> String {
    let horizon = horizon.max(curve.steps.last().map_or(1, |s| s.t)).max(1) as f64;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + pw * t / horizon;
    let y = |s: f64| TOP + ph * (1.0 - s);

    let mut path = format!("M{:.2},{:.2}", x(0.0), y(1.0));
    let mut level = 1.0;
    for step in &curve.steps {
        let t = step.t as f64;
        let _ = write!(path, " H{:.2} V{:.2}", x(t), y(step.s));
        level = step.s;
    }
    let _ = write!(path, " H{:.2}", x(horizon));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{} (n={}, events={})</text>"#,
        WIDTH / 2.0,
        escape(&curve.group),
        curve.subjects,
        curve.events
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for k in 0..=5 {
        let s = k as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{LEFT}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{s:.1}</text>"#,
            LEFT - 5.0,
            y(s),
            y(s),
            LEFT - 8.0,
            y(s) + 4.0
        );
    }
    let ticks = 6;
    for k in 0..=ticks {
        let t = (horizon * k as f64 / ticks as f64).round();
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            x(t),
            TOP + ph,
            x(t),
            TOP + ph + 5.0,
            x(t),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Survival probability</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="grey" stroke-dasharray="4 4"/>"#,
        y(level),
        LEFT + pw,
        y(level)
    );
    let _ = writeln!(svg, r#"<path d="{path}" fill="none" stroke="steelblue" stroke-width="2"/>"#);
    svg.push_str("</svg>\n");
    svg
}
