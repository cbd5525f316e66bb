//! Static SVG rendering of the files written by the other subcommands.
//!
//! States are drawn in the saturation triangle (water at the lower right,
//! oil at the top, gas at the lower left). Simulation profiles get a second
//! panel with the saturations against the similarity variable `x/t`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde_json::Value;

use crate::ValidationError;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 30.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Affine map from data coordinates to one square panel of the picture.
#[derive(Clone, Copy)]
struct Panel {
    x0: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Panel {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let inner = SIZE - 2.0 * MARGIN;
        let sx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let sy = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (self.x0 + MARGIN + sx * inner, SIZE - MARGIN - sy * inner)
    }
}

struct Canvas {
    panels: usize,
    body: String,
}

impl Canvas {
    fn new(panels: usize) -> Self {
        Canvas { panels, body: String::new() }
    }

    fn triangle_panel(&mut self) -> Panel {
        let panel = Panel { x0: 0.0, x_range: (-0.02, 1.02), y_range: (-0.02, 1.02) };
        let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)];
        self.polyline(&panel, corners.iter().map(|&(w, o)| tri(w, o)).collect(), "#000", 1.0);
        for (label, (w, o), dy) in [("G", (0.0, 0.0), 14.0), ("W", (1.0, 0.0), 14.0), ("O", (0.0, 1.0), -6.0)] {
            let (x, y) = tri(w, o);
            let (px, py) = panel.map(x, y);
            let _ = writeln!(self.body, r#"<text x="{px:.2}" y="{:.2}" font-size="12" text-anchor="middle">{label}</text>"#, py + dy);
        }
        panel
    }

    fn polyline(&mut self, panel: &Panel, pts: Vec<(f64, f64)>, color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let (px, py) = panel.map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn dots(&mut self, panel: &Panel, pts: &[(f64, f64)], color: &str, r: f64) {
        for &(x, y) in pts {
            let (px, py) = panel.map(x, y);
            let _ = writeln!(self.body, r#"<circle cx="{px:.2}" cy="{py:.2}" r="{r}" fill="{color}"/>"#);
        }
    }

    fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = writeln!(self.body, r#"<text x="{x:.2}" y="{y:.2}" font-size="12">{}</text>"#, escape(text));
    }

    fn finish(self, title: &str) -> String {
        let w = SIZE * self.panels as f64;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{SIZE}\" viewBox=\"0 0 {w} {SIZE}\">\n<title>{}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            escape(title),
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Saturations to the plane of an equilateral triangle.
fn tri(sw: f64, so: f64) -> (f64, f64) {
    (sw + 0.5 * so, 0.5 * 3f64.sqrt() * so)
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn num(v: &Value) -> Option<f64> {
    v.as_f64()
}

/// `[sw, so, ...]` arrays to triangle coordinates.
fn states(v: &Value) -> Vec<(f64, f64)> {
    v.as_array()
        .map(|a| {
            a.iter()
                .filter_map(|p| {
                    let p = p.as_array()?;
                    Some(tri(num(p.first()?)?, num(p.get(1)?)?))
                })
                .collect()
        })
        .unwrap_or_default()
}

fn state(v: &Value) -> Option<(f64, f64)> {
    let a = v.as_array()?;
    Some(tri(num(a.first()?)?, num(a.get(1)?)?))
}

fn render_json(doc: &Value) -> anyhow::Result<String> {
    let kind = doc.get("kind").and_then(Value::as_str).ok_or_else(|| ValidationError("JSON input has no `kind`".into()))?;
    let mut c = Canvas::new(1);
    let panel = c.triangle_panel();
    match kind {
        "model" => {
            if let Some(lines) = doc["lines"].as_array() {
                for (i, l) in lines.iter().enumerate() {
                    let ends: Vec<_> = [state(&l["vertex_state"]), state(&l["far_end_state"])].into_iter().flatten().collect();
                    c.polyline(&panel, ends, color(i), 1.0);
                }
            }
            if let Some(u) = state(&doc["umbilic"]) {
                c.dots(&panel, &[u], "#000", 3.0);
            }
        }
        "hugoniot" => {
            if let Some(branches) = doc["branches"].as_array() {
                for (i, b) in branches.iter().enumerate() {
                    c.polyline(&panel, states(&b["points"]), color(i), 1.5);
                }
            }
            if let Some(b) = state(&doc["base"]) {
                c.dots(&panel, &[b], "#000", 3.0);
            }
        }
        "uc_interval" => {
            c.polyline(&panel, states(&doc["left_states"]), color(0), 3.0);
            if let Some(r) = state(&doc["right_state"]) {
                c.dots(&panel, &[r], color(1), 3.0);
            }
        }
        "uc_surface" => {
            let rows = doc["interior"].as_array().cloned().unwrap_or_default();
            let minus: Vec<_> = rows.iter().filter_map(state).collect();
            let plus: Vec<_> = rows
                .iter()
                .filter_map(|r| {
                    let a = r.as_array()?;
                    Some(tri(num(a.get(2)?)?, num(a.get(3)?)?))
                })
                .collect();
            c.dots(&panel, &minus, "#9ecae1", 1.2);
            c.dots(&panel, &plus, "#fcae91", 1.2);
            if let Some(map) = doc["boundaries"].as_object() {
                for (i, (tag, b)) in map.iter().enumerate() {
                    c.polyline(&panel, states(&b["minus"]), color(i), 1.5);
                    c.polyline(&panel, states(&b["plus"]), color(i), 1.5);
                    c.label(SIZE - 70.0, 20.0 + 14.0 * i as f64, tag);
                }
            }
        }
        "connections" => {
            let left = state(&doc["left"]);
            for (i, t) in doc["connections"].as_array().into_iter().flatten().enumerate() {
                let seg: Vec<_> = [state(&t["minus"]), state(&t["plus"])].into_iter().flatten().collect();
                c.polyline(&panel, seg.clone(), color(i), 1.0);
                c.dots(&panel, &seg[seg.len().saturating_sub(1)..], color(i), 2.5);
            }
            if let Some(l) = left {
                c.dots(&panel, &[l], "#000", 3.0);
            }
        }
        "simulation" => {
            let pts: Vec<_> = doc["plateaus"].as_array().into_iter().flatten().filter_map(|p| state(&p["state"])).collect();
            c.polyline(&panel, pts.clone(), "#888", 1.0);
            c.dots(&panel, &pts, color(1), 3.0);
        }
        other => bail!(ValidationError(format!("cannot plot JSON of kind `{other}`"))),
    }
    Ok(c.finish(kind))
}

fn render_csv(text: &str) -> anyhow::Result<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| ValidationError("empty CSV input".into()))?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let rows: Vec<Vec<&str>> = lines.filter(|l| !l.trim().is_empty()).map(|l| l.split(',').collect()).collect();
    let get = |r: &Vec<&str>, i: usize| -> Option<f64> { r.get(i)?.trim().parse().ok() };

    if let (Some(it), Some(iv), Some(iw), Some(io)) = (col("t"), col("v"), col("s_w"), col("s_o")) {
        // Last stored time level of a simulation profile.
        let t_last = rows.iter().filter_map(|r| get(r, it)).fold(f64::NEG_INFINITY, f64::max);
        let last: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter(|r| get(r, it) == Some(t_last))
            .filter_map(|r| Some((get(r, iv)?, get(r, iw)?, get(r, io)?)))
            .collect();
        if last.is_empty() {
            bail!(ValidationError("profile CSV has no rows with a similarity variable".into()));
        }
        let mut c = Canvas::new(2);
        let tri_panel = c.triangle_panel();
        c.polyline(&tri_panel, last.iter().map(|&(_, w, o)| tri(w, o)).collect(), color(0), 1.5);
        let (vmin, vmax) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let speed = Panel { x0: SIZE, x_range: (vmin, vmax.max(vmin + 1e-12)), y_range: (-0.02, 1.02) };
        let axes = vec![(vmin, 0.0), (vmax, 0.0)];
        c.polyline(&speed, axes, "#000", 1.0);
        c.polyline(&speed, last.iter().map(|&(v, w, _)| (v, w)).collect(), color(0), 1.5);
        c.polyline(&speed, last.iter().map(|&(v, _, o)| (v, o)).collect(), color(1), 1.5);
        c.label(SIZE + MARGIN, 20.0, &format!("t = {t_last}, s_w (blue), s_o (red) against x/t"));
        return Ok(c.finish("profile"));
    }
    if let (Some(ib), Some(iw), Some(io)) = (col("branch"), col("sw"), col("so")) {
        let mut c = Canvas::new(1);
        let panel = c.triangle_panel();
        let mut current: Option<(f64, Vec<(f64, f64)>)> = None;
        let mut k = 0;
        for r in &rows {
            let (Some(b), Some(w), Some(o)) = (get(r, ib), get(r, iw), get(r, io)) else { continue };
            match &mut current {
                Some((cb, pts)) if *cb == b => pts.push(tri(w, o)),
                _ => {
                    if let Some((_, pts)) = current.take() {
                        c.polyline(&panel, pts, color(k), 1.5);
                        k += 1;
                    }
                    current = Some((b, vec![tri(w, o)]));
                }
            }
        }
        if let Some((_, pts)) = current {
            c.polyline(&panel, pts, color(k), 1.5);
        }
        return Ok(c.finish("hugoniot"));
    }
    Err(anyhow!(ValidationError(format!("unrecognised CSV header: {}", header.join(",")))))
}

pub fn plot(input: &Path, out: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let svg = if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(&text)?;
        render_json(&doc)?
    } else {
        render_csv(&text)?
    };
    std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
