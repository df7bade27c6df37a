//! SVG figures of solution documents.
//!
//! One panel per base solution (or per direct solution). Primaries are filled
//! circles, small-mass positions are open circles.

use crate::document::{SolutionDocument, SolutionKind};
use std::fmt::Write;

const PANEL: f64 = 240.0;
const MARGIN: f64 = 16.0;
const RADIUS: f64 = 4.0;

struct Panel {
    label: String,
    primaries: Vec<[f64; 2]>,
    small: Vec<[f64; 2]>,
}

fn panels(doc: &SolutionDocument) -> Vec<Panel> {
    let n = doc.config.run.n;
    let mut out: Vec<Panel> = doc
        .blocks(SolutionKind::Base)
        .map(|b| Panel {
            label: format!("k = {}", b.k.unwrap_or(0) + 1),
            primaries: b.coordinates.clone(),
            small: Vec::new(),
        })
        .collect();
    let continued = doc.blocks(SolutionKind::Continued).count() > 0;
    let kind = if continued {
        SolutionKind::Continued
    } else {
        SolutionKind::Restricted
    };
    for b in doc.blocks(kind) {
        if let (Some(k), Some(p)) = (b.k, b.coordinates.get(n)) {
            if let Some(panel) = out.get_mut(k) {
                panel.small.push(*p);
            }
        }
    }
    for b in doc.blocks(SolutionKind::Direct) {
        let split = n.min(b.coordinates.len());
        out.push(Panel {
            label: format!("m = {}", b.m.unwrap_or(0) + 1),
            primaries: b.coordinates[..split].to_vec(),
            small: b.coordinates[split..].to_vec(),
        });
    }
    out
}

/// Square view box of a panel: the union of its points padded by 10%.
fn view(panel: &Panel) -> (f64, f64, f64) {
    let pts = panel.primaries.iter().chain(&panel.small);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if x0 > x1 {
        return (0.0, 0.0, 1.0);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12) * 1.1;
    (0.5 * (x0 + x1), 0.5 * (y0 + y1), span)
}

pub fn render(doc: &SolutionDocument) -> String {
    let panels = panels(doc);
    let cols = (panels.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = panels.len().div_ceil(cols).max(1);
    let cell = PANEL + 2.0 * MARGIN;
    let (w, h) = (cols as f64 * cell, rows as f64 * cell);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % cols) as f64 * cell + MARGIN;
        let oy = (i / cols) as f64 * cell + MARGIN;
        let (cx, cy, span) = view(panel);
        let map = |p: &[f64; 2]| {
            (
                ox + PANEL * (0.5 + (p[0] - cx) / span),
                oy + PANEL * (0.5 - (p[1] - cy) / span),
            )
        };
        let _ = writeln!(s, r#"<g class="panel" id="panel-{i}">"#);
        let _ = writeln!(
            s,
            r#"<rect x="{ox}" y="{oy}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black" stroke-width="0.5"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            ox + 4.0,
            oy + 14.0,
            panel.label
        );
        for p in &panel.primaries {
            let (x, y) = map(p);
            let _ = writeln!(
                s,
                r#"<circle class="primary" cx="{x:.3}" cy="{y:.3}" r="{RADIUS}" fill="black"/>"#
            );
        }
        for p in &panel.small {
            let (x, y) = map(p);
            let _ = writeln!(
                s,
                r#"<circle class="small" cx="{x:.3}" cy="{y:.3}" r="{RADIUS}" fill="none" stroke="black"/>"#
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
