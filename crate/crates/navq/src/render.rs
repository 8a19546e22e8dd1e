//! Route traces as SVG and camera frames as binary PGM.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use navq_core::agents::MissionReport;
use navq_core::gridmap::GridCoord;
use navq_core::worldsim::{CameraFrame, World};

const CELL: f64 = 10.0;

fn centre(c: GridCoord) -> (f64, f64) {
    ((c.col as f64 + 0.5) * CELL, (c.row as f64 + 0.5) * CELL)
}

pub fn visit_counts(route: &[GridCoord]) -> BTreeMap<GridCoord, u32> {
    let mut counts = BTreeMap::new();
    for &c in route {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}

/// Obstacles as red circles, visited cells shaded by visit count, the route
/// as a polyline and start/goal markers.
pub fn route_svg(report: &MissionReport, world: &World) -> String {
    let spec = world.spec();
    let (w, h) = (spec.width_m as f64 * CELL, spec.height_m as f64 * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#202020"/>"##);
    let _ = writeln!(s, r#"<g class="obstacles">"#);
    for o in world.obstacles() {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="red"/>"#,
            o.x * CELL,
            o.y * CELL,
            o.r * CELL
        );
    }
    let _ = writeln!(s, "</g>");
    let counts = visit_counts(&report.route);
    let max = counts.values().copied().max().unwrap_or(1) as f64;
    let _ = writeln!(s, r#"<g class="visits">"#);
    for (c, n) in &counts {
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="white" data-visits="{n}" opacity="{:.4}"/>"#,
            c.col as f64 * CELL,
            c.row as f64 * CELL,
            *n as f64 / max
        );
    }
    let _ = writeln!(s, "</g>");
    if !report.route.is_empty() {
        let points: Vec<String> = report
            .route
            .iter()
            .map(|&c| {
                let (x, y) = centre(c);
                format!("{x},{y}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="route" points="{}" fill="none" stroke="deepskyblue" stroke-width="2"/>"#,
            points.join(" ")
        );
    }
    for (class, c, colour) in [("start", spec.start, "lime"), ("goal", spec.goal, "gold")] {
        let (x, y) = centre(c);
        let _ = writeln!(s, r#"<circle class="{class}" cx="{x}" cy="{y}" r="{}" fill="{colour}"/>"#, CELL * 0.4);
    }
    s.push_str("</svg>\n");
    s
}

/// 8-bit binary PGM of a frame in `[-1, 1]`.
pub fn frame_pgm(frame: &CameraFrame, size: usize) -> Vec<u8> {
    let mut out = format!("P5\n{size} {size}\n255\n").into_bytes();
    out.extend(frame.pixels().iter().map(|p| ((p + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8));
    out
}
