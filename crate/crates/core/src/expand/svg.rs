//! Static SVG pictures of germs and their expansions.

use std::fmt::Write;

use super::germ::CurveGerm2D;
use super::geometry::{add, dist, scale, sub, Point};
use super::graph::{ArborealGraph, EdgeSource, NodeKind};

const SIZE: f64 = 640.0;
const TICK: f64 = 0.025;

/// Plane coordinates in `[-1.1, 1.1]^2` to pixels, y up.
fn px(p: Point) -> (f64, f64) {
    let s = SIZE / 2.2;
    ((p[0] + 1.1) * s, (1.1 - p[1]) * s)
}

fn path(points: &[Point]) -> String {
    let mut d = String::new();
    for (k, p) in points.iter().enumerate() {
        let (x, y) = px(*p);
        let _ = write!(d, "{}{x:.3},{y:.3}", if k == 0 { "M" } else { " L" });
    }
    d
}

/// Point at half the length of a polyline, with the segment index it lies on.
fn midpoint(points: &[Point]) -> (Point, usize) {
    let total: f64 = points.windows(2).map(|w| dist(w[0], w[1])).sum();
    let mut acc = 0.0;
    for (k, w) in points.windows(2).enumerate() {
        let l = dist(w[0], w[1]);
        if acc + l >= total / 2.0 && l > 0.0 {
            let t = (total / 2.0 - acc) / l;
            return (add(w[0], scale(sub(w[1], w[0]), t)), k);
        }
        acc += l;
    }
    (points[0], 0)
}

/// Branches in grey, the unit circle dashed, expanded curves in black with
/// coorientation ticks, and node markers by type.
pub fn render(germ: Option<&CurveGerm2D>, graph: &ArborealGraph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r##"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"##);
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let (cx, cy) = px([0.0, 0.0]);
    let _ = writeln!(
        s,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="#bbbbbb" stroke-dasharray="4 4"/>"##,
        SIZE / 2.2
    );
    if let Some(g) = germ {
        for b in &g.branches {
            let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#999999" stroke-width="1"/>"##, path(&b.points));
        }
    }
    for e in &graph.edges {
        let color = match e.source {
            EdgeSource::Circle(_) => "#1f4e9e",
            _ => "#000000",
        };
        let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"##, path(&e.points));
        let (m, k) = midpoint(&e.points);
        let w = [e.points[k], e.points[k + 1]];
        let d = sub(w[1], w[0]);
        // conormal at the midpoint: interpolate the side of the end conormals
        let n = {
            let l = d[0].hypot(d[1]);
            let left = [-d[1] / l, d[0] / l];
            let reference = e.ends[0].conormal;
            if left[0] * reference[0] + left[1] * reference[1] >= 0.0 {
                left
            } else {
                [-left[0], -left[1]]
            }
        };
        let (x0, y0) = px(m);
        let (x1, y1) = px(add(m, scale(n, TICK)));
        let _ = writeln!(s, r##"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y1:.3}" stroke="{color}" stroke-width="1.5"/>"##);
    }
    for node in &graph.nodes {
        let (x, y) = px(node.point);
        let _ = match node.kind {
            NodeKind::A2 => writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="#d62728"/>"##),
            NodeKind::End => writeln!(s, r##"<rect x="{:.3}" y="{:.3}" width="7" height="7" fill="#2ca02c"/>"##, x - 3.5, y - 3.5),
            NodeKind::XCross => writeln!(
                s,
                r##"<path d="M{:.3},{:.3} L{:.3},{:.3} M{:.3},{:.3} L{:.3},{:.3}" stroke="#9467bd" stroke-width="2.5"/>"##,
                x - 5.0,
                y - 5.0,
                x + 5.0,
                y + 5.0,
                x - 5.0,
                y + 5.0,
                x + 5.0,
                y - 5.0
            ),
            NodeKind::NotArboreal => {
                writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="6" fill="none" stroke="#ff7f0e" stroke-width="2"/>"##)
            }
        };
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::graph::tangency_fixture;

    #[test]
    fn renders_every_node() {
        let g = tangency_fixture();
        let svg = render(None, &g);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches(r##"r="6""##).count(), 2);
        assert_eq!(svg, render(None, &g));
    }
}
