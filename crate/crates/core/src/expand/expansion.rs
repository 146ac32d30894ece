//! Truncated cylinders, expanded strata, and the total expansion of a germ.

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::constants::{
    check_ordering, draw_constants, radii_separated, ConstantsRanges, ConstantsReport, ExpansionConstants, StratumConstants,
    Violation,
};
use super::germ::{CurveGerm2D, Side, Stratification};
use super::geometry::{
    add, angle_of, arc_points, dist, normalize, offset_polyline, perp, point_segment_distance, polar, polyline_circle,
    polyline_slice, relative_angle, scale, segment_distance, segment_intersection, self_intersection, sin_between, sub, Point,
};
use super::graph::{polyline_edge, ArborealGraph, ClassifyTolerances, Edge, EdgeEnd, EdgeSource, Node};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// every arc stratum is replaced by its positive offset
    #[default]
    Full,
    /// branches are kept outside the ball; only the origin is expanded
    Intro,
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "intro" => Ok(Mode::Intro),
            _ => Err(Error::Parse(format!("unknown mode '{s}' (expected full or intro)"))),
        }
    }
}

/// Geometric tolerances of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryTolerances {
    /// minimum clearance between distinct features (nodes, END points, curves)
    pub margin: f64,
    /// minimum sine of the angle at every transverse intersection
    pub transversality: f64,
}

impl Default for GeometryTolerances {
    fn default() -> Self {
        GeometryTolerances { margin: 1e-6, transversality: 1e-3 }
    }
}

/// The kept arc `{|x| = r, <x, n> >= threshold}` of an origin coray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeptArc {
    pub radius: f64,
    pub conormal: Point,
    /// angle of the conormal
    pub center: f64,
    /// the arc spans `center +- half_width`
    pub half_width: f64,
}

impl KeptArc {
    pub fn end_points(&self) -> [Point; 2] {
        [polar(self.radius, self.center - self.half_width), polar(self.radius, self.center + self.half_width)]
    }

    /// Signed angle of `p` from the center of the arc.
    pub fn offset_of(&self, p: Point) -> f64 {
        relative_angle(angle_of(p), self.center)
    }

    /// Positive when `p` (on the circle) lies inside the arc, by that much arc length.
    pub fn clearance(&self, p: Point) -> f64 {
        (self.half_width - self.offset_of(p).abs()) * self.radius
    }
}

/// Pieces of a truncated cylinder in the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CylinderPiece {
    Circle { radius: f64 },
    Offsets { positive: Vec<Point>, negative: Vec<Point> },
}

/// Expanded stratum: the part of the truncated cylinder where `lambda + r d - s >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExpandedPiece {
    Arc(KeptArc),
    Offset { points: Vec<Point>, positive_kept: bool, negative_kept: bool },
}

/// Kept arc of the origin coray with conormal `n`.
pub fn expanded_coray(n: Point, c: &StratumConstants) -> Result<KeptArc> {
    let t = c.threshold();
    if !(t > -c.radius && t < c.radius) {
        return Err(Error::Constants(format!("threshold: {t} outside (-{r}, {r})", r = c.radius)));
    }
    let n = normalize(n);
    Ok(KeptArc { radius: c.radius, conormal: n, center: angle_of(n), half_width: (t / c.radius).acos() })
}

/// Extend the last segment so the polyline surely leaves the unit disk.
fn extend(points: &[Point]) -> Vec<Point> {
    let mut out = points.to_vec();
    let n = out.len();
    let d = normalize(sub(out[n - 1], out[n - 2]));
    out.push(add(out[n - 1], d));
    out
}

/// Offset of branch `j` at signed distance `r`, extended past the unit circle.
fn branch_offset(germ: &CurveGerm2D, j: usize, r: f64) -> Option<Vec<Point>> {
    let b = &germ.branches[j];
    let pts = extend(&b.points);
    let mut normals = b.normals();
    normals.push(*normals.last().unwrap());
    offset_polyline(&pts, &normals, r)
}

/// Portion of `points` between its crossing of `|x| = inner` and its exit from the unit disk.
fn truncate(points: &[Point], inner: f64) -> Option<Vec<Point>> {
    let start = polyline_circle(points, inner).into_iter().next()?;
    let exit = polyline_circle(points, 1.0).into_iter().find(|h| h.position() > start.position())?;
    Some(polyline_slice(points, start.position(), exit.position()))
}

/// Truncated cylinder of origin coray `i` (a circle) or of arc `j` (both offsets).
pub fn truncated_cylinder(germ: &CurveGerm2D, strat: &Stratification, c: &ExpansionConstants, arc: Option<usize>) -> Result<Vec<CylinderPiece>> {
    match arc {
        None => Ok(c.corays.iter().map(|k| CylinderPiece::Circle { radius: k.radius }).collect()),
        Some(j) => {
            let r = c.arcs[j].radius;
            let inner = c.corays[strat.coray_of[j]].radius;
            let too_large = || Error::Constants(format!("offset_self: offset of branch {j} at radius {r} folds over"));
            let pos = branch_offset(germ, j, r).ok_or_else(too_large)?;
            let neg = branch_offset(germ, j, -r).ok_or_else(too_large)?;
            if self_intersection(&pos).is_some() || self_intersection(&neg).is_some() {
                return Err(too_large());
            }
            let cut = |p: &[Point]| truncate(p, inner).ok_or_else(|| Error::Constants(format!("offset_start: offset of branch {j} never leaves the ball")));
            Ok(vec![CylinderPiece::Offsets { positive: cut(&pos)?, negative: cut(&neg)? }])
        }
    }
}

/// Expanded stratum of arc `j`: the inequality is evaluated on both offsets, where
/// `lambda = +r` and `-r`.
pub fn expanded_arc(germ: &CurveGerm2D, strat: &Stratification, c: &ExpansionConstants, j: usize) -> Result<ExpandedPiece> {
    let k = &c.arcs[j];
    let pieces = truncated_cylinder(germ, strat, c, Some(j))?;
    let CylinderPiece::Offsets { positive, .. } = pieces.into_iter().next().unwrap() else { unreachable!() };
    let t = k.threshold();
    Ok(ExpandedPiece::Offset { points: positive, positive_kept: k.radius >= t, negative_kept: -k.radius >= t })
}

/// A curve of the expansion that starts on a kept arc and leaves the unit disk.
#[derive(Clone, Debug, PartialEq)]
struct OpenCurve {
    branch: usize,
    coray: usize,
    /// extended polyline; the curve is the part between `start` and `exit`
    points: Vec<Point>,
    side: Side,
    start: f64,
    exit: f64,
}

impl OpenCurve {
    fn piece(&self) -> Vec<Point> {
        polyline_slice(&self.points, self.start, self.exit)
    }

    fn side_normal(&self, d: Point) -> Point {
        match self.side {
            Side::Left => perp(d),
            Side::Right => scale(perp(d), -1.0),
        }
    }
}

#[derive(Clone, Debug)]
struct Crossing {
    curve: usize,
    coray: usize,
    position: f64,
    point: Point,
}

/// Everything the graph is assembled from, plus the violations found on the way.
struct Construction {
    arcs: Vec<KeptArc>,
    curves: Vec<OpenCurve>,
    crossings: Vec<Crossing>,
    violations: Vec<Violation>,
}

fn construct(germ: &CurveGerm2D, strat: &Stratification, c: &ExpansionConstants, mode: Mode, tol: &GeometryTolerances) -> Construction {
    let mut violations = Vec::new();
    let mut arcs = Vec::new();
    for (i, coray) in strat.corays.iter().enumerate() {
        match expanded_coray(coray.conormal, &c.corays[i]) {
            Ok(a) => arcs.push(a),
            Err(e) => {
                violations.push(Violation::new("threshold", e.to_string()));
                return Construction { arcs, curves: Vec::new(), crossings: Vec::new(), violations };
            }
        }
    }
    if mode == Mode::Intro && strat.corays.len() > 1 {
        violations.push(Violation::new("mode", "intro mode expands a single coray at the origin"));
        return Construction { arcs, curves: Vec::new(), crossings: Vec::new(), violations };
    }

    let mut curves = Vec::new();
    for (j, b) in germ.branches.iter().enumerate() {
        let i = strat.coray_of[j];
        let arc = arcs[i];
        let points = match mode {
            Mode::Full => match branch_offset(germ, j, c.arcs[j].radius) {
                Some(p) => p,
                None => {
                    violations.push(Violation::new("offset_self", format!("branch '{}': offset folds at a sharp corner", b.name)));
                    continue;
                }
            },
            Mode::Intro => extend(&b.points),
        };
        if let Some(p) = self_intersection(&points) {
            violations.push(Violation::at("offset_self", format!("branch '{}': offset intersects itself", b.name), p));
            continue;
        }
        let hits = polyline_circle(&points, arc.radius);
        if hits.len() != 1 {
            violations.push(Violation::new(
                "offset_start",
                format!("branch '{}': crosses the circle of radius {} {} times", b.name, arc.radius, hits.len()),
            ));
            continue;
        }
        let start = hits[0];
        if arc.clearance(start.point) <= tol.margin {
            violations.push(Violation::at("offset_start", format!("branch '{}': starts outside the kept arc", b.name), start.point));
            continue;
        }
        if sin_between(start.direction, perp(start.point)) < tol.transversality {
            violations.push(Violation::at("transversality", format!("branch '{}': tangent to its circle", b.name), start.point));
        }
        let Some(exit) = polyline_circle(&points, 1.0).into_iter().find(|h| h.position() > start.position()) else {
            violations.push(Violation::new("offset_start", format!("branch '{}': never leaves the unit disk", b.name)));
            continue;
        };
        curves.push(OpenCurve { branch: j, coray: i, points, side: b.coorient, start: start.position(), exit: exit.position() });
    }

    let pieces: Vec<Vec<Point>> = curves.iter().map(OpenCurve::piece).collect();
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            'pair: for wa in pieces[a].windows(2) {
                for wb in pieces[b].windows(2) {
                    if let Some((s, _)) = segment_intersection(wa[0], wa[1], wb[0], wb[1]) {
                        let p = add(wa[0], scale(sub(wa[1], wa[0]), s));
                        violations.push(Violation::at("offset_offset", format!("curves of branches {} and {} meet", curves[a].branch, curves[b].branch), p));
                        break 'pair;
                    }
                    if segment_distance(wa[0], wa[1], wb[0], wb[1]) <= tol.margin {
                        violations.push(Violation::at("offset_offset", "two curves come too close", wa[0]));
                        break 'pair;
                    }
                }
            }
        }
    }

    let mut crossings = Vec::new();
    for (ci, curve) in curves.iter().enumerate() {
        for (i, arc) in arcs.iter().enumerate() {
            if i == curve.coray {
                continue;
            }
            for h in polyline_circle(&curves[ci].points, arc.radius) {
                if h.position() <= curve.start || h.position() >= curve.exit {
                    continue;
                }
                let clear = arc.clearance(h.point);
                if clear.abs() <= tol.margin {
                    violations.push(Violation::at("end_margin", "a curve passes through the end of a kept arc", h.point));
                } else if clear > 0.0 {
                    if sin_between(h.direction, perp(h.point)) < tol.transversality {
                        violations.push(Violation::at("transversality", "curve tangent to a kept arc", h.point));
                    }
                    crossings.push(Crossing { curve: ci, coray: i, position: h.position(), point: h.point });
                }
            }
        }
    }
    for arc in &arcs {
        for e in arc.end_points() {
            for p in &pieces {
                let d = p.windows(2).map(|w| point_segment_distance(e, w[0], w[1])).fold(f64::INFINITY, f64::min);
                if d <= tol.margin {
                    violations.push(Violation::at("end_on_curve", "an END point lies on another curve", e));
                }
            }
        }
    }

    // node points must be pairwise separated
    let mut points: Vec<Point> = arcs.iter().flat_map(|a| a.end_points()).collect();
    points.extend(curves.iter().map(|c| c.piece()[0]));
    points.extend(crossings.iter().map(|x| x.point));
    'outer: for a in 0..points.len() {
        for b in a + 1..points.len() {
            if dist(points[a], points[b]) <= tol.margin {
                violations.push(Violation::at("triple_point", "two nodes coincide", points[a]));
                break 'outer;
            }
        }
    }
    Construction { arcs, curves, crossings, violations }
}

/// All violations: ordering discipline plus the geometric conditions of the construction.
pub fn check_constants(germ: &CurveGerm2D, c: &ExpansionConstants, mode: Mode, tol: &GeometryTolerances) -> Result<ConstantsReport> {
    let strat = germ.stratify()?;
    let mut report = check_ordering(&strat, c);
    if report.has("shape") {
        return Ok(report);
    }
    if !report.has("threshold") {
        report.violations.extend(construct(germ, &strat, c, mode, tol).violations);
    }
    Ok(report)
}

/// Rejection-sample constants until [`check_constants`] passes.
pub fn draw_valid_constants<R: Rng>(
    germ: &CurveGerm2D,
    ranges: &ConstantsRanges,
    mode: Mode,
    tol: &GeometryTolerances,
    rng: &mut R,
) -> Result<ExpansionConstants> {
    ranges.validate()?;
    let strat = germ.stratify()?;
    let mut last = None;
    for _ in 0..ranges.max_attempts {
        let c = draw_constants(&strat, ranges, rng);
        if !radii_separated(&c, ranges.origin_separation) {
            continue;
        }
        let report = check_constants(germ, &c, mode, tol)?;
        if report.passed() {
            return Ok(c);
        }
        last = report.first_error();
    }
    Err(last.unwrap_or_else(|| {
        Error::Constants(format!("no valid constants after {} attempts (origin radii never separated)", ranges.max_attempts))
    }))
}

/// Build the expanded graph and classify every node. Fails on the first violation
/// or unclassifiable node.
pub fn total_expansion(
    germ: &CurveGerm2D,
    c: &ExpansionConstants,
    mode: Mode,
    tol: &GeometryTolerances,
    classify: &ClassifyTolerances,
) -> Result<ArborealGraph> {
    let report = check_constants(germ, c, mode, tol)?;
    if let Some(e) = report.first_error() {
        return Err(e);
    }
    let strat = germ.stratify()?;
    let con = construct(germ, &strat, c, mode, tol);
    let mut graph = ArborealGraph::default();

    // nodes on each circle, as (offset angle, node)
    let mut on_arc: Vec<Vec<(f64, usize)>> = vec![Vec::new(); con.arcs.len()];
    let add_node = |graph: &mut ArborealGraph, p: Point| {
        graph.nodes.push(Node::unclassified(p));
        graph.nodes.len() - 1
    };
    for (i, arc) in con.arcs.iter().enumerate() {
        let [e0, e1] = arc.end_points();
        let a = add_node(&mut graph, e0);
        on_arc[i].push((-arc.half_width, a));
        let b = add_node(&mut graph, e1);
        on_arc[i].push((arc.half_width, b));
    }
    // nodes along each curve, as (position, node)
    let mut on_curve: Vec<Vec<(f64, usize)>> = vec![Vec::new(); con.curves.len()];
    for (ci, curve) in con.curves.iter().enumerate() {
        let p = curve.piece()[0];
        let v = add_node(&mut graph, p);
        on_arc[curve.coray].push((con.arcs[curve.coray].offset_of(p), v));
        on_curve[ci].push((curve.start, v));
    }
    for x in &con.crossings {
        let v = add_node(&mut graph, x.point);
        on_arc[x.coray].push((con.arcs[x.coray].offset_of(x.point), v));
        on_curve[x.curve].push((x.position, v));
    }

    for (i, arc) in con.arcs.iter().enumerate() {
        let nodes = &mut on_arc[i];
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in nodes.windows(2) {
            let (a0, a1) = (arc.center + w[0].0, arc.center + w[1].0);
            let points = arc_points(arc.radius, a0, a1);
            let (p0, p1) = (polar(1.0, a0), polar(1.0, a1));
            graph.edges.push(Edge {
                source: EdgeSource::Circle(i),
                points,
                ends: [
                    EdgeEnd { node: Some(w[0].1), tangent: perp(p0), conormal: p0 },
                    EdgeEnd { node: Some(w[1].1), tangent: scale(perp(p1), -1.0), conormal: p1 },
                ],
            });
        }
    }
    for (ci, curve) in con.curves.iter().enumerate() {
        let nodes = &mut on_curve[ci];
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let source = match mode {
            Mode::Full => EdgeSource::Offset(curve.branch),
            Mode::Intro => EdgeSource::Branch(curve.branch),
        };
        let mut cuts: Vec<(f64, Option<usize>)> = nodes.iter().map(|&(p, v)| (p, Some(v))).collect();
        cuts.push((curve.exit, None));
        for w in cuts.windows(2) {
            let points = polyline_slice(&curve.points, w[0].0, w[1].0);
            graph.edges.push(polyline_edge(source, points, w[0].1, w[1].1, |d| curve.side_normal(d)));
        }
    }
    graph.classify_all(classify);
    if let Some(e) = graph.first_failure() {
        return Err(Error::Constants(format!("constants are not sequentially small: {e}")));
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::germ::Branch;
    use crate::expand::graph::NodeKind;

    fn line() -> CurveGerm2D {
        let b = |name: &str, d: Point, side| Branch { name: name.into(), points: vec![[0.0, 0.0], d], coorient: side, conormal: None };
        CurveGerm2D { name: Some("line".into()), branches: vec![b("r", [1.0, 0.0], Side::Left), b("l", [-1.0, 0.0], Side::Right)] }
    }

    fn consts(r: f64, s: f64, arc_r: f64) -> ExpansionConstants {
        let k = |radius| StratumConstants { radius, displacement: 0.5, shift: s };
        ExpansionConstants { epsilon: 0.5, corays: vec![k(r)], arcs: vec![k(arc_r), k(arc_r)] }
    }

    #[test]
    fn kept_arc_threshold() {
        let a = expanded_coray([0.0, 1.0], &StratumConstants { radius: 0.3, displacement: 0.5, shift: 0.0 }).unwrap();
        // kept where y >= -0.15
        assert!(a.clearance(polar(0.3, -0.4)) > 0.0);
        assert!(a.clearance([0.0, -0.3]) < 0.0);
        let [e0, _] = a.end_points();
        assert!((e0[1] + 0.15).abs() < 1e-12);
        let half = expanded_coray([0.0, 1.0], &StratumConstants { radius: 0.3, displacement: 0.5, shift: 0.15 }).unwrap();
        assert!((half.half_width - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(expanded_coray([0.0, 1.0], &StratumConstants { radius: 0.3, displacement: 0.5, shift: 0.5 }).is_err());
    }

    #[test]
    fn horizontal_offsets() {
        let g = line();
        let s = g.stratify().unwrap();
        let c = consts(0.3, 0.0, 0.05);
        let pieces = truncated_cylinder(&g, &s, &c, Some(0)).unwrap();
        let CylinderPiece::Offsets { positive, negative } = &pieces[0] else { panic!() };
        assert!(positive.iter().all(|p| (p[1] - 0.05).abs() < 1e-12));
        assert!(negative.iter().all(|p| (p[1] + 0.05).abs() < 1e-12));
        assert!((positive[0][0].hypot(positive[0][1]) - 0.3).abs() < 1e-12);
        let ExpandedPiece::Offset { positive_kept, negative_kept, .. } = expanded_arc(&g, &s, &c, 0).unwrap() else { panic!() };
        assert!(positive_kept && !negative_kept);
    }

    #[test]
    fn line_census_and_violations() {
        let g = line();
        let tol = GeometryTolerances::default();
        let c = consts(0.3, 0.0, 0.02);
        assert!(check_constants(&g, &c, Mode::Full, &tol).unwrap().passed());
        let graph = total_expansion(&g, &c, Mode::Full, &tol, &ClassifyTolerances::default()).unwrap();
        assert_eq!(graph.census().to_string(), "A2:2 END:2");
        assert_eq!(graph.euler_characteristic(), 1);
        let intro = total_expansion(&g, &c, Mode::Intro, &tol, &ClassifyTolerances::default()).unwrap();
        assert_eq!(intro.census().get(NodeKind::A2), 2);
        let degenerate = consts(0.3, 0.15, 0.02);
        let r = check_constants(&g, &degenerate, Mode::Full, &tol).unwrap();
        assert!(r.has("degenerate"));
        assert!(total_expansion(&g, &degenerate, Mode::Full, &tol, &ClassifyTolerances::default()).is_err());
    }

    #[test]
    fn empty_germ() {
        let g = CurveGerm2D::default();
        let c = ExpansionConstants { epsilon: 0.5, corays: vec![], arcs: vec![] };
        let graph = total_expansion(&g, &c, Mode::Full, &GeometryTolerances::default(), &ClassifyTolerances::default()).unwrap();
        assert!(graph.nodes.is_empty() && graph.edges.is_empty());
    }
}
