//! Cooriented plane graphs and the local classification of their nodes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::geometry::{cross, dist, dot, norm, normalize, perp, scale, sin_between, sub, Point};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    A2,
    XCross,
    End,
    NotArboreal,
}

impl NodeKind {
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::A2 => "A2",
            NodeKind::XCross => "X_CROSS",
            NodeKind::End => "END",
            NodeKind::NotArboreal => "NOT_ARBOREAL",
        }
    }
}

/// What an incident edge end is in the local model of its node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// A2 through-curve, side with `<u, m> < 0`
    ThroughFirst,
    /// A2 through-curve, other side
    ThroughSecond,
    Terminator,
    /// X_CROSS first through-curve
    FirstCurve,
    /// X_CROSS second through-curve
    SecondCurve,
    End,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEnd {
    pub node: Option<usize>,
    /// unit tangent pointing from this end into the edge
    pub tangent: Point,
    /// unit conormal of the curve at this end
    pub conormal: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "index", rename_all = "snake_case")]
pub enum EdgeSource {
    Circle(usize),
    Offset(usize),
    Branch(usize),
    Fixture(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: EdgeSource,
    pub points: Vec<Point>,
    pub ends: [EdgeEnd; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incidence {
    pub edge: usize,
    pub end: usize,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub point: Point,
    pub kind: NodeKind,
    /// rows map the plane onto the coordinates of the local model
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<[Point; 2]>,
    #[serde(default)]
    pub incidences: Vec<Incidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Node {
    pub fn unclassified(point: Point) -> Self {
        Node { point, kind: NodeKind::NotArboreal, chart: None, incidences: Vec::new(), diagnostic: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArborealGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census(pub BTreeMap<String, usize>);

impl Census {
    pub fn get(&self, kind: NodeKind) -> usize {
        self.0.get(kind.label()).copied().unwrap_or(0)
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().filter(|(_, &n)| n > 0).map(|(k, n)| format!("{k}:{n}")).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Classification tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// tangents and conormals closer than this count as equal
    pub direction: f64,
    /// minimum sine of the angle between transverse curves
    pub transversality: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances { direction: 1e-6, transversality: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub kind: NodeKind,
    pub chart: Option<[Point; 2]>,
    pub roles: Vec<(usize, usize, Role)>,
    pub diagnostic: Option<String>,
}

impl ArborealGraph {
    pub fn from_json(text: &str) -> Result<Self> {
        let g: ArborealGraph = serde_json::from_str(text).map_err(|e| Error::Parse(format!("graph: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.edges.iter().enumerate() {
            if e.points.len() < 2 {
                return Err(Error::Validation(format!("edge {i} has fewer than two points")));
            }
            for end in &e.ends {
                if end.node.is_some_and(|v| v >= self.nodes.len()) {
                    return Err(Error::Validation(format!("edge {i} refers to a missing node")));
                }
                if (norm(end.tangent) - 1.0).abs() > 1e-6 || (norm(end.conormal) - 1.0).abs() > 1e-6 {
                    return Err(Error::Validation(format!("edge {i} has a non-unit tangent or conormal")));
                }
            }
        }
        Ok(())
    }

    /// `(edge, end)` pairs attached to `v`, in edge order.
    pub fn incident(&self, v: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            for (k, end) in e.ends.iter().enumerate() {
                if end.node == Some(v) {
                    out.push((i, k));
                }
            }
        }
        out
    }

    pub fn classify_node(&self, v: usize, tol: &ClassifyTolerances) -> Classification {
        let inc = self.incident(v);
        let ends: Vec<EdgeEnd> = inc.iter().map(|&(e, k)| self.edges[e].ends[k]).collect();
        let fail = |msg: String| Classification { kind: NodeKind::NotArboreal, chart: None, roles: Vec::new(), diagnostic: Some(msg) };
        let opposite = |a: &EdgeEnd, b: &EdgeEnd| norm([a.tangent[0] + b.tangent[0], a.tangent[1] + b.tangent[1]]) < tol.direction;
        let same_conormal = |a: &EdgeEnd, b: &EdgeEnd| dist(a.conormal, b.conormal) < tol.direction;
        match ends.len() {
            1 => {
                let u = ends[0].tangent;
                Classification {
                    kind: NodeKind::End,
                    chart: Some([u, perp(u)]),
                    roles: vec![(inc[0].0, inc[0].1, Role::End)],
                    diagnostic: None,
                }
            }
            3 => {
                for t in 0..3 {
                    let (a, b) = ((t + 1) % 3, (t + 2) % 3);
                    let (ea, eb, et) = (&ends[a], &ends[b], &ends[t]);
                    if !opposite(ea, eb) {
                        continue;
                    }
                    if !same_conormal(ea, eb) {
                        return fail("through-curve changes coorientation at the node".into());
                    }
                    let n = ea.conormal;
                    let u = et.tangent;
                    if sin_between(u, ea.tangent) < tol.transversality {
                        return fail("terminating edge is tangent to the through-curve".into());
                    }
                    if dot(u, n) <= 0.0 {
                        return fail("terminating edge approaches from the negative side".into());
                    }
                    // x1 = <x, n>, x2 = <x, m> with m normal to the terminator, oriented so det > 0
                    let mut m = perp(u);
                    if cross(n, m) < 0.0 {
                        m = scale(m, -1.0);
                    }
                    let (first, second) = if dot(ea.tangent, m) < 0.0 { (a, b) } else { (b, a) };
                    let roles = vec![
                        (inc[first].0, inc[first].1, Role::ThroughFirst),
                        (inc[second].0, inc[second].1, Role::ThroughSecond),
                        (inc[t].0, inc[t].1, Role::Terminator),
                    ];
                    return Classification { kind: NodeKind::A2, chart: Some([n, m]), roles, diagnostic: None };
                }
                fail("no pair of incident edges forms a smooth through-curve".into())
            }
            4 => {
                for b in 1..4 {
                    let rest: Vec<usize> = (1..4).filter(|&k| k != b).collect();
                    let (c, d) = (rest[0], rest[1]);
                    if !(opposite(&ends[0], &ends[b]) && opposite(&ends[c], &ends[d])) {
                        continue;
                    }
                    if !same_conormal(&ends[0], &ends[b]) || !same_conormal(&ends[c], &ends[d]) {
                        return fail("a through-curve changes coorientation at the crossing".into());
                    }
                    if sin_between(ends[0].tangent, ends[c].tangent) < tol.transversality {
                        return fail("the two through-curves are tangent".into());
                    }
                    let roles = vec![
                        (inc[0].0, inc[0].1, Role::FirstCurve),
                        (inc[b].0, inc[b].1, Role::FirstCurve),
                        (inc[c].0, inc[c].1, Role::SecondCurve),
                        (inc[d].0, inc[d].1, Role::SecondCurve),
                    ];
                    return Classification {
                        kind: NodeKind::XCross,
                        chart: Some([ends[0].conormal, ends[c].conormal]),
                        roles,
                        diagnostic: None,
                    };
                }
                fail("incident edges do not pair into two through-curves".into())
            }
            k => fail(format!("valence {k} matches no local model")),
        }
    }

    /// Classify every node in place.
    pub fn classify_all(&mut self, tol: &ClassifyTolerances) {
        for v in 0..self.nodes.len() {
            let c = self.classify_node(v, tol);
            let node = &mut self.nodes[v];
            node.kind = c.kind;
            node.chart = c.chart;
            node.diagnostic = c.diagnostic;
            node.incidences = c.roles.into_iter().map(|(edge, end, role)| Incidence { edge, end, role }).collect();
        }
    }

    pub fn census(&self) -> Census {
        let mut m = BTreeMap::new();
        for n in &self.nodes {
            *m.entry(n.kind.label().to_string()).or_insert(0) += 1;
        }
        Census(m)
    }

    /// First node that failed classification.
    pub fn first_failure(&self) -> Option<Error> {
        self.nodes.iter().find(|n| n.kind == NodeKind::NotArboreal).map(|n| Error::NotArboreal {
            x: n.point[0],
            y: n.point[1],
            message: n.diagnostic.clone().unwrap_or_default(),
        })
    }

    /// Edge ends leaving the unit disk.
    pub fn exits(&self) -> usize {
        self.edges.iter().flat_map(|e| e.ends.iter()).filter(|end| end.node.is_none()).count()
    }

    /// `V + exits - E`: exits count as vertices on the boundary circle.
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 + self.exits() as i64 - self.edges.len() as i64
    }
}

/// Edge along `points`, cooriented by `side_normal(direction)`.
pub fn polyline_edge(
    source: EdgeSource,
    points: Vec<Point>,
    from: Option<usize>,
    to: Option<usize>,
    side_normal: impl Fn(Point) -> Point,
) -> Edge {
    let n = points.len();
    let d0 = normalize(sub(points[1], points[0]));
    let d1 = normalize(sub(points[n - 1], points[n - 2]));
    Edge {
        source,
        ends: [
            EdgeEnd { node: from, tangent: d0, conormal: side_normal(d0) },
            EdgeEnd { node: to, tangent: scale(d1, -1.0), conormal: side_normal(d1) },
        ],
        points,
    }
}

/// The characteristic deformation of the three-branch germ in which the two
/// parabolas become tangent to the line: both nodes are 4-valent tangencies.
pub fn tangency_fixture() -> ArborealGraph {
    let up = |d: Point| if d[0] >= 0.0 { perp(d) } else { scale(perp(d), -1.0) };
    let sample = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> Vec<Point> {
        (0..=32).map(|k| a + (b - a) * k as f64 / 32.0).map(|x| [x, f(x)]).collect()
    };
    let line = |_: f64| 0.0;
    let upper = |x: f64| (x - 0.2) * (x - 0.2);
    let lower = |x: f64| -(x + 0.2) * (x + 0.2);
    let nodes = vec![Node::unclassified([-0.2, 0.0]), Node::unclassified([0.2, 0.0])];
    let edges = vec![
        polyline_edge(EdgeSource::Fixture(0), sample(&line, -1.0, -0.2), None, Some(0), up),
        polyline_edge(EdgeSource::Fixture(0), sample(&line, -0.2, 0.2), Some(0), Some(1), up),
        polyline_edge(EdgeSource::Fixture(0), sample(&line, 0.2, 1.0), Some(1), None, up),
        polyline_edge(EdgeSource::Fixture(1), sample(&upper, -0.4, 0.2), None, Some(1), up),
        polyline_edge(EdgeSource::Fixture(1), sample(&upper, 0.2, 0.8), Some(1), None, up),
        polyline_edge(EdgeSource::Fixture(2), sample(&lower, -0.8, -0.2), None, Some(0), up),
        polyline_edge(EdgeSource::Fixture(2), sample(&lower, -0.2, 0.4), Some(0), None, up),
    ];
    let mut g = ArborealGraph { nodes, edges };
    // the parabolas are smooth through the nodes: use their exact tangents there
    for e in g.edges.iter_mut().skip(3) {
        for end in e.ends.iter_mut().filter(|end| end.node.is_some()) {
            end.tangent = [end.tangent[0].signum(), 0.0];
            end.conormal = [0.0, 1.0];
        }
    }
    g.classify_all(&ClassifyTolerances::default());
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(dirs: &[Point], normals: &[Point]) -> ArborealGraph {
        let edges = dirs
            .iter()
            .zip(normals)
            .map(|(&d, &n)| Edge {
                source: EdgeSource::Fixture(0),
                points: vec![[0.0, 0.0], d],
                ends: [
                    EdgeEnd { node: Some(0), tangent: d, conormal: n },
                    EdgeEnd { node: None, tangent: scale(d, -1.0), conormal: n },
                ],
            })
            .collect();
        let mut g = ArborealGraph { nodes: vec![Node::unclassified([0.0, 0.0])], edges };
        g.classify_all(&ClassifyTolerances::default());
        g
    }

    #[test]
    fn half_line_on_cooriented_side_is_a2() {
        let up = [0.0, 1.0];
        let g = star(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]], &[up, up, [1.0, 0.0]]);
        assert_eq!(g.nodes[0].kind, NodeKind::A2);
        let roles: Vec<Role> = g.nodes[0].incidences.iter().map(|i| i.role).collect();
        assert!(roles.contains(&Role::Terminator));
        let wrong = star(&[[1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]], &[up, up, [1.0, 0.0]]);
        assert_eq!(wrong.nodes[0].kind, NodeKind::NotArboreal);
    }

    #[test]
    fn crossings_and_high_valence() {
        let g = star(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], &[[0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(g.nodes[0].kind, NodeKind::XCross);
        let dirs: Vec<Point> = (0..6).map(|k| super::super::geometry::polar(1.0, k as f64)).collect();
        let g = star(&dirs, &dirs.iter().map(|&d| perp(d)).collect::<Vec<_>>());
        assert_eq!(g.nodes[0].kind, NodeKind::NotArboreal);
        assert!(g.nodes[0].diagnostic.as_deref().unwrap().contains("valence 6"));
    }

    #[test]
    fn tangency_fixture_is_rejected() {
        let g = tangency_fixture();
        assert_eq!(g.census().get(NodeKind::NotArboreal), 2);
        assert!(g.nodes[0].diagnostic.as_deref().unwrap().contains("tangent"));
        assert!(g.first_failure().is_some());
    }
}
