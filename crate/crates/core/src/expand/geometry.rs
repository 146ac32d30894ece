//! Plane geometry on f64 polylines and circles centered at the origin.

pub type Point = [f64; 2];

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn normalize(a: Point) -> Point {
    scale(a, 1.0 / norm(a))
}

/// Counterclockwise quarter turn.
pub fn perp(a: Point) -> Point {
    [-a[1], a[0]]
}

pub fn polar(r: f64, angle: f64) -> Point {
    [r * angle.cos(), r * angle.sin()]
}

pub fn angle_of(a: Point) -> f64 {
    a[1].atan2(a[0])
}

/// Sine of the angle between two directions.
pub fn sin_between(a: Point, b: Point) -> f64 {
    (cross(a, b) / (norm(a) * norm(b))).abs()
}

/// Parameters `(s, t)` in `[0,1]^2` where segments `a0a1` and `b0b1` meet, if they
/// cross at a single point. Parallel segments report `None`.
pub fn segment_intersection(a0: Point, a1: Point, b0: Point, b1: Point) -> Option<(f64, f64)> {
    let da = sub(a1, a0);
    let db = sub(b1, b0);
    let den = cross(da, db);
    let scale_ = norm(da) * norm(db);
    if den.abs() <= 1e-14 * scale_.max(f64::MIN_POSITIVE) {
        return None;
    }
    let w = sub(b0, a0);
    let s = cross(w, db) / den;
    let t = cross(w, da) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)).then_some((s, t))
}

/// Minimum distance between two segments.
pub fn segment_distance(a0: Point, a1: Point, b0: Point, b1: Point) -> f64 {
    if segment_intersection(a0, a1, b0, b1).is_some() {
        return 0.0;
    }
    [point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1), point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = sub(b, a);
    let len2 = dot(d, d);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), d) / len2).clamp(0.0, 1.0);
    dist(p, add(a, scale(d, t)))
}

/// Parameters `t` in `[0,1]` where segment `ab` meets the circle `|x| = r`, ascending.
pub fn segment_circle(a: Point, b: Point, r: f64) -> Vec<f64> {
    let d = sub(b, a);
    let qa = dot(d, d);
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * dot(a, d);
    let qc = dot(a, a) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut roots = if q == 0.0 { vec![0.0] } else { vec![q / qa, qc / q] };
    roots.retain(|t| (0.0..=1.0).contains(t));
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    roots
}

/// A crossing of a polyline with a circle: segment index, parameter, point, direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleHit {
    pub segment: usize,
    pub t: f64,
    pub point: Point,
    pub direction: Point,
}

impl CircleHit {
    /// Position along the polyline as `segment + t`.
    pub fn position(&self) -> f64 {
        self.segment as f64 + self.t
    }
}

pub fn polyline_circle(points: &[Point], r: f64) -> Vec<CircleHit> {
    let mut hits: Vec<CircleHit> = Vec::new();
    for (k, w) in points.windows(2).enumerate() {
        for t in segment_circle(w[0], w[1], r) {
            let hit =
                CircleHit { segment: k, t, point: add(w[0], scale(sub(w[1], w[0]), t)), direction: normalize(sub(w[1], w[0])) };
            // a crossing exactly at a shared vertex shows up twice
            if hits.last().is_some_and(|h| dist(h.point, hit.point) < 1e-12) {
                continue;
            }
            hits.push(hit);
        }
    }
    hits
}

/// Sub-polyline between two positions `segment + t`.
pub fn polyline_slice(points: &[Point], from: f64, to: f64) -> Vec<Point> {
    let at = |pos: f64| {
        let k = (pos.floor() as usize).min(points.len() - 2);
        let t = pos - k as f64;
        add(points[k], scale(sub(points[k + 1], points[k]), t))
    };
    let mut out = vec![at(from)];
    let first = from.floor() as usize + 1;
    let last = to.ceil() as usize;
    for p in points.iter().take(last).skip(first) {
        if dist(*p, *out.last().unwrap()) > 1e-15 {
            out.push(*p);
        }
    }
    let end = at(to);
    if dist(end, *out.last().unwrap()) > 1e-15 || out.len() == 1 {
        out.push(end);
    }
    out
}

/// Offset of an open polyline by `r` along the per-segment unit normals, with miter
/// joins. `None` when two consecutive normals are nearly opposite.
pub fn offset_polyline(points: &[Point], normals: &[Point], r: f64) -> Option<Vec<Point>> {
    let m = points.len() - 1;
    let mut out = Vec::with_capacity(points.len());
    out.push(add(points[0], scale(normals[0], r)));
    for k in 1..m {
        let (a, b) = (normals[k - 1], normals[k]);
        let c = 1.0 + dot(a, b);
        if c < 0.1 {
            return None;
        }
        out.push(add(points[k], scale(add(a, b), r / c)));
    }
    out.push(add(points[m], scale(normals[m - 1], r)));
    Some(out)
}

/// First pair of non-adjacent segments that intersect.
pub fn self_intersection(points: &[Point]) -> Option<Point> {
    let n = points.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 2..n - 1 {
            if let Some((s, _)) = segment_intersection(points[i], points[i + 1], points[j], points[j + 1]) {
                return Some(add(points[i], scale(sub(points[i + 1], points[i]), s)));
            }
        }
    }
    None
}

/// Points along the arc of radius `r` from angle `a0` to `a1` (counterclockwise), at
/// most one degree apart.
pub fn arc_points(r: f64, a0: f64, a1: f64) -> Vec<Point> {
    let steps = (((a1 - a0).abs() / 1f64.to_radians()).ceil() as usize).max(1);
    (0..=steps).map(|k| polar(r, a0 + (a1 - a0) * k as f64 / steps as f64)).collect()
}

/// Signed angle of `a` measured from `reference`, in `(-pi, pi]`.
pub fn relative_angle(a: f64, reference: f64) -> f64 {
    let mut d = (a - reference).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d -= std::f64::consts::TAU;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_crossings() {
        let ts = segment_circle([0.0, 0.0], [2.0, 0.0], 1.0);
        assert_eq!(ts, vec![0.5]);
        assert_eq!(segment_circle([-2.0, 0.5], [2.0, 0.5], 1.0).len(), 2);
        assert!(segment_circle([0.0, 2.0], [1.0, 2.0], 1.0).is_empty());
        let hits = polyline_circle(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 1.0);
        assert_eq!(hits.len(), 1);
    }

    #[test]
    fn offsets_of_a_corner() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        let normals = [[0.0, 1.0], [-1.0, 0.0]];
        let off = offset_polyline(&pts, &normals, 0.1).unwrap();
        assert!(dist(off[1], [0.9, 0.1]) < 1e-12);
        assert!(self_intersection(&off).is_none());
        assert!(self_intersection(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, -1.0]]).is_some());
    }

    #[test]
    fn slicing() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert_eq!(polyline_slice(&pts, 0.5, 1.5), vec![[0.5, 0.0], [1.0, 0.0], [1.5, 0.0]]);
        assert_eq!(polyline_slice(&pts, 1.25, 1.75), vec![[1.25, 0.0], [1.75, 0.0]]);
    }
}
