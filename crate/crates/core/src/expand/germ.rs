//! Cooriented piecewise-linear plane-curve germs and their stratification.

use serde::{Deserialize, Serialize};

use super::geometry::{cross, dot, norm, normalize, perp, scale, segment_intersection, sub, Point};
use crate::error::{Error, Result};

/// Which side of the direction of travel the coorientation points to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub name: String,
    pub points: Vec<Point>,
    pub coorient: Side,
    /// Limiting conormal at the origin when the first segment is only an
    /// approximation of the tangent (curved branches).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conormal: Option<Point>,
}

impl Branch {
    pub fn segment_normal(&self, k: usize) -> Point {
        let u = normalize(sub(self.points[k + 1], self.points[k]));
        match self.coorient {
            Side::Left => perp(u),
            Side::Right => scale(perp(u), -1.0),
        }
    }

    pub fn normals(&self) -> Vec<Point> {
        (0..self.points.len() - 1).map(|k| self.segment_normal(k)).collect()
    }

    /// Unit conormal at the origin.
    pub fn limiting_conormal(&self) -> Point {
        self.conormal.map(normalize).unwrap_or_else(|| self.segment_normal(0))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveGerm2D {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub branches: Vec<Branch>,
}

/// One coray at the origin: a conormal and the branches realizing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginCoray {
    pub conormal: Point,
    pub branches: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    pub corays: Vec<OriginCoray>,
    /// `coray_of[j]`: the origin coray below the arc stratum of branch `j`
    pub coray_of: Vec<usize>,
}

impl Stratification {
    pub fn arc_count(&self) -> usize {
        self.coray_of.len()
    }
}

const CONORMAL_TOL: f64 = 1e-9;

impl CurveGerm2D {
    pub fn from_json(text: &str) -> Result<Self> {
        let g: CurveGerm2D = serde_json::from_str(text).map_err(|e| Error::Parse(format!("germ: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("germ serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |b: &Branch, msg: &str| Err(Error::InvalidGerm(format!("branch '{}': {msg}", b.name)));
        for b in &self.branches {
            if b.points.len() < 2 {
                return bad(b, "needs at least two points");
            }
            if b.points.iter().flatten().any(|x| !x.is_finite()) {
                return bad(b, "non-finite coordinate");
            }
            if norm(b.points[0]) != 0.0 {
                return bad(b, "must start at the origin");
            }
            if norm(*b.points.last().unwrap()) < 1.0 - 1e-9 {
                return bad(b, "must reach the unit circle");
            }
            for w in b.points.windows(2) {
                if norm(sub(w[1], w[0])) == 0.0 {
                    return bad(b, "repeated point");
                }
            }
            // |x| strictly increasing along every segment
            for w in b.points.windows(2).skip(1) {
                if dot(w[0], sub(w[1], w[0])) <= 0.0 {
                    return bad(b, "is not radially monotone");
                }
            }
            if let Some(n) = b.conormal {
                if norm(n) == 0.0 || !n.iter().all(|x| x.is_finite()) {
                    return bad(b, "conormal override must be a nonzero vector");
                }
                if dot(normalize(n), b.segment_normal(0)) <= 0.0 {
                    return bad(b, "conormal override points to the other side");
                }
            }
        }
        for i in 0..self.branches.len() {
            for j in i + 1..self.branches.len() {
                self.check_pair(i, j)?;
            }
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let (a, b) = (&self.branches[i], &self.branches[j]);
        let ua = normalize(a.points[1]);
        let ub = normalize(b.points[1]);
        if cross(ua, ub).abs() < 1e-12 && dot(ua, ub) > 0.0 {
            return Err(Error::InvalidGerm(format!("branches '{}' and '{}' overlap at the origin", a.name, b.name)));
        }
        for (ka, wa) in a.points.windows(2).enumerate() {
            for (kb, wb) in b.points.windows(2).enumerate() {
                let Some((s, t)) = segment_intersection(wa[0], wa[1], wb[0], wb[1]) else { continue };
                if ka == 0 && kb == 0 && s == 0.0 && t == 0.0 {
                    continue;
                }
                let p = [wa[0][0] + s * (wa[1][0] - wa[0][0]), wa[0][1] + s * (wa[1][1] - wa[0][1])];
                return Err(Error::InvalidGerm(format!(
                    "branches '{}' and '{}' cross away from the origin at ({:.6}, {:.6})",
                    a.name, b.name, p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    /// Group branches by limiting conormal; each arc lies over the coray of its conormal.
    pub fn stratify(&self) -> Result<Stratification> {
        self.validate()?;
        let mut corays: Vec<OriginCoray> = Vec::new();
        let mut coray_of = Vec::with_capacity(self.branches.len());
        for (j, b) in self.branches.iter().enumerate() {
            let n = b.limiting_conormal();
            match corays.iter().position(|c| norm(sub(c.conormal, n)) < CONORMAL_TOL) {
                Some(i) => {
                    corays[i].branches.push(j);
                    coray_of.push(i);
                }
                None => {
                    coray_of.push(corays.len());
                    corays.push(OriginCoray { conormal: n, branches: vec![j] });
                }
            }
        }
        Ok(Stratification { corays, coray_of })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(name: &str, dir: Point, side: Side) -> Branch {
        Branch { name: name.into(), points: vec![[0.0, 0.0], dir], coorient: side, conormal: None }
    }

    #[test]
    fn line_and_crossing() {
        let line = CurveGerm2D {
            name: None,
            branches: vec![straight("r", [1.0, 0.0], Side::Left), straight("l", [-1.0, 0.0], Side::Right)],
        };
        let s = line.stratify().unwrap();
        assert_eq!(s.corays.len(), 1);
        assert_eq!(s.arc_count(), 2);
        let mut cross_ = line.clone();
        cross_.branches.push(straight("u", [0.0, 1.0], Side::Right));
        cross_.branches.push(straight("d", [0.0, -1.0], Side::Left));
        let s = cross_.stratify().unwrap();
        assert_eq!(s.corays.len(), 2);
        assert_eq!(s.corays[1].conormal, [1.0, 0.0]);
    }

    #[test]
    fn crossing_interiors_rejected() {
        let g = CurveGerm2D {
            name: None,
            branches: vec![
                straight("a", [1.0, 0.0], Side::Left),
                Branch {
                    name: "b".into(),
                    points: vec![[0.0, 0.0], [0.3, 0.3], [1.0, -0.2]],
                    coorient: Side::Left,
                    conormal: None,
                },
            ],
        };
        assert!(matches!(g.stratify(), Err(Error::InvalidGerm(_))));
        let short = CurveGerm2D { name: None, branches: vec![straight("a", [0.5, 0.0], Side::Left)] };
        assert!(short.validate().unwrap_err().to_string().contains("unit circle"));
    }
}
