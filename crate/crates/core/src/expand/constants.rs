//! Expansion constants, the ordering discipline they obey, and seeded draws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::germ::Stratification;
use super::geometry::Point;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumConstants {
    pub radius: f64,
    pub displacement: f64,
    pub shift: f64,
}

impl StratumConstants {
    /// `s - r d`: the kept region of the cylinder is `lambda >= threshold`.
    pub fn threshold(&self) -> f64 {
        self.shift - self.radius * self.displacement
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub epsilon: f64,
    /// one per origin coray, in stratification order
    pub corays: Vec<StratumConstants>,
    /// one per branch
    pub arcs: Vec<StratumConstants>,
}

impl ExpansionConstants {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("constants: {e}")))
    }
}

/// One failed condition, with a location when it is geometric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Point>,
}

impl Violation {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Violation { code: code.into(), message: message.into(), point: None }
    }

    pub fn at(code: &str, message: impl Into<String>, point: Point) -> Self {
        Violation { code: code.into(), message: message.into(), point: Some(point) }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub violations: Vec<Violation>,
}

impl ConstantsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn first_error(&self) -> Option<Error> {
        self.violations.first().map(|v| match v.point {
            Some(p) => Error::Constants(format!("{}: {} at ({:.6}, {:.6})", v.code, v.message, p[0], p[1])),
            None => Error::Constants(format!("{}: {}", v.code, v.message)),
        })
    }
}

/// Sampling ranges for [`draw_constants`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantsRanges {
    pub origin_radius: [f64; 2],
    /// minimum ratio between distinct origin radii
    pub origin_separation: f64,
    pub arc_radius: [f64; 2],
    pub displacement: f64,
    /// shifts are drawn from `(-f r d, f r d)`
    pub shift_fraction: f64,
    pub epsilon: f64,
    pub max_attempts: usize,
}

impl Default for ConstantsRanges {
    fn default() -> Self {
        ConstantsRanges {
            origin_radius: [0.2, 0.4],
            origin_separation: 1.1,
            arc_radius: [0.01, 0.03],
            displacement: 0.5,
            shift_fraction: 0.25,
            epsilon: 0.5,
            max_attempts: 1000,
        }
    }
}

impl ConstantsRanges {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.origin_radius;
        let [c, d] = self.arc_radius;
        let ok = 0.0 < a
            && a <= b
            && b < self.epsilon
            && self.epsilon <= 1.0
            && 0.0 < c
            && c <= d
            && d < ARC_TO_ORIGIN * a
            && self.origin_separation > 1.0
            && 0.0 < self.displacement
            && self.displacement < 1.0
            && (0.0..0.5).contains(&self.shift_fraction)
            && self.max_attempts > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(
                "constants ranges must satisfy 0 < arc radii < 0.25 x origin radii < epsilon <= 1, displacement in (0,1), shift fraction in [0, 0.5)".into(),
            ))
        }
    }
}

/// Arc radii must stay below this fraction of every origin radius.
pub const ARC_TO_ORIGIN: f64 = 0.25;

/// Conditions that do not need any geometry: distinct radii, the ordering of
/// radii, displacements and shifts, and the thresholds.
pub fn check_ordering(strat: &Stratification, c: &ExpansionConstants) -> ConstantsReport {
    let mut out = Vec::new();
    if c.corays.len() != strat.corays.len() || c.arcs.len() != strat.arc_count() {
        out.push(Violation::new(
            "shape",
            format!(
                "expected {} coray and {} arc constants, got {} and {}",
                strat.corays.len(),
                strat.arc_count(),
                c.corays.len(),
                c.arcs.len()
            ),
        ));
        return ConstantsReport { violations: out };
    }
    if !(c.epsilon > 0.0 && c.epsilon <= 1.0) {
        out.push(Violation::new("ordering", format!("epsilon {} must lie in (0, 1]", c.epsilon)));
    }
    for (i, a) in c.corays.iter().enumerate() {
        for (k, b) in c.corays.iter().enumerate().skip(i + 1) {
            if (a.radius - b.radius).abs() <= 1e-12 * a.radius.abs().max(1.0) {
                out.push(Violation::new("distinct_radii", format!("corays {i} and {k} share radius {}", a.radius)));
            }
        }
    }
    let min_origin = c.corays.iter().map(|k| k.radius).fold(f64::INFINITY, f64::min);
    let all = c.corays.iter().map(|k| ("coray", k)).chain(c.arcs.iter().map(|k| ("arc", k)));
    for (idx, (kind, k)) in all.enumerate() {
        let label = format!("{kind} {}", if kind == "coray" { idx } else { idx - c.corays.len() });
        if !(k.radius > 0.0 && k.radius < c.epsilon) {
            out.push(Violation::new("ordering", format!("{label}: radius {} must lie in (0, epsilon)", k.radius)));
        }
        if !(k.displacement > 0.0 && k.displacement < 1.0) {
            out.push(Violation::new("ordering", format!("{label}: displacement {} must lie in (0, 1)", k.displacement)));
        }
        if k.shift.abs() >= k.radius * k.displacement / 2.0 {
            out.push(Violation::new("ordering", format!("{label}: shift {} must be below r d / 2", k.shift)));
        }
        if (k.shift - k.radius * k.displacement).abs() <= 1e-12 {
            out.push(Violation::new("degenerate", format!("{label}: threshold is exactly zero (s = r d)")));
        }
        let t = k.threshold();
        if kind == "coray" {
            if !(t > -k.radius && t < k.radius) {
                out.push(Violation::new("threshold", format!("{label}: threshold {t} outside (-r, r)")));
            }
        } else if !(-k.radius < t && t < k.radius) {
            // the positive offset (lambda = r) is kept and the negative one (lambda = -r) dropped
            out.push(Violation::new("threshold", format!("{label}: threshold {t} does not separate the two offsets")));
        }
        if kind == "arc" && k.radius >= ARC_TO_ORIGIN * min_origin {
            out.push(Violation::new(
                "ordering",
                format!("{label}: radius {} is not below {ARC_TO_ORIGIN} x the smallest origin radius", k.radius),
            ));
        }
    }
    ConstantsReport { violations: out }
}

/// One unvalidated draw from `ranges`.
pub fn draw_constants<R: Rng>(strat: &Stratification, ranges: &ConstantsRanges, rng: &mut R) -> ExpansionConstants {
    let d = ranges.displacement;
    let stratum = |radius: f64, rng: &mut R| {
        let w = ranges.shift_fraction * radius * d;
        let shift = if w > 0.0 { rng.gen_range(-w..w) } else { 0.0 };
        StratumConstants { radius, displacement: d, shift }
    };
    let [lo, hi] = ranges.origin_radius;
    let corays = (0..strat.corays.len())
        .map(|_| {
            let r = if lo < hi { rng.gen_range(lo.ln()..hi.ln()).exp() } else { lo };
            stratum(r, rng)
        })
        .collect();
    let [alo, ahi] = ranges.arc_radius;
    let arcs = (0..strat.arc_count())
        .map(|_| {
            let r = if alo < ahi { rng.gen_range(alo..ahi) } else { alo };
            stratum(r, rng)
        })
        .collect();
    ExpansionConstants { epsilon: ranges.epsilon, corays, arcs }
}

/// Distinct origin radii must differ by the configured ratio.
pub fn radii_separated(c: &ExpansionConstants, ratio: f64) -> bool {
    let mut r: Vec<f64> = c.corays.iter().map(|k| k.radius).collect();
    r.sort_by(f64::total_cmp);
    r.windows(2).all(|w| w[1] >= ratio * w[0])
}
