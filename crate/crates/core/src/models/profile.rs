//! The smoothing profile (b, f, c) and its numerical verification.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The three functions of the smoothed model at scale `delta`.
#[derive(Clone)]
pub struct SmoothingProfile {
    pub delta: f64,
    pub b: Fn1,
    pub f: Fn2,
    pub c: Fn1,
}

impl fmt::Debug for SmoothingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothingProfile").field("delta", &self.delta).finish_non_exhaustive()
    }
}

impl SmoothingProfile {
    /// Shipped profile with kappa normalized so that max |b| = delta / 8.
    pub fn standard(delta: f64) -> Self {
        Self::from_params(StandardProfile::new(delta))
    }

    pub fn with_kappa(delta: f64, kappa: f64) -> Self {
        Self::from_params(StandardProfile { kappa, ..StandardProfile::new(delta) })
    }

    pub fn from_params(p: StandardProfile) -> Self {
        let p = Arc::new(p);
        let (pb, pf, pc) = (p.clone(), p.clone(), p.clone());
        SmoothingProfile {
            delta: p.delta,
            b: Arc::new(move |t| pb.b(t)),
            f: Arc::new(move |x1, x2| pf.f(x1, x2)),
            c: Arc::new(move |t| pc.c(t)),
        }
    }

    pub fn b(&self, t: f64) -> f64 {
        (self.b)(t)
    }

    pub fn f(&self, x1: f64, x2: f64) -> f64 {
        (self.f)(x1, x2)
    }

    pub fn c(&self, t: f64) -> f64 {
        (self.c)(t)
    }
}

/// C1 step: 0 for u <= 0, 1 for u >= 1.
fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * (3.0 - 2.0 * u)
    }
}

/// Parameters of the shipped profile.
///
/// `f` blends `p = x1 - binv(x2)` (zero set: the half-line and the graph of `b`
/// over `(0, t1]`) with `q = x2 - b(x1)` (zero set: the graph of `b`). The blend
/// weight is 1 for `x1 <= t0`, 0 for `x1 >= t1` unless `x2 - x1` is large, where
/// it returns to 1 so that `f = x1` high up. `p` and `q` share signs wherever
/// both are used, so the zero set is exactly the required one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardProfile {
    pub delta: f64,
    pub kappa: f64,
    pub t0: f64,
    pub t1: f64,
    pub c0: f64,
    pub eta: f64,
}

impl StandardProfile {
    pub fn new(delta: f64) -> Self {
        let kappa = 25.0 / (8.0 * delta) * (20.0 / delta).sqrt();
        StandardProfile { delta, kappa, t0: delta / 80.0, t1: delta / 40.0, c0: delta / 2.0, eta: delta / 4.0 }
    }

    pub fn b(&self, t: f64) -> f64 {
        let q = self.delta / 4.0;
        if t > 0.0 && t < q {
            -self.kappa * t.sqrt() * (q - t) * (q - t)
        } else {
            0.0
        }
    }

    pub fn b_prime(&self, t: f64) -> f64 {
        let q = self.delta / 4.0;
        let s = t.sqrt();
        -self.kappa * ((q - t) * (q - t) / (2.0 * s) - 2.0 * s * (q - t))
    }

    /// Inverse of `b` on `[0, t1]`, zero for `x2 >= 0`, continued linearly below `b(t1)`.
    pub fn b_inverse(&self, x2: f64) -> f64 {
        if x2 >= 0.0 {
            return 0.0;
        }
        let y1 = self.b(self.t1);
        if x2 < y1 {
            return self.t1 + (x2 - y1) / self.b_prime(self.t1);
        }
        // b(u^2) is strictly decreasing in u on [0, sqrt(t1)]
        let q = self.delta / 4.0;
        let g = |u: f64| -self.kappa * u * (q - u * u) * (q - u * u);
        let (mut lo, mut hi) = (0.0f64, self.t1.sqrt());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > x2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        u * u
    }

    pub fn f(&self, x1: f64, x2: f64) -> f64 {
        let p = || x1 - self.b_inverse(x2);
        let ws = 1.0 - smoothstep((x1 - self.t0) / (self.t1 - self.t0));
        if ws >= 1.0 {
            return p();
        }
        let om = smoothstep((x2 - x1 - self.c0 + self.eta) / (2.0 * self.eta));
        let w = 1.0 - (1.0 - ws) * (1.0 - om);
        if w >= 1.0 {
            return p();
        }
        let q = x2 - self.b(x1);
        if w <= 0.0 {
            q
        } else {
            w * p() + (1.0 - w) * q
        }
    }

    /// C-infinity step: 1 on |t| <= delta/2, 0 on |t| >= delta.
    pub fn c(&self, t: f64) -> f64 {
        let u = (self.delta - t.abs()) / (self.delta / 2.0);
        if u >= 1.0 {
            1.0
        } else if u <= 0.0 {
            0.0
        } else {
            let e = |v: f64| (-1.0 / v).exp();
            e(u) / (e(u) + e(1.0 - u))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub name: String,
    pub passed: bool,
    /// worst observed value of the checked quantity
    pub worst: f64,
    pub violations: usize,
    pub witness: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub delta: f64,
    pub grid: usize,
    pub tolerance: f64,
    pub checks: Vec<ProfileCheck>,
}

impl ProfileReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ProfileCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    worst: f64,
    violations: usize,
    witness: Option<(f64, f64)>,
}

impl Tally {
    fn new(name: &'static str, worst: f64) -> Self {
        Tally { name, worst, violations: 0, witness: None }
    }

    fn fail(&mut self, at: (f64, f64)) {
        self.violations += 1;
        if self.witness.is_none() {
            self.witness = Some(at);
        }
    }

    fn finish(self) -> ProfileCheck {
        ProfileCheck {
            name: self.name.into(),
            passed: self.violations == 0,
            worst: self.worst,
            violations: self.violations,
            witness: self.witness,
        }
    }
}

/// Expected sign of f: zero on {x1 = 0, x2 >= 0} and on the graph of b over x1 > 0,
/// positive above/right of that set, negative elsewhere.
fn expected_sign(p: &SmoothingProfile, x1: f64, x2: f64) -> i8 {
    if x1 < 0.0 {
        -1
    } else if x1 == 0.0 {
        if x2 >= 0.0 {
            0
        } else {
            -1
        }
    } else {
        let d = x2 - p.b(x1);
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// Check the five properties of f, and the stated properties of b and c, on a
/// `grid x grid` lattice over `[-3 delta, 3 delta]^2`.
pub fn verify_profile(p: &SmoothingProfile, grid: usize, tol: f64) -> ProfileReport {
    let d = p.delta;
    let n = grid.max(2);
    let coord = |i: usize| -3.0 * d + 6.0 * d * i as f64 / (n - 1) as f64;
    let fd = 1e-7 * d;

    let mut grad = Tally::new("submersion", f64::INFINITY);
    let mut zero = Tally::new("zero_locus", 0.0);
    let mut flat2 = Tally::new("flat_x2", 0.0);
    let mut flat1 = Tally::new("flat_x1", 0.0);
    let mut implication = Tally::new("implication", 0.0);

    for i in 0..n {
        let x1 = coord(i);
        for j in 0..n {
            let x2 = coord(j);
            let v = p.f(x1, x2);
            let gx = (p.f(x1 + fd, x2) - p.f(x1 - fd, x2)) / (2.0 * fd);
            let gy = (p.f(x1, x2 + fd) - p.f(x1, x2 - fd)) / (2.0 * fd);
            let g = gx.hypot(gy);
            if g < grad.worst {
                grad.worst = g;
            }
            if !(g >= tol) {
                grad.fail((x1, x2));
            }
            let s = expected_sign(p, x1, x2);
            if s != 0 && (v.signum() as i8 != s || v == 0.0) {
                zero.fail((x1, x2));
            }
            if x1 > 2.0 * d && x2.abs() < d {
                let e = (v - x2).abs();
                flat2.worst = flat2.worst.max(e);
                if e > tol {
                    flat2.fail((x1, x2));
                }
            }
            if x1.abs() < d && x2 > 2.0 * d {
                let e = (v - x1).abs();
                flat1.worst = flat1.worst.max(e);
                if e > tol {
                    flat1.fail((x1, x2));
                }
            }
            if v < d - tol && x1 >= d && x2 >= d {
                implication.worst = implication.worst.max(d - v);
                implication.fail((x1, x2));
            }
        }
    }
    // points on the target zero set, including a geometric approach to the corner
    let mut on_set: Vec<(f64, f64)> = (0..n).map(|j| (0.0, 3.0 * d * j as f64 / (n - 1) as f64)).collect();
    on_set.extend((1..n).map(|i| {
        let x1 = 3.0 * d * i as f64 / (n - 1) as f64;
        (x1, p.b(x1))
    }));
    on_set.extend((0..=60).map(|k| {
        let x1 = d / 4.0 * 10f64.powf(-(k as f64) / 5.0);
        (x1, p.b(x1))
    }));
    for (x1, x2) in on_set {
        let e = p.f(x1, x2).abs();
        zero.worst = zero.worst.max(e);
        if e > tol {
            zero.fail((x1, x2));
        }
    }

    let mut checks = vec![grad.finish(), zero.finish(), flat2.finish(), flat1.finish(), implication.finish()];
    checks.extend(verify_b(p, n, tol));
    checks.push(verify_c(p, n));
    ProfileReport { delta: d, grid: n, tolerance: tol, checks }
}

fn verify_b(p: &SmoothingProfile, n: usize, tol: f64) -> Vec<ProfileCheck> {
    let d = p.delta;
    let mut support = Tally::new("b_support", 0.0);
    let mut bound = Tally::new("b_bound", 0.0);
    let samples = 16 * n;
    for k in 0..=samples {
        let t = -d + 2.0 * d * k as f64 / samples as f64;
        let v = p.b(t);
        bound.worst = bound.worst.max(v.abs());
        if !(v.abs() < d / 4.0) {
            bound.fail((t, v));
        }
        if (t <= 0.0 || t >= d / 4.0) && v.abs() > tol {
            support.worst = support.worst.max(v.abs());
            support.fail((t, v));
        }
    }
    let star = p.b(d / 20.0).abs();
    bound.worst = bound.worst.max(star);
    if !(star < d / 4.0) {
        bound.fail((d / 20.0, star));
    }
    // one-sided slope at 0+ must beat -h^(-1/4) over the decade [1e-7, 1e-6]
    let mut diverge = Tally::new("b_divergence", f64::NEG_INFINITY);
    for k in 0..=10 {
        let h = 1e-6 * 10f64.powf(-(k as f64) / 10.0);
        let slope = (p.b(h) - p.b(0.0)) / h;
        diverge.worst = diverge.worst.max(slope * h.powf(0.25));
        if !(slope < -h.powf(-0.25)) {
            diverge.fail((h, slope));
        }
    }
    vec![support.finish(), bound.finish(), diverge.finish()]
}

fn verify_c(p: &SmoothingProfile, n: usize) -> ProfileCheck {
    let d = p.delta;
    let mut bump = Tally::new("c_bump", 0.0);
    let samples = 16 * n;
    for k in 0..=samples {
        let t = -2.0 * d + 4.0 * d * k as f64 / samples as f64;
        let v = p.c(t);
        let bad = !(0.0..=1.0).contains(&v)
            || (t.abs() >= d && v != 0.0)
            || (t.abs() <= d / 2.0 && v != 1.0);
        if bad {
            bump.worst = bump.worst.max(v);
            bump.fail((t, v));
        }
    }
    bump.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_shape() {
        let d = 0.1;
        let p = StandardProfile::new(d);
        assert!((p.b(d / 20.0).abs() - d / 8.0).abs() < 1e-15);
        assert!(p.b(d / 20.0 * 1.01) > p.b(d / 20.0));
        assert!(p.b(d / 20.0 * 0.99) > p.b(d / 20.0));
        for t in [1e-9, 1e-5, p.t1 * 0.5, p.t1] {
            assert!((p.b_inverse(p.b(t)) - t).abs() < 1e-12 * (1.0 + t / 1e-9), "{t}");
        }
    }

    #[test]
    fn standard_profile_passes_small_grid() {
        let r = verify_profile(&SmoothingProfile::standard(0.1), 128, 1e-6);
        assert!(r.passed(), "{r:#?}");
    }

    #[test]
    fn broken_profiles_fail() {
        let good = SmoothingProfile::standard(0.1);
        let flat_f = SmoothingProfile { f: Arc::new(|_, x2| x2), ..good.clone() };
        let r = verify_profile(&flat_f, 64, 1e-6);
        assert!(!r.check("zero_locus").unwrap().passed);
        let flat_b = SmoothingProfile { b: Arc::new(|_| 0.0), ..good };
        let r = verify_profile(&flat_b, 64, 1e-6);
        assert!(!r.check("b_divergence").unwrap().passed);
    }
}
