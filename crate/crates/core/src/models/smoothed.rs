//! Smoothed arboreal hypersurfaces and the comparison map to the rectilinear model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::profile::SmoothingProfile;
use super::rectilinear::{RectilinearModel, Region};
use crate::error::{Error, Result};
use crate::tree::RootedForest;

/// `h_a(x)`: `x_root` at a root, `f(h_parent, x_a)` below.
pub fn h_value(forest: &RootedForest, profile: &SmoothingProfile, a: usize, x: &[f64]) -> Result<f64> {
    if x.len() != forest.len() {
        return Err(Error::Domain(format!("expected {} coordinates, got {}", forest.len(), x.len())));
    }
    let mut chain = forest.ancestors(a);
    chain.reverse();
    chain.push(a);
    let mut h = x[chain[0]];
    for &v in &chain[1..] {
        h = profile.f(h, x[v]);
    }
    Ok(h)
}

/// All `h` values at once, parents evaluated before children.
pub fn h_all(forest: &RootedForest, profile: &SmoothingProfile, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != forest.len() {
        return Err(Error::Domain(format!("expected {} coordinates, got {}", forest.len(), x.len())));
    }
    let mut h = vec![0.0; x.len()];
    for v in forest.topological_order() {
        h[v] = match forest.parent(v) {
            None => x[v],
            Some(p) => profile.f(h[p], x[v]),
        };
    }
    Ok(h)
}

/// Unit-time flow of `y' = -b(h) c(y)` started at `x`.
pub fn flow(profile: &SmoothingProfile, h: f64, x: f64) -> Option<f64> {
    let speed = profile.b(h);
    if speed == 0.0 {
        return Some(x);
    }
    let d = profile.delta;
    if x.abs() <= d / 4.0 {
        // |speed| <= d/8 keeps the orbit inside |y| <= d/2 where c = 1
        return Some(x - speed);
    }
    let rhs = |y: f64| -speed * profile.c(y);
    let dt = d / 64.0;
    let steps = (1.0 / dt).ceil() as usize;
    let mut y = x;
    let mut t = 0.0;
    for _ in 0..steps {
        let step = dt.min(1.0 - t);
        if step <= 0.0 {
            break;
        }
        let k1 = rhs(y);
        let k2 = rhs(y + 0.5 * step * k1);
        let k3 = rhs(y + 0.5 * step * k2);
        let k4 = rhs(y + step * k3);
        y += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += step;
    }
    y.is_finite().then_some(y)
}

/// Apply the per-vertex maps leaves first; each moves only its own coordinate,
/// driven by the parent's `h` at the current point. Roots are fixed.
pub fn comparison_map(forest: &RootedForest, profile: &SmoothingProfile, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != forest.len() {
        return Err(Error::Domain(format!("expected {} coordinates, got {}", forest.len(), x.len())));
    }
    let mut y = x.to_vec();
    for &v in forest.topological_order().iter().rev() {
        let Some(p) = forest.parent(v) else { continue };
        let hp = h_value(forest, profile, p, &y)?;
        y[v] = flow(profile, hp, y[v]).ok_or_else(|| Error::Numerical {
            vertex: forest.name(v).to_string(),
            message: "flow integration produced a non-finite value".into(),
        })?;
    }
    Ok(y)
}

/// A point of `{h_a = 0}`. Ancestors of `a` get `h >= 0` (occasionally exactly 0),
/// the remaining coordinates are free. With `open`, the parent of `a` gets `h > 0`.
pub fn sample_on_hypersurface<R: Rng>(
    forest: &RootedForest,
    profile: &SmoothingProfile,
    a: usize,
    open: bool,
    rng: &mut R,
) -> Vec<f64> {
    loop {
        let x = sample_once(forest, profile, a, rng);
        let parent_zero = forest.parent(a).is_some_and(|p| h_value(forest, profile, p, &x).ok() == Some(0.0));
        if !(open && parent_zero) {
            return x;
        }
    }
}

fn sample_once<R: Rng>(forest: &RootedForest, profile: &SmoothingProfile, a: usize, rng: &mut R) -> Vec<f64> {
    let d = profile.delta;
    let mut x: Vec<f64> = (0..forest.len()).map(|_| rng.gen_range(-3.0 * d..3.0 * d)).collect();
    let mut chain = forest.ancestors(a);
    chain.reverse();
    let above = |rng: &mut R| -> f64 {
        match rng.gen_range(0..10) {
            0 => 0.0,
            1..=4 => rng.gen_range(0.0..d / 4.0),
            _ => rng.gen_range(0.0..3.0 * d),
        }
    };
    let mut h = None;
    for &v in &chain {
        x[v] = match h {
            None => above(rng),
            Some(hp) => profile.b(hp) + above(rng),
        };
        h = Some(match h {
            None => x[v],
            Some(hp) => profile.f(hp, x[v]),
        });
    }
    x[a] = match h {
        None => 0.0,
        Some(hp) if hp == 0.0 => rng.gen_range(0.0..3.0 * d),
        Some(hp) => profile.b(hp),
    };
    x
}

/// Images closer than `sep / COLLISION_RATIO` count as coincident. The map may
/// contract distances by a bounded factor, so images merely below `sep` are not collisions.
pub const COLLISION_RATIO: f64 = 1000.0;

/// Pairs of inputs at least `sep` apart whose images coincide (see [`COLLISION_RATIO`]).
pub fn injectivity_violations(inputs: &[Vec<f64>], images: &[Vec<f64>], sep: f64) -> usize {
    let close = sep / COLLISION_RATIO;
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.sort_by(|&i, &j| images[i][0].total_cmp(&images[j][0]));
    let mut bad = 0;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if images[j][0] - images[i][0] >= close {
                break;
            }
            if dist(&images[i], &images[j]) < close && dist(&inputs[i], &inputs[j]) >= sep {
                bad += 1;
            }
        }
    }
    bad
}

/// Samples where some `h_a >= 0` while an ancestor has `h < 0`.
pub fn sign_violations(forest: &RootedForest, h: &[f64]) -> bool {
    (0..forest.len()).any(|a| h[a] >= 0.0 && forest.ancestors(a).iter().any(|&b| h[b] < 0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub vertex: String,
    pub samples: usize,
    /// largest distance from an image to the target region (sup-norm slack)
    pub max_membership_violation: f64,
    pub membership_failures: usize,
    pub injectivity_violations: usize,
    pub sign_violations: usize,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.membership_failures == 0 && self.injectivity_violations == 0 && self.sign_violations == 0
    }
}

/// Slack needed for `y` to lie in `H_a`: coordinates `<= a` nonnegative, one of them zero.
fn h_region_slack(model: &RectilinearModel, a: usize, y: &[f64]) -> f64 {
    let c = model.chain(a);
    let neg = c.iter().map(|&b| (-y[b]).max(0.0)).fold(0.0, f64::max);
    let zero = c.iter().map(|&b| y[b].abs()).fold(f64::INFINITY, f64::min);
    neg.max(zero)
}

/// Slack for `P_a`: `x_a = 0` and strict ancestors nonnegative.
fn p_region_slack(model: &RectilinearModel, a: usize, y: &[f64]) -> f64 {
    let c = model.chain(a);
    let neg = c[..c.len() - 1].iter().map(|&b| (-y[b]).max(0.0)).fold(0.0, f64::max);
    neg.max(y[a].abs())
}

/// Sample `{h_a = 0}` for one vertex and map it. Odd samples have `h > 0` at the
/// parent and must land in `P_a`; even samples only need to land in `H_a`, since
/// `{h_a = 0}` contains the whole half-line `x_a >= 0` over `{h_parent = 0}`.
pub fn compare_vertex<R: Rng>(
    model: &RectilinearModel,
    profile: &SmoothingProfile,
    a: usize,
    samples: usize,
    tol: f64,
    sep: f64,
    rng: &mut R,
) -> Result<ComparisonReport> {
    let forest = model.forest();
    let mut inputs = Vec::with_capacity(samples);
    let mut images = Vec::with_capacity(samples);
    let mut report = ComparisonReport {
        vertex: forest.name(a).to_string(),
        samples,
        max_membership_violation: 0.0,
        membership_failures: 0,
        injectivity_violations: 0,
        sign_violations: 0,
    };
    for _ in 0..samples {
        let open = inputs.len() % 2 == 1;
        let x = sample_on_hypersurface(forest, profile, a, open, rng);
        let h = h_all(forest, profile, &x)?;
        if sign_violations(forest, &h) {
            report.sign_violations += 1;
        }
        let y = comparison_map(forest, profile, &x)?;
        let slack = if open { p_region_slack(model, a, &y) } else { h_region_slack(model, a, &y) };
        report.max_membership_violation = report.max_membership_violation.max(slack);
        if slack > tol {
            report.membership_failures += 1;
        }
        inputs.push(x);
        images.push(y);
    }
    report.injectivity_violations = injectivity_violations(&inputs, &images, sep);
    Ok(report)
}

/// Leafy variant: samples of `{h_a = 0, h_parent > 0}` for unmarked `a` must land in `H_{F*}`.
pub fn compare_leafy<R: Rng>(
    model: &RectilinearModel,
    profile: &SmoothingProfile,
    samples: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ComparisonReport> {
    let forest = model.forest();
    let allowed: Vec<usize> = (0..forest.len()).filter(|v| !model.marked().contains(v)).collect();
    let mut report = ComparisonReport {
        vertex: "H_F*".into(),
        samples: samples * allowed.len(),
        max_membership_violation: 0.0,
        membership_failures: 0,
        injectivity_violations: 0,
        sign_violations: 0,
    };
    for &a in &allowed {
        for _ in 0..samples {
            let x = sample_on_hypersurface(forest, profile, a, true, rng);
            let h = h_all(forest, profile, &x)?;
            if sign_violations(forest, &h) {
                report.sign_violations += 1;
            }
            let y = comparison_map(forest, profile, &x)?;
            let slack = allowed.iter().map(|&b| p_region_slack(model, b, &y)).fold(f64::INFINITY, f64::min);
            report.max_membership_violation = report.max_membership_violation.max(slack);
            if slack > tol || !model.contains_tol(Region::HFStar, &y, tol)? {
                report.membership_failures += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{LeafyRootedForest, RootedTree};
    use rand::SeedableRng;

    fn a2() -> RootedForest {
        RootedTree::parse("(r (c))").unwrap().as_forest().clone()
    }

    #[test]
    fn root_and_flat_regions() {
        let p = SmoothingProfile::standard(0.1);
        let f = a2();
        assert_eq!(h_value(&f, &p, 0, &[0.37, -2.0]).unwrap(), 0.37);
        assert_eq!(h_value(&f, &p, 1, &[0.25, 0.05]).unwrap(), 0.05);
        assert_eq!(h_value(&f, &p, 1, &[0.05, 0.3]).unwrap(), 0.05);
        assert!(comparison_map(&f, &p, &[0.5]).unwrap_err().to_string().contains("expected 2"));
        let single = RootedTree::parse("(r)").unwrap().as_forest().clone();
        assert_eq!(comparison_map(&single, &p, &[0.123]).unwrap(), vec![0.123]);
        // parent outside the support of b: identity
        assert_eq!(comparison_map(&f, &p, &[-0.2, 0.7]).unwrap(), vec![-0.2, 0.7]);
        assert_eq!(comparison_map(&f, &p, &[0.03, 0.01]).unwrap(), vec![0.03, 0.01 - p.b(0.03)]);
    }

    #[test]
    fn factorization_matches_closed_form() {
        let p = SmoothingProfile::standard(0.1);
        let t = RootedTree::parse("(r (a (b)) (c))").unwrap();
        let f = t.as_forest();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.1..0.3)).collect();
            let h = h_all(f, &p, &x).unwrap();
            let direct: Vec<f64> =
                (0..4).map(|v| f.parent(v).map_or(x[v], |q| flow(&p, h[q], x[v]).unwrap())).collect();
            assert_eq!(comparison_map(f, &p, &x).unwrap(), direct);
        }
    }

    #[test]
    fn locality() {
        let p = SmoothingProfile::standard(0.1);
        let t = RootedTree::parse("(r (a (b)) (c))").unwrap();
        let f = t.as_forest();
        let x = vec![0.01, 0.002, 0.3, -0.02];
        for a in 0..4 {
            let h = h_value(f, &p, a, &x).unwrap();
            for g in (0..4).filter(|&g| !f.leq(g, a)) {
                let mut y = x.clone();
                y[g] += 0.77;
                assert_eq!(h_value(f, &p, a, &y).unwrap(), h);
            }
        }
    }

    #[test]
    fn comparison_on_small_trees() {
        let p = SmoothingProfile::standard(0.1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let model = RectilinearModel::new(RootedTree::path(3).as_forest().clone());
        for a in 0..3 {
            let r = compare_vertex(&model, &p, a, 2000, 1e-6, 1e-8, &mut rng).unwrap();
            assert!(r.passed(), "{r:?}");
        }
        let leafy = LeafyRootedForest::single(RootedTree::parse("(r (c))").unwrap(), &["c"]).unwrap();
        let model = RectilinearModel::leafy(&leafy).unwrap();
        let r = compare_leafy(&model, &p, 1000, 1e-6, &mut rng).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn collisions_versus_contraction() {
        let inputs = vec![vec![0.0, 0.0], vec![0.0, 1e-6], vec![1.0, 0.0], vec![1.0, 2e-8]];
        // a genuine collision, and a pair contracted from 2e-8 to 1e-8
        let images = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1e-8]];
        assert_eq!(injectivity_violations(&inputs, &images, 1e-8), 1);
    }
}
