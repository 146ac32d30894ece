//! Rectilinear arboreal hypersurfaces: quadrants, their boundaries, and unions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{LeafyRootedForest, RootedForest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// x_b >= 0 for all b <= a
    Q(usize),
    /// boundary of Q(a)
    H(usize),
    /// x_a = 0, x_b >= 0 for b < a
    P(usize),
    /// x_a = 0, x_b > 0 for b < a
    POpen(usize),
    /// union of all H(a)
    HF,
    /// union of P(a) over vertices not marked
    HFStar,
}

/// A forest of coordinates together with the marked vertices excluded from `HFStar`.
#[derive(Clone, Debug)]
pub struct RectilinearModel {
    forest: RootedForest,
    marked: Vec<usize>,
    /// `chain[a]`: vertices `<= a`, root first, `a` last
    chain: Vec<Vec<usize>>,
}

impl RectilinearModel {
    pub fn new(forest: RootedForest) -> Self {
        Self::with_marked(forest, Vec::new())
    }

    /// Model on F+ with the marked vertices of `f` excluded from `HFStar`.
    pub fn leafy(f: &LeafyRootedForest) -> Result<Self> {
        let plus = f.leafy_plus()?;
        Ok(Self::with_marked(plus.forest, plus.ell))
    }

    fn with_marked(forest: RootedForest, marked: Vec<usize>) -> Self {
        let chain = (0..forest.len())
            .map(|a| {
                let mut c = forest.ancestors(a);
                c.reverse();
                c.push(a);
                c
            })
            .collect();
        RectilinearModel { forest, marked, chain }
    }

    pub fn forest(&self) -> &RootedForest {
        &self.forest
    }

    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    pub fn dim(&self) -> usize {
        self.forest.len()
    }

    /// Vertices `<= a`, root first.
    pub fn chain(&self, a: usize) -> &[usize] {
        &self.chain[a]
    }

    fn check(&self, x: &[f64], region: Region) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!("expected {} coordinates, got {}", self.dim(), x.len())));
        }
        match region {
            Region::Q(a) | Region::H(a) | Region::P(a) | Region::POpen(a) if a >= self.dim() => {
                Err(Error::Domain(format!("vertex index {a} out of range")))
            }
            _ => Ok(()),
        }
    }

    /// Exact sign-based membership.
    pub fn contains(&self, region: Region, x: &[f64]) -> Result<bool> {
        self.contains_tol(region, x, 0.0)
    }

    /// Membership with `= 0` read as `|.| <= tol` and `>= 0` as `>= -tol`.
    pub fn contains_tol(&self, region: Region, x: &[f64], tol: f64) -> Result<bool> {
        self.check(x, region)?;
        Ok(self.eval(region, x, tol))
    }

    fn eval(&self, region: Region, x: &[f64], tol: f64) -> bool {
        let nonneg = |v: usize| x[v] >= -tol;
        let zero = |v: usize| x[v].abs() <= tol;
        match region {
            Region::Q(a) => self.chain[a].iter().all(|&b| nonneg(b)),
            Region::H(a) => {
                self.chain[a].iter().all(|&b| nonneg(b)) && self.chain[a].iter().any(|&b| zero(b))
            }
            Region::P(a) => {
                let c = &self.chain[a];
                zero(a) && c[..c.len() - 1].iter().all(|&b| nonneg(b))
            }
            Region::POpen(a) => {
                let c = &self.chain[a];
                zero(a) && c[..c.len() - 1].iter().all(|&b| x[b] > tol)
            }
            Region::HF => (0..self.dim()).any(|a| self.eval(Region::H(a), x, tol)),
            Region::HFStar => {
                (0..self.dim()).filter(|a| !self.marked.contains(a)).any(|a| self.eval(Region::P(a), x, tol))
            }
        }
    }

    /// The three presentations of H_F at a point: union of H, of P, of open P.
    pub fn presentations(&self, x: &[f64]) -> [bool; 3] {
        let n = self.dim();
        [
            (0..n).any(|a| self.eval(Region::H(a), x, 0.0)),
            (0..n).any(|a| self.eval(Region::P(a), x, 0.0)),
            (0..n).any(|a| self.eval(Region::POpen(a), x, 0.0)),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PresentationReport {
    pub random_samples: usize,
    pub grid_points: usize,
    pub disagreements: usize,
    /// first disagreeing point, if any
    pub witness: Option<Vec<f64>>,
}

impl PresentationReport {
    pub fn passed(&self) -> bool {
        self.disagreements == 0
    }
}

/// Compare the three union presentations on random points (coordinates are zero
/// with probability 0.3 so that boundaries are hit) and on the full {-1,0,1} grid.
pub fn check_presentations<R: Rng>(model: &RectilinearModel, samples: usize, rng: &mut R) -> Result<PresentationReport> {
    let n = model.dim();
    if n > 12 {
        return Err(Error::TooLarge(format!("sign grid over {n} coordinates")));
    }
    let mut report = PresentationReport { random_samples: samples, grid_points: 0, disagreements: 0, witness: None };
    let record = |x: Vec<f64>, report: &mut PresentationReport| {
        let [a, b, c] = model.presentations(&x);
        if a != b || b != c {
            report.disagreements += 1;
            if report.witness.is_none() {
                report.witness = Some(x);
            }
        }
    };
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
        record(x, &mut report);
    }
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let d = c % 3;
                c /= 3;
                d as f64 - 1.0
            })
            .collect();
        record(x, &mut report);
    }
    report.grid_points = total;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::RootedTree;
    use rand::SeedableRng;

    #[test]
    fn a2_examples() {
        let t = RootedTree::parse("(r (c))").unwrap();
        let m = RectilinearModel::new(t.as_forest().clone());
        assert!(m.contains(Region::HF, &[0.0, 5.0]).unwrap());
        assert!(!m.contains(Region::HF, &[-1.0, 0.0]).unwrap());
        assert!(m.contains(Region::H(0), &[0.0, 5.0]).unwrap());
        assert!(m.contains(Region::Q(1), &[1.0, 0.0]).unwrap());
        assert!(matches!(m.contains(Region::HF, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn leafy_singleton_half_line() {
        let f = LeafyRootedForest::single(RootedTree::parse("(a)").unwrap(), &["a"]).unwrap();
        let m = RectilinearModel::leafy(&f).unwrap();
        // coordinates (x_a, x_a+)
        assert!(m.contains(Region::HFStar, &[1.0, 0.0]).unwrap());
        assert!(!m.contains(Region::HFStar, &[-1.0, 0.0]).unwrap());
        assert!(!m.contains(Region::HFStar, &[0.0, 1.0]).unwrap());
    }

    #[test]
    fn singleton_presentations() {
        let m = RectilinearModel::new(RootedTree::parse("(a)").unwrap().as_forest().clone());
        for x in [-1.0, 0.0, 2.0] {
            let p = m.presentations(&[x]);
            assert_eq!(p, [x == 0.0; 3]);
        }
    }

    #[test]
    fn presentations_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a2 = RectilinearModel::new(RootedTree::parse("(r (c))").unwrap().as_forest().clone());
        assert!(check_presentations(&a2, 10_000, &mut rng).unwrap().passed());
        let a3 = RectilinearModel::new(RootedTree::path(3).as_forest().clone());
        let r = check_presentations(&a3, 0, &mut rng).unwrap();
        assert_eq!(r.grid_points, 27);
        assert!(r.passed());
    }
}
