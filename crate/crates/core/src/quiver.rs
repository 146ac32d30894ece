//! Tree quivers, perfect complexes of projectives, and the restriction transforms
//! attached to correspondences, at the level of K_0.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::correspondence::{compose, enumerate_correspondences, Correspondence, CorrespondencePoset};
use crate::error::{Error, Result};
use crate::linalg::{mat_mul, rank_rational, smith_diagonal, IntMatrix};
use crate::tree::RootedTree;

/// Arrows run from each parent to its child.
#[derive(Clone, Debug)]
pub struct TreeQuiver {
    tree: Arc<RootedTree>,
}

/// A representation: a vector space per vertex and a matrix per arrow `(parent, child)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub dims: Vec<usize>,
    /// `maps[child]`: `dims[child] x dims[parent]`
    pub maps: Vec<Option<IntMatrix>>,
}

impl TreeQuiver {
    pub fn new(tree: Arc<RootedTree>) -> Self {
        TreeQuiver { tree }
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.len() == 0
    }

    pub fn arrows(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter_map(|v| self.tree.parent(v).map(|p| (p, v))).collect()
    }

    fn check_vertex(&self, a: usize) -> Result<()> {
        if a >= self.len() {
            return Err(Error::Validation(format!("unknown vertex index {a}")));
        }
        Ok(())
    }

    /// `P_a`: one-dimensional on every vertex `>= a`, identity maps between them.
    pub fn projective(&self, a: usize) -> Result<Representation> {
        self.check_vertex(a)?;
        let dims: Vec<usize> = (0..self.len()).map(|v| usize::from(self.tree.leq(a, v))).collect();
        let maps = (0..self.len())
            .map(|v| {
                self.tree.parent(v).map(|p| {
                    let id = i64::from(dims[p] == 1 && dims[v] == 1);
                    vec![vec![id; dims[p]]; dims[v]]
                })
            })
            .collect();
        Ok(Representation { dims, maps })
    }

    /// Dimension of the space of representation morphisms `m -> n`, by solving the
    /// commutativity constraints over Q.
    pub fn hom_dim_reps(&self, m: &Representation, n: &Representation) -> usize {
        // unknown block for vertex v: n.dims[v] x m.dims[v], row-major
        let mut offset = vec![0; self.len()];
        let mut vars = 0;
        for v in 0..self.len() {
            offset[v] = vars;
            vars += m.dims[v] * n.dims[v];
        }
        if vars == 0 {
            return 0;
        }
        let var = |v: usize, i: usize, j: usize| offset[v] + i * m.dims[v] + j;
        let mut rows: IntMatrix = Vec::new();
        // f_v . M(p->v) = N(p->v) . f_p, entrywise (i, j) with i < n_v, j < m_p
        for (p, v) in self.arrows() {
            let mm = m.maps[v].as_ref().expect("arrow map");
            let nn = n.maps[v].as_ref().expect("arrow map");
            for i in 0..n.dims[v] {
                for j in 0..m.dims[p] {
                    let mut row = vec![0i64; vars];
                    for k in 0..m.dims[v] {
                        row[var(v, i, k)] += mm[k][j];
                    }
                    for k in 0..n.dims[p] {
                        row[var(p, k, j)] -= nn[i][k];
                    }
                    rows.push(row);
                }
            }
        }
        vars - if rows.is_empty() { 0 } else { rank_rational(&rows) }
    }

    pub fn hom_dim(&self, a: usize, b: usize) -> Result<usize> {
        Ok(self.hom_dim_reps(&self.projective(a)?, &self.projective(b)?))
    }

    /// `E[a][b] = hom_dim(P_a, P_b)`.
    pub fn euler_matrix(&self) -> Result<IntMatrix> {
        let proj: Vec<Representation> = (0..self.len()).map(|a| self.projective(a)).collect::<Result<_>>()?;
        Ok(proj.iter().map(|m| proj.iter().map(|n| self.hom_dim_reps(m, n) as i64).collect()).collect())
    }

    /// A morphism `P_a -> P_b` exists iff `b <= a`.
    pub fn has_path(&self, source: usize, target: usize) -> bool {
        self.tree.leq(target, source)
    }
}

/// Bounded complex of projectives: `terms[k]` lists the labels in degree `k`,
/// `differentials[k]` maps degree `k` to `k+1` (rows indexed by `terms[k+1]`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfObject {
    pub tree_size: usize,
    pub terms: BTreeMap<i32, Vec<usize>>,
    pub differentials: BTreeMap<i32, IntMatrix>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialEntry {
    pub degree: i32,
    pub row: usize,
    pub col: usize,
    pub source: usize,
    pub target: usize,
    pub scalar: i64,
}

impl PerfObject {
    pub fn projective(q: &TreeQuiver, a: usize) -> Result<Self> {
        q.check_vertex(a)?;
        Ok(PerfObject { tree_size: q.len(), terms: BTreeMap::from([(0, vec![a])]), differentials: BTreeMap::new() })
    }

    pub fn zero(q: &TreeQuiver) -> Self {
        PerfObject { tree_size: q.len(), terms: BTreeMap::new(), differentials: BTreeMap::new() }
    }

    pub fn from_parts(q: &TreeQuiver, terms: BTreeMap<i32, Vec<usize>>, differentials: BTreeMap<i32, IntMatrix>) -> Result<Self> {
        let x = PerfObject { tree_size: q.len(), terms, differentials };
        x.validate(q)?;
        Ok(x)
    }

    fn term(&self, k: i32) -> &[usize] {
        self.terms.get(&k).map_or(&[], Vec::as_slice)
    }

    /// Differential `k -> k+1` as a full matrix (zero if absent).
    pub fn differential(&self, k: i32) -> IntMatrix {
        self.differentials
            .get(&k)
            .cloned()
            .unwrap_or_else(|| vec![vec![0; self.term(k).len()]; self.term(k + 1).len()])
    }

    pub fn entries(&self) -> Vec<DifferentialEntry> {
        let mut out = Vec::new();
        for (&k, d) in &self.differentials {
            for (row, r) in d.iter().enumerate() {
                for (col, &scalar) in r.iter().enumerate() {
                    if scalar != 0 {
                        out.push(DifferentialEntry {
                            degree: k,
                            row,
                            col,
                            source: self.term(k)[col],
                            target: self.term(k + 1)[row],
                            scalar,
                        });
                    }
                }
            }
        }
        out
    }

    /// Shapes, path support of every entry, and `d . d = 0`.
    pub fn validate(&self, q: &TreeQuiver) -> Result<()> {
        if self.tree_size != q.len() {
            return Err(Error::Validation("object lives over a different tree".into()));
        }
        for labels in self.terms.values() {
            if let Some(&bad) = labels.iter().find(|&&a| a >= q.len()) {
                return Err(Error::Validation(format!("unknown projective label {bad}")));
            }
        }
        for (&k, d) in &self.differentials {
            let (rows, cols) = (self.term(k + 1).len(), self.term(k).len());
            if d.len() != rows || d.iter().any(|r| r.len() != cols) {
                return Err(Error::Validation(format!("differential in degree {k} must be {rows}x{cols}")));
            }
        }
        for e in self.entries() {
            if !q.has_path(e.source, e.target) {
                return Err(Error::Validation(format!(
                    "no quiver path for an entry from P{} to P{} in degree {}",
                    e.source, e.target, e.degree
                )));
            }
        }
        for (&k, d) in &self.differentials {
            if let Some(next) = self.differentials.get(&(k + 1)) {
                if !next.is_empty() && !d.is_empty() && mat_mul(next, d).iter().flatten().any(|&x| x != 0) {
                    return Err(Error::Validation(format!("d.d is nonzero from degree {k}")));
                }
            }
        }
        Ok(())
    }

    /// Euler characteristic class in K_0 on the basis `[P_a]`.
    pub fn k0_class(&self) -> Vec<i64> {
        let mut class = vec![0; self.tree_size];
        for (&k, labels) in &self.terms {
            let sign = if k.rem_euclid(2) == 0 { 1 } else { -1 };
            for &a in labels {
                class[a] += sign;
            }
        }
        class
    }

    /// `X[n]`: degree `k` moves to `k - n`, differentials change sign for odd `n`.
    pub fn shift(&self, n: i32) -> Self {
        let sign = if n.rem_euclid(2) == 0 { 1 } else { -1 };
        PerfObject {
            tree_size: self.tree_size,
            terms: self.terms.iter().map(|(&k, v)| (k - n, v.clone())).collect(),
            differentials: self
                .differentials
                .iter()
                .map(|(&k, d)| (k - n, d.iter().map(|r| r.iter().map(|x| sign * x).collect()).collect()))
                .collect(),
        }
    }

    /// Cone of `scalar` times the generator `P_a -> P_b`: `P_a` in degree -1, `P_b` in degree 0.
    pub fn generator_cone(q: &TreeQuiver, a: usize, b: usize, scalar: i64) -> Result<Self> {
        let terms = BTreeMap::from([(-1, vec![a]), (0, vec![b])]);
        let differentials = BTreeMap::from([(-1, vec![vec![scalar]])]);
        Self::from_parts(q, terms, differentials)
    }
}

/// Integer matrix from K_0 of the target tree to K_0 of the derived tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct K0Transform {
    pub source_tree: String,
    pub target_tree: String,
    pub matrix: IntMatrix,
}

impl K0Transform {
    pub fn apply(&self, class: &[i64]) -> Vec<i64> {
        self.matrix.iter().map(|r| r.iter().zip(class).map(|(a, b)| a * b).sum()).collect()
    }

    /// Each column has at most one nonzero entry, equal to 1.
    pub fn is_generator_map(&self) -> bool {
        let cols = self.matrix.first().map_or(0, Vec::len);
        (0..cols).all(|j| {
            let nz: Vec<i64> = self.matrix.iter().map(|r| r[j]).filter(|&x| x != 0).collect();
            nz.is_empty() || nz == [1]
        })
    }
}

/// `q_! i^*` on K_0: `M[q(a)][a] = 1` for `a` in S, zero columns elsewhere.
pub fn restriction_transform(p: &Correspondence) -> K0Transform {
    let collapse = p.collapse();
    let mut matrix = vec![vec![0; p.target().len()]; p.derived().len()];
    for (a, k) in collapse.iter().enumerate() {
        if let Some(k) = k {
            matrix[*k][a] = 1;
        }
    }
    K0Transform { source_tree: p.target().to_string(), target_tree: p.derived().to_string(), matrix }
}

/// Delete generators outside S, relabel the rest through the quotient, keep scalars.
pub fn apply_transform(p: &Correspondence, x: &PerfObject) -> Result<PerfObject> {
    if x.tree_size != p.target().len() {
        return Err(Error::Validation("object is not over the target tree of the correspondence".into()));
    }
    let collapse = p.collapse();
    let derived = p.derived();
    let mut keep: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    let mut terms = BTreeMap::new();
    for (&k, labels) in &x.terms {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| collapse[labels[i]].is_some()).collect();
        let new: Vec<usize> = idx.iter().map(|&i| collapse[labels[i]].unwrap()).collect();
        if !new.is_empty() {
            terms.insert(k, new);
        }
        keep.insert(k, idx);
    }
    let mut differentials = BTreeMap::new();
    for (&k, d) in &x.differentials {
        let (Some(cols), Some(rows)) = (keep.get(&k), keep.get(&(k + 1))) else { continue };
        if rows.is_empty() || cols.is_empty() {
            continue;
        }
        let sub: IntMatrix = rows.iter().map(|&i| cols.iter().map(|&j| d[i][j]).collect()).collect();
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                if sub[r][c] != 0 {
                    let (s, t) = (collapse[x.terms[&k][j]].unwrap(), collapse[x.terms[&(k + 1)][i]].unwrap());
                    if !derived.leq(t, s) {
                        return Err(Error::Internal(format!(
                            "entry from P{} to P{} has no image path after collapsing",
                            x.terms[&k][j],
                            x.terms[&(k + 1)][i]
                        )));
                    }
                }
            }
        }
        differentials.insert(k, sub);
    }
    Ok(PerfObject { tree_size: derived.len(), terms, differentials })
}

/// Shifts of projectives, cones of generator maps with scalars 1, 2, -1, and the
/// three-term complexes `P_a -> P_b + P_c -> P_d` over every diamond `d <= b, c <= a`.
pub fn object_family(q: &TreeQuiver) -> Result<Vec<PerfObject>> {
    let n = q.len();
    let mut out = Vec::new();
    for a in 0..n {
        let p = PerfObject::projective(q, a)?;
        out.push(p.shift(-1));
        out.push(p.shift(2));
        out.push(p);
    }
    for a in 0..n {
        for b in (0..n).filter(|&b| q.has_path(a, b)) {
            for s in [1, 2, -1] {
                let c = PerfObject::generator_cone(q, a, b, s)?;
                out.push(c.shift(1));
                out.push(c);
            }
        }
    }
    for a in 0..n {
        for b in (0..n).filter(|&b| q.has_path(a, b)) {
            for c in (0..n).filter(|&c| q.has_path(a, c)) {
                for d in (0..n).filter(|&d| q.has_path(b, d) && q.has_path(c, d)) {
                    let terms = BTreeMap::from([(0, vec![a]), (1, vec![b, c]), (2, vec![d])]);
                    let diffs = BTreeMap::from([(0, vec![vec![1], vec![1]]), (1, vec![vec![1, -1]])]);
                    out.push(PerfObject::from_parts(q, terms, diffs)?);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctorReport {
    pub tree: String,
    pub poset_size: usize,
    pub composable_pairs: usize,
    pub multiplicative: usize,
    pub objects_checked: usize,
    pub k0_mismatches: usize,
    pub euler_unimodular: bool,
    pub failures: Vec<String>,
}

impl FunctorReport {
    pub fn passed(&self) -> bool {
        self.composable_pairs == self.multiplicative && self.k0_mismatches == 0 && self.euler_unimodular && self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            format!("{} composable pairs, all multiplicative", self.composable_pairs)
        } else {
            format!(
                "{} composable pairs, {} multiplicative, {} K_0 mismatches",
                self.composable_pairs, self.multiplicative, self.k0_mismatches
            )
        }
    }
}

/// Pairs `(p, q)` with `p` in the poset of `t` and `q` over the derived tree of `p`:
/// checks `M(q . p) = M(q) M(p)`. Objects from [`object_family`] are pushed through
/// every element when `check_objects` is set.
pub fn functor_check(t: &RootedTree, check_objects: bool) -> Result<FunctorReport> {
    let poset = CorrespondencePoset::build(t)?;
    let mut report = FunctorReport {
        tree: t.to_string(),
        poset_size: poset.len(),
        composable_pairs: 0,
        multiplicative: 0,
        objects_checked: 0,
        k0_mismatches: 0,
        euler_unimodular: false,
        failures: Vec::new(),
    };
    for p in poset.elements() {
        let mp = restriction_transform(p);
        if !mp.is_generator_map() {
            report.failures.push(format!("{p}: not a generator map"));
        }
        for q in enumerate_correspondences(Arc::new(p.derived().clone()))? {
            report.composable_pairs += 1;
            let qp = compose(&q, p)?;
            if restriction_transform(&qp).matrix == mat_mul(&restriction_transform(&q).matrix, &mp.matrix) {
                report.multiplicative += 1;
            } else {
                report.failures.push(format!("{q} after {p}"));
            }
        }
    }
    let quiver = TreeQuiver::new(poset.tree().clone());
    let euler = quiver.euler_matrix()?;
    let diag = smith_diagonal(&euler);
    report.euler_unimodular = diag.len() == quiver.len() && diag.iter().all(|d| *d == 1.into());
    if check_objects {
        let family = object_family(&quiver)?;
        for p in poset.elements() {
            let m = restriction_transform(p);
            let derived = TreeQuiver::new(Arc::new(p.derived().clone()));
            for x in &family {
                report.objects_checked += 1;
                let y = apply_transform(p, x)?;
                if y.validate(&derived).is_err() || y.k0_class() != m.apply(&x.k0_class()) {
                    report.k0_mismatches += 1;
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a2() -> (Arc<RootedTree>, TreeQuiver) {
        let t = Arc::new(RootedTree::parse("(r (c))").unwrap());
        (t.clone(), TreeQuiver::new(t))
    }

    #[test]
    fn projectives_and_homs() {
        let (_, q) = a2();
        assert_eq!(q.projective(0).unwrap().dims, vec![1, 1]);
        assert_eq!(q.projective(1).unwrap().dims, vec![0, 1]);
        assert_eq!(q.hom_dim(1, 0).unwrap(), 1);
        assert_eq!(q.hom_dim(0, 1).unwrap(), 0);
        assert_eq!(q.hom_dim(0, 0).unwrap(), 1);
        assert!(q.projective(2).is_err());
        let a1 = TreeQuiver::new(Arc::new(RootedTree::parse("(a)").unwrap()));
        assert_eq!(a1.euler_matrix().unwrap(), vec![vec![1]]);
    }

    #[test]
    fn a2_transforms() {
        let (t, _) = a2();
        let id = Correspondence::identity(t.clone()).unwrap();
        assert_eq!(restriction_transform(&id).matrix, vec![vec![1, 0], vec![0, 1]]);
        let child = Correspondence::from_names(t.clone(), &[&["c"]]).unwrap();
        assert_eq!(restriction_transform(&child).matrix, vec![vec![0, 1]]);
        let point = Correspondence::from_names(t, &[&["r", "c"]]).unwrap();
        assert_eq!(restriction_transform(&point).matrix, vec![vec![1, 1]]);
    }

    #[test]
    fn bad_objects_rejected() {
        let (_, q) = a2();
        // P_r -> P_c has no path
        assert!(PerfObject::generator_cone(&q, 0, 1, 1).is_err());
        let terms = BTreeMap::from([(0, vec![1]), (1, vec![0]), (2, vec![0])]);
        let diffs = BTreeMap::from([(0, vec![vec![1]]), (1, vec![vec![1]])]);
        assert!(PerfObject::from_parts(&q, terms, diffs).unwrap_err().to_string().contains("d.d"));
    }

    #[test]
    fn a2_apply_matches_classes() {
        let (t, q) = a2();
        let child = Correspondence::from_names(t, &[&["c"]]).unwrap();
        let x = PerfObject::projective(&q, 0).unwrap();
        let y = apply_transform(&child, &x).unwrap();
        assert_eq!(y.k0_class(), restriction_transform(&child).apply(&x.k0_class()));
        let r = functor_check(&RootedTree::parse("(r (c))").unwrap(), true).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.composable_pairs, 7);
    }
}
