//! Regular cell complexes, the arboreal link built from the correspondence poset,
//! exact homology, the intersection property, and the generalized (leafy) link.

use std::collections::{BTreeMap, HashMap, VecDeque};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::correspondence::CorrespondencePoset;
use crate::error::{Error, Result};
use crate::linalg::{rank, Coefficients, IntMatrix};
use crate::tree::{LeafyRootedForest, RootedTree};

/// Identifies the correspondence a link cell comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellSource {
    pub sub: u64,
    pub fibers: Vec<u64>,
    pub derived_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub dim: usize,
    /// component index for disjoint unions (product-factor tag for forests)
    pub component: usize,
    /// all strict faces, ascending
    pub faces: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<CellSource>,
}

/// A finite regular cell complex given by its face poset and cell dimensions.
#[derive(Clone, Debug)]
pub struct CellComplex {
    cells: Vec<Cell>,
    below: Vec<FixedBitSet>,
    facets: Vec<Vec<usize>>,
}

impl CellComplex {
    pub fn empty() -> Self {
        CellComplex { cells: Vec::new(), below: Vec::new(), facets: Vec::new() }
    }

    /// Build from cells whose `faces` may list only some faces; the face relation
    /// is closed transitively and checked against dimensions.
    pub fn new(mut cells: Vec<Cell>) -> Result<Self> {
        let n = cells.len();
        for (i, c) in cells.iter().enumerate() {
            for &f in &c.faces {
                if f >= n {
                    return Err(Error::Validation(format!("cell {i} names unknown face {f}")));
                }
                if cells[f].dim >= c.dim {
                    return Err(Error::Validation(format!(
                        "face '{}' of '{}' does not have smaller dimension",
                        cells[f].label, c.label
                    )));
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| cells[i].dim);
        let mut below = vec![FixedBitSet::with_capacity(n); n];
        for &i in &order {
            let mut set = FixedBitSet::with_capacity(n);
            for &f in &cells[i].faces {
                set.insert(f);
                set.union_with(&below[f]);
            }
            below[i] = set;
        }
        for (i, c) in cells.iter_mut().enumerate() {
            c.faces = below[i].ones().collect();
        }
        let facets = (0..n)
            .map(|i| below[i].ones().filter(|&f| cells[f].dim + 1 == cells[i].dim).collect())
            .collect();
        Ok(CellComplex { cells, below, facets })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn facets(&self, i: usize) -> &[usize] {
        &self.facets[i]
    }

    pub fn is_face(&self, f: usize, c: usize) -> bool {
        self.below[c].contains(f)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.cells.iter().map(|c| c.dim).max()
    }

    /// Number of cells in each dimension `0..=dim`.
    pub fn counts_by_dim(&self) -> Vec<usize> {
        let Some(top) = self.dimension() else { return Vec::new() };
        let mut out = vec![0; top + 1];
        for c in &self.cells {
            out[c.dim] += 1;
        }
        out
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.cells.iter().map(|c| if c.dim % 2 == 0 { 1 } else { -1 }).sum()
    }

    /// Closed cell: the cell together with all its faces.
    pub fn closure(&self, i: usize) -> FixedBitSet {
        let mut s = self.below[i].clone();
        s.insert(i);
        s
    }

    /// Cells grouped by dimension, ascending ids within each group.
    fn by_dim(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.dimension().map_or(0, |d| d + 1)];
        for (i, c) in self.cells.iter().enumerate() {
            out[c.dim].push(i);
        }
        out
    }

    /// Incidence numbers `[c : f]` in {±1} for each facet, chosen so that every
    /// codimension-two interval cancels. Fails when the complex is not regular.
    pub fn incidences(&self) -> Result<Vec<Vec<(usize, i64)>>> {
        let mut inc: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.len()];
        let sign_of = |inc: &Vec<Vec<(usize, i64)>>, c: usize, f: usize| -> i64 {
            inc[c].iter().find(|&&(g, _)| g == f).map(|&(_, s)| s).expect("facet sign assigned")
        };
        for ids in self.by_dim() {
            for c in ids {
                let dim = self.cells[c].dim;
                let facets = &self.facets[c];
                if dim == 0 {
                    continue;
                }
                if dim == 1 {
                    if facets.len() != 2 {
                        return Err(Error::Validation(format!(
                            "1-cell '{}' has {} vertices, a regular complex needs 2",
                            self.cells[c].label,
                            facets.len()
                        )));
                    }
                    inc[c] = vec![(facets[0], 1), (facets[1], -1)];
                    continue;
                }
                let mut sign: HashMap<usize, i64> = HashMap::new();
                let mut queue = VecDeque::new();
                if let Some(&f0) = facets.first() {
                    sign.insert(f0, 1);
                    queue.push_back(f0);
                }
                while let Some(f) = queue.pop_front() {
                    let sf = sign[&f];
                    for &(r, sfr) in &inc[f] {
                        let partners: Vec<usize> =
                            facets.iter().copied().filter(|&g| g != f && self.facets[g].contains(&r)).collect();
                        if partners.len() != 1 {
                            return Err(Error::Validation(format!(
                                "ridge '{}' of '{}' lies in {} facets besides '{}'",
                                self.cells[r].label,
                                self.cells[c].label,
                                partners.len(),
                                self.cells[f].label
                            )));
                        }
                        let g = partners[0];
                        let sgr = sign_of(&inc, g, r);
                        let want = -sf * sfr * sgr;
                        match sign.get(&g) {
                            Some(&s) if s != want => {
                                return Err(Error::Validation(format!(
                                    "boundary of '{}' is not orientable",
                                    self.cells[c].label
                                )))
                            }
                            Some(_) => {}
                            None => {
                                sign.insert(g, want);
                                queue.push_back(g);
                            }
                        }
                    }
                }
                if sign.len() != facets.len() {
                    return Err(Error::Validation(format!(
                        "boundary of '{}' is disconnected",
                        self.cells[c].label
                    )));
                }
                inc[c] = facets.iter().map(|&f| (f, sign[&f])).collect();
            }
        }
        Ok(inc)
    }

    /// Augmented cellular chain complex: entry `k` maps k-chains to (k-1)-chains,
    /// with `k = 0` the augmentation to the (-1)-chains.
    pub fn cellular_boundaries(&self) -> Result<Vec<IntMatrix>> {
        let inc = self.incidences()?;
        let groups = self.by_dim();
        let pos: HashMap<usize, usize> =
            groups.iter().flat_map(|g| g.iter().enumerate().map(|(k, &c)| (c, k))).collect();
        let mut out = Vec::with_capacity(groups.len());
        for (k, cols) in groups.iter().enumerate() {
            if k == 0 {
                out.push(vec![vec![1; cols.len()]]);
                continue;
            }
            let rows = groups[k - 1].len();
            let mut m = vec![vec![0i64; cols.len()]; rows];
            for (j, &c) in cols.iter().enumerate() {
                for &(f, s) in &inc[c] {
                    m[pos[&f]][j] = s;
                }
            }
            out.push(m);
        }
        check_chain_complex(&out)?;
        Ok(out)
    }

    /// Chains of the face poset (simplices of the order complex), grouped by dimension.
    pub fn order_complex(&self, limit: usize) -> Result<Vec<Vec<Vec<usize>>>> {
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for c in 0..self.len() {
            for f in self.below[c].ones() {
                above[f].push(c);
            }
        }
        let mut simplices: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut count = 0usize;
        let mut stack: Vec<Vec<usize>> = (0..self.len()).map(|c| vec![c]).collect();
        while let Some(chain) = stack.pop() {
            count += 1;
            if count > limit {
                return Err(Error::TooLarge(format!("order complex exceeds {limit} simplices")));
            }
            let top = *chain.last().expect("nonempty chain");
            for &c in &above[top] {
                let mut next = chain.clone();
                next.push(c);
                stack.push(next);
            }
            let d = chain.len() - 1;
            if simplices.len() <= d {
                simplices.resize(d + 1, Vec::new());
            }
            simplices[d].push(chain);
        }
        for group in simplices.iter_mut() {
            group.sort();
        }
        Ok(simplices)
    }

    /// Augmented simplicial chain complex of the order complex.
    pub fn order_complex_boundaries(&self, limit: usize) -> Result<Vec<IntMatrix>> {
        let simplices = self.order_complex(limit)?;
        let mut out = Vec::new();
        for (k, cols) in simplices.iter().enumerate() {
            if k == 0 {
                out.push(vec![vec![1; cols.len()]]);
                continue;
            }
            let pos: HashMap<&Vec<usize>, usize> = simplices[k - 1].iter().enumerate().map(|(i, s)| (s, i)).collect();
            let mut m = vec![vec![0i64; cols.len()]; simplices[k - 1].len()];
            for (j, s) in cols.iter().enumerate() {
                for drop in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(drop);
                    m[pos[&face]][j] = if drop % 2 == 0 { 1 } else { -1 };
                }
            }
            out.push(m);
        }
        check_chain_complex(&out)?;
        Ok(out)
    }

    pub fn homology(&self, coeff: Coefficients) -> Result<BettiProfile> {
        let boundaries = self.cellular_boundaries()?;
        Ok(BettiProfile::from_boundaries(&boundaries, coeff, self.euler_characteristic()))
    }

    pub fn order_complex_homology(&self, coeff: Coefficients, limit: usize) -> Result<BettiProfile> {
        let boundaries = self.order_complex_boundaries(limit)?;
        Ok(BettiProfile::from_boundaries(&boundaries, coeff, self.euler_characteristic()))
    }

    /// Every two closed cells meet in one closed cell or not at all.
    pub fn check_intersection_property(&self) -> IntersectionReport {
        let closures: Vec<FixedBitSet> = (0..self.len()).map(|i| self.closure(i)).collect();
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                let mut meet = closures[a].clone();
                meet.intersect_with(&closures[b]);
                if meet.count_ones(..) == 0 {
                    continue;
                }
                let maxima: Vec<usize> =
                    meet.ones().filter(|&x| !meet.ones().any(|y| y != x && self.below[y].contains(x))).collect();
                if maxima.len() != 1 {
                    return IntersectionReport {
                        holds: false,
                        witness: Some(IntersectionWitness {
                            first: self.cells[a].label.clone(),
                            second: self.cells[b].label.clone(),
                            maximal_common_faces: maxima.iter().map(|&m| self.cells[m].label.clone()).collect(),
                        }),
                    };
                }
            }
        }
        IntersectionReport { holds: true, witness: None }
    }

    /// Number of elements in a longest chain strictly below each cell.
    pub fn chain_depths(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| self.cells[i].dim);
        let mut depth = vec![0usize; self.len()];
        for &c in &order {
            depth[c] = self.below[c].ones().map(|f| depth[f] + 1).max().unwrap_or(0);
        }
        depth
    }

    /// Disjoint union; cells of part `k` get component tag `k`.
    pub fn disjoint_union(parts: Vec<CellComplex>) -> Result<CellComplex> {
        let mut cells = Vec::new();
        for (k, part) in parts.into_iter().enumerate() {
            let off = cells.len();
            for mut c in part.cells {
                c.faces = c.faces.iter().map(|f| f + off).collect();
                c.component = k;
                cells.push(c);
            }
        }
        CellComplex::new(cells)
    }

    /// Delete open cells that are faces of nothing; the result is a closed subcomplex.
    pub fn remove_maximal_cells(&self, remove: &[usize]) -> Result<CellComplex> {
        let mut drop = vec![false; self.len()];
        for &r in remove {
            drop[r] = true;
        }
        for c in 0..self.len() {
            if drop[c] {
                continue;
            }
            if let Some(r) = self.below[c].ones().find(|&f| drop[f]) {
                return Err(Error::Validation(format!(
                    "cannot delete '{}': it is a face of '{}'",
                    self.cells[r].label, self.cells[c].label
                )));
            }
        }
        let mut new_id = vec![usize::MAX; self.len()];
        let mut cells = Vec::new();
        for c in 0..self.len() {
            if !drop[c] {
                new_id[c] = cells.len();
                cells.push(self.cells[c].clone());
            }
        }
        for c in cells.iter_mut() {
            c.faces = c.faces.iter().map(|&f| new_id[f]).collect();
        }
        CellComplex::new(cells)
    }

    /// The cone: an apex plus one cell of dimension +1 over each cell.
    pub fn cone(&self) -> Result<CellComplex> {
        let n = self.len();
        let mut cells = self.cells.clone();
        cells.push(Cell { label: "apex".into(), dim: 0, component: 0, faces: vec![], source: None });
        for (i, c) in self.cells.iter().enumerate() {
            let mut faces = vec![i, n];
            faces.extend(c.faces.iter().map(|&f| n + 1 + f));
            cells.push(Cell { label: format!("cone({})", c.label), dim: c.dim + 1, component: c.component, faces, source: None });
        }
        CellComplex::new(cells)
    }

    pub fn to_json(&self) -> FacePosetJson {
        FacePosetJson {
            cells: self
                .cells
                .iter()
                .enumerate()
                .map(|(i, c)| FaceJson {
                    id: i,
                    label: c.label.clone(),
                    dim: c.dim,
                    component: c.component,
                    facets: self.facets[i].clone(),
                })
                .collect(),
            counts_by_dim: self.counts_by_dim(),
        }
    }
}

fn check_chain_complex(bd: &[IntMatrix]) -> Result<()> {
    for k in 1..bd.len() {
        let a = &bd[k - 1];
        let b = &bd[k];
        for row in a {
            for j in 0..b.first().map_or(0, Vec::len) {
                let s: i64 = row.iter().zip(b.iter()).map(|(x, r)| x * r[j]).sum();
                if s != 0 {
                    return Err(Error::Internal(format!("boundary composite nonzero in degree {k}")));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceJson {
    pub id: usize,
    pub label: String,
    pub dim: usize,
    pub component: usize,
    pub facets: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacePosetJson {
    pub cells: Vec<FaceJson>,
    pub counts_by_dim: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionWitness {
    pub first: String,
    pub second: String,
    pub maximal_common_faces: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub holds: bool,
    pub witness: Option<IntersectionWitness>,
}

/// Reduced Betti numbers in degrees `0..=dim` and the Euler characteristic of the cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiProfile {
    pub coefficients: Coefficients,
    pub reduced_betti: BTreeMap<usize, u64>,
    pub euler: i64,
}

impl BettiProfile {
    /// `bd[k]` maps k-chains to (k-1)-chains, `bd[0]` being the augmentation.
    pub fn from_boundaries(bd: &[IntMatrix], coeff: Coefficients, euler: i64) -> Self {
        let ranks: Vec<usize> = bd.iter().map(|m| rank(m, coeff)).collect();
        let mut reduced_betti = BTreeMap::new();
        for k in 0..bd.len() {
            let cells = bd[k].first().map_or(0, Vec::len);
            let out = ranks[k];
            let inc = ranks.get(k + 1).copied().unwrap_or(0);
            reduced_betti.insert(k, (cells - out - inc) as u64);
        }
        BettiProfile { coefficients: coeff, reduced_betti, euler }
    }

    pub fn total_rank(&self) -> u64 {
        self.reduced_betti.values().sum()
    }

    /// `(degree, rank)` when exactly one degree carries homology.
    pub fn concentration(&self) -> Option<(usize, u64)> {
        let nonzero: Vec<(usize, u64)> = self.reduced_betti.iter().filter(|(_, &b)| b > 0).map(|(&k, &b)| (k, b)).collect();
        (nonzero.len() == 1).then(|| nonzero[0])
    }

    /// Alternating sum of reduced Betti numbers plus one (zero for the empty complex).
    pub fn euler_from_betti(&self) -> i64 {
        if self.reduced_betti.is_empty() {
            return 0;
        }
        1 + self.reduced_betti.iter().map(|(&k, &b)| if k % 2 == 0 { b as i64 } else { -(b as i64) }).sum::<i64>()
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> =
            self.reduced_betti.iter().filter(|(_, &b)| b > 0).map(|(k, b)| format!("b{k}={b}")).collect();
        if parts.is_empty() {
            "all zero".into()
        } else {
            parts.join(" ")
        }
    }
}

/// The arboreal link of a tree: cells are the non-identity correspondences, a cell
/// `(R <- S -> T)` has dimension `|T| - |R| - 1`, and faces follow the poset order.
pub fn build_link_complex(t: &RootedTree) -> Result<CellComplex> {
    let poset = CorrespondencePoset::build(t)?;
    link_from_poset(&poset)
}

pub fn link_from_poset(poset: &CorrespondencePoset) -> Result<CellComplex> {
    let n = poset.tree().len();
    let min = poset.minimum();
    let ids: Vec<usize> = (0..poset.len()).filter(|&i| i != min).collect();
    let pos: HashMap<usize, usize> = ids.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let cells = ids
        .iter()
        .map(|&i| {
            let p = poset.get(i);
            let faces = ids.iter().copied().filter(|&j| j != i && poset.leq(j, i)).map(|j| pos[&j]).collect();
            Cell {
                label: p.label(),
                dim: n - p.derived().len() - 1,
                component: 0,
                faces,
                source: Some(CellSource {
                    sub: p.sub_mask(),
                    fibers: p.fibers().to_vec(),
                    derived_size: p.derived().len(),
                }),
            }
        })
        .collect();
    CellComplex::new(cells)
}

/// Link of a leafy forest: links of the components of F+ side by side, with the
/// cells `(pt <- {a})` and `(pt <- {a, a+})` removed for every marked `a`.
pub fn generalized_link(f: &LeafyRootedForest) -> Result<CellComplex> {
    let plus = f.leafy_plus()?;
    let mut parts = Vec::new();
    for (tree, verts) in plus.forest.component_trees() {
        let local: HashMap<usize, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let link = build_link_complex(&tree)?;
        let mut targets = Vec::new();
        for (&a, &ap) in plus.ell.iter().zip(&plus.ell_plus) {
            if let (Some(&la), Some(&lap)) = (local.get(&a), local.get(&ap)) {
                targets.push((1u64 << la, vec![1u64 << la]));
                let both = (1u64 << la) | (1u64 << lap);
                targets.push((both, vec![both]));
            }
        }
        let remove: Vec<usize> = (0..link.len())
            .filter(|&i| {
                let s = link.cell(i).source.as_ref().expect("link cells carry sources");
                targets.iter().any(|(sub, fib)| s.sub == *sub && &s.fibers == fib)
            })
            .collect();
        if remove.len() != targets.len() {
            return Err(Error::Internal("marked-vertex cells not found in the link".into()));
        }
        parts.push(link.remove_maximal_cells(&remove)?);
    }
    CellComplex::disjoint_union(parts)
}

/// Two triangles glued along two vertices but no edge.
pub fn broken_fixture() -> CellComplex {
    let cell = |label: &str, dim: usize, faces: Vec<usize>| Cell {
        label: label.into(),
        dim,
        component: 0,
        faces,
        source: None,
    };
    CellComplex::new(vec![
        cell("v1", 0, vec![]),
        cell("v2", 0, vec![]),
        cell("a", 0, vec![]),
        cell("b", 0, vec![]),
        cell("e(v1,v2)", 1, vec![0, 1]),
        cell("e(v2,a)", 1, vec![1, 2]),
        cell("e(a,v1)", 1, vec![2, 0]),
        cell("e'(v1,v2)", 1, vec![0, 1]),
        cell("e(v2,b)", 1, vec![1, 3]),
        cell("e(b,v1)", 1, vec![3, 0]),
        cell("T1", 2, vec![4, 5, 6]),
        cell("T2", 2, vec![7, 8, 9]),
    ])
    .expect("fixture is a valid cell complex")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(s: &str) -> CellComplex {
        build_link_complex(&RootedTree::parse(s).unwrap()).unwrap()
    }

    #[test]
    fn small_links() {
        let a1 = link("(a)");
        assert!(a1.is_empty());
        let h = a1.homology(Coefficients::Prime(2)).unwrap();
        assert_eq!(h.total_rank(), 0);

        let a2 = link("(a (b))");
        assert_eq!(a2.counts_by_dim(), vec![3]);
        let h = a2.homology(Coefficients::Prime(2)).unwrap();
        assert_eq!(h.concentration(), Some((0, 2)));

        let a3 = link("(a (b (c)))");
        assert_eq!(a3.counts_by_dim(), vec![4, 6]);
        let h = a3.homology(Coefficients::Rational).unwrap();
        assert_eq!(h.concentration(), Some((1, 3)));
        assert_eq!(h.euler, h.euler_from_betti());
    }

    #[test]
    fn order_complex_agrees_with_cells() {
        for n in 1..=4 {
            for t in crate::tree::rooted_trees(n) {
                let c = build_link_complex(&t).unwrap();
                for coeff in [Coefficients::Prime(2), Coefficients::Prime(3), Coefficients::Rational] {
                    let a = c.homology(coeff).unwrap();
                    let b = c.order_complex_homology(coeff, 1_000_000).unwrap();
                    assert_eq!(a.reduced_betti.values().sum::<u64>(), b.reduced_betti.values().sum::<u64>());
                    assert_eq!(a.concentration(), b.concentration(), "{t}");
                }
            }
        }
    }

    #[test]
    fn broken_fixture_fails_intersection() {
        let c = broken_fixture();
        let r = c.check_intersection_property();
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_eq!(w.maximal_common_faces.len(), 2);
        assert!(link("(a (b (c)))").check_intersection_property().holds);
    }

    #[test]
    fn generalized_singleton() {
        let f = LeafyRootedForest::single(RootedTree::parse("(a)").unwrap(), &["a"]).unwrap();
        let g = generalized_link(&f).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.cell(0).dim, 0);
        let none = LeafyRootedForest::single(RootedTree::parse("(a (b))").unwrap(), &[]).unwrap();
        assert_eq!(generalized_link(&none).unwrap().len(), 3);
    }

    #[test]
    fn cone_is_acyclic() {
        let c = link("(a (b (c)))").cone().unwrap();
        assert_eq!(c.homology(Coefficients::Rational).unwrap().total_rank(), 0);
    }
}
