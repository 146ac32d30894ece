//! Correspondences `R <- S -> T` (full subtree followed by an edge-collapse quotient)
//! and the correspondence poset of a tree.
//!
//! Vertex sets are `u64` bitmasks over the target's vertex indices, so targets are
//! limited to 64 vertices. Quotients are stored by their fibers.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::tree::RootedTree;

pub const MAX_VERTICES: usize = 64;

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

/// Iterate over set bits of a mask in increasing order.
pub fn mask_members(mask: u64) -> Vec<usize> {
    bits(mask).collect()
}

fn check_size(t: &RootedTree) -> Result<()> {
    if t.len() > MAX_VERTICES {
        return Err(Error::TooLarge(format!("trees are limited to {MAX_VERTICES} vertices, got {}", t.len())));
    }
    Ok(())
}

/// A nonempty vertex set of a tree is connected iff it spans exactly |S|-1 edges.
pub fn is_connected(t: &RootedTree, mask: u64) -> bool {
    if mask == 0 {
        return false;
    }
    let inner = bits(mask).filter(|&v| t.parent(v).is_some_and(|p| mask >> p & 1 == 1)).count();
    inner + 1 == mask.count_ones() as usize
}

/// The unique vertex of a connected set whose parent lies outside it.
fn top_of(t: &RootedTree, mask: u64) -> usize {
    bits(mask)
        .find(|&v| t.parent(v).is_none_or(|p| mask >> p & 1 == 0))
        .expect("connected set has a top vertex")
}

#[derive(Clone, Debug)]
pub struct Correspondence {
    target: Arc<RootedTree>,
    sub: u64,
    fibers: Vec<u64>,
    derived: RootedTree,
}

impl PartialEq for Correspondence {
    fn eq(&self, other: &Self) -> bool {
        self.sub == other.sub
            && self.fibers == other.fibers
            && (Arc::ptr_eq(&self.target, &other.target) || self.target == other.target)
    }
}

impl Eq for Correspondence {}

impl Hash for Correspondence {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.sub.hash(state);
        self.fibers.hash(state);
    }
}

impl Correspondence {
    pub fn new(target: Arc<RootedTree>, sub: u64, mut fibers: Vec<u64>) -> Result<Self> {
        check_size(&target)?;
        let n = target.len();
        if n < 64 && sub >> n != 0 {
            return Err(Error::Validation("sub-vertex set exceeds the target".into()));
        }
        if !is_connected(&target, sub) {
            return Err(Error::Validation("sub-vertex set is not a subtree".into()));
        }
        let mut union = 0u64;
        for &f in &fibers {
            if f == 0 || union & f != 0 {
                return Err(Error::Validation("fibers must be nonempty and disjoint".into()));
            }
            if !is_connected(&target, f) {
                return Err(Error::Validation("a fiber is not a subtree".into()));
            }
            union |= f;
        }
        if union != sub {
            return Err(Error::Validation("fibers do not partition the sub-vertex set".into()));
        }
        fibers.sort_by_key(|f| f.trailing_zeros());
        let derived = derive_tree(&target, sub, &fibers);
        Ok(Correspondence { target, sub, fibers, derived })
    }

    pub fn identity(target: Arc<RootedTree>) -> Result<Self> {
        check_size(&target)?;
        let n = target.len();
        let sub = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let fibers = (0..n).map(|v| 1u64 << v).collect();
        Self::new(target, sub, fibers)
    }

    /// Build from vertex names: `sub` and `groups` (each group one fiber).
    pub fn from_names(target: Arc<RootedTree>, groups: &[&[&str]]) -> Result<Self> {
        let mut fibers = Vec::new();
        for g in groups {
            let mut m = 0u64;
            for name in *g {
                let v = target
                    .index_of(name)
                    .ok_or_else(|| Error::Validation(format!("unknown vertex '{name}'")))?;
                m |= 1 << v;
            }
            fibers.push(m);
        }
        let sub = fibers.iter().fold(0, |a, f| a | f);
        Self::new(target, sub, fibers)
    }

    pub fn target(&self) -> &Arc<RootedTree> {
        &self.target
    }

    pub fn sub_mask(&self) -> u64 {
        self.sub
    }

    pub fn sub_vertices(&self) -> Vec<usize> {
        bits(self.sub).collect()
    }

    pub fn fibers(&self) -> &[u64] {
        &self.fibers
    }

    /// The quotient map on target indices: `Some(k)` if the vertex lies in fiber `k`.
    pub fn collapse(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.target.len()];
        for (k, &f) in self.fibers.iter().enumerate() {
            for v in bits(f) {
                out[v] = Some(k);
            }
        }
        out
    }

    /// Derived tree R; vertex `k` is fiber `k`.
    pub fn derived(&self) -> &RootedTree {
        &self.derived
    }

    pub fn is_identity(&self) -> bool {
        self.sub.count_ones() as usize == self.target.len() && self.fibers.len() == self.target.len()
    }

    /// Recompute R from (S, fibers) and compare with the stored one.
    pub fn check_invariants(&self) -> Result<()> {
        let again = Correspondence::new(self.target.clone(), self.sub, self.fibers.clone())?;
        if again.derived != self.derived {
            return Err(Error::Internal("stored derived tree differs from recomputed one".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let name = |m: u64| bits(m).map(|v| self.target.name(v).to_string()).collect::<Vec<_>>().join(",");
        let groups: Vec<String> = self.fibers.iter().map(|&f| name(f)).collect();
        format!("{{{}}}/[{}]", name(self.sub), groups.join("|"))
    }

    /// `self ∘ p`: `self` must be a correspondence over the derived tree of `p`.
    pub fn compose_after(&self, p: &Correspondence) -> Result<Correspondence> {
        compose(self, p)
    }
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn derive_tree(t: &RootedTree, sub: u64, fibers: &[u64]) -> RootedTree {
    let mut fiber_of = vec![usize::MAX; t.len()];
    for (k, &f) in fibers.iter().enumerate() {
        for v in bits(f) {
            fiber_of[v] = k;
        }
    }
    let names = fibers
        .iter()
        .map(|&f| bits(f).map(|v| t.name(v)).collect::<Vec<_>>().join("+"))
        .collect();
    let parent = fibers
        .iter()
        .map(|&f| {
            let top = top_of(t, f);
            t.parent(top).filter(|&p| sub >> p & 1 == 1).map(|p| fiber_of[p])
        })
        .collect();
    RootedTree::new(names, parent).expect("quotient of a subtree is a tree")
}

/// `q ∘ p` for `p` over T with derived tree R′ and `q` over R′.
pub fn compose(q: &Correspondence, p: &Correspondence) -> Result<Correspondence> {
    // fibers are matched by index, so only the shape has to agree; merged names depend on the route taken
    if q.target.as_forest().parents() != p.derived().as_forest().parents() {
        return Err(Error::Composition(format!(
            "target {} of the outer correspondence is not the derived tree {} of the inner one",
            q.target,
            p.derived()
        )));
    }
    let lift = |m: u64| bits(m).fold(0u64, |acc, k| acc | p.fibers[k]);
    let sub = lift(q.sub);
    let fibers = q.fibers.iter().map(|&f| lift(f)).collect();
    Correspondence::new(p.target.clone(), sub, fibers)
}

/// All vertex sets inducing connected subgraphs, ascending by mask.
pub fn enumerate_subtrees(t: &RootedTree) -> Vec<u64> {
    assert!(t.len() <= MAX_VERTICES, "trees are limited to {MAX_VERTICES} vertices");
    // rooted_at[v]: connected sets whose top vertex is v
    let mut rooted_at: Vec<Vec<u64>> = vec![Vec::new(); t.len()];
    for &v in t.topological_order().iter().rev() {
        let mut sets = vec![1u64 << v];
        for &c in t.children(v) {
            let mut grown = sets.clone();
            for &s in &sets {
                for &cs in &rooted_at[c] {
                    grown.push(s | cs);
                }
            }
            sets = grown;
        }
        rooted_at[v] = sets;
    }
    let mut all: Vec<u64> = rooted_at.into_iter().flatten().collect();
    all.sort_unstable();
    all
}

/// Fiber partitions of a subtree, one per subset of its internal edges (ascending).
pub fn quotient_fibers(t: &RootedTree, sub: u64) -> Vec<Vec<u64>> {
    let verts: Vec<usize> = bits(sub).collect();
    let edges: Vec<(usize, usize)> = verts
        .iter()
        .filter_map(|&c| t.parent(c).filter(|&p| sub >> p & 1 == 1).map(|p| (p, c)))
        .collect();
    let e = edges.len();
    let mut out = Vec::with_capacity(1 << e);
    for chosen in 0u64..(1u64 << e) {
        // union-find over target indices restricted to the subtree
        let mut comp: HashMap<usize, usize> = verts.iter().map(|&v| (v, v)).collect();
        fn find(comp: &mut HashMap<usize, usize>, v: usize) -> usize {
            let p = comp[&v];
            if p == v {
                v
            } else {
                let r = find(comp, p);
                comp.insert(v, r);
                r
            }
        }
        for (i, &(a, b)) in edges.iter().enumerate() {
            if chosen >> i & 1 == 1 {
                let ra = find(&mut comp, a);
                let rb = find(&mut comp, b);
                if ra != rb {
                    comp.insert(ra, rb);
                }
            }
        }
        let mut groups: HashMap<usize, u64> = HashMap::new();
        for &v in &verts {
            let r = find(&mut comp, v);
            *groups.entry(r).or_default() |= 1 << v;
        }
        let mut fibers: Vec<u64> = groups.into_values().collect();
        fibers.sort_by_key(|f| f.trailing_zeros());
        out.push(fibers);
    }
    out
}

/// All quotients of `s` itself (as correspondences with full sub-vertex set).
pub fn enumerate_quotients(s: &RootedTree) -> Result<Vec<Correspondence>> {
    check_size(s)?;
    let target = Arc::new(s.clone());
    let full = if s.len() == 64 { u64::MAX } else { (1u64 << s.len()) - 1 };
    quotient_fibers(s, full)
        .into_iter()
        .map(|f| Correspondence::new(target.clone(), full, f))
        .collect()
}

/// Every correspondence into `t`, subtrees ascending then edge subsets ascending.
pub fn enumerate_correspondences(t: Arc<RootedTree>) -> Result<Vec<Correspondence>> {
    check_size(&t)?;
    let mut out = Vec::new();
    for sub in enumerate_subtrees(&t) {
        for fibers in quotient_fibers(&t, sub) {
            out.push(Correspondence::new(t.clone(), sub, fibers)?);
        }
    }
    Ok(out)
}

/// The finite poset of correspondences into a tree.
#[derive(Clone, Debug)]
pub struct CorrespondencePoset {
    tree: Arc<RootedTree>,
    elements: Vec<Correspondence>,
    /// `up[i]` holds `j` iff `elements[i] <= elements[j]`
    up: Vec<FixedBitSet>,
    index: HashMap<(u64, Vec<u64>), usize>,
    minimum: usize,
}

impl CorrespondencePoset {
    /// `p >= p′` iff some `q` over the derived tree of `p′` has `p = q ∘ p′`;
    /// the up-set of `p′` is found by composing with every such `q`.
    pub fn build(t: &RootedTree) -> Result<Self> {
        let tree = Arc::new(t.clone());
        let elements = enumerate_correspondences(tree.clone())?;
        let index: HashMap<(u64, Vec<u64>), usize> =
            elements.iter().enumerate().map(|(i, p)| ((p.sub, p.fibers.clone()), i)).collect();
        let n = elements.len();
        let mut up = Vec::with_capacity(n);
        for p in &elements {
            let mut set = FixedBitSet::with_capacity(n);
            let over = Arc::new(p.derived().clone());
            for q in enumerate_correspondences(over)? {
                let r = compose(&q, p)?;
                let j = *index
                    .get(&(r.sub, r.fibers.clone()))
                    .ok_or_else(|| Error::Internal(format!("composite {r} missing from the poset")))?;
                set.insert(j);
            }
            up.push(set);
        }
        let minimum = elements
            .iter()
            .position(|p| p.is_identity())
            .ok_or_else(|| Error::Internal("identity correspondence missing".into()))?;
        Ok(CorrespondencePoset { tree, elements, up, index, minimum })
    }

    pub fn tree(&self) -> &Arc<RootedTree> {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Correspondence] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> &Correspondence {
        &self.elements[i]
    }

    pub fn minimum(&self) -> usize {
        self.minimum
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.up[i].contains(j)
    }

    pub fn up_set(&self, i: usize) -> &FixedBitSet {
        &self.up[i]
    }

    /// Elements `<= j`.
    pub fn down_set(&self, j: usize) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.len());
        for i in 0..self.len() {
            if self.up[i].contains(j) {
                out.insert(i);
            }
        }
        out
    }

    pub fn index_of(&self, p: &Correspondence) -> Option<usize> {
        self.index.get(&(p.sub, p.fibers.clone())).copied()
    }

    /// Number of pairs (p, q) with p in the poset and q a correspondence over R_p.
    pub fn composable_pair_count(&self) -> Result<usize> {
        let mut total = 0;
        for p in &self.elements {
            total += enumerate_correspondences(Arc::new(p.derived().clone()))?.len();
        }
        Ok(total)
    }

    /// Verify reflexivity, antisymmetry, transitivity and the unique minimum.
    pub fn check_partial_order(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if !self.leq(i, i) {
                return Err(Error::Internal(format!("relation not reflexive at {}", self.elements[i])));
            }
            if !self.leq(self.minimum, i) {
                return Err(Error::Internal("identity is not below every element".into()));
            }
            for j in self.up[i].ones() {
                if j != i && self.leq(j, i) {
                    return Err(Error::Internal("relation not antisymmetric".into()));
                }
                if !self.up[j].is_subset(&self.up[i]) {
                    return Err(Error::Internal("relation not transitive".into()));
                }
            }
        }
        let minima = (0..n).filter(|&j| (0..n).all(|i| i == j || !self.leq(i, j))).count();
        if minima != 1 {
            return Err(Error::Internal(format!("{minima} minimal elements")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(s: &str) -> Arc<RootedTree> {
        Arc::new(RootedTree::parse(s).unwrap())
    }

    /// Independent oracle: every vertex subset checked for connectivity by graph search.
    fn brute_subtrees(t: &RootedTree) -> Vec<u64> {
        let n = t.len();
        let mut out = Vec::new();
        for mask in 1u64..(1 << n) {
            let start = mask.trailing_zeros() as usize;
            let mut seen = 1u64 << start;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                let mut nbrs: Vec<usize> = t.children(v).to_vec();
                nbrs.extend(t.parent(v));
                for w in nbrs {
                    if mask >> w & 1 == 1 && seen >> w & 1 == 0 {
                        seen |= 1 << w;
                        stack.push(w);
                    }
                }
            }
            if seen == mask {
                out.push(mask);
            }
        }
        out
    }

    #[test]
    fn subtree_counts() {
        assert_eq!(enumerate_subtrees(&tree("(a)")).len(), 1);
        assert_eq!(enumerate_subtrees(&tree("(a (b))")).len(), 3);
        let a3 = tree("(a (b (c)))");
        let subs = enumerate_subtrees(&a3);
        assert_eq!(subs.len(), 6);
        assert!(!subs.contains(&0b101));
        for n in 1..=6 {
            for t in crate::tree::rooted_trees(n) {
                assert_eq!(enumerate_subtrees(&t), brute_subtrees(&t));
            }
        }
    }

    #[test]
    fn quotient_counts() {
        assert_eq!(enumerate_quotients(&tree("(a)")).unwrap().len(), 1);
        assert_eq!(enumerate_quotients(&tree("(a (b))")).unwrap().len(), 2);
        assert_eq!(enumerate_quotients(&tree("(a (b (c)))")).unwrap().len(), 4);
    }

    #[test]
    fn poset_sizes() {
        for (s, n) in [("(a)", 1), ("(a (b))", 4), ("(a (b (c)))", 11)] {
            let p = CorrespondencePoset::build(&tree(s)).unwrap();
            assert_eq!(p.len(), n, "{s}");
            assert!(p.get(p.minimum()).is_identity());
        }
    }

    #[test]
    fn compose_example() {
        let t = tree("(a (b (c)))");
        let p = Correspondence::from_names(t.clone(), &[&["a"], &["b"]]).unwrap();
        let r = Arc::new(p.derived().clone());
        let q = Correspondence::new(r.clone(), 0b11, vec![0b11]).unwrap();
        let c = compose(&q, &p).unwrap();
        assert_eq!(c, Correspondence::from_names(t.clone(), &[&["a", "b"]]).unwrap());
        assert_eq!(c.derived().len(), 1);
        let id_r = Correspondence::identity(r).unwrap();
        assert_eq!(compose(&id_r, &p).unwrap(), p);
        let id_t = Correspondence::identity(t.clone()).unwrap();
        let q_t = Correspondence::from_names(t.clone(), &[&["b", "c"]]).unwrap();
        assert_eq!(compose(&q_t, &id_t).unwrap(), q_t);
        assert!(matches!(compose(&q_t, &p), Err(Error::Composition(_))));
    }

    #[test]
    fn relation_matches_refinement_criterion() {
        // closed form: p >= p′ iff S_p ⊆ S_p′ and every p-fiber is a union of p′-fibers
        for n in 1..=5 {
            for t in crate::tree::rooted_trees(n) {
                let poset = CorrespondencePoset::build(&t).unwrap();
                poset.check_partial_order().unwrap();
                for i in 0..poset.len() {
                    for j in 0..poset.len() {
                        let lo = poset.get(i);
                        let hi = poset.get(j);
                        let refine = hi.sub_mask() & !lo.sub_mask() == 0
                            && hi.fibers().iter().all(|&f| {
                                lo.fibers().iter().filter(|&&g| g & f != 0).all(|&g| g & !f == 0)
                            });
                        assert_eq!(poset.leq(i, j), refine, "{} vs {}", lo, hi);
                    }
                }
            }
        }
    }
}
