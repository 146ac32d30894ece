//! Rooted trees and forests, the leafy variant, and small tree enumerators.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite rooted forest. Vertices are indexed `0..len()` and carry unique names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedForest {
    names: Vec<String>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl RootedForest {
    pub fn new(names: Vec<String>, parent: Vec<Option<usize>>) -> Result<Self> {
        if names.len() != parent.len() {
            return Err(Error::Validation("names and parent lengths differ".into()));
        }
        if names.is_empty() {
            return Err(Error::Validation("forest must be nonempty".into()));
        }
        let n = names.len();
        let mut index = HashMap::with_capacity(n);
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Validation("empty vertex name".into()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vertex name '{name}'")));
            }
        }
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::Validation(format!("parent index {p} out of range")));
                }
                children[p].push(i);
            }
        }
        // every parent chain must terminate within n steps
        for start in 0..n {
            let mut v = start;
            let mut steps = 0;
            while let Some(p) = parent[v] {
                v = p;
                steps += 1;
                if steps > n {
                    return Err(Error::Validation(format!(
                        "parent map has a cycle through '{}'",
                        names[start]
                    )));
                }
            }
        }
        Ok(RootedForest { names, parent, children, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.parent[v].is_none()).collect()
    }

    /// Leaves are the maxima of the partial order (no children).
    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_leaf(v)).collect()
    }

    /// `a <= b` iff `a` lies on the parent chain of `b` (inclusive).
    pub fn leq(&self, a: usize, b: usize) -> bool {
        let mut v = b;
        loop {
            if v == a {
                return true;
            }
            match self.parent[v] {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    /// Strict ancestors of `v`, nearest first.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out
    }

    /// (parent, child) pairs ordered by child index.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter_map(|c| self.parent[c].map(|p| (p, c))).collect()
    }

    /// Parents before children; roots in index order.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order = self.roots();
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            order.extend_from_slice(&self.children[v]);
            i += 1;
        }
        order
    }

    /// Connected components, each listed in topological order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        self.roots()
            .into_iter()
            .map(|r| {
                let mut comp = vec![r];
                let mut i = 0;
                while i < comp.len() {
                    let v = comp[i];
                    comp.extend_from_slice(&self.children[v]);
                    i += 1;
                }
                comp
            })
            .collect()
    }

    /// Component trees, with their vertex lists in the forest indexing.
    pub fn component_trees(&self) -> Vec<(RootedTree, Vec<usize>)> {
        self.components()
            .into_iter()
            .map(|comp| {
                let tree = self.induced(&comp).expect("component is a tree");
                (tree, comp)
            })
            .collect()
    }

    /// The full subgraph on a connected vertex set, re-indexed in the given order.
    pub fn induced(&self, verts: &[usize]) -> Result<RootedTree> {
        let pos: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let names = verts.iter().map(|&v| self.names[v].clone()).collect();
        let parent = verts
            .iter()
            .map(|&v| self.parent[v].and_then(|p| pos.get(&p).copied()))
            .collect();
        RootedTree::from_forest(RootedForest::new(names, parent)?)
    }

    /// Rooted canonical encoding of the subtree hanging at `v`.
    pub fn canonical_at(&self, v: usize) -> String {
        let mut parts: Vec<String> = self.children[v].iter().map(|&c| self.canonical_at(c)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }

    /// Isomorphism invariant of the rooted forest (multiset of component encodings).
    pub fn canonical(&self) -> String {
        let mut parts: Vec<String> = self.roots().into_iter().map(|r| self.canonical_at(r)).collect();
        parts.sort();
        parts.join(",")
    }

    pub fn to_json(&self, marked: &[String]) -> ForestJson {
        let parent = (0..self.len())
            .filter_map(|v| self.parent[v].map(|p| (self.names[v].clone(), self.names[p].clone())))
            .collect();
        let roots: Vec<String> = self.roots().into_iter().map(|r| self.names[r].clone()).collect();
        let root = if roots.len() == 1 { RootField::One(roots[0].clone()) } else { RootField::Many(roots) };
        ForestJson { vertices: self.names.clone(), parent, root, marked: marked.to_vec() }
    }

    pub fn from_json(json: &ForestJson) -> Result<Self> {
        let names = json.vertices.clone();
        let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut parent = vec![None; names.len()];
        for (child, par) in &json.parent {
            let c = *index
                .get(child.as_str())
                .ok_or_else(|| Error::Parse(format!("unknown vertex '{child}' in parent map")))?;
            let p = *index
                .get(par.as_str())
                .ok_or_else(|| Error::Parse(format!("unknown vertex '{par}' in parent map")))?;
            parent[c] = Some(p);
        }
        let forest = RootedForest::new(names, parent)?;
        let declared: BTreeSet<&str> = match &json.root {
            RootField::One(r) => [r.as_str()].into_iter().collect(),
            RootField::Many(rs) => rs.iter().map(String::as_str).collect(),
        };
        let actual: BTreeSet<&str> = forest.roots().into_iter().map(|r| forest.name(r)).collect();
        if declared != actual {
            return Err(Error::Validation("declared roots do not match the parent map".into()));
        }
        Ok(forest)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RootField {
    One(String),
    Many(Vec<String>),
}

/// JSON form shared by trees and leafy forests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestJson {
    pub vertices: Vec<String>,
    pub parent: BTreeMap<String, String>,
    pub root: RootField,
    #[serde(default)]
    pub marked: Vec<String>,
}

/// A rooted forest with exactly one root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    forest: RootedForest,
    root: usize,
}

impl Deref for RootedTree {
    type Target = RootedForest;
    fn deref(&self) -> &RootedForest {
        &self.forest
    }
}

impl RootedTree {
    pub fn new(names: Vec<String>, parent: Vec<Option<usize>>) -> Result<Self> {
        Self::from_forest(RootedForest::new(names, parent)?)
    }

    pub fn from_forest(forest: RootedForest) -> Result<Self> {
        let roots = forest.roots();
        if roots.len() != 1 {
            return Err(Error::Validation(format!("a tree needs one root, found {}", roots.len())));
        }
        Ok(RootedTree { root: roots[0], forest })
    }

    /// Path a0 - a1 - ... rooted at a0.
    pub fn path(n: usize) -> Self {
        let names = (0..n).map(|i| format!("a{i}")).collect();
        let parent = (0..n).map(|i| if i == 0 { None } else { Some(i - 1) }).collect();
        Self::new(names, parent).expect("path is a tree")
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn as_forest(&self) -> &RootedForest {
        &self.forest
    }

    /// Parse `(name child child ...)`; a child is a nested group or a bare name.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text);
        let mut names = Vec::new();
        let mut parent = Vec::new();
        let mut seen = HashMap::new();
        let mut pos = 0;
        if tokens.is_empty() {
            return Err(Error::Parse("empty input".into()));
        }
        parse_group(&tokens, &mut pos, None, &mut names, &mut parent, &mut seen)?;
        if pos != tokens.len() {
            let tok = &tokens[pos];
            return Err(Error::Parse(match tok {
                Tok::Close => "unbalanced: extra ')'".to_string(),
                _ => format!("unexpected token '{}' after the root group", tok),
            }));
        }
        Self::new(names, parent)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(self.root, &mut out);
        out
    }

    fn write_text(&self, v: usize, out: &mut String) {
        out.push('(');
        out.push_str(self.name(v));
        for &c in self.children(v) {
            out.push(' ');
            self.write_text(c, out);
        }
        out.push(')');
    }

    pub fn canonical(&self) -> String {
        self.canonical_at(self.root)
    }

    pub fn is_isomorphic(&self, other: &RootedTree) -> bool {
        self.len() == other.len() && self.canonical() == other.canonical()
    }

    pub fn to_json_value(&self) -> ForestJson {
        self.forest.to_json(&[])
    }

    pub fn from_json_value(json: &ForestJson) -> Result<Self> {
        if !json.marked.is_empty() {
            return Err(Error::Validation("a plain tree carries no marked vertices".into()));
        }
        Self::from_forest(RootedForest::from_json(json)?)
    }

    /// Copy of the tree with one new leaf attached below `v`.
    pub fn with_leaf(&self, v: usize, name: String) -> Result<Self> {
        let mut names = self.names().to_vec();
        let mut parent = self.parents().to_vec();
        names.push(name);
        parent.push(Some(v));
        Self::new(names, parent)
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    Name(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Open => f.write_str("("),
            Tok::Close => f.write_str(")"),
            Tok::Name(s) => f.write_str(s),
        }
    }
}

fn tokenize(text: &str) -> Vec<Tok> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(Tok::Name(std::mem::take(&mut cur)));
                }
                out.push(if ch == '(' { Tok::Open } else { Tok::Close });
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(Tok::Name(std::mem::take(&mut cur)));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(Tok::Name(cur));
    }
    out
}

fn push_vertex(
    name: &str,
    par: Option<usize>,
    names: &mut Vec<String>,
    parent: &mut Vec<Option<usize>>,
    seen: &mut HashMap<String, usize>,
) -> Result<usize> {
    if seen.contains_key(name) {
        return Err(Error::Parse(format!("duplicate name '{name}'")));
    }
    let id = names.len();
    seen.insert(name.to_string(), id);
    names.push(name.to_string());
    parent.push(par);
    Ok(id)
}

fn parse_group(
    tokens: &[Tok],
    pos: &mut usize,
    par: Option<usize>,
    names: &mut Vec<String>,
    parent: &mut Vec<Option<usize>>,
    seen: &mut HashMap<String, usize>,
) -> Result<()> {
    match tokens.get(*pos) {
        Some(Tok::Open) => *pos += 1,
        Some(tok) => return Err(Error::Parse(format!("expected '(' but found '{tok}'"))),
        None => return Err(Error::Parse("unbalanced: unexpected end of input".into())),
    }
    let id = match tokens.get(*pos) {
        Some(Tok::Name(n)) => {
            *pos += 1;
            push_vertex(n, par, names, parent, seen)?
        }
        Some(tok) => return Err(Error::Parse(format!("expected a vertex name but found '{tok}'"))),
        None => return Err(Error::Parse("unbalanced: unexpected end of input".into())),
    };
    loop {
        match tokens.get(*pos) {
            Some(Tok::Close) => {
                *pos += 1;
                return Ok(());
            }
            Some(Tok::Open) => parse_group(tokens, pos, Some(id), names, parent, seen)?,
            Some(Tok::Name(n)) => {
                *pos += 1;
                push_vertex(n, Some(id), names, parent, seen)?;
            }
            None => return Err(Error::Parse("unbalanced: missing ')'".into())),
        }
    }
}

/// A rooted forest together with a set of marked leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafyRootedForest {
    pub trees: Vec<RootedTree>,
    pub marked: Vec<String>,
}

/// F+ together with the original marked vertices and the added ones.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafyPlus {
    pub forest: RootedForest,
    /// marked vertices, indices into `forest`
    pub ell: Vec<usize>,
    /// added vertices; `ell_plus[k]` sits directly above `ell[k]`
    pub ell_plus: Vec<usize>,
}

impl LeafyRootedForest {
    pub fn new(trees: Vec<RootedTree>, marked: Vec<String>) -> Result<Self> {
        let f = LeafyRootedForest { trees, marked };
        f.validate()?;
        Ok(f)
    }

    pub fn single(tree: RootedTree, marked: &[&str]) -> Result<Self> {
        Self::new(vec![tree], marked.iter().map(|s| s.to_string()).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Validation("leafy forest needs at least one tree".into()));
        }
        let forest = self.to_forest()?;
        let mut seen = BTreeSet::new();
        for m in &self.marked {
            let v = forest
                .index_of(m)
                .ok_or_else(|| Error::Validation(format!("marked vertex '{m}' is not in the forest")))?;
            if !forest.is_leaf(v) {
                return Err(Error::Validation(format!("marked vertex '{m}' is not a leaf")));
            }
            if !seen.insert(m.as_str()) {
                return Err(Error::Validation(format!("vertex '{m}' marked twice")));
            }
        }
        Ok(())
    }

    /// All component trees merged into one forest, in component order.
    pub fn to_forest(&self) -> Result<RootedForest> {
        let mut names = Vec::new();
        let mut parent = Vec::new();
        for t in &self.trees {
            let off = names.len();
            names.extend(t.names().iter().cloned());
            parent.extend(t.parents().iter().map(|p| p.map(|p| p + off)));
        }
        RootedForest::new(names, parent)
    }

    pub fn leafy_plus(&self) -> Result<LeafyPlus> {
        self.validate()?;
        let forest = self.to_forest()?;
        let mut names = forest.names().to_vec();
        let mut parent = forest.parents().to_vec();
        let mut ell = Vec::new();
        let mut ell_plus = Vec::new();
        for m in &self.marked {
            let v = forest.index_of(m).expect("validated");
            let mut plus = format!("{m}+");
            while names.contains(&plus) {
                plus.push('+');
            }
            ell.push(v);
            ell_plus.push(names.len());
            names.push(plus);
            parent.push(Some(v));
        }
        Ok(LeafyPlus { forest: RootedForest::new(names, parent)?, ell, ell_plus })
    }

    pub fn to_json(&self) -> Result<ForestJson> {
        Ok(self.to_forest()?.to_json(&self.marked))
    }

    pub fn from_json(json: &ForestJson) -> Result<Self> {
        let forest = RootedForest::from_json(json)?;
        let trees = forest.component_trees().into_iter().map(|(t, _)| t).collect();
        Self::new(trees, json.marked.clone())
    }
}

/// All rooted trees on `n` vertices up to isomorphism, sorted by canonical form.
pub fn rooted_trees(n: usize) -> Vec<RootedTree> {
    if n == 0 {
        return Vec::new();
    }
    let mut level: BTreeMap<String, RootedTree> = BTreeMap::new();
    let t = RootedTree::new(vec!["v0".into()], vec![None]).expect("singleton");
    level.insert(t.canonical(), t);
    for k in 1..n {
        let mut next = BTreeMap::new();
        for t in level.values() {
            for v in 0..t.len() {
                let grown = t.with_leaf(v, format!("v{k}")).expect("leaf attach");
                next.entry(grown.canonical()).or_insert(grown);
            }
        }
        level = next;
    }
    level.into_values().collect()
}

/// A uniformly random labeled tree (Prüfer code) with a uniformly random root.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> RootedTree {
    assert!(n >= 1);
    let mut adj = vec![Vec::new(); n];
    if n == 2 {
        adj[0].push(1);
        adj[1].push(0);
    } else if n > 2 {
        let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let mut degree = vec![1usize; n];
        for &c in &code {
            degree[c] += 1;
        }
        let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        for &c in &code {
            let leaf = *leaves.iter().next().expect("a leaf exists");
            leaves.remove(&leaf);
            adj[leaf].push(c);
            adj[c].push(leaf);
            degree[c] -= 1;
            if degree[c] == 1 {
                leaves.insert(c);
            }
        }
        let rest: Vec<usize> = leaves.into_iter().collect();
        adj[rest[0]].push(rest[1]);
        adj[rest[1]].push(rest[0]);
    }
    let root = rng.gen_range(0..n);
    let mut parent = vec![None; n];
    let mut visited = vec![false; n];
    let mut stack = vec![root];
    visited[root] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !visited[w] {
                visited[w] = true;
                parent[w] = Some(v);
                stack.push(w);
            }
        }
    }
    let names = (0..n).map(|i| format!("v{i}")).collect();
    RootedTree::new(names, parent).expect("Prüfer decode yields a tree")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let t = RootedTree::parse("(a)").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.name(t.root()), "a");
        let t = RootedTree::parse("(a (b))").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.parent(t.index_of("b").unwrap()), Some(t.index_of("a").unwrap()));
        let err = RootedTree::parse("(a (b)").unwrap_err().to_string();
        assert!(err.contains("unbalanced"), "{err}");
        let err = RootedTree::parse("(a (a))").unwrap_err().to_string();
        assert!(err.contains("'a'"), "{err}");
    }

    #[test]
    fn text_round_trip() {
        let src = "(r (x (y) (z)) (w))";
        let t = RootedTree::parse(src).unwrap();
        assert_eq!(t.to_text(), src);
        assert_eq!(RootedTree::parse("(r x (w))").unwrap().to_text(), "(r (x) (w))");
    }

    #[test]
    fn json_round_trip() {
        let t = RootedTree::parse("(r (x (y)) (w))").unwrap();
        let j = serde_json::to_string(&t.to_json_value()).unwrap();
        let back: ForestJson = serde_json::from_str(&j).unwrap();
        assert_eq!(RootedTree::from_json_value(&back).unwrap(), t);
    }

    #[test]
    fn rooted_tree_counts() {
        let counts: Vec<usize> = (1..=7).map(|n| rooted_trees(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20, 48]);
    }

    #[test]
    fn leafy_plus_examples() {
        let single = LeafyRootedForest::single(RootedTree::parse("(a)").unwrap(), &["a"]).unwrap();
        let plus = single.leafy_plus().unwrap();
        assert_eq!(plus.forest.len(), 2);
        let t = RootedTree::from_forest(plus.forest.clone()).unwrap();
        assert!(t.is_isomorphic(&RootedTree::path(2)));
        assert_eq!(t.name(t.root()), "a");

        let a2 = LeafyRootedForest::single(RootedTree::parse("(a (b))").unwrap(), &["b"]).unwrap();
        let t = RootedTree::from_forest(a2.leafy_plus().unwrap().forest).unwrap();
        assert!(t.is_isomorphic(&RootedTree::path(3)));

        let none = LeafyRootedForest::single(RootedTree::parse("(a (b))").unwrap(), &[]).unwrap();
        assert_eq!(none.leafy_plus().unwrap().forest, *none.trees[0].as_forest());

        assert!(LeafyRootedForest::single(RootedTree::parse("(a (b))").unwrap(), &["a"]).is_err());
    }
}
