//! K_0 stalk data on arboreal graphs and its global sections.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expand::{
    draw_valid_constants, total_expansion, ArborealGraph, Census, ClassifyTolerances, ConstantsRanges, CurveGerm2D,
    GeometryTolerances, Mode, NodeKind, Role,
};
use crate::linalg::{rank_mod_p, rank_rational, smith_diagonal, IntMatrix};

/// Restriction from a node stalk to the stalk `Z` of an incident edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction {
    pub node: usize,
    pub edge: usize,
    /// which end of the edge sits at the node
    pub end: usize,
    pub row: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StalkDiagram {
    /// rank of each node stalk
    pub node_ranks: Vec<usize>,
    pub edge_count: usize,
    pub restrictions: Vec<Restriction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalSections {
    pub rank: usize,
    pub invariant_factors: Vec<u64>,
}

fn role_row(role: Role) -> Vec<i64> {
    match role {
        Role::ThroughFirst | Role::FirstCurve => vec![1, 0],
        Role::ThroughSecond | Role::SecondCurve => vec![0, 1],
        Role::Terminator => vec![1, 1],
        Role::End => vec![1],
    }
}

/// Stalks from node types: A2 and X_CROSS carry `Z^2`, END carries `Z`, edges `Z`.
pub fn build_stalk_diagram(graph: &ArborealGraph) -> Result<StalkDiagram> {
    let mut node_ranks = Vec::with_capacity(graph.nodes.len());
    let mut restrictions = Vec::new();
    for (v, node) in graph.nodes.iter().enumerate() {
        let rank = match node.kind {
            NodeKind::A2 | NodeKind::XCross => 2,
            NodeKind::End => 1,
            NodeKind::NotArboreal => {
                return Err(Error::NotArboreal {
                    x: node.point[0],
                    y: node.point[1],
                    message: node.diagnostic.clone().unwrap_or_else(|| "unclassified node".into()),
                })
            }
        };
        if node.incidences.len() != graph.incident(v).len() {
            return Err(Error::Validation(format!("node {v} has incidences without roles; classify the graph first")));
        }
        node_ranks.push(rank);
        for inc in &node.incidences {
            restrictions.push(Restriction { node: v, edge: inc.edge, end: inc.end, row: role_row(inc.role) });
        }
    }
    Ok(StalkDiagram { node_ranks, edge_count: graph.edges.len(), restrictions })
}

impl StalkDiagram {
    fn offsets(&self) -> (Vec<usize>, usize) {
        let mut off = Vec::with_capacity(self.node_ranks.len());
        let mut total = 0;
        for &r in &self.node_ranks {
            off.push(total);
            total += r;
        }
        (off, total)
    }

    pub fn node_variables(&self) -> usize {
        self.node_ranks.iter().sum()
    }

    /// One row per restriction: `R x_node - x_edge`. Columns: node stalks, then edges.
    pub fn constraint_matrix(&self) -> IntMatrix {
        let (off, nv) = self.offsets();
        let cols = nv + self.edge_count;
        self.restrictions
            .iter()
            .map(|r| {
                let mut row = vec![0i64; cols];
                for (k, &x) in r.row.iter().enumerate() {
                    row[off[r.node] + k] += x;
                }
                row[nv + r.edge] -= 1;
                row
            })
            .collect()
    }

    /// Insert a valence-2 node with stalk `Z` and identity restrictions in the middle of `edge`.
    pub fn subdivide(&self, edge: usize) -> Result<StalkDiagram> {
        if edge >= self.edge_count {
            return Err(Error::Validation(format!("no edge {edge}")));
        }
        let mut out = self.clone();
        let new_edge = out.edge_count;
        let new_node = out.node_ranks.len();
        out.edge_count += 1;
        out.node_ranks.push(1);
        for r in out.restrictions.iter_mut() {
            if r.edge == edge && r.end == 1 {
                r.edge = new_edge;
            }
        }
        out.restrictions.push(Restriction { node: new_node, edge, end: 1, row: vec![1] });
        out.restrictions.push(Restriction { node: new_node, edge: new_edge, end: 0, row: vec![1] });
        Ok(out)
    }

    /// Renumber nodes and edges: new index of node `v` is `node_perm[v]`.
    pub fn relabel(&self, node_perm: &[usize], edge_perm: &[usize]) -> StalkDiagram {
        let mut node_ranks = vec![0; self.node_ranks.len()];
        for (v, &r) in self.node_ranks.iter().enumerate() {
            node_ranks[node_perm[v]] = r;
        }
        let mut restrictions: Vec<Restriction> = self
            .restrictions
            .iter()
            .map(|r| Restriction { node: node_perm[r.node], edge: edge_perm[r.edge], end: r.end, row: r.row.clone() })
            .collect();
        restrictions.reverse();
        StalkDiagram { node_ranks, edge_count: self.edge_count, restrictions }
    }
}

/// Kernel of the constraint matrix over Z: its rank, and the invariant factors
/// greater than one of the constraint matrix.
pub fn global_k0(d: &StalkDiagram) -> GlobalSections {
    let m = d.constraint_matrix();
    let cols = d.node_variables() + d.edge_count;
    if m.is_empty() {
        return GlobalSections { rank: cols, invariant_factors: Vec::new() };
    }
    let rank = cols - rank_rational(&m);
    let invariant_factors = smith_diagonal(&m)
        .into_iter()
        .filter(|x| *x > 1.into())
        .map(|x| u64::try_from(x).expect("invariant factor fits in u64"))
        .collect();
    GlobalSections { rank, invariant_factors }
}

/// Number of sections mod `p`, by enumerating every node assignment in `F_p`.
/// Edge values are forced by their first restriction; edges without nodes are free.
pub fn brute_force_section_count(d: &StalkDiagram, p: u64, max_variables: usize) -> Result<u128> {
    let nv = d.node_variables();
    if nv > max_variables {
        return Err(Error::TooLarge(format!("{nv} node variables for a brute-force count")));
    }
    let (off, _) = d.offsets();
    let free_edges = (0..d.edge_count).filter(|&e| !d.restrictions.iter().any(|r| r.edge == e)).count();
    let pi = p as i64;
    let total = (p as u128).pow(nv as u32);
    let mut x = vec![0i64; nv];
    let mut count: u128 = 0;
    let mut edge_val: Vec<Option<i64>> = vec![None; d.edge_count];
    for code in 0..total {
        let mut c = code;
        for xi in x.iter_mut() {
            *xi = (c % p as u128) as i64;
            c /= p as u128;
        }
        edge_val.iter_mut().for_each(|v| *v = None);
        let ok = d.restrictions.iter().all(|r| {
            let val = r.row.iter().enumerate().map(|(k, &a)| a * x[off[r.node] + k]).sum::<i64>().rem_euclid(pi);
            match edge_val[r.edge] {
                None => {
                    edge_val[r.edge] = Some(val);
                    true
                }
                Some(prev) => prev == val,
            }
        });
        if ok {
            count += 1;
        }
    }
    Ok(count * (p as u128).pow(free_edges as u32))
}

/// `log_p` of the brute-force count, when the count is a power of `p`.
pub fn brute_force_rank(d: &StalkDiagram, p: u64, max_variables: usize) -> Result<usize> {
    let mut n = brute_force_section_count(d, p, max_variables)?;
    let mut k = 0;
    while n > 1 {
        if n % p as u128 != 0 {
            return Err(Error::Internal("section count is not a power of p".into()));
        }
        n /= p as u128;
        k += 1;
    }
    Ok(k)
}

/// Rank of the kernel over `F_p`, for comparison with [`brute_force_rank`].
pub fn rank_mod(d: &StalkDiagram, p: u64) -> usize {
    let m = d.constraint_matrix();
    let cols = d.node_variables() + d.edge_count;
    cols - if m.is_empty() { 0 } else { rank_mod_p(&m, p) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawResult {
    pub mode: Mode,
    pub seed: u64,
    pub census: Census,
    pub sections: GlobalSections,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub germ: String,
    pub draws: Vec<DrawResult>,
    /// sections agree across all draws of the full mode
    pub full_consistent: bool,
    /// same for intro mode; `None` when intro mode does not apply
    pub intro_consistent: Option<bool>,
    /// full and intro sections coincide (reported, not required)
    pub modes_agree: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intro_skipped: Option<String>,
}

fn all_equal<T: PartialEq>(items: &[&T]) -> bool {
    items.windows(2).all(|w| w[0] == w[1])
}

/// Expand under `draws` constant draws (seeds `seed, seed+1, ...`) in both modes and
/// compare the global sections.
pub fn invariance_report(
    name: &str,
    germ: &CurveGerm2D,
    draws: usize,
    seed: u64,
    ranges: &ConstantsRanges,
    geometry: &GeometryTolerances,
    classify: &ClassifyTolerances,
) -> Result<InvarianceReport> {
    if draws < 2 {
        return Err(Error::Validation("invariance needs at least two draws".into()));
    }
    let single_coray = germ.stratify()?.corays.len() <= 1;
    let mut results = Vec::new();
    let mut intro_skipped = None;
    for mode in [Mode::Full, Mode::Intro] {
        if mode == Mode::Intro && !single_coray {
            intro_skipped = Some("intro mode expands a single coray at the origin".to_string());
            continue;
        }
        for k in 0..draws as u64 {
            let s = seed.wrapping_add(k);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let c = draw_valid_constants(germ, ranges, mode, geometry, &mut rng)?;
            let graph = total_expansion(germ, &c, mode, geometry, classify)?;
            let sections = global_k0(&build_stalk_diagram(&graph)?);
            results.push(DrawResult { mode, seed: s, census: graph.census(), sections });
        }
    }
    let of = |m: Mode| results.iter().filter(|r| r.mode == m).map(|r| &r.sections).collect::<Vec<_>>();
    let full = of(Mode::Full);
    let intro = of(Mode::Intro);
    let full_consistent = all_equal(&full);
    let intro_consistent = (!intro.is_empty()).then(|| all_equal(&intro));
    let modes_agree = (!intro.is_empty()).then(|| full_consistent && intro_consistent == Some(true) && full[0] == intro[0]);
    Ok(InvarianceReport { germ: name.to_string(), draws: results, full_consistent, intro_consistent, modes_agree, intro_skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A2 node 0 with through-edges 0, 1 open and terminator edge 2 capped by END node 1.
    fn capped_a2() -> StalkDiagram {
        StalkDiagram {
            node_ranks: vec![2, 1],
            edge_count: 3,
            restrictions: vec![
                Restriction { node: 0, edge: 0, end: 0, row: vec![1, 0] },
                Restriction { node: 0, edge: 1, end: 0, row: vec![0, 1] },
                Restriction { node: 0, edge: 2, end: 0, row: vec![1, 1] },
                Restriction { node: 1, edge: 2, end: 1, row: vec![1] },
            ],
        }
    }

    #[test]
    fn single_edge() {
        let d = StalkDiagram { node_ranks: vec![], edge_count: 1, restrictions: vec![] };
        assert_eq!(global_k0(&d), GlobalSections { rank: 1, invariant_factors: vec![] });
        assert_eq!(brute_force_rank(&d, 2, 20).unwrap(), 1);
    }

    #[test]
    fn capped_a2_matches_brute_force() {
        let d = capped_a2();
        let g = global_k0(&d);
        assert_eq!(g.rank, brute_force_rank(&d, 2, 20).unwrap());
        assert_eq!(g.rank, brute_force_rank(&d, 3, 20).unwrap());
        assert_eq!(g.rank, 2);
        assert_eq!(global_k0(&d.subdivide(2).unwrap()), g);
        assert_eq!(global_k0(&d.relabel(&[1, 0], &[2, 0, 1])), g);
    }

    #[test]
    fn a2_rows_add_up() {
        let sum: Vec<i64> = role_row(Role::ThroughFirst).iter().zip(role_row(Role::ThroughSecond)).map(|(a, b)| a + b).collect();
        assert_eq!(sum, role_row(Role::Terminator));
    }
}
