use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use arboreal::config::Config;
use arboreal::correspondence::{compose, enumerate_correspondences, CorrespondencePoset};
use arboreal::expand::{corpus, draw_valid_constants, total_expansion, Mode, NodeKind};
use arboreal::linalg::Coefficients;
use arboreal::models::{comparison_map, h_all, SmoothingProfile};
use arboreal::sections::{build_stalk_diagram, global_k0};
use arboreal::topology::build_link_complex;
use arboreal::tree::{random_tree, RootedTree};

fn tree(n: usize, seed: u64) -> RootedTree {
    random_tree(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_is_associative(n in 1usize..=5, seed: u64, i: usize, j: usize, k: usize) {
        let t = Arc::new(tree(n, seed));
        let ps = enumerate_correspondences(t).unwrap();
        let p = &ps[i % ps.len()];
        let qs = enumerate_correspondences(Arc::new(p.derived().clone())).unwrap();
        let q = &qs[j % qs.len()];
        let rs = enumerate_correspondences(Arc::new(q.derived().clone())).unwrap();
        let r = &rs[k % rs.len()];
        let left = compose(r, &compose(q, p).unwrap()).unwrap();
        let right = compose(&compose(r, q).unwrap(), p).unwrap();
        prop_assert_eq!(left.sub_mask(), right.sub_mask());
        prop_assert_eq!(left.fibers(), right.fibers());
    }

    #[test]
    fn poset_is_a_partial_order_with_identity_minimum(n in 1usize..=5, seed: u64) {
        let poset = CorrespondencePoset::build(&tree(n, seed)).unwrap();
        prop_assert!(poset.check_partial_order().is_ok());
        prop_assert!(poset.get(poset.minimum()).is_identity());
    }

    #[test]
    fn link_euler_characteristic_matches_betti(n in 2usize..=6, seed: u64) {
        let link = build_link_complex(&tree(n, seed)).unwrap();
        let betti = link.homology(Coefficients::Prime(2)).unwrap();
        prop_assert_eq!(link.euler_characteristic(), betti.euler_from_betti());
    }

    #[test]
    fn comparison_map_is_finite_and_fixes_roots(n in 1usize..=4, seed: u64, coords in prop::collection::vec(-0.5f64..0.5, 4)) {
        let t = tree(n, seed);
        let p = SmoothingProfile::standard(0.1);
        let x = &coords[..n];
        let y = comparison_map(t.as_forest(), &p, x).unwrap();
        prop_assert!(y.iter().all(|v| v.is_finite()));
        prop_assert_eq!(y[t.root()], x[t.root()]);
        prop_assert_eq!(h_all(t.as_forest(), &p, x).unwrap()[t.root()], x[t.root()]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expansions_are_arboreal(g in 0usize..11, seed: u64, intro: bool) {
        let (name, germ) = corpus::all().swap_remove(g);
        let mode = if intro { Mode::Intro } else { Mode::Full };
        prop_assume!(mode == Mode::Full || germ.stratify().unwrap().corays.len() == 1);
        let c = Config::default();
        let k = draw_valid_constants(&germ, &c.constants, mode, &c.geometry(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let graph = total_expansion(&germ, &k, mode, &c.geometry(), &c.classify()).unwrap();
        prop_assert_eq!(graph.census().get(NodeKind::NotArboreal), 0, "{}", name);
        prop_assert_eq!(graph.census().get(NodeKind::End), 2 * germ.stratify().unwrap().corays.len());
        prop_assert_eq!(graph.euler_characteristic(), 1);
    }

    #[test]
    fn sections_ignore_labels_and_subdivision(g in 0usize..11, seed: u64, perm_seed: u64, cuts in prop::collection::vec(any::<usize>(), 0..4)) {
        let (_, germ) = corpus::all().swap_remove(g);
        let c = Config::default();
        let k = draw_valid_constants(&germ, &c.constants, Mode::Full, &c.geometry(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let graph = total_expansion(&germ, &k, Mode::Full, &c.geometry(), &c.classify()).unwrap();
        let d = build_stalk_diagram(&graph).unwrap();
        let base = global_k0(&d);

        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        let mut nodes: Vec<usize> = (0..d.node_ranks.len()).collect();
        let mut edges: Vec<usize> = (0..d.edge_count).collect();
        rand::seq::SliceRandom::shuffle(nodes.as_mut_slice(), &mut rng);
        rand::seq::SliceRandom::shuffle(edges.as_mut_slice(), &mut rng);
        prop_assert_eq!(global_k0(&d.relabel(&nodes, &edges)), base.clone());

        let mut sub = d.clone();
        for cut in cuts {
            sub = sub.subdivide(cut % sub.edge_count).unwrap();
        }
        prop_assert_eq!(global_k0(&sub), base);
    }
}
