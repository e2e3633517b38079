use std::collections::BTreeMap;

use num_traits::One;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use treerank::catalog::random_binary_topology;
use treerank::{
    compare, compare_f64, count_rank_functions, date_tree, parse_newick, rank_probabilities,
    rank_probabilities_f64, rational_to_f64, write_newick_with, yule_ranked_prob, PhyloTree,
    Rational, TimingModel,
};

fn shuffled(tree: &PhyloTree, seed: u64) -> PhyloTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let children = tree
        .vertices()
        .map(|v| {
            let mut c: Vec<usize> = tree.children(v).iter().map(|c| c.index()).collect();
            c.shuffle(&mut rng);
            c
        })
        .collect();
    let labels = tree
        .vertices()
        .map(|v| tree.label(v).map(str::to_string))
        .collect();
    PhyloTree::from_adjacency(tree.root().index(), children, labels)
        .unwrap()
        .0
}

fn by_clade(tree: &PhyloTree) -> BTreeMap<Vec<String>, treerank::VertexId> {
    tree.interior_vertices()
        .map(|v| (tree.clade(v), v))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn newick_round_trip(n in 2usize..60, seed in any::<u64>()) {
        let t = random_binary_topology(n, seed);
        let text = write_newick_with(&t, |_| None);
        let back = parse_newick(&text).unwrap();
        prop_assert_eq!(write_newick_with(&back, |_| None), text);
        prop_assert_eq!(back.leaf_count(), n);
    }

    #[test]
    fn child_order_never_matters(n in 3usize..14, seed in any::<u64>(), perm in any::<u64>()) {
        let t = random_binary_topology(n, seed);
        let s = shuffled(&t, perm);
        let (a, b) = (by_clade(&t), by_clade(&s));
        for (clade, &u) in &a {
            let u2 = b[clade];
            let (p, p2) = (rank_probabilities(&t, u).unwrap(), rank_probabilities(&s, u2).unwrap());
            prop_assert_eq!(p.probabilities(), p2.probabilities());
        }
        let (x, y) = (t.interior_vertices().nth(1).unwrap(), t.interior_vertices().last().unwrap());
        if x != y {
            prop_assert_eq!(
                compare(&t, x, y).unwrap(),
                compare(&s, b[&t.clade(x)], b[&t.clade(y)]).unwrap()
            );
        }
        let d1 = date_tree(&t, TimingModel::Yule, true).unwrap();
        let d2 = date_tree(&s, TimingModel::Yule, true).unwrap();
        for e in t.edges().filter(|e| !t.is_leaf(e.child)) {
            let e2 = s.edges().find(|f| s.clade(f.child) == t.clade(e.child)).unwrap();
            prop_assert_eq!(d1.length(e), d2.length(e2));
        }
    }

    #[test]
    fn compare_is_complementary(n in 3usize..30, seed in any::<u64>(), i in any::<usize>(), j in any::<usize>()) {
        let t = random_binary_topology(n, seed);
        let interior: Vec<_> = t.interior_vertices().collect();
        let (u, v) = (interior[i % interior.len()], interior[j % interior.len()]);
        prop_assume!(u != v);
        let uv = compare(&t, u, v).unwrap();
        let vu = compare(&t, v, u).unwrap();
        prop_assert_eq!(&uv + &vu, Rational::one());
        prop_assert!((compare_f64(&t, u, v).unwrap() - rational_to_f64(&uv)).abs() < 1e-10);
    }

    #[test]
    fn float_path_tracks_exact(n in 3usize..40, seed in any::<u64>()) {
        let t = random_binary_topology(n, seed);
        for v in t.interior_vertices() {
            let exact = rank_probabilities(&t, v).unwrap();
            let float = rank_probabilities_f64(&t, v).unwrap();
            for (p, f) in exact.probabilities().iter().zip(&float) {
                prop_assert!((rational_to_f64(p) - f).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn ranked_yule_probability_is_uniform(n in 2usize..40, seed in any::<u64>()) {
        let t = random_binary_topology(n, seed);
        let count = Rational::from_integer(count_rank_functions(&t).unwrap().into());
        prop_assert!((yule_ranked_prob(&t).unwrap() * count).is_one());
    }
}
