use num_traits::Zero;
use treerank::catalog::{random_binary_topology, shape_catalog};
use treerank::oracle::expected_yule_times;
use treerank::{
    date_resolved, date_tree, parse_newick, sample_yule_times, Enumeration, PhyloTree,
    RankFunction, RankSampler, Rational, TimingModel, DEFAULT_MAX_RESOLUTIONS,
};

fn coalescent_times(tree: &PhyloTree, rank: &RankFunction) -> Vec<Rational> {
    let mut t = Rational::zero();
    let mut times = Vec::new();
    for k in 1..=tree.interior_count() {
        times.push(t.clone());
        t += Rational::new(1.into(), (k * (k + 1)).into());
    }
    rank.order()
        .iter()
        .map(|&v| times[rank.rank(v).unwrap() - 1].clone())
        .collect()
}

// Average the per-rank-function expected lengths over all rank functions.
fn enumerated_lengths(tree: &PhyloTree) -> (Vec<Rational>, Vec<Rational>) {
    let en = Enumeration::new(tree).unwrap();
    let edges: Vec<_> = tree.edges().collect();
    let mut yule = vec![Rational::zero(); edges.len()];
    let mut coal = vec![Rational::zero(); edges.len()];
    for f in en.functions() {
        let times = expected_yule_times(tree, f);
        let ct = coalescent_times(tree, f);
        let at = |v| &ct[f.order().iter().position(|&x| x == v).unwrap()];
        for (k, e) in edges.iter().enumerate() {
            yule[k] += &times[e];
            if !tree.is_leaf(e.child) {
                coal[k] += at(e.child) - at(e.parent);
            }
        }
    }
    let n = Rational::from_integer(en.len().into());
    (
        yule.into_iter().map(|x| x / &n).collect(),
        coal.into_iter().map(|x| x / &n).collect(),
    )
}

#[test]
fn dated_catalog_matches_enumerated_expectations() {
    for tree in shape_catalog(8).iter().filter(|t| t.is_binary()) {
        let (yule, coal) = enumerated_lengths(tree);
        let y = date_tree(tree, TimingModel::Yule, true).unwrap();
        let c = date_tree(tree, TimingModel::Coalescent, false).unwrap();
        for (k, e) in tree.edges().enumerate() {
            if tree.is_leaf(e.child) {
                assert_eq!(y.length(e), Some(&yule[k]), "pendant {e:?}");
            } else {
                assert_eq!(y.length(e), Some(&yule[k]), "Yule {e:?}");
                assert_eq!(c.length(e), Some(&coal[k]), "coalescent {e:?}");
            }
        }
    }
}

#[test]
fn resolved_lengths_average_over_refinements() {
    // The star's resolutions are all caterpillars; the weighted average is
    // the caterpillar's edge.
    let star = parse_newick("((a,b,c,d)s,e);").unwrap();
    let report = date_resolved(&star, TimingModel::Yule, DEFAULT_MAX_RESOLUTIONS).unwrap();
    let cat = parse_newick("((((a,b),c),d)s,e);").unwrap();
    let direct = date_tree(&cat, TimingModel::Yule, false).unwrap();
    let edge = star.edges().find(|e| star.name(e.child) == "s").unwrap();
    let cat_edge = cat.edges().find(|e| cat.name(e.child) == "s").unwrap();
    assert_eq!(report.length(edge), direct.length(cat_edge));
}

#[test]
fn monte_carlo_edge_lengths() {
    let tree = parse_newick("((a,b),((c,d)x,e)w);").unwrap();
    let w = tree.resolve("w").unwrap();
    let x = tree.resolve("x").unwrap();
    let e_leaf = tree.resolve("e").unwrap();
    let interior = tree
        .edges()
        .find(|e| e.parent == w && e.child == x)
        .unwrap();
    let pendant = tree
        .edges()
        .find(|e| e.parent == w && e.child == e_leaf)
        .unwrap();

    let draws = 100_000;
    let mut sampler = RankSampler::new(&tree, 11);
    let (mut s1, mut s2, mut p1, mut p2) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..draws {
        let rank = sampler.draw();
        let lengths = sample_yule_times(&tree, &rank, 50_000 + k);
        let a = lengths[&interior];
        let b = lengths[&pendant];
        s1 += a;
        s2 += a * a;
        p1 += b;
        p2 += b * b;
    }
    let n = draws as f64;
    for (sum, sq, expected) in [(s1, s2, 7.0 / 18.0), (p1, p2, 17.0 / 36.0)] {
        let mean = sum / n;
        let se = ((sq / n - mean * mean) / n).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * se,
            "mean {mean}, expected {expected}, se {se}"
        );
    }
}

#[test]
fn random_trees_keep_the_clock() {
    for seed in 0..5 {
        let t = random_binary_topology(20, seed);
        let report = date_tree(&t, TimingModel::Yule, true).unwrap();
        let first = report.leaf_depths.values().next().unwrap();
        assert!(report.leaf_depths.values().all(|d| d == first));
    }
}
