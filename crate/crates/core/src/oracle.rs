//! Ground truth by exhaustive enumeration, and uniform sampling of rank
//! functions.
//!
//! Sampling uses ChaCha8 seeded from a `u64`, which gives the same stream on
//! every platform.

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::combinatorics::{rational_from, Rational};
use crate::error::{Error, Result};
use crate::rank::{JointRankTable, RankDistribution};
use crate::tree::{Edge, PhyloTree, VertexId};

pub const DEFAULT_ENUMERATION_LIMIT: usize = 10;

/// Interior vertices listed in rank order, with the inverse lookup.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RankFunction {
    order: Vec<VertexId>,
    ranks: Vec<Option<usize>>,
}

impl RankFunction {
    /// Validates `order` (interior vertices, earliest first) against `tree`.
    pub fn from_order(tree: &PhyloTree, order: Vec<VertexId>) -> Result<Self> {
        let mut ranks = vec![None; tree.len()];
        for (k, &v) in order.iter().enumerate() {
            tree.require_interior(v)?;
            if ranks[v.index()].replace(k + 1).is_some() {
                return Err(Error::InvalidRankFunction(format!(
                    "{} ranked twice",
                    tree.name(v)
                )));
            }
        }
        let f = RankFunction { order, ranks };
        if f.order.len() != tree.interior_count() {
            return Err(Error::InvalidRankFunction(
                "not every interior vertex is ranked".into(),
            ));
        }
        if !f.respects_ancestry(tree) {
            return Err(Error::InvalidRankFunction(
                "a vertex precedes its ancestor".into(),
            ));
        }
        Ok(f)
    }

    fn from_order_unchecked(tree: &PhyloTree, order: Vec<VertexId>) -> Self {
        let mut ranks = vec![None; tree.len()];
        for (k, &v) in order.iter().enumerate() {
            ranks[v.index()] = Some(k + 1);
        }
        RankFunction { order, ranks }
    }

    pub fn rank(&self, v: VertexId) -> Option<usize> {
        self.ranks.get(v.index()).copied().flatten()
    }

    pub fn order(&self) -> &[VertexId] {
        &self.order
    }

    /// Every interior vertex ranks after its interior parent.
    pub fn respects_ancestry(&self, tree: &PhyloTree) -> bool {
        self.order.iter().all(|&v| match tree.parent(v) {
            None => self.rank(v) == Some(1),
            Some(p) => matches!((self.rank(p), self.rank(v)), (Some(a), Some(b)) if a < b),
        })
    }
}

/// Visits every rank function in lexicographic order of vertex ids.
pub fn for_each_rank_function<F>(tree: &PhyloTree, limit: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&[VertexId]),
{
    let interior = tree.interior_count();
    if interior > limit {
        return Err(Error::EnumerationLimit { interior, limit });
    }
    if interior == 0 {
        return Err(Error::NoInteriorVertex);
    }

    fn extend<F: FnMut(&[VertexId])>(
        tree: &PhyloTree,
        available: &mut Vec<VertexId>,
        prefix: &mut Vec<VertexId>,
        target: usize,
        visit: &mut F,
    ) {
        if prefix.len() == target {
            visit(prefix);
            return;
        }
        for k in 0..available.len() {
            let v = available.remove(k);
            let added: Vec<VertexId> = tree
                .children(v)
                .iter()
                .copied()
                .filter(|&c| !tree.is_leaf(c))
                .collect();
            let before = available.len();
            available.extend(&added);
            available.sort_unstable();
            prefix.push(v);
            extend(tree, available, prefix, target, visit);
            prefix.pop();
            available.retain(|x| !added.contains(x));
            debug_assert_eq!(available.len(), before);
            available.insert(k, v);
        }
    }

    let mut available = vec![tree.root()];
    let mut prefix = Vec::with_capacity(interior);
    extend(tree, &mut available, &mut prefix, interior, &mut visit);
    Ok(())
}

pub fn enumerate_rank_functions_with_limit(
    tree: &PhyloTree,
    limit: usize,
) -> Result<Vec<RankFunction>> {
    let mut all = Vec::new();
    for_each_rank_function(tree, limit, |order| {
        all.push(RankFunction::from_order_unchecked(tree, order.to_vec()))
    })?;
    Ok(all)
}

pub fn enumerate_rank_functions(tree: &PhyloTree) -> Result<Vec<RankFunction>> {
    enumerate_rank_functions_with_limit(tree, DEFAULT_ENUMERATION_LIMIT)
}

/// All rank functions of one tree, held for repeated frequency queries.
#[derive(Debug, Clone)]
pub struct Enumeration<'a> {
    tree: &'a PhyloTree,
    functions: Vec<RankFunction>,
}

impl<'a> Enumeration<'a> {
    pub fn new(tree: &'a PhyloTree) -> Result<Self> {
        Self::with_limit(tree, DEFAULT_ENUMERATION_LIMIT)
    }

    pub fn with_limit(tree: &'a PhyloTree, limit: usize) -> Result<Self> {
        Ok(Enumeration {
            tree,
            functions: enumerate_rank_functions_with_limit(tree, limit)?,
        })
    }

    pub fn functions(&self) -> &[RankFunction] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    fn frequency(&self, hits: usize) -> Rational {
        rational_from(hits) / rational_from(self.functions.len())
    }

    pub fn rank_probabilities(&self, v: VertexId) -> Result<RankDistribution> {
        self.tree.require_interior(v)?;
        let mut hits = vec![0usize; self.tree.interior_count()];
        for f in &self.functions {
            hits[f.rank(v).unwrap() - 1] += 1;
        }
        Ok(RankDistribution::new(
            v,
            hits.into_iter().map(|h| self.frequency(h)).collect(),
        ))
    }

    pub fn compare(&self, u: VertexId, v: VertexId) -> Result<Rational> {
        self.tree.require_interior(u)?;
        self.tree.require_interior(v)?;
        if u == v {
            return Err(Error::SameVertex(self.tree.name(u)));
        }
        let hits = self
            .functions
            .iter()
            .filter(|f| f.rank(u) < f.rank(v))
            .count();
        Ok(self.frequency(hits))
    }

    /// Frequencies of `(r(u), r(v))`. Any pair of interior vertices is
    /// accepted; entries with zero frequency are omitted.
    pub fn joint(&self, u: VertexId, v: VertexId) -> Result<BTreeMap<(usize, usize), Rational>> {
        self.tree.require_interior(u)?;
        self.tree.require_interior(v)?;
        let mut hits: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for f in &self.functions {
            *hits
                .entry((f.rank(u).unwrap(), f.rank(v).unwrap()))
                .or_default() += 1;
        }
        Ok(hits
            .into_iter()
            .map(|(k, h)| (k, self.frequency(h)))
            .collect())
    }
}

pub fn brute_rank_probabilities(tree: &PhyloTree, v: VertexId) -> Result<RankDistribution> {
    Enumeration::new(tree)?.rank_probabilities(v)
}

pub fn brute_compare(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<Rational> {
    Enumeration::new(tree)?.compare(u, v)
}

/// Enumerated joint frequencies for `u` a proper ancestor of `v`, shaped
/// like [`crate::rank::joint_rank_prob`]'s output for direct comparison.
pub fn brute_joint(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<JointRankTable> {
    tree.require_interior(v)?;
    if !tree.is_proper_ancestor(u, v) {
        return Err(Error::NotAncestor {
            ancestor: tree.name(u),
            descendant: tree.name(v),
        });
    }
    let freq = Enumeration::new(tree)?.joint(u, v)?;
    Ok(JointRankTable::from_map(u, v, freq))
}

/// Uniform sampler over rank functions: each vertex's subtree order is its
/// own rank followed by a uniform interleaving of its children's orders.
pub struct RankSampler<'a> {
    tree: &'a PhyloTree,
    rng: ChaCha8Rng,
}

impl<'a> RankSampler<'a> {
    pub fn new(tree: &'a PhyloTree, seed: u64) -> Self {
        RankSampler {
            tree,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn draw(&mut self) -> RankFunction {
        let tree = self.tree;
        let mut orders: Vec<Vec<VertexId>> = vec![Vec::new(); tree.len()];
        // Reverse preorder visits children before parents.
        for v in tree.vertices().rev() {
            if tree.is_leaf(v) {
                continue;
            }
            let parts: Vec<Vec<VertexId>> = tree
                .children(v)
                .iter()
                .map(|c| std::mem::take(&mut orders[c.index()]))
                .filter(|o| !o.is_empty())
                .collect();
            let mut merged = Vec::with_capacity(tree.interior_below(v));
            merged.push(v);
            riffle(&mut self.rng, parts, &mut merged);
            orders[v.index()] = merged;
        }
        let order = std::mem::take(&mut orders[0]);
        RankFunction::from_order_unchecked(tree, order)
    }
}

/// Appends a uniformly random interleaving of `parts` to `out`. Choosing
/// the next element's source with probability proportional to the number
/// of elements it has left makes every interleaving equally likely.
fn riffle<R: Rng>(rng: &mut R, parts: Vec<Vec<VertexId>>, out: &mut Vec<VertexId>) {
    let mut cursors = vec![0usize; parts.len()];
    let mut remaining: usize = parts.iter().map(Vec::len).sum();
    while remaining > 0 {
        let mut pick = rng.random_range(0..remaining);
        for (k, part) in parts.iter().enumerate() {
            let left = part.len() - cursors[k];
            if pick < left {
                out.push(part[cursors[k]]);
                cursors[k] += 1;
                break;
            }
            pick -= left;
        }
        remaining -= 1;
    }
}

pub fn sample_rank_function(tree: &PhyloTree, seed: u64) -> RankFunction {
    RankSampler::new(tree, seed).draw()
}

/// Draws Yule waiting times consistent with `rank` and returns each edge's
/// duration. After the `k`-th event the next one arrives at rate equal to
/// the number of lineages (`k + 1` in a binary tree). Pendant edges end at
/// the last interior event.
pub fn sample_yule_times(tree: &PhyloTree, rank: &RankFunction, seed: u64) -> BTreeMap<Edge, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = rank.order().len();
    let mut times = Vec::with_capacity(events);
    let mut t = 0.0;
    let mut lineages = 1usize;
    for (k, &v) in rank.order().iter().enumerate() {
        times.push(t);
        lineages += tree.children(v).len() - 1;
        if k + 1 < events {
            let wait = Exp::new(lineages as f64).expect("positive rate");
            t += wait.sample(&mut rng);
        }
    }
    let time_of = |v: VertexId| times[rank.rank(v).expect("interior vertex is ranked") - 1];
    let end = times.last().copied().unwrap_or(0.0);
    tree.edges()
        .map(|e| {
            let stop = if tree.is_leaf(e.child) {
                end
            } else {
                time_of(e.child)
            };
            (e, stop - time_of(e.parent))
        })
        .collect()
}

/// Expected event times for Monte Carlo checks: the exponential waits
/// replaced by their means.
pub fn expected_yule_times(tree: &PhyloTree, rank: &RankFunction) -> BTreeMap<Edge, Rational> {
    let mut times = Vec::with_capacity(rank.order().len());
    let mut t = Rational::zero();
    let mut lineages = 1usize;
    for &v in rank.order() {
        times.push(t.clone());
        lineages += tree.children(v).len() - 1;
        t += Rational::new(1.into(), lineages.into());
    }
    let time_of = |v: VertexId| &times[rank.rank(v).unwrap() - 1];
    let end = times.last().cloned().unwrap_or_else(Rational::zero);
    tree.edges()
        .map(|e| {
            let stop = if tree.is_leaf(e.child) {
                &end
            } else {
                time_of(e.child)
            };
            (e, stop - time_of(e.parent))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;
    use std::collections::BTreeSet;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    const FIVE_LEAF: &str = "((a,b)ab,((c,d)cd,e)w)root;";

    #[test]
    fn enumeration_counts() {
        let count = |s| {
            enumerate_rank_functions(&parse_newick(s).unwrap())
                .unwrap()
                .len()
        };
        assert_eq!(count("(((a,b),c),d);"), 1);
        assert_eq!(count(FIVE_LEAF), 3);
        assert_eq!(count("((a,b),(c,d));"), 2);
    }

    #[test]
    fn enumeration_is_lexicographic_and_valid() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        let all = enumerate_rank_functions(&t).unwrap();
        let orders: Vec<Vec<VertexId>> = all.iter().map(|f| f.order().to_vec()).collect();
        let mut sorted = orders.clone();
        sorted.sort();
        assert_eq!(orders, sorted);
        for f in &all {
            assert!(f.respects_ancestry(&t));
            assert_eq!(f.rank(t.root()), Some(1));
        }
    }

    #[test]
    fn enumeration_limit() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        assert_eq!(
            enumerate_rank_functions_with_limit(&t, 3),
            Err(Error::EnumerationLimit {
                interior: 4,
                limit: 3
            })
        );
    }

    #[test]
    fn brute_values() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        let ab = t.resolve("ab").unwrap();
        let cd = t.resolve("cd").unwrap();
        let dist = brute_rank_probabilities(&t, ab).unwrap();
        assert_eq!(dist.probabilities(), &[q(0, 1), q(1, 3), q(1, 3), q(1, 3)]);
        assert_eq!(brute_compare(&t, ab, cd).unwrap(), q(2, 3));
        for v in t.interior_vertices().skip(1) {
            assert_eq!(brute_compare(&t, t.root(), v).unwrap(), q(1, 1));
        }
        let joint = brute_joint(&t, t.root(), t.resolve("w").unwrap()).unwrap();
        assert_eq!(joint.get(1, 2), q(2, 3));
        assert_eq!(joint.get(1, 3), q(1, 3));
    }

    #[test]
    fn rank_function_validation() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        let id = |s| t.resolve(s).unwrap();
        assert!(
            RankFunction::from_order(&t, vec![id("root"), id("w"), id("ab"), id("cd")]).is_ok()
        );
        assert!(
            RankFunction::from_order(&t, vec![id("root"), id("cd"), id("w"), id("ab")]).is_err()
        );
        assert!(RankFunction::from_order(&t, vec![id("root"), id("w"), id("cd")]).is_err());
        assert!(
            RankFunction::from_order(&t, vec![id("root"), id("w"), id("w"), id("cd")]).is_err()
        );
    }

    #[test]
    fn sampler_is_deterministic() {
        let t = parse_newick("(((a,b),(c,d)),((e,f),(g,(h,i))));").unwrap();
        let a: Vec<_> = (0..20).map(|s| sample_rank_function(&t, s)).collect();
        let b: Vec<_> = (0..20).map(|s| sample_rank_function(&t, s)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|f| f.respects_ancestry(&t)));
    }

    #[test]
    fn caterpillar_sample_is_unique() {
        let t = parse_newick("(((a,b),c),d);").unwrap();
        let only = enumerate_rank_functions(&t).unwrap().remove(0);
        for seed in 0..10 {
            assert_eq!(sample_rank_function(&t, seed), only);
        }
    }

    #[test]
    fn interleavings_of_two_chains() {
        // Chains of 3 and 2 interior vertices under the root: C(5, 3) = 10 merges.
        let t = parse_newick("((((a,b),c),d),((e,f),g));").unwrap();
        let mut sampler = RankSampler::new(&t, 7);
        let seen: BTreeSet<RankFunction> = (0..5000).map(|_| sampler.draw()).collect();
        assert_eq!(seen.len(), 10);
        assert_eq!(enumerate_rank_functions(&t).unwrap().len(), 10);
    }

    #[test]
    fn yule_times_are_nonnegative_and_seeded() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        let f = sample_rank_function(&t, 3);
        let a = sample_yule_times(&t, &f, 11);
        assert_eq!(a, sample_yule_times(&t, &f, 11));
        assert_eq!(a.len(), t.len() - 1);
        assert!(a.values().all(|&x| x >= 0.0));
    }

    #[test]
    fn deterministic_rank_edge_mean() {
        let t = parse_newick("(((a,b)x,c)y,d);").unwrap();
        let f = sample_rank_function(&t, 0);
        let edge = Edge {
            parent: t.resolve("y").unwrap(),
            child: t.resolve("x").unwrap(),
        };
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|s| sample_yule_times(&t, &f, s)[&edge])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0 / 3.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }
}
