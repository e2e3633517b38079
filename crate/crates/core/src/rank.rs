//! Rank distributions under the uniform distribution on rank functions.
//!
//! The rank DP walks the path from a vertex `v` to the top of the tree. At
//! each step the subtree built so far (`T_{m-1}`) is merged with the block of
//! sibling subtrees hanging off the next path vertex (`T'_{m-1}`), and the
//! new path vertex takes rank 1. Only the interior-vertex counts of these
//! blocks enter the recursion; the internal orderings of a sibling block are
//! a common factor, which is why several siblings of a polytomy can be
//! aggregated into one block.
//!
//! Counts are kept rescaled (the factors `|r(T_1)|`, `|r(T'_k)|` dropped),
//! exactly as integers.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::combinatorics::{ratio, rational_from, BigCount, BinomialTable, Rational};
use crate::error::{Error, Result};
use crate::tree::{PhyloTree, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankDistribution {
    pub vertex: VertexId,
    p: Vec<Rational>,
}

impl RankDistribution {
    pub fn new(vertex: VertexId, p: Vec<Rational>) -> Self {
        RankDistribution { vertex, p }
    }

    /// `P[r(v) = rank]`; ranks are 1-based, out-of-range ranks give 0.
    pub fn probability(&self, rank: usize) -> Rational {
        if rank == 0 {
            return Rational::zero();
        }
        self.p.get(rank - 1).cloned().unwrap_or_else(Rational::zero)
    }

    /// Probabilities for ranks `1..=len()`.
    pub fn probabilities(&self) -> &[Rational] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Ranks with nonzero probability.
    pub fn support(&self) -> Vec<usize> {
        (1..=self.p.len())
            .filter(|&i| !self.p[i - 1].is_zero())
            .collect()
    }

    pub fn total(&self) -> Rational {
        self.p.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSummary {
    pub mean: Rational,
    pub variance: Rational,
}

pub fn rank_moments(dist: &RankDistribution) -> RankSummary {
    let mut mean = Rational::zero();
    let mut second = Rational::zero();
    for (k, p) in dist.p.iter().enumerate() {
        let i = rational_from(k + 1);
        mean += &i * p;
        second += &i * &i * p;
    }
    let variance = second - &mean * &mean;
    RankSummary { mean, variance }
}

/// Rescaled DP state for every path step, `steps[m-1][i-1]` = `α̃_{T_m,v}(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaTable {
    pub vertex: VertexId,
    pub steps: Vec<Vec<BigCount>>,
}

/// `P[r(u) = i, r(v) = j]` over the pairs where it is nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointRankTable {
    pub u: VertexId,
    pub v: VertexId,
    q: BTreeMap<(usize, usize), Rational>,
}

impl JointRankTable {
    /// Builds a table from explicit probabilities; zero entries are dropped.
    pub fn from_map(u: VertexId, v: VertexId, q: BTreeMap<(usize, usize), Rational>) -> Self {
        let q = q.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        JointRankTable { u, v, q }
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.q.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.q.iter()
    }

    pub fn total(&self) -> Rational {
        self.q.values().sum()
    }

    /// `Σ_j q(i, j)`.
    pub fn marginal_u(&self, i: usize) -> Rational {
        self.q
            .iter()
            .filter(|((a, _), _)| *a == i)
            .map(|(_, p)| p)
            .sum()
    }

    /// `Σ_i q(i, j)`.
    pub fn marginal_v(&self, j: usize) -> Rational {
        self.q
            .iter()
            .filter(|((_, b), _)| *b == j)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Unnormalised joint weights `w(i, j)`, with their sum.
#[derive(Debug, Clone)]
pub(crate) struct JointWeights {
    pub entries: Vec<(usize, usize, BigCount)>,
    pub total: BigCount,
}

impl JointWeights {
    fn from_entries(entries: Vec<(usize, usize, BigCount)>) -> Self {
        let entries: Vec<_> = entries.into_iter().filter(|e| !e.2.is_zero()).collect();
        let total = entries.iter().map(|e| &e.2).sum();
        JointWeights { entries, total }
    }

    fn into_table(self, u: VertexId, v: VertexId) -> JointRankTable {
        let total = BigInt::from(self.total);
        let q = self
            .entries
            .into_iter()
            .map(|(i, j, w)| ((i, j), Rational::new(BigInt::from(w), total.clone())))
            .collect();
        JointRankTable { u, v, q }
    }
}

/// Runs the recursion `(*)` for a path whose first subtree has
/// `first_block` interior vertices and whose successive sibling blocks have
/// the given sizes. Calls `on_step` with the state after every step and
/// returns the final state, indexed by rank - 1.
pub(crate) fn alpha_recursion(
    binom: &BinomialTable,
    first_block: usize,
    sibling_blocks: &[usize],
    mut on_step: impl FnMut(&[BigCount]),
) -> Vec<BigCount> {
    let mut alpha = vec![BigCount::zero(); first_block];
    alpha[0] = BigCount::one();
    on_step(&alpha);
    for &b in sibling_blocks {
        let a = alpha.len();
        let size = a + b + 1;
        let mut next = vec![BigCount::zero(); size];
        for i in 2..=size {
            let after = a + b + 1 - i;
            let mut acc = BigCount::zero();
            for j in 0..=b.min(i - 2) {
                let prev = i - j - 1;
                if prev > a || alpha[prev - 1].is_zero() {
                    continue;
                }
                let c_after = binom.get(after, b - j);
                if c_after.is_zero() {
                    continue;
                }
                acc += &alpha[prev - 1] * c_after * binom.get(i - 2, j);
            }
            next[i - 1] = acc;
        }
        alpha = next;
        on_step(&alpha);
    }
    alpha
}

/// Interior-vertex count of the first subtree and the sibling block sizes on
/// the path from `v` up to `top` (inclusive).
fn path_blocks(tree: &PhyloTree, v: VertexId, top: VertexId) -> (usize, Vec<usize>) {
    let mut blocks = Vec::new();
    let mut cur = v;
    while cur != top {
        let parent = tree.parent(cur).expect("top is an ancestor of v");
        blocks.push(tree.interior_below(parent) - tree.interior_below(cur) - 1);
        cur = parent;
    }
    (tree.interior_below(v), blocks)
}

fn normalise(vertex: VertexId, weights: &[BigCount]) -> RankDistribution {
    let total: BigCount = weights.iter().sum();
    let p = weights
        .iter()
        .map(|w| ratio(w.clone(), total.clone()))
        .collect();
    RankDistribution { vertex, p }
}

fn cumulative(weights: &[BigCount]) -> Vec<BigCount> {
    let mut acc = BigCount::zero();
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc.clone()
        })
        .collect()
}

/// Rank queries on one tree, sharing a binomial table sized `|V°| + 1`.
#[derive(Debug, Clone)]
pub struct Ranker<'a> {
    tree: &'a PhyloTree,
    binom: BinomialTable,
}

impl<'a> Ranker<'a> {
    pub fn new(tree: &'a PhyloTree) -> Self {
        Ranker {
            tree,
            binom: BinomialTable::new(tree.interior_count() + 1),
        }
    }

    pub fn tree(&self) -> &'a PhyloTree {
        self.tree
    }

    pub fn binomials(&self) -> &BinomialTable {
        &self.binom
    }

    fn weights_to(&self, v: VertexId, top: VertexId) -> Vec<BigCount> {
        let (first, blocks) = path_blocks(self.tree, v, top);
        alpha_recursion(&self.binom, first, &blocks, |_| {})
    }

    /// Rescaled rank counts of `v` in the whole tree, indexed by rank - 1.
    pub(crate) fn rank_weights(&self, v: VertexId) -> Vec<BigCount> {
        self.weights_to(v, self.tree.root())
    }

    pub fn alpha_table(&self, v: VertexId) -> Result<AlphaTable> {
        self.tree.require_interior(v)?;
        let (first, blocks) = path_blocks(self.tree, v, self.tree.root());
        let mut steps = Vec::with_capacity(blocks.len() + 1);
        alpha_recursion(&self.binom, first, &blocks, |s| steps.push(s.to_vec()));
        Ok(AlphaTable { vertex: v, steps })
    }

    pub fn rank_probabilities(&self, v: VertexId) -> Result<RankDistribution> {
        self.tree.require_interior(v)?;
        Ok(normalise(v, &self.rank_weights(v)))
    }

    /// `P[r(u) < r(v)]`.
    pub fn compare(&self, u: VertexId, v: VertexId) -> Result<Rational> {
        let tree = self.tree;
        tree.require_interior(u)?;
        tree.require_interior(v)?;
        if u == v {
            return Err(Error::SameVertex(tree.name(u)));
        }
        let rho = tree.mrca(u, v)?;
        if rho == v {
            return Ok(Rational::zero());
        }
        if rho == u {
            return Ok(Rational::one());
        }
        // Sibling subtrees of rho holding neither vertex do not affect the
        // relative order of u and v.
        let top_u = tree.child_towards(rho, u).unwrap();
        let top_v = tree.child_towards(rho, v).unwrap();
        let wu = self.weights_to(u, top_u);
        let wv = self.weights_to(v, top_v);
        let (a, b) = (wu.len(), wv.len());
        let ucum = cumulative(&wu);

        let mut sum = BigCount::zero();
        for i in 1..=b {
            if wv[i - 1].is_zero() {
                continue;
            }
            for j in 1..=a {
                let ways = self.binom.get(i - 1 + j, j) * self.binom.get(b - i + a - j, a - j);
                sum += &wv[i - 1] * ways * &ucum[j - 1];
            }
        }
        let total_u: BigCount = wu.iter().sum();
        let total_v: BigCount = wv.iter().sum();
        let tot = self.binom.get(a + b, b);
        Ok(ratio(sum, tot * total_u * total_v))
    }

    fn check_pair(&self, u: VertexId, v: VertexId) -> Result<()> {
        let tree = self.tree;
        tree.require(u)?;
        tree.require_interior(v)?;
        if !tree.is_proper_ancestor(u, v) {
            return Err(Error::NotAncestor {
                ancestor: tree.name(u),
                descendant: tree.name(v),
            });
        }
        Ok(())
    }

    /// Joint weights for an edge `(u, v)`: `v` is deleted down to a leaf,
    /// giving `T_u`, and `v`'s subtree `T_v` is shuffled into the ranks of
    /// `T_u` after position `j - 1`.
    fn edge_joint_weights(&self, u: VertexId, v: VertexId, falling: bool) -> JointWeights {
        let tree = self.tree;
        let total = tree.interior_count();
        let below_v = tree.interior_below(v);
        let in_tu = total - below_v;

        let (_, blocks) = path_blocks(tree, u, tree.root());
        let first = tree.interior_below(u) - below_v;
        let wu = alpha_recursion(&self.binom, first, &blocks, |_| {});
        debug_assert_eq!(wu.len(), in_tu);

        let shuffle = |j: usize| -> BigCount {
            if falling {
                (0..below_v.saturating_sub(1))
                    .map(|k| BigCount::from(total - j - k))
                    .product()
            } else {
                self.binom.get(in_tu + below_v - j, below_v - 1).clone()
            }
        };
        let mut entries = Vec::new();
        for j in 2..=in_tu + 1 {
            let g = shuffle(j);
            for i in 1..j.min(in_tu + 1) {
                if !wu[i - 1].is_zero() {
                    entries.push((i, j, &wu[i - 1] * &g));
                }
            }
        }
        JointWeights::from_entries(entries)
    }

    /// Joint weights for any ancestor `u` of `v`. The subtree `S` at `u` is
    /// ordered internally (with `v` at position `s`), the rest of the tree
    /// sees `S` as the single vertex `u`, and the `|S| - 1` remaining
    /// vertices of `S` are shuffled among the vertices ranked after `u`.
    fn nested_joint_weights(&self, u: VertexId, v: VertexId) -> JointWeights {
        let tree = self.tree;
        let in_s = tree.interior_below(u) as isize;
        let outside = tree.interior_count() as isize - in_s;

        let (_, blocks) = path_blocks(tree, u, tree.root());
        let wc = alpha_recursion(&self.binom, 1, &blocks, |_| {});
        let ws = self.weights_to(v, u);

        let total = tree.interior_count();
        let mut entries = Vec::new();
        for i in 1..=wc.len() {
            if wc[i - 1].is_zero() {
                continue;
            }
            for j in i + 1..=total {
                let mut acc = BigCount::zero();
                for s in 2..=ws.len() {
                    if ws[s - 1].is_zero() {
                        continue;
                    }
                    let (ii, jj, ss) = (i as isize, j as isize, s as isize);
                    let before = self.binom.get_signed(jj - ii - 1, ss - 2);
                    let after = self.binom.get_signed(outside + in_s - jj, in_s - ss);
                    if before.is_zero() || after.is_zero() {
                        continue;
                    }
                    acc += &ws[s - 1] * before * after;
                }
                if !acc.is_zero() {
                    entries.push((i, j, acc * &wc[i - 1]));
                }
            }
        }
        JointWeights::from_entries(entries)
    }

    pub(crate) fn joint_weights(&self, u: VertexId, v: VertexId) -> Result<JointWeights> {
        self.check_pair(u, v)?;
        if self.tree.parent(v) == Some(u) {
            Ok(self.edge_joint_weights(u, v, false))
        } else {
            Ok(self.nested_joint_weights(u, v))
        }
    }

    /// `P[r(u) = i, r(v) = j]` for `u` a proper ancestor of `v`.
    ///
    /// For an edge this is the binomial shuffle formula over `T_u` and
    /// `T_v`; that formula needs `u` to be the parent of `v`, so deeper
    /// ancestors go through [`Ranker::joint_rank_prob_nested`].
    pub fn joint_rank_prob(&self, u: VertexId, v: VertexId) -> Result<JointRankTable> {
        Ok(self.joint_weights(u, v)?.into_table(u, v))
    }

    /// Edge-only variant normalising with the falling-factorial form
    /// `prod_{k=0}^{|V°_{T_v}|-2} (|V°| - j - k)` instead of the binomial.
    pub fn joint_rank_prob_falling(&self, u: VertexId, v: VertexId) -> Result<JointRankTable> {
        self.check_pair(u, v)?;
        if self.tree.parent(v) != Some(u) {
            return Err(Error::NotParent {
                parent: self.tree.name(u),
                child: self.tree.name(v),
            });
        }
        Ok(self.edge_joint_weights(u, v, true).into_table(u, v))
    }

    /// Joint table through the subtree-collapse route, valid for every
    /// ancestor pair.
    pub fn joint_rank_prob_nested(&self, u: VertexId, v: VertexId) -> Result<JointRankTable> {
        self.check_pair(u, v)?;
        Ok(self.nested_joint_weights(u, v).into_table(u, v))
    }
}

pub fn rank_probabilities(tree: &PhyloTree, v: VertexId) -> Result<RankDistribution> {
    Ranker::new(tree).rank_probabilities(v)
}

pub fn compare(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<Rational> {
    Ranker::new(tree).compare(u, v)
}

pub fn joint_rank_prob(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<JointRankTable> {
    Ranker::new(tree).joint_rank_prob(u, v)
}

/// `ln k!` for `k <= max`.
struct LnFactorials(Vec<f64>);

impl LnFactorials {
    fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0f64;
        table.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            table.push(acc);
        }
        LnFactorials(table)
    }

    fn ln_binom(&self, n: usize, k: usize) -> f64 {
        if k > n {
            f64::NEG_INFINITY
        } else {
            self.0[n] - self.0[k] - self.0[n - k]
        }
    }
}

/// Floating-point rank DP. Each step is carried as a probability: the
/// product of the two shuffle binomials divided by `C(a + b, b)` is a
/// hypergeometric weight, so nothing overflows on large trees.
fn probability_recursion(
    lnf: &LnFactorials,
    first_block: usize,
    sibling_blocks: &[usize],
) -> Vec<f64> {
    let mut p = vec![0.0; first_block];
    p[0] = 1.0;
    for &b in sibling_blocks {
        let a = p.len();
        let size = a + b + 1;
        let ln_tot = lnf.ln_binom(a + b, b);
        let mut next = vec![0.0; size];
        for i in 2..=size {
            let after = a + b + 1 - i;
            let mut acc = 0.0;
            for j in 0..=b.min(i - 2) {
                let prev = i - j - 1;
                if prev > a || p[prev - 1] == 0.0 || b - j > after {
                    continue;
                }
                let ln_w = lnf.ln_binom(i - 2, j) + lnf.ln_binom(after, b - j) - ln_tot;
                acc += p[prev - 1] * ln_w.exp();
            }
            next[i - 1] = acc;
        }
        p = next;
    }
    p
}

/// `P[r(v) = i]` in 64-bit floating point, for trees too large for exact
/// evaluation to be practical.
pub fn rank_probabilities_f64(tree: &PhyloTree, v: VertexId) -> Result<Vec<f64>> {
    tree.require_interior(v)?;
    let lnf = LnFactorials::new(tree.interior_count() + 1);
    let (first, blocks) = path_blocks(tree, v, tree.root());
    Ok(probability_recursion(&lnf, first, &blocks))
}

/// Floating-point counterpart of [`compare`].
pub fn compare_f64(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<f64> {
    tree.require_interior(u)?;
    tree.require_interior(v)?;
    if u == v {
        return Err(Error::SameVertex(tree.name(u)));
    }
    let rho = tree.mrca(u, v)?;
    if rho == v {
        return Ok(0.0);
    }
    if rho == u {
        return Ok(1.0);
    }
    let lnf = LnFactorials::new(tree.interior_count() + 1);
    let top_u = tree.child_towards(rho, u).unwrap();
    let top_v = tree.child_towards(rho, v).unwrap();
    let (fu, bu) = path_blocks(tree, u, top_u);
    let (fv, bv) = path_blocks(tree, v, top_v);
    let pu = probability_recursion(&lnf, fu, &bu);
    let pv = probability_recursion(&lnf, fv, &bv);
    let (a, b) = (pu.len(), pv.len());
    let mut ucum = Vec::with_capacity(a);
    let mut acc = 0.0;
    for p in &pu {
        acc += p;
        ucum.push(acc);
    }
    let ln_tot = lnf.ln_binom(a + b, b);
    let mut sum = 0.0;
    for i in 1..=b {
        if pv[i - 1] == 0.0 {
            continue;
        }
        for j in 1..=a {
            let ln_w = lnf.ln_binom(i - 1 + j, j) + lnf.ln_binom(b - i + a - j, a - j) - ln_tot;
            sum += pv[i - 1] * ln_w.exp() * ucum[j - 1];
        }
    }
    Ok(sum)
}
