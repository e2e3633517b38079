//! Expected edge lengths under the Yule model and the coalescent.
//!
//! Time is measured from the first branchpoint (rank 1, depth 0). Under the
//! Yule model each lineage splits at rate 1; under the coalescent, time is in
//! standard coalescent units.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::combinatorics::{BigCount, Rational};
use crate::error::{Error, Result};
use crate::rank::Ranker;
use crate::tree::{Edge, PhyloTree, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimingModel {
    Yule,
    Coalescent,
}

impl TimingModel {
    /// Expected time between events `k` and `k + 1`.
    fn interval(self, k: usize) -> Rational {
        match self {
            TimingModel::Yule => Rational::new(BigInt::one(), BigInt::from(k + 1)),
            TimingModel::Coalescent => Rational::new(BigInt::one(), BigInt::from((k + 1) * k)),
        }
    }

    /// Expected time of every event from the first branchpoint, indexed by
    /// rank - 1.
    fn event_times(self, events: usize) -> Vec<Rational> {
        let mut times = Vec::with_capacity(events);
        let mut t = Rational::zero();
        for k in 1..=events {
            times.push(t.clone());
            t += self.interval(k);
        }
        times
    }
}

impl fmt::Display for TimingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimingModel::Yule => "yule",
            TimingModel::Coalescent => "coalescent",
        })
    }
}

impl FromStr for TimingModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "yule" => Ok(TimingModel::Yule),
            "coalescent" => Ok(TimingModel::Coalescent),
            other => Err(format!(
                "unknown model '{other}' (expected yule or coalescent)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLengthReport {
    pub model: TimingModel,
    pub interior: BTreeMap<Edge, Rational>,
    pub pendant: BTreeMap<Edge, Rational>,
    pub leaf_depths: BTreeMap<VertexId, Rational>,
}

impl EdgeLengthReport {
    pub fn length(&self, edge: Edge) -> Option<&Rational> {
        self.interior.get(&edge).or_else(|| self.pendant.get(&edge))
    }

    pub fn covers(&self, tree: &PhyloTree) -> bool {
        tree.edges().all(|e| self.length(e).is_some())
    }
}

/// `E[X | r(u) = i, r(v) = j]`.
pub fn expected_waiting_sum(i: usize, j: usize, model: TimingModel) -> Result<Rational> {
    if i == 0 || i >= j {
        return Err(Error::InvalidRanks { i, j });
    }
    Ok((1..=j - i).map(|k| model.interval(i + k - 1)).sum())
}

fn require_edge(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<()> {
    tree.require(u)?;
    tree.require(v)?;
    if tree.parent(v) != Some(u) {
        return Err(Error::NotParent {
            parent: tree.name(u),
            child: tree.name(v),
        });
    }
    Ok(())
}

/// Expected edge lengths on one binary tree, sharing the binomial table and
/// the event times.
pub struct EdgeTimer<'a> {
    ranker: Ranker<'a>,
    model: TimingModel,
    times: Vec<Rational>,
}

impl<'a> EdgeTimer<'a> {
    pub fn new(tree: &'a PhyloTree, model: TimingModel) -> Result<Self> {
        tree.require_binary()?;
        Ok(EdgeTimer {
            ranker: Ranker::new(tree),
            model,
            times: model.event_times(tree.interior_count().max(1)),
        })
    }

    fn tree(&self) -> &'a PhyloTree {
        self.ranker.tree()
    }

    /// `Σ_Ω E[X | i, j] P[r(u) = i, r(v) = j]`. Since the conditional
    /// expectation is a difference of event times, the sum collapses onto
    /// the integer row and column sums of the joint weights.
    pub fn interior_edge_length(&self, u: VertexId, v: VertexId) -> Result<Rational> {
        let tree = self.tree();
        require_edge(tree, u, v)?;
        if tree.is_leaf(v) {
            return Err(Error::LeafVertex(tree.name(v)));
        }
        let joint = self.ranker.joint_weights(u, v)?;
        let n = tree.interior_count();
        let mut by_u = vec![BigCount::zero(); n + 1];
        let mut by_v = vec![BigCount::zero(); n + 1];
        for (i, j, w) in &joint.entries {
            by_u[*i] += w;
            by_v[*j] += w;
        }
        let mut numer = Rational::zero();
        for k in 1..=n {
            if !by_v[k].is_zero() {
                numer += &self.times[k - 1] * Rational::from_integer(BigInt::from(by_v[k].clone()));
            }
            if !by_u[k].is_zero() {
                numer -= &self.times[k - 1] * Rational::from_integer(BigInt::from(by_u[k].clone()));
            }
        }
        Ok(numer / Rational::from_integer(BigInt::from(joint.total)))
    }

    /// Expected pendant length below `v` when growth stops at the
    /// `(n-1)`-th event. Yule only.
    pub fn pendant_edge_length(&self, v: VertexId) -> Result<Rational> {
        if self.model != TimingModel::Yule {
            return Err(Error::PendantUnsupported);
        }
        let tree = self.tree();
        tree.require_interior(v)?;
        if !tree.children(v).iter().any(|&c| tree.is_leaf(c)) {
            return Err(Error::NoLeafChild(tree.name(v)));
        }
        let weights = self.ranker.rank_weights(v);
        let end = &self.times[tree.interior_count() - 1];
        let total: BigCount = weights.iter().sum();
        let mut numer = Rational::zero();
        for (k, w) in weights.iter().enumerate() {
            if !w.is_zero() {
                numer += (end - &self.times[k]) * Rational::from_integer(BigInt::from(w.clone()));
            }
        }
        Ok(numer / Rational::from_integer(BigInt::from(total)))
    }

    pub fn date(&self, include_pendant: bool) -> Result<EdgeLengthReport> {
        if include_pendant && self.model != TimingModel::Yule {
            return Err(Error::PendantUnsupported);
        }
        let tree = self.tree();
        let edges: Vec<Edge> = tree
            .edges()
            .filter(|e| include_pendant || !tree.is_leaf(e.child))
            .collect();
        // Pendant edges below the same vertex share one value.
        let lengths: Vec<(Edge, Rational)> = edges
            .par_iter()
            .map(|&e| {
                let length = if tree.is_leaf(e.child) {
                    self.pendant_edge_length(e.parent)
                } else {
                    self.interior_edge_length(e.parent, e.child)
                };
                length.map(|x| (e, x))
            })
            .collect::<Result<_>>()?;

        let mut report = EdgeLengthReport {
            model: self.model,
            interior: BTreeMap::new(),
            pendant: BTreeMap::new(),
            leaf_depths: BTreeMap::new(),
        };
        for (e, x) in lengths {
            if tree.is_leaf(e.child) {
                report.pendant.insert(e, x);
            } else {
                report.interior.insert(e, x);
            }
        }
        if include_pendant {
            let mut depth = vec![Rational::zero(); tree.len()];
            for e in tree.edges() {
                let x = report.length(e).expect("every edge is dated");
                depth[e.child.index()] = &depth[e.parent.index()] + x;
            }
            for leaf in tree.leaves() {
                report.leaf_depths.insert(leaf, depth[leaf.index()].clone());
            }
        }
        Ok(report)
    }
}

pub fn interior_edge_length(
    tree: &PhyloTree,
    u: VertexId,
    v: VertexId,
    model: TimingModel,
) -> Result<Rational> {
    EdgeTimer::new(tree, model)?.interior_edge_length(u, v)
}

pub fn pendant_edge_length(tree: &PhyloTree, v: VertexId) -> Result<Rational> {
    EdgeTimer::new(tree, TimingModel::Yule)?.pendant_edge_length(v)
}

pub fn date_tree(
    tree: &PhyloTree,
    model: TimingModel,
    include_pendant: bool,
) -> Result<EdgeLengthReport> {
    if include_pendant && model != TimingModel::Yule {
        return Err(Error::PendantUnsupported);
    }
    EdgeTimer::new(tree, model)?.date(include_pendant)
}

/// Common depth of all leaves in a Yule-dated tree on `n` leaves,
/// `Σ_{k=1}^{n-2} 1/(k+1)`.
pub fn yule_leaf_depth(n: usize) -> Rational {
    (1..n.saturating_sub(1))
        .map(|k| Rational::new(BigInt::one(), BigInt::from(k + 1)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;
    use crate::rank::rank_probabilities;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    const FIVE_LEAF: &str = "((a,b)ab,((c,d)cd,e)w)root;";
    const CAT4: &str = "(((a,b)x,c)y,d)root;";

    #[test]
    fn waiting_sums() {
        use TimingModel::*;
        assert_eq!(expected_waiting_sum(2, 3, Yule).unwrap(), q(1, 3));
        assert_eq!(expected_waiting_sum(2, 4, Yule).unwrap(), q(7, 12));
        assert_eq!(expected_waiting_sum(2, 4, Coalescent).unwrap(), q(1, 4));
        assert_eq!(expected_waiting_sum(3, 4, Coalescent).unwrap(), q(1, 12));
        assert_eq!(
            expected_waiting_sum(3, 3, Yule),
            Err(Error::InvalidRanks { i: 3, j: 3 })
        );
        assert!(expected_waiting_sum(0, 3, Yule).is_err());
    }

    #[test]
    fn waiting_sum_is_event_time_difference() {
        for model in [TimingModel::Yule, TimingModel::Coalescent] {
            let times = model.event_times(12);
            for i in 1..12 {
                for j in i + 1..=12 {
                    assert_eq!(
                        expected_waiting_sum(i, j, model).unwrap(),
                        &times[j - 1] - &times[i - 1]
                    );
                }
            }
        }
    }

    #[test]
    fn caterpillar_edges() {
        let t = parse_newick(CAT4).unwrap();
        let (x, y) = (t.resolve("x").unwrap(), t.resolve("y").unwrap());
        assert_eq!(
            interior_edge_length(&t, y, x, TimingModel::Yule).unwrap(),
            q(1, 3)
        );
        assert_eq!(pendant_edge_length(&t, x).unwrap(), q(0, 1));
        assert_eq!(pendant_edge_length(&t, t.root()).unwrap(), q(5, 6));
    }

    #[test]
    fn five_leaf_edges() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        let w = t.resolve("w").unwrap();
        let cd = t.resolve("cd").unwrap();
        assert_eq!(
            interior_edge_length(&t, w, cd, TimingModel::Yule).unwrap(),
            q(7, 18)
        );
        assert_eq!(
            interior_edge_length(&t, w, cd, TimingModel::Coalescent).unwrap(),
            q(1, 6)
        );
        assert_eq!(
            interior_edge_length(&t, t.root(), w, TimingModel::Yule).unwrap(),
            q(11, 18)
        );
        assert_eq!(pendant_edge_length(&t, w).unwrap(), q(17, 36));
    }

    #[test]
    fn edge_errors() {
        let t = parse_newick(FIVE_LEAF).unwrap();
        let w = t.resolve("w").unwrap();
        let cd = t.resolve("cd").unwrap();
        let e = t.resolve("e").unwrap();
        assert!(matches!(
            interior_edge_length(&t, w, e, TimingModel::Yule),
            Err(Error::LeafVertex(_))
        ));
        assert!(matches!(
            interior_edge_length(&t, t.root(), cd, TimingModel::Yule),
            Err(Error::NotParent { .. })
        ));
        assert_eq!(
            pendant_edge_length(&t, t.root()),
            Err(Error::NoLeafChild("root".into()))
        );
        let nb = parse_newick("((a,b)x,(c,d,e)y)r;").unwrap();
        assert_eq!(
            interior_edge_length(&nb, nb.root(), nb.resolve("x").unwrap(), TimingModel::Yule),
            Err(Error::NotBinary)
        );
    }

    #[test]
    fn interior_length_equals_mean_depth_difference() {
        // Independent route: E[t(r(v))] - E[t(r(u))] from the marginals.
        let t = parse_newick("(((a,b),(c,(d,e))),((f,g),(h,(i,j))));").unwrap();
        for model in [TimingModel::Yule, TimingModel::Coalescent] {
            let times = model.event_times(t.interior_count());
            let mean_time = |v| -> Rational {
                let d = rank_probabilities(&t, v).unwrap();
                d.probabilities()
                    .iter()
                    .zip(&times)
                    .map(|(p, x)| p * x)
                    .sum()
            };
            for e in t.edges().filter(|e| !t.is_leaf(e.child)) {
                assert_eq!(
                    interior_edge_length(&t, e.parent, e.child, model).unwrap(),
                    mean_time(e.child) - mean_time(e.parent)
                );
            }
        }
    }

    #[test]
    fn dated_trees_keep_the_clock() {
        let t = parse_newick(CAT4).unwrap();
        let report = date_tree(&t, TimingModel::Yule, true).unwrap();
        assert_eq!(report.leaf_depths.len(), 4);
        assert!(report.leaf_depths.values().all(|d| *d == q(5, 6)));

        let t = parse_newick(FIVE_LEAF).unwrap();
        let report = date_tree(&t, TimingModel::Yule, true).unwrap();
        assert!(report.leaf_depths.values().all(|d| *d == q(13, 12)));
        assert_eq!(yule_leaf_depth(5), q(13, 12));
        assert!(report.covers(&t));

        let report = date_tree(&t, TimingModel::Coalescent, false).unwrap();
        let edge = Edge {
            parent: t.resolve("w").unwrap(),
            child: t.resolve("cd").unwrap(),
        };
        assert_eq!(report.interior[&edge], q(1, 6));
        assert!(report.pendant.is_empty());
        assert!(report.leaf_depths.is_empty());
        assert!(!report.covers(&t));

        assert_eq!(
            date_tree(&t, TimingModel::Coalescent, true),
            Err(Error::PendantUnsupported)
        );
    }

    #[test]
    fn two_leaf_tree() {
        let t = parse_newick("(a,b);").unwrap();
        let report = date_tree(&t, TimingModel::Yule, true).unwrap();
        assert!(report.leaf_depths.values().all(|d| d.is_zero()));
        assert!(report.interior.is_empty());
    }

    #[test]
    fn caterpillar_consecutive_ranks() {
        let mut text = "(l0,l1)".to_string();
        for k in 2..12 {
            text = format!("({text},l{k})");
        }
        let t = parse_newick(&format!("{text};")).unwrap();
        for model in [TimingModel::Yule, TimingModel::Coalescent] {
            let timer = EdgeTimer::new(&t, model).unwrap();
            for e in t.edges().filter(|e| !t.is_leaf(e.child)) {
                let i = t.depth(e.parent) + 1;
                let expected = match model {
                    TimingModel::Yule => q(1, i as i64 + 1),
                    TimingModel::Coalescent => q(1, (i * (i + 1)) as i64),
                };
                assert_eq!(
                    timer.interior_edge_length(e.parent, e.child).unwrap(),
                    expected
                );
            }
        }
    }

    #[test]
    fn model_names() {
        assert_eq!("Yule".parse::<TimingModel>().unwrap(), TimingModel::Yule);
        assert_eq!(TimingModel::Coalescent.to_string(), "coalescent");
        assert!("bd".parse::<TimingModel>().is_err());
    }
}
