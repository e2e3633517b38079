//! Binary resolutions of polytomies and resolution-weighted edge lengths.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::combinatorics::{yule_topology_prob, BigCount, Rational};
use crate::error::{Error, Result};
use crate::timing::{EdgeLengthReport, EdgeTimer, TimingModel};
use crate::tree::{Edge, PhyloTree, VertexId};

pub const DEFAULT_MAX_RESOLUTIONS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct Resolution {
    pub tree: PhyloTree,
    /// Yule probability of this binary topology.
    pub weight: Rational,
    /// Source vertex index to the vertex of `tree` with the same clade.
    pub vertex_map: Vec<VertexId>,
}

impl Resolution {
    pub fn image(&self, v: VertexId) -> VertexId {
        self.vertex_map[v.index()]
    }
}

#[derive(Debug, Clone)]
pub struct ResolutionSet {
    pub source: PhyloTree,
    pub resolutions: Vec<Resolution>,
}

impl ResolutionSet {
    /// Normaliser `Σ_i P[T_i]`.
    pub fn total_weight(&self) -> Rational {
        self.resolutions.iter().map(|r| &r.weight).sum()
    }
}

/// Rooted binary tree over `d` items, built by inserting items one at a time.
#[derive(Debug, Clone)]
enum Local {
    Item(usize),
    Join(Box<Local>, Box<Local>),
}

impl Local {
    fn node_count(&self) -> usize {
        match self {
            Local::Item(_) => 1,
            Local::Join(l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    /// Replaces the `target`-th node (preorder) with a join of it and `item`.
    fn insert(&self, target: usize, item: usize) -> Local {
        fn go(node: &Local, target: usize, item: usize, counter: &mut usize) -> Local {
            let here = *counter;
            *counter += 1;
            if here == target {
                return Local::Join(Box::new(node.clone()), Box::new(Local::Item(item)));
            }
            match node {
                Local::Item(k) => Local::Item(*k),
                Local::Join(l, r) => {
                    let l = go(l, target, item, counter);
                    let r = go(r, target, item, counter);
                    Local::Join(Box::new(l), Box::new(r))
                }
            }
        }
        go(self, target, item, &mut 0)
    }
}

/// All `(2d - 3)!!` rooted binary trees on `d >= 2` items.
fn local_resolutions(d: usize) -> Vec<Local> {
    let mut shapes = vec![Local::Join(
        Box::new(Local::Item(0)),
        Box::new(Local::Item(1)),
    )];
    for item in 2..d {
        shapes = shapes
            .iter()
            .flat_map(|s| (0..s.node_count()).map(move |t| s.insert(t, item)))
            .collect();
    }
    shapes
}

/// Number of binary resolutions, the product of `(2d - 3)!!` over vertices
/// with `d > 2` children.
pub fn resolution_count(tree: &PhyloTree) -> BigCount {
    let mut count = BigCount::from(1u32);
    for v in tree.interior_vertices() {
        let d = tree.children(v).len();
        for k in (3..2 * d - 2).step_by(2) {
            count *= k as u64;
        }
    }
    count
}

fn build_resolution(
    tree: &PhyloTree,
    choices: &[(VertexId, &Local)],
) -> Result<(PhyloTree, Vec<VertexId>)> {
    let n = tree.len();
    let mut children: Vec<Vec<usize>> = tree
        .vertices()
        .map(|v| tree.children(v).iter().map(|c| c.index()).collect())
        .collect();
    let mut labels: Vec<Option<String>> = tree
        .vertices()
        .map(|v| tree.label(v).map(String::from))
        .collect();

    for &(v, shape) in choices {
        let kids: Vec<usize> = tree.children(v).iter().map(|c| c.index()).collect();
        // Iterative expansion: (node in shape, vertex index it becomes).
        let mut stack = vec![(shape, v.index())];
        while let Some((node, index)) = stack.pop() {
            let Local::Join(l, r) = node else {
                unreachable!("items are attached by their parent join")
            };
            let mut slots = Vec::with_capacity(2);
            for side in [l.as_ref(), r.as_ref()] {
                match side {
                    Local::Item(k) => slots.push(kids[*k]),
                    join => {
                        let fresh = children.len();
                        children.push(Vec::new());
                        labels.push(None);
                        stack.push((join, fresh));
                        slots.push(fresh);
                    }
                }
            }
            children[index] = slots;
        }
    }
    let (resolved, map) = PhyloTree::from_adjacency(tree.root().index(), children, labels)?;
    Ok((resolved, map[..n].to_vec()))
}

/// Every binary refinement of `tree` with its Yule weight. Binary trees
/// yield themselves.
pub fn resolve_polytomies(tree: &PhyloTree, max_resolutions: usize) -> Result<ResolutionSet> {
    let count = resolution_count(tree);
    if count > BigCount::from(max_resolutions) {
        return Err(Error::ResolutionCap {
            count,
            cap: max_resolutions,
        });
    }
    let polytomies: Vec<(VertexId, Vec<Local>)> = tree
        .interior_vertices()
        .filter(|&v| tree.children(v).len() > 2)
        .map(|v| (v, local_resolutions(tree.children(v).len())))
        .collect();

    let mut resolutions = Vec::new();
    let mut odometer = vec![0usize; polytomies.len()];
    loop {
        let choices: Vec<(VertexId, &Local)> = polytomies
            .iter()
            .zip(&odometer)
            .map(|((v, shapes), &k)| (*v, &shapes[k]))
            .collect();
        let (resolved, vertex_map) = build_resolution(tree, &choices)?;
        let weight = yule_topology_prob(&resolved)?;
        resolutions.push(Resolution {
            tree: resolved,
            weight,
            vertex_map,
        });

        // Advance the mixed-radix counter; stop after the last combination.
        let mut pos = 0;
        loop {
            if pos == odometer.len() {
                return Ok(ResolutionSet {
                    source: tree.clone(),
                    resolutions,
                });
            }
            odometer[pos] += 1;
            if odometer[pos] < polytomies[pos].1.len() {
                break;
            }
            odometer[pos] = 0;
            pos += 1;
        }
    }
}

fn check_interior_edge(tree: &PhyloTree, u: VertexId, v: VertexId) -> Result<()> {
    tree.require(u)?;
    tree.require(v)?;
    if tree.parent(v) != Some(u) {
        return Err(Error::NotParent {
            parent: tree.name(u),
            child: tree.name(v),
        });
    }
    if tree.is_leaf(v) {
        return Err(Error::PendantEdge(tree.name(v)));
    }
    Ok(())
}

/// Sum of expected lengths on the path from `top` down to `bottom`.
fn path_length(
    resolved: &PhyloTree,
    timer: &EdgeTimer<'_>,
    top: VertexId,
    bottom: VertexId,
) -> Result<Rational> {
    let mut total = Rational::zero();
    let mut cur = bottom;
    while cur != top {
        let parent = resolved.parent(cur).expect("top is an ancestor of bottom");
        total += timer.interior_edge_length(parent, cur)?;
        cur = parent;
    }
    Ok(total)
}

impl ResolutionSet {
    /// `Σ_i e_i P[T_i] / Σ_i P[T_i]` for each requested source edge, where
    /// `e_i` is the summed expected length of the path between the images
    /// of the edge's endpoints in resolution `i`.
    pub fn edge_lengths(
        &self,
        edges: &[Edge],
        model: TimingModel,
    ) -> Result<BTreeMap<Edge, Rational>> {
        for e in edges {
            check_interior_edge(&self.source, e.parent, e.child)?;
        }
        let mut sums: BTreeMap<Edge, Rational> =
            edges.iter().map(|&e| (e, Rational::zero())).collect();
        for res in &self.resolutions {
            let timer = EdgeTimer::new(&res.tree, model)?;
            for (e, acc) in sums.iter_mut() {
                let e_i = path_length(&res.tree, &timer, res.image(e.parent), res.image(e.child))?;
                *acc += e_i * &res.weight;
            }
        }
        let total = self.total_weight();
        Ok(sums.into_iter().map(|(e, s)| (e, s / &total)).collect())
    }
}

pub fn polytomy_edge_length(
    tree: &PhyloTree,
    u: VertexId,
    v: VertexId,
    model: TimingModel,
    max_resolutions: usize,
) -> Result<Rational> {
    check_interior_edge(tree, u, v)?;
    let set = resolve_polytomies(tree, max_resolutions)?;
    let edge = Edge {
        parent: u,
        child: v,
    };
    Ok(set
        .edge_lengths(&[edge], model)?
        .remove(&edge)
        .expect("edge was requested"))
}

/// Interior edge lengths of a possibly non-binary tree, averaged over its
/// binary resolutions. Binary trees go straight to the single-tree dating.
pub fn date_resolved(
    tree: &PhyloTree,
    model: TimingModel,
    max_resolutions: usize,
) -> Result<EdgeLengthReport> {
    if tree.is_binary() {
        return crate::timing::date_tree(tree, model, false);
    }
    let set = resolve_polytomies(tree, max_resolutions)?;
    let edges: Vec<Edge> = tree.edges().filter(|e| !tree.is_leaf(e.child)).collect();
    Ok(EdgeLengthReport {
        model,
        interior: set.edge_lengths(&edges, model)?,
        pendant: BTreeMap::new(),
        leaf_depths: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;
    use crate::timing::interior_edge_length;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn double_factorial_counts() {
        for (d, expected) in [(2usize, 1usize), (3, 3), (4, 15), (5, 105), (6, 945)] {
            assert_eq!(local_resolutions(d).len(), expected);
        }
        let star = parse_newick("(a,b,c,d,e,f,g,h,i);").unwrap();
        assert_eq!(resolution_count(&star), BigCount::from(2_027_025u32));
        let eight = parse_newick("(a,b,c,d,e,f,g,h);").unwrap();
        assert_eq!(resolution_count(&eight), BigCount::from(135_135u32));
    }

    #[test]
    fn three_leaf_star() {
        let t = parse_newick("(a,b,c);").unwrap();
        let set = resolve_polytomies(&t, 10).unwrap();
        assert_eq!(set.resolutions.len(), 3);
        for r in &set.resolutions {
            assert!(r.tree.is_binary());
            assert_eq!(r.weight, q(1, 3));
        }
        let mut cherries: Vec<Vec<String>> = set
            .resolutions
            .iter()
            .map(|r| {
                let inner = r
                    .tree
                    .interior_vertices()
                    .find(|&v| v != r.tree.root())
                    .unwrap();
                r.tree.clade(inner)
            })
            .collect();
        cherries.sort();
        assert_eq!(cherries, [["a", "b"], ["a", "c"], ["b", "c"]]);
    }

    #[test]
    fn nested_polytomy() {
        let t = parse_newick("(a,(b,c,d));").unwrap();
        assert_eq!(resolve_polytomies(&t, 10).unwrap().resolutions.len(), 3);
    }

    #[test]
    fn cap_is_enforced_with_exact_count() {
        let t = parse_newick("(a,b,c,d,e,f,g,h,i);").unwrap();
        match resolve_polytomies(&t, DEFAULT_MAX_RESOLUTIONS) {
            Err(Error::ResolutionCap { count, cap }) => {
                assert_eq!(count, BigCount::from(2_027_025u32));
                assert_eq!(cap, 10_000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vertex_map_preserves_clades() {
        let t = parse_newick("((a,b,c)x,(d,e)y,f)r;").unwrap();
        let set = resolve_polytomies(&t, 100).unwrap();
        assert_eq!(set.resolutions.len(), 9);
        for r in &set.resolutions {
            for v in t.vertices() {
                assert_eq!(t.clade(v), r.tree.clade(r.image(v)));
                assert_eq!(t.label(v), r.tree.label(r.image(v)));
            }
        }
    }

    #[test]
    fn binary_tree_passes_through() {
        let t = parse_newick("((a,b)ab,((c,d)cd,e)w)root;").unwrap();
        for e in t.edges().filter(|e| !t.is_leaf(e.child)) {
            for model in [TimingModel::Yule, TimingModel::Coalescent] {
                assert_eq!(
                    polytomy_edge_length(&t, e.parent, e.child, model, 1).unwrap(),
                    interior_edge_length(&t, e.parent, e.child, model).unwrap()
                );
            }
        }
    }

    #[test]
    fn pendant_edge_rejected() {
        let t = parse_newick("((a,b),(c,d,e)y)r;").unwrap();
        let y = t.resolve("y").unwrap();
        let c = t.resolve("c").unwrap();
        assert_eq!(
            polytomy_edge_length(&t, y, c, TimingModel::Yule, 100),
            Err(Error::PendantEdge("c".into()))
        );
        assert!(matches!(
            polytomy_edge_length(&t, t.root(), c, TimingModel::Yule, 100),
            Err(Error::NotParent { .. })
        ));
    }

    #[test]
    fn trinary_child_of_root() {
        let t = parse_newick("((a,b),(c,d,e)y)r;").unwrap();
        let y = t.resolve("y").unwrap();
        // All three resolutions are ((c,d),e) up to relabelling.
        assert_eq!(
            polytomy_edge_length(&t, t.root(), y, TimingModel::Yule, 100).unwrap(),
            q(11, 18)
        );
    }
}
