//! Rooted tree topology with cached subtree counts.
//!
//! Vertices are numbered in preorder (root is `#0`, children in input order),
//! so a subtree always occupies a contiguous id range and every child has a
//! larger id than its parent.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }

    /// Callers must ensure the index is below the tree's vertex count.
    pub fn from_index(index: usize) -> Self {
        VertexId(index)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Directed edge from `parent` to `child`. Ordered by child id, which is
/// unique per edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub parent: VertexId,
    pub child: VertexId,
}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.child, self.parent).cmp(&(other.child, other.parent))
    }
}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhyloTree {
    children: Vec<Vec<VertexId>>,
    parent: Vec<Option<VertexId>>,
    labels: Vec<Option<String>>,
    leaves_below: Vec<usize>,
    interior_below: Vec<usize>,
    subtree_size: Vec<usize>,
    depth: Vec<usize>,
}

impl PhyloTree {
    /// Builds a validated tree from arbitrary vertex indices and returns it
    /// together with the map from input index to the preorder [`VertexId`].
    pub fn from_adjacency(
        root: usize,
        children: Vec<Vec<usize>>,
        labels: Vec<Option<String>>,
    ) -> Result<(Self, Vec<VertexId>)> {
        let n = children.len();
        if n == 0 {
            return Err(Error::EmptyTree);
        }
        assert_eq!(labels.len(), n, "one label slot per vertex");

        // Unlabelled vertices are named after the first leaf below them.
        let display = |i: usize| -> String {
            if let Some(label) = &labels[i] {
                return label.clone();
            }
            let mut v = i;
            for _ in 0..n {
                match children[v].first() {
                    Some(&c) => v = c,
                    None => break,
                }
            }
            match &labels[v] {
                Some(leaf) if children[v].is_empty() => format!("unlabelled vertex above {leaf}"),
                _ => format!("input vertex {i}"),
            }
        };

        // Preorder walk; children are pushed in reverse so they pop in order.
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(Error::Syntax {
                    position: 0,
                    message: format!("vertex {} reached twice", display(v)),
                });
            }
            seen[v] = true;
            order.push(v);
            if children[v].len() == 1 {
                return Err(Error::UnaryVertex(display(v)));
            }
            stack.extend(children[v].iter().rev().copied());
        }
        if order.len() != n {
            return Err(Error::Syntax {
                position: 0,
                message: "vertices unreachable from the root".into(),
            });
        }

        let mut new_id = vec![VertexId(0); n];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = VertexId(k);
        }

        let mut seen_labels = HashMap::new();
        let mut tree = PhyloTree {
            children: vec![Vec::new(); n],
            parent: vec![None; n],
            labels: vec![None; n],
            leaves_below: vec![0; n],
            interior_below: vec![0; n],
            subtree_size: vec![0; n],
            depth: vec![0; n],
        };
        let mut labels = labels;
        for &old in &order {
            let v = new_id[old].0;
            if let Some(label) = labels[old].take() {
                if seen_labels.insert(label.clone(), v).is_some() {
                    return Err(Error::DuplicateLabel(label));
                }
                tree.labels[v] = Some(label);
            }
            tree.children[v] = children[old].iter().map(|&c| new_id[c]).collect();
            for &c in &tree.children[v] {
                tree.parent[c.0] = Some(VertexId(v));
                tree.depth[c.0] = tree.depth[v] + 1;
            }
        }

        // Children have larger ids than parents, so a reverse sweep is a postorder.
        for v in (0..n).rev() {
            if tree.children[v].is_empty() {
                tree.leaves_below[v] = 1;
                tree.subtree_size[v] = 1;
            } else {
                let (mut leaves, mut interior, mut size) = (0, 1, 1);
                for c in &tree.children[v] {
                    leaves += tree.leaves_below[c.0];
                    interior += tree.interior_below[c.0];
                    size += tree.subtree_size[c.0];
                }
                tree.leaves_below[v] = leaves;
                tree.interior_below[v] = interior;
                tree.subtree_size[v] = size;
            }
        }
        Ok((tree, new_id))
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn root(&self) -> VertexId {
        VertexId(0)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 < self.len()
    }

    pub fn vertices(&self) -> impl DoubleEndedIterator<Item = VertexId> + ExactSizeIterator {
        (0..self.len()).map(VertexId)
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| !self.is_leaf(v))
    }

    pub fn leaves(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_leaf(v))
    }

    /// Every edge of the tree, ordered by child id.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.vertices().skip(1).map(|child| Edge {
            parent: self.parent[child.0].expect("non-root vertex has a parent"),
            child,
        })
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v.0]
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.0]
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels[v.0].as_deref()
    }

    /// The label if present, otherwise the preorder name `#k`.
    pub fn name(&self, v: VertexId) -> String {
        match self.label(v) {
            Some(label) => label.to_string(),
            None => v.to_string(),
        }
    }

    /// Resolves a user-facing name: an exact label match wins, then `#k`.
    pub fn find(&self, name: &str) -> Option<VertexId> {
        if let Some(i) = self.labels.iter().position(|l| l.as_deref() == Some(name)) {
            return Some(VertexId(i));
        }
        let index: usize = name.strip_prefix('#')?.parse().ok()?;
        (index < self.len()).then_some(VertexId(index))
    }

    pub fn resolve(&self, name: &str) -> Result<VertexId> {
        self.find(name)
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v.0].is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves_below[0]
    }

    pub fn interior_count(&self) -> usize {
        self.interior_below[0]
    }

    /// `n_v`: number of leaves in the subtree at `v` (1 for a leaf).
    pub fn leaves_below(&self, v: VertexId) -> usize {
        self.leaves_below[v.0]
    }

    /// Interior vertices in the subtree at `v`, counting `v` itself.
    pub fn interior_below(&self, v: VertexId) -> usize {
        self.interior_below[v.0]
    }

    pub fn depth(&self, v: VertexId) -> usize {
        self.depth[v.0]
    }

    pub fn is_binary(&self) -> bool {
        self.children.iter().all(|c| c.is_empty() || c.len() == 2)
    }

    /// True if `a` is an ancestor of `b` or equal to it.
    pub fn is_ancestor_or_self(&self, a: VertexId, b: VertexId) -> bool {
        a.0 <= b.0 && b.0 < a.0 + self.subtree_size[a.0]
    }

    pub fn is_proper_ancestor(&self, a: VertexId, b: VertexId) -> bool {
        a != b && self.is_ancestor_or_self(a, b)
    }

    /// Vertices from `v` up to and including the root.
    pub fn path_to_root(&self, v: VertexId) -> Vec<VertexId> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur.0] {
            path.push(p);
            cur = p;
        }
        path
    }

    /// The child of `ancestor` whose subtree contains `v`.
    pub fn child_towards(&self, ancestor: VertexId, v: VertexId) -> Option<VertexId> {
        if !self.is_proper_ancestor(ancestor, v) {
            return None;
        }
        self.children[ancestor.0]
            .iter()
            .copied()
            .find(|&c| self.is_ancestor_or_self(c, v))
    }

    pub fn mrca(&self, a: VertexId, b: VertexId) -> Result<VertexId> {
        for v in [a, b] {
            if !self.contains(v) {
                return Err(Error::UnknownVertex(v.to_string()));
            }
        }
        let (mut a, mut b) = (a, b);
        while self.depth[a.0] > self.depth[b.0] {
            a = self.parent[a.0].unwrap();
        }
        while self.depth[b.0] > self.depth[a.0] {
            b = self.parent[b.0].unwrap();
        }
        while a != b {
            a = self.parent[a.0].unwrap();
            b = self.parent[b.0].unwrap();
        }
        Ok(a)
    }

    pub(crate) fn require(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.to_string()))
        }
    }

    pub(crate) fn require_interior(&self, v: VertexId) -> Result<()> {
        self.require(v)?;
        if self.is_leaf(v) {
            Err(Error::LeafVertex(self.name(v)))
        } else {
            Ok(())
        }
    }

    pub(crate) fn require_binary(&self) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::NotBinary)
        }
    }

    /// Set of leaf names under `v`, sorted. Identifies a clade independently
    /// of child order.
    pub fn clade(&self, v: VertexId) -> Vec<String> {
        let start = v.0;
        let end = v.0 + self.subtree_size[v.0];
        let mut names: Vec<String> = (start..end)
            .map(VertexId)
            .filter(|&w| self.is_leaf(w))
            .map(|w| self.name(w))
            .collect();
        names.sort();
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newick::parse_newick;

    #[test]
    fn counts_are_cached() {
        let t = parse_newick("((a,b),((c,d),e));").unwrap();
        assert_eq!(t.leaf_count(), 5);
        assert_eq!(t.interior_count(), 4);
        assert!(t.is_binary());
        for v in t.interior_vertices() {
            let sum: usize = t.children(v).iter().map(|&c| t.leaves_below(c)).sum();
            assert_eq!(sum, t.leaves_below(v));
            assert_eq!(t.interior_below(v), t.leaves_below(v) - 1);
        }
    }

    #[test]
    fn preorder_numbering() {
        let t = parse_newick("((a,b)x,(c,d)y)r;").unwrap();
        let names: Vec<String> = t.vertices().map(|v| t.name(v)).collect();
        assert_eq!(names, ["r", "x", "a", "b", "y", "c", "d"]);
        assert_eq!(t.find("#4"), t.find("y"));
        assert_eq!(t.find("#7"), None);
    }

    #[test]
    fn mrca_examples() {
        let t = parse_newick("((a,b),(c,d));").unwrap();
        let a = t.resolve("a").unwrap();
        let b = t.resolve("b").unwrap();
        let c = t.resolve("c").unwrap();
        assert_eq!(t.mrca(a, b).unwrap(), t.parent(a).unwrap());
        assert_eq!(t.mrca(a, c).unwrap(), t.root());
        assert_eq!(t.mrca(a, a).unwrap(), a);
        assert!(t.mrca(a, VertexId(99)).is_err());
    }

    #[test]
    fn binary_detection() {
        assert!(parse_newick("((a,b),(c,d));").unwrap().is_binary());
        assert!(!parse_newick("(a,b,c);").unwrap().is_binary());
        assert!(!parse_newick("(a,(b,c,d));").unwrap().is_binary());
    }

    #[test]
    fn ancestry() {
        let t = parse_newick("((a,b)x,(c,d)y)r;").unwrap();
        let r = t.resolve("r").unwrap();
        let x = t.resolve("x").unwrap();
        let c = t.resolve("c").unwrap();
        assert!(t.is_proper_ancestor(r, c));
        assert!(!t.is_proper_ancestor(x, c));
        assert!(!t.is_proper_ancestor(x, x));
        assert_eq!(t.child_towards(r, c), t.find("y"));
        assert_eq!(t.path_to_root(c).len(), 3);
    }
}
