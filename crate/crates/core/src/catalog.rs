//! Tree families for tests and benchmarks: every shape up to a leaf count,
//! every labelled binary topology, seeded random topologies, caterpillars.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::newick::parse_newick;
use crate::tree::PhyloTree;

/// Canonical Newick skeletons (leaves written `*`) of all rooted trees with
/// `n` leaves whose interior vertices have at least two children.
fn shapes(n: usize, memo: &mut BTreeMap<usize, Vec<String>>) -> Vec<String> {
    if let Some(s) = memo.get(&n) {
        return s.clone();
    }
    let mut found = BTreeSet::new();
    if n == 1 {
        found.insert("*".to_string());
    } else {
        for parts in partitions(n, n - 1) {
            if parts.len() < 2 {
                continue;
            }
            let options: Vec<Vec<String>> = parts.iter().map(|&p| shapes(p, memo)).collect();
            let mut pick = vec![0usize; parts.len()];
            'product: loop {
                let mut kids: Vec<&str> = options
                    .iter()
                    .zip(&pick)
                    .map(|(o, &k)| o[k].as_str())
                    .collect();
                kids.sort_unstable();
                found.insert(format!("({})", kids.join(",")));
                for pos in 0..pick.len() {
                    pick[pos] += 1;
                    if pick[pos] < options[pos].len() {
                        continue 'product;
                    }
                    pick[pos] = 0;
                }
                break;
            }
        }
    }
    let list: Vec<String> = found.into_iter().collect();
    memo.insert(n, list.clone());
    list
}

/// Partitions of `n` into parts no larger than `max`, in non-increasing order.
fn partitions(n: usize, max: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in (1..=max.min(n)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn label_leaves(skeleton: &str) -> String {
    let mut k = 0;
    let mut out = String::with_capacity(skeleton.len() * 2);
    for c in skeleton.chars() {
        if c == '*' {
            out.push_str(&format!("t{k}"));
            k += 1;
        } else {
            out.push(c);
        }
    }
    out.push(';');
    out
}

/// Every unlabelled tree shape (binary or not) with `2..=max_leaves`
/// leaves, leaves named `t0, t1, ...`.
pub fn shape_catalog(max_leaves: usize) -> Vec<PhyloTree> {
    let mut memo = BTreeMap::new();
    (2..=max_leaves)
        .flat_map(|n| shapes(n, &mut memo))
        .map(|s| parse_newick(&label_leaves(&s)).expect("generated Newick is valid"))
        .collect()
}

#[derive(Clone)]
enum Node {
    Leaf(usize),
    Join(Box<Node>, Box<Node>),
}

impl Node {
    fn size(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Join(l, r) => 1 + l.size() + r.size(),
        }
    }

    fn grafted(&self, target: usize, leaf: usize, counter: &mut usize) -> Node {
        let here = *counter;
        *counter += 1;
        if here == target {
            return Node::Join(Box::new(self.clone()), Box::new(Node::Leaf(leaf)));
        }
        match self {
            Node::Leaf(k) => Node::Leaf(*k),
            Node::Join(l, r) => {
                let l = l.grafted(target, leaf, counter);
                let r = r.grafted(target, leaf, counter);
                Node::Join(Box::new(l), Box::new(r))
            }
        }
    }

    fn newick(&self, out: &mut String) {
        match self {
            Node::Leaf(k) => out.push_str(&format!("t{k}")),
            Node::Join(l, r) => {
                out.push('(');
                l.newick(out);
                out.push(',');
                r.newick(out);
                out.push(')');
            }
        }
    }
}

/// All `(2n - 3)!!` rooted binary topologies on leaves `t0..t{n-1}`.
pub fn labeled_binary_topologies(n: usize) -> Vec<PhyloTree> {
    assert!(n >= 2, "need at least two leaves");
    let mut trees = vec![Node::Join(Box::new(Node::Leaf(0)), Box::new(Node::Leaf(1)))];
    for leaf in 2..n {
        trees = trees
            .iter()
            .flat_map(|t| (0..t.size()).map(move |target| t.grafted(target, leaf, &mut 0)))
            .collect();
    }
    trees
        .iter()
        .map(|t| {
            let mut s = String::new();
            t.newick(&mut s);
            s.push(';');
            parse_newick(&s).expect("generated Newick is valid")
        })
        .collect()
}

/// Binary topology on `n >= 2` leaves grown by splitting a uniformly chosen
/// leaf (Yule–Harding shape distribution), seeded.
pub fn random_binary_topology(n: usize, seed: u64) -> PhyloTree {
    assert!(n >= 2, "need at least two leaves");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut tips = vec![0usize];
    while tips.len() < n {
        let k = rng.random_range(0..tips.len());
        let parent = tips.swap_remove(k);
        for _ in 0..2 {
            let id = children.len();
            children.push(Vec::new());
            children[parent].push(id);
            tips.push(id);
        }
    }
    build(children, n)
}

/// Caterpillar with `n >= 2` leaves: every interior vertex has a leaf child.
pub fn caterpillar(n: usize) -> PhyloTree {
    assert!(n >= 2, "need at least two leaves");
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut spine = 0;
    for _ in 0..n - 2 {
        let leaf = children.len();
        let next = leaf + 1;
        children.push(Vec::new());
        children.push(Vec::new());
        children[spine] = vec![next, leaf];
        spine = next;
    }
    let (a, b) = (children.len(), children.len() + 1);
    children.push(Vec::new());
    children.push(Vec::new());
    children[spine] = vec![a, b];
    build(children, n)
}

fn build(children: Vec<Vec<usize>>, n: usize) -> PhyloTree {
    let mut labels = vec![None; children.len()];
    let mut k = 0;
    for (i, c) in children.iter().enumerate() {
        if c.is_empty() {
            labels[i] = Some(format!("t{k}"));
            k += 1;
        }
    }
    debug_assert_eq!(k, n);
    PhyloTree::from_adjacency(0, children, labels)
        .expect("generated tree is valid")
        .0
}
