//! Exact temporal-order inference on rooted phylogenetic trees.
//!
//! Given a tree topology and the uniform distribution on its rank functions
//! (orderings of interior vertices consistent with ancestry), this crate
//! computes the distribution of any vertex's rank, the probability that one
//! vertex precedes another, and expected edge lengths under the Yule model
//! and the coalescent. All results are exact rationals.
//!
//! ```
//! use treerank::{parse_newick, compare};
//!
//! let tree = parse_newick("((a,b)u,((c,d)x,e)w);").unwrap();
//! let u = tree.resolve("u").unwrap();
//! let x = tree.resolve("x").unwrap();
//! assert_eq!(compare(&tree, u, x).unwrap().to_string(), "2/3");
//! ```

pub mod catalog;
pub mod combinatorics;
pub mod error;
pub mod newick;
pub mod oracle;
pub mod rank;
pub mod resolution;
pub mod timing;
pub mod tree;

pub use combinatorics::{
    binomial_table, count_rank_functions, rational_to_f64, to_decimal, yule_ranked_prob,
    yule_topology_prob, BigCount, BinomialTable, Rational,
};
pub use error::{Error, Result};
pub use newick::{parse_newick, write_newick, write_newick_with};
pub use oracle::{
    brute_compare, brute_joint, brute_rank_probabilities, enumerate_rank_functions,
    sample_rank_function, sample_yule_times, Enumeration, RankFunction, RankSampler,
};
pub use rank::{
    compare, compare_f64, joint_rank_prob, rank_moments, rank_probabilities,
    rank_probabilities_f64, AlphaTable, JointRankTable, RankDistribution, RankSummary, Ranker,
};
pub use resolution::{
    date_resolved, polytomy_edge_length, resolution_count, resolve_polytomies, Resolution,
    ResolutionSet, DEFAULT_MAX_RESOLUTIONS,
};
pub use timing::{
    date_tree, expected_waiting_sum, interior_edge_length, pendant_edge_length, yule_leaf_depth,
    EdgeLengthReport, EdgeTimer, TimingModel,
};
pub use tree::{Edge, PhyloTree, VertexId};
