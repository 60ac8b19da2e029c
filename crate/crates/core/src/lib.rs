//! Rankings from bilateral flows.
//!
//! Treat every unit sent from entity `i` to entity `j` as one vote for `i`
//! over `j`. This crate turns a nonnegative flow matrix into three score
//! vectors (net, ratio and least squares), ranks entities by them, checks
//! the size-invariance and bridge-independence properties on concrete
//! instances, and compares rankings across methods, merges and years.
//!
//! ```
//! use flowrank::{fixtures, score, to_ranking, Method, DEFAULT_TIE_TOLERANCE};
//!
//! let a = fixtures::four_country();
//! let q = score(&a, Method::LeastSquares)?;
//! let ranking = to_ranking(&q, DEFAULT_TIE_TOLERANCE);
//! assert_eq!(ranking.ranks(), &[1, 1, 3, 3]);
//! # Ok::<(), flowrank::Error>(())
//! ```
//!
//! The guide in `book/` walks through the model; its code listings run as
//! doctests of this crate.

pub mod analysis;
pub mod axioms;
mod error;
pub mod fixtures;
pub mod flow;
pub mod io;
mod linalg;
pub mod ranker;
pub mod synth;

pub use analysis::{aggregation_impact, compare_rankings, panel_trajectory, RankComparison};
pub use axioms::{add_clone, build_bridge, check_bridge_independence, check_size_invariance, CloneSpec, Verdict};
pub use error::{Error, Result};
pub use flow::{
    build_flow_matrix, connectivity_components, derive, merge_entities, DerivedMatrices, EntityId, FlowMatrix,
    MergeSpec, Registry,
};
pub use io::{FlowPanel, TableFormat};
pub use ranker::{
    least_squares_scores, net_scores, ratio_scores, score, to_ranking, Method, Ranking, WeightVector,
    DEFAULT_TIE_TOLERANCE,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/scores.md")]
    mod scores {}
    #[doc = include_str!("../../../book/src/least_squares.md")]
    mod least_squares {}
    #[doc = include_str!("../../../book/src/rankings.md")]
    mod rankings {}
    #[doc = include_str!("../../../book/src/axioms.md")]
    mod axioms {}
    #[doc = include_str!("../../../book/src/aggregation.md")]
    mod aggregation {}
    #[doc = include_str!("../../../book/src/data_and_cli.md")]
    mod data_and_cli {}
}
