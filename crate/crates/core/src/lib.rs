//! Robustness margins for consensus over weighted directed graphs.
//!
//! A single edge weight of a consensus network is perturbed, possibly into
//! negative values. This crate computes how far it can move before agreement
//! is lost: a general Nyquist gain-margin bound built from the reduced edge
//! dynamics of a rooted in-branching, plus closed forms for directed acyclic
//! graphs (parent out-weight sum) and directed cycles (equivalent
//! resistance). Time-domain simulation classifies the resulting regime.
//!
//! Node and edge indices are zero-based throughout the library.

#![forbid(unsafe_code)]

pub mod dynamics;
mod error;
pub mod factorization;
pub mod generate;
pub mod graph;
pub mod numerics;
pub mod robustness;

pub use error::{Error, Result};

pub use graph::{
    find_in_branching, reachability, BranchingDecomposition, Digraph, Edge, IncidenceSet,
    ReachabilityReport,
};
pub use numerics::{ComplexValue, Matrix};
pub use robustness::{bound_for_edge, rank_edges, Analyzer, EdgeBound, Method, PerturbationBound};
