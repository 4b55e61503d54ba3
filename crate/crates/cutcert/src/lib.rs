//! Node-capacitated multicommodity instances, linear network codes over prime
//! fields, and certified multicut lower bounds built from strong graph
//! products.
//!
//! The pipeline: build an [`instance::Instance`] (an undirected graph with
//! paired source/sink terminals attached to vertex sets), give it a
//! [`code::LinearCode`] (for example one indicator column per path in a
//! vertex-disjoint path packing), and compose instances and codes with the
//! strong product. The composed code carries witnesses that lower-bound every
//! multicut of the composed instance by its decoding rate, which
//! [`product::build_b_certificate`] checks concretely on any given cut.
//! [`flow::max_multicommodity_flow`] solves the exact fractional relaxation
//! for comparison, and [`saks`] drives the whole construction for k-fold
//! products of paths.

#![forbid(unsafe_code)]

pub mod code;
pub mod field;
pub mod flow;
pub mod instance;
pub mod linalg;
pub mod product;
pub mod saks;
