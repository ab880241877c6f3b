//! Multiplex analysis of offline and online social ties.
//!
//! Layers of communication (calls, SMS, co-location) over a shared roster
//! form a [`graph::MultiplexGraph`]. Tie strength is the fraction of layers
//! a pair uses ([`weight`]), distance is the shortest path over edges whose
//! length shrinks with that strength ([`distance`]), and the [`stats`]
//! module relates both to survey-derived profile similarity ([`profiles`])
//! and reported relationships ([`ingest`]).

pub mod distance;
pub mod graph;
pub mod ingest;
pub mod matrix;
pub mod pipeline;
pub mod profiles;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod verify;
pub mod weight;

pub use graph::{Layer, LayerStats, MultiplexGraph, Roster};
pub use matrix::{MatrixKind, WeightedMatrix};
