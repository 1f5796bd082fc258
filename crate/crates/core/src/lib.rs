//! Continuous-time quantum walk search on graphs.
//!
//! Decides, for a graph and a target vertex, whether the search Hamiltonian
//! `H = gamma L - |t><t|` drives the uniform state onto the target: computes
//! the spectral criterion quantities (alpha, the moments M1/M2, the critical
//! jumping rate, the evolution time and peak overlap) from the operator's
//! spectrum, and validates every prediction against an exact time-evolution
//! oracle based on full diagonalization.
//!
//! All numerics are generic over the scalar type ([`scalar::Scalar`], i.e.
//! `f32` or `f64`); the `*64` aliases below pick the double-precision
//! instantiation used by the CLI and by the accuracy contracts.

pub mod criterion;
pub mod evolution;
pub mod graphs;
pub mod scalar;
pub mod spectral;

pub use scalar::Scalar;

pub type Graph64 = graphs::Graph<f64>;
pub type SearchOperator64 = graphs::SearchOperator<f64>;
pub type Spectrum64 = spectral::Spectrum<f64>;
pub type OverlapProfile64 = spectral::OverlapProfile<f64>;
pub type SearchAnalysis64 = criterion::SearchAnalysis<f64>;
pub type EvolutionTrace64 = evolution::EvolutionTrace<f64>;
