//! Desk-scale workbench for subshifts of finite type on finitely generated
//! groups.
//!
//! The crate is organized in layers:
//!
//! * [`presentation`] / [`rewrite`] / [`ball`] / [`acceptor`] / [`growth`] —
//!   group presentations, shortlex Knuth–Bendix completion, Cayley balls, the
//!   shortlex word acceptor, and its Perron–Frobenius growth analysis;
//! * [`shift`] — alphabets, chart atlases, nearest-neighbor recoding, pattern
//!   extension search, and periodicity detection on ℤ and ℤ²;
//! * [`wang`] — Wang tiles: Turing-machine compilation, the hierarchical
//!   unseeded tile set, square/torus searches, and run decoding;
//! * [`shelling`] — distance-difference labels, parents, horofunction
//!   integration, chart atlases over the label alphabet, and translation
//!   constants;
//! * [`aperiodic`] — future cones, level sets, divergence graphs, Sturmian
//!   level sequences, populations, parent–child matchings with Hall
//!   certificates, lineage checks, and window aperiodicity reports;
//! * [`manifest`] / [`render`] — reproducibility manifests and SVG/DOT/ASCII
//!   renderers.
//!
//! Every operation is a pure function of its inputs; randomized helpers take
//! explicit seeds. Searches carry budgets and report budget exhaustion
//! distinctly from a definitive "no result".

pub mod acceptor;
pub mod aperiodic;
pub mod ball;
pub mod error;
pub mod growth;
pub mod manifest;
pub mod presentation;
pub mod render;
pub mod rewrite;
pub mod shelling;
pub mod shift;
pub mod wang;
pub mod word;

pub use error::{Error, Result};
