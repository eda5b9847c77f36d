//! Model selection for task-focused attributed network inference.
//!
//! Given timestamped node–item events, the crate builds candidate networks
//! (k-nearest-neighbor and threshold models over two intersection measures,
//! or explicit edge lists), runs collective classification and link
//! prediction on each under several task localities, and ranks the
//! configurations by validation precision.

#![allow(clippy::type_complexity)]

pub mod error;
pub mod rng;
pub mod sparse;

pub mod data;
pub mod graph;
pub mod similarity;
pub mod community;
pub mod learn;
pub mod tasks;
pub mod selection;
pub mod experiment;

pub use error::{Error, Result};

// Compiles the guide's snippets as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/tasks.md")]
    mod tasks {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
