//! ISS top-2 graphs and SuperChain assembly.

mod chains;
mod iss;
mod margin;
mod superchain;

use thiserror::Error;

pub use chains::{endpoint_best, ChainSet};
pub use iss::{build_iss, IssGraph, TopEntry};
pub use margin::{delta_margin, fully_supported_gaps, margin_instance, ItemMargin, MarginInstance, MarginReport};
pub use superchain::{superchain, Assembly, Merge, Stage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrderError {
    #[error("item {0} has no incident edge")]
    IsolatedVertex(usize),
    #[error("item {0} is not a chain endpoint")]
    NotAnEndpoint(usize),
    #[error("nothing to order")]
    Empty,
    #[error("assembly left {} fragments", fragments.len())]
    AssemblyIncomplete {
        fragments: Vec<Vec<usize>>,
        merges: Vec<Merge>,
    },
}
