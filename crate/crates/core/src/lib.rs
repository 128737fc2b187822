//! Query-efficient seriation: recover a linear order of items from a
//! pairwise oracle with near-linear probe budgets.

pub mod baselines;
pub mod construct;
pub mod dsu;
pub mod eval;
pub mod graph;
pub mod ledger;
pub mod oracle;
pub mod order;
pub mod perm;
pub mod pipeline;
