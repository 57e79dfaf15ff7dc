#![allow(clippy::result_large_err)]

//! Storage/latency tradeoff of cache-aided interference networks.

pub mod lp;
pub mod model;
pub mod bounds;
pub mod dof;
pub mod regions;
pub mod cachesim;
pub mod phy;
