pub mod blocks;
pub mod cli;
pub mod comembership;
pub mod error;
pub mod formats;
pub mod generators;
pub mod graph;
pub mod partition;
pub mod rmi;
pub mod sampler;
pub mod state;
pub mod svg;
