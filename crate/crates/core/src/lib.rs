//! Decentralized optimization with EXTRA, NIDS and DGD over static graphs,
//! plus Lyapunov-based linear convergence certificates.
#![no_std]
extern crate alloc;

pub mod error;
pub mod graph;
pub mod linalg;
pub mod mixing;
pub mod problem;
pub mod algorithms;
pub mod certify;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};
