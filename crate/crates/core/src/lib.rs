//! Adaptive fault-tolerance structures for TSV groups in 3D ICs.

pub mod fixtures;
pub mod flow;
pub mod gen;
pub mod geom;
pub mod ilpgen;
pub mod mcmfgen;
pub mod planner;
pub mod relgraph;
pub mod structure;
pub mod tolerance;
pub mod yieldmodel;
