//! Filling graphs and curve systems on hyperbolic surfaces.

pub mod hyp;
pub mod bounds;
pub mod brooks_makover;
pub mod dual;
pub mod fill_graph;
pub mod fixtures;
pub mod surface;
