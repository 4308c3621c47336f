//! Convex relaxation of the Steiner tree and Gilbert–Steiner irrigation
//! problems, on staggered quadtree grids and on explicit graphs.

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod error;
pub mod graph;
pub mod grid;
pub mod kalpha;
pub mod refine;
pub mod render;
pub mod run;
pub mod shapes;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
