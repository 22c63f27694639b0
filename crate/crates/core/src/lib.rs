//! Grounded spatial-reasoning benchmark toolkit: scene model, geometry,
//! tabletop and navigation simulators, a top-down renderer, dataset
//! generators and an evaluation harness for external planners.

pub mod datagen;
pub mod geometry;
pub mod harness;
pub mod model;
pub mod nav;
pub mod render;
pub mod rng;
pub mod tabletop;
