//! Learned selection between LP (McCormick) and SDP relaxations of
//! nonconvex QCQPs: instance generation, relaxation building, an embedded
//! conic interior-point solver, spectral features and tree-ensemble learners.

pub mod config;
pub mod conic;
pub mod dataset;
pub mod features;
pub mod generator;
pub mod graphs;
pub mod instance;
pub mod labels;
pub mod learn;
pub mod linalg;
pub mod pipeline;
pub mod relax;
pub mod report;
pub mod rng;
