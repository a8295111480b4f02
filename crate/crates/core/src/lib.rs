//! Mining, modeling and explanation of reviewer participation in code review.

pub mod describe;
pub mod evaluate;
pub mod explain;
pub mod frame;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod prepare;
pub mod splinefit;
pub mod stats;
pub mod synth;
