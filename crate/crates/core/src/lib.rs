pub mod error;
pub mod geo;
pub mod ingest;
pub mod labeling;
pub mod model;
pub mod network;
pub mod optimizer;
pub mod scalar;
pub mod synth;
pub mod time;

pub use error::{Error, Result};

/// Lateness model at 64-bit precision.
pub type LatenessModel = model::LatenessModel<f64>;
/// Autoencoder at 64-bit precision.
pub type Autoencoder = model::Autoencoder<f64>;
/// Road graph with 64-bit per-edge weights.
pub type WeightedGraph = optimizer::WeightedGraph<f64>;
/// Weighted path with a 64-bit cost.
pub type Path = optimizer::Path<f64>;
