pub mod config;
pub mod error;
pub mod pipeline;
pub mod service;
pub mod workspace;

pub use config::PipelineConfig;
pub use error::{PipelineError, Result};
pub use pipeline::Pipeline;
pub use workspace::Workspace;
