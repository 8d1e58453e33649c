//! Annotation service: serves sheet batches over HTTP, keeps a durable
//! decision log and exports decisions for analysis.

pub mod app;
pub mod config;
pub mod decision_log;
pub mod error;
pub mod state;

pub use app::{router, serve};
pub use config::ServiceConfig;
pub use error::ServiceError;
pub use state::AppState;
