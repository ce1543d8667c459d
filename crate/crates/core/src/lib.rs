//! Real-time forecasting of tunnel-boring-machine load parameters (cutterhead
//! torque, advance rate and thrust) from windowed multivariate sensor series.
//!
//! The crate covers the whole experiment pipeline: CSV ingestion and min/range
//! normalization ([`dataset`]), lasso feature selection ([`lasso`]), shallow
//! baselines ([`shallow`]), feed-forward and recurrent networks with
//! exact gradients ([`neural`]), their optimizers ([`optim`]), evaluation
//! ([`metrics`]), a synthetic benchmark with known structure ([`synthetic`]),
//! and the orchestration behind the `tbm-forecast` binary ([`experiment`]).

pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod lasso;
pub mod matrix;
pub mod metrics;
pub mod neural;
pub mod optim;
pub mod plot;
pub mod shallow;
pub mod synthetic;

pub use error::{Error, Result};
pub use matrix::Matrix;
