pub mod error;
pub mod exec;
pub mod numerics;

pub use error::{Error, Result};
pub use exec::Execution;
pub mod envs;
pub mod buffers;
pub mod sac;
pub mod shaping;
pub mod advisor;
pub mod harness;
