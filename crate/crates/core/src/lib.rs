pub mod config;
pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod pipeline;
pub mod mor;
pub mod sweep;
pub mod tbl;

pub use error::{Error, Result};
pub use faer::c64;
