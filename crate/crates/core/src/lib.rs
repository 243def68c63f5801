pub mod error;
pub mod gibbs;
pub mod io;
pub mod oracle;
pub mod potential;
pub mod relational;
pub mod tasks;
pub mod train;

pub use error::{Error, Result};
