pub mod algebra;
pub mod error;
pub mod grassmann;
pub mod hierarchy;
pub mod io;
pub mod krichever;
pub mod pdo;
pub mod run;

pub use error::{Error, Result};
