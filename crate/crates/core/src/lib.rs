pub mod cli;
pub mod error;
pub mod io;
pub mod lifted;
pub mod logic;
pub mod map;
pub mod oracle;
pub mod poss;
pub mod sat;
pub mod transforms;

pub use error::{Error, Result};
