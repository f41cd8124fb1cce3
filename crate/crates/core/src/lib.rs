//! Musielak–Orlicz functions, sharp-maximal modulars and their small-ε
//! asymptotics on sampled fields.

pub mod cli;
pub mod convergence;
pub mod error;
pub mod fields;
pub mod modular;
pub mod numeric;
pub mod phi;

pub use error::{Error, Result};
