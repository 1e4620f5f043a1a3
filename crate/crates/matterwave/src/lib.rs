pub mod config;
pub mod error;
pub mod fock;
pub mod grid;
pub mod observables;
pub mod output;
pub mod prop;
pub mod protocol;
pub mod pulses;
pub mod states;

pub use error::{Error, Result};
