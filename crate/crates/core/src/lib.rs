pub mod cli;
pub mod config;
pub mod constants;
pub mod crystal;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod micromotion;
pub mod noise;
pub mod pulses;
pub mod readout;
pub mod special;

pub use error::{Error, Result};
