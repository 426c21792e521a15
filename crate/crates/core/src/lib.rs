//! Connective structures of finite spaces, multipartite quantum states,
//! multilocal devices and families of random variables.

pub mod builtins;
pub mod connective;
pub mod density;
pub mod devices;
pub mod disentangle;
pub mod error;
pub mod io;
pub mod quantum;
pub mod randvars;

pub use connective::{ConnectiveStructure, GroundSet, Subset};
pub use error::{Error, Result};
