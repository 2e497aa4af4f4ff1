//! Many-to-one hybrid group authentication.

pub mod actors;
pub mod batch;
pub mod costmodel;
pub mod crypto;
pub mod netsim;
pub mod tokens;
pub mod wire;
