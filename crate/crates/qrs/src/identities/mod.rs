//! The identity registry and its verification drivers.

pub mod reductions;
pub mod registry;
pub mod replay;
pub mod sampling;
pub mod verify;

pub use registry::{builtin_identity, IdentityEntry, REGISTRY};
pub use verify::{verify_terminating, BetaSource, VerifyConfig};
