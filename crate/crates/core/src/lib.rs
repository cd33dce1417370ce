pub mod abkem;
pub mod authority;
pub mod policy;
pub mod protocol;
pub mod suite;
pub mod wire;
