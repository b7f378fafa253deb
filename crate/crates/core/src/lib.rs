pub mod metrics;
pub mod pad;
pub mod prediction;
pub mod rng;
pub mod session;
pub mod taskgen;
pub mod usersim;
