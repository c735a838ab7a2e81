pub mod cli;
pub mod decomposition;
pub mod error;
pub mod exterior;
pub mod smith;
pub mod structure;
pub mod submanifold;
pub mod variation;
