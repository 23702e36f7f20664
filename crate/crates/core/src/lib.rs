pub mod syntax;
pub mod mutate;
pub mod runner;
pub mod exec;
pub mod dataset;
pub mod equiv;
pub mod eval;
pub mod report;
pub mod cli;
