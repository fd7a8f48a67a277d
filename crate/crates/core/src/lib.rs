pub mod specfun;
pub mod evaluator;
pub mod termlang;
pub mod registry;
pub mod cli;
