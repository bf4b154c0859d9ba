pub mod calculus;
pub mod capacity;
pub mod carleson;
pub mod cli;
pub mod counterexample;
pub mod dirichlet;
pub mod dyadic;
pub mod error;
pub mod stochastic;
pub mod tree;
pub mod wiener;
