pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod girsanov;
pub mod graphon;
pub mod grid;
pub mod noise;
pub mod reduce;
pub mod rng;
pub mod solver;
pub mod stattest;
pub mod verify;
