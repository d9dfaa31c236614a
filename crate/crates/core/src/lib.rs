#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod compiler;
pub mod estimator;
pub mod simulator;
