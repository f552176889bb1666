// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamformer;
pub mod bernstein;
pub mod channel;
pub mod cli;
pub mod conic;
pub mod hermitian;
pub mod montecarlo;
pub mod rate;
pub mod scenario1;
pub mod scenario2;
pub mod scenario3;
pub mod selftest;
