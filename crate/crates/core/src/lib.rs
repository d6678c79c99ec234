//! Fringe-pattern simulation, normalization and phase demodulation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod demodulate;
pub mod diffusion;
pub mod fft;
pub mod metrics;
pub mod normalize;
pub mod phase;
pub mod pipeline;
pub mod raster;
pub mod rng;
pub mod simulate;
pub mod unwrap;
