//! Trace-driven adaptive-bitrate streaming lab.
//!
//! * [`traces`]: throughput traces (cooked two-column format, synthetic generators)
//! * [`video`]: bitrate ladder and chunk sizes
//! * [`env`]: chunk-level download/buffer simulator and agent observations
//! * [`qoe`]: linear and logarithmic QoE
//! * [`baselines`]: BB, RB, BOLA and robust MPC controllers
//! * [`nn`]: dense actor/critic networks with backprop and Adam
//! * [`rl`]: PPO and A3C training
//! * [`eval`]: running controllers over trace sets
//! * [`verify`]: independent oracles for the simulator, MPC and gradients

// negated float comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod env;
pub mod eval;
pub mod nn;
pub mod qoe;
pub mod rl;
pub mod traces;
pub mod verify;
pub mod video;
