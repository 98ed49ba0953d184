//! Beamforming design and max-min fair rate allocation for multi-antenna
//! cognitive radio networks.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod linalg;
pub mod network;
pub mod sets;
pub mod lp;
pub mod mmse;
pub mod sdp;
pub mod mld;
pub mod ugd;
pub mod distsim;
pub mod cli;
