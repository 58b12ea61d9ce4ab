//! Core algorithms for appearance/speed-consistency video pretraining.
//!
//! Everything in this crate is pure computation over in-memory data: a small
//! reverse-mode autodiff engine, a procedural video corpus with known
//! appearance classes and motion, the TinyC3D encoder with its projection and
//! prediction heads, the consistency losses and appearance memory bank, the
//! LARS optimizer and training loop, and the downstream evaluation protocols
//! (nearest-neighbor retrieval, linear probes, fine-tuning, collapse
//! diagnostics). File formats, the CLI, and anything that touches the OS live
//! in the companion `ascnet-cli` crate.
//!
//! The crate is `no_std` (with `alloc`); float transcendentals come from
//! `libm` so results are reproducible bit-for-bit across platforms.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod augment;
pub mod autodiff;
pub mod error;
pub mod eval;
pub mod model;
pub mod objectives;
pub mod opt;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
