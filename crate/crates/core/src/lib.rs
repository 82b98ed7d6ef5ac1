//! Sampling-rate sweep toolkit for TinyML time-series classifiers.
//!
//! The crate covers the full pipeline from raw sensor CSVs to MCU resource
//! reports:
//!
//! - [`datapipe`] — CSV ingestion, sliding-window segmentation, rate-reduced
//!   dataset variants, train/test splitting with z-score standardization.
//! - [`nn`] — a compact separable-CNN classifier family (SeparableConv1D /
//!   MaxPool1D / GlobalAveragePooling1D / Dense) with reverse-mode gradients
//!   and Adam, trained from scratch in pure Rust.
//! - [`compress`] — magnitude pruning and post-training int8 quantization,
//!   plus a quantized integer inference path for deployed-accuracy checks.
//! - [`footprint`] — static resource analysis: exact MAC counts, FLASH size,
//!   peak-RAM via tensor-arena planning, and latency/energy prediction under
//!   a calibratable device cost model.
//! - [`sweep`] — the end-to-end experiment: one train/compress/profile run
//!   per reduction rate, with CSV/JSON reports and cross-variant summaries.
//! - [`synth`] — deterministic synthetic datasets used as training oracles.
//!
//! The `tinysweep` binary exposes each stage as a subcommand; see [`cli`].

pub mod cli;
pub mod compress;
pub mod datapipe;
pub mod footprint;
pub mod fsio;
pub mod nn;
pub mod seed;
pub mod sweep;
pub mod synth;
