//! Session-based recommendation with two uni-modal networks — one over item
//! IDs, one over frozen text features — trained alternately: each network
//! mines hard negatives (and optional extra positives) from the other's
//! full-catalog rankings. Includes a naive-fusion baseline with an exact
//! ID/text score decomposition for studying modality imbalance, ranking
//! metrics with long-tail breakdowns, and a synthetic corpus generator.
//!
//! Entry points: the `alterrec` binary (`gen-data`, `train`, `evaluate`,
//! `diagnose`, `sweep`) or the library modules directly — see `examples/`.

pub mod baselines;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod encoders;
pub mod error;
pub mod evalkit;
pub mod numerics;
pub mod scoring;
pub mod training;

pub use error::{Error, Result};
