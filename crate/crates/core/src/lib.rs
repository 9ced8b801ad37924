//! SIMON-like cipher kernels and the classical side of a (related-key)
//! differential-neural distinguisher pipeline.
//!
//! * [`cipher`]: SIMON32/64, SIMON64/128, SIMECK32/64, SIMECK64/128.
//! * [`dataset`]: labeled multi-pair datasets and their binary file format.
//! * [`cd`]: exact round differentials, characteristic search, sampling.
//! * [`sweep`]: input-difference enumeration, rotation classes, training
//!   sweeps through an external trainer, hybrid ranking.
//! * [`ledger`]: append-only experiment records.
//! * [`config`]: TOML configuration documents.

pub mod cd;
pub mod cipher;
pub mod config;
pub mod dataset;
pub mod diff;
pub mod error;
pub mod ledger;
pub mod rng;
pub mod sweep;

pub use cd::{
    empirical_dp, enumerate_outputs, most_likely_output, round_dp, search_characteristics,
    Constraint, DpResult, SearchReport, Trail,
};
pub use cipher::{rotl, Block, CipherId, CipherSpec, RoundKeys, Schedule, StateTrace};
pub use dataset::{
    delta_r_prev, partial_delta_r2, read_dataset, write_dataset, DataFormat, DatasetHeader,
    DatasetParams, NegativeMode, Sample,
};
pub use diff::{DiffState, Difference, KeyDifference};
pub use error::{Error, Result};
pub use rng::SplitMix64;
