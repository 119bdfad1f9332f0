//! IO, datasets, external readers and benchmarking on top of [`tsqa_core`].
//!
//! * [`csv_io`]: CSV/TSV decoding into [`tsqa_core::Table`] and back.
//! * [`bundle`] and [`tabmcq`]: benchmark loaders.
//! * [`adapter`]: the newline-delimited JSON reader protocol and a client
//!   that drives adapter subprocesses as a [`tsqa_core::Reader`].
//! * [`harness`]: runs systems over benchmark questions, timing each one and
//!   sampling memory.
//! * [`report`]: metric grids and their CSV, JSON and SVG radar renderings.
//! * [`store`]: the on-disk cache written by `tsqa ingest`.

pub mod adapter;
pub mod bundle;
pub mod csv_io;
pub mod error;
pub mod harness;
pub mod memory;
pub mod report;
pub mod store;
pub mod tabmcq;

pub use error::{Error, Result};
