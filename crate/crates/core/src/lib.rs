//! Mining, classifying and prioritizing ethical concerns raised in forum
//! posts about software platforms.

pub mod classify;
pub mod defaults;
pub mod cluster;
pub mod error;
pub mod ingest;
pub mod lexicon;
pub mod norm;
pub mod pipeline;
pub mod priority;
pub mod report;
pub mod sentiment;
pub mod synth;
pub mod text;
pub mod timeline;

pub use error::{Error, Result};
