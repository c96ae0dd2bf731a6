//! Table-of-contents style summaries of long discussion threads.
//!
//! The pipeline segments a thread into sentences, embeds and clusters them,
//! drops clusters dominated by channel boilerplate, asks a language model for
//! a short label per cluster, assigns each label up to three argumentation
//! frames and groups the labels by frame.

pub mod bootstrap;
pub mod cluster;
pub mod embed;
pub mod eval;
pub mod framing;
pub mod http;
pub mod ingest;
pub mod labeling;
pub mod llm;
pub mod metafilter;
pub mod pipeline;
pub mod pool;
pub mod seed;
pub mod summary;
pub mod synthetic;
