//! Interactive video exploration engine: offline ingestion of frame
//! directories into shots and one-second samples, multi-modal features,
//! and the in-memory query core behind the HTTP service.

pub mod catalog;
pub mod explore;
pub mod features;
#[doc(hidden)]
pub mod fixture;
pub mod frame;
pub mod ingest;
pub mod pipeline;
pub mod search;
pub mod som;
