//! Neighbourhood characterisation from local news.
//!
//! The pipeline runs in stages, each living in its own module:
//!
//! * [`corpus`]: loading, sentence segmentation and near-duplicate removal.
//! * [`geoparse`]: gazetteer matching, context-aware toponym resolution and
//!   data-zone assignment.
//! * [`preprocess`]: location masking, token normalisation and function-word
//!   filtering.
//! * [`vectorize`]: tf-idf vectors, the Hellinger metric and a UMAP embedding.
//! * [`cluster`]: HDBSCAN with soft memberships, hierarchy and top terms.
//! * [`characterise`]: per-location topic distributions and theme rollups.
//! * [`evaluate`]: pair-based Macro-F1, Spearman correlation and grid search.
//! * [`synthgen`]: seeded synthetic corpora with planted ground truth.
//!
//! Data-parallel inner loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise.

pub mod characterise;
pub mod cluster;
pub mod corpus;
mod error;
mod union_find;
pub mod evaluate;
pub mod geoparse;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod synthgen;
pub mod vectorize;

pub use error::{Error, Result};

/// Placeholder token that replaces masked location spans.
pub const LOCATION_PLACEHOLDER: &str = "__LOC__";
