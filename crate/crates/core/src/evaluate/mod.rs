//! Pair-based clustering scores, zone-level rank correlation and the
//! hyperparameter grid.

mod grid;
mod metrics;
mod pairs;
mod spearman;

pub use grid::{grid_search, write_grid_csv, GridRow, GridSpec};
pub use metrics::{
    error_partition, macro_f1, pair_confusion, Bucket, ErrorPartition, MacroF1, OutlierPolicy,
    PairConfusion,
};
pub use pairs::{
    read_annotations, sample_annotation_pairs, write_annotations, AnnotatedPair, CandidatePair,
    Stratum,
};
pub use spearman::{
    average_ranks, spearman, spearman_per_cluster, ClusterCorrelation, CorrelationReport,
};
