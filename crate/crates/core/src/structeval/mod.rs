//! Structural comparison of decision graphs.

mod graphlet;
mod sp;
mod stats;

pub use graphlet::{
    adjacency_code, canonical_class, graphlet_counts_exhaustive, graphlet_counts_sampled, graphlet_features,
    graphlet_similarity, normalized_graphlet_kernel, GraphletFeatures, GraphletOptions, UnsupportedSize,
};
pub use sp::{
    normalized_kernel, sp_features, sp_features_with, sp_kernel, sp_similarity, sp_similarity_with, KernelFeatures,
    SpOptions,
};
pub use stats::{
    aggregate_stats, descriptive_stats, mean_std, summarize, GraphStats, GroupSummary, MetricSummary, METRIC_NAMES,
};
