//! Graph statistics, sparsity scans, predictive checks and posterior
//! summaries.

pub mod assignment;
pub mod estimate;
pub mod predictive;
pub mod scan;
pub mod stats;

pub use assignment::{assignment_cost, hungarian};
pub use estimate::{
    bayes_point_estimate, community_reorder, credible_intervals, label_agreement, posterior_samples, CommunityOrdering,
    NodeInterval, NodeSelector, PointEstimate, PosteriorSample,
};
pub use predictive::{degree_distribution, posterior_predictive, Band, PredictiveResult, PredictiveStat};
pub use scan::{fit_loglog, sparsity_scan, ScalingPoint, ScalingRun};
pub use stats::{clustering_coefficient, degree_summary, DegreeSummary};
