//! From a market equilibrium to an integral allocation.

pub mod forest;
pub mod normalize;
pub mod pipeline;
pub mod tree;

pub use forest::{find_cycle, flow_to_forest};
pub use normalize::{normalize, raw_upper_bound, upper_bound, NormalizedInstance};
pub use pipeline::{pipeline, rounding_factor, Certificate, PipelineDetails, PipelineOutput};
pub use tree::{
    check_lemmas, preprocess, round, tree_bound, LemmaReport, LemmaTally, RecursionPath, Rounding,
    RoundingForest, Tree,
};
