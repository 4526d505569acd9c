//! Routing-congestion prediction for HLS dataflow graphs.
//!
//! The pipeline: load (or synthesize) a design bundle, build the merged
//! dependency graph, extract the fixed feature schema per operation, join
//! with post-place-and-route congestion labels, filter marginal unroll
//! replicas, train regressors, and map predictions back to source regions.

pub mod bundle;
pub mod dataset;
pub mod depgraph;
pub mod features;
pub mod learners;
pub mod pipeline;
pub mod report;
pub mod synthoracle;

pub use bundle::{load_design_bundle, load_labels, DesignBundle, LabelRecord};
pub use dataset::{assemble, filter_marginal, split, standardize, Dataset, Sample, Target};
pub use depgraph::{build_graph, DepGraph};
pub use features::{schema, ExtractConfig, Extractor, FeatureVector};
pub use learners::{feature_importance, load_model, save_model, ModelKind, TrainedModel};
pub use report::{localize, predict_design, ModelSet, RegionReport};
pub use synthoracle::{generate_design, place_and_route, GenConfig, GridSpec};
