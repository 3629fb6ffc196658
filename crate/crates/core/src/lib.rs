//! Distance profiles for random objects in metric spaces.
//!
//! A sample of objects (vectors, one-dimensional distributions, CDF grids,
//! compositions, networks) is reduced to its pairwise distance matrix. Each
//! object's distribution of distances to the sample, its distance profile,
//! drives transport ranks, medians and quantile sets, the profile metric and
//! a permutation-calibrated two-sample test.
//!
//! Data-parallel loops run on rayon with the default `parallel` feature and
//! fall back to sequential iteration without it. Results do not depend on
//! the thread count.

pub mod baselines;
pub mod descriptive;
pub mod embedding;
pub mod error;
pub mod metric;
pub mod numeric;
pub mod onedim;
pub mod par;
pub mod profile;
pub mod rank;
pub mod rng;
pub mod simulation;
pub mod two_sample;

pub use baselines::Ridge;
pub use descriptive::FrechetSummary;
pub use embedding::MdsEmbedding;
pub use error::{Error, Result};
pub use metric::{
    cross_distance_matrix, distance, distance_matrix, Adjacency, CrossMatrix, DistanceMatrix, Grid,
    MetricKind, MetricSpec, Object, ObjectSample,
};
pub use numeric::expit;
pub use onedim::{EmpiricalDistribution, StepWeight};
pub use profile::{build_profiles, ProfileMode, ProfileSet};
pub use rank::RankReport;
pub use simulation::{PowerConfig, PowerCurve, ScenarioName, ScenarioSpec};
pub use two_sample::{PooledDistances, TestMethod, TestResult, WeightProfile};
