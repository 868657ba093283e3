//! Constrained k-means and k-median through candidate-center lists.
//!
//! The pipeline has two halves. [`listkmeans::list_k_means`] (and
//! [`kmedian::list_k_median`]) grow a tree of distance-sampled candidate
//! centers and return a list of k-center sets. For a given constraint family
//! ([`partition::ConstraintFamily`]) [`partition::select_best`] then computes
//! the cheapest feasible clustering for every list entry, with a min-cost flow
//! for size-constrained families, and keeps the best.
//!
//! [`oracle`] holds brute-force ground truth for small inputs and
//! [`lowerbound`] the basis-vector instance showing that such lists must be
//! exponentially long.
//!
//! Cost formulas that need only field arithmetic are generic over
//! [`Scalar`] and run on exact rationals; everything involving sampling,
//! square roots or flows is generic over [`Real`] (`f32`/`f64`).

pub mod assignment;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod kmedian;
pub mod listkmeans;
pub mod lowerbound;
pub mod oracle;
pub mod partition;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod stats;
pub mod subsets;
pub mod tree;

pub use error::{Error, Result};
pub use geometry::{CenterSet, Clustering, CostReport, Dataset};
pub use listkmeans::{CandidateList, ListParams, ParamMode, Problem};
pub use partition::{ConstraintFamily, Solution};
pub use rng::RngStream;
pub use scalar::{Real, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type ExactDataset = Dataset<Rational>;

pub type CenterSet64 = CenterSet<f64>;
pub type CenterSet32 = CenterSet<f32>;
pub type ExactCenterSet = CenterSet<Rational>;

pub type CandidateList64 = CandidateList<f64>;
pub type Solution64 = Solution<f64>;
