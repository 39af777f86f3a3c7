//! Counterfactual explanations for time-series classifiers.
//!
//! A counterfactual is built by copying values from the Nearest Unlike
//! Neighbor (NUN) of the query into the cells selected by a binary change
//! mask. The masks are evolved with a subsequence-aware NSGA-II that keeps
//! only valid counterfactuals on the returned Pareto front while trading off
//! adversarial confidence, sparsity, contiguity and plausibility.
//!
//! Module map:
//!
//! * [`series`] and [`mask`]: instances, datasets, change masks and the mask algebra.
//! * [`neighbors`]: nearest unlike neighbor search.
//! * [`models`]: classifier / outlier-scorer interfaces, reference models, the
//!   external process bridge and model files.
//! * [`objectives`]: the four penalized objectives.
//! * [`genetic`]: NSGA-II machinery and the subsequence mutations.
//! * [`driver`]: the two-phase search and utility-based selection.
//! * [`eval`]: metrics, the full-swap baseline and batch reports.
//! * [`synth`]: seeded synthetic datasets.


#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod driver;
pub mod error;
pub mod eval;
pub mod genetic;
pub mod mask;
pub mod models;
pub mod neighbors;
pub mod objectives;
pub mod series;
pub mod synth;

pub use driver::{run_multispace, select_by_utility, FrontMember, ParetoFront, RunConfig, UtilityWeights};
pub use error::{Error, Result};
pub use mask::{ChangeMask, MaskKind, Subsequence};
pub use models::{Classifier, OutlierScorer};
pub use neighbors::{find_nun, NunFilter, NunMode, NunResult};
pub use objectives::{evaluate_objectives, ObjectiveConfig, ObjectiveVector};
pub use series::{LabeledDataset, TimeSeriesInstance};
