//! Cross-dataset evaluation of flow-based intrusion detection classifiers.
//!
//! The crate trains classifiers on one flow dataset and scores them on a
//! later one, reporting how far each model's metrics fall between the two.
//! Every stage of that workflow lives in its own module:
//!
//! - [`dataset`]: schema-tagged flow tables, CSV ingestion and auditing
//! - [`preprocess`]: cleaning, deduplication, downsampling and relabelling
//! - [`features`]: impurity-based feature ranking and accuracy curves
//! - [`models`]: decision tree, random forest, linear SVM, naive Bayes and MLPs
//! - [`tuning`]: stratified k-fold cross-validation and grid search
//! - [`evaluation`]: confusion matrices, metrics, timing and the overfit gap
//! - [`synth`]: synthetic flow pairs with controllable drift
//! - [`experiment`]: declarative configuration and the end-to-end run

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod models;
pub mod preprocess;
pub mod seed;
pub mod synth;
pub mod tuning;

pub use dataset::{ClassDistribution, Dataset, FlowRecord, Schema};
pub use error::{Error, Result};
pub use models::{ClassifierSpec, Family, HyperValue, TrainedModel};
