//! Romansh idiom identification: corpus preparation, n-gram features,
//! linear and naive Bayes classifiers, evaluation and hyperparameter search.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod corpus;
pub mod eval;
pub mod features;
pub mod masking;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod tuning;

pub use scalar::Scalar;

pub type SparseVec = features::SparseVector<f64>;
pub type Space = features::FeatureSpace<f64>;
pub type Linear = models::LinearModel<f64>;
pub type NaiveBayes = models::NBModel<f64>;
pub type AnyModel = models::Model<f64>;
