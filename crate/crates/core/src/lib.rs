//! Probabilistic classifiers over categorical features built as decomposable
//! graphical models, a backward sweep over their complexity, and measures
//! that split classification error between the feature set, the parametric
//! form and the parameter estimates.

pub mod cli;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod features;
pub mod graphmodel;
pub mod measures;
pub mod report;
pub mod selection;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use domain::{Dataset, Domain};
pub use error::{Error, Result};
pub use features::FeatureVector;
pub use graphmodel::{fit_ml, FittedModel, ModelForm};
