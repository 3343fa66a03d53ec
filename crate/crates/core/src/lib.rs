//! Moral Foundations Questionnaire toolkit for language-model backends.
//!
//! The crate administers the 32-item MFQ to any prompt-to-completion
//! backend, reduces the sampled answers to five foundation scores, and
//! provides the downstream analyses: human-baseline comparison, cross-context
//! consistency, foundation-maximizing prompt steering, a donation dialog
//! task, and a small exact t-SNE for plotting score profiles.

pub mod administration;
pub mod analysis;
pub mod donation;
pub mod error;
pub mod questionnaire;
pub mod report;
pub mod respondent;
pub mod tsne;

pub use error::{Error, Result};
pub use questionnaire::{
    Foundation, FoundationScores, Item, Questionnaire, RatingScale, ScaleKind, ScoringKey,
};
pub use respondent::{ModelConfig, ParsedRating, Respondent};
