//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("questionnaire: {0}")]
    Questionnaire(String),

    #[error("missing rating for item {0}")]
    MissingAnswer(u8),

    #[error("rating {rating} for item {item} outside 0..=5")]
    RatingOutOfRange { item: u8, rating: u8 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("backend: {0}")]
    Backend(String),

    #[error("authentication: environment variable {0} is not set")]
    MissingCredential(String),

    #[error("retries exhausted after {attempts} attempt(s): {last}")]
    RetriesExhausted { attempts: u32, last: String },

    #[error("fixture miss: no recorded completion for fingerprint {fingerprint} (prompt starts {prompt_head:?})")]
    FixtureMiss {
        fingerprint: String,
        prompt_head: String,
    },

    #[error("cache store: {0}")]
    Cache(String),

    #[error("item {item}: {unparseable} of {total} samples unparseable (over 50%)")]
    TooManyUnparseable {
        item: u8,
        unparseable: usize,
        total: usize,
    },

    #[error("empty sample multiset")]
    EmptySamples,

    #[error("example label {label:?} does not belong to the {scale:?} scale")]
    LabelNotInScale {
        label: String,
        scale: crate::questionnaire::ScaleKind,
    },

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("corpus at {dir}: found {found} excerpt(s), need {need}")]
    InsufficientCorpus {
        dir: String,
        found: usize,
        need: usize,
    },

    #[error("t-SNE: {0}")]
    Tsne(String),

    #[error("t-SNE bandwidth search failed to bracket perplexity {perplexity} for point {point}")]
    PerplexityBracket { point: usize, perplexity: f64 },

    #[error("donation script: {0}")]
    Script(String),

    #[error("ambiguous donation outcome; reply matched neither decline patterns nor a menu amount: {reply:?}")]
    AmbiguousOutcome {
        reply: String,
        transcript: Vec<crate::donation::TranscriptTurn>,
    },

    #[error("all {0} donation episodes were ambiguous")]
    AllEpisodesAmbiguous(usize),

    #[error("probabilities are not a distribution (sum {0})")]
    NotADistribution(f64),

    #[error("report: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 configuration, 3 backend, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingCredential(_) => 2,
            Error::Backend(_) | Error::RetriesExhausted { .. } | Error::FixtureMiss { .. } => 3,
            _ => 1,
        }
    }
}
