//! Save-the-Children donation dialog task.
//!
//! An Employee turn describes the charity and asks for a donation; the
//! model's first reply is classified as decline or proceed against an
//! auditable pattern list. Proceeding episodes get the standard menu turn
//! and the reply is parsed for one of the five fixed amounts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::administration::PromptContext;
use crate::error::{Error, Result};
use crate::respondent::Respondent;

/// The fixed donation menu, in dollars.
pub const MENU_AMOUNTS: [u32; 5] = [10, 20, 50, 100, 250];

/// Episode values in outcome order: declined first, then the menu.
pub const OUTCOME_VALUES: [f64; 6] = [0.0, 10.0, 20.0, 50.0, 100.0, 250.0];

/// Decline patterns shipped with the crate, one per line.
pub const BUNDLED_DECLINE_PATTERNS: &str = include_str!("../data/decline_patterns.txt");

/// An ordered menu of donation amounts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DonationMenu {
    pub amounts: Vec<u32>,
}

impl Default for DonationMenu {
    fn default() -> Self {
        DonationMenu {
            amounts: MENU_AMOUNTS.to_vec(),
        }
    }
}

impl DonationMenu {
    pub fn validate(&self) -> Result<()> {
        if self.amounts.is_empty() || self.amounts[0] == 0 {
            return Err(Error::Script("menu amounts must be positive".into()));
        }
        if !self.amounts.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Script(
                "menu amounts must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TurnKind {
    Task,
    AmountMenu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTurn {
    pub role: String,
    pub kind: TurnKind,
    pub text: String,
}

/// The employee side of the dialog, in play order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogScript {
    pub turns: Vec<ScriptTurn>,
}

impl DialogScript {
    pub fn load_str(text: &str) -> Result<DialogScript> {
        let script: DialogScript =
            toml::from_str(text).map_err(|e| Error::Script(format!("malformed script: {e}")))?;
        script.validate()?;
        Ok(script)
    }

    pub fn load_path(path: &Path) -> Result<DialogScript> {
        Self::load_str(&std::fs::read_to_string(path)?)
    }

    /// The script shipped with the crate.
    pub fn bundled() -> DialogScript {
        Self::load_str(include_str!("../data/donation_script.toml"))
            .expect("bundled donation script is valid")
    }

    fn validate(&self) -> Result<()> {
        let menus: Vec<&ScriptTurn> = self
            .turns
            .iter()
            .filter(|t| t.kind == TurnKind::AmountMenu)
            .collect();
        if menus.len() != 1 {
            return Err(Error::Script(format!(
                "script must contain exactly one amount-menu turn, found {}",
                menus.len()
            )));
        }
        for amount in MENU_AMOUNTS {
            if !menus[0].text.contains(&format!("${amount}")) {
                return Err(Error::Script(format!(
                    "amount-menu turn does not list ${amount}"
                )));
            }
        }
        if self.turns.last().map(|t| t.kind) != Some(TurnKind::AmountMenu) {
            return Err(Error::Script("the amount-menu turn must come last".into()));
        }
        if self.turns.len() < 2 {
            return Err(Error::Script(
                "script needs a task turn before the menu".into(),
            ));
        }
        Ok(())
    }
}

/// Parse the decline-pattern list: one lowercase pattern per line,
/// `#` comments and blanks ignored.
pub fn parse_decline_patterns(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_ascii_lowercase())
        .collect()
}

/// Case-insensitive decline check against the pattern list.
pub fn is_decline(reply: &str, patterns: &[String]) -> bool {
    let lowered = reply.to_ascii_lowercase();
    patterns.iter().any(|p| lowered.contains(p.as_str()))
}

/// First dollar figure in the reply matching a menu value.
///
/// Numbers are tokenized as full digit runs, so "$250" never reads as 50.
pub fn parse_menu_amount(reply: &str) -> Option<u32> {
    let bytes = reply.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if let Ok(value) = reply[start..i].parse::<u32>() {
                if MENU_AMOUNTS.contains(&value) {
                    return Some(value);
                }
            }
        } else {
            i += 1;
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum Outcome {
    Declined,
    Donated { amount: u32 },
}

impl Outcome {
    /// Dollar value of the episode; declining contributes 0.
    pub fn value(&self) -> f64 {
        match self {
            Outcome::Declined => 0.0,
            Outcome::Donated { amount } => *amount as f64,
        }
    }

    /// Index into [`OUTCOME_VALUES`].
    pub fn index(&self) -> usize {
        match self {
            Outcome::Declined => 0,
            Outcome::Donated { amount } => {
                1 + MENU_AMOUNTS
                    .iter()
                    .position(|a| a == amount)
                    .expect("menu amount")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptTurn {
    pub role: String,
    pub text: String,
}

/// One played episode: the outcome plus the full transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub transcript: Vec<TranscriptTurn>,
}

/// Prompt for the next "You:" completion given the dialog so far.
pub fn dialog_prompt(context: &PromptContext, transcript: &[TranscriptTurn]) -> String {
    let mut prompt = String::new();
    if let Some(text) = context.text() {
        prompt.push_str(&text);
        prompt.push_str("\n\n");
    }
    for turn in transcript {
        prompt.push_str(&turn.role);
        prompt.push_str(": ");
        prompt.push_str(&turn.text);
        prompt.push('\n');
    }
    prompt.push_str("You:");
    prompt
}

/// Cut a completion at any hallucinated next Employee turn.
fn first_reply(completion: &str) -> String {
    completion
        .split("\nEmployee:")
        .next()
        .unwrap_or(completion)
        .trim()
        .to_string()
}

/// Play one scripted donation episode.
///
/// Classification is a pure function of the transcript: declines match the
/// pattern list case-insensitively, amounts are the first menu figure in
/// the reply to the menu turn. Anything else is an [`Error::AmbiguousOutcome`].
pub fn run_episode(
    respondent: &dyn Respondent,
    script: &DialogScript,
    context: &PromptContext,
    decline_patterns: &[String],
) -> Result<EpisodeOutcome> {
    let mut transcript: Vec<TranscriptTurn> = Vec::new();
    let mut first_classified = false;

    for turn in &script.turns {
        transcript.push(TranscriptTurn {
            role: "Employee".into(),
            text: turn.text.clone(),
        });
        let prompt = dialog_prompt(context, &transcript);
        let completion = respondent.complete(&prompt)?;
        let reply = first_reply(&completion);
        transcript.push(TranscriptTurn {
            role: "You".into(),
            text: reply.clone(),
        });

        if !first_classified {
            first_classified = true;
            if is_decline(&reply, decline_patterns) {
                return Ok(EpisodeOutcome {
                    outcome: Outcome::Declined,
                    transcript,
                });
            }
        }

        if turn.kind == TurnKind::AmountMenu {
            if let Some(amount) = parse_menu_amount(&reply) {
                return Ok(EpisodeOutcome {
                    outcome: Outcome::Donated { amount },
                    transcript,
                });
            }
            if is_decline(&reply, decline_patterns) {
                return Ok(EpisodeOutcome {
                    outcome: Outcome::Declined,
                    transcript,
                });
            }
            return Err(Error::AmbiguousOutcome { reply, transcript });
        }
    }
    unreachable!("script validation guarantees a final amount-menu turn")
}

/// Probability-weighted donation over {declined, $10, $20, $50, $100, $250}.
pub fn expected_donation(probabilities: &[f64; 6]) -> Result<f64> {
    let sum: f64 = probabilities.iter().sum();
    if probabilities.iter().any(|p| *p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotADistribution(sum));
    }
    Ok(probabilities
        .iter()
        .zip(OUTCOME_VALUES)
        .map(|(p, v)| p * v)
        .sum())
}

/// Empirical donation estimate over repeated episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DonationEstimate {
    pub context: PromptContext,
    pub n: usize,
    /// Outcome counts in [`OUTCOME_VALUES`] order.
    pub counts: [usize; 6],
    /// Episodes that could not be classified; excluded from the distribution.
    pub ambiguous: usize,
    /// Empirical probabilities over classified episodes.
    pub probabilities: [f64; 6],
    /// Expected donation under the empirical distribution.
    pub expected: f64,
    /// Sample standard deviation of classified episode values.
    pub std: f64,
    pub seed: u64,
    /// How the probabilities were obtained.
    pub method: String,
}

impl DonationEstimate {
    /// Table-style presentation: "expected ± std".
    pub fn display_amount(&self) -> String {
        format!("{:.2} ± {:.2}", self.expected, self.std)
    }
}

/// Run `n` episodes and reduce them to a [`DonationEstimate`].
///
/// Ambiguous episodes are counted and excluded; the estimate fails only if
/// every episode is ambiguous. The seed is provenance for the caller's
/// episode schedule; the episodes themselves are respondent-driven.
pub fn estimate(
    respondent: &dyn Respondent,
    script: &DialogScript,
    context: &PromptContext,
    n: usize,
    seed: u64,
    decline_patterns: &[String],
) -> Result<DonationEstimate> {
    if n < 1 {
        return Err(Error::Config("donation estimate needs n >= 1".into()));
    }
    let mut counts = [0usize; 6];
    let mut ambiguous = 0usize;
    let mut values: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        match run_episode(respondent, script, context, decline_patterns) {
            Ok(episode) => {
                counts[episode.outcome.index()] += 1;
                values.push(episode.outcome.value());
            }
            Err(Error::AmbiguousOutcome { .. }) => ambiguous += 1,
            Err(other) => return Err(other),
        }
    }
    if values.is_empty() {
        return Err(Error::AllEpisodesAmbiguous(n));
    }
    let valid = values.len() as f64;
    let mut probabilities = [0.0; 6];
    for (i, c) in counts.iter().enumerate() {
        probabilities[i] = *c as f64 / valid;
    }
    let expected = expected_donation(&probabilities)?;
    let std = if values.len() >= 2 {
        let mean = values.iter().sum::<f64>() / valid;
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (valid - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(DonationEstimate {
        context: context.clone(),
        n,
        counts,
        ambiguous,
        probabilities,
        expected,
        std,
        seed,
        method: "empirical frequencies over sampled episodes".into(),
    })
}
