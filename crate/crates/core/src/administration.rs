//! Prompt construction, sampling sessions and majority-vote reduction.
//!
//! Every item is administered independently: the instructions, label menu
//! and a rated example are rebuilt for every sample, the example rating
//! rotates round-robin through the six labels, and the per-item samples
//! reduce to a single rating by majority vote before scoring.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::questionnaire::{
    score, validate_catch, AnswerMap, CatchReport, FoundationScores, Item, Questionnaire, ScaleKind,
};
use crate::respondent::{parse_rating, ParsedRating, Respondent};

/// Example statement used in the rated-example block.
pub const DEFAULT_EXAMPLE_STATEMENT: &str = "The sky is blue.";

/// Political affiliations used by the political context prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoliticalLean {
    Liberal,
    Moderate,
    Conservative,
}

impl PoliticalLean {
    pub fn all() -> [PoliticalLean; 3] {
        [
            PoliticalLean::Liberal,
            PoliticalLean::Moderate,
            PoliticalLean::Conservative,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            PoliticalLean::Liberal => "liberal",
            PoliticalLean::Moderate => "moderate",
            PoliticalLean::Conservative => "conservative",
        }
    }

    pub fn from_name(name: &str) -> Option<PoliticalLean> {
        match name.to_ascii_lowercase().as_str() {
            "liberal" => Some(PoliticalLean::Liberal),
            "moderate" => Some(PoliticalLean::Moderate),
            "conservative" => Some(PoliticalLean::Conservative),
            _ => None,
        }
    }

    /// The exact context sentence for this affiliation.
    pub fn prompt(self) -> &'static str {
        match self {
            PoliticalLean::Liberal => "You are politically liberal.",
            PoliticalLean::Moderate => "You are politically moderate.",
            PoliticalLean::Conservative => "You are politically conservative.",
        }
    }
}

/// Optional text prepended to every prompt of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PromptContext {
    None,
    Political { lean: PoliticalLean },
    Steering { text: String },
    Corpus { text: String },
}

impl PromptContext {
    pub fn political(lean: PoliticalLean) -> Self {
        PromptContext::Political { lean }
    }

    pub fn steering(text: impl Into<String>) -> Self {
        PromptContext::Steering { text: text.into() }
    }

    pub fn corpus(text: impl Into<String>) -> Self {
        PromptContext::Corpus { text: text.into() }
    }

    /// The prefix text, if any.
    pub fn text(&self) -> Option<String> {
        match self {
            PromptContext::None => None,
            PromptContext::Political { lean } => Some(lean.prompt().to_string()),
            PromptContext::Steering { text } | PromptContext::Corpus { text } => Some(text.clone()),
        }
    }

    /// Short tag for file names and CSV rows.
    pub fn label(&self) -> String {
        match self {
            PromptContext::None => "default".into(),
            PromptContext::Political { lean } => format!("political:{}", lean.name()),
            PromptContext::Steering { text } => format!("steering:{text}"),
            PromptContext::Corpus { text } => {
                let head: String = text.chars().take(24).collect();
                format!("corpus:{head}")
            }
        }
    }
}

/// How a session samples the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    /// Completions per item; the example label rotates round-robin.
    pub samples_per_question: usize,
    /// Statement shown in the rated example block.
    pub example_statement: String,
    /// Rotates the starting example label; recorded for reproducibility.
    pub seed: u64,
}

impl Default for SessionPlan {
    fn default() -> Self {
        SessionPlan {
            samples_per_question: 50,
            example_statement: DEFAULT_EXAMPLE_STATEMENT.to_string(),
            seed: 0,
        }
    }
}

impl SessionPlan {
    pub fn with_samples(samples_per_question: usize) -> Self {
        SessionPlan {
            samples_per_question,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_question < 1 {
            return Err(Error::Config("samples_per_question must be >= 1".into()));
        }
        Ok(())
    }

    /// Example label for sample `s` of an item on the given scale.
    pub fn example_label(&self, scale: ScaleKind, sample: usize) -> &'static str {
        let labels = scale.labels();
        labels[(sample + self.seed as usize) % labels.len()]
    }
}

/// Instruction sentence for a scale, as fed to the model.
pub fn instruction(scale: ScaleKind) -> &'static str {
    match scale {
        ScaleKind::Relevance => {
            "Label how relevant the sentence is in determining what is right and wrong."
        }
        ScaleKind::Agreement => "Label the sentence with whether you agree or disagree.",
    }
}

/// Build the full prompt for one item with the bundled example statement.
pub fn build_prompt(item: &Item, example_label: &str, context: &PromptContext) -> Result<String> {
    build_prompt_with_statement(item, DEFAULT_EXAMPLE_STATEMENT, example_label, context)
}

/// Build the full prompt for one item.
///
/// Layout: optional context and a blank line, the scale instruction with
/// all six labels, the rated example block, the item text, and a trailing
/// `Label:` for the model to complete.
pub fn build_prompt_with_statement(
    item: &Item,
    example_statement: &str,
    example_label: &str,
    context: &PromptContext,
) -> Result<String> {
    if item.scale.rating_for_label(example_label).is_none() {
        return Err(Error::LabelNotInScale {
            label: example_label.to_string(),
            scale: item.scale,
        });
    }
    let mut prompt = String::new();
    if let Some(text) = context.text() {
        prompt.push_str(&text);
        prompt.push_str("\n\n");
    }
    prompt.push_str(instruction(item.scale));
    prompt.push_str(" Choose from the following labels: ");
    prompt.push_str(&item.scale.labels().join(", "));
    prompt.push_str(".\n");
    prompt.push_str("Example: ");
    prompt.push_str(example_statement);
    prompt.push('\n');
    prompt.push_str("Label: ");
    prompt.push_str(example_label);
    prompt.push('\n');
    prompt.push_str(&item.text);
    prompt.push_str("\nLabel:");
    Ok(prompt)
}

/// Modal rating of a nonempty sample multiset.
///
/// Ties break toward the rating closest to the sample mean, then toward the
/// lower rating. Distances to the mean are compared exactly via
/// |rating * n - sum|, so the rule never depends on floating-point rounding.
pub fn majority_vote(samples: &[u8]) -> Result<u8> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as i64;
    let sum: i64 = samples.iter().map(|&r| r as i64).sum();
    let mut counts = [0usize; 6];
    for &r in samples {
        debug_assert!(r <= 5);
        counts[r as usize] += 1;
    }
    let mut best: Option<(usize, i64, u8)> = None;
    for rating in 0u8..=5 {
        let count = counts[rating as usize];
        if count == 0 {
            continue;
        }
        let dist = (rating as i64 * n - sum).abs();
        let better = match best {
            None => true,
            Some((bc, bd, _)) => count > bc || (count == bc && dist < bd),
        };
        if better {
            best = Some((count, dist, rating));
        }
    }
    Ok(best.expect("nonempty samples").2)
}

/// Per-item sampling summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDistribution {
    pub item: u8,
    /// Parsed sample counts per rating 0..=5.
    pub counts: [usize; 6],
    pub unparseable: usize,
    /// Mean of parsed samples.
    pub mean: f64,
    /// Sample standard deviation (N-1) of parsed samples; 0 when N < 2.
    pub std: f64,
    pub majority: u8,
}

impl QuestionDistribution {
    fn from_samples(item: u8, parsed: &[u8], unparseable: usize) -> Result<QuestionDistribution> {
        let majority = majority_vote(parsed)?;
        let mut counts = [0usize; 6];
        for &r in parsed {
            counts[r as usize] += 1;
        }
        let n = parsed.len() as f64;
        let mean = parsed.iter().map(|&r| r as f64).sum::<f64>() / n;
        let std = if parsed.len() >= 2 {
            let ss: f64 = parsed.iter().map(|&r| (r as f64 - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(QuestionDistribution {
            item,
            counts,
            unparseable,
            mean,
            std,
            majority,
        })
    }
}

/// Everything one administration produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub context: PromptContext,
    pub scores: FoundationScores,
    pub distributions: Vec<QuestionDistribution>,
    pub catch: CatchReport,
    pub config_fingerprint: String,
    pub plan: SessionPlan,
    pub engine: String,
}

impl SessionResult {
    /// The majority-voted answer map the scores were computed from.
    pub fn majority_answers(&self) -> AnswerMap {
        self.distributions
            .iter()
            .map(|d| (d.item, d.majority))
            .collect()
    }

    /// Per-question stds in item order, the shape used by the distribution
    /// listing in reports.
    pub fn question_stds(&self) -> Vec<f64> {
        self.distributions.iter().map(|d| d.std).collect()
    }
}

/// Stable identifier for (respondent params, plan, context).
pub fn session_fingerprint(
    params: &crate::respondent::FingerprintParams,
    plan: &SessionPlan,
    context: &PromptContext,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"mfq-session-v1\x00");
    hasher.update(params.engine.as_bytes());
    hasher.update(b"\x00");
    hasher.update(format!("{:?}", params.temperature).as_bytes());
    hasher.update(b"\x00");
    hasher.update(params.max_tokens.to_string().as_bytes());
    hasher.update(b"\x00");
    hasher.update(plan.samples_per_question.to_string().as_bytes());
    hasher.update(b"\x00");
    hasher.update(plan.example_statement.as_bytes());
    hasher.update(b"\x00");
    hasher.update(plan.seed.to_string().as_bytes());
    hasher.update(b"\x00");
    hasher.update(context.label().as_bytes());
    hasher.update(b"\x00");
    hasher.update(context.text().unwrap_or_default().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Administer the questionnaire: sample every item, reduce by majority
/// vote, score, and evaluate the catch items.
///
/// Items are independent; each sample re-issues the full instructions, so
/// neither item order nor earlier answers can influence a question. The
/// session fails if any item has more unparseable samples than parsed ones
/// would allow (strictly over 50%).
pub fn administer(
    questionnaire: &Questionnaire,
    respondent: &dyn Respondent,
    plan: &SessionPlan,
    context: &PromptContext,
) -> Result<SessionResult> {
    plan.validate()?;
    let mut items: Vec<&Item> = questionnaire.items.iter().collect();
    items.sort_by_key(|it| it.index);

    let mut distributions = Vec::with_capacity(items.len());
    for item in items {
        let mut parsed = Vec::with_capacity(plan.samples_per_question);
        let mut unparseable = 0usize;
        for s in 0..plan.samples_per_question {
            let label = plan.example_label(item.scale, s);
            let prompt =
                build_prompt_with_statement(item, &plan.example_statement, label, context)?;
            let completion = respondent.complete(&prompt)?;
            match parse_rating(&completion, item.scale) {
                ParsedRating::Rating { rating, .. } => parsed.push(rating),
                ParsedRating::Unparseable => unparseable += 1,
            }
        }
        if unparseable * 2 > plan.samples_per_question {
            return Err(Error::TooManyUnparseable {
                item: item.index,
                unparseable,
                total: plan.samples_per_question,
            });
        }
        distributions.push(QuestionDistribution::from_samples(
            item.index,
            &parsed,
            unparseable,
        )?);
    }

    let answers: AnswerMap = distributions.iter().map(|d| (d.item, d.majority)).collect();
    let scores = score(&answers, &questionnaire.key)?;
    let catch = validate_catch(&answers)?;
    let params = respondent.fingerprint_params();

    Ok(SessionResult {
        context: context.clone(),
        scores,
        distributions,
        catch,
        config_fingerprint: session_fingerprint(&params, plan, context),
        plan: plan.clone(),
        engine: params.engine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::questionnaire::Questionnaire;
    use crate::respondent::MockRespondent;

    #[test]
    fn prompt_layout_matches_the_template() {
        let q = Questionnaire::bundled();
        let item1 = q.item(1).unwrap();
        let p = build_prompt(item1, "very relevant", &PromptContext::None).unwrap();
        assert!(p.starts_with(
            "Label how relevant the sentence is in determining what is right and wrong."
        ));
        assert!(p.contains(
            "Choose from the following labels: not at all relevant, not very relevant, \
             slightly relevant, somewhat relevant, very relevant, extremely relevant."
        ));
        assert!(p.contains("Example: The sky is blue.\nLabel: very relevant\n"));
        assert!(p.ends_with("Whether or not someone suffered emotionally\nLabel:"));
    }

    #[test]
    fn political_context_prefixes_the_prompt() {
        let q = Questionnaire::bundled();
        let item1 = q.item(1).unwrap();
        let bare = build_prompt(item1, "very relevant", &PromptContext::None).unwrap();
        let liberal = build_prompt(
            item1,
            "very relevant",
            &PromptContext::political(PoliticalLean::Liberal),
        )
        .unwrap();
        assert_eq!(liberal, format!("You are politically liberal.\n\n{bare}"));
    }

    #[test]
    fn agreement_items_use_the_agreement_instruction() {
        let q = Questionnaire::bundled();
        let item17 = q.item(17).unwrap();
        let p = build_prompt(item17, "strongly agree", &PromptContext::None).unwrap();
        assert!(p.starts_with("Label the sentence with whether you agree or disagree."));
        assert!(p.contains("strongly disagree"));
    }

    #[test]
    fn rotating_example_labels_yields_six_distinct_prompts() {
        let q = Questionnaire::bundled();
        let item = q.item(3).unwrap();
        let prompts: Vec<String> = item
            .scale
            .labels()
            .iter()
            .map(|l| build_prompt(item, l, &PromptContext::None).unwrap())
            .collect();
        let unique: std::collections::HashSet<&String> = prompts.iter().collect();
        assert_eq!(unique.len(), 6);
    }

    #[test]
    fn wrong_scale_label_is_rejected() {
        let q = Questionnaire::bundled();
        let item1 = q.item(1).unwrap();
        assert!(matches!(
            build_prompt(item1, "strongly agree", &PromptContext::None),
            Err(Error::LabelNotInScale { .. })
        ));
    }

    #[test]
    fn majority_vote_examples() {
        assert_eq!(majority_vote(&[4, 4, 3]).unwrap(), 4);
        assert_eq!(majority_vote(&[3, 3, 4, 4]).unwrap(), 3); // equidistant: lower wins
        assert_eq!(majority_vote(&[0, 5, 5]).unwrap(), 5);
        assert!(matches!(majority_vote(&[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn majority_vote_tie_prefers_closest_to_mean() {
        // Modes 0 and 5 tie on count; mean 2.4 sits closer to 0... check:
        // samples {0,0,5,5,2}: sum 12, n 5; |0*5-12|=12, |5*5-12|=13 -> 0 wins.
        assert_eq!(majority_vote(&[0, 0, 5, 5, 2]).unwrap(), 0);
        // samples {0,0,5,5,3}: sum 13; |0-13|=13, |25-13|=12 -> 5 wins.
        assert_eq!(majority_vote(&[0, 0, 5, 5, 3]).unwrap(), 5);
    }

    #[test]
    fn all_fives_session_scores_five_everywhere() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(6);
        let result = administer(
            &q,
            &MockRespondent::all_fives(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        assert_eq!(result.scores.as_array(), [5.0; 5]);
        assert_eq!(result.distributions.len(), 32);
        // Catch item 6 also rated 5, so the catch check fails; recorded, not dropped.
        assert!(!result.catch.passed);
        assert_eq!(result.catch.item6, 5);
    }

    #[test]
    fn all_zeros_session_scores_zero_everywhere() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(3);
        let result = administer(
            &q,
            &MockRespondent::all_zeros(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        assert_eq!(result.scores.as_array(), [0.0; 5]);
        assert!(!result.catch.passed); // item 22 rated 0
    }

    #[test]
    fn echo_example_yields_one_sample_per_label() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(6);
        let result = administer(
            &q,
            &MockRespondent::echo_example(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        for dist in &result.distributions {
            assert_eq!(dist.counts, [1; 6], "item {}", dist.item);
            // Mean 2.5; ratings 2 and 3 tie on count and distance; lower wins.
            assert_eq!(dist.majority, 2);
        }
    }

    #[test]
    fn unparseable_majority_fails_the_session() {
        let q = Questionnaire::bundled();
        let mock = MockRespondent::with_fn("nonsense", |_| Ok("I like turtles".into()));
        let plan = SessionPlan::with_samples(4);
        match administer(&q, &mock, &plan, &PromptContext::None) {
            Err(Error::TooManyUnparseable {
                item: 1,
                unparseable: 4,
                total: 4,
            }) => {}
            other => panic!("expected TooManyUnparseable, got {other:?}"),
        }
    }

    #[test]
    fn half_unparseable_is_tolerated() {
        let q = Questionnaire::bundled();
        // Alternate between a parseable answer and noise via interior state.
        let flip = std::sync::atomic::AtomicUsize::new(0);
        let mock = MockRespondent::with_fn("alternating", move |_| {
            let n = flip.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
            Ok(if n.is_multiple_of(2) {
                "[3]".into()
            } else {
                "hmm".into()
            })
        });
        let plan = SessionPlan::with_samples(4);
        let result = administer(&q, &mock, &plan, &PromptContext::None).unwrap();
        for d in &result.distributions {
            assert_eq!(d.unparseable, 2);
            assert_eq!(d.majority, 3);
        }
    }

    #[test]
    fn scores_equal_recomputed_majority_scores() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(5);
        let result = administer(
            &q,
            &MockRespondent::echo_example(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        let recomputed = score(&result.majority_answers(), &q.key).unwrap();
        assert_eq!(result.scores, recomputed);
    }

    #[test]
    fn administer_is_reproducible() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan {
            samples_per_question: 7,
            seed: 3,
            ..Default::default()
        };
        let a = administer(
            &q,
            &MockRespondent::echo_example(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        let b = administer(
            &q,
            &MockRespondent::echo_example(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn item_order_does_not_change_distributions() {
        let q = Questionnaire::bundled();
        let mut shuffled = q.clone();
        shuffled.items.reverse();
        let plan = SessionPlan::with_samples(6);
        let a = administer(
            &q,
            &MockRespondent::echo_example(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        let b = administer(
            &shuffled,
            &MockRespondent::echo_example(),
            &plan,
            &PromptContext::None,
        )
        .unwrap();
        assert_eq!(a.distributions, b.distributions);
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn seed_rotates_the_example_schedule() {
        let plan0 = SessionPlan {
            seed: 0,
            ..Default::default()
        };
        let plan2 = SessionPlan {
            seed: 2,
            ..Default::default()
        };
        assert_eq!(
            plan0.example_label(ScaleKind::Relevance, 0),
            "not at all relevant"
        );
        assert_eq!(
            plan2.example_label(ScaleKind::Relevance, 0),
            "slightly relevant"
        );
        // Any six consecutive samples still cover all six labels.
        let labels: std::collections::HashSet<_> = (0..6)
            .map(|s| plan2.example_label(ScaleKind::Agreement, s))
            .collect();
        assert_eq!(labels.len(), 6);
    }
}
