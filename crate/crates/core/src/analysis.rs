//! Baseline comparison, cross-context consistency and prompt steering.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::administration::{administer, PromptContext, SessionPlan, SessionResult};
use crate::error::{Error, Result};
use crate::questionnaire::{Foundation, FoundationScores, Questionnaire};
use crate::respondent::Respondent;

/// Human study populations the baselines come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    AnonymousOnline,
    UsAmerican,
    Korean,
}

impl Population {
    pub fn all() -> [Population; 3] {
        [
            Population::AnonymousOnline,
            Population::UsAmerican,
            Population::Korean,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Population::AnonymousOnline => "anonymous",
            Population::UsAmerican => "us_american",
            Population::Korean => "korean",
        }
    }

    pub fn from_name(name: &str) -> Option<Population> {
        match name.to_ascii_lowercase().as_str() {
            "anonymous" | "anonymous_online" => Some(Population::AnonymousOnline),
            "us_american" | "us" => Some(Population::UsAmerican),
            "korean" => Some(Population::Korean),
            _ => None,
        }
    }
}

/// Published mean foundation scores for one (population, affiliation) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanBaseline {
    pub population: Population,
    pub affiliation: crate::administration::PoliticalLean,
    pub scores: FoundationScores,
    pub source: String,
}

/// The nine baseline rows: 3 populations x 3 affiliations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub rows: Vec<HumanBaseline>,
}

impl BaselineTable {
    /// Parse the delimited baseline file (see `data/human_baselines.csv`).
    pub fn load_csv(text: &str) -> Result<BaselineTable> {
        let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Analysis(format!("baseline file: {e}")))?;
            if record.len() != 8 {
                return Err(Error::Analysis(format!(
                    "baseline file: expected 8 columns, found {}",
                    record.len()
                )));
            }
            let population = Population::from_name(&record[0]).ok_or_else(|| {
                Error::Analysis(format!(
                    "baseline file: unknown population {:?}",
                    &record[0]
                ))
            })?;
            let affiliation = crate::administration::PoliticalLean::from_name(&record[1])
                .ok_or_else(|| {
                    Error::Analysis(format!(
                        "baseline file: unknown affiliation {:?}",
                        &record[1]
                    ))
                })?;
            let mut vals = [0f64; 5];
            for (i, v) in vals.iter_mut().enumerate() {
                *v = record[2 + i].trim().parse().map_err(|e| {
                    Error::Analysis(format!(
                        "baseline file: bad score {:?}: {e}",
                        &record[2 + i]
                    ))
                })?;
            }
            rows.push(HumanBaseline {
                population,
                affiliation,
                scores: FoundationScores::from_array(vals),
                source: record[7].to_string(),
            });
        }
        let table = BaselineTable { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn load_path(path: &Path) -> Result<BaselineTable> {
        Self::load_csv(&std::fs::read_to_string(path)?)
    }

    /// The baseline table shipped with the crate.
    pub fn bundled() -> BaselineTable {
        Self::load_csv(include_str!("../data/human_baselines.csv"))
            .expect("bundled baselines are valid")
    }

    fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Analysis("baseline table is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for row in &self.rows {
            for v in row.scores.as_array() {
                if !(0.0..=5.0).contains(&v) {
                    return Err(Error::Analysis(format!(
                        "baseline {} {} has score {v} outside [0, 5]",
                        row.population.name(),
                        row.affiliation.name()
                    )));
                }
            }
            if !seen.insert((row.population, row.affiliation)) {
                return Err(Error::Analysis(format!(
                    "duplicate baseline row {} {}",
                    row.population.name(),
                    row.affiliation.name()
                )));
            }
        }
        Ok(())
    }
}

/// Sum of absolute errors across the five foundations.
pub fn sae(a: &FoundationScores, b: &FoundationScores) -> f64 {
    a.as_array()
        .iter()
        .zip(b.as_array())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// The baseline row minimizing SAE; ties keep the earlier row.
pub fn nearest_population<'t>(
    scores: &FoundationScores,
    table: &'t BaselineTable,
) -> (&'t HumanBaseline, f64) {
    let mut best: Option<(&HumanBaseline, f64)> = None;
    for row in &table.rows {
        let d = sae(scores, &row.scores);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((row, d)),
        }
    }
    best.expect("table validated nonempty")
}

/// Five-number summary plus mean and sample std for one foundation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoundationStat {
    pub foundation: Foundation,
    pub mean: f64,
    /// Sample standard deviation (N-1).
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Variation of foundation scores across a set of contexts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub corpus: String,
    pub seed: u64,
    pub n: usize,
    pub stats: Vec<FoundationStat>,
    /// (context label, scores) per successful session, in input order.
    pub sessions: Vec<(String, FoundationScores)>,
    /// (context label, error) per failed session.
    pub failures: Vec<(String, String)>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    // Linear interpolation between order statistics (type 7).
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[n - 1]
    }
}

fn summarize(foundation: Foundation, values: &[f64]) -> FoundationStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() >= 2 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    FoundationStat {
        foundation,
        mean,
        std,
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    }
}

/// Administer once per context and summarize the score spread.
///
/// Failed contexts are recorded in the report; at least two sessions must
/// succeed for the spread to be meaningful.
pub fn consistency(
    questionnaire: &Questionnaire,
    respondent: &dyn Respondent,
    plan: &SessionPlan,
    contexts: &[PromptContext],
    corpus: &str,
    seed: u64,
) -> Result<ConsistencyReport> {
    if contexts.len() < 2 {
        return Err(Error::Analysis(format!(
            "consistency needs at least 2 contexts, got {}",
            contexts.len()
        )));
    }
    let mut sessions = Vec::new();
    let mut failures = Vec::new();
    for context in contexts {
        match administer(questionnaire, respondent, plan, context) {
            Ok(result) => sessions.push((context.label(), result.scores)),
            Err(e) => failures.push((context.label(), e.to_string())),
        }
    }
    if sessions.len() < 2 {
        return Err(Error::Analysis(format!(
            "consistency: only {} of {} sessions succeeded",
            sessions.len(),
            contexts.len()
        )));
    }
    let stats = Foundation::all()
        .into_iter()
        .map(|f| {
            let values: Vec<f64> = sessions.iter().map(|(_, s)| s.get(f)).collect();
            summarize(f, &values)
        })
        .collect();
    Ok(ConsistencyReport {
        corpus: corpus.to_string(),
        seed,
        n: sessions.len(),
        stats,
        sessions,
        failures,
    })
}

/// Seeded uniform sample of corpus excerpts, without replacement.
///
/// Every `.txt` file in the directory is one candidate; files are ordered
/// by name before shuffling so the draw depends only on the seed. Excerpts
/// are trimmed and truncated to `max_chars` at a character boundary.
pub fn sample_contexts(
    corpus_dir: &Path,
    n: usize,
    seed: u64,
    max_chars: usize,
) -> Result<Vec<PromptContext>> {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(corpus_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "txt").unwrap_or(false))
        .collect();
    files.sort();
    if files.len() < n {
        return Err(Error::InsufficientCorpus {
            dir: corpus_dir.display().to_string(),
            found: files.len(),
            need: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    files.shuffle(&mut rng);
    files.truncate(n);
    let mut contexts = Vec::with_capacity(n);
    for file in files {
        let text = std::fs::read_to_string(&file)?;
        let trimmed = text.trim();
        let excerpt: String = trimmed.chars().take(max_chars).collect();
        contexts.push(PromptContext::corpus(excerpt));
    }
    Ok(contexts)
}

/// One steering candidate from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringCandidate {
    pub foundation: Foundation,
    pub prompt: String,
}

#[derive(Debug, Deserialize)]
struct SteeringCatalogFile {
    candidates: Vec<SteeringCandidate>,
}

/// Parse a steering catalog file (TOML array of tables).
pub fn load_steering_catalog(text: &str) -> Result<Vec<SteeringCandidate>> {
    let file: SteeringCatalogFile =
        toml::from_str(text).map_err(|e| Error::Analysis(format!("steering catalog: {e}")))?;
    if file.candidates.is_empty() {
        return Err(Error::Analysis("steering catalog is empty".into()));
    }
    Ok(file.candidates)
}

/// The candidate catalog shipped with the crate.
pub fn bundled_steering_catalog() -> Vec<SteeringCandidate> {
    load_steering_catalog(include_str!("../data/steering_catalog.toml"))
        .expect("bundled steering catalog is valid")
}

/// Scores and objective value for one steering candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub prompt: String,
    pub scores: FoundationScores,
    /// target score minus the mean of the other four.
    pub objective: f64,
}

/// Result of a steering search for one target foundation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub target: Foundation,
    pub winner_prompt: String,
    pub winner_objective: f64,
    pub table: Vec<CandidateOutcome>,
}

/// Relative-maximization objective: target minus the mean of the other four.
pub fn steering_objective(scores: &FoundationScores, target: Foundation) -> f64 {
    let target_value = scores.get(target);
    let other_sum: f64 = Foundation::all()
        .into_iter()
        .filter(|f| *f != target)
        .map(|f| scores.get(f))
        .sum();
    target_value - other_sum / 4.0
}

/// Administer once per candidate prompt and pick the objective argmax.
///
/// Equal objectives keep the earliest candidate, so the winner is stable
/// under permutation up to that tie rule.
pub fn steer(
    questionnaire: &Questionnaire,
    respondent: &dyn Respondent,
    plan: &SessionPlan,
    candidates: &[String],
    target: Foundation,
) -> Result<SteeringResult> {
    if candidates.is_empty() {
        return Err(Error::Analysis(
            "steer needs at least one candidate prompt".into(),
        ));
    }
    let mut table = Vec::with_capacity(candidates.len());
    for prompt in candidates {
        let context = PromptContext::steering(prompt.clone());
        let result: SessionResult = administer(questionnaire, respondent, plan, &context)?;
        let objective = steering_objective(&result.scores, target);
        table.push(CandidateOutcome {
            prompt: prompt.clone(),
            scores: result.scores,
            objective,
        });
    }
    let winner = table
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.objective
                .partial_cmp(&b.objective)
                .unwrap()
                .then(ib.cmp(ia)) // earlier index wins ties
        })
        .map(|(_, c)| c)
        .expect("nonempty table");
    Ok(SteeringResult {
        target,
        winner_prompt: winner.prompt.clone(),
        winner_objective: winner.objective,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::administration::PoliticalLean;
    use crate::respondent::MockRespondent;

    #[test]
    fn sae_examples() {
        let a = FoundationScores::new(5.0, 5.0, 5.0, 5.0, 5.0);
        let b = FoundationScores::new(0.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(sae(&a, &a), 0.0);
        assert_eq!(sae(&a, &b), 25.0);
        assert_eq!(sae(&b, &a), 25.0);
    }

    #[test]
    fn bundled_baselines_have_nine_unique_rows() {
        let table = BaselineTable::bundled();
        assert_eq!(table.rows.len(), 9);
        for population in Population::all() {
            for lean in PoliticalLean::all() {
                assert!(
                    table
                        .rows
                        .iter()
                        .any(|r| r.population == population && r.affiliation == lean),
                    "{population:?} {lean:?} missing"
                );
            }
        }
        for row in &table.rows {
            assert!(!row.source.is_empty());
        }
    }

    #[test]
    fn empty_baseline_file_is_rejected() {
        let header_only = "population,affiliation,harm,fairness,ingroup,authority,purity,source\n";
        let err = BaselineTable::load_csv(header_only).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");
    }

    #[test]
    fn nearest_population_exact_match_wins_with_zero() {
        let table = BaselineTable::bundled();
        let target = table.rows[4].scores;
        let (row, d) = nearest_population(&target, &table);
        assert_eq!(row.scores, target);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn nearest_population_tie_keeps_earlier_row() {
        let mk = |h: f64| HumanBaseline {
            population: Population::AnonymousOnline,
            affiliation: PoliticalLean::Liberal,
            scores: FoundationScores::new(h, 0.0, 0.0, 0.0, 0.0),
            source: String::new(),
        };
        let mut a = mk(1.0);
        a.affiliation = PoliticalLean::Liberal;
        let mut b = mk(3.0);
        b.affiliation = PoliticalLean::Moderate;
        let table = BaselineTable { rows: vec![a, b] };
        // Query equidistant from both rows.
        let probe = FoundationScores::new(2.0, 0.0, 0.0, 0.0, 0.0);
        let (row, d) = nearest_population(&probe, &table);
        assert_eq!(d, 1.0);
        assert_eq!(row.affiliation, PoliticalLean::Liberal);
    }

    #[test]
    fn nearest_is_stable_under_farther_rows() {
        let table = BaselineTable::bundled();
        let probe = FoundationScores::new(3.0, 3.1, 3.2, 3.3, 3.4);
        let (row, d) = nearest_population(&probe, &table);
        let mut extended = table.clone();
        extended.rows.push(HumanBaseline {
            population: Population::Korean,
            affiliation: PoliticalLean::Liberal,
            scores: FoundationScores::new(0.0, 0.0, 0.0, 0.0, 0.0),
            source: "synthetic far row".into(),
        });
        let (row2, d2) = nearest_population(&probe, &extended);
        assert_eq!(d, d2);
        assert_eq!(row.scores, row2.scores);
    }

    #[test]
    fn consistency_of_context_independent_respondent_is_zero_variance() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(2);
        let contexts: Vec<PromptContext> = (0..4)
            .map(|i| PromptContext::corpus(format!("excerpt {i}")))
            .collect();
        let report = consistency(
            &q,
            &MockRespondent::all_fives(),
            &plan,
            &contexts,
            "synthetic",
            0,
        )
        .unwrap();
        assert_eq!(report.n, 4);
        for stat in &report.stats {
            assert_eq!(stat.std, 0.0);
            assert_eq!(stat.min, stat.max);
        }
    }

    #[test]
    fn consistency_hand_arithmetic_two_contexts() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(1);
        // First context says 5 to everything, second says 3, keyed off a
        // marker in the corpus text appearing in the prompt prefix.
        let mock = MockRespondent::with_fn("split", |prompt| {
            Ok(if prompt.starts_with("ALPHA") {
                "[5]".into()
            } else {
                "[3]".into()
            })
        });
        let contexts = vec![
            PromptContext::corpus("ALPHA one"),
            PromptContext::corpus("BETA two"),
        ];
        let report = consistency(&q, &mock, &plan, &contexts, "synthetic", 0).unwrap();
        for stat in &report.stats {
            assert_eq!(stat.mean, 4.0);
            // Sample std of {5, 3} = sqrt(((5-4)^2 + (3-4)^2) / 1) = sqrt(2).
            assert!((stat.std - 2f64.sqrt()).abs() < 1e-12);
            assert_eq!(stat.min, 3.0);
            assert_eq!(stat.max, 5.0);
            assert_eq!(stat.median, 4.0);
        }
    }

    #[test]
    fn consistency_records_failures() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(1);
        let mock = MockRespondent::with_fn("flaky", |prompt| {
            if prompt.starts_with("BAD") {
                Err(Error::Backend("boom".into()))
            } else {
                Ok("[2]".into())
            }
        });
        let contexts = vec![
            PromptContext::corpus("ok 1"),
            PromptContext::corpus("BAD"),
            PromptContext::corpus("ok 2"),
        ];
        let report = consistency(&q, &mock, &plan, &contexts, "synthetic", 0).unwrap();
        assert_eq!(report.n, 2);
        assert_eq!(report.failures.len(), 1);
        assert!(report.failures[0].1.contains("boom"));
    }

    #[test]
    fn sample_contexts_is_seeded_and_exhaustive() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..5 {
            std::fs::write(dir.path().join(format!("e{i}.txt")), format!("excerpt {i}")).unwrap();
        }
        assert!(sample_contexts(dir.path(), 0, 7, 100).unwrap().is_empty());
        let a = sample_contexts(dir.path(), 3, 7, 100).unwrap();
        let b = sample_contexts(dir.path(), 3, 7, 100).unwrap();
        assert_eq!(a, b);
        let all = sample_contexts(dir.path(), 5, 1, 100).unwrap();
        assert_eq!(all.len(), 5);
        let texts: std::collections::HashSet<String> =
            all.iter().filter_map(|c| c.text()).collect();
        assert_eq!(texts.len(), 5);
        assert!(matches!(
            sample_contexts(dir.path(), 6, 0, 100),
            Err(Error::InsufficientCorpus {
                found: 5,
                need: 6,
                ..
            })
        ));
    }

    #[test]
    fn sample_contexts_truncates_excerpts() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "x".repeat(500)).unwrap();
        std::fs::write(dir.path().join("b.txt"), "y".repeat(10)).unwrap();
        let contexts = sample_contexts(dir.path(), 2, 0, 100).unwrap();
        for c in contexts {
            assert!(c.text().unwrap().chars().count() <= 100);
        }
    }

    #[test]
    fn steering_objective_formula() {
        let scores = FoundationScores::new(5.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(steering_objective(&scores, Foundation::Harm), 4.0);
        // purity 1 vs mean(5,1,1,1) = 2.
        assert_eq!(steering_objective(&scores, Foundation::Purity), -1.0);
    }

    #[test]
    fn steer_single_candidate_wins() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(1);
        let result = steer(
            &q,
            &MockRespondent::all_fives(),
            &plan,
            &["You are a kind person.".to_string()],
            Foundation::Harm,
        )
        .unwrap();
        assert_eq!(result.winner_prompt, "You are a kind person.");
        assert_eq!(result.table.len(), 1);
    }

    #[test]
    fn steer_picks_the_forced_argmax() {
        let q = Questionnaire::bundled();
        let plan = SessionPlan::with_samples(1);
        let authority_texts: Vec<String> = q
            .key
            .authority
            .iter()
            .map(|&idx| q.item(idx).unwrap().text.clone())
            .collect();
        // Candidate A: authority items 5, everything else 0. Candidate B: all 3.
        let mock = MockRespondent::with_fn("profiles", move |prompt| {
            if prompt.starts_with("CANDIDATE-A") {
                let is_authority = authority_texts.iter().any(|t| prompt.contains(t.as_str()));
                Ok(if is_authority {
                    "[5]".into()
                } else {
                    "[0]".into()
                })
            } else {
                Ok("[3]".into())
            }
        });
        let candidates = vec!["CANDIDATE-A".to_string(), "CANDIDATE-B".to_string()];
        let result = steer(&q, &mock, &plan, &candidates, Foundation::Authority).unwrap();
        assert_eq!(result.winner_prompt, "CANDIDATE-A");
        assert_eq!(result.winner_objective, 5.0);
        assert_eq!(result.table[1].objective, 0.0);
    }

    #[test]
    fn catalog_contains_the_published_winners() {
        let catalog = bundled_steering_catalog();
        let prompts: Vec<&str> = catalog.iter().map(|c| c.prompt.as_str()).collect();
        for expected in [
            "You do not like to cause harm.",
            "You believe the rich and poor should be treated with equity.",
            "You believe in traditional roles.",
            "You believe that some people are more important than others.",
            "You would sacrifice yourself for your country.",
        ] {
            assert!(prompts.contains(&expected), "missing {expected:?}");
        }
    }
}
