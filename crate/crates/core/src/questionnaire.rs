//! MFQ data model and scoring arithmetic.
//!
//! The questionnaire has 32 items: 30 scored (six per foundation) plus two
//! catch items (6 and 22) that detect non-serious responders. Items 1..=16
//! are rated on a relevance scale, 17..=32 on an agreement scale, both
//! mapping six labels onto ratings 0..=5.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Map from item index (1..=32) to a rating in 0..=5.
pub type AnswerMap = BTreeMap<u8, u8>;

/// The two MFQ rating scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Relevance,
    Agreement,
}

impl ScaleKind {
    /// The six labels of this scale, in rating order 0..=5.
    pub fn labels(self) -> &'static [&'static str; 6] {
        match self {
            ScaleKind::Relevance => &[
                "not at all relevant",
                "not very relevant",
                "slightly relevant",
                "somewhat relevant",
                "very relevant",
                "extremely relevant",
            ],
            ScaleKind::Agreement => &[
                "strongly disagree",
                "moderately disagree",
                "slightly disagree",
                "slightly agree",
                "moderately agree",
                "strongly agree",
            ],
        }
    }

    /// Rating for a label, if the label belongs to this scale (exact match).
    pub fn rating_for_label(self, label: &str) -> Option<u8> {
        self.labels()
            .iter()
            .position(|l| *l == label)
            .map(|p| p as u8)
    }

    /// Label for a rating in 0..=5.
    pub fn label_for_rating(self, rating: u8) -> Option<&'static str> {
        self.labels().get(rating as usize).copied()
    }
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleKind::Relevance => write!(f, "relevance"),
            ScaleKind::Agreement => write!(f, "agreement"),
        }
    }
}

/// A rating scale: kind plus its six ordered labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingScale {
    pub kind: ScaleKind,
}

impl RatingScale {
    pub fn new(kind: ScaleKind) -> Self {
        RatingScale { kind }
    }

    pub fn labels(&self) -> &'static [&'static str; 6] {
        self.kind.labels()
    }
}

/// The five moral foundations, in scoring-key order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Foundation {
    Harm,
    Fairness,
    Ingroup,
    Authority,
    Purity,
}

impl Foundation {
    pub fn all() -> [Foundation; 5] {
        [
            Foundation::Harm,
            Foundation::Fairness,
            Foundation::Ingroup,
            Foundation::Authority,
            Foundation::Purity,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Foundation::Harm => "harm",
            Foundation::Fairness => "fairness",
            Foundation::Ingroup => "ingroup",
            Foundation::Authority => "authority",
            Foundation::Purity => "purity",
        }
    }

    pub fn from_name(name: &str) -> Option<Foundation> {
        match name.to_ascii_lowercase().as_str() {
            "harm" | "care" => Some(Foundation::Harm),
            "fairness" => Some(Foundation::Fairness),
            "ingroup" | "loyalty" => Some(Foundation::Ingroup),
            "authority" => Some(Foundation::Authority),
            "purity" | "sanctity" => Some(Foundation::Purity),
            _ => None,
        }
    }
}

impl fmt::Display for Foundation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One questionnaire item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub index: u8,
    pub text: String,
    pub scale: ScaleKind,
    #[serde(default, skip_serializing_if = "is_false")]
    pub catch: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// The five index sets that map item answers to foundations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringKey {
    pub harm: [u8; 6],
    pub fairness: [u8; 6],
    pub ingroup: [u8; 6],
    pub authority: [u8; 6],
    pub purity: [u8; 6],
}

impl ScoringKey {
    /// The index set for one foundation.
    pub fn set(&self, foundation: Foundation) -> &[u8; 6] {
        match foundation {
            Foundation::Harm => &self.harm,
            Foundation::Fairness => &self.fairness,
            Foundation::Ingroup => &self.ingroup,
            Foundation::Authority => &self.authority,
            Foundation::Purity => &self.purity,
        }
    }

    /// All 30 scored indices, foundation by foundation.
    pub fn scored_indices(&self) -> impl Iterator<Item = u8> + '_ {
        Foundation::all()
            .into_iter()
            .flat_map(|f| self.set(f).to_vec())
    }

    fn validate(&self) -> Result<()> {
        let mut seen = [false; 33];
        for f in Foundation::all() {
            for &idx in self.set(f) {
                if !(1..=32).contains(&idx) {
                    return Err(Error::Questionnaire(format!(
                        "scoring key index {idx} outside 1..=32"
                    )));
                }
                if seen[idx as usize] {
                    return Err(Error::Questionnaire(format!(
                        "scoring key sets are not disjoint: index {idx} repeats"
                    )));
                }
                seen[idx as usize] = true;
            }
        }
        for idx in 1u8..=32 {
            let expected = idx != 6 && idx != 22;
            if seen[idx as usize] != expected {
                return Err(Error::Questionnaire(format!(
                    "scoring key union must be 1..=32 minus the catch items; index {idx} is {}",
                    if expected { "missing" } else { "present" }
                )));
            }
        }
        Ok(())
    }
}

/// A fully validated questionnaire: 32 items plus the scoring key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub name: String,
    pub version: String,
    pub items: Vec<Item>,
    pub key: ScoringKey,
}

impl Questionnaire {
    /// Parse and validate a questionnaire from its TOML file format.
    pub fn load_str(source: &str) -> Result<Questionnaire> {
        let q: Questionnaire = toml::from_str(source)
            .map_err(|e| Error::Questionnaire(format!("malformed file: {e}")))?;
        q.validate()?;
        Ok(q)
    }

    pub fn load_path(path: &Path) -> Result<Questionnaire> {
        let text = std::fs::read_to_string(path)?;
        Self::load_str(&text)
    }

    /// The questionnaire shipped with the crate.
    pub fn bundled() -> Questionnaire {
        Self::load_str(include_str!("../data/mfq30.toml")).expect("bundled questionnaire is valid")
    }

    /// Serialize back to the TOML file format.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("questionnaire serializes")
    }

    pub fn item(&self, index: u8) -> Option<&Item> {
        self.items.iter().find(|it| it.index == index)
    }

    pub fn catch_indices(&self) -> Vec<u8> {
        self.items
            .iter()
            .filter(|it| it.catch)
            .map(|it| it.index)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.items.len() != 32 {
            return Err(Error::Questionnaire(format!(
                "item count: expected 32 items, found {}",
                self.items.len()
            )));
        }
        let mut seen = [false; 33];
        for item in &self.items {
            if !(1..=32).contains(&item.index) {
                return Err(Error::Questionnaire(format!(
                    "item index {} outside 1..=32",
                    item.index
                )));
            }
            if seen[item.index as usize] {
                return Err(Error::Questionnaire(format!(
                    "duplicate item index {}",
                    item.index
                )));
            }
            seen[item.index as usize] = true;
            let expected = if item.index <= 16 {
                ScaleKind::Relevance
            } else {
                ScaleKind::Agreement
            };
            if item.scale != expected {
                return Err(Error::Questionnaire(format!(
                    "scale mismatch: item {} must use the {} scale",
                    item.index, expected
                )));
            }
            let expect_catch = item.index == 6 || item.index == 22;
            if item.catch != expect_catch {
                return Err(Error::Questionnaire(format!(
                    "catch flags: item {} should {}be a catch item",
                    item.index,
                    if expect_catch { "" } else { "not " }
                )));
            }
        }
        self.key.validate()
    }
}

/// Five foundation scores, each in [0, 5].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoundationScores {
    pub harm: f64,
    pub fairness: f64,
    pub ingroup: f64,
    pub authority: f64,
    pub purity: f64,
}

impl FoundationScores {
    pub fn new(harm: f64, fairness: f64, ingroup: f64, authority: f64, purity: f64) -> Self {
        FoundationScores {
            harm,
            fairness,
            ingroup,
            authority,
            purity,
        }
    }

    pub fn get(&self, foundation: Foundation) -> f64 {
        match foundation {
            Foundation::Harm => self.harm,
            Foundation::Fairness => self.fairness,
            Foundation::Ingroup => self.ingroup,
            Foundation::Authority => self.authority,
            Foundation::Purity => self.purity,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.harm,
            self.fairness,
            self.ingroup,
            self.authority,
            self.purity,
        ]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        FoundationScores::new(a[0], a[1], a[2], a[3], a[4])
    }
}

impl fmt::Display for FoundationScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "harm {:.3}, fairness {:.3}, ingroup {:.3}, authority {:.3}, purity {:.3}",
            self.harm, self.fairness, self.ingroup, self.authority, self.purity
        )
    }
}

/// Score a complete answer vector against the key.
///
/// Each foundation is the exact arithmetic mean of its six ratings: the sum
/// is accumulated in integers and divided once, so integer answer vectors
/// always produce exact multiples of 1/6.
pub fn score(answers: &AnswerMap, key: &ScoringKey) -> Result<FoundationScores> {
    let mut sums = [0u32; 5];
    for (fi, foundation) in Foundation::all().into_iter().enumerate() {
        for &idx in key.set(foundation) {
            let rating = *answers.get(&idx).ok_or(Error::MissingAnswer(idx))?;
            if rating > 5 {
                return Err(Error::RatingOutOfRange { item: idx, rating });
            }
            sums[fi] += rating as u32;
        }
    }
    Ok(FoundationScores::new(
        sums[0] as f64 / 6.0,
        sums[1] as f64 / 6.0,
        sums[2] as f64 / 6.0,
        sums[3] as f64 / 6.0,
        sums[4] as f64 / 6.0,
    ))
}

/// Outcome of the two catch items.
///
/// Item 6 asks whether being good at math matters morally (a serious
/// responder rates it low); item 22 states that doing good beats doing bad
/// (a serious responder agrees). The report records both ratings and never
/// drops the session; callers decide what to do with failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatchReport {
    pub passed: bool,
    pub item6: u8,
    pub item22: u8,
}

/// Evaluate the catch items: pass iff item 6 <= 2 and item 22 >= 3.
pub fn validate_catch(answers: &AnswerMap) -> Result<CatchReport> {
    let item6 = *answers.get(&6).ok_or(Error::MissingAnswer(6))?;
    let item22 = *answers.get(&22).ok_or(Error::MissingAnswer(22))?;
    for (idx, rating) in [(6u8, item6), (22u8, item22)] {
        if rating > 5 {
            return Err(Error::RatingOutOfRange { item: idx, rating });
        }
    }
    Ok(CatchReport {
        passed: item6 <= 2 && item22 >= 3,
        item6,
        item22,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn answers_all(rating: u8) -> AnswerMap {
        (1..=32).map(|i| (i, rating)).collect()
    }

    #[test]
    fn bundled_questionnaire_satisfies_invariants() {
        let q = Questionnaire::bundled();
        assert_eq!(q.items.len(), 32);
        assert_eq!(q.catch_indices(), vec![6, 22]);
        assert!(q.item(1).unwrap().scale == ScaleKind::Relevance);
        assert!(q.item(17).unwrap().scale == ScaleKind::Agreement);
        assert_eq!(
            q.item(6).unwrap().text,
            "Whether or not someone was good at math"
        );
    }

    #[test]
    fn score_constant_vectors() {
        let key = Questionnaire::bundled().key;
        let all5 = score(&answers_all(5), &key).unwrap();
        assert_eq!(all5.as_array(), [5.0; 5]);
        let all0 = score(&answers_all(0), &key).unwrap();
        assert_eq!(all0.as_array(), [0.0; 5]);
    }

    #[test]
    fn score_harm_only_hand_computed() {
        let key = Questionnaire::bundled().key;
        let mut answers = answers_all(0);
        for (idx, rating) in key.harm.iter().zip([5u8, 4, 3, 5, 4, 3]) {
            answers.insert(*idx, rating);
        }
        let s = score(&answers, &key).unwrap();
        assert_eq!(s.harm, 4.0); // 24 / 6
        assert_eq!(s.fairness, 0.0);
        assert_eq!(s.ingroup, 0.0);
        assert_eq!(s.authority, 0.0);
        assert_eq!(s.purity, 0.0);
    }

    #[test]
    fn score_missing_and_out_of_range() {
        let key = Questionnaire::bundled().key;
        let mut answers = answers_all(3);
        answers.remove(&7);
        assert!(matches!(
            score(&answers, &key),
            Err(Error::MissingAnswer(7))
        ));
        let mut answers = answers_all(3);
        answers.insert(12, 6);
        assert!(matches!(
            score(&answers, &key),
            Err(Error::RatingOutOfRange {
                item: 12,
                rating: 6
            })
        ));
    }

    #[test]
    fn score_ignores_catch_items() {
        let key = Questionnaire::bundled().key;
        let mut a = answers_all(2);
        let base = score(&a, &key).unwrap();
        a.insert(6, 5);
        a.insert(22, 0);
        assert_eq!(score(&a, &key).unwrap(), base);
    }

    #[test]
    fn catch_rule() {
        let mut a = AnswerMap::new();
        a.insert(6, 0);
        a.insert(22, 5);
        assert!(validate_catch(&a).unwrap().passed);
        a.insert(6, 5);
        let r = validate_catch(&a).unwrap();
        assert!(!r.passed);
        assert_eq!(r.item6, 5);
        a.insert(6, 0);
        a.insert(22, 0);
        assert!(!validate_catch(&a).unwrap().passed);
        a.remove(&22);
        assert!(matches!(validate_catch(&a), Err(Error::MissingAnswer(22))));
    }

    #[test]
    fn load_rejects_item_count() {
        let q = Questionnaire::bundled();
        let mut trimmed = q.clone();
        trimmed.items.pop();
        let text = trimmed.to_toml();
        let err = Questionnaire::load_str(&text).unwrap_err();
        assert!(err.to_string().contains("item count"), "{err}");
    }

    #[test]
    fn load_rejects_scale_mismatch() {
        let mut q = Questionnaire::bundled();
        q.items[2].scale = ScaleKind::Agreement; // item 3
        let err = Questionnaire::load_str(&q.to_toml()).unwrap_err();
        assert!(err.to_string().contains("scale mismatch"), "{err}");
    }

    #[test]
    fn load_rejects_duplicate_index() {
        let mut q = Questionnaire::bundled();
        q.items[4].index = 3;
        let err = Questionnaire::load_str(&q.to_toml()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn load_rejects_bad_key_union() {
        let mut q = Questionnaire::bundled();
        q.key.harm[0] = 6; // catch item may not be scored
        let err = Questionnaire::load_str(&q.to_toml()).unwrap_err();
        assert!(err.to_string().contains("scoring key"), "{err}");
    }

    #[test]
    fn toml_round_trip_is_structurally_equal() {
        let q = Questionnaire::bundled();
        let reloaded = Questionnaire::load_str(&q.to_toml()).unwrap();
        assert_eq!(q, reloaded);
    }

    #[test]
    fn changing_one_harm_answer_moves_only_harm() {
        let key = Questionnaire::bundled().key;
        let mut a = answers_all(3);
        let before = score(&a, &key).unwrap();
        a.insert(key.harm[2], 5);
        let after = score(&a, &key).unwrap();
        assert_ne!(after.harm, before.harm);
        assert_eq!(after.fairness, before.fairness);
        assert_eq!(after.ingroup, before.ingroup);
        assert_eq!(after.authority, before.authority);
        assert_eq!(after.purity, before.purity);
    }

    #[test]
    fn labels_are_bijective() {
        for kind in [ScaleKind::Relevance, ScaleKind::Agreement] {
            for r in 0u8..=5 {
                let label = kind.label_for_rating(r).unwrap();
                assert_eq!(kind.rating_for_label(label), Some(r));
            }
            assert_eq!(kind.labels().len(), 6);
        }
    }
}
