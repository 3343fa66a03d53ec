//! Property tests for the toolkit-wide invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use mfq_toolkit::administration::majority_vote;
use mfq_toolkit::administration::PoliticalLean;
use mfq_toolkit::analysis::{nearest_population, sae, BaselineTable, HumanBaseline, Population};
use mfq_toolkit::donation::expected_donation;
use mfq_toolkit::questionnaire::{score, FoundationScores, Questionnaire, ScaleKind};
use mfq_toolkit::respondent::{parse_rating, ParsedRating};

fn answers_strategy() -> impl Strategy<Value = BTreeMap<u8, u8>> {
    proptest::collection::vec(0u8..=5, 32)
        .prop_map(|v| (1u8..=32).zip(v).collect::<BTreeMap<u8, u8>>())
}

fn scores_strategy() -> impl Strategy<Value = FoundationScores> {
    proptest::array::uniform5(0.0f64..=5.0).prop_map(FoundationScores::from_array)
}

proptest! {
    // Permuting the ratings within one foundation's index set never moves
    // any score; the mean is order-free.
    #[test]
    fn score_is_permutation_invariant_within_sets(
        answers in answers_strategy(),
        rotation in 0usize..6,
    ) {
        let q = Questionnaire::bundled();
        let base = score(&answers, &q.key).unwrap();
        let mut rotated = answers.clone();
        for foundation in mfq_toolkit::questionnaire::Foundation::all() {
            let set = q.key.set(foundation);
            let values: Vec<u8> = set.iter().map(|i| answers[i]).collect();
            for (pos, idx) in set.iter().enumerate() {
                rotated.insert(*idx, values[(pos + rotation) % set.len()]);
            }
        }
        prop_assert_eq!(score(&rotated, &q.key).unwrap(), base);
    }

    // Integer ratings make every foundation score an exact multiple of 1/6.
    #[test]
    fn six_times_score_is_integral(answers in answers_strategy()) {
        let q = Questionnaire::bundled();
        let scores = score(&answers, &q.key).unwrap();
        for v in scores.as_array() {
            let six = v * 6.0;
            prop_assert_eq!(six, six.round());
        }
    }

    // Changing a harm-set answer moves only the harm score.
    #[test]
    fn key_disjointness_isolates_foundations(
        answers in answers_strategy(),
        slot in 0usize..6,
        new_rating in 0u8..=5,
    ) {
        let q = Questionnaire::bundled();
        let before = score(&answers, &q.key).unwrap();
        let mut changed = answers.clone();
        changed.insert(q.key.harm[slot], new_rating);
        let after = score(&changed, &q.key).unwrap();
        prop_assert_eq!(after.fairness, before.fairness);
        prop_assert_eq!(after.ingroup, before.ingroup);
        prop_assert_eq!(after.authority, before.authority);
        prop_assert_eq!(after.purity, before.purity);
    }

    // parse_rating is total and deterministic on arbitrary input.
    #[test]
    fn parse_rating_total_and_deterministic(text in ".{0,200}") {
        for kind in [ScaleKind::Relevance, ScaleKind::Agreement] {
            let first = parse_rating(&text, kind);
            let second = parse_rating(&text, kind);
            prop_assert_eq!(&first, &second);
            if let ParsedRating::Rating { rating, matched } = first {
                prop_assert!(rating <= 5);
                prop_assert!(text.contains(&matched));
            }
        }
    }

    // Majority vote returns a member of the multiset and is stable under
    // shuffling.
    #[test]
    fn majority_vote_returns_a_mode_member(
        mut samples in proptest::collection::vec(0u8..=5, 1..50),
        shuffle_seed in 0u64..1000,
    ) {
        let vote = majority_vote(&samples).unwrap();
        prop_assert!(samples.contains(&vote));
        let max_count = (0u8..=5)
            .map(|r| samples.iter().filter(|&&v| v == r).count())
            .max()
            .unwrap();
        prop_assert_eq!(samples.iter().filter(|&&v| v == vote).count(), max_count);

        // Order independence
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed);
        samples.shuffle(&mut rng);
        prop_assert_eq!(majority_vote(&samples).unwrap(), vote);
    }

    // SAE is a metric on score vectors.
    #[test]
    fn sae_is_a_metric(
        a in scores_strategy(),
        b in scores_strategy(),
        c in scores_strategy(),
    ) {
        prop_assert!(sae(&a, &b) >= 0.0);
        prop_assert!((sae(&a, &b) - sae(&b, &a)).abs() < 1e-12);
        prop_assert!(sae(&a, &a) == 0.0);
        prop_assert!(sae(&a, &c) <= sae(&a, &b) + sae(&b, &c) + 1e-12);
    }

    // Appending rows farther than the current minimum never changes the
    // nearest row.
    #[test]
    fn nearest_population_ignores_farther_rows(
        probe in scores_strategy(),
        extra in scores_strategy(),
    ) {
        let table = BaselineTable::bundled();
        let (row, d) = nearest_population(&probe, &table);
        let row_scores = row.scores;
        if sae(&probe, &extra) > d {
            let mut extended = table.clone();
            extended.rows.push(HumanBaseline {
                population: Population::Korean,
                affiliation: PoliticalLean::Moderate,
                scores: extra,
                source: "appended".into(),
            });
            let (row2, d2) = nearest_population(&probe, &extended);
            prop_assert_eq!(d2, d);
            prop_assert_eq!(row2.scores, row_scores);
        }
    }

    // Expected donation is linear and bounded on [0, 250].
    #[test]
    fn expected_donation_is_bounded_and_linear(
        raw in proptest::array::uniform6(0.01f64..1.0),
        raw2 in proptest::array::uniform6(0.01f64..1.0),
        mix in 0.0f64..1.0,
    ) {
        let normalize = |raw: [f64; 6]| {
            let total: f64 = raw.iter().sum();
            let mut p = raw;
            for v in &mut p {
                *v /= total;
            }
            p
        };
        let p = normalize(raw);
        let q = normalize(raw2);
        let ep = expected_donation(&p).unwrap();
        let eq = expected_donation(&q).unwrap();
        prop_assert!((0.0..=250.0).contains(&ep));

        let mut blended = [0f64; 6];
        for i in 0..6 {
            blended[i] = mix * p[i] + (1.0 - mix) * q[i];
        }
        let eb = expected_donation(&blended).unwrap();
        prop_assert!((eb - (mix * ep + (1.0 - mix) * eq)).abs() < 1e-9);
    }
}
