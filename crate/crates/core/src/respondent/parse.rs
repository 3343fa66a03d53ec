//! Extract a 0..=5 rating from a raw completion.

use serde::{Deserialize, Serialize};

use crate::questionnaire::ScaleKind;

/// Result of scanning a completion for a rating.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParsedRating {
    /// A rating was found; `matched` is the exact span of the completion
    /// that produced it.
    Rating { rating: u8, matched: String },
    /// Nothing in the completion looked like a rating.
    Unparseable,
}

impl ParsedRating {
    pub fn rating(&self) -> Option<u8> {
        match self {
            ParsedRating::Rating { rating, .. } => Some(*rating),
            ParsedRating::Unparseable => None,
        }
    }
}

#[derive(Debug)]
struct Candidate {
    start: usize,
    end: usize,
    rating: u8,
}

/// Scan a completion for one of the scale's six labels or a standalone
/// digit 0..=5 (bare or bracketed).
///
/// Matching is case-insensitive. When spans overlap, the longest label wins
/// ("not very relevant" never parses as "very relevant"); across distinct
/// spans the earliest wins. Total: unrecognizable input yields
/// [`ParsedRating::Unparseable`], never an error.
pub fn parse_rating(completion: &str, scale: ScaleKind) -> ParsedRating {
    let lowered: String = completion.chars().map(|c| c.to_ascii_lowercase()).collect();
    let bytes = lowered.as_bytes();
    let mut candidates: Vec<Candidate> = Vec::new();

    for (rating, label) in scale.labels().iter().enumerate() {
        let mut from = 0;
        while let Some(pos) = lowered[from..].find(label) {
            let start = from + pos;
            candidates.push(Candidate {
                start,
                end: start + label.len(),
                rating: rating as u8,
            });
            from = start + 1;
        }
    }

    for (i, &b) in bytes.iter().enumerate() {
        if !(b'0'..=b'5').contains(&b) {
            continue;
        }
        let prev_digit = i > 0 && bytes[i - 1].is_ascii_digit();
        let next_digit = i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit();
        if prev_digit || next_digit {
            continue;
        }
        candidates.push(Candidate {
            start: i,
            end: i + 1,
            rating: b - b'0',
        });
    }

    // Drop any label match strictly contained in a longer one.
    let mut keep: Vec<bool> = vec![true; candidates.len()];
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates {
            let longer = (b.end - b.start) > (a.end - a.start);
            if longer && b.start <= a.start && a.end <= b.end {
                keep[i] = false;
                break;
            }
        }
    }

    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .min_by_key(|c| c.start)
        .map(|c| ParsedRating::Rating {
            rating: c.rating,
            matched: completion[c.start..c.end].to_string(),
        })
        .unwrap_or(ParsedRating::Unparseable)
}
