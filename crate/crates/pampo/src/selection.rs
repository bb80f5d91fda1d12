//! Phase 2: POS-tag each candidate, clip non-entity prefixes, prune by
//! category and by stop-terms.
//!
//! Per candidate, in order: tag; apply clipping patterns repeatedly until no
//! pattern matches the tag-sequence prefix (a candidate clipped to nothing
//! is discarded); discard if any pruning pattern matches the remaining tag
//! sequence; discard if the remaining surface is a stop-term. Survivors keep
//! document order, repetitions included.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::candidates::{generate_candidates, join_surfaces, CandidateEntity};
use crate::patterns::PatternBases;
use crate::tagging::{TagError, TagProvider};
use crate::text::Document;

/// How a surviving entity relates to the candidate that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub original_span: (usize, usize),
    pub original_surface: String,
    /// Ids of clipping rules applied, in application order (e.g. "cpb[0]").
    pub applied_rules: Vec<String>,
}

/// A Phase-2 survivor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntity {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Inclusive token span; a suffix of the originating candidate's span
    /// (clipping removes only leading tokens).
    pub token_span: (usize, usize),
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub provenance: Provenance,
}

/// Run entity selection over Phase-1 candidates of `doc`.
///
/// Tagging is per sentence (cached), so every candidate sees full sentence
/// context. Provider errors carry the provider identity and abort selection.
pub fn select_entities(
    doc: &Document,
    candidates: &[CandidateEntity],
    bases: &PatternBases,
    provider: &dyn TagProvider,
) -> Result<Vec<NamedEntity>, TagError> {
    let mut sentence_tags: HashMap<usize, Vec<crate::tagging::PosTag>> = HashMap::new();
    let mut out = Vec::new();

    for candidate in candidates {
        let sentence = &doc.sentences[candidate.sentence_index];
        let tags = match sentence_tags.entry(candidate.sentence_index) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(provider.tag_sentence(&doc.id, sentence)?)
            }
        };

        let (mut first, last) = candidate.token_span;
        let mut applied = Vec::new();

        // clipping to fixpoint; bounded by the candidate length
        'clip: while first <= last {
            for (idx, cp) in bases.cpb.iter().enumerate() {
                if cp.matches_prefix(&tags[first..=last]) {
                    first += cp.clip_count;
                    applied.push(format!("cpb[{idx}]"));
                    continue 'clip;
                }
            }
            break;
        }
        if first > last {
            continue; // clipped away entirely
        }

        if bases.ppb.iter().any(|pp| pp.matches(&tags[first..=last])) {
            continue;
        }

        let tokens = &sentence.tokens[first..=last];
        let surface = join_surfaces(tokens);
        if bases.tppb.contains(&surface) {
            continue;
        }

        out.push(NamedEntity {
            doc_id: candidate.doc_id.clone(),
            sentence_index: candidate.sentence_index,
            token_span: (first, last),
            start: tokens[0].start,
            end: tokens.last().unwrap().end,
            surface,
            provenance: Provenance {
                original_span: candidate.token_span,
                original_surface: candidate.surface.clone(),
                applied_rules: applied,
            },
        });
    }
    Ok(out)
}

/// The full pipeline: candidate generation then entity selection.
pub fn extract(
    doc: &Document,
    bases: &PatternBases,
    provider: &dyn TagProvider,
) -> Result<Vec<NamedEntity>, TagError> {
    let candidates = generate_candidates(doc, bases);
    select_entities(doc, &candidates, bases, provider)
}
