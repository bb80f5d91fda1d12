//! Phase 1: scan each sentence against the term pattern base and collect
//! every maximal match as a candidate entity.
//!
//! Scanning is left-to-right and greedy: at each position the longest valid
//! match over all patterns wins, the scanner resumes after it, and no
//! overlapping candidates are emitted. Matches never start or end on a
//! connector, always contain a capitalized or trigger token, and a match
//! longer than one token never starts with a single-letter capital — "O
//! COB" yields the separate candidates "O" and "COB", while a single letter
//! may still continue a sequence ("Irmandade do Bairro Ut O").

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::patterns::{PatternBases, PatternElement, PatternItem, Quantifier};
use crate::tagging::nfc_lower;
use crate::text::{Document, Sentence, Token};

/// A Phase-1 match: a token span of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEntity {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Inclusive `[first, last]` token indices within the sentence.
    pub token_span: (usize, usize),
    /// Char-offset span in the document text.
    pub start: usize,
    pub end: usize,
    /// Spanned token surfaces joined by single spaces.
    pub surface: String,
    /// Index into the TPB of the pattern that produced the match.
    pub matched_pattern: usize,
}

pub(crate) fn join_surfaces(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per-token features the matcher inspects.
struct TokView {
    cap: bool,
    trigger: bool,
    connector: bool,
    single_cap: bool,
    lower: String,
}

fn classify(sentence: &Sentence, bases: &PatternBases) -> Vec<TokView> {
    sentence
        .tokens
        .iter()
        .map(|t| TokView {
            cap: bases.is_cap(t),
            trigger: bases.is_trigger(t),
            connector: bases.is_connector(t),
            single_cap: bases.is_cap(t) && t.is_single_letter(),
            lower: nfc_lower(&t.surface),
        })
        .collect()
}

fn elem_matches(elem: &PatternElement, tok: &TokView) -> bool {
    match elem {
        PatternElement::Cap => tok.cap,
        PatternElement::Trigger => tok.trigger,
        PatternElement::Connector => tok.connector,
        PatternElement::Literal(w) => &tok.lower == w,
    }
}

/// Collect every position reachable after matching `items` starting at `pos`.
fn seq_ends(items: &[PatternItem], toks: &[TokView], pos: usize, out: &mut BTreeSet<usize>) {
    let Some((first, rest)) = items.split_first() else {
        out.insert(pos);
        return;
    };
    let mut after_first = BTreeSet::new();
    item_ends(first, toks, pos, &mut after_first);
    for p in after_first {
        seq_ends(rest, toks, p, out);
    }
}

fn item_ends(item: &PatternItem, toks: &[TokView], pos: usize, out: &mut BTreeSet<usize>) {
    let once = |p: usize, out: &mut BTreeSet<usize>| match item {
        PatternItem::Elem(e, _) => {
            if p < toks.len() && elem_matches(e, &toks[p]) {
                out.insert(p + 1);
            }
        }
        PatternItem::Group(inner, _) => seq_ends(inner, toks, p, out),
    };
    let quant = match item {
        PatternItem::Elem(_, q) | PatternItem::Group(_, q) => *q,
    };
    match quant {
        Quantifier::One => once(pos, out),
        Quantifier::Optional => {
            out.insert(pos);
            once(pos, out);
        }
        Quantifier::ZeroOrMore | Quantifier::OneOrMore => {
            // closure over repeated application; zero-width iterations make
            // no progress and are dropped
            let mut reached = BTreeSet::new();
            let mut frontier = vec![pos];
            while let Some(p) = frontier.pop() {
                let mut step = BTreeSet::new();
                once(p, &mut step);
                for q in step {
                    if q > p && reached.insert(q) {
                        frontier.push(q);
                    }
                }
            }
            if quant == Quantifier::ZeroOrMore {
                out.insert(pos);
            }
            out.extend(reached);
        }
    }
}

/// A matched window must not start or end on a connector, must contain a
/// capitalized or trigger token, and may only start with a single-letter
/// capital if it is exactly that one token.
fn valid_window(window: &[TokView]) -> bool {
    let (Some(first), Some(last)) = (window.first(), window.last()) else {
        return false;
    };
    !first.connector
        && !last.connector
        && window.iter().any(|t| t.cap || t.trigger)
        && !(window.len() > 1 && first.single_cap)
}

/// Run Phase 1 over a segmented document. Candidates come out ordered by
/// `(sentence_index, first token index)`; identical spans matched by several
/// patterns are emitted once, crediting the first pattern in base order.
pub fn generate_candidates(doc: &Document, bases: &PatternBases) -> Vec<CandidateEntity> {
    let mut out = Vec::new();
    for sentence in &doc.sentences {
        let views = classify(sentence, bases);
        let mut i = 0;
        while i < views.len() {
            let mut best: Option<(usize, usize)> = None;
            for (pi, pattern) in bases.tpb.iter().enumerate() {
                let mut ends = BTreeSet::new();
                seq_ends(&pattern.items, &views, i, &mut ends);
                for &end in ends.iter().rev() {
                    if end <= i {
                        continue;
                    }
                    if valid_window(&views[i..end]) {
                        if best.is_none_or(|(be, _)| end > be) {
                            best = Some((end, pi));
                        }
                        break;
                    }
                }
            }
            if let Some((end, pi)) = best {
                let tokens = &sentence.tokens[i..end];
                out.push(CandidateEntity {
                    doc_id: doc.id.clone(),
                    sentence_index: sentence.index,
                    token_span: (i, end - 1),
                    start: tokens[0].start,
                    end: tokens[end - 1 - i].end,
                    surface: join_surfaces(tokens),
                    matched_pattern: pi,
                });
                i = end;
            } else {
                i += 1;
            }
        }
    }
    out
}
