//! Rule-based named-entity extraction for Portuguese text.
//!
//! The pipeline runs in two phases over segmented documents:
//!
//! 1. **Candidate generation** — each sentence is scanned against a base of
//!    term patterns (capitalized sequences, trigger-word phrases) and every
//!    maximal match becomes a [`CandidateEntity`].
//! 2. **Entity selection** — candidates are POS-tagged, leading non-entity
//!    tokens are clipped off, and candidates failing the category or
//!    stop-term checks are pruned. Survivors are [`NamedEntity`] values in
//!    text order, repetitions included.
//!
//! The crate also ships the evaluation machinery used to score extractor
//! output against gold annotations: occurrence-level scoring with
//! half-credit partials, unique-entity scoring with fractional credit,
//! per-type recall, paired difference statistics and a one-sided z-test.

pub mod candidates;
pub mod corpus;
pub mod eval;
pub mod patterns;
pub mod selection;
pub mod tagging;
pub mod text;

pub use candidates::{generate_candidates, CandidateEntity};
pub use corpus::{
    corpus_stats, frequency_report, load_corpus, load_gold, load_mentions, CorpusError, CorpusLoad,
    CorpusStats, FrequencyReport,
};
pub use eval::{
    compute_metrics, diff_stats, filter_gold_types, match_occurrences, match_unique, normal_cdf,
    per_type_recall, score, ztest_from_summary, ztest_mean_greater, DiffStats, EntityType,
    EvalMode, EvalReport, GoldAnnotation, MatchCredit, Mention, ZTestResult,
};
pub use patterns::{default_bases, load_pattern_bases, PatternBases, TermPattern};
pub use selection::{extract, select_entities, NamedEntity};
pub use tagging::{builtin_tagger, pretagged_provider, PosTag, TagProvider, TaggedCandidate};
pub use text::{segment, split_sentences, tokenize, Document, Sentence, Token, TokenKind};
