//! Scoring of extractor output against gold annotations.
//!
//! Two matching modes mirror two evaluation setups: `occurrence_half`
//! aligns every mention by char-offset overlap and gives partial overlaps
//! half credit; `unique_fractional` deduplicates surfaces per document and
//! credits a partial by the fraction of the gold entity's content tokens it
//! covers (connector words do not count as content). Credits are exact
//! rationals so fractional bookkeeping like 1/4 + 3/4 = 1 holds without
//! float drift.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::selection::NamedEntity;

/// Connector words excluded from content-token counts.
const CONTENT_CONNECTORS: &[&str] = &["de", "da", "do", "das", "dos", "e"];

/// Gold annotation categories: the classic person/location/organization set
/// plus miscellaneous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Misc,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [
        EntityType::Per,
        EntityType::Loc,
        EntityType::Org,
        EntityType::Misc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Misc => "MISC",
        }
    }

    pub fn parse(s: &str) -> Option<EntityType> {
        EntityType::ALL
            .iter()
            .copied()
            .find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed gold span with char offsets into its document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub doc: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
}

/// An extracted mention in the interchange shape. Offsets are optional
/// because third-party extractor dumps may lack them; occurrence-mode
/// scoring requires them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub doc: String,
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

impl From<&NamedEntity> for Mention {
    fn from(e: &NamedEntity) -> Self {
        Mention {
            doc: e.doc_id.clone(),
            surface: e.surface.clone(),
            start: Some(e.start),
            end: Some(e.end),
        }
    }
}

/// Credit earned by one extracted item (in unique mode, by one deduplicated
/// surface). `extracted`/`gold` index the input slices; deduplicated items
/// are represented by their first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchCredit {
    pub extracted: usize,
    pub gold: Option<usize>,
    pub credit: Rational64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    OccurrenceHalf,
    UniqueFractional,
}

impl EvalMode {
    pub fn name(self) -> &'static str {
        match self {
            EvalMode::OccurrenceHalf => "occurrence_half",
            EvalMode::UniqueFractional => "unique_fractional",
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("occurrence-mode scoring needs char offsets: mention '{surface}' in document '{doc}' has none")]
    MissingOffsets { doc: String, surface: String },
    #[error("mismatched document sets: {details}")]
    DocumentMismatch { details: String },
    #[error("z-test needs at least 2 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("z-test needs positive standard deviation")]
    ZeroStandardDeviation,
}

/// NFC-normalize and collapse whitespace runs; comparison stays
/// case-sensitive.
fn normalize_surface(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn surface_tokens(normalized: &str) -> Vec<&str> {
    normalized.split(' ').filter(|t| !t.is_empty()).collect()
}

fn is_content_token(token: &str) -> bool {
    !CONTENT_CONNECTORS.contains(&token.to_lowercase().as_str())
}

fn content_count(tokens: &[&str]) -> i64 {
    tokens.iter().filter(|t| is_content_token(t)).count() as i64
}

/// `needle` occurs as a contiguous run inside `haystack`.
fn contiguous_subsequence(needle: &[&str], haystack: &[&str]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Credit of an extracted surface against a gold surface: 1 for equality,
/// else the content-token fraction of the gold covered by the containment,
/// else None.
fn pair_credit(extracted: &str, gold: &str) -> Option<Rational64> {
    if extracted == gold {
        return Some(Rational64::one());
    }
    let e_tokens = surface_tokens(extracted);
    let g_tokens = surface_tokens(gold);
    let g_content = content_count(&g_tokens);
    if g_content == 0 {
        return None;
    }
    if contiguous_subsequence(&e_tokens, &g_tokens) {
        let e_content = content_count(&e_tokens);
        if e_content == 0 {
            return None;
        }
        return Some(Rational64::new(e_content, g_content));
    }
    if contiguous_subsequence(&g_tokens, &e_tokens) {
        return Some(Rational64::one());
    }
    None
}

struct UniqueOutcome {
    credits: Vec<MatchCredit>,
    extracted_unique: usize,
    gold_unique: usize,
}

/// Deduplicate both sides per document, then assign extracted surfaces to
/// gold surfaces greedily by highest credit (ties by text order). Partials
/// accumulate on a gold entity but its total credit is capped at 1; each
/// extracted surface credits at most one gold.
fn unique_match(extracted: &[Mention], gold: &[GoldAnnotation]) -> UniqueOutcome {
    // dedup, keeping the first occurrence as representative
    let mut e_reps: Vec<(usize, String)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, m) in extracted.iter().enumerate() {
        let norm = normalize_surface(&m.surface);
        if seen.insert((m.doc.clone(), norm.clone())) {
            e_reps.push((i, norm));
        }
    }
    let mut g_reps: Vec<(usize, String)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, g) in gold.iter().enumerate() {
        let norm = normalize_surface(&g.surface);
        if seen.insert((g.doc.clone(), norm.clone())) {
            g_reps.push((i, norm));
        }
    }

    // candidate pairs within each document
    let mut pairs: Vec<(Reverse<Rational64>, usize, usize, Rational64)> = Vec::new();
    for (e_pos, (e_idx, e_norm)) in e_reps.iter().enumerate() {
        for (g_pos, (g_idx, g_norm)) in g_reps.iter().enumerate() {
            if extracted[*e_idx].doc != gold[*g_idx].doc {
                continue;
            }
            if let Some(credit) = pair_credit(e_norm, g_norm) {
                pairs.push((Reverse(credit), e_pos, g_pos, credit));
            }
        }
    }
    pairs.sort();

    let one = Rational64::one();
    let mut gold_accum: HashMap<usize, Rational64> = HashMap::new();
    let mut awarded: HashMap<usize, (usize, Rational64)> = HashMap::new();
    for (_, e_pos, g_pos, credit) in pairs {
        if awarded.contains_key(&e_pos) {
            continue;
        }
        let accum = gold_accum.entry(g_pos).or_insert_with(Rational64::zero);
        if *accum >= one {
            continue;
        }
        let contribution = credit.min(one - *accum);
        *accum += credit;
        awarded.insert(e_pos, (g_pos, contribution));
    }

    let credits = e_reps
        .iter()
        .enumerate()
        .map(|(e_pos, (e_idx, _))| match awarded.get(&e_pos) {
            Some((g_pos, contribution)) => MatchCredit {
                extracted: *e_idx,
                gold: Some(g_reps[*g_pos].0),
                credit: *contribution,
            },
            None => MatchCredit {
                extracted: *e_idx,
                gold: None,
                credit: Rational64::zero(),
            },
        })
        .collect();

    UniqueOutcome {
        credits,
        extracted_unique: e_reps.len(),
        gold_unique: g_reps.len(),
    }
}

/// Unique-entity matching: each side deduplicated by normalized surface per
/// document, exact equality scores 1, containment scores the gold's covered
/// content-token fraction.
pub fn match_unique(extracted: &[Mention], gold: &[GoldAnnotation]) -> Vec<MatchCredit> {
    unique_match(extracted, gold).credits
}

/// Occurrence-level matching by char-offset overlap: exact span-and-surface
/// matches score 1, strict sub- or super-spans score 1/2, disjoint spans
/// nothing. Every mention needs offsets.
pub fn match_occurrences(
    extracted: &[Mention],
    gold: &[GoldAnnotation],
) -> Result<Vec<MatchCredit>, EvalError> {
    let mut spans = Vec::with_capacity(extracted.len());
    for m in extracted {
        let (Some(start), Some(end)) = (m.start, m.end) else {
            return Err(EvalError::MissingOffsets {
                doc: m.doc.clone(),
                surface: m.surface.clone(),
            });
        };
        spans.push((start, end));
    }

    let mut consumed = vec![false; gold.len()];
    let mut credits: Vec<MatchCredit> = Vec::with_capacity(extracted.len());

    // exact span + surface matches first
    for (i, m) in extracted.iter().enumerate() {
        let (start, end) = spans[i];
        let exact = gold.iter().enumerate().find(|(g_idx, g)| {
            !consumed[*g_idx]
                && g.doc == m.doc
                && g.start == start
                && g.end == end
                && normalize_surface(&g.surface) == normalize_surface(&m.surface)
        });
        credits.push(match exact {
            Some((g_idx, _)) => {
                consumed[g_idx] = true;
                MatchCredit {
                    extracted: i,
                    gold: Some(g_idx),
                    credit: Rational64::one(),
                }
            }
            None => MatchCredit {
                extracted: i,
                gold: None,
                credit: Rational64::zero(),
            },
        });
    }

    // then half-credit containments among what is left
    let half = Rational64::new(1, 2);
    for (i, m) in extracted.iter().enumerate() {
        if credits[i].gold.is_some() {
            continue;
        }
        let (start, end) = spans[i];
        let partial = gold.iter().enumerate().find(|(g_idx, g)| {
            if consumed[*g_idx] || g.doc != m.doc {
                return false;
            }
            let same = g.start == start && g.end == end;
            let e_in_g = start >= g.start && end <= g.end;
            let g_in_e = g.start >= start && g.end <= end;
            !same && (e_in_g || g_in_e)
        });
        if let Some((g_idx, _)) = partial {
            consumed[g_idx] = true;
            credits[i] = MatchCredit {
                extracted: i,
                gold: Some(g_idx),
                credit: half,
            };
        }
    }
    Ok(credits)
}

/// Metrics for one document in a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocBreakdown {
    pub doc: String,
    pub gold_count: usize,
    pub extracted_count: usize,
    pub credit: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

/// Recall, precision and F1 plus the counts they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub gold_total: usize,
    pub extracted_total: usize,
    pub credit_sum: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    /// Set when the corresponding denominator was zero and the metric was
    /// reported as 0.
    pub recall_undefined: bool,
    pub precision_undefined: bool,
    pub per_type_recall: BTreeMap<EntityType, f64>,
    pub per_document: Vec<DocBreakdown>,
}

/// recall = credit / gold, precision = credit / extracted, F1 their harmonic
/// mean. Zero denominators flag the metric and report it as 0.
pub fn compute_metrics(
    credit_sum: Rational64,
    gold_count: usize,
    extracted_count: usize,
    mode: EvalMode,
) -> EvalReport {
    let credit = credit_sum.to_f64().unwrap_or(0.0);
    let (recall, recall_undefined) = if gold_count > 0 {
        (credit / gold_count as f64, false)
    } else {
        (0.0, true)
    };
    let (precision, precision_undefined) = if extracted_count > 0 {
        (credit / extracted_count as f64, false)
    } else {
        (0.0, true)
    };
    let f1 = if recall + precision > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    EvalReport {
        mode,
        gold_total: gold_count,
        extracted_total: extracted_count,
        credit_sum: credit,
        recall,
        precision,
        f1,
        recall_undefined,
        precision_undefined,
        per_type_recall: BTreeMap::new(),
        per_document: Vec::new(),
    }
}

/// Score a whole extraction run: per-document matching in the requested
/// mode, micro-aggregated totals, per-type recall.
pub fn score(
    extracted: &[Mention],
    gold: &[GoldAnnotation],
    mode: EvalMode,
) -> Result<EvalReport, EvalError> {
    let mut docs: BTreeSet<&str> = BTreeSet::new();
    docs.extend(extracted.iter().map(|m| m.doc.as_str()));
    docs.extend(gold.iter().map(|g| g.doc.as_str()));

    let mut total_credit = Rational64::zero();
    let mut gold_total = 0usize;
    let mut extracted_total = 0usize;
    let mut per_document = Vec::new();

    for doc in docs {
        let e_doc: Vec<Mention> = extracted.iter().filter(|m| m.doc == doc).cloned().collect();
        let g_doc: Vec<GoldAnnotation> = gold.iter().filter(|g| g.doc == doc).cloned().collect();
        let (credit, g_count, e_count) = match mode {
            EvalMode::UniqueFractional => {
                let outcome = unique_match(&e_doc, &g_doc);
                let credit: Rational64 = outcome.credits.iter().map(|c| c.credit).sum();
                (credit, outcome.gold_unique, outcome.extracted_unique)
            }
            EvalMode::OccurrenceHalf => {
                let credits = match_occurrences(&e_doc, &g_doc)?;
                let credit: Rational64 = credits.iter().map(|c| c.credit).sum();
                (credit, g_doc.len(), e_doc.len())
            }
        };
        let doc_report = compute_metrics(credit, g_count, e_count, mode);
        per_document.push(DocBreakdown {
            doc: doc.to_string(),
            gold_count: g_count,
            extracted_count: e_count,
            credit: doc_report.credit_sum,
            recall: doc_report.recall,
            precision: doc_report.precision,
            f1: doc_report.f1,
        });
        total_credit += credit;
        gold_total += g_count;
        extracted_total += e_count;
    }

    let mut report = compute_metrics(total_credit, gold_total, extracted_total, mode);
    report.per_type_recall = per_type_recall(extracted, gold);
    report.per_document = per_document;
    Ok(report)
}

/// Recall per gold type under unique-fractional matching restricted to that
/// type. Extractions are untyped, so per-type precision is not defined and
/// not emitted.
pub fn per_type_recall(
    extracted: &[Mention],
    gold: &[GoldAnnotation],
) -> BTreeMap<EntityType, f64> {
    let mut out = BTreeMap::new();
    for ty in EntityType::ALL {
        let typed: Vec<GoldAnnotation> = gold
            .iter()
            .filter(|g| g.entity_type == ty)
            .cloned()
            .collect();
        if typed.is_empty() {
            continue;
        }
        let mut credit = Rational64::zero();
        let mut gold_unique = 0usize;
        let docs: BTreeSet<&str> = typed.iter().map(|g| g.doc.as_str()).collect();
        for doc in docs {
            let e_doc: Vec<Mention> = extracted.iter().filter(|m| m.doc == doc).cloned().collect();
            let g_doc: Vec<GoldAnnotation> =
                typed.iter().filter(|g| g.doc == doc).cloned().collect();
            let outcome = unique_match(&e_doc, &g_doc);
            credit += outcome.credits.iter().map(|c| c.credit).sum::<Rational64>();
            gold_unique += outcome.gold_unique;
        }
        let recall = if gold_unique > 0 {
            credit.to_f64().unwrap_or(0.0) / gold_unique as f64
        } else {
            0.0
        };
        out.insert(ty, recall);
    }
    out
}

/// Drop gold annotations of the excluded types before scoring.
pub fn filter_gold_types(
    gold: &[GoldAnnotation],
    excluded: &BTreeSet<EntityType>,
) -> Vec<GoldAnnotation> {
    gold.iter()
        .filter(|g| !excluded.contains(&g.entity_type))
        .cloned()
        .collect()
}

/// Differences below this magnitude count as zero.
pub const DIFF_ZERO_TOLERANCE: f64 = 1e-12;

/// Paired per-document differences of one metric between two runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffStats {
    ///`(doc, a - b)` in document-id order.
    pub diffs: Vec<(String, f64)>,
    pub count_positive: usize,
    pub count_zero: usize,
    pub count_negative: usize,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); 0 when n < 2.
    pub sd: f64,
}

/// Per-document differences `a - b`. Both inputs must cover the same
/// document ids.
pub fn diff_stats(a: &[(String, f64)], b: &[(String, f64)]) -> Result<DiffStats, EvalError> {
    let map_a: BTreeMap<&str, f64> = a.iter().map(|(d, v)| (d.as_str(), *v)).collect();
    let map_b: BTreeMap<&str, f64> = b.iter().map(|(d, v)| (d.as_str(), *v)).collect();
    if map_a.len() != a.len() || map_b.len() != b.len() {
        return Err(EvalError::DocumentMismatch {
            details: "duplicate document ids in input".into(),
        });
    }
    let only_a: Vec<&&str> = map_a.keys().filter(|d| !map_b.contains_key(**d)).collect();
    let only_b: Vec<&&str> = map_b.keys().filter(|d| !map_a.contains_key(**d)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        return Err(EvalError::DocumentMismatch {
            details: format!("only in first: {only_a:?}; only in second: {only_b:?}"),
        });
    }

    let diffs: Vec<(String, f64)> = map_a
        .iter()
        .map(|(doc, va)| ((*doc).to_string(), va - map_b[*doc]))
        .collect();
    let n = diffs.len();
    let (mut pos, mut zero, mut neg) = (0usize, 0usize, 0usize);
    for (_, d) in &diffs {
        if d.abs() < DIFF_ZERO_TOLERANCE {
            zero += 1;
        } else if *d > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    let mean = if n > 0 {
        diffs.iter().map(|(_, d)| d).sum::<f64>() / n as f64
    } else {
        0.0
    };
    let sd = if n > 1 {
        let ss: f64 = diffs.iter().map(|(_, d)| (d - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(DiffStats {
        diffs,
        count_positive: pos,
        count_zero: zero,
        count_negative: neg,
        mean,
        sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZTestResult {
    pub z: f64,
    pub p_value: f64,
}

/// One-sided z-test of H1: mean(diffs) > mu0.
pub fn ztest_mean_greater(diffs: &[f64], mu0: f64) -> Result<ZTestResult, EvalError> {
    let n = diffs.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples { n });
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let ss: f64 = diffs.iter().map(|d| (d - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    ztest_from_summary(mean, sd, n, mu0)
}

/// Same test from summary statistics: z = (mean - mu0) / (sd / sqrt(n)),
/// p = 1 - Phi(z).
pub fn ztest_from_summary(
    mean: f64,
    sd: f64,
    n: usize,
    mu0: f64,
) -> Result<ZTestResult, EvalError> {
    if n < 2 {
        return Err(EvalError::TooFewSamples { n });
    }
    if !sd.is_finite() || sd <= 0.0 {
        return Err(EvalError::ZeroStandardDeviation);
    }
    let z = (mean - mu0) / (sd / (n as f64).sqrt());
    Ok(ZTestResult {
        z,
        p_value: 1.0 - normal_cdf(z),
    })
}

/// Standard normal CDF via a rational erf approximation (Abramowitz &
/// Stegun 7.1.26), absolute error below 1e-7.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    const P: f64 = 0.327_591_1;
    const A: [f64; 5] = [
        0.254_829_592,
        -0.284_496_736,
        1.421_413_741,
        -1.453_152_027,
        1.061_405_429,
    ];
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + P * x);
    let poly = ((((A[4] * t + A[3]) * t + A[2]) * t + A[1]) * t + A[0]) * t;
    sign * (1.0 - poly * (-x * x).exp())
}
