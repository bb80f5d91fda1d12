//! The four rule bases driving extraction: term patterns (TPB), category
//! clipping patterns (CPB), category pruning patterns (PPB) and the term
//! pruning base (TPPB), plus the shipped defaults and the line-oriented
//! file format used to override them.
//!
//! A `PatternBases` value is immutable after load and freely shareable
//! across extraction workers.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::tagging::{nfc_lower, PosTag};
use crate::text::Token;

const DEFAULT_PATTERNS: &str = include_str!("../data/patterns.pampo");
const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_pt.txt");

/// One element of a term pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternElement {
    /// Word token whose first letter is uppercase.
    Cap,
    /// Trigger-lexicon member; only lowercase-initial tokens qualify.
    Trigger,
    /// Connector-set member, exact surface match.
    Connector,
    /// Fixed word, compared case-insensitively after NFC.
    Literal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    One,
    Optional,
    ZeroOrMore,
    OneOrMore,
}

impl Quantifier {
    fn suffix(self) -> &'static str {
        match self {
            Quantifier::One => "",
            Quantifier::Optional => "?",
            Quantifier::ZeroOrMore => "*",
            Quantifier::OneOrMore => "+",
        }
    }
}

/// An element or a parenthesized group, with its quantifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternItem {
    Elem(PatternElement, Quantifier),
    Group(Vec<PatternItem>, Quantifier),
}

/// A TPB entry: a sequence of quantified elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermPattern {
    pub items: Vec<PatternItem>,
}

impl TermPattern {
    /// Parse the element syntax, e.g. `TRIGGER? CONNECTOR? CAP (CONNECTOR CAP)*`.
    pub fn parse(source: &str) -> Result<TermPattern, String> {
        let tokens = lex_pattern(source)?;
        let mut pos = 0;
        let items = parse_seq(&tokens, &mut pos, false)?;
        if pos != tokens.len() {
            return Err("unbalanced ')'".into());
        }
        if items.is_empty() {
            return Err("empty pattern".into());
        }
        let pattern = TermPattern { items };
        if !pattern.has_cap_or_trigger() {
            return Err("pattern must contain a CAP or TRIGGER element".into());
        }
        Ok(pattern)
    }

    fn has_cap_or_trigger(&self) -> bool {
        fn walk(items: &[PatternItem]) -> bool {
            items.iter().any(|i| match i {
                PatternItem::Elem(PatternElement::Cap | PatternElement::Trigger, _) => true,
                PatternItem::Elem(_, _) => false,
                PatternItem::Group(inner, _) => walk(inner),
            })
        }
        walk(&self.items)
    }
}

impl fmt::Display for TermPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_items(&self.items))
    }
}

fn render_items(items: &[PatternItem]) -> String {
    items
        .iter()
        .map(|item| match item {
            PatternItem::Elem(e, q) => {
                let name = match e {
                    PatternElement::Cap => "CAP".to_string(),
                    PatternElement::Trigger => "TRIGGER".to_string(),
                    PatternElement::Connector => "CONNECTOR".to_string(),
                    PatternElement::Literal(w) => format!("\"{w}\""),
                };
                format!("{name}{}", q.suffix())
            }
            PatternItem::Group(inner, q) => format!("({}){}", render_items(inner), q.suffix()),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, PartialEq)]
enum PatToken {
    LParen,
    RParen,
    Quant(Quantifier),
    Ident(String),
    Literal(String),
}

fn lex_pattern(source: &str) -> Result<Vec<PatToken>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = source.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '(' => {
                out.push(PatToken::LParen);
                i += 1;
            }
            ')' => {
                out.push(PatToken::RParen);
                i += 1;
            }
            '?' => {
                out.push(PatToken::Quant(Quantifier::Optional));
                i += 1;
            }
            '*' => {
                out.push(PatToken::Quant(Quantifier::ZeroOrMore));
                i += 1;
            }
            '+' => {
                out.push(PatToken::Quant(Quantifier::OneOrMore));
                i += 1;
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err("unterminated literal".into());
                }
                out.push(PatToken::Literal(chars[start..j].iter().collect()));
                i = j + 1;
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"()?*+\"".contains(chars[i])
                {
                    i += 1;
                }
                out.push(PatToken::Ident(chars[start..i].iter().collect()));
            }
        }
    }
    Ok(out)
}

fn parse_seq(
    tokens: &[PatToken],
    pos: &mut usize,
    in_group: bool,
) -> Result<Vec<PatternItem>, String> {
    let mut items = Vec::new();
    while *pos < tokens.len() {
        match &tokens[*pos] {
            PatToken::RParen => {
                if in_group {
                    return Ok(items);
                }
                return Err("unbalanced ')'".into());
            }
            PatToken::Quant(_) => return Err("quantifier without preceding element".into()),
            PatToken::LParen => {
                *pos += 1;
                let inner = parse_seq(tokens, pos, true)?;
                if *pos >= tokens.len() || tokens[*pos] != PatToken::RParen {
                    return Err("missing ')'".into());
                }
                *pos += 1;
                if inner.is_empty() {
                    return Err("empty group".into());
                }
                items.push(PatternItem::Group(inner, take_quant(tokens, pos)));
            }
            PatToken::Ident(name) => {
                let elem = match name.as_str() {
                    "CAP" => PatternElement::Cap,
                    "TRIGGER" => PatternElement::Trigger,
                    "CONNECTOR" => PatternElement::Connector,
                    other => return Err(format!("unknown element '{other}'")),
                };
                *pos += 1;
                items.push(PatternItem::Elem(elem, take_quant(tokens, pos)));
            }
            PatToken::Literal(word) => {
                let elem = PatternElement::Literal(nfc_lower(word));
                *pos += 1;
                items.push(PatternItem::Elem(elem, take_quant(tokens, pos)));
            }
        }
    }
    if in_group {
        return Err("missing ')'".into());
    }
    Ok(items)
}

fn take_quant(tokens: &[PatToken], pos: &mut usize) -> Quantifier {
    if let Some(PatToken::Quant(q)) = tokens.get(*pos) {
        *pos += 1;
        *q
    } else {
        Quantifier::One
    }
}

/// Lowercase trigger terms ("ministro", "presidente", ...).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TriggerLexicon {
    terms: BTreeSet<String>,
}

impl TriggerLexicon {
    pub fn contains(&self, lower: &str) -> bool {
        self.terms.contains(lower)
    }

    pub fn insert(&mut self, term: &str) {
        self.terms.insert(nfc_lower(term));
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

/// A CPB entry: when `tags` is a prefix of a candidate's tag sequence, the
/// leading `clip_count` tokens are removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClippingPattern {
    pub tags: Vec<PosTag>,
    pub clip_count: usize,
}

impl ClippingPattern {
    pub fn matches_prefix(&self, tags: &[PosTag]) -> bool {
        tags.len() >= self.tags.len() && tags[..self.tags.len()] == self.tags[..]
    }
}

/// A PPB entry: a total predicate over a candidate's full tag sequence;
/// matching discards the candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PruningPattern {
    /// Matches when none of the given tags occurs in the sequence.
    /// The shipped default is `without prop n`.
    Without(Vec<PosTag>),
    /// Matches when every tag of the sequence is in the given set.
    Only(Vec<PosTag>),
}

impl PruningPattern {
    pub fn matches(&self, tags: &[PosTag]) -> bool {
        match self {
            PruningPattern::Without(set) => !tags.iter().any(|t| set.contains(t)),
            PruningPattern::Only(set) => tags.iter().all(|t| set.contains(t)),
        }
    }
}

/// Stop-terms compared against the full candidate surface,
/// case-insensitively after NFC normalization.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermPruningBase {
    terms: BTreeSet<String>,
}

impl TermPruningBase {
    pub fn insert(&mut self, term: &str) {
        let normalized = normalize_term(term);
        if !normalized.is_empty() {
            self.terms.insert(normalized);
        }
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.terms.contains(&normalize_term(surface))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

/// NFC, lowercase, trimmed, inner whitespace collapsed to single spaces.
fn normalize_term(s: &str) -> String {
    let lowered = s.nfc().collect::<String>().to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The four rule bases plus the trigger lexicon and connector set.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternBases {
    pub tpb: Vec<TermPattern>,
    pub trigger_lexicon: TriggerLexicon,
    pub connectors: BTreeSet<String>,
    pub cpb: Vec<ClippingPattern>,
    pub ppb: Vec<PruningPattern>,
    pub tppb: TermPruningBase,
}

impl PatternBases {
    /// Word token whose first letter is uppercase.
    pub fn is_cap(&self, token: &Token) -> bool {
        token.is_word() && token.is_capitalized()
    }

    /// Lowercase-initial word token in the trigger lexicon.
    pub fn is_trigger(&self, token: &Token) -> bool {
        token.is_word()
            && !token.is_capitalized()
            && self.trigger_lexicon.contains(&nfc_lower(&token.surface))
    }

    /// Exact surface membership in the connector set.
    pub fn is_connector(&self, token: &Token) -> bool {
        self.connectors.contains(&token.surface)
    }

    /// Render back to the pattern-file format. Reloading the result yields a
    /// structurally identical value.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        out.push_str("[tpb]\n");
        for p in &self.tpb {
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out.push_str("\n[triggers]\n");
        for t in self.trigger_lexicon.iter() {
            out.push_str(t);
            out.push('\n');
        }
        out.push_str("\n[connectors]\n");
        for c in &self.connectors {
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("\n[cpb]\n");
        for c in &self.cpb {
            let tags: Vec<&str> = c.tags.iter().map(|t| t.name()).collect();
            out.push_str(&format!("{} : {}\n", tags.join(" "), c.clip_count));
        }
        out.push_str("\n[ppb]\n");
        for p in &self.ppb {
            let (kw, tags) = match p {
                PruningPattern::Without(t) => ("without", t),
                PruningPattern::Only(t) => ("only", t),
            };
            let names: Vec<&str> = tags.iter().map(|t| t.name()).collect();
            out.push_str(&format!("{kw} {}\n", names.join(" ")));
        }
        out.push_str("\n[tppb]\n");
        for t in self.tppb.iter() {
            out.push_str(t);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("cannot read pattern file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: [tpb] section is present but empty")]
    EmptyTpb { path: String },
}

/// The shipped defaults: term patterns for capitalized/trigger sequences,
/// the trigger and connector lists, clip/prune rules, and the stop-term
/// base extended with the bundled Portuguese stopword list.
pub fn default_bases() -> PatternBases {
    static DEFAULTS: OnceLock<PatternBases> = OnceLock::new();
    DEFAULTS
        .get_or_init(|| {
            let mut bases = parse_pattern_file("<default>", DEFAULT_PATTERNS)
                .expect("shipped pattern file parses")
                .finish("<default>", None)
                .expect("shipped pattern file is complete");
            for line in DEFAULT_STOPWORDS.lines() {
                let line = line.trim();
                if !line.is_empty() && !line.starts_with('#') {
                    bases.tppb.insert(line);
                }
            }
            bases
        })
        .clone()
}

/// Load pattern bases from a file. Sections not present fall back to the
/// shipped defaults; a present-but-empty `[tpb]` section is an error.
pub fn load_pattern_bases(path: impl AsRef<Path>) -> Result<PatternBases, PatternError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let content = std::fs::read_to_string(path).map_err(|source| PatternError::Io {
        path: display.clone(),
        source,
    })?;
    parse_pattern_bases(&display, &content)
}

/// Parse pattern bases from a string (same semantics as [`load_pattern_bases`]).
pub fn parse_pattern_bases(path: &str, content: &str) -> Result<PatternBases, PatternError> {
    parse_pattern_file(path, content)?.finish(path, Some(default_bases()))
}

#[derive(Default)]
struct RawSections {
    tpb: Option<Vec<TermPattern>>,
    triggers: Option<TriggerLexicon>,
    connectors: Option<BTreeSet<String>>,
    cpb: Option<Vec<ClippingPattern>>,
    ppb: Option<Vec<PruningPattern>>,
    tppb: Option<TermPruningBase>,
}

impl RawSections {
    fn finish(
        self,
        path: &str,
        defaults: Option<PatternBases>,
    ) -> Result<PatternBases, PatternError> {
        if let Some(tpb) = &self.tpb {
            if tpb.is_empty() {
                return Err(PatternError::EmptyTpb { path: path.into() });
            }
        }
        let fallback = |section: &str| -> Result<PatternBases, PatternError> {
            defaults.clone().ok_or_else(|| PatternError::Parse {
                path: path.into(),
                line: 0,
                message: format!("missing [{section}] section and no defaults available"),
            })
        };
        Ok(PatternBases {
            tpb: match self.tpb {
                Some(v) => v,
                None => fallback("tpb")?.tpb,
            },
            trigger_lexicon: match self.triggers {
                Some(v) => v,
                None => fallback("triggers")?.trigger_lexicon,
            },
            connectors: match self.connectors {
                Some(v) => v,
                None => fallback("connectors")?.connectors,
            },
            cpb: match self.cpb {
                Some(v) => v,
                None => fallback("cpb")?.cpb,
            },
            ppb: match self.ppb {
                Some(v) => v,
                None => fallback("ppb")?.ppb,
            },
            tppb: match self.tppb {
                Some(v) => v,
                None => fallback("tppb")?.tppb,
            },
        })
    }
}

fn parse_pattern_file(path: &str, content: &str) -> Result<RawSections, PatternError> {
    let mut sections = RawSections::default();
    let mut current: Option<String> = None;

    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| PatternError::Parse {
            path: path.into(),
            line: line_no,
            message,
        };
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_lowercase();
            match name.as_str() {
                "tpb" => {
                    sections.tpb.get_or_insert_with(Vec::new);
                }
                "cpb" => {
                    sections.cpb.get_or_insert_with(Vec::new);
                }
                "ppb" => {
                    sections.ppb.get_or_insert_with(Vec::new);
                }
                "triggers" => {
                    sections
                        .triggers
                        .get_or_insert_with(TriggerLexicon::default);
                }
                "connectors" => {
                    sections.connectors.get_or_insert_with(BTreeSet::new);
                }
                "tppb" => {
                    sections.tppb.get_or_insert_with(TermPruningBase::default);
                }
                other => return Err(err(format!("unknown section [{other}]"))),
            }
            current = Some(name);
            continue;
        }
        let Some(section) = &current else {
            return Err(err(format!("entry '{line}' before any section header")));
        };
        match section.as_str() {
            "tpb" => {
                let pattern = TermPattern::parse(line).map_err(err)?;
                sections.tpb.as_mut().unwrap().push(pattern);
            }
            "triggers" => sections.triggers.as_mut().unwrap().insert(line),
            "connectors" => {
                sections
                    .connectors
                    .as_mut()
                    .unwrap()
                    .insert(line.to_string());
            }
            "cpb" => {
                let (tag_part, count_part) = match line.rsplit_once(':') {
                    Some((t, c)) => (t.trim(), Some(c.trim())),
                    None => (line, None),
                };
                let mut tags = Vec::new();
                for name in tag_part.split_whitespace() {
                    let tag = PosTag::parse(name)
                        .ok_or_else(|| err(format!("unknown POS tag '{name}'")))?;
                    tags.push(tag);
                }
                if tags.is_empty() {
                    return Err(err("clipping pattern needs at least one tag".into()));
                }
                let clip_count = match count_part {
                    Some(c) => c
                        .parse::<usize>()
                        .map_err(|_| err(format!("invalid clip count '{c}'")))?,
                    None => 1,
                };
                if clip_count == 0 || clip_count > tags.len() {
                    return Err(err(format!(
                        "clip count {clip_count} out of range 1..={}",
                        tags.len()
                    )));
                }
                sections
                    .cpb
                    .as_mut()
                    .unwrap()
                    .push(ClippingPattern { tags, clip_count });
            }
            "ppb" => {
                let mut parts = line.split_whitespace();
                let kw = parts.next().unwrap();
                let mut tags = Vec::new();
                for name in parts {
                    let tag = PosTag::parse(name)
                        .ok_or_else(|| err(format!("unknown POS tag '{name}'")))?;
                    tags.push(tag);
                }
                if tags.is_empty() {
                    return Err(err("pruning pattern needs at least one tag".into()));
                }
                let pattern = match kw {
                    "without" => PruningPattern::Without(tags),
                    "only" => PruningPattern::Only(tags),
                    other => {
                        return Err(err(format!(
                            "unknown pruning keyword '{other}' (expected 'without' or 'only')"
                        )))
                    }
                };
                sections.ppb.as_mut().unwrap().push(pattern);
            }
            "tppb" => sections.tppb.as_mut().unwrap().insert(line),
            _ => unreachable!(),
        }
    }
    Ok(sections)
}
