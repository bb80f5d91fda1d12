//! POS tagging over a pluggable provider.
//!
//! Entity selection only inspects a small tagset (Bosque-style names); the
//! crate bundles a deterministic lexicon/suffix tagger plus a provider that
//! replays pre-tagged input, for callers that have output from a real
//! statistical tagger. Providers are immutable after construction and
//! tagging is pure, so they can be shared across worker threads.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::text::{Sentence, Token, TokenKind};

/// Tag inventory inspected by the selection rules, plus `other` as a safety
/// valve for tag strings we do not model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PosTag {
    Prop,
    N,
    Adj,
    VFi,
    VInf,
    VPcp,
    Adv,
    PronDet,
    PronPers,
    Prp,
    Art,
    Num,
    Conj,
    Punc,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 15] = [
        PosTag::Prop,
        PosTag::N,
        PosTag::Adj,
        PosTag::VFi,
        PosTag::VInf,
        PosTag::VPcp,
        PosTag::Adv,
        PosTag::PronDet,
        PosTag::PronPers,
        PosTag::Prp,
        PosTag::Art,
        PosTag::Num,
        PosTag::Conj,
        PosTag::Punc,
        PosTag::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PosTag::Prop => "prop",
            PosTag::N => "n",
            PosTag::Adj => "adj",
            PosTag::VFi => "v-fi",
            PosTag::VInf => "v-inf",
            PosTag::VPcp => "v-pcp",
            PosTag::Adv => "adv",
            PosTag::PronDet => "pron-det",
            PosTag::PronPers => "pron-pers",
            PosTag::Prp => "prp",
            PosTag::Art => "art",
            PosTag::Num => "num",
            PosTag::Conj => "conj",
            PosTag::Punc => "punc",
            PosTag::Other => "other",
        }
    }

    /// Parse a tag name exactly; `None` for anything outside the inventory.
    pub fn parse(s: &str) -> Option<PosTag> {
        PosTag::ALL.iter().copied().find(|t| t.name() == s)
    }

    pub fn is_nominal(self) -> bool {
        matches!(self, PosTag::Prop | PosTag::N)
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum TagError {
    #[error("tagger '{provider}': cannot read {path}: {source}")]
    Io {
        provider: String,
        path: String,
        source: std::io::Error,
    },
    #[error("tagger '{provider}': {path}:{line}: {message}")]
    Parse {
        provider: String,
        path: String,
        line: usize,
        message: String,
    },
    #[error("tagger '{provider}': no tags for document '{doc}'")]
    MissingDocument { provider: String, doc: String },
    #[error(
        "tagger '{provider}': alignment mismatch in document '{doc}', sentence {sentence}, \
         token {token_index}: {detail}"
    )]
    Alignment {
        provider: String,
        doc: String,
        sentence: usize,
        token_index: usize,
        detail: String,
    },
}

/// A POS tag source. Tags are assigned with full sentence context so
/// position-sensitive rules (e.g. sentence-initial capitalization) apply.
pub trait TagProvider: Send + Sync {
    fn identity(&self) -> &str;

    /// One tag per token of the sentence.
    fn tag_sentence(&self, doc_id: &str, sentence: &Sentence) -> Result<Vec<PosTag>, TagError>;
}

/// Tokens of a candidate span plus their tags, same length and order.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedCandidate {
    pub tokens: Vec<Token>,
    pub tags: Vec<PosTag>,
}

/// Tag the token span `[first, last]` of a sentence. The whole sentence is
/// tagged and the span sliced out, so context is preserved.
pub fn tag_candidate(
    provider: &dyn TagProvider,
    doc_id: &str,
    sentence: &Sentence,
    span: (usize, usize),
) -> Result<TaggedCandidate, TagError> {
    let (first, last) = span;
    assert!(
        first <= last && last < sentence.tokens.len(),
        "candidate span {span:?} outside sentence of {} tokens",
        sentence.tokens.len()
    );
    let tags = provider.tag_sentence(doc_id, sentence)?;
    Ok(TaggedCandidate {
        tokens: sentence.tokens[first..=last].to_vec(),
        tags: tags[first..=last].to_vec(),
    })
}

/// NFC-normalize and lowercase, the comparison form used by the lexicons.
pub fn nfc_lower(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

/// Closed-class function words. These never tag as `prop`, even capitalized
/// mid-sentence.
const CLOSED_CLASS: &[(&str, PosTag)] = &[
    // articles
    ("o", PosTag::Art),
    ("a", PosTag::Art),
    ("os", PosTag::Art),
    ("as", PosTag::Art),
    ("um", PosTag::Art),
    ("uma", PosTag::Art),
    ("uns", PosTag::Art),
    ("umas", PosTag::Art),
    // prepositions, including article contractions
    ("de", PosTag::Prp),
    ("em", PosTag::Prp),
    ("para", PosTag::Prp),
    ("com", PosTag::Prp),
    ("por", PosTag::Prp),
    ("sem", PosTag::Prp),
    ("sob", PosTag::Prp),
    ("sobre", PosTag::Prp),
    ("entre", PosTag::Prp),
    ("até", PosTag::Prp),
    ("após", PosTag::Prp),
    ("desde", PosTag::Prp),
    ("durante", PosTag::Prp),
    ("mediante", PosTag::Prp),
    ("ante", PosTag::Prp),
    ("contra", PosTag::Prp),
    ("perante", PosTag::Prp),
    ("segundo", PosTag::Prp),
    ("conforme", PosTag::Prp),
    ("dentre", PosTag::Prp),
    ("do", PosTag::Prp),
    ("da", PosTag::Prp),
    ("dos", PosTag::Prp),
    ("das", PosTag::Prp),
    ("no", PosTag::Prp),
    ("na", PosTag::Prp),
    ("nos", PosTag::Prp),
    ("nas", PosTag::Prp),
    ("ao", PosTag::Prp),
    ("aos", PosTag::Prp),
    ("à", PosTag::Prp),
    ("às", PosTag::Prp),
    ("pelo", PosTag::Prp),
    ("pela", PosTag::Prp),
    ("pelos", PosTag::Prp),
    ("pelas", PosTag::Prp),
    ("num", PosTag::Prp),
    ("numa", PosTag::Prp),
    ("dum", PosTag::Prp),
    ("duma", PosTag::Prp),
    // determiner pronouns, including preposition contractions
    ("este", PosTag::PronDet),
    ("esta", PosTag::PronDet),
    ("estes", PosTag::PronDet),
    ("estas", PosTag::PronDet),
    ("esse", PosTag::PronDet),
    ("essa", PosTag::PronDet),
    ("esses", PosTag::PronDet),
    ("essas", PosTag::PronDet),
    ("aquele", PosTag::PronDet),
    ("aquela", PosTag::PronDet),
    ("aqueles", PosTag::PronDet),
    ("aquelas", PosTag::PronDet),
    ("isto", PosTag::PronDet),
    ("isso", PosTag::PronDet),
    ("aquilo", PosTag::PronDet),
    ("todo", PosTag::PronDet),
    ("toda", PosTag::PronDet),
    ("todos", PosTag::PronDet),
    ("todas", PosTag::PronDet),
    ("outro", PosTag::PronDet),
    ("outra", PosTag::PronDet),
    ("outros", PosTag::PronDet),
    ("outras", PosTag::PronDet),
    ("algum", PosTag::PronDet),
    ("alguma", PosTag::PronDet),
    ("alguns", PosTag::PronDet),
    ("algumas", PosTag::PronDet),
    ("nenhum", PosTag::PronDet),
    ("nenhuma", PosTag::PronDet),
    ("qualquer", PosTag::PronDet),
    ("quaisquer", PosTag::PronDet),
    ("muitos", PosTag::PronDet),
    ("muitas", PosTag::PronDet),
    ("poucos", PosTag::PronDet),
    ("poucas", PosTag::PronDet),
    ("vários", PosTag::PronDet),
    ("várias", PosTag::PronDet),
    ("cada", PosTag::PronDet),
    ("tal", PosTag::PronDet),
    ("tais", PosTag::PronDet),
    ("tanto", PosTag::PronDet),
    ("tanta", PosTag::PronDet),
    ("tantos", PosTag::PronDet),
    ("tantas", PosTag::PronDet),
    ("cujo", PosTag::PronDet),
    ("cuja", PosTag::PronDet),
    ("cujos", PosTag::PronDet),
    ("cujas", PosTag::PronDet),
    ("deste", PosTag::PronDet),
    ("desta", PosTag::PronDet),
    ("destes", PosTag::PronDet),
    ("destas", PosTag::PronDet),
    ("desse", PosTag::PronDet),
    ("dessa", PosTag::PronDet),
    ("desses", PosTag::PronDet),
    ("dessas", PosTag::PronDet),
    ("daquele", PosTag::PronDet),
    ("daquela", PosTag::PronDet),
    ("disto", PosTag::PronDet),
    ("disso", PosTag::PronDet),
    ("daquilo", PosTag::PronDet),
    ("neste", PosTag::PronDet),
    ("nesta", PosTag::PronDet),
    ("nestes", PosTag::PronDet),
    ("nestas", PosTag::PronDet),
    ("nesse", PosTag::PronDet),
    ("nessa", PosTag::PronDet),
    ("nesses", PosTag::PronDet),
    ("nessas", PosTag::PronDet),
    ("naquele", PosTag::PronDet),
    ("naquela", PosTag::PronDet),
    ("noutro", PosTag::PronDet),
    ("noutra", PosTag::PronDet),
    // personal pronouns
    ("eu", PosTag::PronPers),
    ("tu", PosTag::PronPers),
    ("ele", PosTag::PronPers),
    ("ela", PosTag::PronPers),
    ("nós", PosTag::PronPers),
    ("vós", PosTag::PronPers),
    ("eles", PosTag::PronPers),
    ("elas", PosTag::PronPers),
    ("você", PosTag::PronPers),
    ("vocês", PosTag::PronPers),
    ("me", PosTag::PronPers),
    ("te", PosTag::PronPers),
    ("se", PosTag::PronPers),
    ("lhe", PosTag::PronPers),
    ("lhes", PosTag::PronPers),
    ("mim", PosTag::PronPers),
    ("ti", PosTag::PronPers),
    ("si", PosTag::PronPers),
    ("comigo", PosTag::PronPers),
    ("contigo", PosTag::PronPers),
    ("consigo", PosTag::PronPers),
    ("conosco", PosTag::PronPers),
    ("connosco", PosTag::PronPers),
    // conjunctions
    ("e", PosTag::Conj),
    ("mas", PosTag::Conj),
    ("ou", PosTag::Conj),
    ("nem", PosTag::Conj),
    ("que", PosTag::Conj),
    ("porque", PosTag::Conj),
    ("pois", PosTag::Conj),
    ("porém", PosTag::Conj),
    ("contudo", PosTag::Conj),
    ("todavia", PosTag::Conj),
    ("entretanto", PosTag::Conj),
    ("embora", PosTag::Conj),
    ("enquanto", PosTag::Conj),
    ("quando", PosTag::Conj),
    ("caso", PosTag::Conj),
    ("como", PosTag::Conj),
    ("portanto", PosTag::Conj),
    ("senão", PosTag::Conj),
    // adverbs
    ("não", PosTag::Adv),
    ("já", PosTag::Adv),
    ("ainda", PosTag::Adv),
    ("sempre", PosTag::Adv),
    ("nunca", PosTag::Adv),
    ("jamais", PosTag::Adv),
    ("hoje", PosTag::Adv),
    ("ontem", PosTag::Adv),
    ("amanhã", PosTag::Adv),
    ("aqui", PosTag::Adv),
    ("ali", PosTag::Adv),
    ("lá", PosTag::Adv),
    ("cá", PosTag::Adv),
    ("aí", PosTag::Adv),
    ("agora", PosTag::Adv),
    ("então", PosTag::Adv),
    ("depois", PosTag::Adv),
    ("antes", PosTag::Adv),
    ("muito", PosTag::Adv),
    ("pouco", PosTag::Adv),
    ("mais", PosTag::Adv),
    ("menos", PosTag::Adv),
    ("bem", PosTag::Adv),
    ("mal", PosTag::Adv),
    ("também", PosTag::Adv),
    ("só", PosTag::Adv),
    ("apenas", PosTag::Adv),
    ("quase", PosTag::Adv),
    ("talvez", PosTag::Adv),
    ("sim", PosTag::Adv),
    ("assim", PosTag::Adv),
    ("tão", PosTag::Adv),
    ("onde", PosTag::Adv),
    ("cedo", PosTag::Adv),
    ("tarde", PosTag::Adv),
    ("longe", PosTag::Adv),
    ("perto", PosTag::Adv),
    ("dentro", PosTag::Adv),
    ("fora", PosTag::Adv),
    ("acima", PosTag::Adv),
    ("abaixo", PosTag::Adv),
    ("além", PosTag::Adv),
    ("atrás", PosTag::Adv),
    ("adiante", PosTag::Adv),
    ("aliás", PosTag::Adv),
];

const OPEN_CLASS_DATA: &str = include_str!("../data/lexicon.tsv");

struct Lexicons {
    closed: HashMap<&'static str, PosTag>,
    open: HashMap<String, PosTag>,
}

fn lexicons() -> &'static Lexicons {
    static LEX: OnceLock<Lexicons> = OnceLock::new();
    LEX.get_or_init(|| {
        let closed = CLOSED_CLASS.iter().copied().collect();
        let mut open = HashMap::new();
        for line in OPEN_CLASS_DATA.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .expect("lexicon.tsv line must be word<TAB>tag");
            let tag = PosTag::parse(tag.trim()).expect("lexicon.tsv has a valid tag name");
            open.entry(nfc_lower(word)).or_insert(tag);
        }
        Lexicons { closed, open }
    })
}

/// The bundled deterministic tagger.
///
/// Precedence per token: closed-class lexicon (case-insensitive, beats
/// everything, so "O" stays an article mid-sentence); single-letter words
/// tag `other` (isolated capitals such as OCR noise "L", "K" carry no
/// category evidence); capitalized words tag `prop`, except sentence-initial
/// ones which are first looked up lowercased in the open-class lexicon;
/// lowercase words go through the open-class lexicon, then suffix rules,
/// then fall back to `n`.
pub struct BuiltinTagger {
    lex: &'static Lexicons,
}

pub fn builtin_tagger() -> BuiltinTagger {
    BuiltinTagger { lex: lexicons() }
}

impl BuiltinTagger {
    fn tag_word(&self, token: &Token, sentence_initial: bool) -> PosTag {
        let lower = nfc_lower(&token.surface);
        if let Some(&tag) = self.lex.closed.get(lower.as_str()) {
            return tag;
        }
        if token.alpha_count() == 1 {
            return PosTag::Other;
        }
        if token.is_capitalized() {
            if !sentence_initial {
                return PosTag::Prop;
            }
            if let Some(&tag) = self.lex.open.get(&lower) {
                return tag;
            }
            if is_mente_adverb(&lower) {
                return PosTag::Adv;
            }
            return PosTag::Prop;
        }
        if let Some(&tag) = self.lex.open.get(&lower) {
            return tag;
        }
        if is_mente_adverb(&lower) {
            return PosTag::Adv;
        }
        suffix_tag(&lower).unwrap_or(PosTag::N)
    }
}

fn is_mente_adverb(lower: &str) -> bool {
    lower.ends_with("mente") && lower.chars().count() > 6
}

fn suffix_tag(lower: &str) -> Option<PosTag> {
    let n = lower.chars().count();
    for (suffix, tag) in [
        ("ções", PosTag::N),
        ("ção", PosTag::N),
        ("dades", PosTag::N),
        ("dade", PosTag::N),
        ("mentos", PosTag::N),
        ("mento", PosTag::N),
        ("ndo", PosTag::VPcp),
        ("amos", PosTag::VFi),
        ("emos", PosTag::VFi),
        ("ou", PosTag::VFi),
        ("am", PosTag::VFi),
    ] {
        if lower.ends_with(suffix) && n > suffix.chars().count() + 1 {
            return Some(tag);
        }
    }
    None
}

impl TagProvider for BuiltinTagger {
    fn identity(&self) -> &str {
        "builtin"
    }

    fn tag_sentence(&self, _doc_id: &str, sentence: &Sentence) -> Result<Vec<PosTag>, TagError> {
        let mut tags = Vec::with_capacity(sentence.tokens.len());
        let mut word_seen = false;
        for token in &sentence.tokens {
            let tag = match token.kind {
                TokenKind::Number => PosTag::Num,
                TokenKind::Punctuation => PosTag::Punc,
                TokenKind::Word => self.tag_word(token, !word_seen),
            };
            if token.kind != TokenKind::Punctuation {
                word_seen = true;
            }
            tags.push(tag);
        }
        Ok(tags)
    }
}

/// Provider that replays tags from a pre-tagged file.
///
/// Format: UTF-8, one `surface<TAB>tag` line per token, blank line between
/// sentences, `# doc: <id>` header before each document.
pub struct PretaggedProvider {
    path: String,
    docs: HashMap<String, Vec<Vec<(String, PosTag)>>>,
    warnings: Vec<String>,
}

impl PretaggedProvider {
    /// Warnings collected while loading (unknown tag strings).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

pub fn pretagged_provider(path: impl AsRef<Path>) -> Result<PretaggedProvider, TagError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let content = std::fs::read_to_string(path).map_err(|source| TagError::Io {
        provider: "pretagged".into(),
        path: display.clone(),
        source,
    })?;
    parse_pretagged(&display, &content)
}

fn parse_pretagged(path: &str, content: &str) -> Result<PretaggedProvider, TagError> {
    let mut docs: HashMap<String, Vec<Vec<(String, PosTag)>>> = HashMap::new();
    let mut warnings = Vec::new();
    let mut current: Option<String> = None;
    let mut sentence: Vec<(String, PosTag)> = Vec::new();

    let flush = |current: &Option<String>,
                 sentence: &mut Vec<(String, PosTag)>,
                 docs: &mut HashMap<String, Vec<Vec<(String, PosTag)>>>| {
        if let (Some(doc), false) = (current, sentence.is_empty()) {
            docs.get_mut(doc).unwrap().push(std::mem::take(sentence));
        }
    };

    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end();
        if let Some(rest) = line.strip_prefix("# doc:") {
            flush(&current, &mut sentence, &mut docs);
            let id = rest.trim().to_string();
            if id.is_empty() {
                return Err(TagError::Parse {
                    provider: "pretagged".into(),
                    path: path.into(),
                    line: line_no,
                    message: "empty document id".into(),
                });
            }
            docs.entry(id.clone()).or_default();
            current = Some(id);
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            flush(&current, &mut sentence, &mut docs);
            continue;
        }
        let Some(doc) = &current else {
            return Err(TagError::Parse {
                provider: "pretagged".into(),
                path: path.into(),
                line: line_no,
                message: "token line before any '# doc:' header".into(),
            });
        };
        let Some((surface, tag_str)) = line.split_once('\t') else {
            return Err(TagError::Parse {
                provider: "pretagged".into(),
                path: path.into(),
                line: line_no,
                message: format!("expected 'surface<TAB>tag', got '{line}'"),
            });
        };
        let tag_str = tag_str.trim();
        let tag = match PosTag::parse(tag_str) {
            Some(t) => t,
            None => {
                warnings.push(format!(
                    "{path}:{line_no}: unknown tag '{tag_str}' for '{surface}' in document \
                     '{doc}', mapped to 'other'"
                ));
                PosTag::Other
            }
        };
        sentence.push((surface.to_string(), tag));
    }
    flush(&current, &mut sentence, &mut docs);

    Ok(PretaggedProvider {
        path: path.into(),
        docs,
        warnings,
    })
}

impl TagProvider for PretaggedProvider {
    fn identity(&self) -> &str {
        "pretagged"
    }

    fn tag_sentence(&self, doc_id: &str, sentence: &Sentence) -> Result<Vec<PosTag>, TagError> {
        let doc = self
            .docs
            .get(doc_id)
            .ok_or_else(|| TagError::MissingDocument {
                provider: format!("pretagged ({})", self.path),
                doc: doc_id.to_string(),
            })?;
        let tagged = doc.get(sentence.index).ok_or_else(|| TagError::Alignment {
            provider: "pretagged".into(),
            doc: doc_id.to_string(),
            sentence: sentence.index,
            token_index: 0,
            detail: format!("file has only {} sentences for this document", doc.len()),
        })?;
        if tagged.len() != sentence.tokens.len() {
            return Err(TagError::Alignment {
                provider: "pretagged".into(),
                doc: doc_id.to_string(),
                sentence: sentence.index,
                token_index: tagged.len().min(sentence.tokens.len()),
                detail: format!(
                    "file has {} tokens, sentence has {}",
                    tagged.len(),
                    sentence.tokens.len()
                ),
            });
        }
        for (i, ((surface, _), token)) in tagged.iter().zip(&sentence.tokens).enumerate() {
            if surface != &token.surface {
                return Err(TagError::Alignment {
                    provider: "pretagged".into(),
                    doc: doc_id.to_string(),
                    sentence: sentence.index,
                    token_index: i,
                    detail: format!("file token '{surface}' != corpus token '{}'", token.surface),
                });
            }
        }
        Ok(tagged.iter().map(|(_, t)| *t).collect())
    }
}
