//! Sentence splitting and tokenization with character-offset preservation.
//!
//! All offsets count Unicode scalar values, not bytes, so rules about
//! "uppercase first letter" behave the same for accented words ("Às",
//! "Óbidos") as for ASCII ones. Both operations are deterministic pure
//! functions; documents can be segmented concurrently.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Period-terminated abbreviations that do not end a sentence.
/// Compared case-insensitively against the word before the period.
const ABBREVIATIONS: &[&str] = &[
    "cf", "dr", "dra", "sr", "sra", "srs", "eng", "prof", "profa", "av", "art", "pp", "p", "pág",
    "págs", "séc", "etc", "vol", "fig", "exmo", "exma", "nº",
];

/// Characters that terminate a sentence.
const TERMINATORS: &[char] = &['.', '!', '?', ';'];

/// Closing quotes pulled into the sentence they terminate.
const CLOSING_QUOTES: &[char] = &['"', '\'', '\u{2019}', '\u{201d}', '»'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
}

/// A token with its half-open `[start, end)` span in document char offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_word(&self) -> bool {
        self.kind == TokenKind::Word
    }

    /// First letter is uppercase. A lowercase `d'` contraction prefix is
    /// skipped, so "d'Ávila" counts as capitalized.
    pub fn is_capitalized(&self) -> bool {
        let rest = self
            .surface
            .strip_prefix("d'")
            .or_else(|| self.surface.strip_prefix("d\u{2019}"))
            .unwrap_or(&self.surface);
        rest.chars().next().is_some_and(|c| c.is_uppercase())
    }

    /// Number of alphabetic characters in the surface.
    pub fn alpha_count(&self) -> usize {
        self.surface.chars().filter(|c| c.is_alphabetic()).count()
    }

    /// Single-letter word such as "O", "L" or "K".
    pub fn is_single_letter(&self) -> bool {
        self.is_word() && self.alpha_count() == 1
    }
}

/// A sentence: ordered, non-overlapping tokens plus its ordinal and char span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
}

/// A segmented document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// Count of word-kind tokens, the unit used for corpus statistics.
    pub fn word_count(&self) -> usize {
        self.sentences
            .iter()
            .flat_map(|s| &s.tokens)
            .filter(|t| t.is_word())
            .count()
    }
}

/// Slice `text` by char offsets. Intended for invariant checks and fixtures,
/// not hot paths.
pub fn char_span(text: &str, start: usize, end: usize) -> String {
    text.chars().take(end).skip(start).collect()
}

/// Split text into sentence boundaries as `[start, end)` char-offset pairs.
///
/// A sentence ends at `.`, `!`, `?`, `;` or a newline, except when the
/// period terminates a known abbreviation. Boundaries partition the
/// non-whitespace content; whitespace-only stretches produce no sentence.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut bounds = Vec::new();
    let mut seg_start: Option<usize> = None;
    let mut i = 0;

    while i < chars.len() {
        let c = chars[i];
        if seg_start.is_none() && !c.is_whitespace() {
            seg_start = Some(i);
        }
        if c == '\n' {
            if let Some(s) = seg_start.take() {
                bounds.push((s, i));
            }
            i += 1;
            continue;
        }
        if TERMINATORS.contains(&c) && !(c == '.' && is_abbreviation_period(&chars, i)) {
            // consume runs like "..." or "?!" and trailing closing quotes
            let mut j = i + 1;
            while j < chars.len() && TERMINATORS.contains(&chars[j]) && chars[j] != ';' {
                j += 1;
            }
            while j < chars.len() && CLOSING_QUOTES.contains(&chars[j]) {
                j += 1;
            }
            bounds.push((seg_start.take().unwrap_or(i), j));
            i = j;
            continue;
        }
        i += 1;
    }
    if let Some(s) = seg_start {
        bounds.push((s, chars.len()));
    }
    bounds
}

/// Combining mark, e.g. the tilde in NFD-decomposed "São". Such characters
/// extend the current word so decomposed input tokenizes like precomposed.
fn is_combining_mark(c: char) -> bool {
    unicode_normalization::char::canonical_combining_class(c) != 0
}

fn continues_word(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c)
}

/// The period at `chars[idx]` follows a known abbreviation.
fn is_abbreviation_period(chars: &[char], idx: usize) -> bool {
    let mut w = idx;
    while w > 0 && continues_word(chars[w - 1]) {
        w -= 1;
    }
    if w == idx {
        return false;
    }
    let word: String = chars[w..idx].iter().collect::<String>().nfc().collect();
    ABBREVIATIONS.contains(&word.to_lowercase().as_str())
}

/// Tokenize one sentence. `base_offset` is the sentence start in document
/// char offsets; token spans are absolute.
///
/// Maximal letter runs form word tokens. A hyphen or apostrophe flanked by
/// letters stays inside the word ("grão-mestre", "d'Ávila"), digit runs form
/// number tokens, and any other non-whitespace char is a one-char
/// punctuation token.
pub fn tokenize(sentence_text: &str, base_offset: usize) -> Vec<Token> {
    let chars: Vec<char> = sentence_text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphabetic() {
            let start = i;
            i += 1;
            loop {
                if i < chars.len() && continues_word(chars[i]) {
                    i += 1;
                } else if i + 1 < chars.len()
                    && (chars[i] == '-' || chars[i] == '\'' || chars[i] == '\u{2019}')
                    && chars[i + 1].is_alphabetic()
                {
                    i += 2;
                } else {
                    break;
                }
            }
            tokens.push(make_token(&chars, start, i, base_offset, TokenKind::Word));
        } else if c.is_numeric() {
            let start = i;
            while i < chars.len() && chars[i].is_numeric() {
                i += 1;
            }
            tokens.push(make_token(&chars, start, i, base_offset, TokenKind::Number));
        } else {
            tokens.push(make_token(
                &chars,
                i,
                i + 1,
                base_offset,
                TokenKind::Punctuation,
            ));
            i += 1;
        }
    }
    tokens
}

fn make_token(chars: &[char], start: usize, end: usize, base: usize, kind: TokenKind) -> Token {
    Token {
        surface: chars[start..end].iter().collect(),
        start: base + start,
        end: base + end,
        kind,
    }
}

/// Segment a document: sentence split, then tokenize each sentence.
pub fn segment(id: impl Into<String>, text: impl Into<String>) -> Document {
    let text = text.into();
    let chars: Vec<char> = text.chars().collect();
    let mut sentences = Vec::new();
    for (start, end) in split_sentences(&text) {
        let slice: String = chars[start..end].iter().collect();
        let tokens = tokenize(&slice, start);
        if tokens.is_empty() {
            continue;
        }
        sentences.push(Sentence {
            index: sentences.len(),
            start,
            end,
            tokens,
        });
    }
    Document {
        id: id.into(),
        text,
        sentences,
    }
}
