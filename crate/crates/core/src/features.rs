//! Tokenization, character/word n-gram extraction, vocabulary construction,
//! sparse count vectorization, and id-sequence encoding.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extraction unit for n-grams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NgramUnit {
    Char,
    Word,
}

/// Whether character n-grams may cross word boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// N-grams never contain whitespace.
    Restricted,
    /// N-grams run over the whole text with whitespace runs collapsed to a
    /// single space.
    Spanning,
}

/// An n-gram feature specification: unit, order range, and boundary mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NgramSpec {
    pub unit: NgramUnit,
    pub n_min: usize,
    pub n_max: usize,
    pub boundary_mode: BoundaryMode,
}

impl NgramSpec {
    pub fn new(
        unit: NgramUnit,
        n_min: usize,
        n_max: usize,
        boundary_mode: BoundaryMode,
    ) -> Result<Self> {
        if n_min < 1 {
            return Err(Error::InvalidSpec("n_min must be at least 1".into()));
        }
        if n_max < n_min {
            return Err(Error::InvalidSpec(format!(
                "n_max ({n_max}) must be at least n_min ({n_min})"
            )));
        }
        if unit == NgramUnit::Word && boundary_mode == BoundaryMode::Spanning {
            return Err(Error::InvalidSpec(
                "word n-grams are always boundary-restricted".into(),
            ));
        }
        Ok(NgramSpec {
            unit,
            n_min,
            n_max,
            boundary_mode,
        })
    }

    pub fn chars(n_min: usize, n_max: usize, mode: BoundaryMode) -> Result<Self> {
        Self::new(NgramUnit::Char, n_min, n_max, mode)
    }

    pub fn words(n_min: usize, n_max: usize) -> Result<Self> {
        Self::new(NgramUnit::Word, n_min, n_max, BoundaryMode::Restricted)
    }

    /// Single-order spec, as consumed by the sequence models.
    pub fn single(unit: NgramUnit, n: usize, mode: BoundaryMode) -> Result<Self> {
        Self::new(unit, n, n, mode)
    }
}

impl fmt::Display for NgramSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.unit {
            NgramUnit::Char => "char",
            NgramUnit::Word => "word",
        };
        write!(f, "{unit}:{}-{}", self.n_min, self.n_max)?;
        if self.unit == NgramUnit::Char {
            let mode = match self.boundary_mode {
                BoundaryMode::Restricted => "restricted",
                BoundaryMode::Spanning => "spanning",
            };
            write!(f, ":{mode}")?;
        }
        Ok(())
    }
}

impl FromStr for NgramSpec {
    type Err = Error;

    /// Parse the `unit:min-max[:mode]` flag grammar, e.g. `char:2-2:spanning`
    /// or `word:1-1`. The mode defaults to `restricted`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidSpec(format!("{msg} in {s:?}"));
        let mut parts = s.split(':');
        let unit = match parts.next() {
            Some("char") => NgramUnit::Char,
            Some("word") => NgramUnit::Word,
            _ => return Err(bad("expected unit `char` or `word`")),
        };
        let range = parts.next().ok_or_else(|| bad("missing order range"))?;
        let (lo, hi) = range
            .split_once('-')
            .ok_or_else(|| bad("expected `min-max` order range"))?;
        let n_min: usize = lo.parse().map_err(|_| bad("invalid minimum order"))?;
        let n_max: usize = hi.parse().map_err(|_| bad("invalid maximum order"))?;
        let mode = match parts.next() {
            None => BoundaryMode::Restricted,
            Some("restricted") => BoundaryMode::Restricted,
            Some("spanning") => BoundaryMode::Spanning,
            Some(_) => return Err(bad("expected mode `restricted` or `spanning`")),
        };
        if parts.next().is_some() {
            return Err(bad("trailing fields"));
        }
        NgramSpec::new(unit, n_min, n_max, mode)
    }
}

/// Maximal runs of non-whitespace scalars, in order.
pub fn word_tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Collapse whitespace runs to a single space and drop outer whitespace, so
/// formatting does not create distinct spanning n-grams.
fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(ch);
        }
    }
    out
}

fn char_windows(chars: &[char], n: usize, out: &mut Vec<String>) {
    if chars.len() < n {
        return;
    }
    for window in chars.windows(n) {
        out.push(window.iter().collect());
    }
}

/// All length-`n` character windows of `text` under the given boundary mode.
/// Characters are Unicode scalar values; duplicates and order are preserved.
/// Words shorter than `n` contribute no restricted n-grams.
pub fn char_ngrams(text: &str, n: usize, mode: BoundaryMode) -> Vec<String> {
    let mut out = Vec::new();
    match mode {
        BoundaryMode::Restricted => {
            for word in word_tokens(text) {
                let chars: Vec<char> = word.chars().collect();
                char_windows(&chars, n, &mut out);
            }
        }
        BoundaryMode::Spanning => {
            let collapsed: Vec<char> = collapse_whitespace(text).chars().collect();
            char_windows(&collapsed, n, &mut out);
        }
    }
    out
}

/// Word n-grams: adjacent runs of `n` word tokens joined by single spaces.
pub fn word_ngrams(text: &str, n: usize) -> Vec<String> {
    let tokens = word_tokens(text);
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| w.join(" ")).collect()
}

/// Concatenated per-order extraction for every order in the spec's range.
/// Each token is prefixed with its order (`"2:ab"`) so same-spelled tokens of
/// different orders never collide in one vocabulary.
pub fn ngrams_up_to(text: &str, spec: &NgramSpec) -> Vec<String> {
    let mut out = Vec::new();
    for n in spec.n_min..=spec.n_max {
        let grams = match spec.unit {
            NgramUnit::Char => char_ngrams(text, n, spec.boundary_mode),
            NgramUnit::Word => word_ngrams(text, n),
        };
        out.extend(grams.into_iter().map(|g| format!("{n}:{g}")));
    }
    out
}

/// Reserved vocabulary index for out-of-vocabulary tokens.
pub const OOV_INDEX: u32 = 0;
const OOV_TOKEN: &str = "<oov>";

/// Options governing vocabulary construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabConfig {
    /// Minimum occurrences for a token to be retained.
    pub min_count: u64,
    /// Cap on total vocabulary size, OOV slot included.
    pub max_size: Option<usize>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_count: 1,
            max_size: None,
        }
    }
}

/// Bidirectional token ↔ index map with frequency metadata. Index 0 is the
/// OOV sentinel; its recorded frequency is the number of dropped occurrences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabData", into = "VocabData")]
pub struct Vocabulary {
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    min_count: u64,
    max_size: Option<usize>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabData {
    tokens: Vec<String>,
    frequencies: Vec<u64>,
    min_count: u64,
    max_size: Option<usize>,
}

impl From<Vocabulary> for VocabData {
    fn from(v: Vocabulary) -> Self {
        VocabData {
            tokens: v.tokens,
            frequencies: v.frequencies,
            min_count: v.min_count,
            max_size: v.max_size,
        }
    }
}

impl TryFrom<VocabData> for Vocabulary {
    type Error = Error;

    fn try_from(data: VocabData) -> Result<Self> {
        if data.tokens.is_empty() || data.tokens[0] != OOV_TOKEN {
            return Err(Error::InvalidVocabulary(format!(
                "index 0 must be the {OOV_TOKEN} sentinel"
            )));
        }
        if data.tokens.len() != data.frequencies.len() {
            return Err(Error::InvalidVocabulary(
                "token and frequency lists differ in length".into(),
            ));
        }
        let mut index = HashMap::with_capacity(data.tokens.len());
        for (i, tok) in data.tokens.iter().enumerate() {
            if index.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::InvalidVocabulary(format!(
                    "duplicate token {tok:?}"
                )));
            }
        }
        Ok(Vocabulary {
            tokens: data.tokens,
            frequencies: data.frequencies,
            min_count: data.min_count,
            max_size: data.max_size,
            index,
        })
    }
}

impl Vocabulary {
    /// Build a vocabulary from token streams. Tokens with frequency below
    /// `min_count` are dropped; if `max_size` is set, only the most frequent
    /// tokens are kept (ties broken lexicographically), leaving one slot for
    /// the OOV sentinel at index 0.
    pub fn build<I, T>(streams: I, config: VocabConfig) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = String>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut total: u64 = 0;
        for stream in streams {
            for token in stream {
                *counts.entry(token).or_insert(0) += 1;
                total += 1;
            }
        }
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= config.min_count)
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(max) = config.max_size {
            entries.truncate(max.saturating_sub(1));
        }

        let mut tokens = Vec::with_capacity(entries.len() + 1);
        let mut frequencies = Vec::with_capacity(entries.len() + 1);
        tokens.push(OOV_TOKEN.to_string());
        frequencies.push(0);
        for (tok, count) in entries {
            tokens.push(tok);
            frequencies.push(count);
        }
        let retained: u64 = frequencies.iter().sum();
        frequencies[0] = total - retained;

        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            frequencies,
            min_count: config.min_count,
            max_size: config.max_size,
            index,
        }
    }

    /// Number of entries, OOV sentinel included.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token_at(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(|s| s.as_str())
    }

    pub fn frequency_at(&self, index: u32) -> Option<u64> {
        self.frequencies.get(index as usize).copied()
    }
}

/// Sparse feature row: `(index, value)` pairs with strictly increasing
/// indices and nonzero values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector(Vec<(u32, f64)>);

impl SparseVector {
    /// Build from arbitrary pairs: values for equal indices are summed,
    /// zero-valued entries dropped, indices sorted.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        let mut entries: Vec<(u32, f64)> =
            acc.into_iter().filter(|(_, v)| *v != 0.0).collect();
        entries.sort_by_key(|(i, _)| *i);
        SparseVector(entries)
    }

    /// Append a dense block at `offset`; zero entries are skipped.
    pub fn extend_dense(&mut self, offset: u32, values: &[f64]) {
        debug_assert!(self.0.last().map_or(true, |(i, _)| *i < offset));
        for (j, &v) in values.iter().enumerate() {
            if v != 0.0 {
                self.0.push((offset + j as u32, v));
            }
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sum of all values.
    pub fn total(&self) -> f64 {
        self.0.iter().map(|(_, v)| v).sum()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.0.last().map(|(i, _)| *i)
    }
}

/// Count in-vocabulary tokens by index; OOV tokens accumulate at index 0.
pub fn vectorize_counts<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector {
    SparseVector::from_pairs(tokens.iter().map(|t| {
        let idx = vocab.index_of(t.as_ref()).unwrap_or(OOV_INDEX);
        (idx, 1.0)
    }))
}

/// Encode tokens as vocabulary ids in order, OOV as id 0, truncated to the
/// first `max_len` ids. Sequence models need at least one token.
pub fn encode_sequence<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<u32>> {
    if tokens.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index_of(t.as_ref()).unwrap_or(OOV_INDEX))
        .collect())
}
