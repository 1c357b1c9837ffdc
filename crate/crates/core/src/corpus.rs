//! DSL-format corpus ingestion, the language/group registry, deterministic
//! splits, and vocabulary-overlap statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::word_tokens;

/// One language variety: its corpus tag, the group it belongs to, and a
/// human-readable name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Language {
    pub code: String,
    pub group: String,
    pub display_name: String,
}

/// A named group of related language varieties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageGroup {
    pub name: String,
    pub members: Vec<String>,
}

/// The set of languages a model distinguishes, partitioned into groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RegistryData", into = "RegistryData")]
pub struct LanguageRegistry {
    languages: Vec<Language>,
    groups: Vec<LanguageGroup>,
}

#[derive(Serialize, Deserialize)]
struct RegistryData {
    languages: Vec<Language>,
    groups: Vec<LanguageGroup>,
}

impl From<LanguageRegistry> for RegistryData {
    fn from(r: LanguageRegistry) -> Self {
        RegistryData {
            languages: r.languages,
            groups: r.groups,
        }
    }
}

impl TryFrom<RegistryData> for LanguageRegistry {
    type Error = Error;

    fn try_from(data: RegistryData) -> Result<Self> {
        LanguageRegistry::new(data.languages, data.groups)
    }
}

impl LanguageRegistry {
    /// Build a registry, checking that codes are unique, every language
    /// belongs to exactly one group, and groups partition the languages.
    pub fn new(languages: Vec<Language>, groups: Vec<LanguageGroup>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for lang in &languages {
            if !seen.insert(lang.code.as_str()) {
                return Err(Error::InvalidRegistry(format!(
                    "duplicate language code {:?}",
                    lang.code
                )));
            }
        }
        let mut covered = BTreeSet::new();
        for group in &groups {
            if group.members.is_empty() {
                return Err(Error::InvalidRegistry(format!(
                    "group {:?} has no members",
                    group.name
                )));
            }
            for code in &group.members {
                if !seen.contains(code.as_str()) {
                    return Err(Error::InvalidRegistry(format!(
                        "group {:?} lists unknown code {:?}",
                        group.name, code
                    )));
                }
                if !covered.insert(code.as_str()) {
                    return Err(Error::InvalidRegistry(format!(
                        "code {:?} appears in more than one group",
                        code
                    )));
                }
            }
        }
        for lang in &languages {
            if !covered.contains(lang.code.as_str()) {
                return Err(Error::InvalidRegistry(format!(
                    "language {:?} belongs to no group",
                    lang.code
                )));
            }
            let group_ok = groups
                .iter()
                .any(|g| g.name == lang.group && g.members.contains(&lang.code));
            if !group_ok {
                return Err(Error::InvalidRegistry(format!(
                    "language {:?} names group {:?} but is not listed there",
                    lang.code, lang.group
                )));
            }
        }
        Ok(LanguageRegistry { languages, groups })
    }

    /// The default 13-language registry of the DSL 2015 shared task.
    pub fn dsl_2015() -> Self {
        let table: &[(&str, &[(&str, &str)])] = &[
            ("South Eastern Slavic", &[("bg", "Bulgarian"), ("mk", "Macedonian")]),
            (
                "South Western Slavic",
                &[("bs", "Bosnian"), ("hr", "Croatian"), ("sr", "Serbian")],
            ),
            ("West-Slavic", &[("cz", "Czech"), ("sk", "Slovak")]),
            (
                "Ibero-Romance (Spanish)",
                &[("es-ES", "Peninsular Spain"), ("es-AR", "Argentinian Spanish")],
            ),
            (
                "Ibero-Romance (Portuguese)",
                &[("pt-BR", "Brazilian Portuguese"), ("pt-PT", "European Portuguese")],
            ),
            ("Astronesian", &[("id", "Indonesian"), ("my", "Malay")]),
        ];
        Self::from_table(table).expect("built-in registry is valid")
    }

    /// Build a registry from `(group name, [(code, display name)])` rows.
    pub fn from_table(table: &[(&str, &[(&str, &str)])]) -> Result<Self> {
        let mut languages = Vec::new();
        let mut groups = Vec::new();
        for (group_name, members) in table {
            let mut codes = Vec::new();
            for (code, display) in members.iter() {
                languages.push(Language {
                    code: code.to_string(),
                    group: group_name.to_string(),
                    display_name: display.to_string(),
                });
                codes.push(code.to_string());
            }
            groups.push(LanguageGroup {
                name: group_name.to_string(),
                members: codes,
            });
        }
        Self::new(languages, groups)
    }

    /// A flat registry with one single-member group per code, for corpora
    /// outside the DSL language set.
    pub fn flat(codes: &[&str]) -> Result<Self> {
        let table: Vec<(&str, Vec<(&str, &str)>)> =
            codes.iter().map(|c| (*c, vec![(*c, *c)])).collect();
        let borrowed: Vec<(&str, &[(&str, &str)])> =
            table.iter().map(|(g, m)| (*g, m.as_slice())).collect();
        Self::from_table(&borrowed)
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn groups(&self) -> &[LanguageGroup] {
        &self.groups
    }

    /// Language codes in registry order. This order fixes class indices
    /// everywhere downstream.
    pub fn codes(&self) -> Vec<String> {
        self.languages.iter().map(|l| l.code.clone()).collect()
    }

    pub fn contains(&self, code: &str) -> bool {
        self.languages.iter().any(|l| l.code == code)
    }

    pub fn language(&self, code: &str) -> Option<&Language> {
        self.languages.iter().find(|l| l.code == code)
    }

    pub fn group_of(&self, code: &str) -> Option<&str> {
        self.language(code).map(|l| l.group.as_str())
    }

    pub fn group(&self, name: &str) -> Option<&LanguageGroup> {
        self.groups.iter().find(|g| g.name == name)
    }
}

/// A sentence label: either a registry language code or an arbitrary tag
/// outside the registry (the DSL "mixed language" noise set lands here).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tag", rename_all = "snake_case")]
pub enum Label {
    Known(String),
    Other(String),
}

impl Label {
    pub fn tag(&self) -> &str {
        match self {
            Label::Known(t) | Label::Other(t) => t,
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, Label::Known(_))
    }
}

/// One corpus line: sentence text plus its language label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSentence {
    pub text: String,
    pub label: Label,
}

/// Column layout of a DSL file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnOrder {
    /// `<sentence>\t<label>` (the DSL 2015 distribution layout).
    #[default]
    SentenceLabel,
    /// `<label>\t<sentence>`.
    LabelSentence,
}

/// Per-parse diagnostics: skipped blank lines and rejected records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub blank_lines: usize,
    /// `(1-based line number, reason)` for each rejected record.
    pub rejected: Vec<(usize, String)>,
}

/// An ordered collection of labeled sentences under a registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    sentences: Vec<LabeledSentence>,
    registry: LanguageRegistry,
}

impl Corpus {
    pub fn new(sentences: Vec<LabeledSentence>, registry: LanguageRegistry) -> Self {
        Corpus { sentences, registry }
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    pub fn registry(&self) -> &LanguageRegistry {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Sentences with registry labels only; the noise set is dropped.
    pub fn known_only(&self) -> Corpus {
        Corpus {
            sentences: self
                .sentences
                .iter()
                .filter(|s| s.label.is_known())
                .cloned()
                .collect(),
            registry: self.registry.clone(),
        }
    }

    /// Sentence count per label tag.
    pub fn label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.sentences {
            *counts.entry(s.label.tag().to_string()).or_insert(0) += 1;
        }
        counts
    }

    /// Render back to DSL lines. Reparsing the result yields an equal corpus.
    pub fn to_dsl_string(&self, order: ColumnOrder) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            match order {
                ColumnOrder::SentenceLabel => {
                    out.push_str(&s.text);
                    out.push('\t');
                    out.push_str(s.label.tag());
                }
                ColumnOrder::LabelSentence => {
                    out.push_str(s.label.tag());
                    out.push('\t');
                    out.push_str(&s.text);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parse a DSL-format stream: UTF-8, one record per line, sentence and label
/// separated by a single tab.
///
/// Unknown labels are preserved as [`Label::Other`]. Blank lines are skipped
/// and counted; records without exactly one tab (or with an empty field) are
/// rejected and reported with their line number. Invalid UTF-8 is a hard
/// error carrying the byte offset.
pub fn parse_dsl(
    mut input: impl Read,
    registry: &LanguageRegistry,
    order: ColumnOrder,
) -> Result<(Corpus, ParseReport)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;

    let mut sentences = Vec::new();
    let mut report = ParseReport::default();
    // str::lines strips the terminator (and a trailing \r) and does not
    // yield a phantom record after the final newline.
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            report.blank_lines += 1;
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let first = parts.next().unwrap_or("");
        let second = match parts.next() {
            Some(s) => s,
            None => {
                report
                    .rejected
                    .push((line_no, "no tab separator".to_string()));
                continue;
            }
        };
        if second.contains('\t') {
            report
                .rejected
                .push((line_no, "more than one tab separator".to_string()));
            continue;
        }
        let (sentence, label_raw) = match order {
            ColumnOrder::SentenceLabel => (first, second),
            ColumnOrder::LabelSentence => (second, first),
        };
        let label_tag = label_raw.trim();
        if label_tag.is_empty() {
            report.rejected.push((line_no, "empty label".to_string()));
            continue;
        }
        if sentence.is_empty() {
            report
                .rejected
                .push((line_no, "empty sentence".to_string()));
            continue;
        }
        let label = if registry.contains(label_tag) {
            Label::Known(label_tag.to_string())
        } else {
            Label::Other(label_tag.to_string())
        };
        sentences.push(LabeledSentence {
            text: sentence.to_string(),
            label,
        });
    }
    Ok((Corpus::new(sentences, registry.clone()), report))
}

/// How to split a corpus into a training and a held-out part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of sentences assigned to the first (training) part, in (0,1).
    pub fraction_train: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(fraction_train: f64, seed: u64) -> Self {
        SplitSpec {
            fraction_train,
            seed,
            stratified: true,
        }
    }
}

/// Deterministically partition a corpus. Both parts preserve the original
/// sentence order; under stratification the per-label proportions match
/// `fraction_train` to within one sentence per label.
pub fn split(corpus: &Corpus, spec: &SplitSpec) -> Result<(Corpus, Corpus)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(spec.fraction_train > 0.0 && spec.fraction_train < 1.0) {
        return Err(Error::InvalidSplitFraction(spec.fraction_train));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_mask = vec![false; corpus.len()];

    let mut assign = |indices: &mut Vec<usize>, rng: &mut ChaCha8Rng, mask: &mut Vec<bool>| {
        indices.shuffle(rng);
        let n_train = (spec.fraction_train * indices.len() as f64).round() as usize;
        for &i in indices.iter().take(n_train) {
            mask[i] = true;
        }
    };

    if spec.stratified {
        // BTreeMap keyed by label keeps stratum order independent of
        // insertion and hashing.
        let mut strata: BTreeMap<&Label, Vec<usize>> = BTreeMap::new();
        for (i, s) in corpus.sentences().iter().enumerate() {
            strata.entry(&s.label).or_default().push(i);
        }
        for (label, indices) in strata.iter_mut() {
            if indices.len() < 2 {
                return Err(Error::LabelTooSmall {
                    label: label.tag().to_string(),
                    count: indices.len(),
                });
            }
            assign(indices, &mut rng, &mut train_mask);
        }
    } else {
        let mut indices: Vec<usize> = (0..corpus.len()).collect();
        assign(&mut indices, &mut rng, &mut train_mask);
    }

    let mut train = Vec::new();
    let mut held = Vec::new();
    for (i, s) in corpus.sentences().iter().enumerate() {
        if train_mask[i] {
            train.push(s.clone());
        } else {
            held.push(s.clone());
        }
    }
    Ok((
        Corpus::new(train, corpus.registry().clone()),
        Corpus::new(held, corpus.registry().clone()),
    ))
}

/// Fraction of `source`'s distinct word types that also occur in `target`:
/// `|types(source) ∩ types(target)| / |types(source)|`.
pub fn vocab_overlap(corpus: &Corpus, source: &str, target: &str) -> Result<f64> {
    let types_of = |code: &str| -> Result<BTreeSet<&str>> {
        let mut types = BTreeSet::new();
        let mut seen = false;
        for s in corpus.sentences() {
            if s.label.tag() == code && s.label.is_known() {
                seen = true;
                for tok in word_tokens(&s.text) {
                    types.insert(tok);
                }
            }
        }
        if !seen {
            return Err(Error::LanguageAbsent(code.to_string()));
        }
        Ok(types)
    };
    let source_types = types_of(source)?;
    let target_types = types_of(target)?;
    if source_types.is_empty() {
        return Ok(0.0);
    }
    let common = source_types.intersection(&target_types).count();
    Ok(common as f64 / source_types.len() as f64)
}
