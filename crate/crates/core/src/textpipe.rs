//! Text to lemmatized mixed-size n-gram sets.
//!
//! The pipeline is tokenize, drop stopwords and punctuation, lemmatize, then
//! collect every contiguous lemma run of length `1..=k`. Grams are formed over
//! the sequence left after stopword removal.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_EXCEPTIONS: &str = include_str!("../data/lemma_exceptions.txt");

/// Set of n-gram keys; each key is a space-joined lemma sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NGramSet(BTreeSet<String>);

impl NGramSet {
    pub fn new() -> Self {
        NGramSet(BTreeSet::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, gram: &str) -> bool {
        self.0.contains(gram)
    }

    pub fn insert(&mut self, gram: impl Into<String>) -> bool {
        self.0.insert(gram.into())
    }

    /// Grams in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn union_with(&mut self, other: &NGramSet) {
        for g in &other.0 {
            if !self.0.contains(g) {
                self.0.insert(g.clone());
            }
        }
    }

    pub fn is_subset(&self, other: &NGramSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<String> for NGramSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        NGramSet(iter.into_iter().collect())
    }
}

impl<'a> FromIterator<&'a str> for NGramSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        NGramSet(iter.into_iter().map(str::to_string).collect())
    }
}

impl IntoIterator for NGramSet {
    type Item = String;
    type IntoIter = std::collections::btree_set::IntoIter<String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

/// A token with its surface form and lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

/// True when every character of `token` is punctuation or a symbol.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct)
}

/// Splits on whitespace, then peels leading and trailing punctuation off
/// each chunk as single-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let start = chars.iter().position(|&c| !is_punct(c));
        let Some(start) = start else {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        };
        let end = chars.iter().rposition(|&c| !is_punct(c)).unwrap() + 1;
        out.extend(chars[..start].iter().map(|c| c.to_string()));
        out.push(chars[start..end].iter().collect());
        out.extend(chars[end..].iter().map(|c| c.to_string()));
    }
    out
}

/// Every contiguous run of `1..=k` lemmas, joined by single spaces.
pub fn ngram_set<S: AsRef<str>>(lemmas: &[S], k: usize) -> Result<NGramSet> {
    if k < 1 {
        return Err(Error::InvalidGramSize(k));
    }
    let mut set = BTreeSet::new();
    for n in 1..=k.min(lemmas.len()) {
        for window in lemmas.windows(n) {
            let mut key = String::new();
            for (i, w) in window.iter().enumerate() {
                if i > 0 {
                    key.push(' ');
                }
                key.push_str(w.as_ref());
            }
            set.insert(key);
        }
    }
    Ok(NGramSet(set))
}

/// Stopword list plus lemmatizer exception table.
#[derive(Debug, Clone)]
pub struct TextPipeline {
    stopwords: HashSet<String>,
    exceptions: HashMap<String, String>,
}

impl Default for TextPipeline {
    fn default() -> Self {
        TextPipeline::from_data(DEFAULT_STOPWORDS, DEFAULT_EXCEPTIONS)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

impl TextPipeline {
    /// Builds a pipeline from a stopword list (one word per line) and an
    /// exception table (`form lemma` per line). `#` starts a comment line.
    pub fn from_data(stopwords: &str, exceptions: &str) -> Self {
        let stopwords = data_lines(stopwords).map(str::to_lowercase).collect();
        let exceptions = data_lines(exceptions)
            .filter_map(|l| {
                let mut parts = l.split_whitespace();
                let form = parts.next()?.to_lowercase();
                let lemma = parts.next()?.to_lowercase();
                Some((form, lemma))
            })
            .collect();
        TextPipeline { stopwords, exceptions }
    }

    /// Default data with either table optionally replaced from a file.
    pub fn with_overrides(stopwords: Option<&Path>, exceptions: Option<&Path>) -> Result<Self> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
        let sw = match stopwords {
            Some(p) => read(p)?,
            None => DEFAULT_STOPWORDS.to_string(),
        };
        let ex = match exceptions {
            Some(p) => read(p)?,
            None => DEFAULT_EXCEPTIONS.to_string(),
        };
        Ok(TextPipeline::from_data(&sw, &ex))
    }

    /// Shared instance over the bundled data.
    pub fn shared() -> &'static TextPipeline {
        static P: OnceLock<TextPipeline> = OnceLock::new();
        P.get_or_init(TextPipeline::default)
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        is_punctuation(token) || self.stopwords.contains(&token.to_lowercase())
    }

    pub fn remove_stopwords<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        tokens.iter().map(AsRef::as_ref).filter(|t| !self.is_stopword(t)).map(str::to_string).collect()
    }

    /// Lowercases and reduces `token` to its lemma. Idempotent: applying it to
    /// its own output returns the output unchanged.
    pub fn lemmatize(&self, token: &str) -> String {
        let lower = token.to_lowercase();
        let once = self.lemmatize_once(&lower);
        if once != lower && self.lemmatize_once(&once) != once {
            // Rules that would keep rewriting leave the word alone.
            return lower;
        }
        once
    }

    fn lemmatize_once(&self, word: &str) -> String {
        if let Some(l) = self.exceptions.get(word) {
            return l.clone();
        }
        let word = word.strip_suffix("'s").or_else(|| word.strip_suffix("\u{2019}s")).filter(|w| !w.is_empty()).unwrap_or(word);
        if let Some(l) = self.exceptions.get(word) {
            return l.clone();
        }
        if !word.chars().all(|c| c.is_ascii_lowercase() || c == '-') {
            return word.to_string();
        }
        suffix_rules(word).unwrap_or_else(|| word.to_string())
    }

    /// Stopword-filtered tokens with lemmas.
    pub fn tokens(&self, text: &str) -> Vec<Token> {
        self.remove_stopwords(&tokenize(text))
            .into_iter()
            .map(|surface| {
                let lemma = self.lemmatize(&surface);
                Token { surface, lemma }
            })
            .collect()
    }

    /// Stopword-filtered lemma sequence.
    pub fn lemmas(&self, text: &str) -> Vec<String> {
        self.tokens(text).into_iter().map(|t| t.lemma).collect()
    }

    /// Tokenize, drop stopwords, lemmatize, and collect n-grams up to `k`.
    pub fn process(&self, text: &str, k: usize) -> Result<NGramSet> {
        ngram_set(&self.lemmas(text), k)
    }
}

/// [`TextPipeline::process`] with the bundled data.
pub fn process(text: &str, k: usize) -> Result<NGramSet> {
    TextPipeline::shared().process(text, k)
}

/// [`TextPipeline::lemmatize`] with the bundled data.
pub fn lemmatize(token: &str) -> String {
    TextPipeline::shared().lemmatize(token)
}

/// [`TextPipeline::remove_stopwords`] with the bundled data.
pub fn remove_stopwords<S: AsRef<str>>(tokens: &[S]) -> Vec<String> {
    TextPipeline::shared().remove_stopwords(tokens)
}

fn is_vowel_at(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel_at(w, i - 1),
        _ => false,
    }
}

fn has_vowel(w: &str) -> bool {
    let b = w.as_bytes();
    (0..b.len()).any(|i| is_vowel_at(b, i))
}

/// Number of vowel-consonant sequences.
fn measure(w: &str) -> usize {
    let b = w.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..b.len() {
        let v = is_vowel_at(b, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn ends_cvc(w: &str) -> bool {
    let b = w.as_bytes();
    let n = b.len();
    n >= 3 && !is_vowel_at(b, n - 3) && is_vowel_at(b, n - 2) && !is_vowel_at(b, n - 1) && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

fn consonant_before(w: &str, suffix_len: usize) -> bool {
    let b = w.as_bytes();
    b.len() > suffix_len && !is_vowel_at(b, b.len() - suffix_len - 1)
}

/// Whether a stem left by stripping `-ed`/`-ing` lost a final `e`.
fn needs_final_e(stem: &str) -> bool {
    let b = stem.as_bytes();
    let Some(&last) = b.last() else { return false };
    match last {
        b'v' | b'c' | b'u' | b'z' => true,
        b's' => !stem.ends_with("ss"),
        b'g' => {
            stem.ends_with("ang")
                || stem.ends_with("eng")
                || (b.len() >= 2 && (is_vowel_at(b, b.len() - 2) || matches!(b[b.len() - 2], b'd' | b'r' | b'l')))
        }
        b't' => (stem.ends_with("at") || stem.ends_with("ut")) && consonant_before(stem, 2),
        b'd' => (stem.ends_with("id") || stem.ends_with("ud")) && consonant_before(stem, 2),
        b'r' => {
            (stem.ends_with("ir") && !stem.ends_with("air"))
                || ((stem.ends_with("ur") || stem.ends_with("ar")) && consonant_before(stem, 2))
        }
        b'l' => b.len() >= 2 && !is_vowel_at(b, b.len() - 2) && !matches!(b[b.len() - 2], b'l' | b'r' | b'w'),
        b'm' => stem.ends_with("sum") || (measure(stem) == 1 && ends_cvc(stem)),
        b'n' => stem.len() >= 5 && stem.ends_with("in") && consonant_before(stem, 2),
        b'b' => stem.ends_with("ib"),
        b'k' => (stem.ends_with("ak") || stem.ends_with("ok")) && consonant_before(stem, 2),
        _ => measure(stem) == 1 && ends_cvc(stem),
    }
}

fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 3 && b[n - 1] == b[n - 2] && !is_vowel_at(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    if needs_final_e(stem) {
        format!("{stem}e")
    } else {
        stem.to_string()
    }
}

fn suffix_rules(w: &str) -> Option<String> {
    let n = w.len();
    if n > 4 && w.ends_with("ies") {
        return Some(format!("{}y", &w[..n - 3]));
    }
    if w.ends_with("sses") || w.ends_with("xes") || w.ends_with("ches") || w.ends_with("shes") || w.ends_with("zzes") {
        return Some(w[..n - 2].to_string());
    }
    if w.ends_with('s') && n >= 4 && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return Some(w[..n - 1].to_string());
    }
    if w.ends_with("eed") {
        return None;
    }
    if n > 4 && w.ends_with("ied") {
        return Some(format!("{}y", &w[..n - 3]));
    }
    if let Some(stem) = w.strip_suffix("ed") {
        if stem.len() >= 3 && has_vowel(stem) {
            return Some(restore_stem(stem));
        }
        return None;
    }
    if let Some(stem) = w.strip_suffix("ing") {
        if stem.len() >= 3 && has_vowel(stem) {
            return Some(restore_stem(stem));
        }
    }
    None
}
