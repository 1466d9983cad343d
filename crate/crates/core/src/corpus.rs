//! Statute and question-pair parsing.
//!
//! Statutes are plain text: every article starts on a line beginning with
//! `Article <id>`, optionally preceded by a parenthesized title line. Pairs
//! are JSONL records tying a question to its relevant articles and, for
//! entailment training, a YES/NO label.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Article identifier such as `"697"` or `"255-2"`.
///
/// Ordering is numeric on the leading integer, then lexical on the rest, so
/// `"9" < "10" < "10-2"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArticleId(String);

impl ArticleId {
    pub fn new(id: impl Into<String>) -> Self {
        ArticleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric_prefix(&self) -> (Option<u64>, &str) {
        let end = self.0.char_indices().find(|(_, c)| !c.is_ascii_digit()).map_or(self.0.len(), |(i, _)| i);
        (self.0[..end].parse().ok(), &self.0[end..])
    }
}

impl Ord for ArticleId {
    fn cmp(&self, other: &Self) -> Ordering {
        let (na, ra) = self.numeric_prefix();
        let (nb, rb) = other.numeric_prefix();
        // Ids without a leading number sort after all numbered ones.
        let key = |n: Option<u64>| n.map_or((1, 0), |v| (0, v));
        key(na).cmp(&key(nb)).then_with(|| ra.cmp(rb)).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for ArticleId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ArticleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ArticleId {
    fn from(s: &str) -> Self {
        ArticleId::new(s)
    }
}

/// Entailment answer for a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl Label {
    /// +1 for YES, -1 for NO.
    pub fn sign(self) -> f64 {
        match self {
            Label::Yes => 1.0,
            Label::No => -1.0,
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Y" | "YES" => Some(Label::Yes),
            "N" | "NO" => Some(Label::No),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "YES",
            Label::No => "NO",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: ArticleId,
    pub title: Option<String>,
    pub body: String,
    /// Articles cited by the body, never including `id` itself.
    pub refs: BTreeSet<ArticleId>,
}

impl Article {
    /// Title and body as one text, the unit indexed for retrieval.
    pub fn content(&self) -> String {
        match &self.title {
            Some(t) => format!("{t} {}", self.body),
            None => self.body.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    articles: BTreeMap<ArticleId, Article>,
    /// `(citing article, cited id)` for citations with no matching article.
    unresolved: Vec<(ArticleId, ArticleId)>,
}

impl Corpus {
    /// Builds a corpus from already-parsed articles, checking id uniqueness and
    /// recording dangling references.
    pub fn from_articles(articles: impl IntoIterator<Item = Article>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for mut article in articles {
            if article.body.trim().is_empty() {
                return Err(Error::EmptyArticle(article.id.to_string()));
            }
            article.refs.remove(&article.id);
            if map.contains_key(&article.id) {
                return Err(Error::DuplicateArticle(article.id.to_string()));
            }
            map.insert(article.id.clone(), article);
        }
        let mut unresolved = Vec::new();
        for article in map.values() {
            for r in &article.refs {
                if !map.contains_key(r) {
                    unresolved.push((article.id.clone(), r.clone()));
                }
            }
        }
        Ok(Corpus { articles: map, unresolved })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn get(&self, id: &ArticleId) -> Option<&Article> {
        self.articles.get(id)
    }

    pub fn contains(&self, id: &ArticleId) -> bool {
        self.articles.contains_key(id)
    }

    /// Articles in id order.
    pub fn articles(&self) -> impl Iterator<Item = &Article> {
        self.articles.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ArticleId> {
        self.articles.keys()
    }

    pub fn unresolved(&self) -> &[(ArticleId, ArticleId)] {
        &self.unresolved
    }

    /// References of `id` that point at articles present in the corpus.
    pub fn resolved_refs(&self, id: &ArticleId) -> BTreeSet<ArticleId> {
        self.articles.get(id).map(|a| a.refs.iter().filter(|r| self.articles.contains_key(*r)).cloned().collect()).unwrap_or_default()
    }

    /// Writes the corpus back in the statute text format accepted by
    /// [`parse_statutes`].
    pub fn to_statute_text(&self) -> String {
        let mut out = String::new();
        for a in self.articles.values() {
            if let Some(t) = &a.title {
                out.push('(');
                out.push_str(t);
                out.push_str(")\n");
            }
            out.push_str("Article ");
            out.push_str(a.id.as_str());
            out.push(' ');
            out.push_str(&a.body);
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_statutes(&text)
    }
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^Article\s+(\d+(?:-\d+)*)(.*)$").unwrap())
}

fn heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:Part|Chapter|Section|Subsection|Division)\s+[IVXLCDM\d]+\b").unwrap())
}

fn reference_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\bArticles?\s+(\d+(?:-\d+)*)((?:\s*(?:,\s*(?:and\s+)?|and\s+|to\s+|through\s+)(?:Article\s+)?\d+(?:-\d+)*)*)").unwrap()
    })
}

fn continuation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(,|and|to|through)\s*(?:Article\s+)?(\d+(?:-\d+)*)").unwrap())
}

fn is_title_line(line: &str) -> bool {
    let t = line.trim();
    t.len() > 2 && t.starts_with('(') && t.ends_with(')')
}

/// Parses statute text into a corpus.
pub fn parse_statutes(text: &str) -> Result<Corpus> {
    let mut articles = Vec::new();
    let mut current: Option<Pending> = None;
    let mut pending_title: Option<String> = None;

    let finish = |p: Pending, out: &mut Vec<Article>| -> Result<()> {
        let body = p.lines.join("\n").trim().to_string();
        if body.is_empty() {
            return Err(Error::EmptyArticle(p.id));
        }
        let id = ArticleId::new(p.id);
        let mut refs = detect_references(&body);
        refs.remove(&id);
        out.push(Article { id, title: p.title, body, refs });
        Ok(())
    };

    for raw in text.lines() {
        let line = raw.trim_end();
        if let Some(caps) = header_re().captures(line.trim_start()) {
            if let Some(p) = current.take() {
                finish(p, &mut articles)?;
            }
            let rest = caps[2].trim().to_string();
            current = Some(Pending {
                id: caps[1].to_string(),
                title: pending_title.take(),
                lines: if rest.is_empty() { Vec::new() } else { vec![rest] },
            });
            continue;
        }
        if let Some(t) = pending_title.take() {
            // A parenthesized line not followed by a header is ordinary text.
            push_line(&mut current, format!("({t})"));
        }
        if is_title_line(line) {
            let t = line.trim();
            pending_title = Some(t[1..t.len() - 1].trim().to_string());
            continue;
        }
        if heading_re().is_match(line.trim_start()) {
            continue;
        }
        push_line(&mut current, line.trim().to_string());
    }
    if let Some(t) = pending_title.take() {
        push_line(&mut current, format!("({t})"));
    }
    if let Some(p) = current.take() {
        finish(p, &mut articles)?;
    }
    Corpus::from_articles(articles)
}

struct Pending {
    id: String,
    title: Option<String>,
    lines: Vec<String>,
}

fn push_line(current: &mut Option<Pending>, line: String) {
    if let Some(p) = current.as_mut() {
        if !line.is_empty() {
            p.lines.push(line);
        }
    }
}

/// Returns every article id cited in `body`.
///
/// Recognizes `Article N`, `Articles N and M`, comma lists, and inclusive
/// ranges `Articles N to M`. References to paragraphs or items resolve to the
/// whole article.
pub fn detect_references(body: &str) -> BTreeSet<ArticleId> {
    let mut out = BTreeSet::new();
    for caps in reference_re().captures_iter(body) {
        let first = caps[1].to_string();
        let mut prev = first.clone();
        out.insert(ArticleId::new(first));
        if let Some(tail) = caps.get(2) {
            for c in continuation_re().captures_iter(tail.as_str()) {
                let next = c[2].to_string();
                if &c[1] == "to" || &c[1] == "through" {
                    if let (Ok(lo), Ok(hi)) = (prev.parse::<u64>(), next.parse::<u64>()) {
                        if lo <= hi && hi - lo <= 1000 {
                            for n in lo..=hi {
                                out.insert(ArticleId::new(n.to_string()));
                            }
                        }
                    }
                }
                out.insert(ArticleId::new(next.clone()));
                prev = next;
            }
        }
    }
    out
}

/// A question with its gold articles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub qid: String,
    pub question: String,
    pub relevant: BTreeSet<ArticleId>,
    /// Absent for retrieval-only pairs.
    pub label: Option<Label>,
    /// Members of `relevant` that do not exist in the corpus.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub unresolved: BTreeSet<ArticleId>,
}

#[derive(Deserialize)]
struct PairRecord {
    qid: String,
    question: String,
    relevant: Vec<String>,
    #[serde(default)]
    label: Option<String>,
}

/// Parses JSONL pair records, flagging relevant ids missing from `corpus`.
pub fn parse_pairs(text: &str, corpus: Option<&Corpus>) -> Result<Vec<TrainingPair>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(line).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        if rec.relevant.is_empty() {
            return Err(Error::Parse { line: line_no, message: format!("pair {} lists no relevant articles", rec.qid) });
        }
        let label = match rec.label.as_deref() {
            None => None,
            Some(s) => {
                Some(Label::parse(s).ok_or_else(|| Error::Parse { line: line_no, message: format!("label must be Y or N, got {s:?}") })?)
            }
        };
        let relevant: BTreeSet<ArticleId> = rec.relevant.into_iter().map(ArticleId::new).collect();
        let unresolved: BTreeSet<ArticleId> = match corpus {
            Some(c) => relevant.iter().filter(|id| !c.contains(id)).cloned().collect(),
            None => BTreeSet::new(),
        };
        for id in &unresolved {
            log::warn!("pair {} (line {line_no}): relevant article {id} not in corpus", rec.qid);
        }
        pairs.push(TrainingPair { qid: rec.qid, question: rec.question, relevant, label, unresolved });
    }
    Ok(pairs)
}

pub fn load_pairs(path: impl AsRef<Path>, corpus: Option<&Corpus>) -> Result<Vec<TrainingPair>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs(&text, corpus)
}
