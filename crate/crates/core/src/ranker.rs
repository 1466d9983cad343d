//! Article model and relevance ranking.
//!
//! Each article is represented by the n-gram set of its title and body,
//! expanded with the sets of the articles it cites and with the sets of
//! training questions that name it as relevant. A question is scored against
//! an article by summing the IDF of the shared n-grams and dividing by a
//! weighted sum of the two set sizes:
//!
//! ```text
//! score(q, a) = sum_{t in q ∩ a} ln(N / df_t) / (i_q * |q| + i_art * |a|)
//! ```
//!
//! `df_t` counts the articles whose unexpanded set contains `t`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleId, Corpus, TrainingPair};
use crate::error::{Error, Result};
use crate::textpipe::{NGramSet, TextPipeline};

/// Number of ranked articles kept for filtering.
pub const TOP_N: usize = 10;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankerParams {
    /// Largest n-gram size.
    pub k: usize,
    /// Weight of the question set size in the score denominator.
    pub i_q: f64,
    /// Weight of the article set size; always `1 - i_q`.
    pub i_art: f64,
    pub confidence_thresh: f64,
    pub reference_thresh: f64,
}

impl Default for RankerParams {
    /// Values used for the final competition runs.
    fn default() -> Self {
        RankerParams { k: 3, i_q: 0.965, i_art: 0.035, confidence_thresh: 0.32, reference_thresh: 0.2 }
    }
}

impl RankerParams {
    /// Starting point of the parameter search.
    pub fn tuning_start() -> Self {
        RankerParams { k: 1, i_q: 0.8, i_art: 0.2, confidence_thresh: 0.5, reference_thresh: 0.5 }
    }

    pub fn with_i_q(mut self, i_q: f64) -> Self {
        self.i_q = i_q;
        self.i_art = 1.0 - i_q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        if self.k < 1 {
            return Err(Error::InvalidGramSize(self.k));
        }
        unit("i_q", self.i_q)?;
        unit("i_art", self.i_art)?;
        unit("confidence_thresh", self.confidence_thresh)?;
        unit("reference_thresh", self.reference_thresh)?;
        if (self.i_q + self.i_art - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!("i_q + i_art must be 1, got {}", self.i_q + self.i_art)));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: RankerParams = serde_json::from_str(&text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Phrase-to-phrase associations used to expand question sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermDictionary {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl TermDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.entry(key.into()).or_default().insert(value.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(key)
    }

    /// JSON object mapping a phrase to an array of phrases, kept verbatim.
    pub fn parse_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rewrites keys and values into lemma n-gram keys so they can match
    /// question sets. Phrases made only of stopwords are dropped.
    pub fn normalized(&self, pipeline: &TextPipeline) -> Self {
        let norm = |s: &str| pipeline.lemmas(s).join(" ");
        let mut out = TermDictionary::new();
        for (k, vs) in &self.entries {
            let key = norm(k);
            if key.is_empty() {
                continue;
            }
            for v in vs {
                let v = norm(v);
                if !v.is_empty() {
                    out.insert(key.clone(), v);
                }
            }
        }
        out
    }

    /// Loads a dictionary file and normalizes it with `pipeline`.
    pub fn load(path: impl AsRef<Path>, pipeline: &TextPipeline) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse_json(&text)?.normalized(pipeline))
    }
}

/// Adds the dictionary associations of every question gram. One pass, not
/// transitive.
pub fn expand_question(q_set: &NGramSet, dictionary: &TermDictionary) -> NGramSet {
    let mut out = q_set.clone();
    for t in q_set.iter() {
        if let Some(vs) = dictionary.get(t) {
            for v in vs {
                out.insert(v.clone());
            }
        }
    }
    out
}

/// Natural-log IDF; unseen terms count as appearing in one article.
pub fn idf_value(n_articles: usize, df: u32) -> f64 {
    (n_articles as f64 / f64::from(df.max(1))).ln()
}

/// Per-article base sets and document frequencies for one gram size.
///
/// These do not depend on training pairs, so leave-one-out folds and
/// parameter searches reuse them.
#[derive(Debug, Clone)]
pub struct BaseIndex {
    k: usize,
    base: BTreeMap<ArticleId, NGramSet>,
    ref_expanded: BTreeMap<ArticleId, NGramSet>,
    df: BTreeMap<String, u32>,
    links: BTreeMap<ArticleId, BTreeSet<ArticleId>>,
    pipeline: TextPipeline,
}

impl BaseIndex {
    pub fn new(corpus: &Corpus, k: usize, pipeline: &TextPipeline) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidGramSize(k));
        }
        if corpus.is_empty() {
            return Err(Error::InsufficientData("corpus has no articles".into()));
        }
        let mut base = BTreeMap::new();
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        for a in corpus.articles() {
            let set = pipeline.process(&a.content(), k)?;
            for g in set.iter() {
                *df.entry(g.to_string()).or_default() += 1;
            }
            base.insert(a.id.clone(), set);
        }
        let mut links = BTreeMap::new();
        let mut ref_expanded = BTreeMap::new();
        for a in corpus.articles() {
            let refs = corpus.resolved_refs(&a.id);
            let mut set = base[&a.id].clone();
            for r in &refs {
                set.union_with(&base[r]);
            }
            ref_expanded.insert(a.id.clone(), set);
            links.insert(a.id.clone(), refs);
        }
        Ok(BaseIndex { k, base, ref_expanded, df, links, pipeline: pipeline.clone() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_articles(&self) -> usize {
        self.base.len()
    }

    pub fn base_set(&self, id: &ArticleId) -> Option<&NGramSet> {
        self.base.get(id)
    }

    /// Base set unioned with the base sets of cited articles.
    pub fn ref_expanded_set(&self, id: &ArticleId) -> Option<&NGramSet> {
        self.ref_expanded.get(id)
    }

    pub fn pipeline(&self) -> &TextPipeline {
        &self.pipeline
    }

    pub fn question_set(&self, question: &str) -> NGramSet {
        // k >= 1 is checked at construction.
        self.pipeline.process(question, self.k).unwrap_or_default()
    }

    /// Builds the stored model, expanding articles with the question sets
    /// of `pairs`.
    pub fn build<'a>(&self, pairs: impl IntoIterator<Item = &'a TrainingPair>) -> NGramModel {
        let mut per_article = self.ref_expanded.clone();
        for p in pairs {
            let q = self.question_set(&p.question);
            for id in &p.relevant {
                if let Some(set) = per_article.get_mut(id) {
                    set.union_with(&q);
                }
            }
        }
        NGramModel::from_parts(self.k, per_article, self.df.clone(), self.links.clone())
    }
}

/// Builds the article model from a corpus and optional training pairs.
pub fn build_model(corpus: &Corpus, k: usize, pairs: &[TrainingPair], pipeline: &TextPipeline) -> Result<NGramModel> {
    Ok(BaseIndex::new(corpus, k, pipeline)?.build(pairs))
}

#[derive(Debug, Clone, Default)]
struct ScoreIndex {
    term_ids: HashMap<String, u32>,
    /// Per term id, article positions containing it, ascending.
    postings: Vec<Vec<u32>>,
    idf: Vec<f64>,
    ids: Vec<ArticleId>,
    sizes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct NGramModel {
    k: usize,
    per_article: BTreeMap<ArticleId, NGramSet>,
    df: BTreeMap<String, u32>,
    links: BTreeMap<ArticleId, BTreeSet<ArticleId>>,
    index: ScoreIndex,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    k: usize,
    n_articles: usize,
    df: BTreeMap<String, u32>,
    links: BTreeMap<ArticleId, BTreeSet<ArticleId>>,
    articles: BTreeMap<ArticleId, NGramSet>,
}

impl NGramModel {
    pub fn from_parts(
        k: usize,
        per_article: BTreeMap<ArticleId, NGramSet>,
        df: BTreeMap<String, u32>,
        links: BTreeMap<ArticleId, BTreeSet<ArticleId>>,
    ) -> Self {
        let n = per_article.len();
        let vocab: BTreeSet<&str> = per_article.values().flat_map(|s| s.iter()).collect();
        // Ids follow lexicographic term order so per-article sums run in the
        // same order as a direct walk over the sorted question set.
        let term_ids: HashMap<String, u32> = vocab.iter().enumerate().map(|(i, t)| (t.to_string(), i as u32)).collect();
        let idf = vocab.iter().map(|t| idf_value(n, df.get(*t).copied().unwrap_or(0))).collect();
        let mut postings = vec![Vec::new(); vocab.len()];
        for (pos, set) in per_article.values().enumerate() {
            for t in set.iter() {
                postings[term_ids[t] as usize].push(pos as u32);
            }
        }
        let ids = per_article.keys().cloned().collect();
        let sizes = per_article.values().map(NGramSet::len).collect();
        NGramModel { k, per_article, df, links, index: ScoreIndex { term_ids, postings, idf, ids, sizes } }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_articles(&self) -> usize {
        self.per_article.len()
    }

    /// Number of distinct n-grams over all expanded article sets.
    pub fn vocabulary_size(&self) -> usize {
        self.index.idf.len()
    }

    pub fn article_set(&self, id: &ArticleId) -> Option<&NGramSet> {
        self.per_article.get(id)
    }

    pub fn article_sets(&self) -> impl Iterator<Item = (&ArticleId, &NGramSet)> {
        self.per_article.iter()
    }

    pub fn df(&self, gram: &str) -> Option<u32> {
        self.df.get(gram).copied()
    }

    pub fn links(&self, id: &ArticleId) -> Option<&BTreeSet<ArticleId>> {
        self.links.get(id)
    }

    pub fn idf(&self, gram: &str) -> f64 {
        idf_value(self.n_articles(), self.df(gram).unwrap_or(0))
    }

    /// Relevance of article `id` for the question set `q_set`.
    pub fn score(&self, params: &RankerParams, q_set: &NGramSet, id: &ArticleId) -> Result<f64> {
        let set = self.per_article.get(id).ok_or_else(|| Error::UnknownArticle(id.to_string()))?;
        Ok(self.score_against(params, q_set, set))
    }

    /// Score of `q_set` against an arbitrary article set, using this model's
    /// document frequencies.
    pub fn score_against(&self, params: &RankerParams, q_set: &NGramSet, article: &NGramSet) -> f64 {
        let mut sum = 0.0;
        let mut shared = false;
        for t in q_set.iter() {
            if article.contains(t) {
                sum += self.idf(t);
                shared = true;
            }
        }
        normalize(params, sum, shared, q_set.len(), article.len())
    }

    /// IDF sum over the grams shared by `q_set` and `article`, the score
    /// numerator.
    pub fn overlap_idf(&self, q_set: &NGramSet, article: &NGramSet) -> f64 {
        q_set.iter().filter(|t| article.contains(t)).map(|t| self.idf(t)).sum()
    }

    /// Scores every article, highest first, ties by ascending id.
    pub fn rank_all(&self, params: &RankerParams, q_set: &NGramSet) -> Vec<RankedEntry> {
        self.rank_all_with(params, q_set, &BTreeMap::new())
    }

    /// Like [`rank_all`](Self::rank_all) but with some article sets replaced.
    pub fn rank_all_with(&self, params: &RankerParams, q_set: &NGramSet, overrides: &BTreeMap<ArticleId, NGramSet>) -> Vec<RankedEntry> {
        let n = self.index.ids.len();
        let mut sums = vec![0.0f64; n];
        let mut shared = vec![false; n];
        for t in q_set.iter() {
            if let Some(&tid) = self.index.term_ids.get(t) {
                let idf = self.index.idf[tid as usize];
                for &pos in &self.index.postings[tid as usize] {
                    sums[pos as usize] += idf;
                    shared[pos as usize] = true;
                }
            }
        }
        let mut entries: Vec<RankedEntry> = self
            .index
            .ids
            .iter()
            .enumerate()
            .map(|(pos, id)| {
                let score = match overrides.get(id) {
                    Some(set) => self.score_against(params, q_set, set),
                    None => normalize(params, sums[pos], shared[pos], q_set.len(), self.index.sizes[pos]),
                };
                RankedEntry { id: id.clone(), score }
            })
            .collect();
        sort_ranked(&mut entries);
        entries
    }

    /// Top articles for a question text.
    pub fn rank(&self, params: &RankerParams, question: &str, pipeline: &TextPipeline, dictionary: &TermDictionary) -> RankedList {
        let q = self.question_set(question, pipeline, dictionary);
        RankedList::from_full(self.rank_all(params, &q))
    }

    /// Question n-gram set after dictionary expansion.
    pub fn question_set(&self, question: &str, pipeline: &TextPipeline, dictionary: &TermDictionary) -> NGramSet {
        let q = pipeline.process(question, self.k).unwrap_or_default();
        expand_question(&q, dictionary)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            k: self.k,
            n_articles: self.n_articles(),
            df: self.df.clone(),
            links: self.links.clone(),
            articles: self.per_article.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text)?;
        if v.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion { found: v.format_version, expected: MODEL_FORMAT_VERSION });
        }
        let f: ModelFile = serde_json::from_str(text)?;
        if f.n_articles != f.articles.len() {
            return Err(Error::InvalidParams(format!("model declares {} articles but stores {}", f.n_articles, f.articles.len())));
        }
        Ok(NGramModel::from_parts(f.k, f.articles, f.df, f.links))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn normalize(params: &RankerParams, sum: f64, shared: bool, q_len: usize, a_len: usize) -> f64 {
    if !shared || q_len == 0 {
        return 0.0;
    }
    let denom = params.i_q * q_len as f64 + params.i_art * a_len as f64;
    if denom > 0.0 {
        sum / denom
    } else {
        0.0
    }
}

fn sort_ranked(entries: &mut [RankedEntry]) {
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub id: ArticleId,
    pub score: f64,
}

/// Best-scoring articles, at most [`TOP_N`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    /// Sorts `entries` and keeps the first [`TOP_N`].
    pub fn new(mut entries: Vec<RankedEntry>) -> Self {
        sort_ranked(&mut entries);
        Self::from_full(entries)
    }

    fn from_full(mut entries: Vec<RankedEntry>) -> Self {
        entries.truncate(TOP_N);
        RankedList { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ArticleId> {
        self.entries.iter().map(|e| &e.id)
    }
}

/// Final answer list: the top article, plus the ranked articles it cites when
/// both it and they clear their thresholds.
pub fn filter(ranked: &RankedList, model: &NGramModel, params: &RankerParams) -> Vec<ArticleId> {
    let Some(top) = ranked.entries.first() else {
        return Vec::new();
    };
    let mut out = vec![top.id.clone()];
    if top.score > params.confidence_thresh {
        if let Some(cited) = model.links(&top.id) {
            for e in &ranked.entries[1..] {
                if cited.contains(&e.id) && e.score > params.reference_thresh {
                    out.push(e.id.clone());
                }
            }
        }
    }
    out
}
