//! Fifteen-feature representation of a (question, evidence) pair.
//!
//! Term-frequency vector metrics work on lemma tokens, set metrics on
//! distinct lemma tokens, and edit-family metrics plus the longest common
//! substring on the lemma strings at character level.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::embed::{EmbeddingTable, SimilarityMode};
use crate::ranker::NGramModel;
use crate::strsim;
use crate::textpipe::TextPipeline;

pub const NUM_FEATURES: usize = 15;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "manhattan",
    "euclidean",
    "cosine",
    "matching",
    "dice",
    "jaccard",
    "jaro",
    "damerau_levenshtein",
    "levenshtein",
    "lcs",
    "avg_tfidf",
    "avg_tf_q_in_s",
    "avg_tf_s_in_q",
    "word_overlap",
    "avg_word2vec",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; NUM_FEATURES],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    /// Copy with feature `i` set to zero.
    pub fn without(&self, i: usize) -> Self {
        let mut v = *self;
        v.values[i] = 0.0;
        v
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.values.iter().copied())
    }
}

/// Both sides of a pair after preprocessing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedPair {
    pub q_tokens: Vec<String>,
    pub a_tokens: Vec<String>,
    pub q_text: String,
    pub a_text: String,
}

/// Runs both texts through tokenization, stopword removal and lemmatization.
/// The evidence is one fragment regardless of its sentence count.
pub fn prepare(question: &str, evidence: &str, pipeline: &TextPipeline) -> PreparedPair {
    let q_tokens = pipeline.lemmas(question);
    let a_tokens = pipeline.lemmas(evidence);
    PreparedPair { q_text: q_tokens.join(" "), a_text: a_tokens.join(" "), q_tokens, a_tokens }
}

pub fn prepare_article(question: &str, article: &Article, pipeline: &TextPipeline) -> PreparedPair {
    prepare(question, &article.content(), pipeline)
}

fn counts(tokens: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// Raw edit distances between the two lemma strings, before normalization.
pub fn raw_edit_distances(p: &PreparedPair) -> (usize, usize) {
    let q: Vec<char> = p.q_text.chars().collect();
    let a: Vec<char> = p.a_text.chars().collect();
    (strsim::damerau_levenshtein(&q, &a), strsim::levenshtein(&q, &a))
}

/// Manhattan, Euclidean, cosine, matching, Dice, Jaccard distance, Jaro,
/// normalized Damerau-Levenshtein and normalized Levenshtein.
pub fn distance_features(p: &PreparedPair) -> [f64; 9] {
    let qc = counts(&p.q_tokens);
    let ac = counts(&p.a_tokens);
    let vocab: BTreeSet<&str> = qc.keys().chain(ac.keys()).copied().collect();
    let (mut l1, mut l2, mut dot, mut nq, mut na) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in &vocab {
        let x = *qc.get(t).unwrap_or(&0) as f64;
        let y = *ac.get(t).unwrap_or(&0) as f64;
        l1 += (x - y).abs();
        l2 += (x - y) * (x - y);
        dot += x * y;
        nq += x * x;
        na += y * y;
    }
    let cosine = if nq == 0.0 && na == 0.0 {
        1.0
    } else if nq == 0.0 || na == 0.0 {
        0.0
    } else {
        (dot / (nq.sqrt() * na.sqrt())).clamp(0.0, 1.0)
    };

    let shared = qc.keys().filter(|t| ac.contains_key(*t)).count() as f64;
    let (nqs, nas) = (qc.len() as f64, ac.len() as f64);
    let union = vocab.len() as f64;
    let dice = if nqs + nas == 0.0 { 1.0 } else { 2.0 * shared / (nqs + nas) };
    let jaccard = if union == 0.0 { 0.0 } else { 1.0 - shared / union };

    let q: Vec<char> = p.q_text.chars().collect();
    let a: Vec<char> = p.a_text.chars().collect();
    let jaro = strsim::jaro(&q, &a);
    let dl = strsim::normalized(strsim::damerau_levenshtein(&q, &a), &q, &a);
    let lev = strsim::normalized(strsim::levenshtein(&q, &a), &q, &a);

    [l1, l2.sqrt(), cosine, shared, dice, jaccard, jaro, dl, lev]
}

/// Longest common substring ratio, average TF-IDF, the two average-TF
/// features and word overlap.
pub fn statistical_features(p: &PreparedPair, model: &NGramModel) -> [f64; 5] {
    let q: Vec<char> = p.q_text.chars().collect();
    let a: Vec<char> = p.a_text.chars().collect();
    let shortest = q.len().min(a.len());
    let lcs = if shortest == 0 { 0.0 } else { strsim::longest_common_substring(&q, &a) as f64 / shortest as f64 };

    let qc = counts(&p.q_tokens);
    let ac = counts(&p.a_tokens);
    let mean = |xs: &mut dyn Iterator<Item = f64>| {
        let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };

    let avg_tfidf = mean(&mut qc.keys().filter_map(|t| ac.get(t).map(|&tf| tf as f64 * model.idf(t))));
    let avg_tf_q_in_s = mean(&mut qc.keys().map(|t| *ac.get(t).unwrap_or(&0) as f64));
    let avg_tf_s_in_q = mean(&mut ac.keys().map(|t| *qc.get(t).unwrap_or(&0) as f64));
    let overlap = qc.keys().filter(|t| ac.contains_key(*t)).count() as f64;

    [lcs, avg_tfidf, avg_tf_q_in_s, avg_tf_s_in_q, overlap]
}

/// All fifteen features for an already prepared pair.
pub fn features(p: &PreparedPair, model: &NGramModel, emb: &EmbeddingTable, mode: SimilarityMode) -> FeatureVector {
    let d = distance_features(p);
    let s = statistical_features(p, model);
    let w2v = emb.avg_similarity(&p.q_tokens, &p.a_tokens, mode);
    let mut values = [0.0; NUM_FEATURES];
    values[..9].copy_from_slice(&d);
    values[9..14].copy_from_slice(&s);
    values[14] = w2v;
    FeatureVector { values }
}

/// Prepares the pair and computes its features.
pub fn extract(question: &str, evidence: &str, model: &NGramModel, emb: &EmbeddingTable, pipeline: &TextPipeline) -> FeatureVector {
    features(&prepare(question, evidence, pipeline), model, emb, SimilarityMode::BestMatch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_statutes;
    use crate::ranker::build_model;

    fn pair(q: &str, a: &str) -> PreparedPair {
        let tok = |s: &str| -> Vec<String> { s.split_whitespace().map(str::to_string).collect() };
        PreparedPair { q_tokens: tok(q), a_tokens: tok(a), q_text: q.to_string(), a_text: a.to_string() }
    }

    fn tiny_model() -> NGramModel {
        let c = parse_statutes("Article 1 manager claim cost.\nArticle 2 principal claim.\nArticle 3 wall fence.").unwrap();
        build_model(&c, 1, &[], TextPipeline::shared()).unwrap()
    }

    #[test]
    fn prepare_runs_pipeline() {
        let c = parse_statutes("(Claims)\nArticle 702 If a Manager has incurred useful expenses.").unwrap();
        let p = prepare_article("The managers", c.get(&"702".into()).unwrap(), TextPipeline::shared());
        assert_eq!(p.q_tokens, ["manager"]);
        assert_eq!(p.a_text, "claim manager have incur useful expense");
        let same = prepare("x y", "x y", TextPipeline::shared());
        assert_eq!(same.q_tokens, same.a_tokens);
        assert!(prepare("", "x", TextPipeline::shared()).q_tokens.is_empty());
    }

    #[test]
    fn identical_sides_profile() {
        let d = distance_features(&pair("manager claim", "manager claim"));
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        assert!((d[2] - 1.0).abs() < 1e-12);
        assert_eq!(d[3], 2.0);
        assert_eq!(d[4], 1.0);
        assert_eq!(d[5], 0.0);
        assert_eq!(d[6], 1.0);
        assert_eq!(d[7], 0.0);
        assert_eq!(d[8], 0.0);
    }

    #[test]
    fn edit_distance_examples() {
        let d = distance_features(&pair("kitten", "sitting"));
        assert!((d[8] - 3.0 / 7.0).abs() < 1e-12);
        let d = distance_features(&pair("ca", "ac"));
        assert_eq!(d[7], 0.5);
        assert_eq!(d[8], 1.0);
    }

    #[test]
    fn empty_conventions() {
        let d = distance_features(&pair("", ""));
        assert_eq!(d, [0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        let s = statistical_features(&pair("", ""), &tiny_model());
        assert_eq!(s, [0.0; 5]);
    }

    #[test]
    fn tf_vector_metrics() {
        // q = {a:2, b:1}, a = {b:1, c:1}
        let d = distance_features(&pair("a a b", "b c"));
        assert_eq!(d[0], 3.0);
        assert!((d[1] - 5f64.sqrt()).abs() < 1e-12);
        assert!((d[2] - 1.0 / (5f64.sqrt() * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(d[3], 1.0);
        assert!((d[4] - 2.0 / 4.0).abs() < 1e-12);
        assert!((d[5] - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn statistical_examples() {
        let m = tiny_model();
        let s = statistical_features(&pair("abcd", "zbcz"), &m);
        assert_eq!(s[0], 0.5);

        let s = statistical_features(&pair("manager claim", "manager claim claim cost"), &m);
        assert_eq!(s[4], 2.0);
        // tf in article: manager 1, claim 2; idf(manager) = ln 3, idf(claim) = ln 1.5
        let expect = (3f64.ln() + 2.0 * 1.5f64.ln()) / 2.0;
        assert!((s[1] - expect).abs() < 1e-12);
        assert_eq!(s[2], 1.5);
        // article tokens manager, claim, cost appear 1, 1, 0 times in q
        assert!((s[3] - 2.0 / 3.0).abs() < 1e-12);

        let s = statistical_features(&pair("wall", "manager"), &m);
        assert_eq!((s[1], s[4]), (0.0, 0.0));
    }

    #[test]
    fn extract_orders_features() {
        let m = tiny_model();
        let mut emb = EmbeddingTable::default();
        emb.insert("manager", vec![1.0, 0.0]).unwrap();
        emb.insert("claim", vec![0.0, 1.0]).unwrap();
        let v = extract("Manager claim", "manager claims", &m, &emb, TextPipeline::shared());
        assert_eq!(v.get("levenshtein"), Some(0.0));
        assert_eq!(v.get("word_overlap"), Some(2.0));
        assert!((v.get("avg_word2vec").unwrap() - 1.0).abs() < 1e-12);
        assert!((v.get("cosine").unwrap() - 1.0).abs() < 1e-12);
        let e = extract("", "manager", &m, &emb, TextPipeline::shared());
        assert_eq!(e.get("cosine"), Some(0.0));
        assert_eq!(e.get("avg_word2vec"), Some(0.0));
        assert_eq!(e.get("levenshtein"), Some(1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn text() -> impl Strategy<Value = String> {
            prop::collection::vec(prop::sample::select(vec!["ab", "ba", "c", "abc", "cab", "b"]), 0..6).prop_map(|w| w.join(" "))
        }

        proptest! {
            #[test]
            fn symmetric_metrics_swap_invariant(q in text(), a in text()) {
                let m = tiny_model();
                let p1 = pair(&q, &a);
                let p2 = pair(&a, &q);
                let (d1, d2) = (distance_features(&p1), distance_features(&p2));
                for i in 0..9 {
                    prop_assert!((d1[i] - d2[i]).abs() < 1e-12, "{} differs", FEATURE_NAMES[i]);
                }
                let (s1, s2) = (statistical_features(&p1, &m), statistical_features(&p2, &m));
                prop_assert_eq!(s1[0], s2[0]);
                prop_assert!(d1[7] <= d1[8] + 1e-12);
            }

            #[test]
            fn features_are_finite_and_bounded(q in "[a-z ]{0,30}", a in "[a-z .]{0,60}") {
                let m = tiny_model();
                let v = extract(&q, &a, &m, &EmbeddingTable::default(), TextPipeline::shared());
                prop_assert!(v.values.iter().all(|x| x.is_finite()));
                for name in ["cosine", "dice", "jaro", "lcs", "avg_word2vec", "jaccard", "levenshtein", "damerau_levenshtein"] {
                    let x = v.get(name).unwrap();
                    prop_assert!((0.0..=1.0).contains(&x), "{} = {}", name, x);
                }
                prop_assert!(v.get("word_overlap").unwrap() >= 0.0);
                prop_assert!(v.get("matching").unwrap() >= 0.0);
            }
        }
    }
}
