//! Word vectors in the plain-text format (`word v1 ... vD` per line, with an
//! optional `<count> <dim>` header) and the averaged similarity feature.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

/// How question tokens are matched against article tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SimilarityMode {
    /// Best article match per question token, averaged.
    #[default]
    BestMatch,
    /// Mean over every (question token, article token) pair.
    AllPairs,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable { dim, vectors: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Inserts or replaces a vector. Returns an error if the length does not
    /// match the table dimension or a component is not finite.
    pub fn insert(&mut self, word: impl Into<String>, v: Vec<f64>) -> Result<()> {
        let word = word.into();
        if self.dim == 0 && self.vectors.is_empty() {
            self.dim = v.len();
        }
        if v.len() != self.dim {
            return Err(Error::InvalidParams(format!("vector for {word:?} has {} components, expected {}", v.len(), self.dim)));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams(format!("vector for {word:?} is not finite")));
        }
        self.vectors.insert(word, v);
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = EmbeddingTable::default();
        let mut declared_dim = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.is_empty() {
                continue;
            }
            if i == 0 && parts.len() == 2 {
                if let (Ok(_), Ok(d)) = (parts[0].parse::<usize>(), parts[1].parse::<usize>()) {
                    declared_dim = Some(d);
                    table.dim = d;
                    continue;
                }
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let values = parts[1..]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| parse_err(e.to_string()))?;
            if values.is_empty() {
                return Err(parse_err(format!("no vector components for {:?}", parts[0])));
            }
            let expected = declared_dim.unwrap_or(if table.vectors.is_empty() { values.len() } else { table.dim });
            if values.len() != expected {
                return Err(parse_err(format!("{:?} has {} components, expected {expected}", parts[0], values.len())));
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(parse_err(format!("non-finite component for {:?}", parts[0])));
            }
            if table.vectors.contains_key(parts[0]) {
                log::warn!("line {line_no}: duplicate vector for {:?}, keeping the later one", parts[0]);
            }
            table.dim = expected;
            table.vectors.insert(parts[0].to_string(), values);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Text serialization with a header, words sorted.
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = format!("{} {}\n", words.len(), self.dim);
        for w in words {
            out.push_str(w);
            for x in &self.vectors[w] {
                out.push_str(&format!(" {x:.6}"));
            }
            out.push('\n');
        }
        out
    }

    /// Cosine of the two word vectors; 0 when either is missing or zero.
    pub fn cos(&self, w1: &str, w2: &str) -> f64 {
        match (self.get(w1), self.get(w2)) {
            (Some(a), Some(b)) => cosine(a, b),
            _ => 0.0,
        }
    }

    /// Averaged word similarity between two token lists, in `[0, 1]`.
    pub fn avg_similarity<S: AsRef<str>>(&self, q_tokens: &[S], a_tokens: &[S], mode: SimilarityMode) -> f64 {
        let q: BTreeSet<&str> = q_tokens.iter().map(AsRef::as_ref).filter(|t| self.get(t).is_some()).collect();
        let a: BTreeSet<&str> = a_tokens.iter().map(AsRef::as_ref).collect();
        if q.is_empty() || a.is_empty() {
            return 0.0;
        }
        let per_q = q.iter().map(|qt| {
            let sims = a.iter().map(|at| self.cos(qt, at).max(0.0));
            match mode {
                SimilarityMode::BestMatch => sims.fold(0.0, f64::max),
                SimilarityMode::AllPairs => sims.sum::<f64>() / a.len() as f64,
            }
        });
        let total: f64 = per_q.sum();
        (total / q.len() as f64).clamp(0.0, 1.0)
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable {
        let mut t = EmbeddingTable::default();
        for (w, v) in rows {
            t.insert(*w, v.to_vec()).unwrap();
        }
        t
    }

    #[test]
    fn parse_with_header() {
        let t = EmbeddingTable::parse("2 3\nfoo 1 0 0\nbar 0 1 0.5\n").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.get("bar").unwrap(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn parse_headerless_infers_dim() {
        let t = EmbeddingTable::parse("foo 1 2\nbar 3 4\n").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 2));
    }

    #[test]
    fn parse_rejects_wrong_component_count() {
        match EmbeddingTable::parse("2 3\nfoo 1 0 0\nbar 0 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(EmbeddingTable::parse("foo 1 2\nbar 1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(EmbeddingTable::parse("foo 1 nan\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicate_word_keeps_last() {
        let t = EmbeddingTable::parse("foo 1 0\nfoo 0 1\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("foo").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn text_round_trip() {
        let t = table(&[("a", &[0.5, -1.0]), ("b", &[2.0, 0.25])]);
        assert_eq!(EmbeddingTable::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn cos_examples() {
        let t = table(&[("w", &[0.3, 0.4]), ("x", &[1.0, 0.0]), ("y", &[0.0, 1.0]), ("d", &[1.0, 1.0]), ("z", &[0.0, 0.0])]);
        assert!((t.cos("w", "w") - 1.0).abs() < 1e-12);
        assert_eq!(t.cos("x", "y"), 0.0);
        assert!((t.cos("d", "x") - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(t.cos("x", "missing"), 0.0);
        assert_eq!(t.cos("x", "z"), 0.0);
    }

    fn person_table() -> EmbeddingTable {
        // cos(person, manager) = 0.8, cos(person, wall) = 0.1
        let s = (1.0f64 - 0.01).sqrt();
        table(&[("person", &[1.0, 0.0, 0.0]), ("manager", &[0.8, 0.6, 0.0]), ("wall", &[0.1, 0.0, s])])
    }

    #[test]
    fn avg_similarity_examples() {
        let t = person_table();
        let m = SimilarityMode::BestMatch;
        assert!((t.cos("person", "manager") - 0.8).abs() < 1e-12);
        assert!((t.cos("person", "wall") - 0.1).abs() < 1e-12);
        assert!((t.avg_similarity(&["person"], &["manager", "wall"], m) - 0.8).abs() < 1e-12);
        assert!((t.avg_similarity(&["person", "wall"], &["wall", "person"], m) - 1.0).abs() < 1e-12);
        assert_eq!(t.avg_similarity(&["unknown"], &["person"], m), 0.0);
        assert_eq!(t.avg_similarity::<&str>(&["person"], &[], m), 0.0);
        let all = t.avg_similarity(&["person"], &["manager", "wall"], SimilarityMode::AllPairs);
        assert!((all - 0.45).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn words() -> impl Strategy<Value = Vec<String>> {
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "oov"]).prop_map(String::from), 0..6)
        }

        fn random_table() -> impl Strategy<Value = EmbeddingTable> {
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 5).prop_map(|vs| {
                let mut t = EmbeddingTable::default();
                for (w, v) in ["a", "b", "c", "d", "e"].iter().zip(vs) {
                    t.insert(*w, v).unwrap();
                }
                t
            })
        }

        proptest! {
            #[test]
            fn bounded_monotone_order_invariant(t in random_table(), q in words(), a in words(), extra in words()) {
                let m = SimilarityMode::BestMatch;
                let s = t.avg_similarity(&q, &a, m);
                prop_assert!((0.0..=1.0).contains(&s));
                let mut more = a.clone();
                more.extend(extra);
                prop_assert!(t.avg_similarity(&q, &more, m) >= s - 1e-12);
                let mut rev = a.clone();
                rev.reverse();
                prop_assert_eq!(t.avg_similarity(&q, &rev, m), s);
                let in_vocab: Vec<String> = q.iter().filter(|w| t.get(w).is_some_and(|v| v.iter().any(|x| *x != 0.0))).cloned().collect();
                if !in_vocab.is_empty() {
                    prop_assert!((t.avg_similarity(&in_vocab, &in_vocab, m) - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
