//! A loaded corpus and model ready to answer questions.

use serde::{Deserialize, Serialize};

use crate::boost::{BoostModel, Label};
use crate::corpus::{ArticleId, Corpus, TrainingPair};
use crate::embed::{EmbeddingTable, SimilarityMode};
use crate::entail::FeatureVector;
use crate::error::{Error, Result};
use crate::eval::{predict_vectors, EvidenceMode, FeatureContext};
use crate::ranker::{self, build_model, NGramModel, RankedEntry, RankerParams, TermDictionary};
use crate::textpipe::TextPipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Retrieval {
    pub ranked: Vec<RankedEntry>,
    pub answer: Vec<ArticleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub retrieved: Vec<ArticleId>,
    pub label: Label,
    pub margin: f64,
}

pub struct Engine {
    pub corpus: Corpus,
    pub model: NGramModel,
    pub params: RankerParams,
    pub dictionary: TermDictionary,
    pub pipeline: TextPipeline,
    pub embeddings: EmbeddingTable,
    pub boost: Option<BoostModel>,
    pub evidence: EvidenceMode,
}

impl Engine {
    /// Fails if the model was built for another corpus or gram size.
    pub fn new(corpus: Corpus, model: NGramModel, params: RankerParams, pipeline: TextPipeline) -> Result<Self> {
        params.validate()?;
        if model.k() != params.k {
            return Err(Error::InvalidParams(format!("model was built with k = {} but params ask for k = {}", model.k(), params.k)));
        }
        if model.n_articles() != corpus.len() {
            return Err(Error::InvalidParams(format!("model covers {} articles, corpus has {}", model.n_articles(), corpus.len())));
        }
        if let Some(id) = corpus.ids().find(|id| model.article_set(id).is_none()) {
            return Err(Error::UnknownArticle(id.to_string()));
        }
        Ok(Engine {
            corpus,
            model,
            params,
            dictionary: TermDictionary::new(),
            pipeline,
            embeddings: EmbeddingTable::default(),
            boost: None,
            evidence: EvidenceMode::Concatenate,
        })
    }

    pub fn build(corpus: Corpus, pairs: &[TrainingPair], params: RankerParams, pipeline: TextPipeline) -> Result<Self> {
        let model = build_model(&corpus, params.k, pairs, &pipeline)?;
        Engine::new(corpus, model, params, pipeline)
    }

    pub fn feature_context(&self) -> FeatureContext<'_> {
        FeatureContext {
            corpus: &self.corpus,
            model: &self.model,
            embeddings: &self.embeddings,
            pipeline: &self.pipeline,
            similarity: SimilarityMode::BestMatch,
        }
    }

    pub fn retrieve(&self, question: &str) -> Retrieval {
        let ranked = self.model.rank(&self.params, question, &self.pipeline, &self.dictionary);
        let answer = ranker::filter(&ranked, &self.model, &self.params);
        Retrieval { ranked: ranked.entries, answer }
    }

    /// Feature vectors of `question` against the given articles, one per
    /// evidence fragment.
    pub fn features(&self, question: &str, ids: &[ArticleId]) -> Result<Vec<FeatureVector>> {
        if let Some(id) = ids.iter().find(|id| !self.corpus.contains(id)) {
            return Err(Error::UnknownArticle(id.to_string()));
        }
        Ok(self.feature_context().vectors(question, ids, self.evidence))
    }

    pub fn entail(&self, question: &str, ids: &[ArticleId]) -> Result<(Label, f64)> {
        let boost = self.boost.as_ref().ok_or(Error::EmptyModel)?;
        predict_vectors(boost, &self.features(question, ids)?, None)
    }

    /// Retrieval followed by entailment against the retrieved articles.
    pub fn answer(&self, question: &str) -> Result<Answer> {
        let r = self.retrieve(question);
        let (label, margin) = self.entail(question, &r.answer)?;
        Ok(Answer { retrieved: r.answer, label, margin })
    }
}
