//! Precision, recall, F-measure and accuracy, and leave-one-out harnesses for
//! retrieval, entailment and the combined pipeline.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{self, BoostConfig, Instance, Label};
use crate::corpus::{ArticleId, Corpus, TrainingPair};
use crate::embed::{EmbeddingTable, SimilarityMode};
use crate::entail::{self, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::ranker::{self, expand_question, BaseIndex, NGramModel, RankedList, RankerParams, TermDictionary};
use crate::textpipe::{NGramSet, TextPipeline};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    /// Correctly retrieved articles over all queries.
    pub cr: usize,
    /// Retrieved articles over all queries.
    pub rt: usize,
    /// Relevant articles over all queries.
    pub rl: usize,
    /// Correctly answered queries.
    pub cq: usize,
    /// Queries.
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_measure(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn metrics(c: &EvalCounts) -> Metrics {
    let precision = ratio(c.cr, c.rt);
    let recall = ratio(c.cr, c.rl);
    Metrics { precision, recall, f_measure: f_measure(precision, recall), accuracy: ratio(c.cq, c.q) }
}

/// Gold-by-predicted label counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub yes_yes: usize,
    pub yes_no: usize,
    pub no_yes: usize,
    pub no_no: usize,
}

impl Confusion {
    pub fn add(&mut self, gold: Label, predicted: Label) {
        match (gold, predicted) {
            (Label::Yes, Label::Yes) => self.yes_yes += 1,
            (Label::Yes, Label::No) => self.yes_no += 1,
            (Label::No, Label::Yes) => self.no_yes += 1,
            (Label::No, Label::No) => self.no_no += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.yes_yes + self.yes_no + self.no_yes + self.no_no
    }

    pub fn correct(&self) -> usize {
        self.yes_yes + self.no_no
    }

    /// Precision and recall averaged over the classes that occur in either
    /// the gold or the predicted labels.
    pub fn macro_precision_recall(&self) -> (f64, f64) {
        let classes = [
            (self.yes_yes, self.yes_yes + self.no_yes, self.yes_yes + self.yes_no),
            (self.no_no, self.no_no + self.yes_no, self.no_no + self.no_yes),
        ];
        let (mut p, mut r, mut n) = (0.0, 0.0, 0);
        for (tp, predicted, gold) in classes {
            if predicted == 0 && gold == 0 {
                continue;
            }
            p += ratio(tp, predicted);
            r += ratio(tp, gold);
            n += 1;
        }
        if n == 0 {
            (0.0, 0.0)
        } else {
            (p / n as f64, r / n as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryLog {
    pub qid: String,
    pub retrieved: Vec<ArticleId>,
    pub gold: Vec<ArticleId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
    pub counts: EvalCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Confusion>,
    pub per_query: Vec<QueryLog>,
}

impl EvalReport {
    fn retrieval(task: &str, per_query: Vec<QueryLog>) -> Self {
        let counts = retrieval_counts(&per_query);
        let m = metrics(&counts);
        EvalReport {
            task: task.into(),
            precision: m.precision,
            recall: m.recall,
            f_measure: m.f_measure,
            accuracy: m.accuracy,
            counts,
            confusion: None,
            per_query,
        }
    }

    fn entailment(task: &str, per_query: Vec<QueryLog>) -> Self {
        let mut counts = retrieval_counts(&per_query);
        let confusion = confusion_of(&per_query);
        counts.cq = confusion.correct();
        counts.q = per_query.len();
        let (precision, recall) = confusion.macro_precision_recall();
        EvalReport {
            task: task.into(),
            precision,
            recall,
            f_measure: f_measure(precision, recall),
            accuracy: ratio(counts.cq, counts.q),
            counts,
            confusion: Some(confusion),
            per_query,
        }
    }

    /// Rebuilds the report from its per-query log.
    pub fn recomputed(&self) -> EvalReport {
        if self.confusion.is_some() {
            EvalReport::entailment(&self.task, self.per_query.clone())
        } else {
            EvalReport::retrieval(&self.task, self.per_query.clone())
        }
    }

    /// Human-readable summary with four decimals.
    pub fn table(&self) -> String {
        let c = &self.counts;
        let mut s = format!(
            "task       {}\nqueries    {}\nprecision  {:.4}\nrecall     {:.4}\nf-measure  {:.4}\naccuracy   {:.4}\n",
            self.task, c.q, self.precision, self.recall, self.f_measure, self.accuracy
        );
        s.push_str(&format!("counts     cr={} rt={} rl={} cq={}\n", c.cr, c.rt, c.rl, c.cq));
        if let Some(m) = &self.confusion {
            s.push_str(&format!("confusion  gold YES: {} YES / {} NO, gold NO: {} YES / {} NO\n", m.yes_yes, m.yes_no, m.no_yes, m.no_no));
        }
        s
    }
}

fn retrieval_counts(per_query: &[QueryLog]) -> EvalCounts {
    let mut c = EvalCounts::default();
    for q in per_query {
        let gold: BTreeSet<&ArticleId> = q.gold.iter().collect();
        let got: BTreeSet<&ArticleId> = q.retrieved.iter().collect();
        c.cr += got.intersection(&gold).count();
        c.rt += got.len();
        c.rl += gold.len();
        c.cq += usize::from(!gold.is_empty() && got == gold);
        c.q += 1;
    }
    c
}

fn confusion_of(per_query: &[QueryLog]) -> Confusion {
    let mut m = Confusion::default();
    for q in per_query {
        if let (Some(g), Some(p)) = (q.gold_label, q.predicted) {
            m.add(g, p);
        }
    }
    m
}

/// Shared state for leave-one-out retrieval at one gram size.
///
/// Base sets and document frequencies are computed once. The model over all
/// pairs is built once too; a fold only differs from it on the articles its
/// held-out question was relevant to, and those sets are rebuilt per fold.
pub struct LooContext<'a> {
    base: BaseIndex,
    pairs: &'a [TrainingPair],
    question_sets: Vec<NGramSet>,
    full: NGramModel,
}

impl<'a> LooContext<'a> {
    pub fn new(corpus: &Corpus, pairs: &'a [TrainingPair], k: usize, pipeline: &TextPipeline) -> Result<Self> {
        Self::from_base(BaseIndex::new(corpus, k, pipeline)?, pairs)
    }

    pub fn from_base(base: BaseIndex, pairs: &'a [TrainingPair]) -> Result<Self> {
        let question_sets = pairs.iter().map(|p| base.question_set(&p.question)).collect();
        let full = base.build(pairs);
        Ok(LooContext { base, pairs, question_sets, full })
    }

    pub fn k(&self) -> usize {
        self.base.k()
    }

    pub fn pairs(&self) -> &[TrainingPair] {
        self.pairs
    }

    pub fn full_model(&self) -> &NGramModel {
        &self.full
    }

    /// Article sets that differ from the full model in fold `held_out`.
    pub fn fold_overrides(&self, held_out: usize) -> BTreeMap<ArticleId, NGramSet> {
        let mut out = BTreeMap::new();
        for id in &self.pairs[held_out].relevant {
            let Some(base) = self.base.ref_expanded_set(id) else { continue };
            let mut set = base.clone();
            for (j, p) in self.pairs.iter().enumerate() {
                if j != held_out && p.relevant.contains(id) {
                    set.union_with(&self.question_sets[j]);
                }
            }
            out.insert(id.clone(), set);
        }
        out
    }

    /// The set article `id` has in fold `held_out`.
    pub fn fold_article_set(&self, held_out: usize, id: &ArticleId) -> Option<Cow<'_, NGramSet>> {
        if self.pairs[held_out].relevant.contains(id) {
            self.fold_overrides(held_out).remove(id).map(Cow::Owned)
        } else {
            self.full.article_set(id).map(Cow::Borrowed)
        }
    }

    /// Held-out question set, dictionary-expanded.
    pub fn query_set(&self, i: usize, dictionary: &TermDictionary) -> NGramSet {
        expand_question(&self.question_sets[i], dictionary)
    }

    /// Full ranking of every article for fold `i`.
    pub fn rank_fold(&self, i: usize, params: &RankerParams, dictionary: &TermDictionary) -> Vec<ranker::RankedEntry> {
        let q = self.query_set(i, dictionary);
        self.full.rank_all_with(params, &q, &self.fold_overrides(i))
    }

    /// Ranked top list and filtered answer for fold `i`.
    pub fn retrieve_fold(&self, i: usize, params: &RankerParams, dictionary: &TermDictionary) -> (RankedList, Vec<ArticleId>) {
        let ranked = RankedList::new(self.rank_fold(i, params, dictionary));
        let answer = ranker::filter(&ranked, &self.full, params);
        (ranked, answer)
    }
}

fn require_pairs(pairs: &[TrainingPair]) -> Result<()> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!("leave-one-out needs at least 2 pairs, got {}", pairs.len())));
    }
    Ok(())
}

/// Leave-one-out retrieval over a prepared context.
pub fn loo_retrieval_ctx(ctx: &LooContext<'_>, params: &RankerParams, dictionary: &TermDictionary) -> Result<EvalReport> {
    require_pairs(ctx.pairs)?;
    let per_query = (0..ctx.pairs.len())
        .into_par_iter()
        .map(|i| {
            let (_, answer) = ctx.retrieve_fold(i, params, dictionary);
            let p = &ctx.pairs[i];
            QueryLog {
                qid: p.qid.clone(),
                retrieved: answer,
                gold: p.relevant.iter().cloned().collect(),
                predicted: None,
                margin: None,
                gold_label: p.label,
            }
        })
        .collect();
    Ok(EvalReport::retrieval("retrieval", per_query))
}

pub fn loo_retrieval(
    corpus: &Corpus,
    pairs: &[TrainingPair],
    params: &RankerParams,
    dictionary: &TermDictionary,
    pipeline: &TextPipeline,
) -> Result<EvalReport> {
    params.validate()?;
    require_pairs(pairs)?;
    let ctx = LooContext::new(corpus, pairs, params.k, pipeline)?;
    loo_retrieval_ctx(&ctx, params, dictionary)
}

/// Leave-one-out retrieval where the answer is the unfiltered top `n`.
pub fn top_n_report(ctx: &LooContext<'_>, params: &RankerParams, n: usize, dictionary: &TermDictionary) -> Result<EvalReport> {
    if n < 1 {
        return Err(Error::InvalidParams("top-n must be at least 1".into()));
    }
    require_pairs(ctx.pairs)?;
    let per_query = (0..ctx.pairs.len())
        .into_par_iter()
        .map(|i| {
            let mut ranked = ctx.rank_fold(i, params, dictionary);
            ranked.truncate(n);
            let p = &ctx.pairs[i];
            QueryLog {
                qid: p.qid.clone(),
                retrieved: ranked.into_iter().map(|e| e.id).collect(),
                gold: p.relevant.iter().cloned().collect(),
                predicted: None,
                margin: None,
                gold_label: p.label,
            }
        })
        .collect();
    Ok(EvalReport::retrieval(&format!("retrieval-top-{n}"), per_query))
}

pub fn top_n_recall(
    corpus: &Corpus,
    pairs: &[TrainingPair],
    params: &RankerParams,
    n: usize,
    dictionary: &TermDictionary,
    pipeline: &TextPipeline,
) -> Result<f64> {
    let ctx = LooContext::new(corpus, pairs, params.k, pipeline)?;
    Ok(top_n_report(&ctx, params, n, dictionary)?.recall)
}

/// How multiple evidence articles for one question become instances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvidenceMode {
    /// All evidence articles joined into one fragment.
    #[default]
    Concatenate,
    /// One instance per evidence article; predictions summed by margin.
    Separate,
}

/// Feature vectors for every labeled pair.
#[derive(Debug, Clone)]
pub struct EntailmentData {
    pub qids: Vec<String>,
    pub labels: Vec<Label>,
    /// Per pair, one vector per evidence fragment.
    pub vectors: Vec<Vec<FeatureVector>>,
}

/// Everything needed to compute features.
#[derive(Clone, Copy)]
pub struct FeatureContext<'a> {
    pub corpus: &'a Corpus,
    pub model: &'a NGramModel,
    pub embeddings: &'a EmbeddingTable,
    pub pipeline: &'a TextPipeline,
    pub similarity: SimilarityMode,
}

impl FeatureContext<'_> {
    pub fn fragments(&self, ids: &[ArticleId], mode: EvidenceMode) -> Vec<String> {
        let texts: Vec<String> = ids.iter().filter_map(|id| self.corpus.get(id)).map(|a| a.content()).collect();
        match mode {
            EvidenceMode::Concatenate => vec![texts.join("\n")],
            EvidenceMode::Separate if texts.is_empty() => vec![String::new()],
            EvidenceMode::Separate => texts,
        }
    }

    pub fn vectors(&self, question: &str, ids: &[ArticleId], mode: EvidenceMode) -> Vec<FeatureVector> {
        self.fragments(ids, mode)
            .iter()
            .map(|text| {
                let p = entail::prepare(question, text, self.pipeline);
                entail::features(&p, self.model, self.embeddings, self.similarity)
            })
            .collect()
    }

    /// Features of every labeled pair against its gold articles.
    pub fn gold_data(&self, pairs: &[TrainingPair], mode: EvidenceMode) -> Result<EntailmentData> {
        let mut labels = Vec::with_capacity(pairs.len());
        for p in pairs {
            labels.push(p.label.ok_or_else(|| Error::MissingLabel(p.qid.clone()))?);
        }
        let vectors = pairs
            .par_iter()
            .map(|p| {
                let ids: Vec<ArticleId> = p.relevant.iter().cloned().collect();
                self.vectors(&p.question, &ids, mode)
            })
            .collect();
        Ok(EntailmentData { qids: pairs.iter().map(|p| p.qid.clone()).collect(), labels, vectors })
    }
}

fn instances_except(data: &EntailmentData, held_out: Option<usize>, ablate: Option<usize>) -> Vec<Instance> {
    let mut out = Vec::new();
    for (i, (vs, &label)) in data.vectors.iter().zip(&data.labels).enumerate() {
        if Some(i) == held_out {
            continue;
        }
        for v in vs {
            let v = ablate.map_or(*v, |f| v.without(f));
            out.push(Instance::new(v.values.to_vec(), label));
        }
    }
    out
}

/// Sums signed margins over the evidence vectors of one question.
pub fn predict_vectors(model: &boost::BoostModel, vectors: &[FeatureVector], ablate: Option<usize>) -> Result<(Label, f64)> {
    if vectors.len() == 1 {
        let v = ablate.map_or(vectors[0], |f| vectors[0].without(f));
        return model.predict(&v.values);
    }
    let mut vote = 0.0;
    for v in vectors {
        let v = ablate.map_or(*v, |f| v.without(f));
        let (l, m) = model.predict(&v.values)?;
        vote += l.sign() * m;
    }
    let label = if vote >= 0.0 { Label::Yes } else { Label::No };
    Ok((label, (vote / vectors.len().max(1) as f64).abs()))
}

/// Leave-one-out predictions: fold `i` trains on every other pair.
pub fn loo_predictions(data: &EntailmentData, config: &BoostConfig, ablate: Option<usize>) -> Result<Vec<(Label, f64)>> {
    if data.labels.len() < 2 {
        return Err(Error::InsufficientData("leave-one-out needs at least 2 pairs".into()));
    }
    (0..data.labels.len())
        .into_par_iter()
        .map(|i| {
            let train = instances_except(data, Some(i), ablate);
            let model = boost::train(&train, config)?;
            predict_vectors(&model, &data.vectors[i], ablate)
        })
        .collect()
}

fn entailment_report(task: &str, data: &EntailmentData, gold: &[Vec<ArticleId>], preds: &[(Label, f64)]) -> EvalReport {
    let per_query = data
        .qids
        .iter()
        .zip(&data.labels)
        .zip(preds)
        .zip(gold)
        .map(|(((qid, &label), &(p, m)), gold)| QueryLog {
            qid: qid.clone(),
            retrieved: gold.clone(),
            gold: gold.clone(),
            predicted: Some(p),
            margin: Some(m),
            gold_label: Some(label),
        })
        .collect();
    EvalReport::entailment(task, per_query)
}

/// Entailment with gold articles as evidence.
pub fn loo_entailment(fc: &FeatureContext<'_>, pairs: &[TrainingPair], config: &BoostConfig, mode: EvidenceMode) -> Result<EvalReport> {
    let data = fc.gold_data(pairs, mode)?;
    loo_entailment_data(&data, pairs, config)
}

pub fn loo_entailment_data(data: &EntailmentData, pairs: &[TrainingPair], config: &BoostConfig) -> Result<EvalReport> {
    let preds = loo_predictions(data, config, None)?;
    let gold: Vec<Vec<ArticleId>> = pairs.iter().map(|p| p.relevant.iter().cloned().collect()).collect();
    Ok(entailment_report("entailment", data, &gold, &preds))
}

/// Retrieval for the held-out question, then entailment against what was
/// retrieved, with the classifier trained on the other pairs' gold evidence.
pub fn loo_combined(
    ctx: &LooContext<'_>,
    fc: &FeatureContext<'_>,
    params: &RankerParams,
    dictionary: &TermDictionary,
    config: &BoostConfig,
    mode: EvidenceMode,
) -> Result<EvalReport> {
    let pairs = ctx.pairs();
    let data = fc.gold_data(pairs, mode)?;
    if pairs.len() < 2 {
        return Err(Error::InsufficientData("leave-one-out needs at least 2 pairs".into()));
    }
    let per_query = (0..pairs.len())
        .into_par_iter()
        .map(|i| -> Result<QueryLog> {
            let (_, answer) = ctx.retrieve_fold(i, params, dictionary);
            let model = boost::train(&instances_except(&data, Some(i), None), config)?;
            let vectors = fc.vectors(&pairs[i].question, &answer, mode);
            let (p, m) = predict_vectors(&model, &vectors, None)?;
            Ok(QueryLog {
                qid: pairs[i].qid.clone(),
                retrieved: answer,
                gold: pairs[i].relevant.iter().cloned().collect(),
                predicted: Some(p),
                margin: Some(m),
                gold_label: Some(data.labels[i]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::entailment("combined", per_query))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub feature: String,
    /// F-measure with all features minus F-measure without this one.
    pub delta_f: f64,
}

/// Reruns leave-one-out entailment with each feature zeroed in turn.
pub fn feature_ablation(data: &EntailmentData, config: &BoostConfig) -> Result<Vec<AblationEntry>> {
    let f_of = |ablate: Option<usize>| -> Result<f64> {
        let preds = loo_predictions(data, config, ablate)?;
        let mut c = Confusion::default();
        for (&g, &(p, _)) in data.labels.iter().zip(&preds) {
            c.add(g, p);
        }
        let (p, r) = c.macro_precision_recall();
        Ok(f_measure(p, r))
    };
    let all = f_of(None)?;
    (0..NUM_FEATURES).map(|i| Ok(AblationEntry { feature: FEATURE_NAMES[i].to_string(), delta_f: all - f_of(Some(i))? })).collect()
}
