use std::path::Path;

use lexqa::boost::{self, BoostConfig, Instance};
use lexqa::corpus::{load_pairs, parse_statutes, ArticleId, Corpus, TrainingPair};
use lexqa::embed::{EmbeddingTable, SimilarityMode};
use lexqa::eval::{self, EvidenceMode, FeatureContext, LooContext};
use lexqa::ranker::{build_model, NGramModel, RankerParams, TermDictionary, TOP_N};
use lexqa::textpipe::{self, TextPipeline};
use lexqa::Error;

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

fn corpus_and_pairs() -> (Corpus, Vec<TrainingPair>) {
    let c = Corpus::load(fixtures().join("statutes.txt")).unwrap();
    let p = load_pairs(fixtures().join("pairs.jsonl"), Some(&c)).unwrap();
    (c, p)
}

fn id(s: &str) -> ArticleId {
    ArticleId::new(s)
}

#[test]
fn fixture_parses_titles_refs_and_ranges() {
    let (c, pairs) = corpus_and_pairs();
    assert_eq!(c.len(), 20);
    let a702 = c.get(&id("702")).unwrap();
    assert_eq!(a702.title.as_deref(), Some("Manager's Claims for Reimbursement of Costs"));
    assert_eq!(c.resolved_refs(&id("702")), [id("650")].into());
    assert_eq!(c.get(&id("701")).unwrap().refs, [id("645"), id("646"), id("647")].into());
    assert!(c.resolved_refs(&id("701")).is_empty());
    assert_eq!(c.unresolved().len(), 3);
    assert_eq!(pairs.len(), 16);
    assert!(pairs.iter().all(|p| p.unresolved.is_empty() && p.label.is_some()));
    let again = parse_statutes(&c.to_statute_text()).unwrap();
    assert_eq!(again, c);
}

#[test]
fn expansion_follows_refs_then_training_questions() {
    let (c, pairs) = corpus_and_pairs();
    let pl = TextPipeline::shared();
    let bare = build_model(&c, 2, &[], pl).unwrap();
    let base = |i: &str| pl.process(&c.get(&id(i)).unwrap().content(), 2).unwrap();
    let mut want = base("702");
    want.union_with(&base("650"));
    assert_eq!(bare.article_set(&id("702")).unwrap(), &want);
    // One level only: 650 cites nothing, so its set is its base.
    assert_eq!(bare.article_set(&id("650")).unwrap(), &base("650"));

    let trained = build_model(&c, 2, &pairs, pl).unwrap();
    for p in &pairs {
        let q = pl.process(&p.question, 2).unwrap();
        for r in &p.relevant {
            assert!(q.is_subset(trained.article_set(r).unwrap()));
        }
    }
    // Document frequencies ignore expansion.
    for g in trained.article_set(&id("702")).unwrap().iter() {
        assert_eq!(trained.df(g), bare.df(g));
    }
}

#[test]
fn ranking_returns_top_ten_of_twenty() {
    let (c, pairs) = corpus_and_pairs();
    let m = build_model(&c, 3, &pairs, TextPipeline::shared()).unwrap();
    let r = m.rank(&RankerParams::default(), "manager principal expense", TextPipeline::shared(), &TermDictionary::new());
    assert_eq!(r.len(), TOP_N);
    assert!(r.entries.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn model_json_round_trip_and_version_check() {
    let (c, pairs) = corpus_and_pairs();
    let m = build_model(&c, 2, &pairs, TextPipeline::shared()).unwrap();
    let text = m.to_json().unwrap();
    let back = NGramModel::from_json(&text).unwrap();
    assert_eq!(back.to_json().unwrap(), text);
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["format_version"] = 99.into();
    let bumped = v.to_string();
    assert!(matches!(NGramModel::from_json(&bumped), Err(Error::ModelVersion { found: 99, .. })));
}

#[test]
fn fold_view_matches_naive_rebuild() {
    let (c, pairs) = corpus_and_pairs();
    let pl = TextPipeline::shared();
    let dict = TermDictionary::load(fixtures().join("dict.json"), pl).unwrap();
    for k in [1, 3] {
        let params = RankerParams { k, ..RankerParams::default() };
        let ctx = LooContext::new(&c, &pairs, k, pl).unwrap();
        for i in 0..pairs.len() {
            let others: Vec<TrainingPair> = pairs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            let naive = build_model(&c, k, &others, pl).unwrap();
            let q = ctx.query_set(i, &dict);
            assert_eq!(ctx.rank_fold(i, &params, &dict), naive.rank_all(&params, &q), "fold {i}, k {k}");
        }
    }
}

#[test]
fn top_n_counts_gold_at_rank_four_only_for_larger_n() {
    let c = parse_statutes(
        "Article 1 alpha beta gamma.\nArticle 2 alpha beta delta.\nArticle 3 alpha beta epsilon.\n\
         Article 4 alpha omega.\nArticle 5 kappa lambda.\nArticle 6 sigma tau.\nArticle 7 upsilon phi.",
    )
    .unwrap();
    let pairs = vec![
        TrainingPair {
            qid: "a".into(),
            question: "alpha beta".into(),
            relevant: [id("4")].into(),
            label: None,
            unresolved: Default::default(),
        },
        TrainingPair { qid: "b".into(), question: "kappa".into(), relevant: [id("5")].into(), label: None, unresolved: Default::default() },
    ];
    let p = RankerParams { k: 1, ..RankerParams::default() };
    let ctx = LooContext::new(&c, &pairs, 1, TextPipeline::shared()).unwrap();
    let ranked = ctx.rank_fold(0, &p, &TermDictionary::new());
    assert_eq!(ranked[3].id, id("4"), "{ranked:?}");
    let recall = |n| eval::top_n_report(&ctx, &p, n, &TermDictionary::new()).unwrap();
    let r3 = recall(3);
    let r10 = recall(10);
    assert_eq!(r3.per_query[0].retrieved.len(), 3);
    assert!(!r3.per_query[0].retrieved.contains(&id("4")));
    assert!(r10.per_query[0].retrieved.contains(&id("4")));
    assert!(r10.recall > r3.recall);
    assert!(eval::top_n_report(&ctx, &p, 0, &TermDictionary::new()).is_err());
}

fn fixture_instances() -> Vec<Instance> {
    let (c, pairs) = corpus_and_pairs();
    let m = build_model(&c, 3, &pairs, TextPipeline::shared()).unwrap();
    let emb = EmbeddingTable::load(fixtures().join("vectors50.txt")).unwrap();
    let fc =
        FeatureContext { corpus: &c, model: &m, embeddings: &emb, pipeline: TextPipeline::shared(), similarity: SimilarityMode::BestMatch };
    let data = fc.gold_data(&pairs, EvidenceMode::Concatenate).unwrap();
    data.vectors.iter().zip(&data.labels).map(|(v, &l)| Instance::new(v[0].values.to_vec(), l)).collect()
}

#[test]
fn boosting_on_fixture_features() {
    let data = fixture_instances();
    let (model, stats) = boost::train_with_stats(&data, &BoostConfig::default()).unwrap();
    assert!(!model.rounds.is_empty() && model.rounds.len() <= 10);
    for s in &stats {
        assert!((s.weight_sum - 1.0).abs() <= 1e-9);
        assert!(s.error < 0.5 || model.rounds.len() == 1);
    }
    // Training error may rise between rounds; the product bound may not.
    let mut bound = 1.0;
    for (n, s) in stats.iter().enumerate() {
        let next = bound * 2.0 * (s.error * (1.0 - s.error)).sqrt();
        assert!(next <= bound + 1e-12);
        bound = next;
        let err = model.truncated(n + 1).training_error(&data).unwrap();
        assert!(err <= bound + 1e-12, "round {}: error {err} above bound {bound}", n + 1);
    }
    let back = lexqa::BoostModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back, model);
}

#[test]
fn single_article_evidence_modes_agree() {
    let (c, pairs) = corpus_and_pairs();
    let m = build_model(&c, 3, &pairs, TextPipeline::shared()).unwrap();
    let emb = EmbeddingTable::default();
    let fc =
        FeatureContext { corpus: &c, model: &m, embeddings: &emb, pipeline: TextPipeline::shared(), similarity: SimilarityMode::BestMatch };
    let single: Vec<TrainingPair> = pairs.into_iter().filter(|p| p.relevant.len() == 1).collect();
    let a = eval::loo_entailment(&fc, &single, &BoostConfig::default(), EvidenceMode::Concatenate).unwrap();
    let b = eval::loo_entailment(&fc, &single, &BoostConfig::default(), EvidenceMode::Separate).unwrap();
    assert_eq!(a.confusion, b.confusion);
    assert_eq!(a.accuracy, b.accuracy);
}

#[test]
fn canary_lemma_is_a_single_token() {
    assert_eq!(textpipe::lemmatize("zzcanaryax"), "zzcanaryax");
}
