//! Command-line interface.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::boost::{self, BoostConfig, BoostModel};
use crate::corpus::{load_pairs, ArticleId, Corpus, TrainingPair};
use crate::embed::{EmbeddingTable, SimilarityMode};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::eval::{self, EvidenceMode, FeatureContext, LooContext};
use crate::ranker::{build_model, NGramModel, RankerParams, TermDictionary};
use crate::textpipe::TextPipeline;
use crate::tuner::{self, TuneConfig};

#[derive(Debug, Parser)]
#[command(name = "lexqa", version, about = "Statute retrieval and yes/no entailment")]
pub struct Cli {
    /// Replacement stopword list, one word per line.
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    /// Replacement lemmatizer exception table, `form lemma` per line.
    #[arg(long, global = true)]
    pub lemmas: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Retrieval,
    Entailment,
    Combined,
    TopN,
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Evidence {
    Concat,
    Separate,
}

impl From<Evidence> for EvidenceMode {
    fn from(e: Evidence) -> Self {
        match e {
            Evidence::Concat => EvidenceMode::Concatenate,
            Evidence::Separate => EvidenceMode::Separate,
        }
    }
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub statutes: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Ranker parameters JSON; defaults to the built-in values.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Question-side term dictionary JSON.
    #[arg(long)]
    pub dict: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Question text; repeatable.
    #[arg(long = "question", short = 'q')]
    pub questions: Vec<String>,
    /// JSONL pairs whose questions are queried.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and save the article model.
    Build {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Training pairs used to expand article sets.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        /// Largest n-gram size; overrides the params file.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        model: PathBuf,
    },
    /// Tune ranker parameters against leave-one-out F-measure.
    Tune {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: PathBuf,
        /// Starting parameters; defaults to the search start point.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        dict: Option<PathBuf>,
        #[arg(long, default_value_t = tuner::DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        sweeps: usize,
        /// Where to write the tuned parameters.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the step trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Rank articles for questions.
    Retrieve {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        rank: RankArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Rows of the ranking to print.
        #[arg(long, default_value_t = 3)]
        top_n: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Train the entailment classifier on labeled pairs with gold evidence.
    EntailTrain {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Evidence::Concat)]
        evidence: Evidence,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        /// Where to write the classifier.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify pairs against their listed articles.
    EntailPredict {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        boost: PathBuf,
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_enum, default_value_t = Evidence::Concat)]
        evidence: Evidence,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the feature vector of question/article pairs.
    Features {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Retrieve, then classify against the retrieved articles.
    Answer {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        boost: PathBuf,
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        rank: RankArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Leave-one-out evaluation.
    Eval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, value_enum, default_value_t = Task::Retrieval)]
        task: Task,
        #[command(flatten)]
        rank: RankArgs,
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Cutoff for the top-n task.
        #[arg(long, default_value_t = 3)]
        top_n: usize,
        #[arg(long, value_enum, default_value_t = Evidence::Concat)]
        evidence: Evidence,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Answer questions read from standard input, one per line.
    Repl {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        boost: Option<PathBuf>,
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        rank: RankArgs,
    },
}

#[derive(Debug, Args)]
pub struct TargetArgs {
    /// Question text, used with --articles.
    #[arg(long, short = 'q', requires = "articles")]
    pub question: Option<String>,
    /// Comma-separated article ids.
    #[arg(long, value_delimiter = ',')]
    pub articles: Vec<String>,
    /// JSONL pairs; each question is paired with its listed articles.
    #[arg(long, conflicts_with = "question")]
    pub pairs: Option<PathBuf>,
}

/// Exit code for an error: 2 for I/O, 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        2
    } else {
        1
    }
}

struct Timer(&'static str, Instant);

impl Timer {
    fn start(label: &'static str) -> Self {
        Timer(label, Instant::now())
    }
}

impl Drop for Timer {
    fn drop(&mut self) {
        eprintln!("[time] {}: {:.3}s", self.0, self.1.elapsed().as_secs_f64());
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_params(path: Option<&Path>) -> Result<RankerParams> {
    path.map_or_else(|| Ok(RankerParams::default()), RankerParams::load)
}

fn load_dict(path: Option<&Path>, pipeline: &TextPipeline) -> Result<TermDictionary> {
    path.map_or_else(|| Ok(TermDictionary::new()), |p| TermDictionary::load(p, pipeline))
}

fn load_vectors(path: Option<&Path>) -> Result<EmbeddingTable> {
    path.map_or_else(|| Ok(EmbeddingTable::default()), EmbeddingTable::load)
}

fn questions(q: &QueryArgs, corpus: Option<&Corpus>) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = q.questions.iter().enumerate().map(|(i, s)| (format!("q{}", i + 1), s.clone())).collect();
    if let Some(p) = &q.pairs {
        out.extend(load_pairs(p, corpus)?.into_iter().map(|p| (p.qid, p.question)));
    }
    if out.is_empty() {
        return Err(Error::InvalidParams("no questions given; use --question or --pairs".into()));
    }
    Ok(out)
}

fn targets(t: &TargetArgs, corpus: &Corpus) -> Result<Vec<TrainingPair>> {
    if let Some(p) = &t.pairs {
        return load_pairs(p, Some(corpus));
    }
    let Some(q) = &t.question else {
        return Err(Error::InvalidParams("give --question with --articles, or --pairs".into()));
    };
    Ok(vec![TrainingPair {
        qid: "q1".into(),
        question: q.clone(),
        relevant: t.articles.iter().map(|a| ArticleId::new(a.trim())).collect(),
        label: None,
        unresolved: Default::default(),
    }])
}

fn engine(
    pipeline: &TextPipeline,
    statutes: &Path,
    model: &Path,
    rank: Option<&RankArgs>,
    vectors: Option<&Path>,
    boost: Option<&Path>,
) -> Result<Engine> {
    let corpus = Corpus::load(statutes)?;
    let model = NGramModel::load(model)?;
    let mut params = load_params(rank.and_then(|r| r.params.as_deref()))?;
    if rank.is_none_or(|r| r.params.is_none()) {
        params.k = model.k();
    }
    let mut e = Engine::new(corpus, model, params, pipeline.clone())?;
    e.dictionary = load_dict(rank.and_then(|r| r.dict.as_deref()), pipeline)?;
    e.embeddings = load_vectors(vectors)?;
    e.boost = boost.map(BoostModel::load).transpose()?;
    Ok(e)
}

/// One compact JSON record per line.
fn json_lines(out: &mut dyn Write, rows: &[serde_json::Value]) -> Result<()> {
    for r in rows {
        writeln!(out, "{}", serde_json::to_string(r)?).map_err(out_err)?;
    }
    Ok(())
}

fn join_ids(ids: &[ArticleId]) -> String {
    ids.iter().map(ArticleId::as_str).collect::<Vec<_>>().join(",")
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let pipeline = TextPipeline::with_overrides(cli.stopwords.as_deref(), cli.lemmas.as_deref())?;
    match cli.command {
        Command::Build { corpus, pairs, params, k, model } => {
            let _t = Timer::start("build");
            let c = Corpus::load(&corpus.statutes)?;
            let pairs = pairs.map(|p| load_pairs(p, Some(&c))).transpose()?.unwrap_or_default();
            let k = k.unwrap_or(load_params(params.as_deref())?.k);
            let m = build_model(&c, k, &pairs, &pipeline)?;
            m.save(&model)?;
            writeln!(out, "articles {}  k {}  vocabulary {}  pairs {}", m.n_articles(), m.k(), m.vocabulary_size(), pairs.len())
                .map_err(out_err)?;
            for (citing, cited) in c.unresolved() {
                log::warn!("article {citing} cites missing article {cited}");
            }
        }
        Command::Tune { corpus, pairs, params, dict, budget, sweeps, out: path, trace } => {
            let _t = Timer::start("tune");
            let c = Corpus::load(&corpus.statutes)?;
            let pairs = load_pairs(pairs, Some(&c))?;
            let initial = params.as_deref().map(RankerParams::load).transpose()?;
            let dictionary = load_dict(dict.as_deref(), &pipeline)?;
            let t = tuner::tune(&c, &pairs, initial.as_ref(), &dictionary, &pipeline, &TuneConfig { budget, sweeps })?;
            t.final_params.save(&path)?;
            if let Some(tp) = trace {
                write_file(&tp, &(serde_json::to_string_pretty(&t)? + "\n"))?;
            }
            for s in &t.steps {
                writeln!(out, "{:<17} {:.4} -> {:.4}  F {:.4}", s.param.name(), s.old, s.new, s.f_measure).map_err(out_err)?;
            }
            let p = &t.final_params;
            writeln!(
                out,
                "final k {} i_q {:.4} i_art {:.4} ct {:.4} rt {:.4}  F {:.4}  evaluations {}{}",
                p.k,
                p.i_q,
                p.i_art,
                p.confidence_thresh,
                p.reference_thresh,
                t.final_f,
                t.evaluations,
                if t.budget_exhausted { " (budget exhausted)" } else { "" }
            )
            .map_err(out_err)?;
        }
        Command::Retrieve { model, rank, query, top_n, format } => {
            let m = NGramModel::load(&model)?;
            let mut params = load_params(rank.params.as_deref())?;
            if rank.params.is_none() {
                params.k = m.k();
            }
            if params.k != m.k() {
                return Err(Error::InvalidParams(format!("model k = {} but params k = {}", m.k(), params.k)));
            }
            let dictionary = load_dict(rank.dict.as_deref(), &pipeline)?;
            let mut results = Vec::new();
            for (qid, q) in questions(&query, None)? {
                let ranked = m.rank(&params, &q, &pipeline, &dictionary);
                let answer = crate::ranker::filter(&ranked, &m, &params);
                results.push(serde_json::json!({
                    "qid": qid,
                    "ranked": ranked.entries.iter().take(top_n).collect::<Vec<_>>(),
                    "answer": answer,
                }));
                if format == Format::Text {
                    writeln!(out, "{qid}\tanswer {}", join_ids(&answer)).map_err(out_err)?;
                    for (i, e) in ranked.entries.iter().take(top_n).enumerate() {
                        writeln!(out, "  {:>2}. {:<8} {:.4}", i + 1, e.id, e.score).map_err(out_err)?;
                    }
                }
            }
            if format == Format::Json {
                json_lines(out, &results)?;
            }
        }
        Command::EntailTrain { corpus, pairs, model, vectors, evidence, iterations, out: path } => {
            let _t = Timer::start("entail-train");
            let c = Corpus::load(&corpus.statutes)?;
            let pairs = load_pairs(pairs, Some(&c))?;
            let m = NGramModel::load(&model)?;
            let emb = load_vectors(vectors.as_deref())?;
            let fc = FeatureContext { corpus: &c, model: &m, embeddings: &emb, pipeline: &pipeline, similarity: SimilarityMode::BestMatch };
            let data = fc.gold_data(&pairs, evidence.into())?;
            let instances: Vec<boost::Instance> = data
                .vectors
                .iter()
                .zip(&data.labels)
                .flat_map(|(vs, &l)| vs.iter().map(move |v| boost::Instance::new(v.values.to_vec(), l)))
                .collect();
            let config = BoostConfig { iterations, ..BoostConfig::default() };
            let b = boost::train(&instances, &config)?;
            b.save(&path)?;
            writeln!(out, "instances {}  rounds {}  training error {:.4}", instances.len(), b.rounds.len(), b.training_error(&instances)?)
                .map_err(out_err)?;
        }
        Command::EntailPredict { corpus, model, boost, vectors, target, evidence, format } => {
            let mut e = engine(&pipeline, &corpus.statutes, &model, None, vectors.as_deref(), Some(&boost))?;
            e.evidence = evidence.into();
            let mut results = Vec::new();
            for p in targets(&target, &e.corpus)? {
                let ids: Vec<ArticleId> = p.relevant.iter().cloned().collect();
                let (label, margin) = e.entail(&p.question, &ids)?;
                if format == Format::Text {
                    let gold = p.label.map(|l| format!("  gold {l}")).unwrap_or_default();
                    writeln!(out, "{}\t{label}\tmargin {margin:.4}{gold}", p.qid).map_err(out_err)?;
                }
                results.push(serde_json::json!({"qid": p.qid, "label": label, "margin": margin, "gold": p.label}));
            }
            if format == Format::Json {
                json_lines(out, &results)?;
            }
        }
        Command::Features { corpus, model, vectors, target, format } => {
            let e = engine(&pipeline, &corpus.statutes, &model, None, vectors.as_deref(), None)?;
            let mut results = Vec::new();
            for p in targets(&target, &e.corpus)? {
                let ids: Vec<ArticleId> = p.relevant.iter().cloned().collect();
                for v in e.features(&p.question, &ids)? {
                    if format == Format::Text {
                        writeln!(out, "{}", p.qid).map_err(out_err)?;
                        for (name, x) in v.named() {
                            writeln!(out, "  {name:<20} {x:.4}").map_err(out_err)?;
                        }
                    }
                    let named: serde_json::Map<String, serde_json::Value> =
                        v.named().map(|(n, x)| (n.to_string(), serde_json::json!(x))).collect();
                    results.push(serde_json::json!({"qid": p.qid, "features": named}));
                }
            }
            if format == Format::Json {
                json_lines(out, &results)?;
            }
        }
        Command::Answer { corpus, model, boost, vectors, rank, query, format } => {
            let e = engine(&pipeline, &corpus.statutes, &model, Some(&rank), vectors.as_deref(), Some(&boost))?;
            let mut results = Vec::new();
            for (qid, q) in questions(&query, Some(&e.corpus))? {
                let a = e.answer(&q)?;
                if format == Format::Text {
                    writeln!(out, "{qid}\t{}\tmargin {:.4}\tarticles {}", a.label, a.margin, join_ids(&a.retrieved)).map_err(out_err)?;
                }
                results.push(serde_json::json!({"qid": qid, "answer": a}));
            }
            if format == Format::Json {
                json_lines(out, &results)?;
            }
        }
        Command::Eval { corpus, pairs, task, rank, vectors, top_n, evidence, format, out: path } => {
            let _t = Timer::start("eval");
            let c = Corpus::load(&corpus.statutes)?;
            let pairs = load_pairs(pairs, Some(&c))?;
            let params = load_params(rank.params.as_deref())?;
            let dictionary = load_dict(rank.dict.as_deref(), &pipeline)?;
            let emb = load_vectors(vectors.as_deref())?;
            let ctx = LooContext::new(&c, &pairs, params.k, &pipeline)?;
            let fc = FeatureContext {
                corpus: &c,
                model: ctx.full_model(),
                embeddings: &emb,
                pipeline: &pipeline,
                similarity: SimilarityMode::BestMatch,
            };
            let config = BoostConfig::default();
            let mode = EvidenceMode::from(evidence);
            let text = match task {
                Task::Ablation => {
                    let entries = eval::feature_ablation(&fc.gold_data(&pairs, mode)?, &config)?;
                    match format {
                        Format::Json => serde_json::to_string_pretty(&entries)? + "\n",
                        Format::Text => entries.iter().map(|e| format!("{:<20} {:+.4}\n", e.feature, e.delta_f)).collect(),
                    }
                }
                _ => {
                    let report = match task {
                        Task::Retrieval => eval::loo_retrieval_ctx(&ctx, &params, &dictionary)?,
                        Task::TopN => eval::top_n_report(&ctx, &params, top_n, &dictionary)?,
                        Task::Entailment => eval::loo_entailment(&fc, &pairs, &config, mode)?,
                        Task::Combined => eval::loo_combined(&ctx, &fc, &params, &dictionary, &config, mode)?,
                        Task::Ablation => unreachable!(),
                    };
                    match format {
                        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                        Format::Text => report.table(),
                    }
                }
            };
            out.write_all(text.as_bytes()).map_err(out_err)?;
            if let Some(p) = path {
                write_file(&p, &text)?;
            }
        }
        Command::Repl { corpus, model, boost, vectors, rank } => {
            let e = engine(&pipeline, &corpus.statutes, &model, Some(&rank), vectors.as_deref(), boost.as_deref())?;
            let stdin = std::io::stdin();
            for line in stdin.lock().lines() {
                let line = line.map_err(|err| Error::io("<stdin>", err))?;
                let q = line.trim();
                if q.is_empty() {
                    continue;
                }
                let r = e.retrieve(q);
                write!(out, "articles {}", join_ids(&r.answer)).map_err(out_err)?;
                if let Some(top) = r.ranked.first() {
                    write!(out, "  top score {:.4}", top.score).map_err(out_err)?;
                }
                if e.boost.is_some() {
                    let (label, margin) = e.entail(q, &r.answer)?;
                    write!(out, "  {label} (margin {margin:.4})").map_err(out_err)?;
                }
                writeln!(out).map_err(out_err)?;
                out.flush().map_err(out_err)?;
            }
        }
    }
    Ok(())
}
