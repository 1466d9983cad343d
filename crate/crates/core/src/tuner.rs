//! Coordinate-descent tuning of the ranker parameters against
//! leave-one-out retrieval F-measure.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TrainingPair};
use crate::error::{Error, Result};
use crate::eval::{self, LooContext};
use crate::ranker::{RankerParams, TermDictionary};
use crate::textpipe::TextPipeline;

pub const DEFAULT_BUDGET: usize = 500;
pub const K_RANGE: (usize, usize) = (1, 5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    ConfidenceThresh,
    K,
    ReferenceThresh,
    IQ,
}

impl Param {
    /// Tuning order.
    pub const ORDER: [Param; 4] = [Param::ConfidenceThresh, Param::K, Param::ReferenceThresh, Param::IQ];

    pub fn name(self) -> &'static str {
        match self {
            Param::ConfidenceThresh => "confidence_thresh",
            Param::K => "k",
            Param::ReferenceThresh => "reference_thresh",
            Param::IQ => "i_q",
        }
    }

    fn get(self, p: &RankerParams) -> f64 {
        match self {
            Param::ConfidenceThresh => p.confidence_thresh,
            Param::K => p.k as f64,
            Param::ReferenceThresh => p.reference_thresh,
            Param::IQ => p.i_q,
        }
    }

    /// Returns `p` with this parameter set to `v`, clamped and rounded to the
    /// micro grid. `i_art` always follows `i_q`.
    fn set(self, p: &RankerParams, v: f64) -> RankerParams {
        let mut out = *p;
        match self {
            Param::ConfidenceThresh => out.confidence_thresh = snap(v),
            Param::K => out.k = (v.round() as i64).clamp(K_RANGE.0 as i64, K_RANGE.1 as i64) as usize,
            Param::ReferenceThresh => out.reference_thresh = snap(v),
            Param::IQ => out = out.with_i_q(snap(v)),
        }
        out
    }

    fn steps(self) -> &'static [f64] {
        match self {
            Param::K => &[1.0],
            _ => &[0.1, 0.01],
        }
    }
}

fn snap(v: f64) -> f64 {
    ((v.clamp(0.0, 1.0) * 1e6).round() / 1e6).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneStep {
    pub param: Param,
    pub old: f64,
    pub new: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneTrace {
    pub initial_f: f64,
    pub steps: Vec<TuneStep>,
    /// Objective evaluations, cache hits excluded.
    pub evaluations: usize,
    pub budget_exhausted: bool,
    #[serde(rename = "final")]
    pub final_params: RankerParams,
    pub final_f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub budget: usize,
    pub sweeps: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig { budget: DEFAULT_BUDGET, sweeps: 1 }
    }
}

type Key = (usize, i64, i64, i64);

fn key(p: &RankerParams) -> Key {
    let m = |x: f64| (x * 1e6).round() as i64;
    (p.k, m(p.confidence_thresh), m(p.reference_thresh), m(p.i_q))
}

struct Search<F> {
    objective: F,
    cache: HashMap<Key, f64>,
    evaluations: usize,
    budget: usize,
}

impl<F: FnMut(&RankerParams) -> Result<f64>> Search<F> {
    /// `None` once the budget is spent on an unseen point.
    fn eval(&mut self, p: &RankerParams) -> Result<Option<f64>> {
        let k = key(p);
        if let Some(&f) = self.cache.get(&k) {
            return Ok(Some(f));
        }
        if self.evaluations >= self.budget {
            return Ok(None);
        }
        self.evaluations += 1;
        let f = (self.objective)(p)?;
        self.cache.insert(k, f);
        Ok(Some(f))
    }
}

/// Hill-climbs one parameter at a time over an arbitrary objective.
///
/// For each step size the better of the two directions is chosen first
/// (ties prefer the increase), then steps continue in that direction while
/// the objective strictly improves.
pub fn tune_with<F>(mut objective: F, initial: &RankerParams, config: &TuneConfig) -> Result<TuneTrace>
where
    F: FnMut(&RankerParams) -> Result<f64>,
{
    let start = {
        let mut p = initial.with_i_q(snap(initial.i_q));
        p.confidence_thresh = snap(p.confidence_thresh);
        p.reference_thresh = snap(p.reference_thresh);
        p.k = p.k.clamp(K_RANGE.0, K_RANGE.1);
        p
    };
    start.validate()?;
    let initial_f = objective(&start)?;
    let mut search = Search { objective, cache: HashMap::from([(key(&start), initial_f)]), evaluations: 1, budget: config.budget.max(1) };
    let mut cur = start;
    let mut cur_f = initial_f;
    let mut steps = Vec::new();
    let mut exhausted = false;

    'outer: for _ in 0..config.sweeps {
        for param in Param::ORDER {
            for &r in param.steps() {
                let v = param.get(&cur);
                let up = param.set(&cur, v + r);
                let down = param.set(&cur, v - r);
                let mut best: Option<(f64, RankerParams, f64)> = None;
                for (dir, cand) in [(1.0, up), (-1.0, down)] {
                    if key(&cand) == key(&cur) {
                        continue;
                    }
                    let Some(f) = search.eval(&cand)? else {
                        exhausted = true;
                        break 'outer;
                    };
                    if f > cur_f && best.as_ref().is_none_or(|b| f > b.2) {
                        best = Some((dir, cand, f));
                    }
                }
                let Some((dir, mut cand, mut f)) = best else { continue };
                loop {
                    steps.push(TuneStep { param, old: param.get(&cur), new: param.get(&cand), f_measure: f });
                    cur = cand;
                    cur_f = f;
                    let next = param.set(&cur, param.get(&cur) + dir * r);
                    if key(&next) == key(&cur) {
                        break;
                    }
                    match search.eval(&next)? {
                        None => {
                            exhausted = true;
                            break 'outer;
                        }
                        Some(nf) if nf > cur_f => {
                            cand = next;
                            f = nf;
                        }
                        Some(_) => break,
                    }
                }
            }
        }
    }

    Ok(TuneTrace { initial_f, steps, evaluations: search.evaluations, budget_exhausted: exhausted, final_params: cur, final_f: cur_f })
}

/// Tunes against leave-one-out retrieval F-measure on `pairs`.
pub fn tune(
    corpus: &Corpus,
    pairs: &[TrainingPair],
    initial: Option<&RankerParams>,
    dictionary: &TermDictionary,
    pipeline: &TextPipeline,
    config: &TuneConfig,
) -> Result<TuneTrace> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!("tuning needs at least 2 training pairs, got {}", pairs.len())));
    }
    let initial = initial.copied().unwrap_or_else(RankerParams::tuning_start);
    let mut contexts: HashMap<usize, LooContext<'_>> = HashMap::new();
    let objective = |p: &RankerParams| -> Result<f64> {
        let ctx = match contexts.entry(p.k) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(LooContext::new(corpus, pairs, p.k, pipeline)?),
        };
        let report = eval::loo_retrieval_ctx(ctx, p, dictionary)?;
        log::debug!("k={} i_q={:.4} ct={:.4} rt={:.4} F={:.4}", p.k, p.i_q, p.confidence_thresh, p.reference_thresh, report.f_measure);
        Ok(report.f_measure)
    };
    tune_with(objective, &initial, config)
}
