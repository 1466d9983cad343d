//! AdaBoost.M1 with decision stumps, reweighting only.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use crate::corpus::Label;
use crate::error::{Error, Result};

/// Floor applied to a zero weighted error before computing the vote weight.
pub const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Instance {
    pub fn new(features: impl Into<Vec<f64>>, label: Label) -> Self {
        Instance { features: features.into(), label }
    }
}

/// One-feature threshold rule: `x[feature] <= threshold` votes `left`,
/// otherwise `right`. A threshold of negative infinity makes a constant rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub threshold: f64,
    pub left: Label,
    pub right: Label,
}

fn ser_threshold<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_finite() {
        s.serialize_some(t)
    } else {
        s.serialize_none()
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

impl Stump {
    pub fn constant(label: Label) -> Self {
        Stump { feature_index: 0, threshold: f64::NEG_INFINITY, left: label, right: label }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        if x[self.feature_index] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Percentage of weight mass kept for training each round; only 100 (no
    /// trimming) is supported.
    pub weight_threshold: u32,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig { iterations: 10, seed: 1, weight_threshold: 100 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Round {
    #[serde(flatten)]
    pub stump: Stump,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub config: BoostConfig,
    pub rounds: Vec<Round>,
}

/// Per-round training statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub error: f64,
    pub alpha: f64,
    /// Sum of instance weights after renormalization.
    pub weight_sum: f64,
}

/// Exhaustive weighted stump search. Returns the stump and its weighted
/// error. Ties keep the lowest feature index, then the lowest threshold.
pub fn train_stump(instances: &[Instance], weights: &[f64]) -> Result<(Stump, f64)> {
    let Some(first) = instances.first() else {
        return Err(Error::InsufficientData("no training instances".into()));
    };
    if weights.len() != instances.len() {
        return Err(Error::InvalidParams(format!("{} weights for {} instances", weights.len(), instances.len())));
    }
    let dim = first.features.len();
    let (mut total_yes, mut total_no) = (0.0, 0.0);
    for (inst, w) in instances.iter().zip(weights) {
        match inst.label {
            Label::Yes => total_yes += w,
            Label::No => total_no += w,
        }
    }

    let side = |yes: f64, no: f64| -> (Label, f64) {
        if yes >= no {
            (Label::Yes, no)
        } else {
            (Label::No, yes)
        }
    };

    let (const_label, const_err) = side(total_yes, total_no);
    let mut best = (Stump::constant(const_label), const_err);

    let mut order: Vec<usize> = (0..instances.len()).collect();
    for f in 0..dim {
        order.sort_by(|&a, &b| instances[a].features[f].total_cmp(&instances[b].features[f]));
        let (mut left_yes, mut left_no) = (0.0, 0.0);
        for (pos, &i) in order.iter().enumerate() {
            match instances[i].label {
                Label::Yes => left_yes += weights[i],
                Label::No => left_no += weights[i],
            }
            let Some(&next) = order.get(pos + 1) else { break };
            let (v, nv) = (instances[i].features[f], instances[next].features[f]);
            if v == nv {
                continue;
            }
            let threshold = v + (nv - v) / 2.0;
            let (left, el) = side(left_yes, left_no);
            let (right, er) = side(total_yes - left_yes, total_no - left_no);
            let err = el + er;
            if err < best.1 - 1e-12 {
                best = (Stump { feature_index: f, threshold, left, right }, err);
            }
        }
    }
    Ok((best.0, best.1.max(0.0)))
}

/// Trains an ensemble and returns per-round statistics alongside it.
pub fn train_with_stats(instances: &[Instance], config: &BoostConfig) -> Result<(BoostModel, Vec<RoundStats>)> {
    if instances.is_empty() {
        return Err(Error::InsufficientData("no training instances".into()));
    }
    if config.weight_threshold != 100 {
        return Err(Error::InvalidParams(format!("weight_threshold {} is not supported, only 100", config.weight_threshold)));
    }
    let dim = instances[0].features.len();
    if instances.iter().any(|i| i.features.len() != dim) {
        return Err(Error::InvalidParams("instances differ in feature count".into()));
    }
    let mut model = BoostModel { config: *config, rounds: Vec::new() };
    let mut stats = Vec::new();

    let first_label = instances[0].label;
    if instances.iter().all(|i| i.label == first_label) {
        model.rounds.push(Round { stump: Stump::constant(first_label), alpha: 1.0 });
        return Ok((model, stats));
    }

    let n = instances.len();
    let mut weights = vec![1.0 / n as f64; n];
    for _ in 0..config.iterations {
        let (stump, error) = train_stump(instances, &weights)?;
        if error >= 0.5 {
            if model.rounds.is_empty() {
                // Nothing beats chance: keep the first stump as the sole voter.
                model.rounds.push(Round { stump, alpha: 1.0 });
            }
            break;
        }
        let eps = error.max(MIN_ERROR);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        for (w, inst) in weights.iter_mut().zip(instances) {
            let agree = stump.predict(&inst.features) == inst.label;
            *w *= if agree { (-alpha).exp() } else { alpha.exp() };
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        model.rounds.push(Round { stump, alpha });
        stats.push(RoundStats { error, alpha, weight_sum: weights.iter().sum() });
    }
    Ok((model, stats))
}

pub fn train(instances: &[Instance], config: &BoostConfig) -> Result<BoostModel> {
    train_with_stats(instances, config).map(|(m, _)| m)
}

impl BoostModel {
    /// Weighted vote. Returns the label and `|vote| / sum(alpha)`; an exact
    /// zero vote is YES.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        if self.rounds.is_empty() {
            return Err(Error::EmptyModel);
        }
        let mut vote = 0.0;
        let mut total = 0.0;
        for r in &self.rounds {
            vote += r.alpha * r.stump.predict(x).sign();
            total += r.alpha;
        }
        let label = if vote >= 0.0 { Label::Yes } else { Label::No };
        let margin = if total > 0.0 { vote.abs() / total } else { 0.0 };
        Ok((label, margin))
    }

    /// Fraction of `instances` predicted wrongly.
    pub fn training_error(&self, instances: &[Instance]) -> Result<f64> {
        if instances.is_empty() {
            return Ok(0.0);
        }
        let mut wrong = 0;
        for i in instances {
            if self.predict(&i.features)?.0 != i.label {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / instances.len() as f64)
    }

    /// Model restricted to its first `n` rounds.
    pub fn truncated(&self, n: usize) -> BoostModel {
        BoostModel { config: self.config, rounds: self.rounds[..n.min(self.rounds.len())].to_vec() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: BoostModel = serde_json::from_str(text)?;
        if m.rounds.iter().any(|r| !r.alpha.is_finite()) {
            return Err(Error::InvalidParams("non-finite vote weight".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{No, Yes};

    fn data(points: &[(f64, Label)]) -> Vec<Instance> {
        points.iter().map(|&(x, l)| Instance::new(vec![x], l)).collect()
    }

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn stump_separable() {
        let d = data(&[(0.1, No), (0.9, Yes)]);
        let (s, e) = train_stump(&d, &uniform(2)).unwrap();
        assert_eq!(s.threshold, 0.5);
        assert_eq!((s.left, s.right), (No, Yes));
        assert_eq!(e, 0.0);
    }

    #[test]
    fn stump_single_class_is_constant() {
        let d = data(&[(0.1, Yes), (0.5, Yes), (0.9, Yes)]);
        let (s, e) = train_stump(&d, &uniform(3)).unwrap();
        assert_eq!(s, Stump::constant(Yes));
        assert_eq!(e, 0.0);
    }

    #[test]
    fn stump_xor_like() {
        let d = data(&[(0.0, Yes), (1.0, No), (2.0, Yes)]);
        let (_, e) = train_stump(&d, &uniform(3)).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stump_tie_prefers_lowest_feature() {
        let d = vec![Instance::new(vec![0.0, 0.0], No), Instance::new(vec![1.0, 1.0], Yes)];
        let (s, _) = train_stump(&d, &uniform(2)).unwrap();
        assert_eq!(s.feature_index, 0);
    }

    #[test]
    fn stump_errors() {
        assert!(train_stump(&[], &[]).is_err());
        assert!(train_stump(&data(&[(0.0, Yes)]), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn separable_trains_to_zero_error() {
        let d = data(&[(0.1, No), (0.2, No), (0.3, No), (0.7, Yes), (0.9, Yes)]);
        let (m, stats) = train_with_stats(&d, &BoostConfig::default()).unwrap();
        assert!(m.rounds.len() <= 10);
        assert_eq!(m.training_error(&d).unwrap(), 0.0);
        assert_eq!(m.truncated(1).training_error(&d).unwrap(), 0.0);
        for s in stats {
            assert!((s.weight_sum - 1.0).abs() < 1e-9);
        }
        let (label, margin) = m.predict(&[0.9]).unwrap();
        assert_eq!(label, Yes);
        assert!((margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_model() {
        let d = data(&[(0.1, No), (0.2, No)]);
        let m = train(&d, &BoostConfig::default()).unwrap();
        assert_eq!(m.rounds.len(), 1);
        assert_eq!(m.rounds[0].stump, Stump::constant(No));
        assert_eq!(m.predict(&[5.0]).unwrap().0, No);
    }

    #[test]
    fn first_round_alpha() {
        // Seven YES below 0.5, three NO above but one feature value is shared
        // so the best stump misclassifies exactly three of ten.
        let mut pts: Vec<(f64, Label)> = (0..7).map(|i| (i as f64, Yes)).collect();
        pts.extend([(2.0, No), (4.0, No), (6.0, No)]);
        let d = data(&pts);
        let (_, stats) = train_with_stats(&d, &BoostConfig { iterations: 1, ..Default::default() }).unwrap();
        assert!((stats[0].error - 0.3).abs() < 1e-12);
        assert!((stats[0].alpha - 0.4236).abs() < 1e-4);
    }

    #[test]
    fn predict_vote_arithmetic() {
        let m = BoostModel {
            config: BoostConfig::default(),
            rounds: vec![Round { stump: Stump::constant(Yes), alpha: 0.6 }, Round { stump: Stump::constant(No), alpha: 0.4 }],
        };
        let (l, margin) = m.predict(&[0.0]).unwrap();
        assert_eq!(l, Yes);
        assert!((margin - 0.2).abs() < 1e-12);

        let tie = BoostModel {
            config: BoostConfig::default(),
            rounds: vec![Round { stump: Stump::constant(Yes), alpha: 0.5 }, Round { stump: Stump::constant(No), alpha: 0.5 }],
        };
        assert_eq!(tie.predict(&[0.0]).unwrap(), (Yes, 0.0));

        let empty = BoostModel { config: BoostConfig::default(), rounds: vec![] };
        assert!(matches!(empty.predict(&[0.0]), Err(Error::EmptyModel)));
    }

    #[test]
    fn log_odds_votes_predict_identically() {
        let d = data(&[(0.0, Yes), (1.0, No), (2.0, Yes), (3.0, No), (4.0, No), (5.0, Yes), (6.0, Yes)]);
        let m = train(&d, &BoostConfig::default()).unwrap();
        let mut doubled = m.clone();
        for r in &mut doubled.rounds {
            r.alpha *= 2.0;
        }
        for x in [-1.0, 0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 7.0] {
            assert_eq!(m.predict(&[x]).unwrap().0, doubled.predict(&[x]).unwrap().0);
        }
    }

    #[test]
    fn json_round_trip_with_constant_stump() {
        let d = data(&[(0.0, Yes), (1.0, No), (2.0, Yes)]);
        let mut m = train(&d, &BoostConfig::default()).unwrap();
        m.rounds.push(Round { stump: Stump::constant(No), alpha: 0.1 });
        let back = BoostModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn unsupported_weight_threshold() {
        let d = data(&[(0.0, Yes), (1.0, No)]);
        assert!(train(&d, &BoostConfig { weight_threshold: 90, ..Default::default() }).is_err());
    }

    #[test]
    fn deterministic_model() {
        let d = data(&[(0.3, Yes), (1.0, No), (2.2, Yes), (3.1, No), (0.4, No)]);
        let a = train(&d, &BoostConfig::default()).unwrap();
        let b = train(&d, &BoostConfig::default()).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dataset() -> impl Strategy<Value = Vec<Instance>> {
            prop::collection::vec((prop::collection::vec(0u8..6, 2), prop::bool::ANY), 2..9).prop_map(|rows| {
                rows.into_iter()
                    .map(|(x, y)| Instance::new(x.into_iter().map(f64::from).collect::<Vec<_>>(), if y { Yes } else { No }))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn round_invariants(d in dataset()) {
                let (m, stats) = train_with_stats(&d, &BoostConfig::default()).unwrap();
                prop_assert!(m.rounds.len() <= 10);
                for s in &stats {
                    prop_assert!(s.error < 0.5);
                    prop_assert!((s.weight_sum - 1.0).abs() < 1e-9);
                }
                prop_assert!(m.rounds.iter().all(|r| r.alpha.is_finite()));
            }
        }
    }
}
