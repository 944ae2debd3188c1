//! Relational RL rules with numeric preferences.
//!
//! The state seen by the learner is a [`FeatureVector`] of five bucketed
//! ratios. A rule is keyed by one (feature, bucket, operator kind) triple,
//! so exactly five rules contribute to the value of any proposed operator
//! and that value is their sum. Rules come into existence lazily, valued
//! zero, the first time they are matched.
//!
//! Credit is assigned with SARSA(λ) using replacing traces. Firing an
//! operator sets each contributing rule's trace to `1/5`, which splits the
//! TD correction equally among the rules that produced the value.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{PolicyError, SelectError};
use crate::ops::{OperatorInstance, OperatorKind};
use crate::schedule::ScheduleMetrics;

pub const N_FEATURES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    InitTotRatio,
    AvgMaxRatio,
    TardWipRatio,
    RelativeTardFocal,
    RelativeTardAux,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::InitTotRatio,
        Feature::AvgMaxRatio,
        Feature::TardWipRatio,
        Feature::RelativeTardFocal,
        Feature::RelativeTardAux,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::InitTotRatio => "initTotRatioScale",
            Feature::AvgMaxRatio => "avgMaxRatioScale",
            Feature::TardWipRatio => "tardWIPRatioScale",
            Feature::RelativeTardFocal => "relativeTardFocalScale",
            Feature::RelativeTardAux => "relativeTardAuxiliarScale",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Feature {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| PolicyError::BadKey(s.to_owned()))
    }
}

/// Bucketed state abstraction; every entry lies in `1..=n_buckets`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureVector(pub [u32; N_FEATURES]);

impl FeatureVector {
    pub fn get(&self, f: Feature) -> u32 {
        self.0[f.index()]
    }

    pub fn keys(&self, kind: OperatorKind) -> impl Iterator<Item = RuleKey> + '_ {
        Feature::ALL.into_iter().map(move |feature| RuleKey { feature, bucket: self.get(feature), kind })
    }
}

/// Maps a ratio onto `1..=n_buckets` after clamping it to `[0, 1]`.
/// Non-finite ratios land in the worst (top) bucket.
pub fn bucket(ratio: f64, n_buckets: u32) -> u32 {
    if !ratio.is_finite() {
        warn!("non-finite feature ratio {ratio}; using bucket {n_buckets}");
        return n_buckets;
    }
    let r = ratio.clamp(0.0, 1.0);
    ((r * n_buckets as f64).floor() as u32 + 1).min(n_buckets)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn abstract_features(
    metrics: &ScheduleMetrics,
    focal_tardiness: f64,
    aux_tardiness: f64,
    n_buckets: u32,
) -> FeatureVector {
    let ratios = [
        ratio(metrics.tot_tard, metrics.init_tardiness),
        ratio(metrics.avg_tard, metrics.max_tard),
        ratio(metrics.tot_tard, metrics.total_wip),
        ratio(focal_tardiness, metrics.tot_tard),
        ratio(aux_tardiness, metrics.tot_tard),
    ];
    FeatureVector(ratios.map(|r| bucket(r, n_buckets)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleKey {
    pub feature: Feature,
    pub bucket: u32,
    pub kind: OperatorKind,
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.feature.name(), self.bucket, self.kind)
    }
}

impl FromStr for RuleKey {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PolicyError::BadKey(s.to_owned());
        let mut parts = s.splitn(3, ':');
        let (Some(feature), Some(bucket), Some(kind)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        Ok(RuleKey {
            feature: feature.parse().map_err(|_| bad())?,
            bucket: bucket.parse().ok().filter(|b| *b >= 1).ok_or_else(bad)?,
            kind: kind.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardMode {
    /// Tardiness change divided by the episode's initial tardiness.
    #[default]
    Normalized,
    /// Tardiness change in hours.
    RawHours,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_buckets: u32,
    pub trace_floor: f64,
    pub reward_mode: RewardMode,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.9,
            lambda: 0.1,
            epsilon: 0.1,
            n_buckets: 5,
            trace_floor: 1e-4,
            reward_mode: RewardMode::Normalized,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let open_unit = |x: f64| x > 0.0 && x <= 1.0;
        let closed_unit = |x: f64| (0.0..=1.0).contains(&x);
        if !open_unit(self.alpha) {
            return Err(PolicyError::Config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !open_unit(self.epsilon) {
            return Err(PolicyError::Config(format!("epsilon {} outside (0, 1]", self.epsilon)));
        }
        if !closed_unit(self.gamma) {
            return Err(PolicyError::Config(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        if !closed_unit(self.lambda) {
            return Err(PolicyError::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(1..=1000).contains(&self.n_buckets) {
            return Err(PolicyError::Config(format!("n_buckets {} outside 1..=1000", self.n_buckets)));
        }
        if !(self.trace_floor.is_finite() && self.trace_floor >= 0.0) {
            return Err(PolicyError::Config("trace_floor must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Learned numeric preferences.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleTable {
    values: BTreeMap<RuleKey, f64>,
    created_count: u64,
}

impl RuleTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Distinct rules ever instantiated. Rules are never deleted, so this
    /// always equals [`RuleTable::len`].
    pub fn created_count(&self) -> u64 {
        self.created_count
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, key: &RuleKey) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RuleKey, &f64)> {
        self.values.iter()
    }

    fn entry(&mut self, key: RuleKey) -> &mut f64 {
        let created = &mut self.created_count;
        self.values.entry(key).or_insert_with(|| {
            *created += 1;
            0.0
        })
    }

    pub fn set(&mut self, key: RuleKey, value: f64) {
        *self.entry(key) = value;
    }

    /// Combined preference of `kind` in state `features`, creating any
    /// missing rule at zero.
    pub fn q_value(&mut self, features: &FeatureVector, kind: OperatorKind) -> f64 {
        features.keys(kind).map(|k| *self.entry(k)).sum()
    }

    /// Like [`RuleTable::q_value`] but read-only; missing rules count as zero.
    pub fn peek_q(&self, features: &FeatureVector, kind: OperatorKind) -> f64 {
        features.keys(kind).map(|k| self.get(&k).unwrap_or(0.0)).sum()
    }
}

/// Eligibility traces for one training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSet {
    traces: BTreeMap<RuleKey, f64>,
}

impl TraceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &RuleKey) -> Option<f64> {
        self.traces.get(key).copied()
    }

    pub fn set(&mut self, key: RuleKey, e: f64) {
        self.traces.insert(key, e);
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn clear(&mut self) {
        self.traces.clear();
    }

    pub fn sum(&self) -> f64 {
        self.traces.values().sum()
    }
}

/// Replacing traces: each contributing rule's trace becomes `1/5`.
pub fn mark_fired(traces: &mut TraceSet, features: &FeatureVector, kind: OperatorKind) {
    let share = 1.0 / N_FEATURES as f64;
    for key in features.keys(kind) {
        traces.set(key, share);
    }
}

/// One SARSA(λ) backup. Returns `alpha * delta`, the change in value of a
/// freshly fired group whose traces sum to one. Traces then decay by
/// `gamma * lambda` and those under the floor are dropped.
pub fn td_update(
    table: &mut RuleTable,
    traces: &mut TraceSet,
    q_sa: f64,
    reward: f64,
    q_next: f64,
    config: &LearnerConfig,
) -> f64 {
    let delta = reward + config.gamma * q_next - q_sa;
    let step = config.alpha * delta;
    for (key, e) in &traces.traces {
        *table.entry(*key) += step * e;
    }
    let decay = config.gamma * config.lambda;
    traces.traces.retain(|_, e| {
        *e *= decay;
        *e >= config.trace_floor
    });
    step
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub op: OperatorInstance,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub q: f64,
}

fn choose<R: Rng>(qs: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        return rng.gen_range(0..qs.len());
    }
    let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..qs.len()).filter(|&k| qs[k] == best).collect();
    *tied.choose(rng).unwrap_or(&0)
}

/// ε-greedy choice over `candidates`. Rules for every candidate are
/// instantiated, whichever branch is taken.
pub fn select_operator<R: Rng>(
    table: &mut RuleTable,
    candidates: &[Candidate],
    epsilon: f64,
    rng: &mut R,
) -> Result<Selection, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError);
    }
    let qs: Vec<f64> = candidates.iter().map(|c| table.q_value(&c.features, c.op.kind)).collect();
    let index = choose(&qs, epsilon, rng);
    Ok(Selection { index, q: qs[index] })
}

/// Pure argmax (random tie-break) over a frozen table.
pub fn select_greedy<R: Rng>(
    table: &RuleTable,
    candidates: &[Candidate],
    rng: &mut R,
) -> Result<Selection, SelectError> {
    if candidates.is_empty() {
        return Err(SelectError);
    }
    let qs: Vec<f64> = candidates.iter().map(|c| table.peek_q(&c.features, c.op.kind)).collect();
    let index = choose(&qs, 0.0, rng);
    Ok(Selection { index, q: qs[index] })
}

/// A trained table with the learner settings it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub config: LearnerConfig,
    pub table: RuleTable,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    config: LearnerConfig,
    created_count: u64,
    values: BTreeMap<String, f64>,
}

impl Policy {
    pub fn to_json(&self) -> String {
        let doc = PolicyDoc {
            config: self.config,
            created_count: self.table.created_count,
            values: self.table.values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let doc: PolicyDoc = serde_json::from_str(text)?;
        doc.config.validate()?;
        let mut values = BTreeMap::new();
        for (name, value) in doc.values {
            let key: RuleKey = name.parse()?;
            if key.bucket > doc.config.n_buckets {
                return Err(PolicyError::BucketMismatch {
                    expected: doc.config.n_buckets,
                    found: key.bucket,
                });
            }
            if !value.is_finite() {
                return Err(PolicyError::NonFinite(name));
            }
            // Keys parse canonically, so a duplicate here means a
            // non-canonical spelling of an existing key.
            if values.insert(key, value).is_some() {
                return Err(PolicyError::BadKey(name));
            }
        }
        if doc.created_count != values.len() as u64 {
            return Err(PolicyError::CountMismatch { claimed: doc.created_count, actual: values.len() });
        }
        Ok(Policy { config: doc.config, table: RuleTable { values, created_count: doc.created_count } })
    }

    /// Fails unless the policy was trained with `n_buckets` buckets.
    pub fn expect_buckets(&self, n_buckets: u32) -> Result<(), PolicyError> {
        if self.config.n_buckets != n_buckets {
            return Err(PolicyError::BucketMismatch { expected: n_buckets, found: self.config.n_buckets });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::TaskId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kind(name: &str) -> OperatorKind {
        name.parse().unwrap()
    }

    fn fv(b: [u32; 5]) -> FeatureVector {
        FeatureVector(b)
    }

    fn cand(k: &str, focal: u32, b: [u32; 5]) -> Candidate {
        Candidate {
            op: OperatorInstance { kind: kind(k), focal: TaskId(focal), auxiliary: TaskId(99) },
            features: fv(b),
        }
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(bucket(0.0, 5), 1);
        assert_eq!(bucket(1.0, 5), 5);
        assert_eq!(bucket(0.55, 5), 3);
        assert_eq!(bucket(-3.0, 5), 1);
        assert_eq!(bucket(7.0, 5), 5);
        assert_eq!(bucket(f64::NAN, 5), 5);
        assert_eq!(bucket(f64::INFINITY, 4), 4);
    }

    #[test]
    fn degenerate_state_maps_to_lowest_buckets() {
        let m = ScheduleMetrics::default();
        assert_eq!(abstract_features(&m, 0.0, 0.0, 5), fv([1; 5]));
    }

    #[test]
    fn unchanged_tardiness_tops_first_scale() {
        let m = ScheduleMetrics { tot_tard: 12.0, init_tardiness: 12.0, ..Default::default() };
        assert_eq!(abstract_features(&m, 0.0, 0.0, 5).get(Feature::InitTotRatio), 5);
    }

    #[test]
    fn hand_bucketed_state() {
        let m = ScheduleMetrics {
            tot_tard: 20.0,
            init_tardiness: 40.0,
            total_wip: 100.0,
            avg_tard: 2.0,
            max_tard: 10.0,
            ..Default::default()
        };
        // Ratios 0.5, 0.2, 0.2, 0.5, 0.1 -> floor(5r) + 1.
        assert_eq!(abstract_features(&m, 10.0, 2.0, 5), fv([3, 2, 2, 3, 1]));
    }

    #[test]
    fn fresh_table_is_zero_and_counts_rules() {
        let mut t = RuleTable::new();
        assert_eq!(t.q_value(&fv([1, 2, 3, 4, 5]), kind("down-right-jump")), 0.0);
        assert_eq!(t.created_count(), 5);
        assert_eq!(t.q_value(&fv([1, 2, 3, 4, 5]), kind("down-right-jump")), 0.0);
        assert_eq!(t.created_count(), 5);
        assert_eq!(t.peek_q(&fv([2; 5]), kind("up-same-swap")), 0.0);
        assert_eq!(t.created_count(), 5);
    }

    #[test]
    fn q_is_sum_of_five_rules() {
        let mut t = RuleTable::new();
        let s = fv([1, 2, 3, 4, 5]);
        let k = kind("up-left-swap");
        for key in s.keys(k) {
            t.set(key, 0.27);
        }
        assert!((t.q_value(&s, k) - 1.35).abs() < 1e-12);
    }

    #[test]
    fn shared_buckets_differ_only_through_fifth_feature() {
        let mut t = RuleTable::new();
        let k = kind("down-same-jump");
        let a = fv([1, 1, 1, 1, 1]);
        let b = fv([1, 1, 1, 1, 4]);
        for (n, key) in a.keys(k).enumerate() {
            t.set(key, n as f64 + 0.5);
        }
        t.set(RuleKey { feature: Feature::RelativeTardAux, bucket: 4, kind: k }, -2.0);
        let diff = t.q_value(&a, k) - t.q_value(&b, k);
        assert_eq!(diff, 4.5 - -2.0);
    }

    #[test]
    fn greedy_picks_strict_best() {
        let mut t = RuleTable::new();
        let cs = [cand("up-same-jump", 1, [1; 5]), cand("down-same-jump", 2, [1; 5])];
        t.set(RuleKey { feature: Feature::AvgMaxRatio, bucket: 1, kind: kind("down-same-jump") }, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let sel = select_operator(&mut t, &cs, 0.0, &mut rng).unwrap();
            assert_eq!(sel.index, 1);
            assert_eq!(sel.q, 0.3);
        }
        assert_eq!(select_greedy(&t, &cs, &mut rng).unwrap().index, 1);
        assert_eq!(select_operator(&mut t, &[], 0.5, &mut rng), Err(SelectError));
    }

    /// Each of n outcomes should be hit within 3 standard deviations of
    /// draws/n over `draws` trials.
    fn assert_uniform(counts: &[usize], draws: usize) {
        let n = counts.len() as f64;
        let p = 1.0 / n;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((*c as f64 - mean).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut t = RuleTable::new();
        let cs: Vec<_> = (0..4).map(|k| cand("up-same-jump", k, [1 + k, 1, 1, 1, 1])).collect();
        t.set(RuleKey { feature: Feature::InitTotRatio, bucket: 1, kind: kind("up-same-jump") }, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[select_operator(&mut t, &cs, 1.0, &mut rng).unwrap().index] += 1;
        }
        assert_uniform(&counts, 10_000);
    }

    #[test]
    fn ties_break_uniformly() {
        let mut t = RuleTable::new();
        let cs: Vec<_> = (0..5).map(|k| cand("down-left-swap", k, [1; 5])).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0usize; 5];
        for _ in 0..10_000 {
            counts[select_operator(&mut t, &cs, 0.0, &mut rng).unwrap().index] += 1;
        }
        assert_uniform(&counts, 10_000);
    }

    #[test]
    fn replacing_traces() {
        let mut tr = TraceSet::new();
        let s = fv([1, 2, 3, 4, 5]);
        mark_fired(&mut tr, &s, kind("up-same-jump"));
        assert_eq!(tr.len(), 5);
        assert!(s.keys(kind("up-same-jump")).all(|k| tr.get(&k) == Some(0.2)));
        tr.set(s.keys(kind("up-same-jump")).next().unwrap(), 0.05);
        mark_fired(&mut tr, &s, kind("up-same-jump"));
        assert!(s.keys(kind("up-same-jump")).all(|k| tr.get(&k) == Some(0.2)));
        mark_fired(&mut tr, &s, kind("down-same-jump"));
        assert_eq!(tr.len(), 10);
    }

    fn worked_config() -> LearnerConfig {
        LearnerConfig { alpha: 0.1, gamma: 0.9, ..LearnerConfig::default() }
    }

    #[test]
    fn worked_update_total() {
        let mut t = RuleTable::new();
        let mut tr = TraceSet::new();
        let s = fv([1; 5]);
        let k = kind("down-right-jump");
        mark_fired(&mut tr, &s, k);
        let before = t.q_value(&s, k);
        let step = td_update(&mut t, &mut tr, 0.81, 0.54, 0.63, &worked_config());
        assert!((step - 0.0297).abs() < 1e-12, "{step}");
        assert!((t.q_value(&s, k) - before - step).abs() < 1e-15);
    }

    #[test]
    fn worked_update_split_three_ways() {
        let mut t = RuleTable::new();
        let mut tr = TraceSet::new();
        let keys: Vec<RuleKey> = fv([1; 5]).keys(kind("up-same-swap")).take(3).collect();
        for key in &keys {
            tr.set(*key, 1.0 / 3.0);
        }
        td_update(&mut t, &mut tr, 0.81, 0.54, 0.63, &worked_config());
        for key in &keys {
            assert!((t.get(key).unwrap() - 0.0099).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_td_error_changes_nothing() {
        let mut t = RuleTable::new();
        let mut tr = TraceSet::new();
        let s = fv([2; 5]);
        let k = kind("up-right-jump");
        for key in s.keys(k) {
            t.set(key, 0.1);
        }
        mark_fired(&mut tr, &s, k);
        let snapshot = t.clone();
        let step = td_update(&mut t, &mut tr, 0.5, 0.5, 0.0, &worked_config());
        assert_eq!(step, 0.0);
        assert_eq!(t, snapshot);
    }

    #[test]
    fn traces_decay_geometrically_then_prune() {
        let config = LearnerConfig::default();
        let mut t = RuleTable::new();
        let mut tr = TraceSet::new();
        let key = RuleKey { feature: Feature::AvgMaxRatio, bucket: 3, kind: kind("up-left-jump") };
        tr.set(key, 0.2);
        let gl = config.gamma * config.lambda;
        let mut expected = 0.2;
        for _ in 0..3 {
            td_update(&mut t, &mut tr, 0.0, 0.0, 0.0, &config);
            expected *= gl;
            assert!((tr.get(&key).unwrap() - expected).abs() < 1e-15);
        }
        // 0.2 * 0.09^3 = 1.46e-4; one more step falls below 1e-4.
        td_update(&mut t, &mut tr, 0.0, 0.0, 0.0, &config);
        assert!(tr.is_empty());
    }

    #[test]
    fn rule_key_strings() {
        let key = RuleKey { feature: Feature::TardWipRatio, bucket: 2, kind: kind("down-right-jump") };
        assert_eq!(key.to_string(), "tardWIPRatioScale:2:down-right-jump");
        assert_eq!(key.to_string().parse::<RuleKey>().unwrap(), key);
        for bad in [
            "",
            "tardWIPRatioScale:2",
            "nope:1:up-same-jump",
            "avgMaxRatioScale:0:up-same-jump",
            "avgMaxRatioScale:1:up",
        ] {
            assert!(bad.parse::<RuleKey>().is_err(), "{bad}");
        }
    }

    #[test]
    fn policy_rejects_mismatches() {
        let mut table = RuleTable::new();
        table.q_value(&fv([5; 5]), kind("up-same-jump"));
        let policy = Policy { config: LearnerConfig::default(), table };
        assert_eq!(Policy::from_json(&policy.to_json()).unwrap(), policy);
        assert!(matches!(
            policy.expect_buckets(4),
            Err(PolicyError::BucketMismatch { expected: 4, found: 5 })
        ));

        let narrow = policy.to_json().replace("\"n_buckets\": 5", "\"n_buckets\": 4");
        assert!(matches!(Policy::from_json(&narrow), Err(PolicyError::BucketMismatch { .. })));
        let miscounted = policy.to_json().replace("\"created_count\": 5", "\"created_count\": 6");
        assert!(matches!(Policy::from_json(&miscounted), Err(PolicyError::CountMismatch { .. })));
        let bad_alpha = policy.to_json().replace("\"alpha\": 0.1", "\"alpha\": 0.0");
        assert!(matches!(Policy::from_json(&bad_alpha), Err(PolicyError::Config(_))));
    }

    #[test]
    fn config_bounds() {
        assert!(LearnerConfig::default().validate().is_ok());
        assert!(LearnerConfig { epsilon: 0.0, ..Default::default() }.validate().is_err());
        assert!(LearnerConfig { gamma: 1.0, lambda: 0.0, ..Default::default() }.validate().is_ok());
        assert!(LearnerConfig { lambda: 1.5, ..Default::default() }.validate().is_err());
        assert!(LearnerConfig { n_buckets: 0, ..Default::default() }.validate().is_err());
    }
}
