//! A small gated bag-of-features grammaticality classifier.
//!
//! Every sentence is mapped to hashed n-gram and skip-gram counts. Feature
//! buckets are dealt round-robin to heads, so each head is a linear detector
//! over its own slice of the feature space. For an example `(first, second)`
//! the logit is
//!
//! ```text
//! z = bias + Σ_h gate_h · Σ_{f ∈ slice(h)} w_f · (x_second[f] − x_first[f])
//! ```
//!
//! and the prediction is label 1 (second sentence grammatical) when `z > 0`.
//! A closed gate zeroes the head's contribution.

use std::collections::{BTreeMap, HashMap};

use log::debug;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{EvaluationResult, Evaluator};
use crate::dataset::{merged_training_set, BinaryExample, PreparedCorpus, Split};
use crate::error::{Error, Result};
use crate::model::{GateMask, ModelTopology};
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeConfig {
    #[serde(default = "NativeConfig::default_features")]
    pub num_features: usize,
    #[serde(default = "NativeConfig::default_epochs")]
    pub epochs: usize,
    #[serde(default = "NativeConfig::default_lr")]
    pub learning_rate: f64,
    #[serde(default = "NativeConfig::default_l2")]
    pub l2: f64,
    /// Largest token distance paired into a skip-gram feature.
    #[serde(default = "NativeConfig::default_window")]
    pub window: usize,
}

impl NativeConfig {
    fn default_features() -> usize {
        8192
    }
    fn default_epochs() -> usize {
        20
    }
    fn default_lr() -> f64 {
        0.2
    }
    fn default_l2() -> f64 {
        1e-5
    }
    fn default_window() -> usize {
        3
    }
}

impl Default for NativeConfig {
    fn default() -> Self {
        Self {
            num_features: Self::default_features(),
            epochs: Self::default_epochs(),
            learning_rate: Self::default_lr(),
            l2: Self::default_l2(),
            window: Self::default_window(),
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Sparse difference `x_second − x_first`, sorted by feature index.
type SparseDiff = Vec<(usize, f64)>;

fn sentence_features(sentence: &str, config: &NativeConfig, out: &mut BTreeMap<usize, f64>, sign: f64) {
    let tokens: Vec<String> = sentence.split_whitespace().map(str::to_lowercase).collect();
    let mut add = |key: String| {
        let bucket = (fnv1a(key.as_bytes()) % config.num_features as u64) as usize;
        *out.entry(bucket).or_insert(0.0) += sign;
    };
    for (i, tok) in tokens.iter().enumerate() {
        add(format!("u:{tok}"));
        for d in 1..=config.window {
            if let Some(next) = tokens.get(i + d) {
                add(format!("s{d}:{tok}|{next}"));
            }
        }
    }
}

fn example_diff(ex: &BinaryExample, config: &NativeConfig) -> SparseDiff {
    let mut acc = BTreeMap::new();
    sentence_features(&ex.second, config, &mut acc, 1.0);
    sentence_features(&ex.first, config, &mut acc, -1.0);
    acc.into_iter().filter(|(_, v)| *v != 0.0).collect()
}

struct EncodedSplit {
    diffs: Vec<SparseDiff>,
    labels: Vec<u8>,
}

/// Trained native backend bound to the corpus it was trained on.
pub struct NativeClassifier {
    topology: ModelTopology,
    config: NativeConfig,
    weights: Vec<f64>,
    bias: f64,
    loss_trace: Vec<f64>,
    splits: HashMap<(String, Split), EncodedSplit>,
    paradigm_order: Vec<String>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl NativeClassifier {
    /// Trains on the merged training set of `corpus` with seeded SGD.
    pub fn train(topology: ModelTopology, corpus: &PreparedCorpus, config: NativeConfig, seed: u64) -> Result<Self> {
        if config.num_features < topology.total() {
            return Err(Error::Config(format!(
                "{} features cannot cover {} heads",
                config.num_features,
                topology.total()
            )));
        }
        let train: Vec<(SparseDiff, u8)> = merged_training_set(corpus)
            .iter()
            .map(|ex| (example_diff(ex, &config), ex.label))
            .collect();
        if train.is_empty() {
            return Err(Error::InsufficientData("empty training set".into()));
        }

        let mut weights = vec![0.0; config.num_features];
        let mut bias = 0.0;
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = rng_for(seed, "native/sgd");
        let mut loss_trace = Vec::with_capacity(config.epochs);
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            let lr = config.learning_rate / (1.0 + epoch as f64 * 0.1);
            let mut loss = 0.0;
            for &i in &order {
                let (diff, label) = &train[i];
                let z = bias + diff.iter().map(|(f, v)| weights[*f] * v).sum::<f64>();
                let p = sigmoid(z);
                let y = f64::from(*label);
                loss -= if y > 0.5 { p.max(1e-12).ln() } else { (1.0 - p).max(1e-12).ln() };
                let g = p - y;
                for (f, v) in diff {
                    weights[*f] -= lr * (g * v + config.l2 * weights[*f]);
                }
                bias -= lr * g;
            }
            let mean = loss / train.len() as f64;
            loss_trace.push(mean);
            debug!("native epoch {epoch}: loss {mean:.5}");
            if !mean.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Training { loss_trace });
            }
        }

        let mut splits = HashMap::new();
        for p in &corpus.paradigms {
            for split in [Split::Train, Split::Dev, Split::Attribution] {
                let examples = p.examples(split);
                splits.insert(
                    (p.splits.paradigm_id.clone(), split),
                    EncodedSplit {
                        diffs: examples.iter().map(|ex| example_diff(ex, &config)).collect(),
                        labels: examples.iter().map(|ex| ex.label).collect(),
                    },
                );
            }
        }
        Ok(Self {
            topology,
            config,
            weights,
            bias,
            loss_trace,
            splits,
            paradigm_order: corpus.paradigms.iter().map(|p| p.splits.paradigm_id.clone()).collect(),
        })
    }

    /// Head owning feature bucket `f`.
    pub fn head_of_feature(&self, f: usize) -> usize {
        f % self.topology.total()
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn config(&self) -> &NativeConfig {
        &self.config
    }

    /// Heads whose slice holds at least one feature with nonzero weight that
    /// occurs in `paradigm`'s `split`.
    pub fn heads_used_by(&self, paradigm: &str, split: Split) -> Result<Vec<usize>> {
        let enc = self
            .splits
            .get(&(paradigm.to_string(), split))
            .ok_or_else(|| Error::UnknownParadigm(paradigm.to_string()))?;
        let mut used = vec![false; self.topology.total()];
        for diff in &enc.diffs {
            for (f, _) in diff {
                if self.weights[*f] != 0.0 {
                    used[self.head_of_feature(*f)] = true;
                }
            }
        }
        Ok((0..used.len()).filter(|&h| used[h]).collect())
    }

    fn accuracy(&self, mask: &GateMask, enc: &EncodedSplit) -> (usize, usize) {
        let correct = enc
            .diffs
            .iter()
            .zip(&enc.labels)
            .filter(|(diff, label)| {
                let z = self.bias
                    + diff
                        .iter()
                        .filter(|(f, _)| mask.is_active(self.head_of_feature(*f)))
                        .map(|(f, v)| self.weights[*f] * v)
                        .sum::<f64>();
                u8::from(z > 0.0) == **label
            })
            .count();
        (correct, enc.labels.len())
    }
}

impl<T: Scalar> Evaluator<T> for NativeClassifier {
    fn backend_id(&self) -> &str {
        "native"
    }

    fn topology(&self) -> ModelTopology {
        self.topology
    }

    fn paradigms(&self) -> Vec<String> {
        self.paradigm_order.clone()
    }

    fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<EvaluationResult<T>> {
        self.topology.check_mask(mask)?;
        let enc = self
            .splits
            .get(&(paradigm.to_string(), split))
            .ok_or_else(|| Error::UnknownParadigm(paradigm.to_string()))?;
        let (correct, n) = self.accuracy(mask, enc);
        let accuracy = if n == 0 {
            T::zero()
        } else {
            T::of_usize(correct) / T::of_usize(n)
        };
        Ok(EvaluationResult {
            accuracy,
            n_examples: n,
        })
    }
}
