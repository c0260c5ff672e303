//! Synthetic characteristic functions with known weights and pairwise synergies.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EvaluationResult, Evaluator};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::model::{GateMask, ModelTopology};
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synergy<T> {
    pub first: usize,
    pub second: usize,
    pub strength: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedParadigm<T> {
    pub id: String,
    #[serde(default)]
    pub category: String,
    pub base: T,
    pub weights: Vec<T>,
    #[serde(default = "Vec::new")]
    pub synergies: Vec<Synergy<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedGameSpec<T> {
    pub topology: ModelTopology,
    pub paradigms: Vec<PlantedParadigm<T>>,
}

impl<T: Scalar> PlantedGameSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let total = self.topology.total();
        for p in &self.paradigms {
            if p.weights.len() != total {
                return Err(Error::Topology(format!(
                    "planted paradigm `{}` has {} weights for {} heads",
                    p.id,
                    p.weights.len(),
                    total
                )));
            }
            for s in &p.synergies {
                if s.first >= total || s.second >= total || s.first == s.second {
                    return Err(Error::Validation(format!(
                        "planted paradigm `{}` has invalid synergy ({}, {})",
                        p.id, s.first, s.second
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn paradigm(&self, id: &str) -> Option<&PlantedParadigm<T>> {
        self.paradigms.iter().find(|p| p.id == id)
    }

    /// Single-paradigm game `game` with random weights in [-0.05, 0.1),
    /// base 0.3 and `synergies` random pairs with strength in [-0.08, 0.1).
    pub fn random(topology: ModelTopology, synergies: usize, seed: u64) -> Self {
        let total = topology.total();
        let mut rng = rng_for(seed, "planted/random");
        let weights = (0..total)
            .map(|_| T::of(rng.gen_range(-0.05..0.1)))
            .collect();
        let mut syn = Vec::with_capacity(synergies);
        if total >= 2 {
            for _ in 0..synergies {
                let first = rng.gen_range(0..total);
                let mut second = rng.gen_range(0..total - 1);
                if second >= first {
                    second += 1;
                }
                syn.push(Synergy {
                    first,
                    second,
                    strength: T::of(rng.gen_range(-0.08..0.1)),
                });
            }
        }
        Self {
            topology,
            paradigms: vec![PlantedParadigm {
                id: "game".into(),
                category: String::new(),
                base: T::of(0.3),
                weights,
                synergies: syn,
            }],
        }
    }
}

/// `clamp(base + Σ active weights + Σ synergies with both ends active, 0, 1)`.
pub fn planted_value<T: Scalar>(paradigm: &PlantedParadigm<T>, mask: &GateMask) -> T {
    let mut value = paradigm.base;
    for i in mask.active_indices() {
        value += paradigm.weights[i];
    }
    for s in &paradigm.synergies {
        if mask.is_active(s.first) && mask.is_active(s.second) {
            value += s.strength;
        }
    }
    value.clamp_to(T::zero(), T::one())
}

/// Closed-form backend; ignores the split.
#[derive(Debug, Clone)]
pub struct PlantedEvaluator<T> {
    spec: PlantedGameSpec<T>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> PlantedEvaluator<T> {
    pub fn new(spec: PlantedGameSpec<T>) -> Result<Self> {
        spec.validate()?;
        let index = spec
            .paradigms
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), i))
            .collect();
        Ok(Self { spec, index })
    }

    pub fn spec(&self) -> &PlantedGameSpec<T> {
        &self.spec
    }
}

impl<T: Scalar> Evaluator<T> for PlantedEvaluator<T> {
    fn backend_id(&self) -> &str {
        "planted"
    }

    fn topology(&self) -> ModelTopology {
        self.spec.topology
    }

    fn paradigms(&self) -> Vec<String> {
        self.spec.paradigms.iter().map(|p| p.id.clone()).collect()
    }

    fn evaluate(&self, mask: &GateMask, paradigm: &str, _split: Split) -> Result<EvaluationResult<T>> {
        self.spec.topology.check_mask(mask)?;
        let idx = *self
            .index
            .get(paradigm)
            .ok_or_else(|| Error::UnknownParadigm(paradigm.to_string()))?;
        Ok(EvaluationResult {
            accuracy: planted_value(&self.spec.paradigms[idx], mask),
            n_examples: 0,
        })
    }
}

/// Recipe for a planted game whose categories own disjoint head supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedDesign {
    pub layers: usize,
    pub heads_per_layer: usize,
    #[serde(default = "PlantedDesign::default_base")]
    pub base: f64,
    /// Heads owned by each category.
    pub support_size: usize,
    #[serde(default = "PlantedDesign::default_support_weight")]
    pub support_weight: [f64; 2],
    /// Half-width of the uniform weight given to every head outside the support.
    #[serde(default = "PlantedDesign::default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub synergies_per_paradigm: usize,
    #[serde(default = "PlantedDesign::default_synergy")]
    pub synergy_strength: [f64; 2],
}

impl PlantedDesign {
    fn default_base() -> f64 {
        0.5
    }

    fn default_support_weight() -> [f64; 2] {
        [0.015, 0.035]
    }

    fn default_noise() -> f64 {
        0.002
    }

    fn default_synergy() -> [f64; 2] {
        [0.01, 0.03]
    }

    pub fn new(topology: ModelTopology, support_size: usize) -> Self {
        Self {
            layers: topology.layers,
            heads_per_layer: topology.heads_per_layer,
            base: Self::default_base(),
            support_size,
            support_weight: Self::default_support_weight(),
            noise: Self::default_noise(),
            synergies_per_paradigm: 0,
            synergy_strength: Self::default_synergy(),
        }
    }

    /// Builds the game for `(paradigm id, category)` pairs. Categories are
    /// assigned supports in order of first appearance.
    pub fn build<T: Scalar>(&self, paradigms: &[(String, String)], seed: u64) -> Result<PlantedGameSpec<T>> {
        let topology = ModelTopology::new(self.layers, self.heads_per_layer)?;
        let total = topology.total();
        let mut categories: Vec<&str> = Vec::new();
        for (_, c) in paradigms {
            if !categories.contains(&c.as_str()) {
                categories.push(c);
            }
        }
        if categories.len() * self.support_size > total {
            return Err(Error::Config(format!(
                "{} categories x {} support heads exceed {} heads",
                categories.len(),
                self.support_size,
                total
            )));
        }
        if self.support_size < 2 && self.synergies_per_paradigm > 0 {
            return Err(Error::Config("synergies need a support of at least 2 heads".into()));
        }
        let mut heads: Vec<usize> = (0..total).collect();
        heads.shuffle(&mut rng_for(seed, "planted/supports"));
        let supports: HashMap<&str, &[usize]> = categories
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, &heads[i * self.support_size..(i + 1) * self.support_size]))
            .collect();

        let [w_lo, w_hi] = self.support_weight;
        let [s_lo, s_hi] = self.synergy_strength;
        let out = paradigms
            .iter()
            .map(|(id, category)| {
                let mut rng = rng_for(seed, &format!("planted/{id}"));
                let support = supports[category.as_str()];
                let mut weights: Vec<f64> = (0..total)
                    .map(|_| if self.noise > 0.0 { rng.gen_range(-self.noise..self.noise) } else { 0.0 })
                    .collect();
                for &h in support {
                    weights[h] = rng.gen_range(w_lo..=w_hi);
                }
                let synergies = (0..self.synergies_per_paradigm)
                    .map(|_| {
                        let pick: Vec<usize> = support.choose_multiple(&mut rng, 2).copied().collect();
                        Synergy {
                            first: pick[0],
                            second: pick[1],
                            strength: T::of(rng.gen_range(s_lo..=s_hi)),
                        }
                    })
                    .collect();
                PlantedParadigm {
                    id: id.clone(),
                    category: category.clone(),
                    base: T::of(self.base),
                    weights: weights.into_iter().map(T::of).collect(),
                    synergies,
                }
            })
            .collect();
        let spec = PlantedGameSpec {
            topology,
            paradigms: out,
        };
        spec.validate()?;
        Ok(spec)
    }
}
