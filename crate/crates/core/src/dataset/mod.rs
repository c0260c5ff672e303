//! Minimal-pair corpora: BLiMP ingestion, splits, label shuffling and
//! synthetic paradigms for desk-scale runs.

mod blimp;
mod manifest;
mod split;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use blimp::{load_blimp, write_blimp_dir, BlimpLoad, BlimpRecord};
pub use manifest::{CorpusManifest, ParadigmEntry, SplitSizes};
pub use split::{
    decouple_pairs, merged_training_set, prepare_corpus, split_paradigm, split_sizes,
    to_binary_examples, PreparedCorpus, PreparedParadigm,
};
pub use synth::{synth_paradigms, Lexicon, SynthCategory, SynthSpec, TemplateFamily};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentencePair {
    pub good: String,
    pub bad: String,
}

impl SentencePair {
    pub fn new(good: impl Into<String>, bad: impl Into<String>) -> Self {
        Self {
            good: good.into(),
            bad: bad.into(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.good.trim().is_empty() || self.bad.trim().is_empty() {
            return Err("empty sentence".into());
        }
        if self.good == self.bad {
            return Err(format!("grammatical and ungrammatical sentences are identical: `{}`", self.good));
        }
        Ok(())
    }
}

/// A set of minimal pairs instantiating one construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paradigm {
    pub id: String,
    pub category: String,
    pub pairs: Vec<SentencePair>,
}

/// Binary grammaticality instance. `label` is the index of the grammatical sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryExample {
    pub first: String,
    pub second: String,
    pub label: u8,
}

impl BinaryExample {
    pub fn grammatical(&self) -> &str {
        if self.label == 0 {
            &self.first
        } else {
            &self.second
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Attribution,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Attribution => "attribution",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "attribution" => Ok(Split::Attribution),
            other => Err(Error::Input(format!("unknown split `{other}`"))),
        }
    }
}

/// Train/dev/attribution partition of one paradigm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmSplits {
    pub paradigm_id: String,
    pub category: String,
    pub train: Vec<SentencePair>,
    pub dev: Vec<SentencePair>,
    pub attribution: Vec<SentencePair>,
}

impl ParadigmSplits {
    pub fn get(&self, split: Split) -> &[SentencePair] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Attribution => &self.attribution,
        }
    }

    pub fn sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.train.len(),
            dev: self.dev.len(),
            attribution: self.attribution.len(),
        }
    }
}
