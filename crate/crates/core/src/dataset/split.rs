use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryExample, Paradigm, ParadigmSplits, SentencePair, Split, SplitSizes};
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Sizes produced by [`split_paradigm`] for `n` pairs: one tenth each to dev
/// and attribution (at least one), remainder to train. 1000 pairs give 800/100/100.
pub fn split_sizes(n: usize) -> Result<SplitSizes> {
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "{n} pairs cannot be split three ways"
        )));
    }
    let tenth = (n / 10).max(1);
    Ok(SplitSizes {
        train: n - 2 * tenth,
        dev: tenth,
        attribution: tenth,
    })
}

/// Shuffles pair order under `seed`, then cuts train, dev and attribution in that order.
pub fn split_paradigm(paradigm: &Paradigm, seed: u64) -> Result<ParadigmSplits> {
    let sizes = split_sizes(paradigm.pairs.len())?;
    let mut pairs = paradigm.pairs.clone();
    pairs.shuffle(&mut rng_for(seed, &format!("split/{}", paradigm.id)));

    let attribution = pairs.split_off(sizes.train + sizes.dev);
    let dev = pairs.split_off(sizes.train);
    Ok(ParadigmSplits {
        paradigm_id: paradigm.id.clone(),
        category: paradigm.category.clone(),
        train: pairs,
        dev,
        attribution,
    })
}

/// Permutes the ungrammatical sentences across pairs so the split no longer
/// consists of exact minimal pairs. Both sentence multisets are preserved.
pub fn decouple_pairs(pairs: &[SentencePair], seed: u64) -> Vec<SentencePair> {
    let mut bad: Vec<&str> = pairs.iter().map(|p| p.bad.as_str()).collect();
    bad.shuffle(&mut rng_for(seed, "decouple"));
    pairs
        .iter()
        .zip(bad)
        .map(|(p, b)| SentencePair::new(p.good.clone(), b))
        .collect()
}

/// One example per pair; the grammatical sentence lands in position 1 on a fair coin.
pub fn to_binary_examples(pairs: &[SentencePair], seed: u64) -> Vec<BinaryExample> {
    let mut rng = rng_for(seed, "binary");
    pairs
        .iter()
        .map(|p| {
            if rng.gen::<bool>() {
                BinaryExample {
                    first: p.bad.clone(),
                    second: p.good.clone(),
                    label: 1,
                }
            } else {
                BinaryExample {
                    first: p.good.clone(),
                    second: p.bad.clone(),
                    label: 0,
                }
            }
        })
        .collect()
}

/// A paradigm after splitting, decoupling train/dev and label shuffling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedParadigm {
    pub splits: ParadigmSplits,
    pub train: Vec<BinaryExample>,
    pub dev: Vec<BinaryExample>,
    pub attribution: Vec<BinaryExample>,
}

impl PreparedParadigm {
    pub fn examples(&self, split: Split) -> &[BinaryExample] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Attribution => &self.attribution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedCorpus {
    pub seed: u64,
    pub paradigms: Vec<PreparedParadigm>,
}

impl PreparedCorpus {
    pub fn paradigm(&self, id: &str) -> Option<&PreparedParadigm> {
        self.paradigms.iter().find(|p| p.splits.paradigm_id == id)
    }
}

/// Splits every paradigm and derives its binary examples. The attribution
/// split keeps the genuine minimal pairs; train and dev are decoupled.
pub fn prepare_corpus(paradigms: &[Paradigm], seed: u64) -> Result<PreparedCorpus> {
    let prepared = paradigms
        .iter()
        .map(|p| {
            let splits = split_paradigm(p, seed)?;
            let id = &p.id;
            let seed_of = |what: &str| crate::seed::derive_seed(seed, &format!("{what}/{id}"));
            let train_pairs = decouple_pairs(&splits.train, seed_of("decouple-train"));
            let dev_pairs = decouple_pairs(&splits.dev, seed_of("decouple-dev"));
            Ok(PreparedParadigm {
                train: to_binary_examples(&train_pairs, seed_of("binary-train")),
                dev: to_binary_examples(&dev_pairs, seed_of("binary-dev")),
                attribution: to_binary_examples(&splits.attribution, seed_of("binary-attribution")),
                splits,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedCorpus {
        seed,
        paradigms: prepared,
    })
}

/// Concatenation of all paradigms' training examples, then a global shuffle.
pub fn merged_training_set(corpus: &PreparedCorpus) -> Vec<BinaryExample> {
    let mut merged: Vec<BinaryExample> = corpus
        .paradigms
        .iter()
        .flat_map(|p| p.train.iter().cloned())
        .collect();
    merged.shuffle(&mut rng_for(corpus.seed, "merge-train"));
    merged
}
