use serde::{Deserialize, Serialize};

use super::{split_sizes, Paradigm};
use crate::error::Result;
use crate::seed::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub attribution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadigmEntry {
    pub id: String,
    pub category: String,
    pub pairs: usize,
    pub splits: Option<SplitSizes>,
    /// SHA-256 over the canonical JSON of the paradigm's pairs.
    pub digest: String,
}

/// Reproducibility record of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub paradigms: Vec<ParadigmEntry>,
    pub categories: Vec<String>,
    /// SHA-256 over `id, category, digest` lines sorted by id; independent
    /// of paradigm order.
    pub corpus_digest: String,
    pub warnings: Vec<String>,
}

impl CorpusManifest {
    pub fn build(paradigms: &[Paradigm], warnings: Vec<String>) -> Result<Self> {
        let mut entries = Vec::with_capacity(paradigms.len());
        for p in paradigms {
            let digest = sha256_hex(&serde_json::to_vec(&p.pairs)?);
            entries.push(ParadigmEntry {
                id: p.id.clone(),
                category: p.category.clone(),
                pairs: p.pairs.len(),
                splits: split_sizes(p.pairs.len()).ok(),
                digest,
            });
        }
        let mut categories: Vec<String> = paradigms.iter().map(|p| p.category.clone()).collect();
        categories.sort();
        categories.dedup();
        let mut lines: Vec<String> = entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\n", e.id, e.category, e.digest))
            .collect();
        lines.sort();
        let joined = lines.concat();
        Ok(Self {
            corpus_digest: sha256_hex(joined.as_bytes()),
            paradigms: entries,
            categories,
            warnings,
        })
    }
}
