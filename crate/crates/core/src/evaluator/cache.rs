use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use super::{EvaluationResult, Evaluator};
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::model::{GateMask, ModelTopology};
use crate::scalar::Scalar;

/// Content address of one evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvaluationKey {
    pub backend: String,
    pub paradigm: String,
    pub split: Split,
    pub mask_digest: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: EvaluationKey,
    accuracy: f64,
    n: usize,
}

/// Memoizing wrapper keyed by [`EvaluationKey`]. Safe for concurrent use.
pub struct CachedEvaluator<T, E> {
    inner: E,
    entries: RwLock<HashMap<EvaluationKey, EvaluationResult<T>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<T: Scalar, E: Evaluator<T>> CachedEvaluator<T, E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            entries: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn key(&self, mask: &GateMask, paradigm: &str, split: Split) -> EvaluationKey {
        EvaluationKey {
            backend: self.inner.backend_id().to_string(),
            paradigm: paradigm.to_string(),
            split,
            mask_digest: mask.digest(),
        }
    }

    /// Writes entries as JSON lines, sorted for stable output.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let entries = self.entries.read().expect("cache lock poisoned");
        let mut lines: Vec<String> = entries
            .iter()
            .map(|(key, r)| {
                serde_json::to_string(&CacheLine {
                    key: key.clone(),
                    accuracy: r.accuracy.as_f64(),
                    n: r.n_examples,
                })
            })
            .collect::<std::result::Result<_, _>>()?;
        lines.sort();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for line in lines {
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Loads entries saved by [`save`](Self::save); entries for other backends are ignored.
    pub fn load(&self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = self.entries.write().expect("cache lock poisoned");
        let mut loaded = 0;
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                file: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            if entry.key.backend != self.inner.backend_id() {
                continue;
            }
            entries.insert(
                entry.key,
                EvaluationResult {
                    accuracy: T::of(entry.accuracy),
                    n_examples: entry.n,
                },
            );
            loaded += 1;
        }
        Ok(loaded)
    }
}

impl<T: Scalar, E: Evaluator<T>> Evaluator<T> for CachedEvaluator<T, E> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn topology(&self) -> ModelTopology {
        self.inner.topology()
    }

    fn paradigms(&self) -> Vec<String> {
        self.inner.paradigms()
    }

    fn evaluate(&self, mask: &GateMask, paradigm: &str, split: Split) -> Result<EvaluationResult<T>> {
        let key = self.key(mask, paradigm, split);
        if let Some(hit) = self.entries.read().expect("cache lock poisoned").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*hit);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let result = self.inner.evaluate(mask, paradigm, split)?;
        self.entries
            .write()
            .expect("cache lock poisoned")
            .entry(key)
            .or_insert(result);
        Ok(result)
    }

    fn max_in_flight(&self) -> Option<usize> {
        self.inner.max_in_flight()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{PlantedEvaluator, PlantedGameSpec, PlantedParadigm};
    use proptest::prelude::*;

    fn game() -> PlantedEvaluator<f64> {
        let topology = ModelTopology::new(1, 4).unwrap();
        PlantedEvaluator::new(PlantedGameSpec {
            topology,
            paradigms: vec![PlantedParadigm {
                id: "p".into(),
                category: "c".into(),
                base: 0.4,
                weights: vec![0.1, -0.05, 0.2, 0.0],
                synergies: vec![],
            }],
        })
        .unwrap()
    }

    #[test]
    fn repeated_masks_hit_the_cache() {
        let cached = CachedEvaluator::new(game());
        let m = GateMask::from_ints(&[1, 0, 1, 1]).unwrap();
        let a = cached.evaluate(&m, "p", Split::Dev).unwrap();
        let b = cached.evaluate(&m, "p", Split::Dev).unwrap();
        assert_eq!(a, b);
        assert_eq!(cached.stats(), CacheStats { hits: 1, misses: 1 });
        cached.evaluate(&m, "p", Split::Attribution).unwrap();
        assert_eq!(cached.len(), 2);
    }

    #[test]
    fn errors_are_not_cached() {
        let cached = CachedEvaluator::new(game());
        let m = GateMask::from_ints(&[1, 1, 1, 1]).unwrap();
        assert!(cached.evaluate(&m, "missing", Split::Dev).is_err());
        assert!(cached.is_empty());
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cached = CachedEvaluator::new(game());
        let m = GateMask::from_ints(&[0, 1, 1, 0]).unwrap();
        let r = cached.evaluate(&m, "p", Split::Dev).unwrap();
        cached.save(&path).unwrap();

        let fresh = CachedEvaluator::new(game());
        assert_eq!(fresh.load(&path).unwrap(), 1);
        assert_eq!(fresh.evaluate(&m, "p", Split::Dev).unwrap(), r);
        assert_eq!(fresh.stats().hits, 1);
    }

    proptest! {
        #[test]
        fn cache_is_transparent(masks in proptest::collection::vec(proptest::collection::vec(0u8..2, 4), 1..30)) {
            let plain = game();
            let cached = CachedEvaluator::new(game());
            for bits in &masks {
                let m = GateMask::from_ints(bits).unwrap();
                prop_assert_eq!(
                    plain.evaluate(&m, "p", Split::Dev).unwrap(),
                    cached.evaluate(&m, "p", Split::Dev).unwrap()
                );
            }
        }
    }
}
