use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Paradigm, SentencePair};
use crate::error::{Error, Result};

/// Pairs per paradigm in the full BLiMP release.
pub const BLIMP_PAIRS_PER_PARADIGM: usize = 1000;

/// One line of a BLiMP paradigm file. Unknown fields are carried through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlimpRecord {
    pub sentence_good: String,
    pub sentence_bad: String,
    #[serde(rename = "UID")]
    pub uid: String,
    pub linguistics_term: String,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Default)]
pub struct BlimpLoad {
    pub paradigms: Vec<Paradigm>,
    pub warnings: Vec<String>,
}

/// Loads every `*.jsonl` file in `dir` (sorted by file name) as one paradigm.
///
/// Paradigms whose size differs from the full-release size produce a warning,
/// or an error when `strict` is set.
pub fn load_blimp(dir: impl AsRef<Path>, strict: bool) -> Result<BlimpLoad> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|ext| ext == "jsonl"))
        .collect();
    files.sort();

    let mut out = BlimpLoad::default();
    for file in files {
        let paradigm = load_file(&file)?;
        if paradigm.pairs.len() != BLIMP_PAIRS_PER_PARADIGM {
            let msg = format!(
                "paradigm `{}` in {} has {} pairs, expected {}",
                paradigm.id,
                file.display(),
                paradigm.pairs.len(),
                BLIMP_PAIRS_PER_PARADIGM
            );
            if strict {
                return Err(Error::Validation(msg));
            }
            warn!("{msg}");
            out.warnings.push(msg);
        }
        out.paradigms.push(paradigm);
    }
    Ok(out)
}

fn load_file(path: &Path) -> Result<Paradigm> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        message,
    };

    let mut id: Option<String> = None;
    let mut category: Option<String> = None;
    let mut pairs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BlimpRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        let pair = SentencePair::new(record.sentence_good, record.sentence_bad);
        pair.validate().map_err(|m| parse_err(line_no, m))?;
        match &id {
            None => id = Some(record.uid),
            Some(existing) if *existing != record.uid => {
                return Err(parse_err(
                    line_no,
                    format!("UID `{}` differs from file UID `{existing}`", record.uid),
                ))
            }
            Some(_) => {}
        }
        category.get_or_insert(record.linguistics_term);
        pairs.push(pair);
    }

    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Paradigm {
        id: id.unwrap_or(stem),
        category: category.unwrap_or_default(),
        pairs,
    })
}

/// Writes paradigms as BLiMP-format files `<id>.jsonl` under `dir`.
pub fn write_blimp_dir(dir: impl AsRef<Path>, paradigms: &[Paradigm]) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(paradigms.len());
    for p in paradigms {
        let path = dir.join(format!("{}.jsonl", p.id));
        let mut buf = Vec::new();
        for (i, pair) in p.pairs.iter().enumerate() {
            let mut extra = serde_json::Map::new();
            extra.insert("pair_id".into(), serde_json::Value::from(i));
            let record = BlimpRecord {
                sentence_good: pair.good.clone(),
                sentence_bad: pair.bad.clone(),
                uid: p.id.clone(),
                linguistics_term: p.category.clone(),
                extra,
            };
            serde_json::to_writer(&mut buf, &record)?;
            buf.push(b'\n');
        }
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(good: &str, bad: &str, uid: &str) -> String {
        format!(
            r#"{{"sentence_good": "{good}", "sentence_bad": "{bad}", "field": "syntax", "UID": "{uid}", "linguistics_term": "npi_licensing", "pair_id": 0}}"#
        )
    }

    #[test]
    fn empty_directory_gives_no_paradigms() {
        let dir = tempfile::tempdir().unwrap();
        let load = load_blimp(dir.path(), false).unwrap();
        assert!(load.paradigms.is_empty());
        assert!(load.warnings.is_empty());
    }

    #[test]
    fn short_file_warns_by_default_and_fails_in_strict_mode() {
        let dir = tempfile::tempdir().unwrap();
        let lines: Vec<String> = (0..3)
            .map(|i| record(&format!("Only Bill ever left {i}."), &format!("Even Bill ever left {i}."), "only_npi"))
            .collect();
        fs::write(dir.path().join("only_npi.jsonl"), lines.join("\n")).unwrap();

        let load = load_blimp(dir.path(), false).unwrap();
        assert_eq!(load.paradigms.len(), 1);
        assert_eq!(load.paradigms[0].pairs.len(), 3);
        assert_eq!(load.paradigms[0].id, "only_npi");
        assert_eq!(load.paradigms[0].category, "npi_licensing");
        assert_eq!(load.warnings.len(), 1);

        assert!(matches!(load_blimp(dir.path(), true), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_record_reports_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{}\n{{not json\n", record("A is.", "A are.", "x"));
        fs::write(dir.path().join("x.jsonl"), text).unwrap();
        match load_blimp(dir.path(), false) {
            Err(Error::Parse { file, line, .. }) => {
                assert_eq!(line, 2);
                assert!(file.ends_with("x.jsonl"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn identical_sentences_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x.jsonl"), record("Same.", "Same.", "x")).unwrap();
        assert!(matches!(load_blimp(dir.path(), false), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn written_directory_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let p = Paradigm {
            id: "p0".into(),
            category: "agr".into(),
            pairs: vec![SentencePair::new("the dog runs .", "the dog run .")],
        };
        write_blimp_dir(dir.path(), std::slice::from_ref(&p)).unwrap();
        let load = load_blimp(dir.path(), false).unwrap();
        assert_eq!(load.paradigms, vec![p]);
    }
}
