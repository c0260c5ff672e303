use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HeadId, ModelTopology, ShvEstimate, ShvMatrix, ShvVector};
use crate::pruning::PruneMatrix;
use crate::scalar::Scalar;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| with_path(path, e))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).map_err(|e| with_path(path, e))
}

fn with_path(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            file: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn bad(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(path, line, format!("`{field}` is not a finite number")))
}

/// Header `paradigm,L0.H0,L0.H1,...`, one row of SHV means per paradigm.
pub fn write_shv_csv<T: Scalar>(path: impl AsRef<Path>, matrix: &ShvMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header = vec!["paradigm".to_string()];
    header.extend(matrix.topology.column_labels());
    w.write_record(&header)?;
    for row in &matrix.rows {
        let mut record = vec![row.paradigm_id.clone()];
        record.extend(row.estimates.iter().map(|e| e.mean.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_head_label(label: &str) -> Option<HeadId> {
    let rest = label.strip_prefix('L')?;
    let (l, h) = rest.split_once(".H")?;
    Some(HeadId::new(l.parse().ok()?, h.parse().ok()?))
}

/// Reads SHV means back; the topology is recovered from the header. The
/// estimates carry means only.
pub fn read_shv_csv(path: impl AsRef<Path>) -> Result<ShvMatrix<f64>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| with_path(path, e))?.clone();
    if header.get(0) != Some("paradigm") || header.len() < 2 {
        return Err(bad(path, 1, "expected header `paradigm,L0.H0,...`"));
    }
    let heads: Vec<HeadId> = header
        .iter()
        .skip(1)
        .map(|l| parse_head_label(l).ok_or_else(|| bad(path, 1, format!("bad head label `{l}`"))))
        .collect::<Result<_>>()?;
    let layers = heads.iter().map(|h| h.layer).max().unwrap_or(0) + 1;
    let per_layer = heads.iter().map(|h| h.head).max().unwrap_or(0) + 1;
    let topology = ModelTopology::new(layers, per_layer)?;
    if topology.column_labels() != header.iter().skip(1).collect::<Vec<_>>() {
        return Err(bad(path, 1, "head columns must list every L.H in layer-major order"));
    }
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, record) in r.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| with_path(path, e))?;
        if record.len() != header.len() {
            return Err(bad(path, line, format!("{} fields, expected {}", record.len(), header.len())));
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(bad(path, line, format!("duplicate paradigm `{id}`")));
        }
        let estimates = record
            .iter()
            .skip(1)
            .map(|f| parse_f64(path, line, f).map(ShvEstimate::exact))
            .collect::<Result<_>>()?;
        rows.push(ShvVector { paradigm_id: id, estimates });
    }
    ShvMatrix::new(topology, rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub paradigm: String,
    pub category: String,
    pub cluster: usize,
}

pub fn write_clusters_csv(path: impl AsRef<Path>, rows: &[ClusterRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_clusters_csv(path: impl AsRef<Path>) -> Result<Vec<ClusterRow>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    let mut out: Vec<ClusterRow> = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: ClusterRow = row.map_err(|e| match with_path(path, e) {
            Error::Parse { file, message, .. } => Error::Parse { file, line: i + 2, message },
            other => other,
        })?;
        if out.iter().any(|o| o.paradigm == row.paradigm) {
            return Err(bad(path, i as u64 + 2, format!("duplicate paradigm `{}`", row.paradigm)));
        }
        out.push(row);
    }
    Ok(out)
}

/// Paradigm → label from any CSV with `paradigm` and `category` columns
/// (a clusters CSV qualifies).
pub fn read_reference_csv(path: impl AsRef<Path>) -> Result<std::collections::BTreeMap<String, String>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| with_path(path, e))?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(path, 1, format!("missing `{name}` column")))
    };
    let (pi, ci) = (col("paradigm")?, col("category")?);
    let mut out = std::collections::BTreeMap::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| with_path(path, e))?;
        let (Some(p), Some(c)) = (record.get(pi), record.get(ci)) else {
            return Err(bad(path, i as u64 + 2, "short row"));
        };
        if out.insert(p.to_string(), c.to_string()).is_some() {
            return Err(bad(path, i as u64 + 2, format!("duplicate paradigm `{p}`")));
        }
    }
    Ok(out)
}

pub fn write_inertia_csv<T: Scalar>(path: impl AsRef<Path>, curve: &[(usize, T)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(["k", "inertia"])?;
    for (k, inertia) in curve {
        w.write_record([k.to_string(), inertia.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header `mask_source,baseline,<paradigms...>`. Row `m` holds the baseline
/// accuracy of `m` itself and the deltas of `m`'s mask on every paradigm.
/// Failed cells are left empty.
pub fn write_prune_csv<T: Scalar>(path: impl AsRef<Path>, matrix: &PruneMatrix<T>) -> Result<()> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    let mut header = vec!["mask_source".to_string(), "baseline".to_string()];
    header.extend(matrix.paradigms.iter().cloned());
    w.write_record(&header)?;
    let fmt = |v: &Option<T>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, p) in matrix.paradigms.iter().enumerate() {
        let mut record = vec![p.clone(), fmt(&matrix.baseline[i])];
        record.extend(matrix.cells[i].iter().map(fmt));
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_prune_csv(path: impl AsRef<Path>, n: usize) -> Result<PruneMatrix<f64>> {
    let path = path.as_ref();
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| with_path(path, e))?.clone();
    if header.get(0) != Some("mask_source") || header.get(1) != Some("baseline") {
        return Err(bad(path, 1, "expected header `mask_source,baseline,...`"));
    }
    let paradigms: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
    let opt = |line: u64, f: &str| -> Result<Option<f64>> {
        if f.trim().is_empty() {
            Ok(None)
        } else {
            parse_f64(path, line, f).map(Some)
        }
    };
    let mut baseline = Vec::new();
    let mut cells = Vec::new();
    for (i, record) in r.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| with_path(path, e))?;
        if record.len() != header.len() || paradigms.get(i).map(String::as_str) != Some(&record[0]) {
            return Err(bad(path, line, "rows must follow the column order"));
        }
        baseline.push(opt(line, &record[1])?);
        cells.push(record.iter().skip(2).map(|f| opt(line, f)).collect::<Result<Vec<_>>>()?);
    }
    if cells.len() != paradigms.len() {
        return Err(bad(path, cells.len() as u64 + 1, "matrix is not square"));
    }
    Ok(PruneMatrix { paradigms, n, baseline, cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> ShvMatrix<f64> {
        let t = ModelTopology::new(2, 2).unwrap();
        let row = |id: &str, v: [f64; 4]| ShvVector {
            paradigm_id: id.into(),
            estimates: v.iter().map(|&m| ShvEstimate::exact(m)).collect(),
        };
        ShvMatrix::new(t, vec![row("a", [0.1, -0.25, 1e-17, 0.3]), row("b", [0.0, 0.5, 0.125, -1.0])]).unwrap()
    }

    #[test]
    fn shv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("shv.csv");
        write_shv_csv(&p, &matrix()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("paradigm,L0.H0,L0.H1,L1.H0,L1.H1\n"));
        let back = read_shv_csv(&p).unwrap();
        assert_eq!(back.means(), matrix().means());
        assert_eq!(back.topology, matrix().topology);
    }

    #[test]
    fn shv_rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "paradigm,L0.H0,L0.H2\na,1,2\n").unwrap();
        assert!(matches!(read_shv_csv(&p), Err(Error::Parse { line: 1, .. })));
        std::fs::write(&p, "paradigm,L0.H0\na,x\n").unwrap();
        assert!(matches!(read_shv_csv(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "paradigm,L0.H0\na,1\na,2\n").unwrap();
        assert!(matches!(read_shv_csv(&p), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_shv_csv(dir.path().join("missing.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn clusters_and_prune_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            ClusterRow { paradigm: "a".into(), category: "x".into(), cluster: 1 },
            ClusterRow { paradigm: "b".into(), category: "".into(), cluster: 0 },
        ];
        let p = dir.path().join("clusters.csv");
        write_clusters_csv(&p, &rows).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "paradigm,category,cluster\na,x,1\nb,,0\n");
        assert_eq!(read_clusters_csv(&p).unwrap(), rows);
        let reference = read_reference_csv(&p).unwrap();
        assert_eq!(reference["a"], "x");

        let m = PruneMatrix {
            paradigms: vec!["a".into(), "b".into()],
            n: 3,
            baseline: vec![Some(0.9), None],
            cells: vec![vec![Some(-0.5), Some(0.0)], vec![None, Some(0.25)]],
        };
        let p = dir.path().join("prune.csv");
        write_prune_csv(&p, &m).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "mask_source,baseline,a,b\na,0.9,-0.5,0\nb,,,0.25\n"
        );
        assert_eq!(read_prune_csv(&p, 3).unwrap(), m);
    }
}
