//! Plain-text exchange files between CLI stages.
//!
//! Feature file: a `#space=<name>,dim=<d>` header, then `id,v1,...,vd` rows.
//! Label file: `id,labels` header, then `id,<5-bit string>` rows.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use needscope_core::{Dataset, FeatureSpace, GlasserLabelSet};
use needscope_features::bovw::DescriptorStore;
use needscope_features::surf::dump::{read_records, write_records, DescriptorRecord};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub space: FeatureSpace,
    pub dim: usize,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl FeatureTable {
    /// Columns are profiles in row order.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.rows.len(), |i, j| self.rows[j].1[i])
    }

    pub fn ids(&self) -> Vec<&str> {
        self.rows.iter().map(|(id, _)| id.as_str()).collect()
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| HarnessError::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).map_err(|e| HarnessError::io(path, e))?))
}

pub fn write_features(path: &Path, table: &FeatureTable) -> Result<()> {
    let io = |e| HarnessError::io(path, e);
    let mut w = create(path)?;
    writeln!(w, "#space={},dim={}", table.space, table.dim).map_err(io)?;
    for (id, values) in &table.rows {
        write!(w, "{id}").map_err(io)?;
        for v in values {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_features(path: &Path) -> Result<FeatureTable> {
    let bad = |m: String| HarnessError::format(format!("feature file {}", path.display()), m);
    let mut lines = open(path)?.lines();
    let header = lines.next().transpose().map_err(|e| HarnessError::io(path, e))?.ok_or_else(|| bad("empty file".into()))?;
    let mut space = None;
    let mut dim = None;
    for part in header.trim_start_matches('#').split(',') {
        match part.split_once('=') {
            Some(("space", s)) => space = Some(s.parse::<FeatureSpace>()?),
            Some(("dim", d)) => dim = Some(d.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            _ => return Err(bad(format!("bad header field {part:?}"))),
        }
    }
    let (space, dim) = (space.ok_or_else(|| bad("header lacks space".into()))?, dim.ok_or_else(|| bad("header lacks dim".into()))?);
    let mut rows = Vec::new();
    for line in lines {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id = fields.next().unwrap_or_default().to_string();
        let values = fields.map(|f| f.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|e| bad(format!("{id}: {e}")))?;
        if values.len() != dim {
            return Err(bad(format!("{id}: {} values, header says {dim}", values.len())));
        }
        rows.push((id, values));
    }
    Ok(FeatureTable { space, dim, rows })
}

pub fn write_labels(path: &Path, dataset: &Dataset) -> Result<()> {
    let io = |e| HarnessError::io(path, e);
    let mut w = create(path)?;
    writeln!(w, "id,labels").map_err(io)?;
    for p in dataset.profiles() {
        writeln!(w, "{},{}", p.id, p.labels).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_labels(path: &Path) -> Result<Vec<(String, GlasserLabelSet)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let (id, bits) = line
            .split_once(',')
            .ok_or_else(|| HarnessError::format(format!("label file {}", path.display()), format!("line {}: expected id,labels", i + 1)))?;
        out.push((id.to_string(), bits.parse()?));
    }
    Ok(out)
}

pub fn write_descriptors(path: &Path, records: &[DescriptorRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_records(&mut w, records).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

/// Reads a descriptor dump into a store keyed by record id.
pub fn read_descriptor_store(path: &Path) -> Result<DescriptorStore> {
    let mut store = DescriptorStore::new();
    for r in read_records(open(path)?)? {
        store.entry(r.id).or_default().push(r.descriptor);
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let t = FeatureTable { space: FeatureSpace::Text, dim: 3, rows: vec![("a".into(), vec![0.1, -2.0, 1e-17]), ("b".into(), vec![0.0, 1.0 / 3.0, 5.0])] };
        write_features(&path, &t).unwrap();
        assert!(fs::read_to_string(&path).unwrap().starts_with("#space=text,dim=3\n"));
        assert_eq!(read_features(&path).unwrap(), t);
        fs::write(&path, "#space=text,dim=2\na,1,2,3\n").unwrap();
        assert!(read_features(&path).is_err());
    }
}
