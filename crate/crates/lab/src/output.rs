//! CSV tables (UTF-8, header row, LF line endings) and checksums.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use sha2::{Digest, Sha256};

/// A table built in memory and serialized in one go.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Serialize; fails if any row does not match the header.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        for (i, r) in self.rows.iter().enumerate() {
            ensure!(r.len() == self.header.len(), "row {i} has {} fields, header has {}", r.len(), self.header.len());
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes)
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        match self.header.iter().position(|h| h == name) {
            Some(i) => Ok(i),
            None => bail!("no column {name:?} (have {})", self.header.join(", ")),
        }
    }

    /// Numeric column, skipping rows whose `filter` column differs from the given value.
    pub fn floats(&self, name: &str, filter: Option<(&str, &str)>) -> Result<Vec<f64>> {
        let i = self.column(name)?;
        let f = match filter {
            Some((c, v)) => Some((self.column(c)?, v)),
            None => None,
        };
        self.rows
            .iter()
            .filter(|r| f.is_none_or(|(j, v)| r[j] == v))
            .map(|r| r[i].parse::<f64>().with_context(|| format!("column {name}: {:?} is not a number", r[i])))
            .collect()
    }
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Named output files in write order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileSet(pub BTreeMap<String, Vec<u8>>);

impl FileSet {
    pub fn insert(&mut self, name: &str, bytes: Vec<u8>) {
        self.0.insert(name.to_string(), bytes);
    }

    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.0.iter().map(|(k, v)| (k.clone(), sha256_hex(v))).collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.0 {
            let p = dir.join(name);
            std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_round_trips() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.1), num(2.0)]);
        t.push(vec!["x,y".into(), String::new()]);
        let b = t.to_bytes().unwrap();
        assert!(!b.contains(&b'\r'));
        assert_eq!(std::str::from_utf8(&b).unwrap().lines().next(), Some("a,b"));
        assert_eq!(Table::from_bytes(&b).unwrap(), t);
        assert_eq!(t.floats("b", Some(("a", "0.1"))).unwrap(), vec![2.0]);
        t.push(vec!["1".into()]);
        assert!(t.to_bytes().is_err());
    }

    #[test]
    fn checksum_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
