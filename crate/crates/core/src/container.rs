//! Versioned binary container: a magic line, a `key = value` metadata
//! block and raw little-endian `f64` fields.
//!
//! Layout: `MAGIC\n`, `u64` metadata length, metadata bytes, `u64` field
//! count, `u64` points per axis, then each field's `n³` samples.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const GROUND_STATE_MAGIC: &str = "HARTREE-GS-1";
pub const MINIMIZER_MAGIC: &str = "HARTREE-MIN-1";

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub magic: String,
    pub metadata: Vec<(String, String)>,
    pub n: usize,
    pub fields: Vec<Vec<f64>>,
}

impl Container {
    pub fn new(magic: &str, n: usize) -> Self {
        Self {
            magic: magic.to_string(),
            metadata: Vec::new(),
            n,
            fields: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    /// Stores a float so that it parses back bit for bit.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Format(format!("missing metadata key '{key}'")))?;
        raw.parse()
            .map_err(|_| Error::Format(format!("metadata '{key}' = '{raw}' is not a number")))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let len = self.n * self.n * self.n;
        if let Some(bad) = self.fields.iter().find(|f| f.len() != len) {
            return Err(Error::FieldLength {
                expected: len,
                actual: bad.len(),
            });
        }
        let mut meta = String::new();
        for (k, v) in &self.metadata {
            if k.contains('=') || k.contains('\n') || v.contains('\n') {
                return Err(Error::Format(format!("unencodable metadata entry '{k}'")));
            }
            meta.push_str(&format!("{k} = {v}\n"));
        }
        w.write_all(self.magic.as_bytes())?;
        w.write_all(b"\n")?;
        w.write_all(&(meta.len() as u64).to_le_bytes())?;
        w.write_all(meta.as_bytes())?;
        w.write_all(&(self.fields.len() as u64).to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(len * 8);
        for f in &self.fields {
            buf.clear();
            for v in f {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read, expected_magic: &str) -> Result<Self> {
        let mut magic = vec![0u8; expected_magic.len() + 1];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("file too short for header".into()))?;
        if &magic[..expected_magic.len()] != expected_magic.as_bytes() || magic[expected_magic.len()] != b'\n' {
            return Err(Error::Format(format!("bad header, expected '{expected_magic}'")));
        }
        let meta_len = read_u64(&mut r)? as usize;
        if meta_len > 1 << 24 {
            return Err(Error::Format(format!("metadata block of {meta_len} bytes")));
        }
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)
            .map_err(|_| Error::Format("truncated metadata".into()))?;
        let meta = String::from_utf8(meta).map_err(|_| Error::Format("metadata is not UTF-8".into()))?;
        let mut metadata = Vec::new();
        for line in meta.lines() {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Format(format!("bad metadata line '{line}'")))?;
            metadata.push((k.to_string(), v.to_string()));
        }
        let count = read_u64(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        if n == 0 || n > 4096 || count > 64 {
            return Err(Error::Format(format!("implausible sizes n = {n}, fields = {count}")));
        }
        let len = n * n * n;
        let mut fields = Vec::with_capacity(count);
        let mut buf = vec![0u8; len * 8];
        for _ in 0..count {
            r.read_exact(&mut buf)
                .map_err(|_| Error::Format("truncated field data".into()))?;
            fields.push(
                buf.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            );
        }
        Ok(Self {
            magic: expected_magic.to_string(),
            metadata,
            n,
            fields,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, expected_magic: &str) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), expected_magic)
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_in_memory() {
        let mut c = Container::new(GROUND_STATE_MAGIC, 2);
        c.set_f64("a_star", 0.1 + 0.2);
        c.set("note", "x y");
        c.fields.push((0..8).map(|i| i as f64 * 0.1).collect());
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        assert!(bytes.starts_with(b"HARTREE-GS-1\n"));
        let back = Container::read_from(&bytes[..], GROUND_STATE_MAGIC).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.get_f64("a_star").unwrap().to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn wrong_magic_and_truncation() {
        let mut c = Container::new(MINIMIZER_MAGIC, 2);
        c.fields.push(vec![1.0; 8]);
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        assert!(Container::read_from(&bytes[..], GROUND_STATE_MAGIC).is_err());
        assert!(Container::read_from(&bytes[..bytes.len() - 3], MINIMIZER_MAGIC).is_err());
    }

    #[test]
    fn rejects_wrong_field_length() {
        let mut c = Container::new(MINIMIZER_MAGIC, 2);
        c.fields.push(vec![1.0; 7]);
        assert!(c.write_to(Vec::new()).is_err());
    }
}
