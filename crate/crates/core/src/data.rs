//! Labelled samples, optionally weighted, plus CSV and binary persistence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary label in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn from_sign(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::InvalidInput(format!("label must be -1 or +1, got {other}"))),
        }
    }

    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    #[inline]
    pub fn is_pos(self) -> bool {
        self == Label::Pos
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

/// Feature vectors in R^d stored row-major, with labels and optional weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    dim: usize,
    features: Vec<T>,
    labels: Vec<Label>,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset from row-major features. Weights, when given, must be
    /// nonnegative and sum to 1.
    pub fn new(dim: usize, features: Vec<T>, labels: Vec<Label>, weights: Option<Vec<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature values do not form {} rows of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if let Some(w) = &weights {
            if w.len() != labels.len() {
                return Err(Error::InvalidInput("weights and labels differ in length".into()));
            }
            if w.iter().any(|&v| !(v >= T::zero())) {
                return Err(Error::InvalidInput("weights must be nonnegative".into()));
            }
            let total: f64 = w.iter().map(|v| v.as_f64()).sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
            }
        }
        Ok(Self { dim, features, labels, weights })
    }

    pub fn from_rows(rows: &[Vec<T>], labels: Vec<Label>) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("ragged feature rows".into()));
        }
        Self::new(dim, rows.concat(), labels, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn features(&self) -> &[T] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    /// Weight of sample `i`; uniform `1/n` when no weights were supplied.
    #[inline]
    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Some(w) => w[i],
            None => T::one() / T::lit(self.len() as f64),
        }
    }

    /// Weighted fraction of positive labels.
    pub fn positive_rate(&self) -> T {
        (0..self.len())
            .filter(|&i| self.labels[i].is_pos())
            .map(|i| self.weight(i))
            .sum()
    }

    pub fn has_both_labels(&self) -> bool {
        let pos = self.labels.iter().filter(|l| l.is_pos()).count();
        pos > 0 && pos < self.len()
    }

    /// Rows at `idx`, in order. Weights are renormalised to sum to 1.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut features = Vec::with_capacity(idx.len() * self.dim);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let weights = self.weights.as_ref().map(|w| {
            let picked: Vec<T> = idx.iter().map(|&i| w[i]).collect();
            let total: T = picked.iter().copied().sum();
            picked.into_iter().map(|v| v / total).collect()
        });
        Self { dim: self.dim, features, labels, weights }
    }

    pub fn with_flipped_labels(&self) -> Self {
        let mut out = self.clone();
        for l in &mut out.labels {
            *l = l.flipped();
        }
        out
    }

    /// Writes `x_1..x_d,y` (plus `w` when weighted).
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        if self.weights.is_some() {
            header.push("w".into());
        }
        wtr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.labels[i].sign().to_string());
            if let Some(w) = &self.weights {
                rec.push(format!("{:?}", w[i]));
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        let y_col = header
            .iter()
            .position(|h| h.trim() == "y")
            .ok_or_else(|| Error::Parse("missing `y` column".into()))?;
        let w_col = header.iter().position(|h| h.trim() == "w");
        let x_cols: Vec<usize> = header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.trim().starts_with("x_"))
            .map(|(i, _)| i)
            .collect();
        if x_cols.is_empty() {
            return Err(Error::Parse("no `x_*` feature columns".into()));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        };
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut weights = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            for &c in &x_cols {
                features.push(T::lit(parse(&rec[c])?));
            }
            let y = parse(&rec[y_col])?;
            labels.push(Label::from_sign(y as i64)?);
            if let Some(c) = w_col {
                weights.push(T::lit(parse(&rec[c])?));
            }
        }
        Self::new(x_cols.len(), features, labels, w_col.map(|_| weights))
    }

    /// Compact little-endian cache: magic, version, n, d, weight flag, f64 payload.
    pub fn write_binary<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&[u8::from(self.weights.is_some())])?;
        for v in &self.features {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        for l in &self.labels {
            w.write_all(&[l.sign() as u8])?;
        }
        if let Some(ws) = &self.weights {
            for v in ws {
                w.write_all(&v.as_f64().to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Parse("not a dataset cache".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Parse(format!("unsupported cache version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let mut features = Vec::with_capacity(n * dim);
        for _ in 0..n * dim {
            features.push(T::lit(read_f64(&mut r)?));
        }
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b = [0u8; 1];
            r.read_exact(&mut b)?;
            labels.push(Label::from_sign(i64::from(b[0] as i8))?);
        }
        let weights = if flag[0] == 1 {
            let mut ws = Vec::with_capacity(n);
            for _ in 0..n {
                ws.push(T::lit(read_f64(&mut r)?));
            }
            Some(ws)
        } else {
            None
        };
        Self::new(dim, features, labels, weights)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"KRMD";

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset<f64> {
        Dataset::from_rows(
            &[vec![0.0, 1.0], vec![1.5, -2.0], vec![0.25, 0.125]],
            vec![Label::Pos, Label::Neg, Label::Pos],
        )
        .unwrap()
    }

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(Dataset::<f64>::new(2, vec![0.0; 5], vec![Label::Pos; 3], None).is_err());
        assert!(Dataset::<f64>::new(1, vec![0.0; 2], vec![Label::Pos; 2], Some(vec![0.5])).is_err());
        assert!(Dataset::<f64>::new(1, vec![0.0; 2], vec![Label::Pos; 2], Some(vec![0.5, 0.6])).is_err());
    }

    #[test]
    fn uniform_weights_are_implied() {
        let d = toy();
        assert!((d.weight(1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.positive_rate() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn csv_and_binary_preserve_contents() {
        let dir = tempfile::tempdir().unwrap();
        let d = toy();
        let csv_path = dir.path().join("d.csv");
        d.write_csv(&csv_path).unwrap();
        assert_eq!(Dataset::<f64>::read_csv(&csv_path).unwrap(), d);

        let weighted = Dataset::new(1, vec![0.1, 0.2], vec![Label::Neg, Label::Pos], Some(vec![0.25, 0.75])).unwrap();
        let bin_path = dir.path().join("d.bin");
        weighted.write_binary(&bin_path).unwrap();
        assert_eq!(Dataset::<f64>::read_binary(&bin_path).unwrap(), weighted);
        weighted.write_csv(&csv_path).unwrap();
        assert_eq!(Dataset::<f64>::read_csv(&csv_path).unwrap(), weighted);
    }

    #[test]
    fn subset_renormalises_weights() {
        let d = Dataset::new(1, vec![0.0, 1.0, 2.0], vec![Label::Neg, Label::Pos, Label::Pos], Some(vec![0.5, 0.25, 0.25]))
            .unwrap();
        let s = d.subset(&[1, 2]);
        assert_eq!(s.weights().unwrap(), &[0.5, 0.5]);
    }
}
