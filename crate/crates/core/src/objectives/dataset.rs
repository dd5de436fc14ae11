use std::io::{BufRead, Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ObjectiveError;
use crate::rng::{streams, StreamKey};

/// Binary-labelled rows stored densely (row-major), labels in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self, ObjectiveError> {
        if features.len() != labels.len() * d {
            return Err(ObjectiveError::Shape(format!(
                "{} feature values for {} rows of width {d}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
            return Err(ObjectiveError::Shape(format!("label {bad} is not ±1")));
        }
        Ok(Self { d, features, labels })
    }

    pub fn empty(d: usize) -> Self {
        Self {
            d,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }

    pub fn label(&self, j: usize) -> f64 {
        self.labels[j]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks_exact(self.d.max(1)).zip(self.labels.iter().copied())
    }

    /// First `m` rows.
    pub fn head(&self, m: usize) -> Self {
        let m = m.min(self.len());
        Self {
            d: self.d,
            features: self.features[..m * self.d].to_vec(),
            labels: self.labels[..m].to_vec(),
        }
    }

    pub fn concat(parts: &[Dataset]) -> Self {
        let d = parts.first().map_or(0, |p| p.d);
        let mut out = Self::empty(d);
        for p in parts {
            assert_eq!(p.d, d, "dimension mismatch in concat");
            out.features.extend_from_slice(&p.features);
            out.labels.extend_from_slice(&p.labels);
        }
        out
    }

    pub fn max_row_norm(&self) -> f64 {
        self.rows()
            .map(|(a, _)| a.iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Label token → ±1. `+1`/`1` are positive; `-1`, `0` and covtype's class `2`
/// are negative.
fn map_label(tok: &str) -> Option<f64> {
    let v: f64 = tok.parse().ok()?;
    if v == 1.0 {
        Some(1.0)
    } else if v == -1.0 || v == 0.0 || v == 2.0 {
        Some(-1.0)
    } else {
        None
    }
}

/// Parses LIBSVM lines `<label> <idx>:<val> ...` (1-based indices) into a
/// dense dataset of width `d`.
pub fn parse_libsvm(reader: impl BufRead, d: usize) -> Result<Dataset, ObjectiveError> {
    let mut ds = Dataset::empty(d);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label_tok = toks.next().expect("non-empty line has a token");
        let label = map_label(label_tok).ok_or_else(|| ObjectiveError::Parse {
            line: lineno,
            message: format!("unsupported label `{label_tok}`"),
        })?;
        let start = ds.features.len();
        ds.features.resize(start + d, 0.0);
        for tok in toks {
            let (i, v) = tok.split_once(':').ok_or_else(|| ObjectiveError::Parse {
                line: lineno,
                message: format!("expected idx:val, got `{tok}`"),
            })?;
            let i: usize = i.parse().map_err(|_| ObjectiveError::Parse {
                line: lineno,
                message: format!("bad index `{i}`"),
            })?;
            let v: f64 = v.parse().map_err(|_| ObjectiveError::Parse {
                line: lineno,
                message: format!("bad value `{v}`"),
            })?;
            if i == 0 {
                return Err(ObjectiveError::Parse {
                    line: lineno,
                    message: "indices are 1-based".into(),
                });
            }
            if i > d {
                return Err(ObjectiveError::IndexOutOfRange { line: lineno, index: i, d });
            }
            ds.features[start + i - 1] = v;
        }
        ds.labels.push(label);
    }
    Ok(ds)
}

/// Contiguous split into `n` blocks of size `⌊m/n⌋` or `⌈m/n⌉`, the larger
/// blocks first.
pub fn partition(ds: &Dataset, n: usize) -> Result<Vec<Dataset>, ObjectiveError> {
    let m = ds.len();
    if n == 0 || m < n {
        return Err(ObjectiveError::TooFewSamples { samples: m, nodes: n });
    }
    let (base, extra) = (m / n, m % n);
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        out.push(Dataset {
            d: ds.d,
            features: ds.features[start * ds.d..(start + size) * ds.d].to_vec(),
            labels: ds.labels[start..start + size].to_vec(),
        });
        start += size;
    }
    Ok(out)
}

/// Raw cache: `m`, `d` as little-endian u64, then the row-major f64 matrix,
/// then one label byte per row (`0x01` = +1, `0xFF` = -1).
pub fn write_cache(ds: &Dataset, mut w: impl Write) -> Result<(), ObjectiveError> {
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.d as u64).to_le_bytes())?;
    for v in &ds.features {
        w.write_all(&v.to_le_bytes())?;
    }
    let labels: Vec<u8> = ds.labels.iter().map(|l| if *l > 0.0 { 0x01 } else { 0xFF }).collect();
    w.write_all(&labels)?;
    Ok(())
}

pub fn read_cache(mut r: impl Read) -> Result<Dataset, ObjectiveError> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let m = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let d = u64::from_le_bytes(word) as usize;
    let mut features = Vec::with_capacity(m * d);
    for _ in 0..m * d {
        r.read_exact(&mut word)?;
        features.push(f64::from_le_bytes(word));
    }
    let mut raw = vec![0u8; m];
    r.read_exact(&mut raw)?;
    let labels = raw
        .iter()
        .map(|b| match b {
            0x01 => Ok(1.0),
            0xFF => Ok(-1.0),
            other => Err(ObjectiveError::Shape(format!("bad label byte {other:#04x}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Dataset::new(d, features, labels)
}

/// Deterministic stand-in with covtype's layout (scaled binary version):
/// 10 continuous features in `[0, 1]`, a one-hot block of 4 and a one-hot block
/// of 40, labels from a noisy linear rule balanced at the median score.
pub fn synthetic_covtype_like(m: usize, seed: u64) -> Dataset {
    const D: usize = 54;
    let mut rng = StreamKey::new(seed, streams::PROBLEM_DATA).rng();
    let weights: Vec<f64> = (0..D).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut features = vec![0.0; m * D];
    let mut scores = Vec::with_capacity(m);
    for j in 0..m {
        let row = &mut features[j * D..(j + 1) * D];
        for v in row.iter_mut().take(10) {
            *v = rng.random::<f64>();
        }
        row[10 + rng.random_range(0..4)] = 1.0;
        row[14 + rng.random_range(0..40)] = 1.0;
        let noise: f64 = StandardNormal.sample(&mut rng);
        scores.push(row.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() + 0.5 * noise);
    }
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(m / 2).copied().unwrap_or(0.0);
    let labels = scores.iter().map(|s| if *s >= median { 1.0 } else { -1.0 }).collect();
    Dataset {
        d: D,
        features,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_format_examples() {
        let ds = parse_libsvm("1 1:0.5 3:2.0\n".as_bytes(), 3).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.label(0), 1.0);
        assert_eq!(ds.row(0), &[0.5, 0.0, 2.0]);
        let ds = parse_libsvm("2 2:1\n".as_bytes(), 2).unwrap();
        assert_eq!(ds.label(0), -1.0);
        assert_eq!(ds.row(0), &[0.0, 1.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_libsvm("1 1:0.5\n1 2:x\n".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, ObjectiveError::Parse { line: 2, .. }));
        let err = parse_libsvm("1 1:0.5\n\n-1 4:1\n".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, ObjectiveError::IndexOutOfRange { line: 3, index: 4, d: 3 }));
        let err = parse_libsvm("7 1:1\n".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, ObjectiveError::Parse { line: 1, .. }));
        let err = parse_libsvm("1 0:1\n".as_bytes(), 3).unwrap_err();
        assert!(matches!(err, ObjectiveError::Parse { line: 1, .. }));
    }

    #[test]
    fn partition_sizes() {
        let ds = synthetic_covtype_like(10, 1);
        let sizes: Vec<usize> = partition(&ds, 3).unwrap().iter().map(Dataset::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let sizes: Vec<usize> = partition(&ds.head(5), 5).unwrap().iter().map(Dataset::len).collect();
        assert_eq!(sizes, vec![1; 5]);
        let big = synthetic_covtype_like(10_000, 2);
        let parts = partition(&big, 100).unwrap();
        assert!(parts.iter().all(|p| p.len() == 100));
        assert!(matches!(
            partition(&ds.head(2), 3),
            Err(ObjectiveError::TooFewSamples { samples: 2, nodes: 3 })
        ));
    }

    #[test]
    fn cache_round_trips() {
        let ds = synthetic_covtype_like(17, 3);
        let mut buf = Vec::new();
        write_cache(&ds, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 17 * 54 * 8 + 17);
        assert_eq!(read_cache(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn synthetic_layout() {
        let ds = synthetic_covtype_like(200, 9);
        assert_eq!(ds.dim(), 54);
        for (row, _) in ds.rows() {
            assert_eq!(row[10..14].iter().sum::<f64>(), 1.0);
            assert_eq!(row[14..].iter().sum::<f64>(), 1.0);
            assert!(row[..10].iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let pos = ds.labels().iter().filter(|l| **l > 0.0).count();
        assert!((90..=110).contains(&pos));
    }
}
