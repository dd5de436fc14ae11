use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stacked::StackedVector;

pub const CSV_HEADER: &str = "iter,comm,oracle,seconds,dist_sq,gap,criterion,consensus,psi_x,psi_yz";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iter: u64,
    pub comm: u64,
    pub oracle: u64,
    pub seconds: f64,
    /// `‖x − x*‖²` over all blocks.
    pub dist_sq: f64,
    /// `F(x̄) − F*` at the block mean.
    pub gap: f64,
    /// `(μ/2)‖x − x*‖² + F(x_f) − F* − (μ/4)‖x_f − x*‖²`.
    pub criterion: f64,
    pub consensus: f64,
    pub psi_x: f64,
    pub psi_yz: f64,
}

/// Snapshots of a run; `comments` become leading `# ` lines in the CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub comments: Vec<String>,
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: MetricsRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// First row whose gap is at most `gap`.
    pub fn first_below_gap(&self, gap: f64) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.gap <= gap)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.iter, r.comm, r.oracle, r.seconds, r.dist_sq, r.gap, r.criterion, r.consensus, r.psi_x, r.psi_yz
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn parse_csv(r: impl BufRead) -> Result<Self> {
        let mut log = Self::new();
        let mut seen_header = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |msg: String| Error::Config(format!("csv line {}: {msg}", idx + 1));
            if let Some(c) = line.strip_prefix("# ") {
                log.comments.push(c.to_string());
                continue;
            }
            if !seen_header {
                if line != CSV_HEADER {
                    return Err(bad(format!("unexpected header `{line}`")));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(bad(format!("expected 10 fields, found {}", f.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| bad(format!("`{s}`: {e}")));
            let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
            log.rows.push(MetricsRow {
                iter: int(f[0])?,
                comm: int(f[1])?,
                oracle: int(f[2])?,
                seconds: float(f[3])?,
                dist_sq: float(f[4])?,
                gap: float(f[5])?,
                criterion: float(f[6])?,
                consensus: float(f[7])?,
                psi_x: float(f[8])?,
                psi_yz: float(f[9])?,
            });
        }
        if !seen_header {
            return Err(Error::Config("csv has no header".into()));
        }
        Ok(log)
    }
}

pub fn export_csv(log: &MetricsLog, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    log.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// `Σ_i ‖x_i − x̄‖²`.
pub fn consensus_error(x: &StackedVector) -> f64 {
    x.projected_norm_sq()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u64) -> MetricsRow {
        MetricsRow {
            iter: i,
            comm: 2 * i,
            oracle: 3 * i,
            seconds: 0.0,
            dist_sq: 1.0 / (i as f64 + 3.0),
            gap: std::f64::consts::PI * i as f64,
            criterion: -1e-300,
            consensus: 0.1,
            psi_x: 1e10 / 7.0,
            psi_yz: f64::MIN_POSITIVE,
        }
    }

    #[test]
    fn empty_log_is_header_only() {
        assert_eq!(MetricsLog::new().to_csv_string(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut log = MetricsLog::new();
        log.comments.push("chi=3.5".into());
        for i in 0..3 {
            log.push(row(i));
        }
        let text = log.to_csv_string();
        assert_eq!(text.lines().count(), 5);
        assert!(!text.contains('\r'));
        assert_eq!(MetricsLog::parse_csv(text.as_bytes()).unwrap(), log);
    }

    #[test]
    fn consensus_examples() {
        assert_eq!(consensus_error(&StackedVector::broadcast(3, &[1.0, 2.0])), 0.0);
        assert!((consensus_error(&StackedVector::from_flat(2, 1, vec![0.0, 2.0])) - 2.0).abs() < 1e-15);
    }
}
