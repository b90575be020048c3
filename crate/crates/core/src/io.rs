//! CSV output. Every file opens with `# sosmp <version> config=<hash>`
//! followed by a header row; floats use the shortest round-trip form so
//! reruns are byte-identical.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::quadrature::Grid;
use crate::sosmp::RunTrace;
use crate::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 8 bytes of the SHA-256 of `text`, as hex.
pub fn config_hash(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    d[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub struct CsvWriter<W: Write> {
    out: W,
    cols: usize,
}

impl CsvWriter<BufWriter<File>> {
    pub fn create(path: &Path, hash: &str, header: &[&str]) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), hash, header)
    }
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, hash: &str, header: &[&str]) -> Result<Self> {
        writeln!(out, "# sosmp {VERSION} config={hash}")?;
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            cols: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[&dyn Display]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.cols);
        let line: Vec<String> = fields.iter().map(|f| f.to_string()).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// `t, e_t, e_rel, max_edge_err, wall_ms`; wall time is written only when
/// `timing` is set, otherwise the column is left empty.
pub fn write_trace(path: &Path, hash: &str, trace: &RunTrace, timing: bool) -> Result<()> {
    let mut w = CsvWriter::create(path, hash, &["t", "e_t", "e_rel", "max_edge_err", "wall_ms"])?;
    for r in &trace.records {
        let wall = if timing { format!("{:.3}", r.wall_ms) } else { String::new() };
        w.row(&[&r.t, &r.e_t, &r.e_rel, &r.max_edge_err, &wall])?;
    }
    w.finish()?;
    Ok(())
}

/// `edge_id, j, a_j` with 1-based `j`.
pub fn write_coeffs(path: &Path, hash: &str, coeffs: &[Vec<f64>]) -> Result<()> {
    let mut w = CsvWriter::create(path, hash, &["edge_id", "j", "a_j"])?;
    for (e, a) in coeffs.iter().enumerate() {
        for (j, v) in a.iter().enumerate() {
            w.row(&[&e, &(j + 1), v])?;
        }
    }
    w.finish()?;
    Ok(())
}

/// `node, x, density` (1-D) or `node, x1, x2, density` (2-D).
pub fn write_marginals(path: &Path, hash: &str, grid: &Grid, marginals: &[Vec<f64>]) -> Result<()> {
    let two = grid.dims() == 2;
    let header: &[&str] = if two {
        &["node", "x1", "x2", "density"]
    } else {
        &["node", "x", "density"]
    };
    let mut w = CsvWriter::create(path, hash, header)?;
    for (u, m) in marginals.iter().enumerate() {
        for (i, v) in m.iter().enumerate() {
            let p = grid.point(i);
            if two {
                w.row(&[&u, &p[0], &p[1], v])?;
            } else {
                w.row(&[&u, &p[0], v])?;
            }
        }
    }
    w.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let mut w = CsvWriter::new(Vec::new(), "abc", &["a", "b"]).unwrap();
        w.row(&[&1usize, &0.1f64]).unwrap();
        let s = String::from_utf8(w.finish().unwrap()).unwrap();
        assert_eq!(s, format!("# sosmp {VERSION} config=abc\na,b\n1,0.1\n"));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("x"), config_hash("x"));
        assert_ne!(config_hash("x"), config_hash("y"));
        assert_eq!(config_hash("").len(), 16);
    }
}
