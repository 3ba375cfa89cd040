//! Little-endian binary containers for snapshots and coefficient vectors.
//!
//! Snapshot file: magic `SCSD`, then `u32` version, n, subdivisions, d, m, K,
//! then `m` samples of `d` doubles and `m` nodal solutions of `K` doubles,
//! row-major.
//!
//! Coefficient file: magic `SCSC` and the same header with `m` replaced by
//! the basis size `N`, followed by `N` rows of `K` doubles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::polychaos::ParamSample;

pub const FORMAT_VERSION: u32 = 1;
const SNAPSHOT_MAGIC: &[u8; 4] = b"SCSD";
const COEFFICIENT_MAGIC: &[u8; 4] = b"SCSC";

/// Samples and the matching nodal solutions of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSet {
    pub mesh_n: usize,
    pub subdivisions: usize,
    pub samples: Vec<ParamSample>,
    /// `m x K`, row `i` solves the problem at `samples[i]`.
    pub solutions: DMatrix<f64>,
}

/// A Hilbert-valued coefficient vector stored as an `N x K` table.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub mesh_n: usize,
    pub subdivisions: usize,
    pub d: usize,
    pub coords: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Header {
    n: u32,
    subdivisions: u32,
    d: u32,
    rows: u32,
    k: u32,
}

fn narrow(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Config(format!("{what} = {v} does not fit the file header")))
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], h: Header) -> std::io::Result<()> {
    w.write_all(magic)?;
    for v in [FORMAT_VERSION, h.n, h.subdivisions, h.d, h.rows, h.k] {
        w.write_u32::<LittleEndian>(v)?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], path: &Path) -> Result<Header> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut got = [0u8; 4];
    r.read_exact(&mut got).map_err(|e| bad(e.to_string()))?;
    if &got != magic {
        return Err(bad(format!("expected magic {:?}, found {:?}", String::from_utf8_lossy(magic), String::from_utf8_lossy(&got))));
    }
    let mut vals = [0u32; 6];
    for v in &mut vals {
        *v = r.read_u32::<LittleEndian>().map_err(|e| bad(e.to_string()))?;
    }
    if vals[0] != FORMAT_VERSION {
        return Err(bad(format!("unsupported version {}", vals[0])));
    }
    Ok(Header {
        n: vals[1],
        subdivisions: vals[2],
        d: vals[3],
        rows: vals[4],
        k: vals[5],
    })
}

fn write_rows<W: Write>(w: &mut W, m: &DMatrix<f64>) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_f64::<LittleEndian>(m[(i, j)])?;
        }
    }
    Ok(())
}

fn read_rows<R: Read>(r: &mut R, rows: usize, cols: usize, path: &Path) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = r.read_f64::<LittleEndian>().map_err(|e| Error::Format {
                path: path.to_path_buf(),
                reason: format!("truncated payload: {e}"),
            })?;
        }
    }
    Ok(out)
}

fn expect_eof<R: Read>(r: &mut R, path: &Path) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::Format {
            path: path.to_path_buf(),
            reason: "trailing bytes after payload".into(),
        }),
    }
}

impl SnapshotSet {
    pub fn write(&self, path: &Path) -> Result<()> {
        let m = self.samples.len();
        if self.solutions.nrows() != m {
            return Err(Error::ShapeMismatch(format!("{m} samples but {} solutions", self.solutions.nrows())));
        }
        let d = self.samples.first().map_or(0, ParamSample::dim);
        if self.samples.iter().any(|y| y.dim() != d) {
            return Err(Error::ShapeMismatch("samples of differing dimension".into()));
        }
        let header = Header {
            n: narrow(self.mesh_n, "n")?,
            subdivisions: narrow(self.subdivisions, "subdivisions")?,
            d: narrow(d, "d")?,
            rows: narrow(m, "m")?,
            k: narrow(self.solutions.ncols(), "K")?,
        };
        let mut w = BufWriter::new(File::create(path)?);
        write_header(&mut w, SNAPSHOT_MAGIC, header)?;
        for y in &self.samples {
            for &v in y.as_slice() {
                w.write_f64::<LittleEndian>(v)?;
            }
        }
        write_rows(&mut w, &self.solutions)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let h = read_header(&mut r, SNAPSHOT_MAGIC, path)?;
        let (m, d, k) = (h.rows as usize, h.d as usize, h.k as usize);
        let ys = read_rows(&mut r, m, d, path)?;
        let samples = (0..m)
            .map(|i| {
                ParamSample::new(ys.row(i).iter().copied().collect()).map_err(|e| Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("sample {i}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let solutions = read_rows(&mut r, m, k, path)?;
        expect_eof(&mut r, path)?;
        Ok(Self {
            mesh_n: h.n as usize,
            subdivisions: h.subdivisions as usize,
            samples,
            solutions,
        })
    }

    /// The first `m` samples and solutions.
    pub fn prefix(&self, m: usize) -> Result<(Vec<ParamSample>, DMatrix<f64>)> {
        if m > self.samples.len() {
            return Err(Error::TooFewSamples {
                needed: m,
                got: self.samples.len(),
            });
        }
        Ok((self.samples[..m].to_vec(), self.solutions.rows(0, m).into_owned()))
    }
}

impl CoefficientTable {
    pub fn write(&self, path: &Path) -> Result<()> {
        let header = Header {
            n: narrow(self.mesh_n, "n")?,
            subdivisions: narrow(self.subdivisions, "subdivisions")?,
            d: narrow(self.d, "d")?,
            rows: narrow(self.coords.nrows(), "N")?,
            k: narrow(self.coords.ncols(), "K")?,
        };
        let mut w = BufWriter::new(File::create(path)?);
        write_header(&mut w, COEFFICIENT_MAGIC, header)?;
        write_rows(&mut w, &self.coords)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let h = read_header(&mut r, COEFFICIENT_MAGIC, path)?;
        let coords = read_rows(&mut r, h.rows as usize, h.k as usize, path)?;
        expect_eof(&mut r, path)?;
        Ok(Self {
            mesh_n: h.n as usize,
            subdivisions: h.subdivisions as usize,
            d: h.d as usize,
            coords,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polychaos::draw_samples;

    fn sample_set() -> SnapshotSet {
        SnapshotSet {
            mesh_n: 2,
            subdivisions: 4,
            samples: draw_samples(3, 5, 9),
            solutions: DMatrix::from_fn(5, 9, |i, j| (i * 10 + j) as f64 * 0.25 - 3.0),
        }
    }

    #[test]
    fn snapshot_round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.scsd");
        let set = sample_set();
        set.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"SCSD");
        let words: Vec<u32> = bytes[4..28].chunks(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(words, vec![1, 2, 4, 3, 5, 9]);
        assert_eq!(bytes.len(), 28 + 8 * (5 * 3 + 5 * 9));
        // first sample coordinate immediately follows the header
        assert_eq!(f64::from_le_bytes(bytes[28..36].try_into().unwrap()), set.samples[0].as_slice()[0]);
        // first solution row follows all samples
        let off = 28 + 8 * 15;
        assert_eq!(f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap()), set.solutions[(0, 1)]);
        assert_eq!(SnapshotSet::read(&path).unwrap(), set);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.scsd");
        sample_set().write(&path).unwrap();
        let good = std::fs::read(&path).unwrap();

        std::fs::write(&path, &good[..good.len() - 3]).unwrap();
        assert!(matches!(SnapshotSet::read(&path), Err(Error::Format { .. })));

        let mut extra = good.clone();
        extra.push(0);
        std::fs::write(&path, &extra).unwrap();
        assert!(matches!(SnapshotSet::read(&path), Err(Error::Format { .. })));

        let mut magic = good.clone();
        magic[3] = b'C';
        std::fs::write(&path, &magic).unwrap();
        assert!(matches!(SnapshotSet::read(&path), Err(Error::Format { .. })));

        let mut version = good;
        version[4] = 7;
        std::fs::write(&path, &version).unwrap();
        assert!(matches!(SnapshotSet::read(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn prefix_is_leading_rows() {
        let set = sample_set();
        let (ys, sol) = set.prefix(2).unwrap();
        assert_eq!(ys, set.samples[..2].to_vec());
        assert_eq!(sol, set.solutions.rows(0, 2).into_owned());
        assert!(set.prefix(6).is_err());
    }

    #[test]
    fn coefficient_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.scsc");
        let table = CoefficientTable {
            mesh_n: 1,
            subdivisions: 21,
            d: 8,
            coords: DMatrix::from_fn(45, 20, |i, j| (i as f64).sin() * j as f64),
        };
        table.write(&path).unwrap();
        assert_eq!(&std::fs::read(&path).unwrap()[..4], b"SCSC");
        assert_eq!(CoefficientTable::read(&path).unwrap(), table);
        assert!(SnapshotSet::read(&path).is_err());
    }
}
