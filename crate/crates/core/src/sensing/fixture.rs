//! Binary dump/load of ensembles for cross-language conformance fixtures.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"RCS1" | n: u64 | k: u64 | r0: u64 | seed: u64 | payload: f64 ...
//! ```
//!
//! The payload is row-major: `2·r0` matrices of `k × n` for an ensemble,
//! `2·r0` vectors of length `k` for measurements, or `n` values for a
//! signal vector.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{MeasurementEnsemble, NoiseMode, SensingEnsemble};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};

pub const FIXTURE_MAGIC: [u8; 4] = *b"RCS1";

const HEADER_LEN: usize = 4 + 4 * 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixtureHeader {
    pub n: u64,
    pub k: u64,
    pub r0: u64,
    pub seed: u64,
}

impl FixtureHeader {
    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&FIXTURE_MAGIC);
        for (i, v) in [self.n, self.k, self.r0, self.seed].into_iter().enumerate() {
            out[4 + 8 * i..12 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    fn parse(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < HEADER_LEN || bytes[..4] != FIXTURE_MAGIC {
            return Err(format_error(path, "missing RCS1 header"));
        }
        let field = |i: usize| {
            u64::from_le_bytes(bytes[4 + 8 * i..12 + 8 * i].try_into().expect("8 bytes"))
        };
        Ok(Self {
            n: field(0),
            k: field(1),
            r0: field(2),
            seed: field(3),
        })
    }
}

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn write_file<'a>(path: &Path, header: FixtureHeader, chunks: impl Iterator<Item = &'a [f64]>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&header.to_bytes()).map_err(|e| Error::io(path, e))?;
    for chunk in chunks {
        for x in chunk {
            w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<(FixtureHeader, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let header = FixtureHeader::parse(&bytes, path)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return Err(format_error(path, "payload is not a whole number of f64 values"));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, values))
}

fn expect_len(path: &Path, what: &str, expected: u64, found: usize) -> Result<usize> {
    if expected != found as u64 {
        return Err(format_error(
            path,
            format!("{what} payload holds {found} values, header implies {expected}"),
        ));
    }
    Ok(found)
}

fn checked_dims(path: &Path, h: FixtureHeader) -> Result<(usize, usize, usize)> {
    if h.n == 0 || h.k == 0 || h.r0 == 0 {
        return Err(format_error(path, "n, k and r0 must all be at least 1"));
    }
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| format_error(path, "dimension overflows usize"));
    Ok((to_usize(h.n)?, to_usize(h.k)?, to_usize(h.r0)?))
}

pub fn save_ensemble(ensemble: &SensingEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let header = FixtureHeader {
        n: ensemble.n() as u64,
        k: ensemble.k() as u64,
        r0: ensemble.r0() as u64,
        seed: ensemble.master_seed(),
    };
    let matrices = (0..ensemble.rounds())
        .map(|r| ensemble.matrix(r).map(|m| m.into_owned()))
        .collect::<Result<Vec<_>>>()?;
    write_file(path, header, matrices.iter().map(DenseMatrix::as_slice))
}

pub fn load_ensemble(path: impl AsRef<Path>) -> Result<SensingEnsemble> {
    let path = path.as_ref();
    let (header, values) = read_file(path)?;
    let (n, k, r0) = checked_dims(path, header)?;
    let per = k * n;
    expect_len(path, "ensemble", 2 * header.r0 * header.k * header.n, values.len())?;
    let matrices = values
        .chunks_exact(per)
        .map(|c| DenseMatrix::from_row_major(k, n, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(matrices.len(), 2 * r0);
    SensingEnsemble::from_matrices(matrices, header.seed)
}

/// Writes measurement vectors; `n` and `seed` are echoed from the ensemble
/// they were taken with.
pub fn save_measurements(
    measurements: &MeasurementEnsemble,
    n: usize,
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    let header = FixtureHeader {
        n: n as u64,
        k: measurements.k() as u64,
        r0: (measurements.rounds() / 2) as u64,
        seed,
    };
    write_file(
        path.as_ref(),
        header,
        measurements.vectors().iter().map(|v| v.as_ref()),
    )
}

/// Loads measurement vectors. The format carries no noise metadata, so the
/// result reports `σ_w = 0` in theory mode; recovery never reads either.
pub fn load_measurements(path: impl AsRef<Path>) -> Result<(FixtureHeader, MeasurementEnsemble)> {
    let path = path.as_ref();
    let (header, values) = read_file(path)?;
    let (_, k, _) = checked_dims(path, header)?;
    expect_len(path, "measurement", 2 * header.r0 * header.k, values.len())?;
    let vectors = values
        .chunks_exact(k)
        .map(|c| DenseVector::new(c.to_vec()))
        .collect();
    let m = MeasurementEnsemble::from_vectors(vectors, 0.0, NoiseMode::Theory)?;
    Ok((header, m))
}

pub fn save_vector(values: &[f64], header: FixtureHeader, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), header, std::iter::once(values))
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<(FixtureHeader, DenseVector)> {
    let path = path.as_ref();
    let (header, values) = read_file(path)?;
    expect_len(path, "vector", header.n, values.len())?;
    Ok((header, DenseVector::new(values)))
}
