//! Raw binary matrix dumps, basis directories with a JSON manifest, and CSV helpers.
//!
//! A matrix file is a 16-byte header (rows, cols as little-endian `u64`) followed by
//! the entries in column-major order as little-endian `f64`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::pod_deim::{RankReport, ReducedBasis};
use crate::scalar::Real;

pub fn write_matrix<T: Real, W: Write>(m: &DMatrix<T>, mut w: W) -> Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for &x in m.iter() {
        w.write_all(&x.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix<T: Real, R: Read>(mut r: R) -> Result<DMatrix<T>> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows.checked_mul(cols).ok_or_else(|| Error::Format(format!("matrix header {rows}x{cols} overflows")))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word).map_err(|_| Error::Format(format!("truncated matrix data, expected {rows}x{cols}")))?;
        data.push(T::lit(f64::from_le_bytes(word)));
    }
    if r.read(&mut word)? != 0 {
        return Err(Error::Format(format!("trailing bytes after {rows}x{cols} matrix")));
    }
    Ok(DMatrix::from_vec(rows, cols, data))
}

pub fn save_matrix<T: Real>(m: &DMatrix<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix<T: Real>(path: &Path) -> Result<DMatrix<T>> {
    read_matrix(BufReader::new(File::open(path)?))
}

/// Writes a matrix as CSV rows.
pub fn save_matrix_csv<T: Real>(m: &DMatrix<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)].as_f64())).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Manifest stored next to the basis matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisManifest {
    pub grid: GridSpec<f64>,
    pub tol: f64,
    pub gamma_up: f64,
    pub ranks: RankReport,
    pub deim_u_l: Vec<usize>,
    pub deim_u_r: Vec<usize>,
    pub deim_v_l: Vec<usize>,
    pub deim_v_r: Vec<usize>,
    pub files: Vec<String>,
}

const BASIS_FILES: [&str; 10] = ["u_l", "u_r", "v_l", "v_r", "p_l", "p_r", "phi_u_l", "phi_u_r", "phi_v_l", "phi_v_r"];

fn basis_matrices<T: Real>(b: &ReducedBasis<T>) -> [&DMatrix<T>; 10] {
    [&b.u_l, &b.u_r, &b.v_l, &b.v_r, &b.p_l, &b.p_r, &b.phi_u_l, &b.phi_u_r, &b.phi_v_l, &b.phi_v_r]
}

/// Writes every basis to `dir/<name>.bin` and the manifest to `dir/manifest.json`.
pub fn save_basis<T: Real>(basis: &ReducedBasis<T>, grid: &GridSpec<T>, gamma_up: T, dir: &Path) -> Result<BasisManifest> {
    fs::create_dir_all(dir)?;
    for (name, m) in BASIS_FILES.iter().zip(basis_matrices(basis)) {
        save_matrix(m, &dir.join(format!("{name}.bin")))?;
    }
    let manifest = BasisManifest {
        grid: GridSpec::new(grid.n_x, grid.n_y, grid.b_x.as_f64(), grid.b_y.as_f64(), grid.reynolds.as_f64())?,
        tol: basis.tol,
        gamma_up: gamma_up.as_f64(),
        ranks: basis.ranks(),
        deim_u_l: basis.d_u_l.clone(),
        deim_u_r: basis.d_u_r.clone(),
        deim_v_l: basis.d_v_l.clone(),
        deim_v_r: basis.d_v_r.clone(),
        files: BASIS_FILES.iter().map(|n| format!("{n}.bin")).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<BasisManifest> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))
}

/// Reads a basis directory written by [`save_basis`].
pub fn load_basis<T: Real>(dir: &Path) -> Result<(ReducedBasis<T>, BasisManifest)> {
    let manifest = load_manifest(dir)?;
    let mut mats: Vec<DMatrix<T>> = BASIS_FILES
        .iter()
        .map(|name| load_matrix(&dir.join(format!("{name}.bin"))))
        .collect::<Result<_>>()?;
    let mut next = || mats.remove(0);
    let basis = ReducedBasis {
        u_l: next(),
        u_r: next(),
        v_l: next(),
        v_r: next(),
        p_l: next(),
        p_r: next(),
        phi_u_l: next(),
        phi_u_r: next(),
        phi_v_l: next(),
        phi_v_r: next(),
        d_u_l: manifest.deim_u_l.clone(),
        d_u_r: manifest.deim_u_r.clone(),
        d_v_l: manifest.deim_v_l.clone(),
        d_v_r: manifest.deim_v_r.clone(),
        tol: manifest.tol,
    };
    if basis.ranks() != manifest.ranks {
        return Err(Error::Format(format!("basis ranks {:?} disagree with manifest {:?}", basis.ranks(), manifest.ranks)));
    }
    Ok((basis, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_bitwise() {
        let m = DMatrix::from_fn(3, 5, |i, j| (i as f64 + 0.1) * (j as f64 - 1.7) / 3.0);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 15 * 8);
        assert_eq!(&buf[..8], &3u64.to_le_bytes());
        assert_eq!(&buf[16..24], &m[(0, 0)].to_le_bytes());
        assert_eq!(&buf[24..32], &m[(1, 0)].to_le_bytes());
        let back: DMatrix<f64> = read_matrix(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_and_trailing_data_rejected() {
        let m = DMatrix::<f64>::zeros(2, 2);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert!(matches!(read_matrix::<f64, _>(&buf[..buf.len() - 1]), Err(Error::Format(_))));
        buf.push(0);
        assert!(matches!(read_matrix::<f64, _>(&buf[..]), Err(Error::Format(_))));
    }
}
