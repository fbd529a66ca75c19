//! JSON schemas for matrices, polynomials and certificates, plus atomic
//! file writes.

use std::path::Path;

use elliptic_range::CMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Square matrix file: `n` and `n*n` row-major `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub data: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        if self.n == 0 {
            return Err(CliError::parse("matrix dimension must be positive"));
        }
        if self.data.len() != self.n * self.n {
            return Err(CliError::parse(format!(
                "expected {} entries for an {}x{} matrix, found {}",
                self.n * self.n,
                self.n,
                self.n,
                self.data.len()
            )));
        }
        if self
            .data
            .iter()
            .any(|e| !(e[0].is_finite() && e[1].is_finite()))
        {
            return Err(CliError::parse("matrix entries must be finite"));
        }
        let n = self.n;
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let e = self.data[i * n + j];
            Complex64::new(e[0], e[1])
        }))
    }

    pub fn from_matrix(m: &CMatrix, name: Option<String>) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixFile { n, data, name }
    }
}

/// Rectangular matrix payload used inside certificate files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixBlock {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixBlock {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixBlock {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

/// Polynomial coefficients, ascending powers, `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyFile {
    pub coeffs: Vec<[f64; 2]>,
}

impl PolyFile {
    pub fn to_coeffs(&self) -> Result<Vec<Complex64>, CliError> {
        if self.coeffs.is_empty() {
            return Err(CliError::parse("polynomial needs at least one coefficient"));
        }
        Ok(self
            .coeffs
            .iter()
            .map(|e| Complex64::new(e[0], e[1]))
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertMeta {
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
}

/// Scaling-certificate file: `Gamma`, `Delta`, the isometry `E`, the
/// contraction `Y` and the residual diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFile {
    pub gamma: MatrixBlock,
    pub delta_matrix: MatrixBlock,
    #[serde(rename = "E")]
    pub e: MatrixBlock,
    #[serde(rename = "Y")]
    pub y: MatrixBlock,
    pub residuals: std::collections::BTreeMap<String, f64>,
    pub meta: CertMeta,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("cannot parse {}: {e}", path.display())))
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into()),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::numeric(format!("cannot move into place {}: {e}", path.display())))
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::numeric(format!("serialization failed: {e}")))?;
    write_atomic(path, &text)
}
