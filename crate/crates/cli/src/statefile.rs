//! JSON state files: `{"dims": [M, N], "matrix": [[[re, im], ...], ...]}`.

use std::fs;
use std::path::Path;

use entrans::linalg::c;
use entrans::statecore::BipartitePureState;
use entrans::ComplexMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: [usize; 2],
    /// Row-major coefficients, each `[re, im]`.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let matrix = (0..m.rows())
            .map(|r| (0..m.cols()).map(|k| [m.get(r, k).re, m.get(r, k).im]).collect())
            .collect();
        StateFile { dims: [m.rows(), m.cols()], matrix }
    }

    pub fn from_state(state: &BipartitePureState) -> Self {
        Self::from_matrix(state.coeffs())
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, CliError> {
        let [rows, cols] = self.dims;
        if self.matrix.len() != rows {
            return Err(CliError::Invalid(format!(
                "dims declare {rows} rows, matrix has {}",
                self.matrix.len()
            )));
        }
        if let Some(r) = self.matrix.iter().position(|row| row.len() != cols) {
            return Err(CliError::Invalid(format!("row {r} does not have {cols} entries")));
        }
        let entries = self.matrix.iter().flatten().map(|&[x, y]| c(x, y)).collect();
        Ok(ComplexMatrix::new(rows, cols, entries)?)
    }

    /// Parses into a state; `normalize` rescales instead of rejecting off-norm input.
    pub fn to_state(&self, normalize: bool) -> Result<BipartitePureState, CliError> {
        let m = self.to_matrix()?;
        let state = if normalize {
            BipartitePureState::normalized(m)?
        } else {
            BipartitePureState::validate(m, self.dims[0], self.dims[1])?
        };
        Ok(state)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("state file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state file serializes")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}

/// A state file read from disk together with the SHA-256 of its bytes.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub file: StateFile,
    pub sha256: String,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Invalid(format!("{} is not UTF-8", path.display())))?;
    Ok(Loaded { file: StateFile::parse(text)?, sha256 })
}
