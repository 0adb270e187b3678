//! JSON state and theory files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major. A state
//! file holds either `"matrix"` (a density operator) or `"vector"` (a pure
//! state); matrices may be nested rows or one flat row-major array.

use std::fs;
use std::path::Path;

use resbench_core::linalg::{CMatrix, CVector};
use resbench_core::theory::{TheoryDescriptor, TheoryKind};
use resbench_core::{BlockStructure, DensityOperator, HermitianOperator, PureStateVector, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Tolerance applied when validating loaded states, before re-projection.
pub const LOAD_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

pub type Complex = [f64; 2];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixData {
    Rows(Vec<Vec<Complex>>),
    Flat(Vec<Complex>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<Complex>>,
}

/// A loaded state: pure states keep their vector.
#[derive(Debug, Clone)]
pub enum LoadedState {
    Mixed(DensityOperator),
    Pure(PureStateVector),
}

impl LoadedState {
    pub fn density(&self) -> DensityOperator {
        match self {
            LoadedState::Mixed(rho) => rho.clone(),
            LoadedState::Pure(psi) => psi.density(),
        }
    }

    pub fn pure(&self) -> Option<&PureStateVector> {
        match self {
            LoadedState::Pure(psi) => Some(psi),
            LoadedState::Mixed(_) => None,
        }
    }
}

fn invalid(path: &str, message: impl Into<String>) -> IoError {
    IoError::Invalid { path: path.to_string(), message: message.into() }
}

fn c(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

pub fn matrix_to_rows(m: &HermitianOperator) -> Vec<Vec<Complex>> {
    let d = m.dim();
    (0..d).map(|i| (0..d).map(|j| [m.entry(i, j).re, m.entry(i, j).im]).collect()).collect()
}

pub fn vector_to_pairs(v: &CVector) -> Vec<Complex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl StateFile {
    pub fn from_density(rho: &DensityOperator) -> Self {
        Self { dim: rho.dim(), matrix: Some(MatrixData::Rows(matrix_to_rows(rho))), vector: None }
    }

    pub fn from_pure(psi: &PureStateVector) -> Self {
        Self { dim: psi.dim(), matrix: None, vector: Some(vector_to_pairs(psi.amplitudes())) }
    }

    /// Validates within [`LOAD_TOL`] and re-projects onto exact states.
    pub fn to_state(&self, path: &str) -> Result<LoadedState, IoError> {
        let d = self.dim;
        if d == 0 {
            return Err(invalid(path, "dim must be positive"));
        }
        match (&self.matrix, &self.vector) {
            (Some(m), None) => {
                let mat = parse_matrix(m, d).map_err(|e| invalid(path, e))?;
                let op = HermitianOperator::from_matrix_projected(mat, LOAD_TOL).map_err(|e| invalid(path, e.to_string()))?;
                DensityOperator::with_tolerance(op.clone(), LOAD_TOL).map_err(|e| invalid(path, e.to_string()))?;
                let rho = DensityOperator::project(&op).map_err(|e| invalid(path, e.to_string()))?;
                Ok(LoadedState::Mixed(rho))
            }
            (None, Some(v)) => {
                if v.len() != d {
                    return Err(invalid(path, format!("vector has {} entries, expected {d}", v.len())));
                }
                let amps = CVector::from_iterator(d, v.iter().map(c));
                let norm = amps.norm();
                if (norm - 1.0).abs() > LOAD_TOL {
                    return Err(invalid(path, format!("vector norm {norm} is not 1")));
                }
                let psi = PureStateVector::normalize(amps).map_err(|e| invalid(path, e.to_string()))?;
                Ok(LoadedState::Pure(psi))
            }
            _ => Err(invalid(path, "exactly one of \"matrix\" or \"vector\" is required")),
        }
    }
}

fn parse_matrix(m: &MatrixData, d: usize) -> Result<CMatrix, String> {
    match m {
        MatrixData::Rows(rows) => {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(format!("matrix must be {d}x{d}"));
            }
            Ok(CMatrix::from_fn(d, d, |i, j| c(&rows[i][j])))
        }
        MatrixData::Flat(v) => {
            if v.len() != d * d {
                return Err(format!("flat matrix must have {} entries", d * d));
            }
            Ok(CMatrix::from_fn(d, d, |i, j| c(&v[i * d + j])))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TheoryFile {
    Coherence {
        dim: usize,
    },
    Thermal {
        gibbs: MatrixData,
    },
    Asymmetry {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blocks: Option<Vec<Vec<usize>>>,
        /// Diagonal of a Hamiltonian; blocks are its degenerate eigenspaces.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hamiltonian: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        golden_theta: Option<f64>,
    },
    Ppt {
        dims: [usize; 2],
    },
    PptMixture {
        local_dims: Vec<usize>,
    },
}

impl TheoryFile {
    pub fn to_descriptor(&self, path: &str) -> Result<TheoryDescriptor, IoError> {
        let err = |e: resbench_core::Error| invalid(path, e.to_string());
        match self {
            TheoryFile::Coherence { dim } => TheoryDescriptor::coherence(*dim).map_err(err),
            TheoryFile::Thermal { gibbs } => {
                let d = match gibbs {
                    MatrixData::Rows(r) => r.len(),
                    MatrixData::Flat(v) => (v.len() as f64).sqrt().round() as usize,
                };
                let mat = parse_matrix(gibbs, d).map_err(|e| invalid(path, e))?;
                let op = HermitianOperator::from_matrix_projected(mat, LOAD_TOL).map_err(err)?;
                let tau = DensityOperator::with_tolerance(op, LOAD_TOL).map_err(err)?;
                let tau = DensityOperator::project(&tau).map_err(err)?;
                TheoryDescriptor::thermal(tau).map_err(err)
            }
            TheoryFile::Asymmetry { blocks, hamiltonian, golden_theta } => {
                let structure = match (blocks, hamiltonian) {
                    (Some(b), None) => BlockStructure::from_blocks(b.clone()).map_err(err)?,
                    (None, Some(h)) => {
                        BlockStructure::from_diagonal_hamiltonian(&HermitianOperator::from_real_diagonal(h), 1e-9).map_err(err)?
                    }
                    _ => return Err(invalid(path, "asymmetry needs exactly one of \"blocks\" or \"hamiltonian\"")),
                };
                let t = TheoryDescriptor::asymmetry(structure).map_err(err)?;
                Ok(match golden_theta {
                    Some(theta) => t.with_golden_angle(*theta),
                    None => t,
                })
            }
            TheoryFile::Ppt { dims } => TheoryDescriptor::ppt(dims[0], dims[1]).map_err(err),
            TheoryFile::PptMixture { local_dims } => TheoryDescriptor::ppt_mixture(local_dims.clone()).map_err(err),
        }
    }

    pub fn from_descriptor(t: &TheoryDescriptor) -> Self {
        match t.kind() {
            TheoryKind::Coherence => TheoryFile::Coherence { dim: t.dim() },
            TheoryKind::Thermal { gibbs } => TheoryFile::Thermal { gibbs: MatrixData::Rows(matrix_to_rows(gibbs)) },
            TheoryKind::Asymmetry { blocks, golden_theta } => {
                TheoryFile::Asymmetry { blocks: Some(blocks.blocks().to_vec()), hamiltonian: None, golden_theta: Some(*golden_theta) }
            }
            TheoryKind::Ppt { dims } => TheoryFile::Ppt { dims: [dims.0, dims.1] },
            TheoryKind::PptMixture { local_dims } => TheoryFile::PptMixture { local_dims: local_dims.clone() },
        }
    }
}

/// Raw file bytes together with their SHA-256 digest.
pub struct Loaded<T> {
    pub value: T,
    pub digest: String,
}

fn read(path: &Path) -> Result<(Vec<u8>, String), IoError> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| IoError::Read { path: name.clone(), source })?;
    Ok((bytes, name))
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_state(path: &Path) -> Result<Loaded<LoadedState>, IoError> {
    let (bytes, name) = read(path)?;
    let file: StateFile = serde_json::from_slice(&bytes).map_err(|source| IoError::Json { path: name.clone(), source })?;
    Ok(Loaded { value: file.to_state(&name)?, digest: digest(&bytes) })
}

pub fn load_theory(path: &Path) -> Result<Loaded<TheoryDescriptor>, IoError> {
    let (bytes, name) = read(path)?;
    let file: TheoryFile = serde_json::from_slice(&bytes).map_err(|source| IoError::Json { path: name.clone(), source })?;
    Ok(Loaded { value: file.to_descriptor(&name)?, digest: digest(&bytes) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trip() {
        let rho = DensityOperator::mixture(0.3, &PureStateVector::uniform(2).density(), &DensityOperator::maximally_mixed(2)).unwrap();
        let json = serde_json::to_string(&StateFile::from_density(&rho)).unwrap();
        let back: StateFile = serde_json::from_str(&json).unwrap();
        let loaded = back.to_state("mem").unwrap().density();
        assert!((&*loaded - &*rho).max_abs_entry() < 1e-14);
        let psi = PureStateVector::uniform(3);
        let json = serde_json::to_string(&StateFile::from_pure(&psi)).unwrap();
        let back: StateFile = serde_json::from_str(&json).unwrap();
        assert!(back.to_state("mem").unwrap().pure().is_some());
    }

    #[test]
    fn flat_matrix_accepted() {
        let json = r#"{"dim": 2, "matrix": [[0.5,0],[0,0],[0,0],[0.5,0]]}"#;
        let f: StateFile = serde_json::from_str(json).unwrap();
        assert!((f.to_state("mem").unwrap().density().purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_states() {
        for json in [
            r#"{"dim": 2, "matrix": [[[0.6,0],[0,0]],[[0,0],[0.6,0]]]}"#,
            r#"{"dim": 2, "matrix": [[[1.5,0],[0,0]],[[0,0],[-0.5,0]]]}"#,
            r#"{"dim": 2, "matrix": [[[0.5,0],[0.1,0]],[[0.3,0],[0.5,0]]]}"#,
            r#"{"dim": 2, "vector": [[1,0],[1,0]]}"#,
            r#"{"dim": 2}"#,
        ] {
            let f: StateFile = serde_json::from_str(json).unwrap();
            assert!(f.to_state("mem").is_err(), "{json}");
        }
    }

    #[test]
    fn small_violations_are_projected() {
        let json = r#"{"dim": 2, "matrix": [[[1.000000001,0],[0,0]],[[0,0],[-0.000000001,0]]]}"#;
        let f: StateFile = serde_json::from_str(json).unwrap();
        let rho = f.to_state("mem").unwrap().density();
        assert!(rho.min_eigenvalue() >= 0.0 && (rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn theory_files() {
        for json in [
            r#"{"kind":"coherence","dim":3}"#,
            r#"{"kind":"thermal","gibbs":[[[0.6,0],[0,0]],[[0,0],[0.4,0]]]}"#,
            r#"{"kind":"asymmetry","blocks":[[0],[1,2],[3]]}"#,
            r#"{"kind":"asymmetry","hamiltonian":[0,1,1,2]}"#,
            r#"{"kind":"ppt","dims":[2,2]}"#,
            r#"{"kind":"ppt-mixture","local_dims":[2,2,2]}"#,
        ] {
            let f: TheoryFile = serde_json::from_str(json).unwrap();
            let t = f.to_descriptor("mem").unwrap();
            let again: TheoryFile = serde_json::from_str(&serde_json::to_string(&TheoryFile::from_descriptor(&t)).unwrap()).unwrap();
            assert_eq!(again.to_descriptor("mem").unwrap().describe(), t.describe());
        }
        let bad: TheoryFile = serde_json::from_str(r#"{"kind":"asymmetry"}"#).unwrap();
        assert!(bad.to_descriptor("mem").is_err());
    }
}
