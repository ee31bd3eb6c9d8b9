//! Result persistence and input loading for the CLI.
//!
//! Every output document embeds a [`RunManifest`] echoing the command line,
//! tool version and base seed, so any artifact can be regenerated from the
//! manifest alone (timestamps aside). Numbers are serialized with
//! shortest-round-trip decimals, so save/load of a matrix is bit exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::GateSpec;
use crate::linalg::{unitarity_defect, ComplexMatrix};
use crate::rnn::RESERVOIR_TOL;

/// Provenance header embedded in every output document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub base_seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn begin(command: &str, argv: Vec<String>, base_seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            argv,
            version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed,
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.finished_at = chrono::Utc::now().to_rfc3339();
    }
}

/// Pretty-printed JSON to a file.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::Parse(format!("serializing {}: {e}", path.display())))?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Parse JSON from a file, naming the offending field on failure.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut de = serde_json::Deserializer::from_reader(reader);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        Error::Parse(format!("{}: at {field}: {}", path.display(), e.inner()))
    })
}

/// Load a matrix in either accepted wire form.
pub fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    load_json(path)
}

/// Load a reservoir and insist it is unitary.
pub fn load_reservoir(path: &Path) -> Result<ComplexMatrix> {
    let m = load_matrix(path)?;
    if !m.is_square() {
        return Err(Error::Validation {
            target: "reservoir".into(),
            detail: format!("must be square, got {}x{}", m.rows(), m.cols()),
        });
    }
    let defect = unitarity_defect(&m)?;
    if defect > RESERVOIR_TOL {
        return Err(Error::Validation {
            target: "reservoir".into(),
            detail: format!("unitarity defect {defect:e} exceeds {RESERVOIR_TOL:e}"),
        });
    }
    Ok(m)
}

/// Load a custom gate matrix, validating unitarity on load.
pub fn load_gate(path: &Path) -> Result<GateSpec> {
    GateSpec::from_matrix(load_matrix(path)?)
}

/// Load trained weights: either a bare matrix document or a run document
/// carrying a `weights` (or `solution`) field.
pub fn load_weights(path: &Path) -> Result<ComplexMatrix> {
    #[derive(Deserialize)]
    struct RunDoc {
        weights: Option<ComplexMatrix>,
        solution: Option<ComplexMatrix>,
    }
    let value: serde_json::Value = load_json(path)?;
    if let Ok(m) = serde_json::from_value::<ComplexMatrix>(value.clone()) {
        return Ok(m);
    }
    let doc: RunDoc = serde_json::from_value(value)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    doc.weights.or(doc.solution).ok_or_else(|| {
        Error::Parse(format!(
            "{}: expected a matrix or a document with a weights/solution field",
            path.display()
        ))
    })
}
