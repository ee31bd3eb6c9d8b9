//! Target gate catalog and rigged-space target construction.
//!
//! Gates are small unitary matrices on the logical levels. Targets for the
//! solvers live in the embedding space of dimension `M >= N`: either the
//! `N x M` projected form `[X | 0]` or the full `M x M` block form with a
//! complement acting on the ancilla levels.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{unitarity_defect, Complex64, ComplexMatrix, ComplexVector, ONE, ZERO};
use crate::random::{haar_unitary, RandomSource};

/// Unitarity tolerance applied to gates loaded from files.
pub const GATE_LOAD_TOL: f64 = 1e-10;

/// A logical gate: its dimension and unitary matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateSpec {
    dim: usize,
    matrix: ComplexMatrix,
}

impl GateSpec {
    /// Wrap an externally supplied matrix, rejecting non-square or
    /// non-unitary (defect > 1e-10) input.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::dim(format!(
                "gate matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = unitarity_defect(&matrix)?;
        if defect > GATE_LOAD_TOL {
            return Err(Error::Validation {
                target: "gate".into(),
                detail: format!("unitarity defect {defect:e} exceeds {GATE_LOAD_TOL:e}"),
            });
        }
        Ok(Self { dim: matrix.rows(), matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Cyclic shift gate. Acting on column vectors it lowers the level index:
/// row `i` carries a one in column `(i + 1) mod d`.
pub fn gate_x(d: usize) -> Result<GateSpec> {
    if d < 2 {
        return Err(Error::dim(format!("gate dimension {d} must be at least 2")));
    }
    let matrix = ComplexMatrix::from_fn(d, d, |i, j| if j == (i + 1) % d { ONE } else { ZERO });
    Ok(GateSpec { dim: d, matrix })
}

/// Square of the shift gate.
pub fn gate_x_squared(d: usize) -> Result<GateSpec> {
    let x = gate_x(d)?;
    let matrix = x.matrix.matmul(&x.matrix)?;
    Ok(GateSpec { dim: d, matrix })
}

/// Clock gate: `diag(w^l)` with `w = exp(2 pi i / d)`.
pub fn gate_z(d: usize) -> Result<GateSpec> {
    if d < 2 {
        return Err(Error::dim(format!("gate dimension {d} must be at least 2")));
    }
    let diag: Vec<Complex64> = (0..d)
        .map(|l| Complex::from_polar(1.0, 2.0 * PI * l as f64 / d as f64))
        .collect();
    Ok(GateSpec { dim: d, matrix: ComplexMatrix::diagonal(&diag) })
}

/// Look a catalog gate up by its CLI name: "x", "x2" or "z".
pub fn gate_by_name(name: &str, d: usize) -> Result<GateSpec> {
    match name {
        "x" => gate_x(d),
        "x2" => gate_x_squared(d),
        "z" => gate_z(d),
        other => Err(Error::config(format!(
            "unknown gate {other:?}; expected one of x, x2, z"
        ))),
    }
}

/// `N x M` readout projector `[1_N | 0]`.
pub fn projector(n: usize, m: usize) -> Result<ComplexMatrix> {
    if n == 0 || n > m {
        return Err(Error::dim(format!("projector requires 0 < n <= m, got n={n}, m={m}")));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| if i == j { ONE } else { ZERO }))
}

/// Which target the solvers aim at: the observed-channel block equation or
/// the full embedded operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMode {
    Projected,
    Unitary,
}

impl std::fmt::Display for EmbedMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmbedMode::Projected => write!(f, "projected"),
            EmbedMode::Unitary => write!(f, "unitary"),
        }
    }
}

impl std::str::FromStr for EmbedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projected" => Ok(EmbedMode::Projected),
            "unitary" => Ok(EmbedMode::Unitary),
            other => Err(Error::config(format!(
                "unknown mode {other:?}; expected projected or unitary"
            ))),
        }
    }
}

/// A gate embedded in the rigged space.
///
/// Projected mode: `target` is the `N x M` matrix `[X | 0]` and there is no
/// complement. Unitary mode: `target` is `M x M` with the gate in the top
/// left and a complement on the ancilla block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetEmbedding {
    n: usize,
    m: usize,
    mode: EmbedMode,
    target: ComplexMatrix,
    complement: Option<ComplexMatrix>,
}

impl TargetEmbedding {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> EmbedMode {
        self.mode
    }

    pub fn target(&self) -> &ComplexMatrix {
        &self.target
    }

    pub fn complement(&self) -> Option<&ComplexMatrix> {
        self.complement.as_ref()
    }

    /// Assemble the unitary-mode embedding from an explicitly given
    /// complement block (must be unitary within 1e-12).
    pub fn with_unitary_complement(gate: &GateSpec, complement: ComplexMatrix) -> Result<Self> {
        if !complement.is_square() {
            return Err(Error::dim("complement block must be square".to_string()));
        }
        let defect = unitarity_defect(&complement)?;
        if defect > 1e-12 {
            return Err(Error::Validation {
                target: "complement".into(),
                detail: format!("unitarity defect {defect:e} exceeds 1e-12"),
            });
        }
        let m = gate.dim() + complement.rows();
        Ok(Self::assemble_full(gate, m, Some(complement))?)
    }

    /// Full `M x M` embedding with an all-zero complement block. The result
    /// is deliberately non-unitary; it is the variant used to train
    /// non-unitary solutions from data.
    pub fn zero_complement(gate: &GateSpec, m: usize) -> Result<Self> {
        if m < gate.dim() {
            return Err(Error::dim(format!(
                "embedding dimension {m} smaller than gate dimension {}",
                gate.dim()
            )));
        }
        Self::assemble_full(gate, m, None)
    }

    fn assemble_full(gate: &GateSpec, m: usize, complement: Option<ComplexMatrix>) -> Result<Self> {
        let n = gate.dim();
        let mut target = ComplexMatrix::zeros(m, m);
        target.set_block(0, 0, gate.matrix())?;
        if let Some(ref oc) = complement {
            if n + oc.rows() != m {
                return Err(Error::dim(format!(
                    "complement of size {} does not fill embedding {m} for gate of size {n}",
                    oc.rows()
                )));
            }
            target.set_block(n, n, oc)?;
        }
        Ok(Self { n, m, mode: EmbedMode::Unitary, target, complement })
    }
}

/// Embed `gate` in dimension `m`.
///
/// Projected mode forms the `N x M` target `[X | 0]`. Unitary mode samples a
/// Haar-random unitary complement for the ancilla block. With `m` equal to
/// the gate dimension both modes return the bare gate matrix.
pub fn embed_target(
    gate: &GateSpec,
    m: usize,
    mode: EmbedMode,
    rng: RandomSource,
) -> Result<TargetEmbedding> {
    let n = gate.dim();
    if m < n {
        return Err(Error::dim(format!(
            "embedding dimension {m} smaller than gate dimension {n}"
        )));
    }
    match mode {
        EmbedMode::Projected => {
            let mut target = ComplexMatrix::zeros(n, m);
            target.set_block(0, 0, gate.matrix())?;
            Ok(TargetEmbedding { n, m, mode, target, complement: None })
        }
        EmbedMode::Unitary => {
            if m == n {
                return Ok(TargetEmbedding {
                    n,
                    m,
                    mode,
                    target: gate.matrix().clone(),
                    complement: None,
                });
            }
            let oc = haar_unitary(m - n, rng)?;
            let emb = TargetEmbedding::assemble_full(gate, m, Some(oc))?;
            Ok(emb)
        }
    }
}

/// Pad a logical state with zero-amplitude ancillas up to dimension `m`.
pub fn rig_input(x: &ComplexVector, m: usize) -> Result<ComplexVector> {
    if x.dim() > m {
        return Err(Error::dim(format!(
            "input dimension {} exceeds embedding dimension {m}",
            x.dim()
        )));
    }
    let mut data = x.data().to_vec();
    data.resize(m, ZERO);
    ComplexVector::new(data)
}

/// Top-left `n x n` block of a transmission matrix: the gate actually
/// realized on the logical levels.
pub fn achieved_gate(t: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    if n == 0 || t.rows() < n || t.cols() < n {
        return Err(Error::dim(format!(
            "cannot take {n}x{n} logical block of a {}x{} matrix",
            t.rows(),
            t.cols()
        )));
    }
    t.block(0, 0, n, n)
}
