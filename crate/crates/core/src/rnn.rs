//! Gate design with a known reservoir: recurrent-network gradient flow.
//!
//! With the reservoir matrix in hand, the training operator solves a linear
//! matrix equation. The solver integrates the flow
//! `dW/dt = -mu U† F[G(W)]` with `f_ij = g_ij` to its stationary state,
//! where `G` is either the projected residual `P U W - [X | 0]` or the full
//! residual `U W - T`. Both are gradient flows of the summed squared
//! residual moduli, so the error along the trajectory is nonincreasing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::{EmbedMode, TargetEmbedding};
use crate::linalg::{unitarity_defect, ComplexMatrix};
use crate::ode::{integrate_adaptive, StepControl};
use crate::random::{gaussian_matrix, RandomSource};

/// A reservoir, an embedded target and the flow rate.
#[derive(Debug, Clone)]
pub struct RnnProblem {
    reservoir: ComplexMatrix,
    embedding: TargetEmbedding,
    learning_rate: f64,
}

/// Reservoirs are accepted when their unitarity defect is at most this.
pub const RESERVOIR_TOL: f64 = 1e-10;

impl RnnProblem {
    pub fn new(
        reservoir: ComplexMatrix,
        embedding: TargetEmbedding,
        learning_rate: f64,
    ) -> Result<Self> {
        if !reservoir.is_square() {
            return Err(Error::dim(format!(
                "reservoir must be square, got {}x{}",
                reservoir.rows(),
                reservoir.cols()
            )));
        }
        if reservoir.rows() != embedding.m() {
            return Err(Error::dim(format!(
                "reservoir dimension {} does not match embedding dimension {}",
                reservoir.rows(),
                embedding.m()
            )));
        }
        let defect = unitarity_defect(&reservoir)?;
        if defect > RESERVOIR_TOL {
            return Err(Error::Validation {
                target: "reservoir".into(),
                detail: format!("unitarity defect {defect:e} exceeds {RESERVOIR_TOL:e}"),
            });
        }
        if !(learning_rate > 0.0) {
            return Err(Error::config(format!("learning rate {learning_rate} must be positive")));
        }
        Ok(Self { reservoir, embedding, learning_rate })
    }

    pub fn reservoir(&self) -> &ComplexMatrix {
        &self.reservoir
    }

    pub fn embedding(&self) -> &TargetEmbedding {
        &self.embedding
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }
}

/// Initial state for the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WInit {
    Zero,
    Random { seed: u64 },
}

/// Integration and stopping controls for [`solve`].
#[derive(Debug, Clone, Copy)]
pub struct OdeConfig {
    pub max_time: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Steady-state acceptance threshold on the error functional.
    pub residual_tol: f64,
    pub max_steps: usize,
    pub init: WInit,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            max_time: 10.0,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            residual_tol: 1e-8,
            max_steps: 100_000,
            init: WInit::Zero,
        }
    }
}

/// Outcome of a flow integration.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub solution: ComplexMatrix,
    /// `(time, error functional)` at the start and at every accepted step.
    pub error_history: Vec<(f64, f64)>,
    pub converged: bool,
    pub final_error: f64,
    pub unitarity_defect: f64,
}

/// `P U W - [X | 0]`, the observed-channel residual (`N x M`).
pub fn residual_projected(
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    embedding: &TargetEmbedding,
) -> Result<ComplexMatrix> {
    if embedding.mode() != EmbedMode::Projected {
        return Err(Error::InvalidMode(
            "projected residual requires a projected-mode embedding".to_string(),
        ));
    }
    let uw = u.matmul(w)?;
    let observed = uw.block(0, 0, embedding.n(), embedding.m())?;
    observed.sub(embedding.target())
}

/// `U W - T`, the full-operator residual (`M x M`).
pub fn residual_unitary(
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    embedding: &TargetEmbedding,
) -> Result<ComplexMatrix> {
    if embedding.mode() != EmbedMode::Unitary {
        return Err(Error::InvalidMode(
            "unitary residual requires a unitary-mode embedding".to_string(),
        ));
    }
    u.matmul(w)?.sub(embedding.target())
}

/// Residual for the embedding's own mode.
pub fn residual(
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    embedding: &TargetEmbedding,
) -> Result<ComplexMatrix> {
    match embedding.mode() {
        EmbedMode::Projected => residual_projected(u, w, embedding),
        EmbedMode::Unitary => residual_unitary(u, w, embedding),
    }
}

/// Sum of squared entry moduli of the hidden-layer matrix.
pub fn error_functional(g: &ComplexMatrix) -> f64 {
    g.data().iter().map(|z| z.norm_sqr()).sum()
}

/// Right-hand side of the flow: `-mu U† F` with `F = G` entrywise.
///
/// In projected mode `G` is `N x M`, so it is lifted back to the full space
/// through the projector transpose (zero rows on the dropped channels);
/// that lift is the exact gradient of the error functional and keeps the
/// state `M x M`.
pub fn rnn_rhs(problem: &RnnProblem, w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let u = problem.reservoir();
    let g = residual(u, w, problem.embedding())?;
    let u_dag = u.dagger();
    rhs_from_residual(&u_dag, &g, problem.embedding(), problem.learning_rate())
}

fn rhs_from_residual(
    u_dag: &ComplexMatrix,
    g: &ComplexMatrix,
    embedding: &TargetEmbedding,
    mu: f64,
) -> Result<ComplexMatrix> {
    let m = embedding.m();
    let lifted = match embedding.mode() {
        EmbedMode::Unitary => u_dag.matmul(g)?,
        EmbedMode::Projected => {
            // U† P† G: only the first N columns of U† contribute
            let left = u_dag.block(0, 0, m, embedding.n())?;
            left.matmul(g)?
        }
    };
    Ok(lifted.scale(num_complex::Complex::new(-mu, 0.0)))
}

/// Integrate the flow until the error functional falls below
/// `residual_tol` or the budget runs out.
pub fn solve(problem: &RnnProblem, config: &OdeConfig) -> Result<SolveResult> {
    if !(config.residual_tol > 0.0) {
        return Err(Error::config(format!(
            "residual tolerance {} must be positive",
            config.residual_tol
        )));
    }
    let m = problem.embedding().m();
    let w0 = match config.init {
        WInit::Zero => ComplexMatrix::zeros(m, m),
        WInit::Random { seed } => {
            let scale = 1.0 / (m as f64).sqrt();
            gaussian_matrix(m, m, RandomSource::new(seed))?
                .scale(num_complex::Complex::new(scale, 0.0))
        }
    };

    let u_dag = problem.reservoir().dagger();
    let embedding = problem.embedding().clone();
    let u = problem.reservoir().clone();
    let mu = problem.learning_rate();

    let rhs = move |w: &ComplexMatrix| -> ComplexMatrix {
        // shapes are fixed along the trajectory, so failures cannot occur
        // after the initial state validates
        let g = residual(&u, w, &embedding).expect("residual shapes are fixed");
        rhs_from_residual(&u_dag, &g, &embedding, mu).expect("rhs shapes are fixed")
    };

    let e0 = error_functional(&residual(problem.reservoir(), &w0, problem.embedding())?);
    let mut history: Vec<(f64, f64)> = vec![(0.0, e0)];
    let mut last_error = e0;
    if e0 <= config.residual_tol {
        let defect = unitarity_defect(&w0)?;
        return Ok(SolveResult {
            solution: w0,
            error_history: history,
            converged: true,
            final_error: e0,
            unitarity_defect: defect,
        });
    }

    let ctrl = StepControl {
        rel_tol: config.rel_tol,
        abs_tol: config.abs_tol,
        max_time: config.max_time,
        max_steps: config.max_steps,
    };
    let reservoir = problem.reservoir().clone();
    let emb2 = problem.embedding().clone();
    let tol = config.residual_tol;

    let run = integrate_adaptive(w0, rhs, &ctrl, |t, w| {
        let e = error_functional(&residual(&reservoir, w, &emb2).expect("shapes fixed"));
        history.push((t, e));
        last_error = e;
        e <= tol
    })
    .map_err(|err| match err {
        Error::Divergence { .. } => Error::Divergence { last_error },
        other => other,
    })?;

    let final_error = history.last().map(|&(_, e)| e).unwrap_or(e0);
    let defect = unitarity_defect(&run.state)?;
    Ok(SolveResult {
        solution: run.state,
        error_history: history,
        converged: final_error <= config.residual_tol,
        final_error,
        unitarity_defect: defect,
    })
}
