//! Deterministic seeded randomness and Haar-random unitary sampling.
//!
//! All sampling is a pure function of a [`RandomSource`] value, a
//! `(seed, stream)` pair backed by a counter-based generator. Derived
//! streams let many trials share one base seed without sequential coupling,
//! so any single trial replays standalone.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Complex64, ComplexMatrix, ComplexVector};

/// Stream ids used by the scan harness so each component of a trial draws
/// from its own substream of the trial seed.
pub mod streams {
    pub const RESERVOIR: u64 = 1;
    pub const COMPLEMENT: u64 = 2;
    pub const DATASET: u64 = 3;
    pub const WEIGHTS: u64 = 4;
}

/// Value-type handle on a deterministic random stream.
///
/// Identical `(seed, stream)` pairs produce identical draw sequences across
/// runs and platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Same seed, different derived stream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { seed: self.seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh generator positioned at the start of this source's stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Standard complex Gaussian: real and imaginary parts are independent
/// `N(0, 1/2)` so the complex variance is one.
pub fn standard_complex(rng: &mut ChaCha12Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn gaussian_matrix(rows: usize, cols: usize, src: RandomSource) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::dim(format!("gaussian matrix shape {rows}x{cols} must be positive")));
    }
    let mut rng = src.rng();
    Ok(ComplexMatrix::from_fn(rows, cols, |_, _| standard_complex(&mut rng)))
}

/// Unit-norm random state vector (complex Gaussian direction).
pub fn random_state(dim: usize, rng: &mut ChaCha12Rng) -> Result<ComplexVector> {
    if dim == 0 {
        return Err(Error::dim("state dimension must be positive".to_string()));
    }
    let raw: Vec<Complex64> = (0..dim).map(|_| standard_complex(rng)).collect();
    Ok(ComplexVector::new(raw)?.normalized())
}

/// Haar-distributed `m x m` unitary.
///
/// Draws an i.i.d. complex-Gaussian matrix, takes its QR factorization by
/// Householder reflections, and multiplies each column of Q by the phase
/// that makes the diagonal of R real-positive. Without the phase fix the
/// QR map does not produce Haar measure.
pub fn haar_unitary(m: usize, src: RandomSource) -> Result<ComplexMatrix> {
    if m == 0 {
        return Err(Error::dim("haar_unitary dimension must be positive".to_string()));
    }
    let a = gaussian_matrix(m, m, src)?;
    let (q, r_diag) = householder_qr(&a);
    let mut u = q;
    for k in 0..m {
        let d = r_diag[k];
        let phase = if d.norm() == 0.0 { Complex::new(1.0, 0.0) } else { d / d.norm() };
        for i in 0..m {
            u.set(i, k, u.get(i, k) * phase);
        }
    }
    Ok(u)
}

/// Householder QR of a square matrix. Returns Q and the diagonal of R.
fn householder_qr(a: &ComplexMatrix) -> (ComplexMatrix, Vec<Complex64>) {
    let m = a.rows();
    let mut r = a.clone();
    // reflector k lives in rows k..m; stored dense for simplicity
    let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(m);

    for k in 0..m {
        let mut v: Vec<Complex64> = (k..m).map(|i| r.get(i, k)).collect();
        let normx = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if normx == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { Complex::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * normx;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm < f64::EPSILON * normx {
            reflectors.push(Vec::new());
            continue;
        }
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // apply H = I - 2vv† to the trailing block of R
        for j in k..m {
            let mut dot = Complex::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * r.get(k + i, j);
            }
            let c = 2.0 * dot;
            for (i, vi) in v.iter().enumerate() {
                let cur = r.get(k + i, j);
                r.set(k + i, j, cur - c * vi);
            }
        }
        reflectors.push(v);
    }

    // accumulate Q = H_0 H_1 ... H_{m-1} by applying reflectors to identity
    // in reverse order
    let mut q = ComplexMatrix::identity(m);
    for k in (0..m).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        for j in 0..m {
            let mut dot = Complex::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * q.get(k + i, j);
            }
            let c = 2.0 * dot;
            for (i, vi) in v.iter().enumerate() {
                let cur = q.get(k + i, j);
                q.set(k + i, j, cur - c * vi);
            }
        }
    }

    let r_diag = (0..m).map(|k| r.get(k, k)).collect();
    (q, r_diag)
}
