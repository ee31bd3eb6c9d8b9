//! Dense complex matrices and vectors.
//!
//! Row-major `f64` complex storage is the universal currency of the crate:
//! reservoirs, training operators, targets and residuals are all
//! [`ComplexMatrix`] values, states are [`ComplexVector`] values. Everything
//! is immutable-after-construction and cheap to clone at the sizes this
//! crate works with.

use std::fmt;

use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

pub const ZERO: Complex64 = Complex::new(0.0, 0.0);
pub const ONE: Complex64 = Complex::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build from row-major entries. Rejects empty shapes, length mismatch
    /// and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix shape {rows}x{cols} must be positive")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "matrix data length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Validation {
                target: "matrix".into(),
                detail: "non-finite entry".into(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "matmul shape mismatch: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let lhs = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.data[dst + j] += a * other.data[lhs + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector> {
        if self.cols != v.dim() {
            return Err(Error::dim(format!(
                "matvec shape mismatch: {}x{} times vector of dim {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let mut out = vec![ZERO; self.rows];
        for i in 0..self.rows {
            let mut acc = ZERO;
            let base = i * self.cols;
            for j in 0..self.cols {
                acc += self.data[base + j] * v.data[j];
            }
            out[i] = acc;
        }
        Ok(ComplexVector { data: out })
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ComplexMatrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        self.map(|z| z * factor)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    /// In-place `self += factor * other`; shapes must already match.
    pub(crate) fn scaled_add_assign(&mut self, factor: f64, other: &ComplexMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += factor * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Copy of the `nr x nc` block whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Result<ComplexMatrix> {
        if r0 + nr > self.rows || c0 + nc > self.cols || nr == 0 || nc == 0 {
            return Err(Error::dim(format!(
                "block ({r0},{c0})+{nr}x{nc} out of range for {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                out.data[i * nc + j] = self.get(r0 + i, c0 + j);
            }
        }
        Ok(out)
    }

    /// Write `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) -> Result<()> {
        if r0 + block.rows > self.rows || c0 + block.cols > self.cols {
            return Err(Error::dim(format!(
                "block {}x{} at ({r0},{c0}) exceeds {}x{} matrix",
                block.rows, block.cols, self.rows, self.cols
            )));
        }
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(r0 + i, c0 + j, block.get(i, j));
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{}", fmt_complex(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Compact "a+bi" rendering used by the CLI.
pub fn fmt_complex(z: Complex64) -> String {
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    if im == 0.0 {
        format!("{re}")
    } else if re == 0.0 {
        format!("{im}i")
    } else if im < 0.0 {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

/// Frobenius distance between same-shape matrices.
pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::dim(format!(
            "frobenius_distance shape mismatch: {}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let sum: f64 = a
        .data
        .iter()
        .zip(b.data.iter())
        .map(|(&x, &y)| (x - y).norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

/// `||A†A - 1||_F`, zero exactly for unitary `A`.
pub fn unitarity_defect(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "unitarity defect requires a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let gram = a.dagger().matmul(a)?;
    frobenius_distance(&gram, &ComplexMatrix::identity(a.rows))
}

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::dim("vector dimension must be positive".to_string()));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Validation {
                target: "vector".into(),
                detail: "non-finite entry".into(),
            });
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: vec![ZERO; dim] }
    }

    /// Computational basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::dim(format!("basis index {k} out of range for dim {dim}")));
        }
        let mut v = Self::zeros(dim);
        v.data[k] = ONE;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize) -> Complex64 {
        self.data[i]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> ComplexVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        ComplexVector { data: self.data.iter().map(|&z| z / n).collect() }
    }

    pub fn sub(&self, other: &ComplexVector) -> Result<ComplexVector> {
        if self.dim() != other.dim() {
            return Err(Error::dim(format!(
                "vector dims {} vs {} differ",
                self.dim(),
                other.dim()
            )));
        }
        Ok(ComplexVector {
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }
}

// --- serialization -----------------------------------------------------
//
// Matrices are written as {"rows": r, "cols": c, "re": [...], "im": [...]}
// in row-major order. Readers also accept a flat interleaved
// {"rows", "cols", "data": [re0, im0, re1, im1, ...]} form. Vectors use the
// same scheme with "dim" instead of rows/cols.

#[derive(Serialize)]
struct MatrixWireOut<'a> {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixWireIn {
    Split { rows: usize, cols: usize, re: Vec<f64>, im: Vec<f64> },
    Interleaved { rows: usize, cols: usize, data: Vec<f64> },
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixWireOut {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
            _marker: std::marker::PhantomData,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = MatrixWireIn::deserialize(deserializer)?;
        let (rows, cols, data) = match wire {
            MatrixWireIn::Split { rows, cols, re, im } => {
                if re.len() != im.len() {
                    return Err(D::Error::custom(format!(
                        "re length {} does not match im length {}",
                        re.len(),
                        im.len()
                    )));
                }
                let data = re
                    .into_iter()
                    .zip(im)
                    .map(|(r, i)| Complex::new(r, i))
                    .collect::<Vec<_>>();
                (rows, cols, data)
            }
            MatrixWireIn::Interleaved { rows, cols, data } => {
                if data.len() % 2 != 0 {
                    return Err(D::Error::custom("interleaved data length must be even"));
                }
                let data = data
                    .chunks_exact(2)
                    .map(|p| Complex::new(p[0], p[1]))
                    .collect::<Vec<_>>();
                (rows, cols, data)
            }
        };
        ComplexMatrix::new(rows, cols, data).map_err(D::Error::custom)
    }
}

#[derive(Serialize)]
struct VectorWireOut {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VectorWireIn {
    Split { dim: usize, re: Vec<f64>, im: Vec<f64> },
    Interleaved { dim: usize, data: Vec<f64> },
}

impl Serialize for ComplexVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        VectorWireOut {
            dim: self.dim(),
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = VectorWireIn::deserialize(deserializer)?;
        let (dim, data) = match wire {
            VectorWireIn::Split { dim, re, im } => {
                if re.len() != im.len() {
                    return Err(D::Error::custom("re/im length mismatch"));
                }
                (dim, re.into_iter().zip(im).map(|(r, i)| Complex::new(r, i)).collect::<Vec<_>>())
            }
            VectorWireIn::Interleaved { dim, data } => {
                if data.len() % 2 != 0 {
                    return Err(D::Error::custom("interleaved data length must be even"));
                }
                (dim, data.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect::<Vec<_>>())
            }
        };
        if data.len() != dim {
            return Err(D::Error::custom(format!(
                "vector data length {} does not match dim {dim}",
                data.len()
            )));
        }
        ComplexVector::new(data).map_err(D::Error::custom)
    }
}
