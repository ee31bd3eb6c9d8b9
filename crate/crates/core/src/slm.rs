//! Modulator realizations: input encoding and constraint retractions.
//!
//! A single physical modulator realizes the trained operator for one input
//! by encoding the input into the mask, `S~ = S * Diag(x)`, driven by a
//! fixed plane wave. Device limits become retractions applied to the
//! weights after every optimizer step: unit-modulus entries for phase-only
//! devices, clipped (optionally quantized) real values for signed-amplitude
//! devices.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::rig_input;
use crate::linalg::{ComplexMatrix, ComplexVector, ONE};
use crate::trainer::{train_from_weights, Dataset, TrainConfig, TrainRun};

/// What the device can physically realize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Unconstrained,
    PhaseOnly,
    AmplitudeSigned,
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintKind::Unconstrained => write!(f, "none"),
            ConstraintKind::PhaseOnly => write!(f, "phase"),
            ConstraintKind::AmplitudeSigned => write!(f, "amp"),
        }
    }
}

/// Constraint model applied during training.
///
/// `bits` is the quantized modulation depth. It belongs to the
/// signed-amplitude device; it is also honored for phase-only devices
/// (quantizing the phase) so both readings of a quantized modulator can be
/// reproduced. `None` means continuous modulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulatorConstraint {
    pub kind: ConstraintKind,
    pub bits: Option<u32>,
}

impl ModulatorConstraint {
    pub fn new(kind: ConstraintKind, bits: Option<u32>) -> Result<Self> {
        if let Some(b) = bits {
            if b == 0 {
                return Err(Error::config("bit depth must be at least 1".to_string()));
            }
            if kind == ConstraintKind::Unconstrained {
                return Err(Error::config(
                    "bit depth requires a phase or amplitude constraint".to_string(),
                ));
            }
        }
        Ok(Self { kind, bits })
    }

    pub fn unconstrained() -> Self {
        Self { kind: ConstraintKind::Unconstrained, bits: None }
    }

    pub fn phase_only() -> Self {
        Self { kind: ConstraintKind::PhaseOnly, bits: None }
    }

    pub fn amplitude_signed(bits: Option<u32>) -> Self {
        Self { kind: ConstraintKind::AmplitudeSigned, bits }
    }

    /// Project weights onto the feasible set of this device.
    pub fn retract(&self, w: &ComplexMatrix) -> ComplexMatrix {
        match self.kind {
            ConstraintKind::Unconstrained => w.clone(),
            ConstraintKind::PhaseOnly => match self.bits {
                None => retract_phase(w),
                Some(b) => quantize_phase(w, b),
            },
            ConstraintKind::AmplitudeSigned => retract_amplitude(w, self.bits),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.kind == ConstraintKind::Unconstrained
    }
}

/// Normalize every entry to unit modulus, keeping its phase. Zero entries
/// have no phase; they map to one.
pub fn retract_phase(w: &ComplexMatrix) -> ComplexMatrix {
    w.map(|z| {
        let r = z.norm();
        if r == 0.0 {
            ONE
        } else {
            z / r
        }
    })
}

/// Unit-modulus entries with phases rounded to `2^bits` uniform angles.
pub fn quantize_phase(w: &ComplexMatrix, bits: u32) -> ComplexMatrix {
    let levels = (1u64 << bits.min(62)) as f64;
    let step = std::f64::consts::TAU / levels;
    w.map(|z| {
        let phi = if z.norm() == 0.0 { 0.0 } else { z.arg() };
        let k = (phi / step).round();
        Complex::from_polar(1.0, k * step)
    })
}

/// Real, clipped, optionally quantized amplitude modulation.
///
/// Imaginary parts are dropped, real parts clip to `[-1, 1]`. With a bit
/// depth the value rounds to the nearest of the `2^bits + 1` uniform levels
/// on `[-1, 1]` (ties toward zero); one bit gives levels `{-1, 0, 1}`.
pub fn retract_amplitude(w: &ComplexMatrix, bits: Option<u32>) -> ComplexMatrix {
    w.map(|z| {
        let v = z.re.clamp(-1.0, 1.0);
        let q = match bits {
            None => v,
            Some(b) => quantize_symmetric(v, b),
        };
        Complex::new(q, 0.0)
    })
}

fn quantize_symmetric(v: f64, bits: u32) -> f64 {
    let intervals = (1u64 << bits.min(62)) as f64;
    let delta = 2.0 / intervals;
    let pos = (v + 1.0) / delta;
    let lo = pos.floor().min(intervals);
    let frac = pos - lo;
    let level = |k: f64| -1.0 + k * delta;
    if frac > 0.5 {
        level(lo + 1.0)
    } else if frac < 0.5 {
        level(lo)
    } else {
        // exact tie: take the level closer to zero
        let (a, b) = (level(lo), level(lo + 1.0));
        if a.abs() <= b.abs() {
            a
        } else {
            b
        }
    }
}

/// A trained operator specialized to one input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlmEncoding {
    /// The input-independent operator produced by training.
    pub base_operator: ComplexMatrix,
    /// The rigged input the mask encodes.
    pub input: ComplexVector,
    /// `base_operator * Diag(input)`: the mask actually written on the
    /// device, driven by the fixed plane wave.
    pub encoded: ComplexMatrix,
}

/// Fold an input state into the operator: `S~ = S * Diag(rig(x, m))`.
pub fn encode_input(s: &ComplexMatrix, x: &ComplexVector, m: usize) -> Result<SlmEncoding> {
    if !s.is_square() || s.rows() != m {
        return Err(Error::dim(format!(
            "operator must be {m}x{m}, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let rigged = rig_input(x, m)?;
    let encoded = ComplexMatrix::from_fn(m, m, |i, j| s.get(i, j) * rigged.get(j));
    Ok(SlmEncoding { base_operator: s.clone(), input: rigged, encoded })
}

/// The fixed plane-wave drive: `n` ones followed by `m - n` zeros.
pub fn plane_wave(n: usize, m: usize) -> Result<ComplexVector> {
    if n == 0 || n > m {
        return Err(Error::dim(format!("plane wave requires 0 < n <= m, got n={n}, m={m}")));
    }
    let mut data = vec![ONE; n];
    data.resize(m, Complex::new(0.0, 0.0));
    ComplexVector::new(data)
}

/// Single-pair dataset for modulator training: the normalized plane wave
/// labeled with its target image. Training and validation see the same
/// pair, so the validation cost is the cost of the realized output.
pub fn plane_wave_dataset(target: &ComplexMatrix, n: usize) -> Result<Dataset> {
    if !target.is_square() {
        return Err(Error::dim("target must be square".to_string()));
    }
    let m = target.rows();
    let x = plane_wave(n, m)?.normalized();
    let y = target.matvec(&x)?;
    Dataset::new(vec![x.clone(), x], vec![y.clone(), y], 1, 1)
}

/// Dataset training with the constraint retraction applied after every
/// epoch's update (projected gradient descent). With an unconstrained
/// config this is exactly ordinary training.
pub fn constrained_train(
    u: &ComplexMatrix,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<TrainRun> {
    train_from_weights(u, dataset, config, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius_distance, Complex64, ZERO};
    use crate::random::{gaussian_matrix, RandomSource};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex::new(re, im)
    }

    #[test]
    fn phase_retraction_normalizes() {
        let w = ComplexMatrix::new(1, 1, vec![c(3.0, 4.0)]).unwrap();
        let r = retract_phase(&w);
        assert!((r.get(0, 0) - c(0.6, 0.8)).norm() <= 1e-15);
    }

    #[test]
    fn phase_retraction_fixes_zero_to_one() {
        let w = ComplexMatrix::zeros(2, 2);
        let r = retract_phase(&w);
        assert!(r.data().iter().all(|&z| z == ONE));
    }

    #[test]
    fn phase_retraction_is_idempotent() {
        let w = gaussian_matrix(4, 4, RandomSource::new(3)).unwrap();
        let once = retract_phase(&w);
        let twice = retract_phase(&once);
        assert!(frobenius_distance(&once, &twice).unwrap() <= 1e-15);
        assert!(once.data().iter().all(|z| (z.norm() - 1.0).abs() <= 1e-15));
    }

    #[test]
    fn phase_quantization_levels() {
        let w = ComplexMatrix::new(1, 2, vec![c(0.2, 0.1), c(-0.5, -0.01)]).unwrap();
        let q = quantize_phase(&w, 1); // phases {0, pi}
        assert!((q.get(0, 0) - ONE).norm() <= 1e-15);
        assert!((q.get(0, 1) - c(-1.0, 0.0)).norm() <= 1e-12);
        let q2 = quantize_phase(&q, 1);
        assert!(frobenius_distance(&q, &q2).unwrap() <= 1e-12);
    }

    #[test]
    fn amplitude_clips_real_part() {
        let w = ComplexMatrix::new(1, 1, vec![c(2.5, 0.3)]).unwrap();
        let r = retract_amplitude(&w, None);
        assert_eq!(r.get(0, 0), ONE);
        let w = ComplexMatrix::new(1, 1, vec![c(-3.0, 1.0)]).unwrap();
        assert_eq!(retract_amplitude(&w, None).get(0, 0), c(-1.0, 0.0));
    }

    #[test]
    fn one_bit_levels_and_rounding() {
        let vals = [
            (0.4, 0.0),
            (-0.4, 0.0),
            (0.6, 1.0),
            (-0.6, -1.0),
            (0.5, 0.0),  // tie, toward zero
            (-0.5, 0.0), // tie, toward zero
            (1.0, 1.0),
            (-1.0, -1.0),
        ];
        for &(v, expect) in &vals {
            let w = ComplexMatrix::new(1, 1, vec![c(v, 0.0)]).unwrap();
            let q = retract_amplitude(&w, Some(1)).get(0, 0);
            assert_eq!(q, c(expect, 0.0), "value {v}");
        }
    }

    #[test]
    fn eight_bit_values_lie_on_grid_and_idempotent() {
        let w = gaussian_matrix(5, 5, RandomSource::new(8)).unwrap();
        let q = retract_amplitude(&w, Some(8));
        let delta = 2.0 / 256.0;
        for &z in q.data() {
            assert_eq!(z.im, 0.0);
            let k = (z.re + 1.0) / delta;
            assert!((k - k.round()).abs() <= 1e-9, "off-grid value {}", z.re);
            assert!((-1.0..=1.0).contains(&z.re));
        }
        let q2 = retract_amplitude(&q, Some(8));
        assert!(frobenius_distance(&q, &q2).unwrap() == 0.0);
    }

    #[test]
    fn constraint_constructor_validates() {
        assert!(ModulatorConstraint::new(ConstraintKind::AmplitudeSigned, Some(0)).is_err());
        assert!(ModulatorConstraint::new(ConstraintKind::Unconstrained, Some(4)).is_err());
        assert!(ModulatorConstraint::new(ConstraintKind::PhaseOnly, Some(4)).is_ok());
    }

    #[test]
    fn encode_input_scales_columns() {
        let s = gaussian_matrix(5, 5, RandomSource::new(4)).unwrap();
        let x = ComplexVector::new(vec![c(0.5, 0.2), c(-1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let enc = encode_input(&s, &x, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = if j < 3 { s.get(i, j) * x.get(j) } else { ZERO };
                assert!((enc.encoded.get(i, j) - expect).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn encode_zero_input_annihilates() {
        let s = gaussian_matrix(4, 4, RandomSource::new(4)).unwrap();
        let x = ComplexVector::zeros(4);
        let enc = encode_input(&s, &x, 4).unwrap();
        assert_eq!(enc.encoded.frobenius_norm(), 0.0);
    }

    #[test]
    fn encoded_plane_wave_reproduces_rigged_action() {
        // with x the all-ones logical vector, S~ applied to the plane wave
        // equals S applied to the rigged x
        let m = 5;
        let s = gaussian_matrix(m, m, RandomSource::new(6)).unwrap();
        let x = ComplexVector::new(vec![ONE; 3]).unwrap();
        let enc = encode_input(&s, &x, m).unwrap();
        let e_m = plane_wave(3, m).unwrap();
        let via_mask = enc.encoded.matvec(&e_m).unwrap();
        let via_rig = s.matvec(&rig_input(&x, m).unwrap()).unwrap();
        for i in 0..m {
            assert!((via_mask.get(i) - via_rig.get(i)).norm() <= 1e-14);
        }
    }

    #[test]
    fn encode_is_linear_in_input_and_operator() {
        let m = 4;
        let s = gaussian_matrix(m, m, RandomSource::new(10)).unwrap();
        let x1 = ComplexVector::new(vec![c(0.3, 0.0), c(0.0, 0.4)]).unwrap();
        let x2 = ComplexVector::new(vec![c(-0.1, 0.2), c(0.5, 0.0)]).unwrap();
        let sum = ComplexVector::new(
            x1.data().iter().zip(x2.data()).map(|(&a, &b)| a + b).collect(),
        )
        .unwrap();
        let lhs = encode_input(&s, &sum, m).unwrap().encoded;
        let rhs = encode_input(&s, &x1, m)
            .unwrap()
            .encoded
            .add(&encode_input(&s, &x2, m).unwrap().encoded)
            .unwrap();
        assert!(frobenius_distance(&lhs, &rhs).unwrap() <= 1e-14);

        let s2 = gaussian_matrix(m, m, RandomSource::new(11)).unwrap();
        let s_sum = s.add(&s2).unwrap();
        let lhs = encode_input(&s_sum, &x1, m).unwrap().encoded;
        let rhs = encode_input(&s, &x1, m)
            .unwrap()
            .encoded
            .add(&encode_input(&s2, &x1, m).unwrap().encoded)
            .unwrap();
        assert!(frobenius_distance(&lhs, &rhs).unwrap() <= 1e-14);
    }

    fn modulator_setup(m: usize, seed: u64) -> (ComplexMatrix, crate::trainer::Dataset) {
        use crate::gates::{embed_target, gate_x, EmbedMode};
        use crate::random::{haar_unitary, streams};
        let gate = gate_x(3).unwrap();
        let src = RandomSource::new(seed);
        let u = haar_unitary(m, src.with_stream(streams::RESERVOIR)).unwrap();
        let emb = embed_target(&gate, m, EmbedMode::Unitary, src.with_stream(streams::COMPLEMENT))
            .unwrap();
        let ds = plane_wave_dataset(emb.target(), 3).unwrap();
        (u, ds)
    }

    #[test]
    fn unconstrained_constrained_train_is_plain_train() {
        let (u, ds) = modulator_setup(5, 3);
        let config = TrainConfig {
            learning_rate: 0.5,
            max_epochs: 40,
            valid_threshold: 1e-9,
            seed: 4,
            ..Default::default()
        };
        let a = constrained_train(&u, &ds, &config).unwrap();
        let b = crate::trainer::train(&u, &ds, &config).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.valid_history, b.valid_history);
        assert_eq!(a.train_history, b.train_history);
    }

    #[test]
    fn phase_only_large_embedding_converges_within_budget() {
        // wide-reservoir phase-only training drives the logical-output cost
        // below 1e-4 inside a 1000-epoch budget
        let (u, ds) = modulator_setup(30, 1);
        let config = TrainConfig {
            learning_rate: 3e-3,
            optimizer: crate::trainer::Optimizer::adam(),
            max_epochs: 1000,
            valid_threshold: 1e-30,
            seed: 1,
            constraint: ModulatorConstraint::phase_only(),
            cost_span: crate::trainer::CostSpan::FirstN(3),
        };
        let run = constrained_train(&u, &ds, &config).unwrap();
        let final_cost = *run.valid_history.last().unwrap();
        assert!(final_cost <= 1e-4, "final cost {final_cost:e}");
    }

    #[test]
    fn amplitude_training_plateaus_above_threshold() {
        // the real-valued modulator cannot silence the imaginary residual,
        // so the cost stalls at a floor above 1e-4 instead of converging
        let (u, ds) = modulator_setup(30, 1);
        let config = TrainConfig {
            learning_rate: 1.0,
            max_epochs: 1000,
            valid_threshold: 1e-30,
            seed: 1,
            constraint: ModulatorConstraint::amplitude_signed(None),
            ..Default::default()
        };
        let run = constrained_train(&u, &ds, &config).unwrap();
        let h = &run.valid_history;
        let last = *h.last().unwrap();
        assert!(last > 1e-4, "final cost {last:e}");
        let tail = &h[h.len() - 100..];
        let (lo, hi) = tail
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi - lo <= 0.10 * last, "tail spread {:.3e} vs value {last:.3e}", hi - lo);
    }

    #[test]
    fn plane_wave_layout() {
        let e = plane_wave(3, 5).unwrap();
        assert_eq!(e.data()[..3], vec![ONE; 3][..]);
        assert_eq!(e.get(3), ZERO);
        assert_eq!(e.get(4), ZERO);
        assert!(plane_wave(0, 5).is_err());
        assert!(plane_wave(6, 5).is_err());
    }
}
