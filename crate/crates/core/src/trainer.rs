//! Gate design from labeled data: gradient training of the input operator.
//!
//! When the reservoir matrix is not measured directly, the training
//! operator is learned from labeled pairs `(x_i, y_i = T x_i)` by full-batch
//! gradient descent on the mean squared output error. The complex weights
//! `W = W' + iW''` descend along twice the conjugate-coordinate gradient,
//! which is exactly steepest descent in the real parameters `(W', W'')`.
//! One epoch is one sweep over the training pairs followed by a validation
//! pass; training stops when the mean validation cost falls below the
//! threshold.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::{achieved_gate, EmbedMode, TargetEmbedding};
use crate::linalg::{
    frobenius_distance, unitarity_defect, Complex64, ComplexMatrix, ComplexVector, ZERO,
};
use crate::random::{random_state, streams, RandomSource};
use crate::rnn::RESERVOIR_TOL;
use crate::slm::ModulatorConstraint;

/// Labeled input/output pairs, split into training and validation parts.
#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    inputs: Vec<ComplexVector>,
    labels: Vec<ComplexVector>,
    n_train: usize,
    n_valid: usize,
}

impl Dataset {
    pub fn new(
        inputs: Vec<ComplexVector>,
        labels: Vec<ComplexVector>,
        n_train: usize,
        n_valid: usize,
    ) -> Result<Self> {
        if n_train == 0 || n_valid == 0 {
            return Err(Error::config(format!(
                "dataset split needs positive counts, got train={n_train}, valid={n_valid}"
            )));
        }
        if inputs.len() != n_train + n_valid || labels.len() != inputs.len() {
            return Err(Error::config(format!(
                "dataset sizes inconsistent: {} inputs, {} labels, split {n_train}+{n_valid}",
                inputs.len(),
                labels.len()
            )));
        }
        let dim = inputs[0].dim();
        if inputs.iter().chain(labels.iter()).any(|v| v.dim() != dim) {
            return Err(Error::dim("all dataset vectors must share one dimension".to_string()));
        }
        Ok(Self { inputs, labels, n_train, n_valid })
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].dim()
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn n_valid(&self) -> usize {
        self.n_valid
    }

    pub fn training(&self) -> (&[ComplexVector], &[ComplexVector]) {
        (&self.inputs[..self.n_train], &self.labels[..self.n_train])
    }

    pub fn validation(&self) -> (&[ComplexVector], &[ComplexVector]) {
        (&self.inputs[self.n_train..], &self.labels[self.n_train..])
    }
}

/// Draw unit-norm random inputs and label them with the target operator.
pub fn generate_dataset(
    target: &ComplexMatrix,
    m: usize,
    n_train: usize,
    n_valid: usize,
    rng: RandomSource,
) -> Result<Dataset> {
    if !target.is_square() || target.rows() != m {
        return Err(Error::dim(format!(
            "target must be {m}x{m}, got {}x{}",
            target.rows(),
            target.cols()
        )));
    }
    if n_train == 0 || n_valid == 0 {
        return Err(Error::config(format!(
            "dataset generation needs positive counts, got train={n_train}, valid={n_valid}"
        )));
    }
    let mut gen = rng.rng();
    let total = n_train + n_valid;
    let mut inputs = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let x = random_state(m, &mut gen)?;
        let y = target.matvec(&x)?;
        inputs.push(x);
        labels.push(y);
    }
    Dataset::new(inputs, labels, n_train, n_valid)
}

/// Which output components enter the cost: all `M` of them (normalized by
/// `M`) or only the first `n` logical ones (normalized by `n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSpan {
    AllM,
    FirstN(usize),
}

impl CostSpan {
    fn len(&self, m: usize) -> Result<usize> {
        match *self {
            CostSpan::AllM => Ok(m),
            CostSpan::FirstN(n) => {
                if n == 0 || n > m {
                    Err(Error::config(format!("cost span {n} out of range for dimension {m}")))
                } else {
                    Ok(n)
                }
            }
        }
    }
}

/// Mean squared residual modulus of `y - U W x` over the span.
pub fn cost(
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    x: &ComplexVector,
    y: &ComplexVector,
    span: CostSpan,
) -> Result<f64> {
    let k = span.len(y.dim())?;
    let out = u.matvec(&w.matvec(x)?)?;
    if out.dim() != y.dim() {
        return Err(Error::dim(format!(
            "output dim {} does not match label dim {}",
            out.dim(),
            y.dim()
        )));
    }
    let sum: f64 = (0..k).map(|i| (y.get(i) - out.get(i)).norm_sqr()).sum();
    Ok(sum / k as f64)
}

/// Conjugate-coordinate gradient of [`cost`] with respect to the weights:
/// `de/dW* = -(1/K) U† r x†` with `r` the span-masked residual. The descent
/// update in the real parameters is twice this matrix.
pub fn cost_gradient(
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    x: &ComplexVector,
    y: &ComplexVector,
    span: CostSpan,
) -> Result<ComplexMatrix> {
    let k = span.len(y.dim())?;
    let u_dag = u.dagger();
    let mut grad = ComplexMatrix::zeros(w.rows(), w.cols());
    accumulate_gradient(&u_dag, u, w, x, y, k, &mut grad)?;
    Ok(grad.scale(Complex::new(1.0 / k as f64, 0.0)))
}

/// Add `-U† r x†` for one pair into `acc` (no span normalization).
fn accumulate_gradient(
    u_dag: &ComplexMatrix,
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    x: &ComplexVector,
    y: &ComplexVector,
    span_len: usize,
    acc: &mut ComplexMatrix,
) -> Result<f64> {
    let m = y.dim();
    let out = u.matvec(&w.matvec(x)?)?;
    if out.dim() != m || x.dim() != w.cols() {
        return Err(Error::dim("gradient shape mismatch".to_string()));
    }
    // span-masked residual
    let mut r = vec![ZERO; span_len];
    let mut err = 0.0;
    for i in 0..span_len {
        let d = y.get(i) - out.get(i);
        err += d.norm_sqr();
        r[i] = d;
    }
    // lifted = U† r; components beyond the span are zero and drop out
    for a in 0..acc.rows() {
        let mut la = ZERO;
        for (i, &ri) in r.iter().enumerate() {
            la += u_dag.get(a, i) * ri;
        }
        if la == ZERO {
            continue;
        }
        for b in 0..acc.cols() {
            let cur = acc.get(a, b);
            acc.set(a, b, cur - la * x.get(b).conj());
        }
    }
    Ok(err / span_len as f64)
}

/// Update rule applied to the real parameters each epoch.
///
/// Plain descent is the default. The adaptive rule rescales every real
/// coordinate by a running RMS of its gradient; it exists for the
/// modulator scaling studies, where a fixed step leaves the update rate
/// coupled to the embedding size through the cost normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Gd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Training hyperparameters and stopping rule.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the mean validation cost is at or below this.
    pub valid_threshold: f64,
    /// Seeds the weight initialization.
    pub seed: u64,
    pub constraint: ModulatorConstraint,
    pub cost_span: CostSpan,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_epochs: 5000,
            valid_threshold: 1e-3,
            seed: 0,
            constraint: ModulatorConstraint::unconstrained(),
            cost_span: CostSpan::AllM,
            optimizer: Optimizer::Gd,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) {
            return Err(Error::config(format!(
                "learning rate {} must be nonnegative",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs must be at least 1".to_string()));
        }
        if !(self.valid_threshold > 0.0) {
            return Err(Error::config(format!(
                "validation threshold {} must be positive",
                self.valid_threshold
            )));
        }
        Ok(())
    }
}

/// Learned weights and per-epoch cost traces.
#[derive(Debug, Clone, Serialize)]
pub struct TrainRun {
    pub weights: ComplexMatrix,
    pub epochs_used: usize,
    pub train_history: Vec<f64>,
    pub valid_history: Vec<f64>,
    pub converged: bool,
}

/// Full-batch gradient descent with threshold stopping.
///
/// Weights start from seed-derived Gaussians (`W'`, `W''` each with
/// deviation `1/sqrt(M)`), or from `w0` when given. Each epoch computes the
/// mean training cost and gradient, takes one descent step, applies the
/// constraint retraction, then measures the mean validation cost.
pub fn train_from_weights(
    u: &ComplexMatrix,
    dataset: &Dataset,
    config: &TrainConfig,
    w0: Option<ComplexMatrix>,
) -> Result<TrainRun> {
    config.validate()?;
    let m = dataset.dim();
    if !u.is_square() || u.rows() != m {
        return Err(Error::dim(format!(
            "reservoir must be {m}x{m} to match the dataset, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let defect = unitarity_defect(u)?;
    if defect > RESERVOIR_TOL {
        return Err(Error::Validation {
            target: "reservoir".into(),
            detail: format!("unitarity defect {defect:e} exceeds {RESERVOIR_TOL:e}"),
        });
    }
    // checks the span against the vector dimension once up front
    config.cost_span.len(m)?;

    let mut w = match w0 {
        Some(w0) => {
            if !w0.is_square() || w0.rows() != m {
                return Err(Error::dim(format!(
                    "initial weights must be {m}x{m}, got {}x{}",
                    w0.rows(),
                    w0.cols()
                )));
            }
            w0
        }
        None => init_weights(m, config.seed),
    };
    // keep the whole trajectory on the feasible set
    w = config.constraint.retract(&w);

    let u_dag = u.dagger();
    let (train_x, train_y) = dataset.training();
    let (valid_x, valid_y) = dataset.validation();
    let span_len = config.cost_span.len(m)?;

    let mut train_history = Vec::new();
    let mut valid_history = Vec::new();
    let mut converged = false;
    let mut epochs_used = 0;
    // first/second moments per real coordinate, used by the adaptive rule
    let mut moments: Option<(Vec<(f64, f64)>, Vec<(f64, f64)>)> = match config.optimizer {
        Optimizer::Gd => None,
        Optimizer::Adam { .. } => Some((vec![(0.0, 0.0); m * m], vec![(0.0, 0.0); m * m])),
    };

    for epoch in 0..config.max_epochs {
        // one sweep: mean cost and accumulated gradient over training pairs
        let mut grad = ComplexMatrix::zeros(m, m);
        let mut train_cost = 0.0;
        for (x, y) in train_x.iter().zip(train_y.iter()) {
            train_cost += accumulate_gradient(&u_dag, u, &w, x, y, span_len, &mut grad)?;
        }
        let n_train = train_x.len() as f64;
        train_cost /= n_train;

        // mean gradient in the real parameters (W', W'') is twice the
        // conjugate-coordinate gradient
        let grad_scale = 2.0 / (span_len as f64 * n_train);
        match (config.optimizer, &mut moments) {
            (Optimizer::Gd, _) => {
                w.scaled_add_assign(-config.learning_rate * grad_scale, &grad);
            }
            (Optimizer::Adam { beta1, beta2, epsilon }, Some((m1, v2))) => {
                let t = epoch as i32 + 1;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                let data: Vec<Complex64> = w
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, &wi)| {
                        let gr = grad.data()[i].re * grad_scale;
                        let gi = grad.data()[i].im * grad_scale;
                        m1[i].0 = beta1 * m1[i].0 + (1.0 - beta1) * gr;
                        m1[i].1 = beta1 * m1[i].1 + (1.0 - beta1) * gi;
                        v2[i].0 = beta2 * v2[i].0 + (1.0 - beta2) * gr * gr;
                        v2[i].1 = beta2 * v2[i].1 + (1.0 - beta2) * gi * gi;
                        let dr = (m1[i].0 / bc1) / ((v2[i].0 / bc2).sqrt() + epsilon);
                        let di = (m1[i].1 / bc1) / ((v2[i].1 / bc2).sqrt() + epsilon);
                        Complex::new(
                            wi.re - config.learning_rate * dr,
                            wi.im - config.learning_rate * di,
                        )
                    })
                    .collect();
                // no finiteness validation here: the post-epoch check below
                // turns a blow-up into a divergence error
                w = ComplexMatrix::from_fn(m, m, |i, j| data[i * m + j]);
            }
            _ => unreachable!(),
        }
        if !config.constraint.is_identity() {
            w = config.constraint.retract(&w);
        }

        let mut valid_cost = 0.0;
        for (x, y) in valid_x.iter().zip(valid_y.iter()) {
            valid_cost += cost(u, &w, x, y, config.cost_span)?;
        }
        valid_cost /= valid_x.len() as f64;

        if !train_cost.is_finite() || !valid_cost.is_finite() || !w.is_finite() {
            let last = valid_history.last().copied().unwrap_or(train_cost);
            return Err(Error::Divergence { last_error: last });
        }

        train_history.push(train_cost);
        valid_history.push(valid_cost);
        epochs_used += 1;

        if valid_cost <= config.valid_threshold {
            converged = true;
            break;
        }
    }

    Ok(TrainRun { weights: w, epochs_used, train_history, valid_history, converged })
}

/// [`train_from_weights`] with seed-derived initial weights.
pub fn train(u: &ComplexMatrix, dataset: &Dataset, config: &TrainConfig) -> Result<TrainRun> {
    train_from_weights(u, dataset, config, None)
}

fn init_weights(m: usize, seed: u64) -> ComplexMatrix {
    let mut rng = RandomSource::new(seed).with_stream(streams::WEIGHTS).rng();
    let sigma = 1.0 / (m as f64).sqrt();
    ComplexMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
        let im: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
        Complex::new(re * sigma, im * sigma)
    })
}

/// How close the trained system is to the target.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    /// Frobenius distance between the realized transmission matrix and the
    /// target (restricted to the observed rows in projected mode).
    pub transmission_distance: f64,
    /// Frobenius distance between the realized logical block and the gate.
    pub gate_distance: f64,
    /// Unitarity defect of the trained operator.
    pub unitarity_defect: f64,
}

/// Compare the realized transmission matrix `U W` against an embedded
/// target.
pub fn verify_gate(
    u: &ComplexMatrix,
    w: &ComplexMatrix,
    target: &TargetEmbedding,
) -> Result<VerifyReport> {
    let t = u.matmul(w)?;
    let transmission_distance = match target.mode() {
        EmbedMode::Unitary => frobenius_distance(&t, target.target())?,
        EmbedMode::Projected => {
            let observed = t.block(0, 0, target.n(), target.m())?;
            frobenius_distance(&observed, target.target())?
        }
    };
    let realized = achieved_gate(&t, target.n())?;
    let gate = achieved_gate(target.target(), target.n())?;
    let gate_distance = frobenius_distance(&realized, &gate)?;
    Ok(VerifyReport {
        transmission_distance,
        gate_distance,
        unitarity_defect: unitarity_defect(w)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{embed_target, gate_x};
    use crate::random::haar_unitary;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex::new(re, im)
    }

    fn fig_setup(m: usize, seed: u64) -> (ComplexMatrix, TargetEmbedding) {
        let gate = gate_x(3).unwrap();
        let src = RandomSource::new(seed);
        let u = haar_unitary(m, src.with_stream(streams::RESERVOIR)).unwrap();
        let emb = embed_target(&gate, m, EmbedMode::Unitary, src.with_stream(streams::COMPLEMENT))
            .unwrap();
        (u, emb)
    }

    #[test]
    fn generated_dataset_has_exact_labels() {
        let (u, emb) = fig_setup(5, 1);
        let _ = u;
        let ds = generate_dataset(emb.target(), 5, 100, 50, RandomSource::new(2)).unwrap();
        assert_eq!(ds.n_train(), 100);
        assert_eq!(ds.n_valid(), 50);
        let (xs, ys) = ds.training();
        for (x, y) in xs.iter().zip(ys.iter()) {
            let expect = emb.target().matvec(x).unwrap();
            let dev = y.sub(&expect).unwrap().norm();
            assert!(dev <= 1e-14);
            assert!((x.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let (_, emb) = fig_setup(5, 1);
        let a = generate_dataset(emb.target(), 5, 10, 5, RandomSource::new(9)).unwrap();
        let b = generate_dataset(emb.target(), 5, 10, 5, RandomSource::new(9)).unwrap();
        assert_eq!(a.training().0, b.training().0);
        assert_eq!(a.validation().1, b.validation().1);
    }

    #[test]
    fn identity_target_labels_inputs() {
        let id = ComplexMatrix::identity(4);
        let ds = generate_dataset(&id, 4, 5, 5, RandomSource::new(3)).unwrap();
        let (xs, ys) = ds.training();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn zero_counts_are_rejected() {
        let id = ComplexMatrix::identity(4);
        assert!(generate_dataset(&id, 4, 0, 5, RandomSource::new(0)).is_err());
        assert!(generate_dataset(&id, 4, 5, 0, RandomSource::new(0)).is_err());
    }

    #[test]
    fn cost_is_zero_at_exact_weights() {
        let (u, emb) = fig_setup(5, 4);
        let w = u.dagger().matmul(emb.target()).unwrap();
        let ds = generate_dataset(emb.target(), 5, 3, 2, RandomSource::new(5)).unwrap();
        let (xs, ys) = ds.training();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!(cost(&u, &w, x, y, CostSpan::AllM).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn unit_residual_over_five_components() {
        let u = ComplexMatrix::identity(5);
        let w = ComplexMatrix::zeros(5, 5);
        let x = ComplexVector::basis(5, 0).unwrap();
        let y = ComplexVector::basis(5, 0).unwrap();
        let e = cost(&u, &w, &x, &y, CostSpan::AllM).unwrap();
        assert!((e - 0.2).abs() <= 1e-15);
    }

    #[test]
    fn cost_matches_naive_loop_oracle() {
        let (u, emb) = fig_setup(4, 6);
        let w = crate::random::gaussian_matrix(4, 4, RandomSource::new(7)).unwrap();
        let mut rng = RandomSource::new(8).rng();
        let x = random_state(4, &mut rng).unwrap();
        let y = emb.target().matvec(&x).unwrap();
        for span in [CostSpan::AllM, CostSpan::FirstN(3)] {
            let fast = cost(&u, &w, &x, &y, span).unwrap();
            // independent per-component recomputation
            let k = match span {
                CostSpan::AllM => 4,
                CostSpan::FirstN(n) => n,
            };
            let mut slow = 0.0;
            for i in 0..k {
                let mut out_i = ZERO;
                for a in 0..4 {
                    let mut wx_a = ZERO;
                    for b in 0..4 {
                        wx_a += w.get(a, b) * x.get(b);
                    }
                    out_i += u.get(i, a) * wx_a;
                }
                slow += (y.get(i) - out_i).norm_sqr();
            }
            slow /= k as f64;
            assert!((fast - slow).abs() <= 1e-14, "span {span:?}");
        }
    }

    #[test]
    fn gradient_vanishes_at_minimum() {
        let (u, emb) = fig_setup(5, 10);
        let w = u.dagger().matmul(emb.target()).unwrap();
        let mut rng = RandomSource::new(11).rng();
        let x = random_state(5, &mut rng).unwrap();
        let y = emb.target().matvec(&x).unwrap();
        let g = cost_gradient(&u, &w, &x, &y, CostSpan::AllM).unwrap();
        assert!(g.frobenius_norm() <= 1e-13);
    }

    #[test]
    fn gradient_scales_with_residual() {
        let (u, _) = fig_setup(4, 12);
        let w = crate::random::gaussian_matrix(4, 4, RandomSource::new(13)).unwrap();
        let mut rng = RandomSource::new(14).rng();
        let x = random_state(4, &mut rng).unwrap();
        let y0 = u.matvec(&w.matvec(&x).unwrap()).unwrap();
        // y = y0 + d gives residual exactly d; scaling d scales the gradient
        let d = random_state(4, &mut rng).unwrap();
        let y1 = ComplexVector::new(
            y0.data().iter().zip(d.data()).map(|(&a, &b)| a + b).collect(),
        )
        .unwrap();
        let y2 = ComplexVector::new(
            y0.data().iter().zip(d.data()).map(|(&a, &b)| a + b * 3.0).collect(),
        )
        .unwrap();
        let g1 = cost_gradient(&u, &w, &x, &y1, CostSpan::AllM).unwrap();
        let g2 = cost_gradient(&u, &w, &x, &y2, CostSpan::AllM).unwrap();
        let dist = frobenius_distance(&g2, &g1.scale(c(3.0, 0.0))).unwrap();
        assert!(dist <= 1e-13);
    }

    // central finite differences over every real coordinate of (W', W'')
    fn fd_gradient(
        u: &ComplexMatrix,
        w: &ComplexMatrix,
        x: &ComplexVector,
        y: &ComplexVector,
        span: CostSpan,
        h: f64,
    ) -> ComplexMatrix {
        let m = w.rows();
        let mut out = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let mut probe = |dz: Complex64| {
                    let mut wp = w.clone();
                    wp.set(i, j, w.get(i, j) + dz);
                    cost(u, &wp, x, y, span).unwrap()
                };
                let d_re = (probe(c(h, 0.0)) - probe(c(-h, 0.0))) / (2.0 * h);
                let d_im = (probe(c(0.0, h)) - probe(c(0.0, -h))) / (2.0 * h);
                // de/dW* = (de/dW' + i de/dW'') / 2
                out.set(i, j, c(d_re / 2.0, d_im / 2.0));
            }
        }
        out
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..4u64 {
            let m = 3 + (seed as usize % 3);
            let (u, emb) = fig_setup(m, 20 + seed);
            let w = crate::random::gaussian_matrix(m, m, RandomSource::new(30 + seed)).unwrap();
            let mut rng = RandomSource::new(40 + seed).rng();
            let x = random_state(m, &mut rng).unwrap();
            let y = emb.target().matvec(&x).unwrap();
            for span in [CostSpan::AllM, CostSpan::FirstN(3)] {
                let analytic = cost_gradient(&u, &w, &x, &y, span).unwrap();
                let numeric = fd_gradient(&u, &w, &x, &y, span, 1e-6);
                let rel = frobenius_distance(&analytic, &numeric).unwrap()
                    / analytic.frobenius_norm().max(1e-12);
                assert!(rel <= 1e-6, "seed {seed} span {span:?}: rel {rel:e}");
            }
        }
    }

    #[test]
    fn training_converges_on_reference_configuration() {
        let (u, emb) = fig_setup(5, 50);
        let ds = generate_dataset(emb.target(), 5, 100, 50, RandomSource::new(51)).unwrap();
        let config = TrainConfig {
            learning_rate: 2.0,
            max_epochs: 50,
            valid_threshold: 1e-3,
            seed: 52,
            ..Default::default()
        };
        let run = train(&u, &ds, &config).unwrap();
        assert!(run.converged, "validation history: {:?}", run.valid_history);
        assert!(run.epochs_used <= 50);
        assert_eq!(run.valid_history.len(), run.epochs_used);
    }

    #[test]
    fn exact_initial_weights_converge_immediately() {
        let (u, emb) = fig_setup(5, 60);
        let ds = generate_dataset(emb.target(), 5, 10, 5, RandomSource::new(61)).unwrap();
        let w0 = u.dagger().matmul(emb.target()).unwrap();
        let config = TrainConfig::default();
        let run = train_from_weights(&u, &ds, &config, Some(w0)).unwrap();
        assert!(run.converged);
        assert!(run.epochs_used <= 1);
    }

    #[test]
    fn zero_learning_rate_freezes_validation() {
        let (u, emb) = fig_setup(4, 70);
        let ds = generate_dataset(emb.target(), 4, 10, 5, RandomSource::new(71)).unwrap();
        let config = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 10,
            valid_threshold: 1e-12,
            seed: 72,
            ..Default::default()
        };
        let run = train(&u, &ds, &config).unwrap();
        assert!(!run.converged);
        let first = run.valid_history[0];
        assert!(run.valid_history.iter().all(|&v| (v - first).abs() <= 1e-15 * first));
    }

    #[test]
    fn training_cost_is_monotone_at_default_step() {
        let (u, emb) = fig_setup(5, 80);
        let ds = generate_dataset(emb.target(), 5, 100, 50, RandomSource::new(81)).unwrap();
        let config = TrainConfig { max_epochs: 200, seed: 82, ..Default::default() };
        let run = train(&u, &ds, &config).unwrap();
        for pair in run.train_history.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "rise {} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn tight_training_yields_unitary_weights() {
        // with a unitary target and a spanning training set the minimizer
        // is the unitary U† T
        let (u, emb) = fig_setup(4, 90);
        let ds = generate_dataset(emb.target(), 4, 20, 5, RandomSource::new(91)).unwrap();
        let config = TrainConfig {
            learning_rate: 3.0,
            max_epochs: 4000,
            valid_threshold: 1e-10,
            seed: 92,
            ..Default::default()
        };
        let run = train(&u, &ds, &config).unwrap();
        assert!(run.converged);
        assert!(unitarity_defect(&run.weights).unwrap() <= 1e-4);
    }

    #[test]
    fn adam_is_deterministic_and_converges() {
        let (u, emb) = fig_setup(5, 110);
        let ds = generate_dataset(emb.target(), 5, 50, 20, RandomSource::new(111)).unwrap();
        let config = TrainConfig {
            learning_rate: 5e-3,
            max_epochs: 2000,
            valid_threshold: 1e-3,
            seed: 112,
            optimizer: Optimizer::adam(),
            ..Default::default()
        };
        let a = train(&u, &ds, &config).unwrap();
        let b = train(&u, &ds, &config).unwrap();
        assert!(a.converged, "history {:?}", &a.valid_history[a.valid_history.len() - 5..]);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.epochs_used, b.epochs_used);
    }

    #[test]
    fn verify_report_at_exact_and_zero_weights() {
        let (u, emb) = fig_setup(5, 100);
        let exact = u.dagger().matmul(emb.target()).unwrap();
        let report = verify_gate(&u, &exact, &emb).unwrap();
        assert!(report.transmission_distance <= 1e-13);
        assert!(report.gate_distance <= 1e-13);
        assert!(report.unitarity_defect <= 1e-12);

        let zero = ComplexMatrix::zeros(5, 5);
        let report = verify_gate(&u, &zero, &emb).unwrap();
        assert!((report.transmission_distance - 5.0f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn nonunitary_reservoir_is_rejected() {
        let bad = ComplexMatrix::diagonal(&[c(1.0, 0.0), c(0.4, 0.0)]);
        let ds = generate_dataset(&ComplexMatrix::identity(2), 2, 2, 2, RandomSource::new(0))
            .unwrap();
        assert!(matches!(
            train(&bad, &ds, &TrainConfig::default()),
            Err(Error::Validation { .. })
        ));
    }
}
