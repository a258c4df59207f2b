//! Single-hidden-layer feed-forward regressor trained with mean squared error.
//!
//! `f(x) = sum_j beta_j * psi(w_j . x + b_j) + c` with a squashing activation
//! `psi`. Parameters live in one flat buffer laid out as hidden weights
//! (row-major, one row per hidden unit), hidden biases, output weights and
//! the output bias; the serialized format uses the same order.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::labeling::OpSeries;
use crate::scalar::Scalar;
use crate::windowing::WindowMatrix;

/// Squashing activation of the hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Sigmoid => T::one() / (T::one() + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation value `a = psi(z)`.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, a: T) -> T {
        match self {
            Activation::Sigmoid => a * (T::one() - a),
            Activation::Tanh => T::one() - a * a,
        }
    }

    /// Supremum of `|psi'|`.
    pub fn max_slope<T: Scalar>(self) -> T {
        match self {
            Activation::Sigmoid => T::lit(0.25),
            Activation::Tanh => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    Sgd,
    /// Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    #[default]
    Adam,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::InvalidArgument(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            validation_fraction: 0.2,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must lie in (0, 0.5), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Splits `n` temporally ordered rows into a fitting range and a trailing
/// validation range.
pub fn validation_split(n: usize, fraction: f64) -> (Range<usize>, Range<usize>) {
    let n_val = ((n as f64) * fraction).floor() as usize;
    let n_val = if n >= 2 { n_val.clamp(1, n - 1) } else { 0 };
    (0..n - n_val, n - n_val..n)
}

/// Per-epoch mean squared errors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossHistory<T: Scalar = f64> {
    /// Training MSE of the initial weights.
    pub initial_train: T,
    pub train: Vec<T>,
    pub validation: Vec<T>,
}

impl<T: Scalar> LossHistory<T> {
    /// Writes `epoch,train_mse,validation_mse` rows; epoch 0 is the
    /// untrained model.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "epoch,train_mse,validation_mse")?;
        writeln!(writer, "0,{},", self.initial_train)?;
        for (e, (t, v)) in self.train.iter().zip(&self.validation).enumerate() {
            writeln!(writer, "{},{},{}", e + 1, t, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regressor<T: Scalar = f64> {
    input_dim: usize,
    hidden_units: usize,
    activation: Activation,
    params: Vec<T>,
}

/// `(r + 1) * Q + (Q + 1)`.
pub const fn parameter_count(input_dim: usize, hidden_units: usize) -> usize {
    (input_dim + 1) * hidden_units + (hidden_units + 1)
}

impl<T: Scalar> Regressor<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn init(input_dim: usize, hidden_units: usize, activation: Activation, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_units == 0 {
            return Err(Error::InvalidArgument(
                "input dimension and hidden units must be at least 1".into(),
            ));
        }
        let mut model = Self::zeros(input_dim, hidden_units, activation);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden_limit = (6.0 / (input_dim + hidden_units) as f64).sqrt();
        let output_limit = (6.0 / (hidden_units + 1) as f64).sqrt();
        let (w_range, _, beta_range, _) = model.layout();
        for p in &mut model.params[w_range] {
            *p = T::lit(rng.random_range(-hidden_limit..hidden_limit));
        }
        for p in &mut model.params[beta_range] {
            *p = T::lit(rng.random_range(-output_limit..output_limit));
        }
        Ok(model)
    }

    pub fn zeros(input_dim: usize, hidden_units: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            hidden_units,
            activation,
            params: vec![T::zero(); parameter_count(input_dim, hidden_units)],
        }
    }

    /// Builds a model from explicit parameters.
    pub fn from_parts(
        hidden_weights: Vec<Vec<T>>,
        hidden_biases: Vec<T>,
        output_weights: Vec<T>,
        output_bias: T,
        activation: Activation,
    ) -> Result<Self> {
        let q = hidden_weights.len();
        let r = hidden_weights.first().map_or(0, Vec::len);
        if q == 0 || r == 0 {
            return Err(Error::InvalidArgument("empty hidden layer".into()));
        }
        for row in &hidden_weights {
            if row.len() != r {
                return Err(Error::DimensionMismatch { expected: r, actual: row.len() });
            }
        }
        for v in [&hidden_biases, &output_weights] {
            if v.len() != q {
                return Err(Error::DimensionMismatch { expected: q, actual: v.len() });
            }
        }
        let mut params: Vec<T> = hidden_weights.into_iter().flatten().collect();
        params.extend(hidden_biases);
        params.extend(output_weights);
        params.push(output_bias);
        Ok(Self {
            input_dim: r,
            hidden_units: q,
            activation,
            params,
        })
    }

    fn layout(&self) -> (Range<usize>, Range<usize>, Range<usize>, usize) {
        let (r, q) = (self.input_dim, self.hidden_units);
        let w_end = r * q;
        (0..w_end, w_end..w_end + q, w_end + q..w_end + 2 * q, w_end + 2 * q)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_units
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Row `j` holds the weights of hidden unit `j`.
    pub fn hidden_weights(&self) -> &[T] {
        &self.params[self.layout().0]
    }

    pub fn hidden_biases(&self) -> &[T] {
        &self.params[self.layout().1]
    }

    pub fn output_weights(&self) -> &[T] {
        &self.params[self.layout().2]
    }

    pub fn output_bias(&self) -> T {
        self.params[self.layout().3]
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass writing hidden activations into `hidden`.
    fn forward_into(&self, x: &[T], hidden: &mut [T]) -> T {
        let r = self.input_dim;
        let (w, b, beta, c) = self.layout();
        let weights = &self.params[w];
        let biases = &self.params[b];
        let betas = &self.params[beta];
        let mut out = self.params[c];
        for j in 0..self.hidden_units {
            let row = &weights[j * r..(j + 1) * r];
            let z = row.iter().zip(x).fold(biases[j], |acc, (&wi, &xi)| acc + wi * xi);
            let a = self.activation.apply(z);
            hidden[j] = a;
            out = out + betas[j] * a;
        }
        out
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        let mut hidden = vec![T::zero(); self.hidden_units];
        Ok(self.forward_into(x, &mut hidden))
    }

    /// Accumulates `scale * d(f(x))/d(theta)` into `grad`, returning `f(x)`
    /// and reusing `hidden` as scratch.
    fn accumulate_output_grad(&self, x: &[T], scale: T, hidden: &mut [T], grad: &mut [T]) {
        let r = self.input_dim;
        let (w, b, beta, c) = self.layout();
        grad[c] = grad[c] + scale;
        for j in 0..self.hidden_units {
            let a = hidden[j];
            grad[beta.start + j] = grad[beta.start + j] + scale * a;
            let dz = scale * self.params[beta.start + j] * self.activation.derivative_from_output(a);
            grad[b.start + j] = grad[b.start + j] + dz;
            let row = &mut grad[w.start + j * r..w.start + (j + 1) * r];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g = *g + dz * xi;
            }
        }
    }

    /// Squared error `(f(x) - y)^2` and its gradient.
    pub fn loss_and_gradient(&self, x: &[T], target: T) -> Result<(T, Vec<T>)> {
        self.check_input(x)?;
        let mut hidden = vec![T::zero(); self.hidden_units];
        let out = self.forward_into(x, &mut hidden);
        let err = out - target;
        let mut grad = vec![T::zero(); self.params.len()];
        self.accumulate_output_grad(x, T::lit(2.0) * err, &mut hidden, &mut grad);
        Ok((err * err, grad))
    }

    /// Mean squared error over the rows in `range`.
    pub fn mse(&self, windows: &WindowMatrix<T>, targets: &[T], range: Range<usize>) -> T {
        if range.is_empty() {
            return T::zero();
        }
        let mut hidden = vec![T::zero(); self.hidden_units];
        let n = T::from_usize_lossy(range.len());
        let mut sum = T::zero();
        for i in range {
            let e = self.forward_into(windows.row(i), &mut hidden) - targets[i];
            sum = sum + e * e;
        }
        sum / n
    }

    /// Upper bound on `|f(x) - f(y)| / ||x - y||_2`.
    pub fn lipschitz_bound(&self) -> T {
        let r = self.input_dim;
        let weights = self.hidden_weights();
        let slope: T = self.activation.max_slope();
        self.output_weights()
            .iter()
            .enumerate()
            .map(|(j, &beta)| {
                let norm = weights[j * r..(j + 1) * r]
                    .iter()
                    .fold(T::zero(), |acc, &w| acc + w * w)
                    .sqrt();
                beta.abs() * norm * slope
            })
            .sum()
    }

    /// One prediction per window row, aligned with the row start times.
    pub fn predict_series(&self, windows: &WindowMatrix<T>) -> Result<OpSeries<T>> {
        if windows.width() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: windows.width(),
            });
        }
        let mut hidden = vec![T::zero(); self.hidden_units];
        let values = windows
            .rows()
            .map(|row| self.forward_into(row, &mut hidden))
            .collect();
        OpSeries::new(
            values,
            windows.start_times().to_vec(),
            windows.w(),
            windows.duration(),
        )
    }

    /// Serializes dimensions, activation and every parameter.
    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "evdetect-regressor 1")?;
        writeln!(writer, "scalar {}", T::NAME)?;
        writeln!(writer, "input_dim {}", self.input_dim)?;
        writeln!(writer, "hidden_units {}", self.hidden_units)?;
        writeln!(writer, "activation {}", self.activation)?;
        for p in &self.params {
            writeln!(writer, "{p}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Parse(format!("model file truncated before {what}")))
        };
        let magic = next("header")?;
        if magic.trim() != "evdetect-regressor 1" {
            return Err(Error::Parse(format!("not a model file: `{magic}`")));
        }
        let field = |line: String, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| Error::Parse(format!("expected `{key}`, got `{line}`")))
        };
        let scalar = field(next("scalar")?, "scalar")?;
        if scalar != T::NAME {
            return Err(Error::Parse(format!(
                "model stores {scalar} parameters, expected {}",
                T::NAME
            )));
        }
        let parse_usize = |s: String| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse(format!("bad dimension `{s}`")))
        };
        let input_dim = parse_usize(field(next("input_dim")?, "input_dim")?)?;
        let hidden_units = parse_usize(field(next("hidden_units")?, "hidden_units")?)?;
        let activation: Activation = field(next("activation")?, "activation")?.parse()?;
        let mut model = Self::zeros(input_dim, hidden_units, activation);
        for (k, p) in model.params.iter_mut().enumerate() {
            let line = next("parameters")?;
            *p = line
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad parameter {k}: `{line}`")))?;
        }
        if let Some(extra) = lines.next().transpose()? {
            if !extra.trim().is_empty() {
                return Err(Error::Parse("trailing data after parameters".into()));
            }
        }
        Ok(model)
    }
}

/// Trains `model` on `(windows, targets)` by mini-batch gradient descent on
/// the MSE. The trailing `validation_fraction` of rows is held out.
pub fn train<T: Scalar>(
    mut model: Regressor<T>,
    windows: &WindowMatrix<T>,
    targets: &OpSeries<T>,
    config: &TrainConfig,
) -> Result<(Regressor<T>, LossHistory<T>)> {
    config.validate()?;
    if windows.n_rows() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: windows.n_rows(),
            actual: targets.len(),
        });
    }
    if windows.width() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            actual: windows.width(),
        });
    }
    if windows.n_rows() < 2 {
        return Err(Error::InvalidArgument("need at least two training rows".into()));
    }
    let y = targets.values();
    let (fit, val) = validation_split(windows.n_rows(), config.validation_fraction);
    let mut order: Vec<usize> = fit.clone().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n_params = model.params.len();
    let mut grad = vec![T::zero(); n_params];
    let mut m = vec![T::zero(); n_params];
    let mut v = vec![T::zero(); n_params];
    let mut hidden = vec![T::zero(); model.hidden_units];
    let lr = T::lit(config.learning_rate);
    let (beta1, beta2, eps) = (T::lit(0.9), T::lit(0.999), T::lit(1e-8));
    let mut step: i32 = 0;

    let mut history = LossHistory {
        initial_train: model.mse(windows, y, fit.clone()),
        train: Vec::with_capacity(config.epochs),
        validation: Vec::with_capacity(config.epochs),
    };

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            let scale = T::lit(2.0) / T::from_usize_lossy(batch.len());
            for &i in batch {
                let x = windows.row(i);
                let out = model.forward_into(x, &mut hidden);
                model.accumulate_output_grad(x, scale * (out - y[i]), &mut hidden, &mut grad);
            }
            step += 1;
            match config.optimizer {
                Optimizer::Sgd => {
                    for (p, &g) in model.params.iter_mut().zip(&grad) {
                        *p = *p - lr * g;
                    }
                }
                Optimizer::Adam => {
                    let bc1 = T::one() - beta1.powi(step);
                    let bc2 = T::one() - beta2.powi(step);
                    for k in 0..n_params {
                        let g = grad[k];
                        m[k] = beta1 * m[k] + (T::one() - beta1) * g;
                        v[k] = beta2 * v[k] + (T::one() - beta2) * g * g;
                        let m_hat = m[k] / bc1;
                        let v_hat = v[k] / bc2;
                        model.params[k] = model.params[k] - lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        let train_mse = model.mse(windows, y, fit.clone());
        let val_mse = model.mse(windows, y, val.clone());
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.train.push(train_mse);
        history.validation.push(val_mse);
    }
    Ok((model, history))
}

/// Largest relative discrepancy between analytic and central-difference
/// gradients of `(f(x) - target)^2` over all parameters.
///
/// Each parameter is perturbed by `1e-5 * max(1, |p|)`, near the cube root
/// of the f64 epsilon; smaller steps let roundoff dominate. Gradients whose
/// magnitude is below `1e-5` are compared against that floor instead of
/// their own size. Meaningful for `f64` models.
pub fn gradient_check<T: Scalar>(model: &Regressor<T>, x: &[T], target: T) -> Result<T> {
    let (_, analytic) = model.loss_and_gradient(x, target)?;
    let mut probe = model.clone();
    let floor = T::lit(1e-5);
    let mut worst = T::zero();
    for (k, &g) in analytic.iter().enumerate() {
        let p = model.params[k];
        let h = T::lit(1e-5) * p.abs().max(T::one());
        probe.params[k] = p + h;
        let plus = probe.forward(x)? - target;
        probe.params[k] = p - h;
        let minus = probe.forward(x)? - target;
        probe.params[k] = p;
        let numeric = (plus - minus) * (plus + minus) / (T::lit(2.0) * h);
        let denom = g.abs().max(numeric.abs()).max(floor);
        let rel = (g - numeric).abs() / denom;
        if rel > worst {
            worst = rel;
        }
    }
    Ok(worst)
}
