//! Online base regressors that serve as ensemble experts.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The contract every expert satisfies. `predict` never mutates state.
pub trait Regressor: fmt::Debug + Send {
    fn predict(&self, x: &[f64]) -> Result<f64>;

    fn update(&mut self, x: &[f64], y: f64) -> Result<()>;

    /// An untrained learner of the same kind and configuration.
    fn clone_fresh(&self) -> Box<dyn Regressor>;

    fn name(&self) -> &'static str;
}

/// Exponential moving average of the targets; ignores features.
#[derive(Debug, Clone)]
pub struct Ema {
    window: usize,
    multiplier: f64,
    current: Option<f64>,
}

impl Ema {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("EMA window must be positive".into()));
        }
        Ok(Self {
            window,
            multiplier: 2.0 / (window as f64 + 1.0),
            current: None,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn current(&self) -> Option<f64> {
        self.current
    }

    /// `EMA_t = (p - EMA_{t-1}) * 2/(w+1) + EMA_{t-1}`; the first price seeds it.
    pub fn observe(&mut self, price: f64) {
        self.current = Some(match self.current {
            None => price,
            Some(prev) => (price - prev) * self.multiplier + prev,
        });
    }
}

impl Regressor for Ema {
    fn predict(&self, _x: &[f64]) -> Result<f64> {
        Ok(self.current.unwrap_or(0.0))
    }

    fn update(&mut self, _x: &[f64], y: f64) -> Result<()> {
        self.observe(y);
        Ok(())
    }

    fn clone_fresh(&self) -> Box<dyn Regressor> {
        Box::new(Ema {
            current: None,
            ..self.clone()
        })
    }

    fn name(&self) -> &'static str {
        "ema"
    }
}

/// Running mean of all targets seen, with Neumaier-compensated summation.
#[derive(Debug, Clone, Default)]
pub struct MeanRegressor {
    sum: f64,
    compensation: f64,
    count: u64,
}

impl MeanRegressor {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Regressor for MeanRegressor {
    fn predict(&self, _x: &[f64]) -> Result<f64> {
        if self.count == 0 {
            return Ok(0.0);
        }
        Ok((self.sum + self.compensation) / self.count as f64)
    }

    fn update(&mut self, _x: &[f64], y: f64) -> Result<()> {
        let t = self.sum + y;
        if self.sum.abs() >= y.abs() {
            self.compensation += (self.sum - t) + y;
        } else {
            self.compensation += (y - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
        Ok(())
    }

    fn clone_fresh(&self) -> Box<dyn Regressor> {
        Box::new(MeanRegressor::new())
    }

    fn name(&self) -> &'static str {
        "mean"
    }
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
const VARIANCE_FLOOR: f64 = 1e-8;

/// Linear model on running-standardised features trained by one SGD step on
/// `0.5 * (prediction - y)^2` per instance. The first update fixes the
/// feature dimension.
#[derive(Debug, Clone)]
pub struct LinearRegressor {
    learning_rate: f64,
    weights: Vec<f64>,
    bias: f64,
    means: Vec<f64>,
    m2: Vec<f64>,
    n_updates: u64,
}

impl LinearRegressor {
    pub fn new(learning_rate: f64) -> Result<Self> {
        if !(learning_rate.is_finite() && learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            learning_rate,
            weights: Vec::new(),
            bias: 0.0,
            means: Vec::new(),
            m2: Vec::new(),
            n_updates: 0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn n_updates(&self) -> u64 {
        self.n_updates
    }

    pub fn dim(&self) -> Option<usize> {
        (self.n_updates > 0).then_some(self.weights.len())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim() {
            Some(d) if d != x.len() => Err(Error::Dimension {
                expected: d,
                got: x.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Features standardised with the current running statistics.
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_updates.max(1) as f64;
        x.iter()
            .zip(&self.means)
            .zip(&self.m2)
            .map(|((xi, mean), m2)| (xi - mean) / (m2 / n).max(VARIANCE_FLOOR).sqrt())
            .collect()
    }

    /// Squared-loss objective `0.5 * (w·z + b - y)^2` for explicit parameters.
    pub fn loss_at(weights: &[f64], bias: f64, z: &[f64], y: f64) -> f64 {
        let r = weights.iter().zip(z).map(|(w, zi)| w * zi).sum::<f64>() + bias - y;
        0.5 * r * r
    }

    /// Gradient of [`LinearRegressor::loss_at`] with respect to weights and bias.
    pub fn loss_gradient(weights: &[f64], bias: f64, z: &[f64], y: f64) -> (Vec<f64>, f64) {
        let r = weights.iter().zip(z).map(|(w, zi)| w * zi).sum::<f64>() + bias - y;
        (z.iter().map(|zi| r * zi).collect(), r)
    }
}

impl Regressor for LinearRegressor {
    fn predict(&self, x: &[f64]) -> Result<f64> {
        if self.n_updates == 0 {
            return Ok(0.0);
        }
        self.check_dim(x)?;
        let z = self.standardize(x);
        Ok(self.weights.iter().zip(&z).map(|(w, zi)| w * zi).sum::<f64>() + self.bias)
    }

    fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.check_dim(x)?;
        if self.n_updates == 0 {
            let d = x.len();
            self.weights = vec![0.0; d];
            self.means = vec![0.0; d];
            self.m2 = vec![0.0; d];
        }
        self.n_updates += 1;
        let n = self.n_updates as f64;
        for ((xi, mean), m2) in x.iter().zip(&mut self.means).zip(&mut self.m2) {
            let d0 = xi - *mean;
            *mean += d0 / n;
            *m2 += d0 * (xi - *mean);
        }
        let z = self.standardize(x);
        let (grad_w, grad_b) = Self::loss_gradient(&self.weights, self.bias, &z, y);
        for (w, g) in self.weights.iter_mut().zip(grad_w) {
            *w -= self.learning_rate * g;
        }
        self.bias -= self.learning_rate * grad_b;
        Ok(())
    }

    fn clone_fresh(&self) -> Box<dyn Regressor> {
        Box::new(LinearRegressor::new(self.learning_rate).expect("validated rate"))
    }

    fn name(&self) -> &'static str {
        "linear"
    }
}

/// Which base learner an ensemble is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerKind {
    Linear { learning_rate: f64 },
    Ema { window: usize },
    Mean,
}

impl LearnerKind {
    pub fn build(&self) -> Result<Box<dyn Regressor>> {
        Ok(match *self {
            LearnerKind::Linear { learning_rate } => Box::new(LinearRegressor::new(learning_rate)?),
            LearnerKind::Ema { window } => Box::new(Ema::new(window)?),
            LearnerKind::Mean => Box::new(MeanRegressor::new()),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Linear { .. } => "linear",
            LearnerKind::Ema { .. } => "ema",
            LearnerKind::Mean => "mean",
        }
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    /// Parses the kind with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(LearnerKind::Linear {
                learning_rate: DEFAULT_LEARNING_RATE,
            }),
            "ema" => Ok(LearnerKind::Ema { window: 5 }),
            "mean" => Ok(LearnerKind::Mean),
            other => Err(Error::Config(format!("unknown learner {other:?}"))),
        }
    }
}
