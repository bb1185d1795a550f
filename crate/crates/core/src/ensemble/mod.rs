//! Ensemble algorithms driven one instance at a time, test-then-train.

mod addexp;
mod sfnr;

pub use addexp::{AddExp, AddExpConfig};
pub use sfnr::{weighted_vote, DetectionMode, DriftEvent, Sfnr, SfnrConfig};

use crate::error::{Error, Result};
use crate::learners::Regressor;
use crate::stream::Instance;

/// A learner consuming a stream: `process` returns the prediction made for
/// the instance before its target is used for training.
pub trait StreamLearner: Send {
    fn process(&mut self, instance: &Instance) -> Result<f64>;

    /// Number of experts currently held.
    fn size(&self) -> usize;

    /// Structural adaptations so far (network evolutions, expert additions).
    fn adaptations(&self) -> usize;
}

/// How absolute errors are mapped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorScaleMode {
    /// Known target range.
    Fixed(f64),
    /// Observed target range (max − min), frozen after `warmup` instances.
    RunningRange { warmup: u64 },
}

impl Default for ErrorScaleMode {
    fn default() -> Self {
        ErrorScaleMode::RunningRange { warmup: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct ErrorScale {
    mode: ErrorScaleMode,
    min: f64,
    max: f64,
    seen: u64,
}

impl ErrorScale {
    pub fn new(mode: ErrorScaleMode) -> Result<Self> {
        if let ErrorScaleMode::Fixed(r) = mode {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidArgument(format!("error scale must be positive, got {r}")));
            }
        }
        Ok(Self {
            mode,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            seen: 0,
        })
    }

    pub fn observe(&mut self, y: f64) {
        if let ErrorScaleMode::RunningRange { warmup } = self.mode {
            if self.seen < warmup {
                self.min = self.min.min(y);
                self.max = self.max.max(y);
            }
        }
        self.seen += 1;
    }

    pub fn scale(&self) -> f64 {
        match self.mode {
            ErrorScaleMode::Fixed(r) => r,
            ErrorScaleMode::RunningRange { .. } => {
                let range = self.max - self.min;
                if range.is_finite() && range > 0.0 {
                    range
                } else {
                    1.0
                }
            }
        }
    }

    /// `abs_error / scale`, clamped to `[0, 1]`.
    pub fn normalize(&self, abs_error: f64) -> f64 {
        (abs_error / self.scale()).clamp(0.0, 1.0)
    }
}

/// One base learner run on its own.
#[derive(Debug)]
pub struct SingleLearner {
    learner: Box<dyn Regressor>,
}

impl SingleLearner {
    pub fn new(learner: Box<dyn Regressor>) -> Self {
        Self { learner }
    }

    pub fn learner(&self) -> &dyn Regressor {
        self.learner.as_ref()
    }
}

impl StreamLearner for SingleLearner {
    fn process(&mut self, instance: &Instance) -> Result<f64> {
        let pred = self.learner.predict(&instance.x)?;
        self.learner.update(&instance.x, instance.y)?;
        Ok(pred)
    }

    fn size(&self) -> usize {
        1
    }

    fn adaptations(&self) -> usize {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_range_freezes_after_warmup() {
        let mut s = ErrorScale::new(ErrorScaleMode::RunningRange { warmup: 3 }).unwrap();
        assert_eq!(s.scale(), 1.0);
        for y in [1.0, 4.0, 2.0, 100.0] {
            s.observe(y);
        }
        assert_eq!(s.scale(), 3.0);
        assert_eq!(s.normalize(1.5), 0.5);
        assert_eq!(s.normalize(30.0), 1.0);
    }

    #[test]
    fn fixed_scale_validates() {
        assert!(ErrorScale::new(ErrorScaleMode::Fixed(0.0)).is_err());
        let s = ErrorScale::new(ErrorScaleMode::Fixed(2.0)).unwrap();
        assert_eq!(s.normalize(1.0), 0.5);
    }
}
