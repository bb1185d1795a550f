//! Additive expert ensemble (continuous loss) with weakest-first pruning.

use super::{ErrorScale, ErrorScaleMode, StreamLearner};
use crate::error::{Error, Result};
use crate::learners::Regressor;
use crate::stream::Instance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AddExpConfig {
    /// Multiplicative penalty base.
    pub beta: f64,
    /// New-expert weight as a fraction of the total weight.
    pub gamma: f64,
    /// Ensemble loss above which an expert is added.
    pub tau: f64,
    pub max_experts: usize,
    pub error_scale: ErrorScaleMode,
}

impl Default for AddExpConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            gamma: 0.1,
            tau: 0.05,
            max_experts: 10,
            error_scale: ErrorScaleMode::default(),
        }
    }
}

impl AddExpConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta > 0.0
            && self.beta < 1.0
            && self.gamma > 0.0
            && self.gamma.is_finite()
            && (0.0..=1.0).contains(&self.tau)
            && self.max_experts > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid AddExp parameters {self:?}")))
        }
    }
}

// Rescaling all weights by a common factor changes neither the prediction
// nor which expert is weakest, so the total is kept away from underflow.
const RESCALE_BELOW: f64 = 1e-100;

#[derive(Debug)]
struct Expert {
    learner: Box<dyn Regressor>,
    weight: f64,
}

#[derive(Debug)]
pub struct AddExp {
    config: AddExpConfig,
    experts: Vec<Expert>,
    prototype: Box<dyn Regressor>,
    scale: ErrorScale,
    additions: usize,
}

impl AddExp {
    pub fn new(config: AddExpConfig, prototype: Box<dyn Regressor>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            experts: vec![Expert {
                learner: prototype.clone_fresh(),
                weight: 1.0,
            }],
            scale: ErrorScale::new(config.error_scale)?,
            prototype,
            config,
            additions: 0,
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.experts.iter().map(|e| e.weight).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for e in &self.experts {
            num += e.weight * e.learner.predict(x)?;
            den += e.weight;
        }
        Ok(num / den)
    }
}

impl StreamLearner for AddExp {
    fn process(&mut self, instance: &Instance) -> Result<f64> {
        let preds = self
            .experts
            .iter()
            .map(|e| e.learner.predict(&instance.x))
            .collect::<Result<Vec<f64>>>()?;
        let total: f64 = self.experts.iter().map(|e| e.weight).sum();
        let prediction = self
            .experts
            .iter()
            .zip(&preds)
            .map(|(e, h)| e.weight * h)
            .sum::<f64>()
            / total;

        for (e, h) in self.experts.iter_mut().zip(&preds) {
            let loss = self.scale.normalize((h - instance.y).abs());
            e.weight *= self.config.beta.powf(loss);
        }
        let total: f64 = self.experts.iter().map(|e| e.weight).sum();
        if total < RESCALE_BELOW {
            for e in &mut self.experts {
                e.weight /= total;
            }
        }
        for e in &mut self.experts {
            e.weight = e.weight.max(f64::MIN_POSITIVE);
        }

        let ensemble_loss = self.scale.normalize((prediction - instance.y).abs());
        if ensemble_loss > self.config.tau {
            if self.experts.len() >= self.config.max_experts {
                let weakest = self
                    .experts
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, e)| if e.weight < self.experts[best].weight { i } else { best });
                self.experts.remove(weakest);
            }
            let total: f64 = self.experts.iter().map(|e| e.weight).sum();
            self.experts.push(Expert {
                learner: self.prototype.clone_fresh(),
                weight: self.config.gamma * total,
            });
            self.additions += 1;
        }
        self.scale.observe(instance.y);

        for e in &mut self.experts {
            e.learner.update(&instance.x, instance.y)?;
        }
        Ok(prediction)
    }

    fn size(&self) -> usize {
        self.experts.len()
    }

    fn adaptations(&self) -> usize {
        self.additions
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{Ema, MeanRegressor};
    use crate::rng;

    fn fixed(r: f64) -> AddExpConfig {
        AddExpConfig {
            error_scale: ErrorScaleMode::Fixed(r),
            ..AddExpConfig::default()
        }
    }

    #[test]
    fn exact_prediction_keeps_weight() {
        let mut a = AddExp::new(fixed(1.0), Box::new(MeanRegressor::new())).unwrap();
        a.process(&Instance::new(vec![], 0.0, 0)).unwrap();
        assert_eq!(a.weights(), vec![1.0]);
        assert_eq!(a.size(), 1);
    }

    #[test]
    fn full_loss_halves_weight() {
        let mut a = AddExp::new(fixed(1.0), Box::new(MeanRegressor::new())).unwrap();
        a.process(&Instance::new(vec![], 5.0, 0)).unwrap();
        let w = a.weights();
        assert_eq!(w[0], 0.5);
        // loss 1 > tau, so a new expert joined with gamma * total
        assert_eq!(w.len(), 2);
        assert_eq!(w[1], 0.05);
    }

    #[test]
    fn capacity_prunes_weakest() {
        let cfg = AddExpConfig {
            max_experts: 3,
            ..fixed(1.0)
        };
        let mut a = AddExp::new(cfg, Box::new(Ema::new(2).unwrap())).unwrap();
        for t in 0..50 {
            let y = if t % 2 == 0 { 1.0 } else { -1.0 };
            a.process(&Instance::new(vec![], y, t)).unwrap();
            assert!(a.size() <= 3);
        }
        assert_eq!(a.size(), 3);
        assert!(a.adaptations() > 3);
    }

    #[test]
    fn weights_stay_positive_over_long_runs() {
        let mut rng = rng::seeded(17);
        let mut a = AddExp::new(AddExpConfig::default(), Box::new(Ema::new(5).unwrap())).unwrap();
        for t in 0..1_000_000u64 {
            let y = if (t / 5_000) % 2 == 0 { 0.0 } else { 10.0 } + rng::unit(&mut rng);
            let p = a.process(&Instance::new(vec![], y, t)).unwrap();
            assert!(p.is_finite());
        }
        assert!(a.weights().iter().all(|w| *w > 0.0 && w.is_finite()));
    }
}
