//! Scale-free network regressor.
//!
//! Experts are nodes of an [`ExpertNetwork`]; the ensemble prediction is the
//! centrality-weighted mean of their predictions. Every expert trains on
//! every instance. When a change is signalled (a period whose RMSE exceeds a
//! threshold, or an ADWIN cut on the normalised ensemble error) the network
//! evolves: at capacity the highest-RMSE expert is removed and the graph
//! rewired, a fresh expert trained on recent instances joins by error-adapted
//! attachment, and centralities are recomputed.

use std::collections::{BTreeMap, VecDeque};

use super::{ErrorScale, ErrorScaleMode, StreamLearner};
use crate::adwin::{self, Adwin, WindowCut};
use crate::error::{Error, Result};
use crate::graph::{Centrality, ExpertNetwork, NodeId, DEFAULT_EDGES_PER_NODE, DEFAULT_ERROR_WINDOW};
use crate::learners::Regressor;
use crate::rng::{self, StreamRng};
use crate::stream::Instance;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectionMode {
    /// Evaluate the ensemble RMSE every `period` instances and evolve when it
    /// exceeds `threshold`.
    Period { period: u64, threshold: f64 },
    /// Feed normalised ensemble errors to ADWIN and evolve on every cut.
    Adwin {
        delta: f64,
        check_interval: usize,
        capacity: usize,
    },
}

impl DetectionMode {
    pub fn period() -> Self {
        DetectionMode::Period {
            period: 1_000,
            threshold: 0.08,
        }
    }

    pub fn adwin() -> Self {
        DetectionMode::Adwin {
            delta: adwin::DEFAULT_DELTA,
            check_interval: adwin::DEFAULT_CHECK_INTERVAL,
            capacity: adwin::DEFAULT_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfnrConfig {
    pub metric: Centrality,
    pub k_max: usize,
    pub edges_per_node: usize,
    pub mode: DetectionMode,
    /// Most recent instances kept for training new experts.
    pub buffer_size: usize,
    pub error_scale: ErrorScaleMode,
    /// Per-node error window used for node RMSE.
    pub error_window: usize,
}

impl Default for SfnrConfig {
    fn default() -> Self {
        Self {
            metric: Centrality::Eigenvector,
            k_max: 10,
            edges_per_node: DEFAULT_EDGES_PER_NODE,
            mode: DetectionMode::adwin(),
            buffer_size: 500,
            error_scale: ErrorScaleMode::default(),
            error_window: DEFAULT_ERROR_WINDOW,
        }
    }
}

impl SfnrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.edges_per_node == 0 || self.buffer_size == 0 || self.error_window == 0 {
            return Err(Error::Config(
                "k_max, edges per node, buffer size and error window must be positive".into(),
            ));
        }
        match self.mode {
            DetectionMode::Period { period, threshold } => {
                if period == 0 || !(threshold.is_finite() && threshold >= 0.0) {
                    return Err(Error::Config(format!(
                        "period must be positive and threshold non-negative (got {period}, {threshold})"
                    )));
                }
            }
            DetectionMode::Adwin {
                delta,
                check_interval,
                capacity,
            } => {
                if !(delta > 0.0 && delta < 1.0) || check_interval == 0 || capacity == 0 {
                    return Err(Error::Config(format!(
                        "adwin needs 0 < delta < 1 and positive interval/capacity (got {delta}, {check_interval}, {capacity})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One network evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEvent {
    /// Index of the instance whose processing triggered the evolution.
    pub index: u64,
    /// The ADWIN cut, in detector mode.
    pub cut: Option<WindowCut>,
    pub removed: Option<NodeId>,
    pub added: NodeId,
    pub trained_on: usize,
}

#[derive(Debug, Clone)]
enum Detector {
    Period { sum_sq: f64, count: u64 },
    Adwin(Adwin),
}

/// Weighted mean of `(weight, prediction)` pairs; plain mean when the weights
/// sum to zero.
pub fn weighted_vote(votes: &[(f64, f64)]) -> f64 {
    let total: f64 = votes.iter().map(|v| v.0).sum();
    if total > 0.0 && total.is_finite() {
        votes.iter().map(|(w, h)| w * h).sum::<f64>() / total
    } else {
        votes.iter().map(|v| v.1).sum::<f64>() / votes.len() as f64
    }
}

#[derive(Debug)]
pub struct Sfnr {
    config: SfnrConfig,
    network: ExpertNetwork,
    experts: BTreeMap<NodeId, Box<dyn Regressor>>,
    prototype: Box<dyn Regressor>,
    rng: StreamRng,
    next_id: u64,
    buffer: VecDeque<Instance>,
    detector: Detector,
    scale: ErrorScale,
    drift_log: Vec<DriftEvent>,
    seen: u64,
}

impl Sfnr {
    /// Starts with a single untrained expert cloned from `prototype`.
    pub fn new(config: SfnrConfig, prototype: Box<dyn Regressor>, seed: u64) -> Result<Self> {
        config.validate()?;
        let detector = match config.mode {
            DetectionMode::Period { .. } => Detector::Period { sum_sq: 0.0, count: 0 },
            DetectionMode::Adwin {
                delta,
                check_interval,
                capacity,
            } => Detector::Adwin(Adwin::with_params(delta, capacity, check_interval)?),
        };
        let mut sfnr = Self {
            network: ExpertNetwork::new(config.k_max, config.edges_per_node, config.error_window)?,
            experts: BTreeMap::new(),
            rng: rng::seeded(seed),
            next_id: 0,
            buffer: VecDeque::with_capacity(config.buffer_size),
            detector,
            scale: ErrorScale::new(config.error_scale)?,
            drift_log: Vec::new(),
            seen: 0,
            prototype,
            config,
        };
        let seed_expert = sfnr.prototype.clone_fresh();
        sfnr.insert_expert(seed_expert, 0)?;
        sfnr.network.update_centrality(sfnr.config.metric)?;
        Ok(sfnr)
    }

    pub fn config(&self) -> &SfnrConfig {
        &self.config
    }

    pub fn network(&self) -> &ExpertNetwork {
        &self.network
    }

    pub fn expert(&self, id: NodeId) -> Option<&dyn Regressor> {
        self.experts.get(&id).map(|b| b.as_ref())
    }

    pub fn drift_log(&self) -> &[DriftEvent] {
        &self.drift_log
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn detector(&self) -> Option<&Adwin> {
        match &self.detector {
            Detector::Adwin(a) => Some(a),
            Detector::Period { .. } => None,
        }
    }

    /// Centrality-weighted prediction together with every expert's vote.
    pub fn predict_detailed(&self, x: &[f64]) -> Result<(f64, Vec<(NodeId, f64)>)> {
        if self.experts.is_empty() {
            return Err(Error::Graph("prediction from an empty network".into()));
        }
        let mut per_node = Vec::with_capacity(self.experts.len());
        let mut votes = Vec::with_capacity(self.experts.len());
        for (id, stats) in self.network.nodes() {
            let h = self.experts[&id].predict(x)?;
            per_node.push((id, h));
            votes.push((stats.zeta, h));
        }
        Ok((weighted_vote(&votes), per_node))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.predict_detailed(x).map(|p| p.0)
    }

    fn insert_expert(&mut self, learner: Box<dyn Regressor>, born_at: u64) -> Result<NodeId> {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.network.add_node_preferential(id, born_at, &mut self.rng)?;
        self.experts.insert(id, learner);
        Ok(id)
    }

    /// Evolves the network using `training` to fit the new expert.
    pub fn evolve(&mut self, training: &[Instance], index: u64) -> Result<DriftEvent> {
        let removed = if self.network.len() >= self.config.k_max {
            let victim = self
                .network
                .worst_node()
                .ok_or_else(|| Error::Graph("no expert to remove".into()))?;
            self.network.remove_node_rewire(victim, &mut self.rng)?;
            self.experts.remove(&victim);
            Some(victim)
        } else {
            None
        };

        let mut learner = self.prototype.clone_fresh();
        if training.is_empty() {
            log::warn!("instance {index}: adding an untrained expert (empty training window)");
        }
        for inst in training {
            learner.update(&inst.x, inst.y)?;
        }
        let added = self.insert_expert(learner, index)?;
        self.network.update_centrality(self.config.metric)?;
        debug_assert!(self.network.is_connected());
        debug_assert!(self.network.len() <= self.config.k_max);

        Ok(DriftEvent {
            index,
            cut: None,
            removed,
            added,
            trained_on: training.len(),
        })
    }

    fn push_buffer(&mut self, instance: &Instance) {
        if self.buffer.len() == self.config.buffer_size {
            self.buffer.pop_front();
        }
        self.buffer.push_back(instance.clone());
    }
}

impl StreamLearner for Sfnr {
    fn process(&mut self, instance: &Instance) -> Result<f64> {
        let (prediction, votes) = self.predict_detailed(&instance.x)?;
        let abs_error = (prediction - instance.y).abs();
        for &(id, h) in &votes {
            self.network.record_error(id, (h - instance.y).abs());
        }

        let mut cut = None;
        let mut drifted = false;
        match &mut self.detector {
            Detector::Period { sum_sq, count } => {
                *sum_sq += abs_error * abs_error;
                *count += 1;
            }
            Detector::Adwin(adwin) => {
                drifted = adwin.add(self.scale.normalize(abs_error));
                cut = adwin.last_cut();
            }
        }
        self.scale.observe(instance.y);

        for learner in self.experts.values_mut() {
            learner.update(&instance.x, instance.y)?;
        }
        self.push_buffer(instance);
        self.seen += 1;

        let period_end = match (&mut self.detector, self.config.mode) {
            (Detector::Period { sum_sq, count }, DetectionMode::Period { period, threshold })
                if self.seen.is_multiple_of(period) =>
            {
                let rmse = (*sum_sq / *count as f64).sqrt();
                *sum_sq = 0.0;
                *count = 0;
                Some(rmse > threshold)
            }
            _ => None,
        };
        if let Some(exceeded) = period_end {
            if exceeded {
                let training: Vec<Instance> = self.buffer.iter().cloned().collect();
                let event = self.evolve(&training, instance.index)?;
                self.drift_log.push(event);
            }
            self.buffer.clear();
        } else if drifted {
            let width = self.detector().map_or(0, Adwin::width);
            let take = width.min(self.buffer.len());
            let training: Vec<Instance> =
                self.buffer.iter().skip(self.buffer.len() - take).cloned().collect();
            let mut event = self.evolve(&training, instance.index)?;
            event.cut = cut;
            self.drift_log.push(event);
        }
        Ok(prediction)
    }

    fn size(&self) -> usize {
        self.network.len()
    }

    fn adaptations(&self) -> usize {
        self.drift_log.len()
    }
}
