use std::fs::{self, File};
use std::io::BufWriter;
use std::time::Instant;

use rayon::prelude::*;

use crate::ensemble::{AddExp, Sfnr, SingleLearner, StreamLearner};
use crate::error::{Error, Result};
use crate::learners::LearnerKind;
use crate::rng::derive_seed;
use crate::stream::{read_regression_csv, read_yahoo_csv, DriftStreamSpec, Instance};

use super::config::{AlgorithmKind, ExperimentConfig, StreamSource};
use super::prequential::PrequentialWindow;
use super::report::{emit_csv, write_drift_log, DriftRecord, ResultRow};

const ALGORITHM_SEED_TAG: u64 = 0xA1_6000;

/// A configured algorithm ready to consume a stream.
#[derive(Debug)]
pub enum Model {
    Sfnr(Box<Sfnr>),
    AddExp(AddExp),
    Single(SingleLearner),
}

impl Model {
    pub fn build(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let learner = match cfg.algorithm {
            AlgorithmKind::Ema => match cfg.learner {
                LearnerKind::Ema { .. } => cfg.learner,
                _ => LearnerKind::Ema { window: 5 },
            },
            _ => cfg.learner,
        };
        let prototype = learner.build()?;
        let alg_seed = derive_seed(seed, ALGORITHM_SEED_TAG);
        Ok(match cfg.algorithm {
            AlgorithmKind::SfnrPeriod | AlgorithmKind::SfnrAdwin => {
                let mut sfnr_cfg = cfg.sfnr.clone();
                let mut synced = cfg.clone();
                synced.sync_modes();
                sfnr_cfg.mode = synced.sfnr.mode;
                sfnr_cfg.error_scale = synced.sfnr.error_scale;
                Model::Sfnr(Box::new(Sfnr::new(sfnr_cfg, prototype, alg_seed)?))
            }
            AlgorithmKind::AddExp => {
                let mut a = cfg.addexp;
                a.error_scale = cfg.error_scale_mode();
                Model::AddExp(AddExp::new(a, prototype)?)
            }
            AlgorithmKind::SingleLearner | AlgorithmKind::Ema => Model::Single(SingleLearner::new(prototype)),
        })
    }

    fn learner(&mut self) -> &mut dyn StreamLearner {
        match self {
            Model::Sfnr(s) => s.as_mut(),
            Model::AddExp(a) => a,
            Model::Single(s) => s,
        }
    }
}

impl StreamLearner for Model {
    fn process(&mut self, instance: &Instance) -> Result<f64> {
        self.learner().process(instance)
    }

    fn size(&self) -> usize {
        match self {
            Model::Sfnr(s) => s.size(),
            Model::AddExp(a) => a.size(),
            Model::Single(s) => s.size(),
        }
    }

    fn adaptations(&self) -> usize {
        match self {
            Model::Sfnr(s) => s.adaptations(),
            Model::AddExp(a) => a.adaptations(),
            Model::Single(s) => s.adaptations(),
        }
    }
}

/// Labelling and reporting settings for one prequential pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub label: String,
    pub seed: u64,
    pub window_size: usize,
    pub report_every: u64,
    pub timing: bool,
}

impl RunOptions {
    pub fn for_seed(cfg: &ExperimentConfig, seed: u64) -> Self {
        Self {
            label: cfg.label(),
            seed,
            window_size: cfg.window_size,
            report_every: cfg.report_every,
            timing: cfg.timing,
        }
    }
}

/// Runs test-then-train over `instances`, reporting every `report_every`
/// instances and after the last one. `on_step` sees the learner after each
/// instance.
pub fn prequential_run<L, I, F>(
    learner: &mut L,
    instances: I,
    opts: &RunOptions,
    mut on_step: F,
) -> Result<Vec<ResultRow>>
where
    L: StreamLearner + ?Sized,
    I: IntoIterator<Item = Instance>,
    F: FnMut(&L, &Instance) -> Result<()>,
{
    let RunOptions {
        label,
        seed,
        window_size,
        report_every,
        timing,
    } = opts;
    let (seed, report_every, timing) = (*seed, *report_every, *timing);
    if report_every == 0 {
        return Err(Error::InvalidArgument("report_every must be positive".into()));
    }
    let start = Instant::now();
    let mut window = PrequentialWindow::new(*window_size);
    let mut rows = Vec::new();
    let mut processed = 0u64;
    let mut last_reported = 0u64;
    let mut rmse = 0.0;
    for instance in instances {
        let prediction = learner.process(&instance)?;
        if !prediction.is_finite() {
            return Err(Error::NonFinite {
                algorithm: label.to_string(),
                index: instance.index,
            });
        }
        rmse = window.update(prediction, instance.y);
        processed += 1;
        on_step(learner, &instance)?;
        if processed.is_multiple_of(report_every) {
            rows.push(make_row(label, seed, processed, rmse, learner, timing, start));
            last_reported = processed;
        }
    }
    if processed > last_reported {
        rows.push(make_row(label, seed, processed, rmse, learner, timing, start));
    }
    Ok(rows)
}

fn make_row<L: StreamLearner + ?Sized>(
    label: &str,
    seed: u64,
    processed: u64,
    rmse: f64,
    learner: &L,
    timing: bool,
    start: Instant,
) -> ResultRow {
    ResultRow {
        algorithm: label.to_string(),
        seed,
        instance_index: processed,
        windowed_rmse: rmse,
        network_size: learner.size(),
        cumulative_drifts: learner.adaptations(),
        elapsed_ns: if timing { start.elapsed().as_nanos() as u64 } else { 0 },
    }
}

/// Rows and drift records of a whole experiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub drifts: Vec<DriftRecord>,
}

enum Data {
    Synthetic,
    Loaded(Vec<Instance>),
}

fn load(cfg: &ExperimentConfig) -> Result<Data> {
    match &cfg.stream {
        StreamSource::Synthetic { .. } => Ok(Data::Synthetic),
        StreamSource::Csv { path, target } => Ok(Data::Loaded(read_regression_csv(path, target)?)),
        StreamSource::Yahoo { path } => Ok(Data::Loaded(read_yahoo_csv(path)?)),
    }
}

fn synthetic_spec(cfg: &ExperimentConfig, seed: u64) -> Result<DriftStreamSpec> {
    match &cfg.stream {
        StreamSource::Synthetic {
            dims,
            length,
            drifts,
            target,
        } => DriftStreamSpec::rotating(seed, *dims, *length, drifts, *target),
        _ => Err(Error::Config("not a synthetic stream".into())),
    }
}

fn run_seed(cfg: &ExperimentConfig, data: &Data, seed: u64) -> Result<ExperimentOutput> {
    let opts = RunOptions::for_seed(cfg, seed);
    let label = opts.label.clone();
    let mut model = Model::build(cfg, seed)?;
    let mut drifts = Vec::new();
    let mut seen_events = 0usize;
    let mut on_step = |m: &Model, inst: &Instance| -> Result<()> {
        let Model::Sfnr(s) = m else { return Ok(()) };
        let log = s.drift_log();
        if log.len() == seen_events {
            return Ok(());
        }
        for event in &log[seen_events..] {
            drifts.push(DriftRecord {
                algorithm: label.clone(),
                seed,
                instance_index: event.index,
            });
        }
        seen_events = log.len();
        if let Some(dir) = &cfg.snapshot_dir {
            snapshot(s, dir, &label, seed, inst.index)?;
        }
        Ok(())
    };
    let rows = match data {
        Data::Synthetic => {
            let stream = synthetic_spec(cfg, seed)?.stream()?;
            prequential_run(&mut model, stream, &opts, &mut on_step)?
        }
        Data::Loaded(instances) => prequential_run(&mut model, instances.iter().cloned(), &opts, &mut on_step)?,
    };
    Ok(ExperimentOutput { rows, drifts })
}

fn snapshot(s: &Sfnr, dir: &std::path::Path, label: &str, seed: u64, index: u64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!("{label}-seed{seed}-at{index}");
    let edges = dir.join(format!("{stem}.edges"));
    let nodes = dir.join(format!("{stem}.nodes.csv"));
    let f = File::create(&edges).map_err(|e| Error::io(&edges, e))?;
    s.network().write_edge_list(BufWriter::new(f)).map_err(|e| Error::io(&edges, e))?;
    let f = File::create(&nodes).map_err(|e| Error::io(&nodes, e))?;
    s.network().write_node_table(BufWriter::new(f)).map_err(|e| Error::io(&nodes, e))?;
    Ok(())
}

/// Runs every seed and returns rows ordered by `(seed, instance_index)`.
/// Output does not depend on whether seeds run in parallel.
pub fn run_experiment_detailed(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let data = load(cfg)?;
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let per_seed: Vec<ExperimentOutput> = if cfg.parallel {
        seeds.par_iter().map(|&s| run_seed(cfg, &data, s)).collect::<Result<_>>()?
    } else {
        seeds.iter().map(|&s| run_seed(cfg, &data, s)).collect::<Result<_>>()?
    };
    let mut out = ExperimentOutput::default();
    for run in per_seed {
        out.rows.extend(run.rows);
        out.drifts.extend(run.drifts);
    }
    if let Some(path) = &cfg.out {
        emit_csv(&out.rows, path)?;
    }
    if let Some(path) = &cfg.drift_log {
        write_drift_log(&out.drifts, path)?;
    }
    Ok(out)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    Ok(run_experiment_detailed(cfg)?.rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(alg: &str) -> ExperimentConfig {
        ExperimentConfig::from_text(&format!(
            "algorithm = {alg}\nlength = 3000\ndrift_times = 1500\nseeds = 0..3\nreport_every = 1000\nwindow_size = 500\n"
        ))
        .unwrap()
    }

    #[test]
    fn row_indices_are_report_multiples() {
        let mut cfg = small("sfnr_adwin");
        cfg.report_every = 700;
        let rows = run_experiment(&cfg).unwrap();
        let idx: Vec<u64> = rows.iter().filter(|r| r.seed == 0).map(|r| r.instance_index).collect();
        assert_eq!(idx, vec![700, 1400, 2100, 2800, 3000]);
    }

    #[test]
    fn every_algorithm_runs() {
        for alg in AlgorithmKind::ALL {
            let rows = run_experiment(&small(alg.as_str())).unwrap();
            assert_eq!(rows.len(), 9, "{alg}");
            assert!(rows.iter().all(|r| r.windowed_rmse.is_finite() && r.algorithm == alg.as_str()));
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = small("sfnr_period");
        cfg.theta = 0.0;
        cfg.sync_modes();
        let par = run_experiment_detailed(&cfg).unwrap();
        cfg.parallel = false;
        let ser = run_experiment_detailed(&cfg).unwrap();
        assert_eq!(par, ser);
        assert!(!par.drifts.is_empty());
    }

    #[test]
    fn missing_dataset_fails_before_processing() {
        let cfg = ExperimentConfig::from_text("stream = csv\npath = /nonexistent/file.csv\n").unwrap();
        assert!(matches!(run_experiment(&cfg), Err(Error::Io { .. })));
    }
}
