use std::path::PathBuf;
use std::str::FromStr;
use std::{fmt, fs};

use crate::adwin;
use crate::ensemble::{AddExpConfig, DetectionMode, ErrorScaleMode, SfnrConfig};
use crate::error::{Error, Result};
use crate::learners::{LearnerKind, DEFAULT_LEARNING_RATE};
use crate::stream::{TargetColumn, TargetMode};

use super::prequential::DEFAULT_WINDOW;

/// Every key accepted in a configuration file.
pub const CONFIG_KEYS: &[&str] = &[
    "preset",
    "full",
    "stream",
    "path",
    "target",
    "dims",
    "length",
    "drift_times",
    "drift_widths",
    "target_mode",
    "algorithm",
    "learner",
    "learning_rate",
    "ema_window",
    "metric",
    "kmax",
    "edges_per_node",
    "period",
    "theta",
    "delta",
    "check_interval",
    "adwin_capacity",
    "buffer_size",
    "error_window",
    "error_scale",
    "warmup",
    "beta",
    "gamma",
    "tau",
    "addexp_k",
    "seeds",
    "seed",
    "report_every",
    "window_size",
    "out",
    "drift_log",
    "snapshot_dir",
    "parallel",
    "timing",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    SfnrPeriod,
    SfnrAdwin,
    AddExp,
    SingleLearner,
    /// A lone EMA forecaster, the usual price baseline.
    Ema,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::SfnrPeriod,
        AlgorithmKind::SfnrAdwin,
        AlgorithmKind::AddExp,
        AlgorithmKind::SingleLearner,
        AlgorithmKind::Ema,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::SfnrPeriod => "sfnr_period",
            AlgorithmKind::SfnrAdwin => "sfnr_adwin",
            AlgorithmKind::AddExp => "addexp",
            AlgorithmKind::SingleLearner => "single_learner",
            AlgorithmKind::Ema => "ema",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    /// Rotating-hyperplane stream; one `(t0, W)` pair per drift.
    Synthetic {
        dims: usize,
        length: u64,
        drifts: Vec<(u64, u64)>,
        target: TargetMode,
    },
    /// Generic numeric CSV with one target column.
    Csv { path: PathBuf, target: TargetColumn },
    /// Yahoo Finance daily price export.
    Yahoo { path: PathBuf },
}

/// A named starting point for a configuration.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// `(t0, W)` at full scale; empty for dataset presets.
    pub drifts: &'static [(u64, u64)],
    pub full_length: u64,
    pub desk_length: u64,
}

const FULL_LENGTH: u64 = 1_000_000;
const DESK_LENGTH: u64 = 100_000;

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "rhpr-1",
        description: "rotating hyperplane, one abrupt drift",
        drifts: &[(500_000, 1)],
        full_length: FULL_LENGTH,
        desk_length: DESK_LENGTH,
    },
    Preset {
        name: "rhpr-2",
        description: "rotating hyperplane, one gradual drift",
        drifts: &[(500_000, 1_000)],
        full_length: FULL_LENGTH,
        desk_length: DESK_LENGTH,
    },
    Preset {
        name: "rhpr-3",
        description: "rotating hyperplane, two abrupt drifts",
        drifts: &[(333_333, 1), (750_000, 1)],
        full_length: FULL_LENGTH,
        desk_length: DESK_LENGTH,
    },
    Preset {
        name: "rhpr-4",
        description: "rotating hyperplane, two gradual drifts",
        drifts: &[(333_333, 1_000), (750_000, 1_000)],
        full_length: FULL_LENGTH,
        desk_length: DESK_LENGTH,
    },
    Preset {
        name: "wine",
        description: "wine quality CSV (set path), linear learners",
        drifts: &[],
        full_length: 0,
        desk_length: 0,
    },
    Preset {
        name: "stock",
        description: "Yahoo daily prices (set path), EMA(5) learners",
        drifts: &[],
        full_length: 0,
        desk_length: 0,
    },
];

impl Preset {
    pub fn find(name: &str) -> Result<&'static Preset> {
        let name = name.trim().to_ascii_lowercase();
        PRESETS
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))
    }

    pub fn is_synthetic(&self) -> bool {
        !self.drifts.is_empty()
    }

    /// Drift positions scaled to `length`, widths unchanged.
    pub fn drifts_for(&self, length: u64) -> Vec<(u64, u64)> {
        if length == self.full_length {
            return self.drifts.to_vec();
        }
        // Desk scale places the drifts at the same proportional positions,
        // rounded to whole instances.
        self.drifts
            .iter()
            .map(|&(t0, w)| {
                let scaled = (t0 as f64 * length as f64 / self.full_length as f64).round() as u64;
                (scaled, w)
            })
            .collect()
    }

    pub fn summary_line(&self) -> String {
        if !self.is_synthetic() {
            return format!("{:<8} {}", self.name, self.description);
        }
        let fmt_drifts = |d: &[(u64, u64)]| {
            d.iter()
                .map(|(t0, w)| format!("t0={t0} W={w}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "{:<8} {}; length={} {} (desk: length={} {})",
            self.name,
            self.description,
            self.full_length,
            fmt_drifts(self.drifts),
            self.desk_length,
            fmt_drifts(&self.drifts_for(self.desk_length)),
        )
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub stream: StreamSource,
    pub algorithm: AlgorithmKind,
    pub learner: LearnerKind,
    pub sfnr: SfnrConfig,
    pub period: u64,
    pub theta: f64,
    pub delta: f64,
    pub check_interval: usize,
    pub adwin_capacity: usize,
    pub addexp: AddExpConfig,
    /// `None` picks a scale from the stream: the known target bound for
    /// synthetic streams, the observed range otherwise.
    pub error_scale: Option<f64>,
    pub warmup: u64,
    pub seeds: Vec<u64>,
    pub report_every: u64,
    pub window_size: usize,
    pub out: Option<PathBuf>,
    pub drift_log: Option<PathBuf>,
    pub snapshot_dir: Option<PathBuf>,
    pub parallel: bool,
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let rhpr1 = &PRESETS[0];
        Self {
            stream: StreamSource::Synthetic {
                dims: 10,
                length: DESK_LENGTH,
                drifts: rhpr1.drifts_for(DESK_LENGTH),
                target: TargetMode::default(),
            },
            algorithm: AlgorithmKind::SfnrAdwin,
            learner: LearnerKind::Linear {
                learning_rate: DEFAULT_LEARNING_RATE,
            },
            sfnr: SfnrConfig::default(),
            period: 1_000,
            theta: 0.08,
            delta: adwin::DEFAULT_DELTA,
            check_interval: adwin::DEFAULT_CHECK_INTERVAL,
            adwin_capacity: adwin::DEFAULT_CAPACITY,
            addexp: AddExpConfig::default(),
            error_scale: None,
            warmup: 500,
            seeds: vec![0],
            report_every: 1_000,
            window_size: DEFAULT_WINDOW,
            out: None,
            drift_log: None,
            snapshot_dir: None,
            parallel: true,
            timing: false,
        }
    }
}

/// Splits `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .replace('_', "")
        .parse::<T>()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// Seeds as a comma list, with `a..b` (exclusive) ranges allowed.
fn seeds(value: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (num("seeds", a)?, num("seeds", b)?);
            out.extend(a..b);
        } else {
            out.push(num("seeds", part)?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("seeds: empty list".into()));
    }
    Ok(out)
}

/// Intermediate stream settings, resolved once all keys are seen.
#[derive(Debug, Default)]
struct StreamDraft {
    kind: Option<String>,
    path: Option<PathBuf>,
    target: Option<String>,
    dims: Option<usize>,
    length: Option<u64>,
    drift_times: Option<Vec<u64>>,
    drift_widths: Option<Vec<u64>>,
    target_mode: Option<TargetMode>,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_pairs(&parse_config_text(&text)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_config_text(text)?)
    }

    /// Builds a configuration from ordered pairs. `preset` and `full` are
    /// applied first wherever they appear; later keys override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        for (k, _) in pairs {
            if !CONFIG_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown key {k:?}")));
            }
        }
        let last = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let full = last("full").map(|v| boolean("full", v)).transpose()?.unwrap_or(false);
        let preset = Preset::find(last("preset").unwrap_or("rhpr-1"))?;

        let mut cfg = ExperimentConfig::default();
        let mut draft = StreamDraft::default();
        let mut ema_window: Option<usize> = None;
        let mut learning_rate: Option<f64> = None;
        let mut learner_name: Option<String> = None;
        let mut window_size: Option<usize> = None;
        let mut report_every: Option<u64> = None;

        match preset.name {
            "wine" => {
                draft.kind = Some("csv".into());
                draft.target = Some("quality".into());
            }
            "stock" => {
                draft.kind = Some("yahoo".into());
                learner_name = Some("ema".into());
                ema_window = Some(5);
            }
            _ => {
                let length = if full { preset.full_length } else { preset.desk_length };
                let drifts = preset.drifts_for(length);
                draft.kind = Some("synthetic".into());
                draft.length = Some(length);
                draft.drift_times = Some(drifts.iter().map(|d| d.0).collect());
                draft.drift_widths = Some(drifts.iter().map(|d| d.1).collect());
                if full {
                    window_size = Some(100_000);
                    report_every = Some(10_000);
                }
            }
        }

        // Explicit drift times without explicit widths mean abrupt drifts,
        // not the preset's widths.
        if last("drift_times").is_some() && last("drift_widths").is_none() {
            draft.drift_widths = None;
        }
        for (key, value) in pairs {
            let v = value.as_str();
            match key.as_str() {
                "preset" | "full" => {}
                "stream" => draft.kind = Some(v.to_ascii_lowercase()),
                "path" => draft.path = Some(PathBuf::from(v)),
                "target" => draft.target = Some(v.to_string()),
                "dims" => draft.dims = Some(num(key, v)?),
                "length" => draft.length = Some(num(key, v)?),
                "drift_times" => draft.drift_times = Some(list(key, v)?),
                "drift_widths" => draft.drift_widths = Some(list(key, v)?),
                "target_mode" => draft.target_mode = Some(v.parse()?),
                "algorithm" => cfg.algorithm = v.parse()?,
                "learner" => learner_name = Some(v.to_string()),
                "learning_rate" => learning_rate = Some(num(key, v)?),
                "ema_window" => ema_window = Some(num(key, v)?),
                "metric" => cfg.sfnr.metric = v.parse()?,
                "kmax" => cfg.sfnr.k_max = num(key, v)?,
                "edges_per_node" => cfg.sfnr.edges_per_node = num(key, v)?,
                "period" => cfg.period = num(key, v)?,
                "theta" => cfg.theta = num(key, v)?,
                "delta" => cfg.delta = num(key, v)?,
                "check_interval" => cfg.check_interval = num(key, v)?,
                "adwin_capacity" => cfg.adwin_capacity = num(key, v)?,
                "buffer_size" => cfg.sfnr.buffer_size = num(key, v)?,
                "error_window" => cfg.sfnr.error_window = num(key, v)?,
                "error_scale" => {
                    cfg.error_scale = if v.eq_ignore_ascii_case("auto") {
                        None
                    } else {
                        Some(num(key, v)?)
                    }
                }
                "warmup" => cfg.warmup = num(key, v)?,
                "beta" => cfg.addexp.beta = num(key, v)?,
                "gamma" => cfg.addexp.gamma = num(key, v)?,
                "tau" => cfg.addexp.tau = num(key, v)?,
                "addexp_k" => cfg.addexp.max_experts = num(key, v)?,
                "seeds" => cfg.seeds = seeds(v)?,
                "seed" => cfg.seeds = vec![num(key, v)?],
                "report_every" => report_every = Some(num(key, v)?),
                "window_size" => window_size = Some(num(key, v)?),
                "out" => cfg.out = Some(PathBuf::from(v)),
                "drift_log" => cfg.drift_log = Some(PathBuf::from(v)),
                "snapshot_dir" => cfg.snapshot_dir = Some(PathBuf::from(v)),
                "parallel" => cfg.parallel = boolean(key, v)?,
                "timing" => cfg.timing = boolean(key, v)?,
                _ => unreachable!("keys checked above"),
            }
        }

        cfg.learner = match learner_name.as_deref().unwrap_or("linear").parse()? {
            LearnerKind::Linear { learning_rate: lr } => LearnerKind::Linear {
                learning_rate: learning_rate.unwrap_or(lr),
            },
            LearnerKind::Ema { window } => LearnerKind::Ema {
                window: ema_window.unwrap_or(window),
            },
            LearnerKind::Mean => LearnerKind::Mean,
        };
        if let Some(w) = window_size {
            cfg.window_size = w;
        }
        if let Some(r) = report_every {
            cfg.report_every = r;
        }
        cfg.stream = draft.resolve()?;
        cfg.sync_modes();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Pushes the flat detector and scale settings into the nested configs.
    pub fn sync_modes(&mut self) {
        self.sfnr.mode = match self.algorithm {
            AlgorithmKind::SfnrPeriod => DetectionMode::Period {
                period: self.period,
                threshold: self.theta,
            },
            _ => DetectionMode::Adwin {
                delta: self.delta,
                check_interval: self.check_interval,
                capacity: self.adwin_capacity,
            },
        };
        let scale = self.error_scale_mode();
        self.sfnr.error_scale = scale;
        self.addexp.error_scale = scale;
    }

    pub fn error_scale_mode(&self) -> ErrorScaleMode {
        match (self.error_scale, &self.stream) {
            (Some(r), _) => ErrorScaleMode::Fixed(r),
            (None, StreamSource::Synthetic { dims, .. }) => ErrorScaleMode::Fixed((*dims as f64).sqrt() / 2.0),
            (None, _) => ErrorScaleMode::RunningRange { warmup: self.warmup },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.report_every == 0 {
            return Err(Error::Config("report_every must be positive".into()));
        }
        if self.window_size == 0 {
            return Err(Error::Config("window_size must be positive".into()));
        }
        if self.period == 0 {
            return Err(Error::Config("period must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(r) = self.error_scale {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config(format!("error_scale must be positive, got {r}")));
            }
        }
        if let LearnerKind::Linear { learning_rate } = self.learner {
            if !(learning_rate.is_finite() && learning_rate > 0.0) {
                return Err(Error::Config(format!("learning_rate must be positive, got {learning_rate}")));
            }
        }
        if let LearnerKind::Ema { window } = self.learner {
            if window == 0 {
                return Err(Error::Config("ema_window must be positive".into()));
            }
        }
        self.sfnr.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.addexp.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Label written in result rows.
    pub fn label(&self) -> String {
        self.algorithm.to_string()
    }
}

impl StreamDraft {
    fn resolve(self) -> Result<StreamSource> {
        match self.kind.as_deref().unwrap_or("synthetic") {
            "synthetic" => {
                let times = self.drift_times.unwrap_or_default();
                let widths = match self.drift_widths {
                    Some(w) => w,
                    None => vec![1; times.len()],
                };
                if widths.len() != times.len() {
                    return Err(Error::Config(format!(
                        "drift_times has {} entries but drift_widths has {}",
                        times.len(),
                        widths.len()
                    )));
                }
                Ok(StreamSource::Synthetic {
                    dims: self.dims.unwrap_or(10),
                    length: self.length.unwrap_or(DESK_LENGTH),
                    drifts: times.into_iter().zip(widths).collect(),
                    target: self.target_mode.unwrap_or_default(),
                })
            }
            "csv" => Ok(StreamSource::Csv {
                path: self.path.ok_or_else(|| Error::Config("stream = csv needs path".into()))?,
                target: TargetColumn::parse(self.target.as_deref().unwrap_or("quality")),
            }),
            "yahoo" => Ok(StreamSource::Yahoo {
                path: self.path.ok_or_else(|| Error::Config("stream = yahoo needs path".into()))?,
            }),
            other => Err(Error::Config(format!("unknown stream {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Centrality;

    #[test]
    fn defaults_are_desk_rhpr1() {
        let cfg = ExperimentConfig::from_text("").unwrap();
        assert_eq!(
            cfg.stream,
            StreamSource::Synthetic {
                dims: 10,
                length: 100_000,
                drifts: vec![(50_000, 1)],
                target: TargetMode::Unsigned
            }
        );
        assert_eq!(cfg.window_size, 10_000);
        assert_eq!(cfg.sfnr.k_max, 10);
        assert_eq!(cfg.sfnr.metric, Centrality::Eigenvector);
        assert_eq!(cfg.error_scale_mode(), ErrorScaleMode::Fixed(10f64.sqrt() / 2.0));
    }

    #[test]
    fn desk_positions_for_two_drifts() {
        let p = Preset::find("rhpr-3").unwrap();
        assert_eq!(p.drifts_for(100_000), vec![(33_333, 1), (75_000, 1)]);
        assert_eq!(p.drifts_for(1_000_000), vec![(333_333, 1), (750_000, 1)]);
    }

    #[test]
    fn full_scale() {
        let cfg = ExperimentConfig::from_text("preset = rhpr-2\nfull = true\n").unwrap();
        match cfg.stream {
            StreamSource::Synthetic { length, drifts, .. } => {
                assert_eq!(length, 1_000_000);
                assert_eq!(drifts, vec![(500_000, 1_000)]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.window_size, 100_000);
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# experiment\nalgorithm = sfnr_period  # period mode\nperiod = 500\ntheta=0.2\nseeds = 0..3, 10\nlength = 2_000\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.algorithm, AlgorithmKind::SfnrPeriod);
        assert_eq!(
            cfg.sfnr.mode,
            DetectionMode::Period {
                period: 500,
                threshold: 0.2
            }
        );
        assert_eq!(cfg.seeds, vec![0, 1, 2, 10]);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::from_text("kmaxx = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("kmaxx")));
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(matches!(parse_config_text("a = 1\njunk\n"), Err(Error::Config(m)) if m.contains("line 2")));
    }

    #[test]
    fn stock_preset_uses_ema() {
        let cfg = ExperimentConfig::from_text("preset = stock\npath = prices.csv\n").unwrap();
        assert_eq!(cfg.learner, LearnerKind::Ema { window: 5 });
        assert!(matches!(cfg.stream, StreamSource::Yahoo { .. }));
        assert!(matches!(cfg.error_scale_mode(), ErrorScaleMode::RunningRange { warmup: 500 }));
    }

    #[test]
    fn dataset_preset_needs_path() {
        assert!(ExperimentConfig::from_text("preset = wine\n").is_err());
    }

    #[test]
    fn mismatched_drift_lists() {
        assert!(ExperimentConfig::from_text("drift_times = 10, 20\ndrift_widths = 1\n").is_err());
    }

    #[test]
    fn preset_listing_mentions_full_scale_drift() {
        let line = Preset::find("rhpr-1").unwrap().summary_line();
        assert!(line.contains("t0=500000 W=1"), "{line}");
    }
}
