//! Adaptive windowing change detector over a stream of values in `[0, 1]`.
//!
//! The detector stores its window explicitly (no exponential histogram) up
//! to `capacity` values. Every `check_interval` additions it scans every
//! split `W = W0 · W1` and, while some split has sub-window means further
//! apart than [`epsilon_cut`], drops the oldest value and scans again.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_CAPACITY: usize = 5_000;
pub const DEFAULT_CHECK_INTERVAL: usize = 32;

/// Cut threshold for a split of sizes `n0` and `n1` of a window of `n`
/// values: `sqrt(ln(4n / delta) / (2m))` with `m = 1 / (1/n0 + 1/n1)`.
pub fn epsilon_cut(n0: usize, n1: usize, n: usize, delta: f64) -> Result<f64> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::InvalidArgument(format!(
            "sub-window sizes must be positive, got {n0} and {n1}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(epsilon_cut_unchecked(n0, n1, n, delta))
}

#[inline]
fn epsilon_cut_unchecked(n0: usize, n1: usize, n: usize, delta: f64) -> f64 {
    let m = 1.0 / (1.0 / n0 as f64 + 1.0 / n1 as f64);
    let delta_prime = delta / n as f64;
    ((4.0 / delta_prime).ln() / (2.0 * m)).sqrt()
}

/// Width of the window just before and just after a detected cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowCut {
    pub width_before: usize,
    pub width_after: usize,
}

#[derive(Debug, Clone)]
pub struct Adwin {
    values: VecDeque<f64>,
    // prefix[i] = origin + values[0] + ... + values[i]
    prefix: VecDeque<f64>,
    origin: f64,
    delta: f64,
    capacity: usize,
    check_interval: usize,
    since_check: usize,
    n_detections: u64,
    n_clamped: u64,
    last_cut: Option<WindowCut>,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(DEFAULT_DELTA).expect("default delta is valid")
    }
}

impl Adwin {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_params(delta, DEFAULT_CAPACITY, DEFAULT_CHECK_INTERVAL)
    }

    pub fn with_params(delta: f64, capacity: usize, check_interval: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
        }
        if capacity == 0 || check_interval == 0 {
            return Err(Error::InvalidArgument(
                "capacity and check interval must be positive".into(),
            ));
        }
        Ok(Self {
            values: VecDeque::with_capacity(capacity.min(1 << 16) + 1),
            prefix: VecDeque::with_capacity(capacity.min(1 << 16) + 1),
            origin: 0.0,
            delta,
            capacity,
            check_interval,
            since_check: 0,
            n_detections: 0,
            n_clamped: 0,
            last_cut: None,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn check_interval(&self) -> usize {
        self.check_interval
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }

    pub fn n_detections(&self) -> u64 {
        self.n_detections
    }

    /// Number of inputs that fell outside `[0, 1]` and were clamped.
    pub fn n_clamped(&self) -> u64 {
        self.n_clamped
    }

    /// The cut made by the most recent call to [`Adwin::add`], if any.
    pub fn last_cut(&self) -> Option<WindowCut> {
        self.last_cut
    }

    /// Retained window, oldest first.
    pub fn window(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }

    pub fn mean(&self) -> Result<f64> {
        if self.values.is_empty() {
            return Err(Error::InvalidArgument("mean of an empty window".into()));
        }
        Ok(self.segment_sum(0, self.values.len()) / self.values.len() as f64)
    }

    /// Adds a value and returns whether the split test dropped anything.
    pub fn add(&mut self, value: f64) -> bool {
        self.last_cut = None;
        if value.is_nan() {
            log::warn!("adwin: ignoring NaN input");
            return false;
        }
        let value = if (0.0..=1.0).contains(&value) {
            value
        } else {
            self.n_clamped += 1;
            log::debug!("adwin: clamping {value} into [0, 1]");
            value.clamp(0.0, 1.0)
        };

        let last = self.prefix.back().copied().unwrap_or(self.origin);
        self.values.push_back(value);
        self.prefix.push_back(last + value);
        if self.values.len() > self.capacity {
            self.pop_oldest();
        }

        self.since_check += 1;
        if self.since_check < self.check_interval {
            return false;
        }
        self.since_check = 0;

        let width_before = self.values.len();
        while self.has_violating_split() {
            self.pop_oldest();
        }
        let width_after = self.values.len();
        if width_after < width_before {
            self.n_detections += 1;
            self.last_cut = Some(WindowCut {
                width_before,
                width_after,
            });
            true
        } else {
            false
        }
    }

    fn pop_oldest(&mut self) {
        self.values.pop_front();
        if let Some(p) = self.prefix.pop_front() {
            self.origin = p;
        }
        if self.origin > self.capacity as f64 {
            self.rebuild_prefix();
        }
    }

    fn rebuild_prefix(&mut self) {
        self.origin = 0.0;
        let mut acc = 0.0;
        for (p, v) in self.prefix.iter_mut().zip(&self.values) {
            acc += v;
            *p = acc;
        }
    }

    #[inline]
    fn cumulative(&self, k: usize) -> f64 {
        if k == 0 {
            self.origin
        } else {
            self.prefix[k - 1]
        }
    }

    /// Sum of `values[a..b]`.
    #[inline]
    fn segment_sum(&self, a: usize, b: usize) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    fn has_violating_split(&self) -> bool {
        let n = self.values.len();
        if n < 2 {
            return false;
        }
        let end = self.cumulative(n);
        let start = self.cumulative(0);
        // W1 grows from the newest element backwards.
        for n1 in 1..n {
            let n0 = n - n1;
            let split = self.cumulative(n0);
            let mean0 = (split - start) / n0 as f64;
            let mean1 = (end - split) / n1 as f64;
            if (mean0 - mean1).abs() >= epsilon_cut_unchecked(n0, n1, n, self.delta) {
                return true;
            }
        }
        false
    }

    /// Largest gap between the stored prefix sums and a fresh recomputation.
    pub fn prefix_error(&self) -> f64 {
        let mut acc = self.origin;
        self.values
            .iter()
            .zip(&self.prefix)
            .map(|(v, p)| {
                acc += v;
                (acc - p).abs()
            })
            .fold(0.0, f64::max)
    }
}
