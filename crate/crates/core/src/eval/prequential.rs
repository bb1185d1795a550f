use std::collections::VecDeque;

pub const DEFAULT_WINDOW: usize = 10_000;

/// Sliding window of squared errors yielding a windowed RMSE.
#[derive(Debug, Clone)]
pub struct PrequentialWindow {
    squared_errors: VecDeque<f64>,
    window_size: usize,
    sum: f64,
    pushes_since_resync: usize,
}

impl Default for PrequentialWindow {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW)
    }
}

impl PrequentialWindow {
    /// `window_size` is clamped to at least 1.
    pub fn new(window_size: usize) -> Self {
        let window_size = window_size.max(1);
        Self {
            squared_errors: VecDeque::with_capacity(window_size.min(1 << 20)),
            window_size,
            sum: 0.0,
            pushes_since_resync: 0,
        }
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn len(&self) -> usize {
        self.squared_errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squared_errors.is_empty()
    }

    /// Records one test-then-train outcome and returns the windowed RMSE.
    pub fn update(&mut self, prediction: f64, truth: f64) -> f64 {
        let e = prediction - truth;
        let sq = e * e;
        self.squared_errors.push_back(sq);
        self.sum += sq;
        if self.squared_errors.len() > self.window_size {
            if let Some(old) = self.squared_errors.pop_front() {
                self.sum -= old;
            }
        }
        // Re-sum once per window length to cancel drift from the running
        // add/subtract.
        self.pushes_since_resync += 1;
        if self.pushes_since_resync >= self.window_size {
            self.sum = self.squared_errors.iter().sum();
            self.pushes_since_resync = 0;
        }
        self.rmse()
    }

    pub fn rmse(&self) -> f64 {
        if self.squared_errors.is_empty() {
            return 0.0;
        }
        (self.sum.max(0.0) / self.squared_errors.len() as f64).sqrt()
    }

    /// RMSE summed from scratch over the retained errors.
    pub fn recomputed_rmse(&self) -> f64 {
        if self.squared_errors.is_empty() {
            return 0.0;
        }
        (self.squared_errors.iter().sum::<f64>() / self.squared_errors.len() as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_errors() {
        let mut w = PrequentialWindow::new(10);
        for _ in 0..3 {
            assert_eq!(w.update(1.0, 1.0), 0.0);
        }
    }

    #[test]
    fn two_errors() {
        let mut w = PrequentialWindow::new(10);
        w.update(1.0, 1.0);
        assert!((w.update(2.0, 4.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn eviction() {
        let mut w = PrequentialWindow::new(2);
        w.update(10.0, 0.0);
        w.update(1.0, 0.0);
        let r = w.update(1.0, 0.0);
        assert_eq!(r, 1.0);
        assert_eq!(w.len(), 2);
    }

    proptest! {
        #[test]
        fn running_matches_recomputation(
            errs in proptest::collection::vec(-1e3f64..1e3, 1..3_000),
            size in 1usize..500,
        ) {
            let mut w = PrequentialWindow::new(size);
            for e in errs {
                let r = w.update(e, 0.0);
                prop_assert!(r >= 0.0);
                let fresh = w.recomputed_rmse();
                prop_assert!((r - fresh).abs() <= 1e-9 * fresh.max(1.0));
                prop_assert!(w.len() <= size);
            }
        }
    }
}
