use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::stream::Instance;

/// A random hyperplane through `anchor` with unit normal `normal`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneConcept {
    pub normal: Vec<f64>,
    pub anchor: Vec<f64>,
    pub seed: u64,
}

/// Builds a concept whose normal is drawn componentwise from U[-1, 1] and
/// normalised. The plane passes through the centre of the unit cube.
pub fn make_hyperplane_concept(seed: u64, d: usize) -> Result<HyperplaneConcept> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "hyperplane dimension must be at least 2, got {d}"
        )));
    }
    let mut rng = rng::seeded(seed);
    loop {
        let raw: Vec<f64> = (0..d).map(|_| 2.0 * rng::unit(&mut rng) - 1.0).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        return Ok(HyperplaneConcept {
            normal: raw.into_iter().map(|v| v / norm).collect(),
            anchor: vec![0.5; d],
            seed,
        });
    }
}

impl HyperplaneConcept {
    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed distance `w · (x − c)`.
    pub fn signed_distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.signed_distance_unchecked(x))
    }

    /// Unsigned point-to-plane distance `|w · (x − c)|`.
    pub fn target(&self, x: &[f64]) -> Result<f64> {
        self.signed_distance(x).map(f64::abs)
    }

    fn signed_distance_unchecked(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(&self.anchor)
            .zip(x)
            .map(|((w, c), xi)| w * (xi - c))
            .sum()
    }
}

/// Probability that the post-drift concept is active at `t` for a drift
/// centred at `t0` with width `width`: `1 / (1 + exp(-4 (t - t0) / width))`.
pub fn sigmoid_mix_probability(t: i64, t0: i64, width: u64) -> f64 {
    let width = width.max(1) as f64;
    let z = -4.0 * (t - t0) as f64 / width;
    1.0 / (1.0 + z.exp())
}

/// Whether generated targets keep the sign of the distance to the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetMode {
    #[default]
    Unsigned,
    Signed,
}

impl FromStr for TargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unsigned" => Ok(TargetMode::Unsigned),
            "signed" => Ok(TargetMode::Signed),
            other => Err(Error::Config(format!(
                "unknown target mode {other:?} (expected unsigned or signed)"
            ))),
        }
    }
}

impl fmt::Display for TargetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetMode::Unsigned => "unsigned",
            TargetMode::Signed => "signed",
        })
    }
}

/// A sequence of hyperplane concepts joined by sigmoid drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftStreamSpec {
    pub concepts: Vec<HyperplaneConcept>,
    pub drift_times: Vec<u64>,
    pub drift_widths: Vec<u64>,
    pub length: u64,
    pub seed: u64,
    pub target: TargetMode,
}

impl DriftStreamSpec {
    /// Builds a spec whose concept seeds are derived from `seed`, one
    /// concept per drift plus the initial one.
    pub fn rotating(
        seed: u64,
        d: usize,
        length: u64,
        drifts: &[(u64, u64)],
        target: TargetMode,
    ) -> Result<Self> {
        let concepts = (0..=drifts.len() as u64)
            .map(|i| make_hyperplane_concept(rng::derive_seed(seed, 0xC0_0000 + i), d))
            .collect::<Result<Vec<_>>>()?;
        let spec = Self {
            concepts,
            drift_times: drifts.iter().map(|d| d.0).collect(),
            drift_widths: drifts.iter().map(|d| d.1).collect(),
            length,
            seed,
            target,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.concepts.first().map_or(0, HyperplaneConcept::dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.concepts.is_empty() {
            return Err(Error::InvalidArgument("stream needs at least one concept".into()));
        }
        let drifts = self.concepts.len() - 1;
        if self.drift_times.len() != drifts || self.drift_widths.len() != drifts {
            return Err(Error::InvalidArgument(format!(
                "{} concepts need {drifts} drift times and widths, got {} and {}",
                self.concepts.len(),
                self.drift_times.len(),
                self.drift_widths.len()
            )));
        }
        if self.drift_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "drift times must be strictly increasing".into(),
            ));
        }
        if self.drift_widths.contains(&0) {
            return Err(Error::InvalidArgument("drift widths must be at least 1".into()));
        }
        let d = self.dim();
        if d < 2 || self.concepts.iter().any(|c| c.dim() != d) {
            return Err(Error::InvalidArgument(
                "all concepts must share one dimension of at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Upper bound on `|y|`: half the unit-cube diagonal.
    pub fn target_bound(&self) -> f64 {
        (self.dim() as f64).sqrt() / 2.0
    }

    pub fn stream(&self) -> Result<DriftStream> {
        self.validate()?;
        Ok(DriftStream {
            spec: self.clone(),
            rng: rng::seeded(self.seed),
            t: 0,
        })
    }

    /// Picks the active concept at `t` by chaining one Bernoulli mixer per
    /// drift, newest drift outermost. Always consumes one draw per drift.
    pub fn choose_concept(&self, t: u64, rng: &mut StreamRng) -> usize {
        let draws: Vec<f64> = (0..self.drift_times.len())
            .map(|_| rng::unit(rng))
            .collect();
        for i in (0..self.drift_times.len()).rev() {
            let p = sigmoid_mix_probability(
                t as i64,
                self.drift_times[i] as i64,
                self.drift_widths[i],
            );
            if draws[i] < p {
                return i + 1;
            }
        }
        0
    }
}

/// Iterator over the instances described by a [`DriftStreamSpec`].
#[derive(Debug, Clone)]
pub struct DriftStream {
    spec: DriftStreamSpec,
    rng: StreamRng,
    t: u64,
}

impl DriftStream {
    pub fn spec(&self) -> &DriftStreamSpec {
        &self.spec
    }

    /// Like `next`, but also reports which concept produced the target.
    pub fn next_with_concept(&mut self) -> Option<(Instance, usize)> {
        if self.t >= self.spec.length {
            return None;
        }
        let d = self.spec.dim();
        let x: Vec<f64> = (0..d).map(|_| rng::unit(&mut self.rng)).collect();
        let active = self.spec.choose_concept(self.t, &mut self.rng);
        let signed = self.spec.concepts[active].signed_distance_unchecked(&x);
        let y = match self.spec.target {
            TargetMode::Unsigned => signed.abs(),
            TargetMode::Signed => signed,
        };
        let inst = Instance::new(x, y, self.t);
        self.t += 1;
        Some((inst, active))
    }
}

impl Iterator for DriftStream {
    type Item = Instance;

    fn next(&mut self) -> Option<Instance> {
        self.next_with_concept().map(|(inst, _)| inst)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.spec.length - self.t) as usize;
        (left, Some(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(normal: Vec<f64>) -> HyperplaneConcept {
        let d = normal.len();
        HyperplaneConcept {
            normal,
            anchor: vec![0.5; d],
            seed: 0,
        }
    }

    #[test]
    fn concept_is_deterministic() {
        let a = make_hyperplane_concept(7, 2).unwrap();
        let b = make_hyperplane_concept(7, 2).unwrap();
        let bits = |c: &HyperplaneConcept| c.normal.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a.normal, make_hyperplane_concept(8, 2).unwrap().normal);
    }

    #[test]
    fn concept_normal_is_unit() {
        let c = make_hyperplane_concept(7, 10).unwrap();
        let norm = c.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(c.anchor, vec![0.5; 10]);
    }

    #[test]
    fn concept_rejects_low_dimension() {
        assert!(make_hyperplane_concept(1, 1).is_err());
        assert!(make_hyperplane_concept(1, 0).is_err());
    }

    #[test]
    fn target_examples() {
        let c = plane(vec![1.0, 0.0]);
        assert_eq!(c.target(&[0.5, 0.5]).unwrap(), 0.0);
        assert!((c.target(&[0.8, 0.3]).unwrap() - 0.3).abs() < 1e-15);
        assert!((c.target(&[0.2, 0.9]).unwrap() - 0.3).abs() < 1e-15);
        assert!((c.signed_distance(&[0.2, 0.9]).unwrap() + 0.3).abs() < 1e-15);
        assert!(matches!(
            c.target(&[0.1, 0.2, 0.3]),
            Err(Error::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid_mix_probability(500, 500, 1), 0.5);
        assert_eq!(sigmoid_mix_probability(500, 500, 1000), 0.5);
        let expected = 1.0 / (1.0 + (-4.0f64).exp());
        for w in [1u64, 10, 1000] {
            let f = sigmoid_mix_probability(500 + w as i64, 500, w);
            assert!((f - expected).abs() < 1e-15);
            assert!((f - 0.98201).abs() < 1e-5);
        }
        assert!(sigmoid_mix_probability(500 - 10 * 1000, 500, 1000) < 1e-17);
    }

    #[test]
    fn no_drift_uses_first_concept() {
        let spec = DriftStreamSpec::rotating(3, 4, 500, &[], TargetMode::Unsigned).unwrap();
        for (inst, active) in std::iter::from_fn({
            let mut s = spec.stream().unwrap();
            move || s.next_with_concept()
        }) {
            assert_eq!(active, 0);
            assert_eq!(inst.y, spec.concepts[0].target(&inst.x).unwrap());
        }
    }

    #[test]
    fn abrupt_drift_switches_concept() {
        let t0 = 2_000;
        let spec =
            DriftStreamSpec::rotating(5, 3, 4_000, &[(t0, 1)], TargetMode::Unsigned).unwrap();
        let mut stream = spec.stream().unwrap();
        let mut post = 0;
        let mut total = 0;
        while let Some((inst, active)) = stream.next_with_concept() {
            if inst.index >= t0 + 10 && inst.index <= t0 + 1000 {
                total += 1;
                post += usize::from(active == 1);
            }
            if inst.index + 10 <= t0 {
                assert_eq!(active, 0);
            }
        }
        assert_eq!(post, total);
    }

    #[test]
    fn mixing_frequency_tracks_sigmoid() {
        let spec =
            DriftStreamSpec::rotating(9, 2, 10, &[(1_000, 400)], TargetMode::Unsigned).unwrap();
        let mut rng = rng::seeded(42);
        for t in [800u64, 950, 1_000, 1_100, 1_300] {
            let f = sigmoid_mix_probability(t as i64, 1_000, 400);
            let hits = (0..100_000)
                .filter(|_| spec.choose_concept(t, &mut rng) == 1)
                .count();
            let frac = hits as f64 / 100_000.0;
            assert!((frac - f).abs() < 0.01, "t={t}: {frac} vs {f}");
        }
    }

    #[test]
    fn validate_rejects_bad_specs() {
        let mut spec =
            DriftStreamSpec::rotating(1, 2, 10, &[(3, 1), (6, 1)], TargetMode::Unsigned).unwrap();
        spec.drift_times = vec![6, 3];
        assert!(spec.validate().is_err());
        spec.drift_times = vec![3, 6];
        spec.drift_widths = vec![1, 0];
        assert!(spec.validate().is_err());
        spec.drift_widths = vec![1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn generation_is_bitwise_deterministic() {
        let spec =
            DriftStreamSpec::rotating(77, 5, 2_000, &[(700, 50), (1_400, 1)], TargetMode::Unsigned)
                .unwrap();
        let a: Vec<_> = spec.stream().unwrap().collect();
        let b: Vec<_> = spec.stream().unwrap().collect();
        assert_eq!(a.len(), 2_000);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.y.to_bits(), q.y.to_bits());
            assert_eq!(p.x, q.x);
            assert_eq!(p.index, q.index);
        }
    }

    proptest! {
        #[test]
        fn sigmoid_is_monotone_and_symmetric(t0 in -10_000i64..10_000, w in 1u64..5_000, k in 0i64..20_000) {
            let lo = sigmoid_mix_probability(t0 - k, t0, w);
            let hi = sigmoid_mix_probability(t0 + k, t0, w);
            prop_assert!((lo + hi - 1.0).abs() < 1e-12);
            prop_assert!(sigmoid_mix_probability(t0 + k + 1, t0, w) >= hi);
            prop_assert!((0.0..=1.0).contains(&lo));
        }

        #[test]
        fn targets_are_bounded(seed in any::<u64>(), d in 2usize..16) {
            let spec = DriftStreamSpec::rotating(seed, d, 200, &[(100, 20)], TargetMode::Unsigned).unwrap();
            for inst in spec.stream().unwrap() {
                prop_assert!(inst.y >= 0.0);
                prop_assert!(inst.y <= spec.target_bound() + 1e-12);
                prop_assert!(inst.y <= (d as f64).sqrt());
                prop_assert!(inst.x.iter().all(|v| (0.0..1.0).contains(v)));
            }
        }
    }
}
