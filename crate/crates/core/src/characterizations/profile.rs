//! Concentration profiles: the frontier of `(μ(A)/μ(Q), ω(A)/ω(Q))` over
//! leaf subsets `A` of one atom `Q`.
//!
//! In exact mode the frontier is the Pareto set of all `2^k` subsets, built by
//! a sweep that adds one leaf at a time and prunes dominated pairs. Beyond
//! [`EXACT_LEAF_LIMIT`] leaves the greedy envelope is used instead: leaves
//! sorted by decreasing `ω`-density give the concave majorant of the exact
//! step function.

use serde::{Deserialize, Serialize};

use super::sample::AtomSample;

/// Atoms with at most this many leaves are enumerated exactly.
pub const EXACT_LEAF_LIMIT: usize = 20;

/// Slack on `t ≤ α` comparisons so that exact halves survive rounding.
const FRACTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileMode {
    Exact,
    Envelope,
}

impl ProfileMode {
    pub fn for_leaves(k: usize) -> Self {
        if k <= EXACT_LEAF_LIMIT {
            ProfileMode::Exact
        } else {
            ProfileMode::Envelope
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationProfile {
    pub level: usize,
    pub atom: usize,
    pub mode: ProfileMode,
    /// `(t, h)` pairs sorted by `t`, strictly increasing in both
    /// coordinates, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
}

impl ConcentrationProfile {
    pub(crate) fn build(level: usize, atom: usize, sample: &AtomSample) -> Self {
        let mode = ProfileMode::for_leaves(sample.len());
        Self::build_with_mode(level, atom, sample, mode)
    }

    pub(crate) fn build_with_mode(
        level: usize,
        atom: usize,
        sample: &AtomSample,
        mode: ProfileMode,
    ) -> Self {
        let points = match mode {
            ProfileMode::Exact => pareto_sweep(sample),
            ProfileMode::Envelope => greedy_envelope(sample),
        };
        ConcentrationProfile {
            level,
            atom,
            mode,
            points,
        }
    }

    /// Largest `ω`-fraction over subsets with `μ`-fraction at most `alpha`.
    ///
    /// Exact mode reads the step function; envelope mode interpolates the
    /// concave majorant and therefore never under-reports.
    pub fn value_at(&self, alpha: f64) -> f64 {
        let limit = alpha + FRACTION_TOL;
        let idx = self.points.partition_point(|&(t, _)| t <= limit);
        // (0, 0) is always admissible
        let (t0, h0) = self.points[idx - 1];
        match self.mode {
            ProfileMode::Exact => h0,
            ProfileMode::Envelope => match self.points.get(idx) {
                Some(&(t1, h1)) if alpha > t0 => h0 + (h1 - h0) * (alpha - t0) / (t1 - t0),
                _ => h0,
            },
        }
    }

    /// `max h / t^ε` over frontier points with `t > 0`.
    ///
    /// On a linear piece `h = a + b t` with `a ≥ 0` the ratio `h / t^ε` is
    /// quasi-convex in `t`, so its maximum over the envelope sits at a vertex.
    /// Vertices are greedy prefixes and hence achievable, which makes the
    /// envelope value exact as well.
    pub fn power_ratio(&self, eps: f64) -> f64 {
        self.points
            .iter()
            .filter(|&&(t, _)| t > 0.0)
            .map(|&(t, h)| h / t.powf(eps))
            .fold(0.0, f64::max)
    }
}

fn pareto_sweep(sample: &AtomSample) -> Vec<(f64, f64)> {
    let mut front: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (&p, &v) in sample.probs.iter().zip(&sample.ratios) {
        let h = p * v;
        merged.clear();
        merged.extend_from_slice(&front);
        merged.extend(front.iter().map(|&(t0, h0)| (t0 + p, h0 + h)));
        // ascending t, and for equal t the larger h first
        merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        front.clear();
        let mut best = f64::NEG_INFINITY;
        for &(t, h) in &merged {
            if h > best {
                front.push((t, h));
                best = h;
            }
        }
    }
    // the full set is the last Pareto point
    if let Some(last) = front.last_mut() {
        *last = (1.0, 1.0);
    }
    front
}

fn greedy_envelope(sample: &AtomSample) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| {
        sample.ratios[b]
            .total_cmp(&sample.ratios[a])
            .then(a.cmp(&b))
    });
    let mut points = Vec::with_capacity(order.len() + 1);
    points.push((0.0, 0.0));
    let (mut t, mut h) = (0.0, 0.0);
    for &i in &order {
        t += sample.probs[i];
        h += sample.probs[i] * sample.ratios[i];
        points.push((t, h));
    }
    if let Some(last) = points.last_mut() {
        *last = (1.0, 1.0);
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(probs: &[f64], omega: &[f64]) -> AtomSample {
        AtomSample::from_parts(probs, omega)
    }

    #[test]
    fn f2_w13_profile() {
        let s = sample(&[0.5, 0.5], &[1.0, 3.0]);
        let exact = ConcentrationProfile::build(0, 0, &s);
        assert_eq!(exact.mode, ProfileMode::Exact);
        assert_eq!(exact.points, vec![(0.0, 0.0), (0.5, 0.75), (1.0, 1.0)]);
        let env = ConcentrationProfile::build_with_mode(0, 0, &s, ProfileMode::Envelope);
        assert_eq!(env.points, exact.points);
        assert_eq!(exact.value_at(0.5), 0.75);
        assert_eq!(exact.value_at(0.49), 0.0);
        assert_eq!(env.value_at(0.25), 0.375);
        let c = exact.power_ratio(0.5);
        assert!((c - 0.75 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_weight_lies_on_diagonal() {
        let s = sample(&[0.2, 0.3, 0.5], &[4.0, 4.0, 4.0]);
        let p = ConcentrationProfile::build(0, 0, &s);
        for &(t, h) in &p.points {
            assert!((t - h).abs() < 1e-15, "{t} {h}");
        }
        // achievable partial sums only
        let ts: Vec<f64> = p.points.iter().map(|x| x.0).collect();
        assert_eq!(ts.len(), 7);
    }

    #[test]
    fn frontier_is_strictly_increasing() {
        let s = sample(
            &[0.1, 0.2, 0.15, 0.05, 0.3, 0.2],
            &[3.0, 0.5, 1.0, 7.0, 0.2, 2.0],
        );
        for mode in [ProfileMode::Exact, ProfileMode::Envelope] {
            let p = ConcentrationProfile::build_with_mode(0, 0, &s, mode);
            assert_eq!(p.points[0], (0.0, 0.0));
            assert_eq!(*p.points.last().unwrap(), (1.0, 1.0));
            for w in p.points.windows(2) {
                assert!(w[0].0 < w[1].0 && w[0].1 < w[1].1, "{mode:?} {w:?}");
            }
        }
        let exact = ConcentrationProfile::build_with_mode(0, 0, &s, ProfileMode::Exact);
        let env = ConcentrationProfile::build_with_mode(0, 0, &s, ProfileMode::Envelope);
        for a in [0.05, 0.1, 0.33, 0.5, 0.77, 0.95] {
            assert!(env.value_at(a) + 1e-15 >= exact.value_at(a));
        }
        for e in [0.1, 0.5, 0.9] {
            assert!((env.power_ratio(e) - exact.power_ratio(e)).abs() < 1e-12);
        }
    }
}
