//! Per-atom view of a weight under the conditional measure.

use crate::filtration::{Atom, Filtration, Weight};

/// Leaf ratio above which powers are summed in log space.
const LOG_SPACE_RATIO: f64 = 1e12;

/// Conditional probabilities `p_i = μ_i / μ(Q)` and normalized values
/// `ṽ_i = ω_i / ω_n(Q)` of the leaves of one atom.
#[derive(Debug, Clone)]
pub(crate) struct AtomSample {
    pub probs: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `ω_n(Q)`
    pub mean: f64,
    /// raw leaf values `ω_i`
    pub values: Vec<f64>,
}

impl AtomSample {
    pub fn new(f: &Filtration, w: &Weight, atom: &Atom) -> Self {
        let masses = &f.masses()[atom.leaves()];
        let omega = &w.values()[atom.leaves()];
        Self::from_parts(masses, omega)
    }

    pub fn from_parts(masses: &[f64], omega: &[f64]) -> Self {
        let total: f64 = masses.iter().sum();
        let probs: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let mean: f64 = probs.iter().zip(omega).map(|(p, o)| p * o).sum();
        let ratios = omega.iter().map(|o| o / mean).collect();
        AtomSample {
            probs,
            ratios,
            mean,
            values: omega.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.probs
            .iter()
            .zip(&self.ratios)
            .map(|(p, &v)| p * g(v))
            .sum()
    }

    /// `log E(ṽ^r)`, switching to log-sum-exp for widely spread values.
    pub fn log_power_mean(&self, r: f64) -> f64 {
        let (lo, hi) = self
            .ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if hi / lo <= LOG_SPACE_RATIO {
            return self.expect(|v| v.powf(r)).ln();
        }
        let exps: Vec<f64> = self.ratios.iter().map(|v| r * v.ln()).collect();
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self
            .probs
            .iter()
            .zip(&exps)
            .map(|(p, e)| p * (e - top).exp())
            .sum();
        top + s.ln()
    }

    /// `(1/s) log E(ṽ^s)`, accurate for small `s`.
    pub fn log_s_mean(&self, s: f64) -> f64 {
        let total: f64 = self.probs.iter().sum();
        let d = self.expect(|v| (s * v.ln()).exp_m1()) + (total - 1.0);
        d.ln_1p() / s
    }

    /// `E(log ṽ)`
    pub fn mean_log(&self) -> f64 {
        self.expect(f64::ln)
    }

    /// `ω_n / exp E(log ω)`, from the raw values so that simple cases come
    /// out correctly rounded.
    pub fn exp_ratio(&self) -> f64 {
        let log_mean: f64 = self
            .probs
            .iter()
            .zip(&self.values)
            .map(|(p, w)| p * w.ln())
            .sum();
        self.mean / log_mean.exp()
    }
}
