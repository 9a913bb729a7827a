//! Constant estimators for the A∞-type weight conditions.
//!
//! Every estimator is a maximum over levels `0..=N` and over the atoms of each
//! level of a per-atom quantity. [`Evaluator`] computes those per-atom values,
//! caching the pieces that several estimators share (level means, tailed
//! maxima, medians, concentration profiles, the swapped space), and reports
//! the maximizing atom as a witness.

mod estimator;
mod profile;
mod report;
mod sample;

pub use estimator::Estimator;
pub use profile::{ConcentrationProfile, ProfileMode, EXACT_LEAF_LIMIT};
pub use report::{full_report, ConstantReport, Grids, ParamMap, ReportDocument, Witness, SCHEMA};

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{Filtration, Weight, IDENTITY_TOL};
use crate::operators::{self, MedianInterval};
use sample::AtomSample;

/// Result of one estimator: the constant and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub level: usize,
    pub atom: usize,
    /// False when an envelope profile made the value an upper bound.
    pub exact: bool,
}

/// Strict `x > t` with a relative dead band, so that values equal to a
/// threshold up to rounding are not counted as exceeding it.
pub(crate) fn exceeds(x: f64, t: f64) -> bool {
    x > t * (1.0 + IDENTITY_TOL)
}

pub struct Evaluator {
    f: Filtration,
    w: Weight,
    samples: Vec<Vec<AtomSample>>,
    profiles: Vec<Vec<OnceLock<ConcentrationProfile>>>,
    tailed: OnceLock<Vec<Vec<f64>>>,
    medians: OnceLock<Vec<MedianInterval>>,
    swapped: OnceLock<Box<Evaluator>>,
}

impl Evaluator {
    pub fn new(f: &Filtration, w: &Weight) -> Result<Self> {
        f.check_len(w.values())?;
        let samples: Vec<Vec<AtomSample>> = f
            .levels()
            .iter()
            .map(|level| level.iter().map(|a| AtomSample::new(f, w, a)).collect())
            .collect();
        let profiles = samples
            .iter()
            .map(|l| l.iter().map(|_| OnceLock::new()).collect())
            .collect();
        Ok(Evaluator {
            f: f.clone(),
            w: w.clone(),
            samples,
            profiles,
            tailed: OnceLock::new(),
            medians: OnceLock::new(),
            swapped: OnceLock::new(),
        })
    }

    pub fn filtration(&self) -> &Filtration {
        &self.f
    }

    pub fn weight(&self) -> &Weight {
        &self.w
    }

    /// `ω_n` on one atom.
    pub fn mean(&self, level: usize, atom: usize) -> f64 {
        self.samples[level][atom].mean
    }

    pub fn profile(&self, level: usize, atom: usize) -> Result<&ConcentrationProfile> {
        self.f.atom(level, atom)?;
        Ok(self.profiles[level][atom]
            .get_or_init(|| ConcentrationProfile::build(level, atom, &self.samples[level][atom])))
    }

    /// The space `(Ω, ω dμ)` with dual weight `1/ω`.
    pub fn swapped(&self) -> &Evaluator {
        self.swapped.get_or_init(|| {
            let (f, w) = self
                .f
                .swap_measure(&self.w)
                .expect("swap of a validated weight");
            Box::new(Evaluator::new(&f, &w).expect("swapped space is consistent"))
        })
    }

    /// `E(M*_n ω|F_n)` per level and atom.
    fn tailed_means(&self) -> &Vec<Vec<f64>> {
        self.tailed.get_or_init(|| {
            let f = &self.f;
            let depth = f.depth();
            // M*_N ω = ω, M*_n ω = max(ω_n, M*_{n+1} ω)
            let mut running = self.w.values().to_vec();
            let mut out = vec![Vec::new(); depth + 1];
            for n in (0..=depth).rev() {
                let level = &f.levels()[n];
                for (a, s) in level.iter().zip(&self.samples[n]) {
                    for x in &mut running[a.leaves()] {
                        *x = x.max(s.mean);
                    }
                }
                out[n] = level.iter().map(|a| f.average(a, |i| running[i])).collect();
            }
            out
        })
    }

    fn medians(&self) -> &Vec<MedianInterval> {
        self.medians.get_or_init(|| {
            (0..=self.f.depth())
                .map(|n| operators::median_function(&self.f, &self.w, n).expect("valid level"))
                .collect()
        })
    }

    /// Per-atom value of an estimator; the estimate is its maximum.
    pub fn atom_value(&self, e: Estimator, level: usize, atom: usize) -> Result<f64> {
        e.validate()?;
        self.f.atom(level, atom)?;
        Ok(self.atom_value_unchecked(e, level, atom))
    }

    fn atom_value_unchecked(&self, e: Estimator, level: usize, atom: usize) -> f64 {
        let s = &self.samples[level][atom];
        match e {
            Estimator::Ap(p) => ((p - 1.0) * s.log_power_mean(-1.0 / (p - 1.0))).exp(),
            Estimator::Rh(q) => s.log_power_mean(q).exp(),
            Estimator::Aexp => s.exp_ratio(),
            Estimator::Asw(t) => (-s.log_s_mean(t)).exp(),
            Estimator::Acon(gamma) => s
                .probs
                .iter()
                .zip(&s.ratios)
                .filter(|(_, &v)| !exceeds(v, gamma))
                .fold(0.0, |acc, (p, _)| acc + p),
            Estimator::Am(alpha) => self.am_atom(level, atom, alpha),
            Estimator::AmHat(alpha) => self.swapped().am_atom(level, atom, alpha),
            Estimator::Acf(eps) => self.profiles[level][atom]
                .get_or_init(|| ConcentrationProfile::build(level, atom, s))
                .power_ratio(eps),
            Estimator::Alambda(beta) => alambda_atom(s, beta),
            Estimator::Alog => s.expect(|v| if v > 1.0 { v * v.ln() } else { 0.0 }),
            Estimator::Amed => s.mean / self.medians()[level].max[atom],
            Estimator::Astar => self.tailed_means()[level][atom] / s.mean,
            Estimator::Regularity => match self.f.levels()[level][atom].parent {
                None => 1.0,
                Some(p) => {
                    let (c, q) = (s.mean, self.samples[level - 1][p].mean);
                    (c / q).max(q / c)
                }
            },
        }
    }

    /// Concentration-profile value at `alpha ∈ [0, 1]`.
    pub(crate) fn am_atom(&self, level: usize, atom: usize, alpha: f64) -> f64 {
        self.profiles[level][atom]
            .get_or_init(|| ConcentrationProfile::build(level, atom, &self.samples[level][atom]))
            .value_at(alpha)
    }

    /// Whether the per-atom value of `e` is exact rather than an upper bound.
    fn atom_exact(&self, e: Estimator, level: usize, atom: usize) -> bool {
        match e {
            Estimator::Am(_) | Estimator::AmHat(_) => {
                ProfileMode::for_leaves(self.f.levels()[level][atom].len()) == ProfileMode::Exact
            }
            _ => true,
        }
    }

    /// Maximum of [`Evaluator::atom_value`] over all levels and atoms. Ties
    /// resolve to the first `(level, atom)` in order.
    pub fn estimate(&self, e: Estimator) -> Result<Estimate> {
        e.validate()?;
        Ok(self.estimate_unchecked(e))
    }

    pub(crate) fn estimate_unchecked(&self, e: Estimator) -> Estimate {
        let mut best = Estimate {
            value: f64::NEG_INFINITY,
            level: 0,
            atom: 0,
            exact: true,
        };
        let mut exact = true;
        for (n, level) in self.f.levels().iter().enumerate() {
            for i in 0..level.len() {
                let v = self.atom_value_unchecked(e, n, i);
                exact &= self.atom_exact(e, n, i);
                // NaN never wins; +inf does
                if v > best.value {
                    best = Estimate {
                        value: v,
                        level: n,
                        atom: i,
                        exact: true,
                    };
                }
            }
        }
        best.exact = exact;
        best
    }

    /// `E(ω^s|F_n)^{1/s}` and `exp E(log ω|F_n)` on one atom.
    pub fn s_mean_and_geometric(&self, level: usize, atom: usize, s: f64) -> (f64, f64) {
        let sm = &self.samples[level][atom];
        (
            sm.mean * sm.log_s_mean(s).exp(),
            sm.mean * sm.mean_log().exp(),
        )
    }

    /// The alambda breakpoint table of one atom: `(λ, ratio)` pairs, the
    /// first standing for `λ → 1⁺`.
    pub fn alambda_table(&self, level: usize, atom: usize, beta: f64) -> Result<Vec<(f64, f64)>> {
        Estimator::Alambda(beta).validate()?;
        self.f.atom(level, atom)?;
        Ok(alambda_scan(&self.samples[level][atom], beta))
    }

    /// Per-leaf `ω/ω_n` for the atoms of level `n`.
    pub fn normalized_at(&self, level: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.f.leaf_count()];
        for (a, s) in self.f.levels()[level].iter().zip(&self.samples[level]) {
            out[a.leaves()].copy_from_slice(&s.ratios);
        }
        out
    }
}

/// `sup_{λ>1} E(ṽ χ{ṽ>λ}) / (λ E(χ{ṽ>βλ}))` on one atom.
fn alambda_atom(s: &AtomSample, beta: f64) -> f64 {
    let best = alambda_scan(s, beta)
        .into_iter()
        .fold(0.0f64, |acc, (_, r)| acc.max(r));
    debug_assert!(best.is_finite(), "β < 1 keeps the right side positive");
    best
}

/// `(λ, ratio)` at `λ = 1⁺` and at every breakpoint above 1.
///
/// Both conditional expectations are step functions of `λ`, constant on the
/// intervals between the breakpoints `{ṽ_i} ∪ {ṽ_i/β}`. On each interval the
/// ratio decays like `1/λ`, so the supremum is attained at the left end of
/// some interval in `(1, ∞)`, with `λ → 1⁺` for the first one. An interval
/// where both sides vanish contributes 0.
fn alambda_scan(s: &AtomSample, beta: f64) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.ratios[a].total_cmp(&s.ratios[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| s.ratios[i]).collect();
    // suffix sums over ascending values
    let k = sorted.len();
    let mut tail_mass = vec![0.0; k + 1];
    let mut tail_first = vec![0.0; k + 1];
    for j in (0..k).rev() {
        let i = order[j];
        tail_mass[j] = tail_mass[j + 1] + s.probs[i];
        tail_first[j] = tail_first[j + 1] + s.probs[i] * s.ratios[i];
    }
    let above = |x: f64| sorted.partition_point(|&v| !exceeds(v, x));

    let ratio_at = |lambda: f64| {
        let lhs = tail_first[above(lambda)];
        let rhs = lambda * tail_mass[above(beta * lambda)];
        if lhs <= 0.0 {
            0.0
        } else if rhs <= 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        }
    };

    let mut points: Vec<f64> = sorted
        .iter()
        .flat_map(|&v| [v, v / beta])
        .filter(|&b| exceeds(b, 1.0))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    std::iter::once(1.0)
        .chain(points)
        .map(|l| (l, ratio_at(l)))
        .collect()
}

macro_rules! estimator_fn {
    ($(#[$m:meta])* $name:ident, $variant:ident, $param:ident) => {
        $(#[$m])*
        pub fn $name(f: &Filtration, w: &Weight, $param: f64) -> Result<f64> {
            Ok(Evaluator::new(f, w)?.estimate(Estimator::$variant($param))?.value)
        }
    };
    ($(#[$m:meta])* $name:ident, $variant:ident) => {
        $(#[$m])*
        pub fn $name(f: &Filtration, w: &Weight) -> Result<f64> {
            Ok(Evaluator::new(f, w)?.estimate(Estimator::$variant)?.value)
        }
    };
}

estimator_fn!(
    /// `max E(ω|F_n) E(ω^{-1/(p-1)}|F_n)^{p-1}`
    ap_constant, Ap, p
);
estimator_fn!(
    /// `max E(ω^q|F_n) / E(ω|F_n)^q`
    rh_constant, Rh, q
);
estimator_fn!(
    /// `max E(ω|F_n) / exp E(log ω|F_n)`
    aexp_constant, Aexp
);
estimator_fn!(
    /// `max E(ω|F_n) / E(ω^s|F_n)^{1/s}`
    asw_constant, Asw, s
);
estimator_fn!(
    /// `δ(γ) = max E(χ{ω ≤ γ ω_n}|F_n)`
    acon_profile, Acon, gamma
);
estimator_fn!(
    /// `β*(α)`: largest `ω`-fraction of a leaf subset with `μ`-fraction at
    /// most `α`, over all atoms.
    am_profile, Am, alpha
);
estimator_fn!(
    /// [`am_profile`] with `μ` and `ω dμ` exchanged.
    am_hat_profile, AmHat, alpha
);
estimator_fn!(
    /// Smallest `C` with `E_ω(χ_A|F_n) ≤ C E(χ_A|F_n)^ε`.
    acf_constant, Acf, eps
);
estimator_fn!(
    /// Smallest `C` with `E_ω(χ{ω/ω_n>λ}|F_n) ≤ C λ E(χ{ω/ω_n>βλ}|F_n)`
    /// for all `λ > 1`; 0 when both sides always vanish.
    alambda_constant, Alambda, beta
);
estimator_fn!(
    /// `max E_ω(log⁺(ω/ω_n)|F_n)`
    alog_constant, Alog
);
estimator_fn!(
    /// `max ω_n / m_max(ω, n)`
    amed_constant, Amed
);
estimator_fn!(
    /// `max E(M*_n ω|F_n) / ω_n`
    astar_constant, Astar
);

pub fn concentration_profile(
    f: &Filtration,
    w: &Weight,
    level: usize,
    atom: usize,
) -> Result<ConcentrationProfile> {
    let a = f.atom(level, atom)?;
    f.check_len(w.values())?;
    Ok(ConcentrationProfile::build(
        level,
        atom,
        &AtomSample::new(f, w, a),
    ))
}

pub(crate) fn invalid(e: Estimator) -> Error {
    let (name, value) = e.parameter_name_value();
    Error::param(name, value, e.domain())
}

#[cfg(test)]
mod tests;
