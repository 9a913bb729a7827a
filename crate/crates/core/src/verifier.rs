//! Executable checks of the quantitative relations between the constants and
//! of the lemmas behind them.
//!
//! Every check is a family of instances `lhs ≤ rhs`. An instance is fully
//! described by its [`CheckWitness`] (weight, level, atom and named
//! parameters), so [`replay`] can recompute any reported slack from the
//! witness alone. Slack is `(rhs − lhs) / max(1, |rhs|)`, and a check passes
//! when its worst slack is at least `−tolerance`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characterizations::{full_report, ConstantReport, Estimator, Evaluator, Grids};
use crate::error::{Error, Result};
use crate::filtration::{Filtration, Weight};
use crate::operators::{crossing_times, tailed_maximal};
use crate::search::{derive_seed, random_weight, Family};

/// Tolerance on inequalities between constants.
pub const INEQUALITY_TOL: f64 = 1e-8;
/// Tolerance on monotonicity and Jensen steps, which hold up to rounding.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Cap on `δ` in the level-set check; any smaller `δ` satisfies the same
/// hypothesis.
const DELTA_CAP: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckWitness {
    pub weight: String,
    pub level: Option<usize>,
    pub atom: Option<usize>,
    pub params: BTreeMap<String, f64>,
}

impl CheckWitness {
    fn new(
        weight: &str,
        level: Option<usize>,
        atom: Option<usize>,
        params: &[(&str, f64)],
    ) -> Self {
        CheckWitness {
            weight: weight.to_string(),
            level,
            atom,
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }

    fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidSpec(format!("witness lacks parameter `{name}`")))
    }

    fn at(&self) -> Result<(usize, usize)> {
        match (self.level, self.atom) {
            (Some(l), Some(a)) => Ok((l, a)),
            _ => Err(Error::InvalidSpec("witness lacks level or atom".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: bool,
    /// Minimum scaled slack over all instances; `null` when there were none.
    #[serde(with = "crate::nullable")]
    pub worst_slack: f64,
    #[serde(with = "crate::nullable")]
    pub lhs: f64,
    #[serde(with = "crate::nullable")]
    pub rhs: f64,
    pub instances: usize,
    pub witness: CheckWitness,
}

/// Scaled slack of `lhs ≤ rhs`; NaN on either side counts as a violation.
pub fn slack(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_nan() || rhs.is_nan() {
        return f64::NEG_INFINITY;
    }
    if rhs == f64::INFINITY || lhs == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (rhs - lhs) / rhs.abs().max(1.0)
}

struct Worst {
    check: &'static str,
    weight: String,
    tol: f64,
    worst: Option<(f64, f64, f64, CheckWitness)>,
    count: usize,
}

impl Worst {
    fn new(check: &'static str, weight: &str, tol: f64) -> Self {
        Worst {
            check,
            weight: weight.to_string(),
            tol,
            worst: None,
            count: 0,
        }
    }

    fn push(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> CheckWitness) {
        self.count += 1;
        let s = slack(lhs, rhs);
        if self.worst.as_ref().is_none_or(|w| s < w.0) {
            self.worst = Some((s, lhs, rhs, witness()));
        }
    }

    fn finish(self) -> CheckResult {
        let (worst_slack, lhs, rhs, witness) = self.worst.unwrap_or_else(|| {
            (
                f64::INFINITY,
                f64::NAN,
                f64::NAN,
                CheckWitness::new(&self.weight, None, None, &[]),
            )
        });
        CheckResult {
            check: self.check.to_string(),
            passed: worst_slack >= -self.tol,
            worst_slack,
            lhs,
            rhs,
            instances: self.count,
            witness,
        }
    }
}

// ---------------------------------------------------------------------------
// s-limit lemma

fn s_mean(ev: &Evaluator, level: usize, atom: usize, s: f64) -> (f64, f64) {
    ev.s_mean_and_geometric(level, atom, s)
}

/// Relative gap bound `exp E((ṽ^s − 1)/s − log ṽ) − 1` with `ṽ = ω/ω_n`.
fn gap_bound(ev: &Evaluator, level: usize, atom: usize, s: f64) -> f64 {
    let a = ev.filtration().level(level).expect("checked level")[atom].leaves();
    let masses = &ev.filtration().masses()[a.clone()];
    let total: f64 = masses.iter().sum();
    let mean = ev.mean(level, atom);
    let e: f64 = masses
        .iter()
        .zip(&ev.weight().values()[a])
        .map(|(m, w)| {
            let lv = (w / mean).ln();
            m / total * ((s * lv).exp_m1() / s - lv)
        })
        .sum();
    e.exp_m1()
}

fn slimit_sides(ev: &Evaluator, wit: &CheckWitness) -> Result<(f64, f64)> {
    let (level, atom) = wit.at()?;
    ev.filtration().atom(level, atom)?;
    let s = wit.param("s")?;
    let (m, g) = s_mean(ev, level, atom, s);
    Ok(match wit.param("part")? as u8 {
        0 => (s_mean(ev, level, atom, wit.param("s_next")?).0, m),
        1 => (g, m),
        _ => ((m - g) / g, gap_bound(ev, level, atom, s)),
    })
}

fn validate_s_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return Err(Error::InvalidSpec("empty s grid".into()));
    }
    for &s in s_grid {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::param("s", s, "must lie in (0, 1]"));
        }
    }
    if s_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSpec(
            "s grid must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn slimit_on(ev: &Evaluator, s_grid: &[f64]) -> CheckResult {
    let name = ev.weight().name();
    let mut acc = Worst::new("lemma_slimit", name, IDENTITY_TOL);
    let smallest = *s_grid.last().expect("validated grid");
    for (level, atoms) in ev.filtration().levels().iter().enumerate() {
        for atom in 0..atoms.len() {
            let mut instances = Vec::new();
            for w in s_grid.windows(2) {
                instances.push(vec![("part", 0.0), ("s", w[0]), ("s_next", w[1])]);
            }
            for &s in s_grid {
                instances.push(vec![("part", 1.0), ("s", s)]);
            }
            instances.push(vec![("part", 2.0), ("s", smallest)]);
            for params in instances {
                let wit = CheckWitness::new(name, Some(level), Some(atom), &params);
                let (l, r) = slimit_sides(ev, &wit).expect("instances are in range");
                acc.push(l, r, || wit);
            }
        }
    }
    acc.finish()
}

/// `E(ω^s|F_n)^{1/s}` is nonincreasing along `s_grid`, bounded below by
/// `exp E(log ω|F_n)`, and within the reported bound of it at the smallest
/// `s`.
pub fn check_lemma_slimit(f: &Filtration, w: &Weight, s_grid: &[f64]) -> Result<CheckResult> {
    validate_s_grid(s_grid)?;
    Ok(slimit_on(&Evaluator::new(f, w)?, s_grid))
}

// ---------------------------------------------------------------------------
// localized weak (1,1)

/// Both sides of `μ(B ∩ {M*_n g > λ}) ≤ (2/λ) ∫_{B∩{|g|>λ/2}} |g| dμ`.
///
/// With `left` set, the sides are the limits as `λ` increases to the given
/// value, where the strict inequalities become `≥`.
pub fn doob_local_sides(
    f: &Filtration,
    g: &[f64],
    n: usize,
    lambda: f64,
    left: bool,
    b: &[bool],
) -> Result<(f64, f64)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", lambda, "must be finite and > 0"));
    }
    f.check_len(g)?;
    check_set(f, n, b)?;
    let star = tailed_maximal(f, g, n)?;
    let leaves: Vec<usize> = (0..b.len()).filter(|&i| b[i]).collect();
    Ok(doob_local_eval(f, g, &star, &leaves, lambda, left))
}

fn check_set(f: &Filtration, n: usize, b: &[bool]) -> Result<()> {
    if b.len() != f.leaf_count() {
        return Err(Error::LengthMismatch {
            expected: f.leaf_count(),
            got: b.len(),
        });
    }
    if !f.is_measurable(b, n)? {
        return Err(Error::NotMeasurable { level: n });
    }
    Ok(())
}

fn doob_local_eval(
    f: &Filtration,
    g: &[f64],
    star: &[f64],
    leaves: &[usize],
    lambda: f64,
    left: bool,
) -> (f64, f64) {
    let above = |x: f64, t: f64| if left { x >= t } else { x > t };
    let mu = f.masses();
    let mut lhs = 0.0;
    let mut integral = 0.0;
    for &i in leaves {
        if above(star[i], lambda) {
            lhs += mu[i];
        }
        if above(g[i].abs(), lambda / 2.0) {
            integral += mu[i] * g[i].abs();
        }
    }
    (lhs, 2.0 / lambda * integral)
}

fn doob_local_breakpoints(g: &[f64], star: &[f64], leaves: &[usize]) -> Vec<f64> {
    let mut out: Vec<f64> = leaves
        .iter()
        .flat_map(|&i| [star[i], g[i].abs(), 2.0 * g[i].abs()])
        .filter(|&x| x > 0.0 && x.is_finite())
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Sweeps `λ` over every breakpoint of `M*_n g`, `|g|` and `2|g|` inside
/// `B`, from both sides. Between breakpoints both sides are monotone in `λ`
/// in the favourable direction, so these instances cover all `λ > 0`.
pub fn check_doob_local(f: &Filtration, g: &[f64], n: usize, b: &[bool]) -> Result<CheckResult> {
    f.check_len(g)?;
    check_set(f, n, b)?;
    let star = tailed_maximal(f, g, n)?;
    let leaves: Vec<usize> = (0..b.len()).filter(|&i| b[i]).collect();
    let mut acc = Worst::new("doob_local", "f", INEQUALITY_TOL);
    for lambda in doob_local_breakpoints(g, &star, &leaves) {
        for left in [false, true] {
            let (l, r) = doob_local_eval(f, g, &star, &leaves, lambda, left);
            acc.push(l, r, || {
                CheckWitness::new(
                    "f",
                    Some(n),
                    None,
                    &[("lambda", lambda), ("left", left as u8 as f64)],
                )
            });
        }
    }
    Ok(acc.finish())
}

/// Test functions the suite derives from a weight: `ω` and `log ω`.
fn suite_function(w: &Weight, which: f64) -> Vec<f64> {
    if which == 0.0 {
        w.values().to_vec()
    } else {
        w.values().iter().map(|v| v.ln()).collect()
    }
}

fn doob_local_suite(f: &Filtration, w: &Weight) -> Result<CheckResult> {
    let mut acc = Worst::new("doob_local", w.name(), INEQUALITY_TOL);
    for which in [0.0, 1.0] {
        let g = suite_function(w, which);
        for n in 0..=f.depth() {
            let star = tailed_maximal(f, &g, n)?;
            for (i, atom) in f.level(n)?.iter().enumerate() {
                let leaves: Vec<usize> = atom.leaves().collect();
                for lambda in doob_local_breakpoints(&g, &star, &leaves) {
                    for left in [false, true] {
                        let (l, r) = doob_local_eval(f, &g, &star, &leaves, lambda, left);
                        acc.push(l, r, || {
                            CheckWitness::new(
                                w.name(),
                                Some(n),
                                Some(i),
                                &[
                                    ("fn", which),
                                    ("lambda", lambda),
                                    ("left", left as u8 as f64),
                                ],
                            )
                        });
                    }
                }
            }
        }
    }
    Ok(acc.finish())
}

// ---------------------------------------------------------------------------
// conditional Doob

/// Per level-`n` atom: `E((M*_n g)^p|F_n)` and `(p/(p−1))^p E(g^p|F_n)`.
pub fn conditional_doob_sides(
    f: &Filtration,
    g: &[f64],
    n: usize,
    p: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", p, "must be > 1"));
    }
    if g.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::param("f", f64::NAN, "must be nonnegative"));
    }
    let star = tailed_maximal(f, g, n)?;
    let c = (p / (p - 1.0)).powf(p);
    Ok(f.level(n)?
        .iter()
        .map(|a| {
            let lhs = f.average(a, |i| star[i].powf(p));
            let rhs = c * f.average(a, |i| g[i].powf(p));
            (lhs, rhs)
        })
        .collect())
}

pub fn check_conditional_doob(f: &Filtration, g: &[f64], n: usize, p: f64) -> Result<CheckResult> {
    let mut acc = Worst::new("conditional_doob", "f", INEQUALITY_TOL);
    for (i, (l, r)) in conditional_doob_sides(f, g, n, p)?.into_iter().enumerate() {
        acc.push(l, r, || {
            CheckWitness::new("f", Some(n), Some(i), &[("p", p)])
        });
    }
    Ok(acc.finish())
}

fn conditional_doob_suite(f: &Filtration, w: &Weight, ps: &[f64]) -> Result<CheckResult> {
    let mut acc = Worst::new("conditional_doob", w.name(), INEQUALITY_TOL);
    for &p in ps {
        for n in 0..=f.depth() {
            for (i, (l, r)) in conditional_doob_sides(f, w.values(), n, p)?
                .into_iter()
                .enumerate()
            {
                acc.push(l, r, || {
                    CheckWitness::new(w.name(), Some(n), Some(i), &[("fn", 0.0), ("p", p)])
                });
            }
        }
    }
    Ok(acc.finish())
}

// ---------------------------------------------------------------------------
// crossing-time decay

/// `max(⌈log2(C_S/α)⌉, 1)`: the smallest step with `C_S/2^L ≤ α`.
pub fn crossing_step(c_s: f64, alpha: f64) -> u32 {
    ((c_s / alpha).log2().ceil()).max(1.0) as u32
}

/// `E_ω(χ{τ_k<∞}|F_n)` per atom of the base level, for `k = 0, 1, …`.
pub fn crossing_masses(f: &Filtration, w: &Weight, n: usize, step: u32) -> Result<Vec<Vec<f64>>> {
    let ct = crossing_times(f, w, n, step)?;
    let mu = f.masses();
    let omega = w.values();
    Ok(f.level(n)?
        .iter()
        .map(|a| {
            let total: f64 = a.leaves().map(|i| mu[i] * omega[i]).sum();
            (0..ct.len())
                .map(|k| {
                    a.leaves()
                        .filter(|&i| ct.is_finite(k, i))
                        .map(|i| mu[i] * omega[i])
                        .sum::<f64>()
                        / total
                })
                .collect()
        })
        .collect())
}

fn crossing_instances(
    acc: &mut Worst,
    name: &str,
    masses: &[Vec<f64>],
    n: usize,
    alpha: f64,
    beta: f64,
    c_s: f64,
) {
    for (i, seq) in masses.iter().enumerate() {
        for k in 0..seq.len() {
            let next = seq.get(k + 1).copied().unwrap_or(0.0);
            let params = |form: f64| {
                [
                    ("alpha", alpha),
                    ("beta", beta),
                    ("c_s", c_s),
                    ("k", k as f64),
                    ("form", form),
                ]
            };
            acc.push(next, beta.powi(k as i32), || {
                CheckWitness::new(name, Some(n), Some(i), &params(0.0))
            });
            if k >= 1 {
                acc.push(next, beta * seq[k], || {
                    CheckWitness::new(name, Some(n), Some(i), &params(1.0))
                });
            }
        }
    }
}

/// `E_ω(χ{τ_{k+1}<∞}|F_n) ≤ β^k`, and for `k ≥ 1` the one-step form
/// `≤ β E_ω(χ{τ_k<∞}|F_n)`, with `L` from [`crossing_step`].
///
/// Errors when `ω` does not meet the hypotheses: `am(α) ≤ β < 1` and
/// regularity constant at most `c_s`.
pub fn check_crossing_decay(
    f: &Filtration,
    w: &Weight,
    n: usize,
    alpha: f64,
    beta: f64,
    c_s: f64,
) -> Result<CheckResult> {
    let ev = Evaluator::new(f, w)?;
    let am = ev.estimate(Estimator::Am(alpha))?.value;
    // values recomputed elsewhere may differ from ours in the last bits
    if !(beta < 1.0) || am > beta * (1.0 + IDENTITY_TOL) {
        return Err(Error::InvalidSpec(format!(
            "precondition unmet: am({alpha}) = {am} must not exceed beta = {beta} < 1"
        )));
    }
    let reg = ev.estimate(Estimator::Regularity)?.value;
    if reg > c_s * (1.0 + IDENTITY_TOL) {
        return Err(Error::InvalidSpec(format!(
            "precondition unmet: regularity constant {reg} exceeds {c_s}"
        )));
    }
    let masses = crossing_masses(f, w, n, crossing_step(c_s, alpha))?;
    let mut acc = Worst::new("crossing_decay", w.name(), INEQUALITY_TOL);
    crossing_instances(&mut acc, w.name(), &masses, n, alpha, beta, c_s);
    Ok(acc.finish())
}

fn crossing_suite(ev: &Evaluator, report: &ConstantReport, grids: &Grids) -> Result<CheckResult> {
    let (f, w) = (ev.filtration(), ev.weight());
    let mut acc = Worst::new("crossing_decay", w.name(), INEQUALITY_TOL);
    let c_s = ev.estimate_unchecked(Estimator::Regularity).value;
    for &alpha in &grids.alpha {
        let beta = report
            .get(Estimator::Am(alpha))
            .unwrap_or_else(|| ev.estimate_unchecked(Estimator::Am(alpha)).value);
        if !(beta < 1.0) {
            continue;
        }
        let step = crossing_step(c_s, alpha);
        for n in 0..=f.depth() {
            let masses = crossing_masses(f, w, n, step)?;
            crossing_instances(&mut acc, w.name(), &masses, n, alpha, beta, c_s);
        }
    }
    Ok(acc.finish())
}

fn crossing_replay(f: &Filtration, w: &Weight, wit: &CheckWitness) -> Result<(f64, f64)> {
    let (n, i) = wit.at()?;
    let (alpha, beta, c_s) = (wit.param("alpha")?, wit.param("beta")?, wit.param("c_s")?);
    let k = wit.param("k")? as usize;
    let masses = crossing_masses(f, w, n, crossing_step(c_s, alpha))?;
    let seq = masses
        .get(i)
        .ok_or(Error::AtomOutOfRange { level: n, atom: i })?;
    let next = seq.get(k + 1).copied().unwrap_or(0.0);
    let here = seq.get(k).copied().unwrap_or(0.0);
    Ok(if wit.param("form")? == 0.0 {
        (next, beta.powi(k as i32))
    } else {
        (next, beta * here)
    })
}

// ---------------------------------------------------------------------------
// lattice inequalities between constants

/// Constants read from a report when present, otherwise evaluated.
struct Constants<'a> {
    ev: &'a Evaluator,
    report: &'a ConstantReport,
}

impl Constants<'_> {
    fn get(&self, e: Estimator) -> f64 {
        self.report
            .get(e)
            .unwrap_or_else(|| self.ev.estimate_unchecked(e).value)
    }

    /// `am` at any `α ∈ [0, 1]`.
    fn am(&self, alpha: f64) -> f64 {
        if alpha > 0.0 && alpha < 1.0 {
            return self.get(Estimator::Am(alpha));
        }
        let f = self.ev.filtration();
        let mut best = 0.0f64;
        for (n, level) in f.levels().iter().enumerate() {
            for i in 0..level.len() {
                best = best.max(self.ev.am_atom(n, i, alpha));
            }
        }
        best
    }
}

/// Names of the lattice checks, in suite order.
pub const LATTICE_CHECKS: [&str; 13] = [
    "lattice_a",
    "lattice_b",
    "lattice_c",
    "lattice_d",
    "lattice_e",
    "lattice_f",
    "lattice_g",
    "lattice_h",
    "lattice_i",
    "lattice_j",
    "lattice_k",
    "lattice_l",
    "lattice_am_acon",
];

/// Largest `δ ≤ DELTA_CAP` with `Cδ / ((1+δ) β^{1+δ}) ≤ 1/2`; the left side
/// is increasing in `δ`.
fn delta_limit(c: f64, beta: f64) -> f64 {
    let g = |d: f64| c * d / ((1.0 + d) * beta.powf(1.0 + d));
    if g(DELTA_CAP) < 0.5 {
        return DELTA_CAP;
    }
    let (mut lo, mut hi) = (0.0, DELTA_CAP);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn lattice_instances(check: &str, k: &Constants, grids: &Grids) -> Vec<Vec<(&'static str, f64)>> {
    let mut out = Vec::new();
    match check {
        "lattice_a" => out.extend(grids.p.iter().map(|&p| vec![("p", p)])),
        "lattice_b" | "lattice_d" => out.extend(grids.s.iter().map(|&s| vec![("s", s)])),
        "lattice_c" => out.push(vec![]),
        "lattice_e" => {
            for &beta in &grids.beta {
                let d = delta_limit(k.get(Estimator::Alambda(beta)), beta);
                for frac in [0.99, 0.5] {
                    out.push(vec![("beta", beta), ("delta", frac * d)]);
                }
            }
        }
        "lattice_f" => {
            for &eps in &grids.eps {
                let r = 1.0 / (1.0 - eps);
                for frac in [0.25, 0.5, 0.75] {
                    out.push(vec![("eps", eps), ("q", 1.0 + (r - 1.0) * frac)]);
                }
            }
        }
        "lattice_g" => {
            let c = k.get(Estimator::Aexp);
            for &s in &grids.s {
                if 2f64.powf(s - 1.0) * c.powf(s) < 0.75 {
                    out.push(vec![("s", s)]);
                }
            }
        }
        "lattice_h" => out.extend(
            grids
                .alpha
                .iter()
                .filter(|&&a| a < 0.25)
                .map(|&a| vec![("alpha", a)]),
        ),
        "lattice_i" => {
            let top = alog_alpha(k.get(Estimator::Alog));
            out.push(vec![("alpha", top)]);
            out.extend(
                grids
                    .alpha
                    .iter()
                    .filter(|&&a| a <= top)
                    .map(|&a| vec![("alpha", a)]),
            );
        }
        "lattice_j" => {
            for &gamma in &grids.gamma {
                let delta = k.get(Estimator::Acon(gamma));
                if !(delta < 1.0) {
                    continue;
                }
                for &beta in &grids.beta {
                    let alpha = 1.0 - (1.0 - beta) / gamma - delta;
                    if alpha > 0.0 {
                        out.push(vec![("gamma", gamma), ("beta", beta), ("alpha", alpha)]);
                    }
                }
            }
        }
        "lattice_k" => out.extend(grids.q.iter().map(|&q| vec![("q", q)])),
        "lattice_l" => out.extend(grids.gamma.iter().map(|&g| vec![("gamma", g)])),
        "lattice_am_acon" => {
            for &alpha in &grids.alpha {
                let beta = k.am(alpha);
                if beta < 1.0 {
                    out.push(vec![("alpha", alpha), ("gamma", 0.99 * (1.0 - beta))]);
                }
            }
        }
        _ => {}
    }
    out
}

/// `α` with `α(1 + e^b/(b+1)) = 1/4` for `b = 2C − 1`; 0 when `C = 0`.
fn alog_alpha(c: f64) -> f64 {
    let b = 2.0 * c - 1.0;
    if b + 1.0 <= 0.0 {
        return 0.0;
    }
    0.25 / (1.0 + b.exp() / (b + 1.0))
}

fn lattice_sides(check: &str, k: &Constants, wit: &CheckWitness) -> Result<(f64, f64)> {
    let p = |name| wit.param(name);
    use Estimator::*;
    Ok(match check {
        "lattice_a" => (k.get(Aexp), k.get(Ap(p("p")?))),
        "lattice_b" => (k.get(Asw(p("s")?)), k.get(Aexp)),
        "lattice_c" => (k.get(Astar), 2.0 + 2.0 * k.get(Alog)),
        "lattice_d" => {
            let s = p("s")?;
            (
                k.get(Astar),
                k.get(Asw(s)) * (1.0 / (1.0 - s)).powf(1.0 / s),
            )
        }
        "lattice_e" => (k.get(Rh(1.0 + p("delta")?)), 2.0),
        "lattice_f" => {
            let (eps, q) = (p("eps")?, p("q")?);
            let r = 1.0 / (1.0 - eps);
            (k.get(Rh(q)), 1.0 + k.get(Acf(eps)).powf(r) * q / (r - q))
        }
        "lattice_g" => {
            let s = p("s")?;
            (k.get(Amed), 4f64.powf(1.0 / s) * k.get(Aexp))
        }
        "lattice_h" => (k.am(p("alpha")?), 1.0 - 1.0 / (4.0 * k.get(Amed))),
        "lattice_i" => (k.am(p("alpha")?), 0.75),
        "lattice_j" => (k.am(p("alpha")?), p("beta")?),
        "lattice_k" => {
            let q = p("q")?;
            let eps = q - 1.0;
            (k.get(Acf(eps / (1.0 + eps))), k.get(Rh(q)).powf(1.0 / q))
        }
        "lattice_l" => {
            let gamma = p("gamma")?;
            let c = k.get(Aexp);
            (k.get(Acon(gamma)), c / (1.0 / (gamma * c)).ln_1p())
        }
        "lattice_am_acon" => (k.get(Acon(p("gamma")?)), 1.0 - p("alpha")?),
        other => return Err(Error::InvalidSpec(format!("unknown check `{other}`"))),
    })
}

fn lattice_check(check: &'static str, k: &Constants, grids: &Grids) -> CheckResult {
    let name = k.ev.weight().name();
    let mut acc = Worst::new(check, name, INEQUALITY_TOL);
    for params in lattice_instances(check, k, grids) {
        let wit = CheckWitness::new(name, None, None, &params);
        let (l, r) = lattice_sides(check, k, &wit).expect("known check");
        acc.push(l, r, || wit);
    }
    acc.finish()
}

/// All lattice checks for one report. The report may have been altered, as
/// in the negative control; values absent from it are evaluated.
pub fn check_lattice(
    f: &Filtration,
    w: &Weight,
    report: &ConstantReport,
    grids: &Grids,
) -> Result<Vec<CheckResult>> {
    grids.validate()?;
    let ev = Evaluator::new(f, w)?;
    let k = Constants { ev: &ev, report };
    Ok(LATTICE_CHECKS
        .iter()
        .map(|c| lattice_check(c, &k, grids))
        .collect())
}

// ---------------------------------------------------------------------------
// suite

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub grids: Grids,
    /// Exponents for the conditional Doob check.
    pub doob_p: Vec<f64>,
    /// Halve every `ap` entry of the report before the lattice checks.
    pub corrupt: bool,
    /// Replaces the built-in slack tolerance of every check when set.
    pub tolerance: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            grids: Grids::default(),
            doob_p: vec![1.5, 2.0, 3.0],
            corrupt: false,
            tolerance: None,
        }
    }
}

impl SuiteConfig {
    fn s_grid(&self) -> Vec<f64> {
        let mut s = self.grids.s.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s.dedup();
        s
    }
}

fn corrupted(mut report: ConstantReport) -> ConstantReport {
    let aps: Vec<(f64, f64)> = report.ap.iter().collect();
    for (p, v) in aps {
        report.set(Estimator::Ap(p), v / 2.0);
    }
    report
}

fn suite_for(f: &Filtration, w: &Weight, config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let ev = Evaluator::new(f, w)?;
    let mut report = full_report(f, w, &config.grids)?;
    if config.corrupt {
        report = corrupted(report);
    }
    let k = Constants {
        ev: &ev,
        report: &report,
    };
    let mut out = vec![
        slimit_on(&ev, &config.s_grid()),
        doob_local_suite(f, w)?,
        conditional_doob_suite(f, w, &config.doob_p)?,
        crossing_suite(&ev, &report, &config.grids)?,
    ];
    out.extend(
        LATTICE_CHECKS
            .iter()
            .map(|c| lattice_check(c, &k, &config.grids)),
    );
    if let Some(t) = config.tolerance {
        for r in &mut out {
            r.passed = r.worst_slack >= -t;
        }
    }
    Ok(out)
}

/// Runs every check on every weight. Results are ordered by check name and
/// then by weight order.
pub fn run_suite(
    f: &Filtration,
    weights: &[Weight],
    config: &SuiteConfig,
) -> Result<Vec<CheckResult>> {
    config.grids.validate()?;
    validate_s_grid(&config.s_grid())?;
    for &p in &config.doob_p {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::param("p", p, "must be > 1"));
        }
    }
    let per_weight: Vec<Result<Vec<CheckResult>>> = weights
        .par_iter()
        .map(|w| suite_for(f, w, config))
        .collect();
    let mut out = Vec::new();
    for r in per_weight {
        out.extend(r?);
    }
    out.sort_by(|a, b| a.check.cmp(&b.check));
    Ok(out)
}

/// Recomputes the slack of the instance named by `result.witness`.
pub fn replay(
    f: &Filtration,
    w: &Weight,
    result: &CheckResult,
    config: &SuiteConfig,
) -> Result<f64> {
    let wit = &result.witness;
    if wit.params.is_empty() && result.instances == 0 {
        return Ok(f64::INFINITY);
    }
    let (l, r) = match result.check.as_str() {
        "lemma_slimit" => slimit_sides(&Evaluator::new(f, w)?, wit)?,
        "doob_local" => {
            let (n, i) = wit.at()?;
            let g = suite_function(w, wit.param("fn")?);
            let star = tailed_maximal(f, &g, n)?;
            let leaves: Vec<usize> = f.atom(n, i)?.leaves().collect();
            doob_local_eval(
                f,
                &g,
                &star,
                &leaves,
                wit.param("lambda")?,
                wit.param("left")? != 0.0,
            )
        }
        "conditional_doob" => {
            let (n, i) = wit.at()?;
            conditional_doob_sides(f, &suite_function(w, wit.param("fn")?), n, wit.param("p")?)?
                .get(i)
                .copied()
                .ok_or(Error::AtomOutOfRange { level: n, atom: i })?
        }
        "crossing_decay" => crossing_replay(f, w, wit)?,
        check => {
            let ev = Evaluator::new(f, w)?;
            let mut report = full_report(f, w, &config.grids)?;
            if config.corrupt {
                report = corrupted(report);
            }
            lattice_sides(
                check,
                &Constants {
                    ev: &ev,
                    report: &report,
                },
                wit,
            )?
        }
    };
    Ok(slack(l, r))
}

/// One JSON object per line.
pub fn to_json_lines(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("results serialize"));
        out.push('\n');
    }
    out
}

/// The built-in random suite: log-normal weights with `σ` cycling through
/// 0.25, 0.5 and 1, each seeded from `seed`.
pub fn builtin_weights(f: &Filtration, count: usize, seed: u64) -> Result<Vec<Weight>> {
    const SIGMAS: [f64; 3] = [0.25, 0.5, 1.0];
    (0..count)
        .map(|i| {
            let sigma = SIGMAS[i % SIGMAS.len()];
            let w = random_weight(f, Family::Lognormal { sigma }, derive_seed(seed, i as u64))?;
            Ok(w.with_name(format!("lognormal-{sigma}-{i}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2_w13() -> (Filtration, Weight) {
        (
            Filtration::dyadic(1).unwrap(),
            Weight::new("w13", vec![1.0, 3.0]).unwrap(),
        )
    }

    #[test]
    fn doob_local_example() {
        let f = Filtration::dyadic(1).unwrap();
        let (l, r) = doob_local_sides(&f, &[1.0, 3.0], 0, 2.5, false, &[true, true]).unwrap();
        assert_eq!(l, 0.5);
        assert!((r - 1.2).abs() < 1e-15);
        let zero = check_doob_local(&f, &[0.0, 0.0], 0, &[true, true]).unwrap();
        assert!(zero.passed);
        assert_eq!(zero.instances, 0);
        let d2 = Filtration::dyadic(2).unwrap();
        assert!(matches!(
            check_doob_local(&d2, &[1.0, 2.0, 3.0, 4.0], 1, &[true, false, false, false]),
            Err(Error::NotMeasurable { level: 1 })
        ));
    }

    #[test]
    fn conditional_doob_example() {
        let f = Filtration::dyadic(1).unwrap();
        let sides = conditional_doob_sides(&f, &[1.0, 3.0], 0, 2.0).unwrap();
        assert_eq!(sides, vec![(6.5, 20.0)]);
        let ones = conditional_doob_sides(&f, &[1.0, 1.0], 0, 3.0).unwrap();
        assert_eq!(ones[0].0, 1.0);
        assert!(check_conditional_doob(&f, &[1.0, 3.0], 0, 1.0).is_err());
        assert!(check_conditional_doob(&f, &[-1.0, 3.0], 0, 2.0).is_err());
    }

    #[test]
    fn slimit_on_f2_w13() {
        let (f, w) = f2_w13();
        let r = check_lemma_slimit(&f, &w, &[0.5, 0.1, 0.001]).unwrap();
        assert!(r.passed, "{r:?}");
        let ev = Evaluator::new(&f, &w).unwrap();
        let (m, g) = ev.s_mean_and_geometric(0, 0, 0.001);
        let gap = (m - g) / g;
        assert!(gap <= 0.001 * 3f64.ln().powi(2) / 2.0 * 1.01, "{gap}");
        assert!(gap <= gap_bound(&ev, 0, 0, 0.001));
        assert!(check_lemma_slimit(&f, &w, &[0.1, 0.5]).is_err());
        assert!(check_lemma_slimit(&f, &w, &[]).is_err());
        assert!(check_lemma_slimit(&f, &w, &[1.5]).is_err());
    }

    #[test]
    fn crossing_decay_on_f2_w13() {
        let (f, w) = f2_w13();
        assert_eq!(crossing_step(2.0, 0.75), 2);
        let beta = Evaluator::new(&f, &w)
            .unwrap()
            .estimate(Estimator::Am(0.75))
            .unwrap()
            .value;
        let r = check_crossing_decay(&f, &w, 0, 0.75, beta, 2.0).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(check_crossing_decay(&f, &w, 0, 0.75, beta, 1.5).is_err());
        assert!(check_crossing_decay(&f, &w, 0, 0.75, 0.5, 2.0).is_err());
        let masses = crossing_masses(&f, &w, 0, 1).unwrap();
        // ω-mass of leaf b is 3/4
        assert_eq!(masses[0], vec![1.0, 0.75, 0.0]);
    }

    #[test]
    fn constant_weight_passes_everything() {
        let f = Filtration::dyadic(3).unwrap();
        let w = Weight::uniform("one", &f);
        let results = run_suite(&f, std::slice::from_ref(&w), &SuiteConfig::default()).unwrap();
        assert_eq!(results.len(), 4 + LATTICE_CHECKS.len());
        for r in &results {
            assert!(r.passed, "{r:?}");
            assert!(r.worst_slack >= 0.0, "{r:?}");
        }
    }

    #[test]
    fn corrupt_report_fails_lattice_a() {
        let (f, w) = f2_w13();
        let config = SuiteConfig {
            corrupt: true,
            ..SuiteConfig::default()
        };
        let results = run_suite(&f, std::slice::from_ref(&w), &config).unwrap();
        let a = results.iter().find(|r| r.check == "lattice_a").unwrap();
        assert!(!a.passed);
        let again = replay(&f, &w, a, &config).unwrap();
        assert!((again - a.worst_slack).abs() <= 1e-10);
    }

    #[test]
    fn witnesses_replay() {
        let f = Filtration::dyadic(4).unwrap();
        let weights = builtin_weights(&f, 3, 11).unwrap();
        let config = SuiteConfig::default();
        let results = run_suite(&f, &weights, &config).unwrap();
        for r in &results {
            assert!(r.passed, "{r:?}");
            let w = weights
                .iter()
                .find(|w| w.name() == r.witness.weight)
                .unwrap();
            let s = replay(&f, w, r, &config).unwrap();
            assert!(
                (s - r.worst_slack).abs() <= 1e-10 || s == r.worst_slack,
                "{}: {s} vs {}",
                r.check,
                r.worst_slack
            );
        }
        let text = to_json_lines(&results);
        assert_eq!(text.lines().count(), results.len());
        let back: CheckResult = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, results[0]);
    }
}
