//! Maximal operators, median functions, the regularity constant and the
//! crossing times `τ_k` of the normalized martingale `ω_{n+m}/ω_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{Filtration, Weight, IDENTITY_TOL};

/// `M f = max_{0≤n≤N} |E(f|F_n)|` along each leaf's atom chain.
pub fn doob_maximal(f: &Filtration, g: &[f64]) -> Result<Vec<f64>> {
    tailed_maximal(f, g, 0)
}

/// `M*_n f = max_{n≤m≤N} |E(f|F_m)|` along each leaf's atom chain.
pub fn tailed_maximal(f: &Filtration, g: &[f64], n: usize) -> Result<Vec<f64>> {
    f.check_len(g)?;
    f.check_level(n)?;
    let mut out = vec![0.0f64; f.leaf_count()];
    for m in n..=f.depth() {
        let lf = f.cond_exp(g, m)?;
        for (atom, v) in f.level(m)?.iter().zip(&lf.values) {
            let v = v.abs();
            for x in &mut out[atom.leaves()] {
                *x = x.max(v);
            }
        }
    }
    Ok(out)
}

/// Admissible conditional medians per atom of one level.
///
/// Every `m` in `[min[i], max[i]]` satisfies both
/// `E(χ{ω>m}|F_n) ≤ 1/2` and `E(χ{ω<m}|F_n) ≤ 1/2` on atom `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianInterval {
    pub level: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn median_function(f: &Filtration, w: &Weight, n: usize) -> Result<MedianInterval> {
    f.check_len(w.values())?;
    let level = f.level(n)?;
    let omega = w.values();
    let masses = f.masses();
    let mut min = Vec::with_capacity(level.len());
    let mut max = Vec::with_capacity(level.len());
    let mut order: Vec<usize> = Vec::new();
    for atom in level {
        order.clear();
        order.extend(atom.leaves());
        order.sort_by(|&a, &b| omega[a].total_cmp(&omega[b]).then(a.cmp(&b)));
        let (lo, hi) = median_bounds(&order, omega, masses, atom.mass);
        min.push(lo);
        max.push(hi);
    }
    Ok(MedianInterval { level: n, min, max })
}

/// `order` sorts the atom's leaves by value. The lower end is the first value
/// whose cumulative mass reaches one half, the upper end the first value whose
/// cumulative mass exceeds one half.
fn median_bounds(order: &[usize], omega: &[f64], masses: &[f64], total: f64) -> (f64, f64) {
    let half = 0.5;
    let mut cum = 0.0;
    let mut lo = None;
    let mut i = 0;
    while i < order.len() {
        let v = omega[order[i]];
        while i < order.len() && omega[order[i]] == v {
            cum += masses[order[i]] / total;
            i += 1;
        }
        if lo.is_none() && cum >= half - IDENTITY_TOL {
            lo = Some(v);
        }
        if cum > half + IDENTITY_TOL {
            return (lo.unwrap_or(v), v);
        }
    }
    let last = omega[order[order.len() - 1]];
    (lo.unwrap_or(last), last)
}

/// Location of an extremal value: level and atom index within the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AtomRef {
    pub level: usize,
    pub atom: usize,
}

/// Smallest `C` with `ω_{n-1}/C ≤ ω_n ≤ C ω_{n-1}` for all `n ≥ 1`.
///
/// Returns 1 on a depth-0 space. The witness is the child atom where the
/// extreme ratio occurs.
pub fn regularity_constant(f: &Filtration, w: &Weight) -> Result<(f64, Option<AtomRef>)> {
    f.check_len(w.values())?;
    let mut best = 1.0;
    let mut witness = None;
    let mut parent = w.level_mean(f, 0)?;
    for n in 1..=f.depth() {
        let means = w.level_mean(f, n)?;
        for (i, atom) in f.level(n)?.iter().enumerate() {
            let p = parent.values[atom.parent.expect("non-root atom has a parent")];
            let c = means.values[i];
            let r = (c / p).max(p / c);
            if r > best {
                best = r;
                witness = Some(AtomRef { level: n, atom: i });
            }
        }
        parent = means;
    }
    Ok((best, witness))
}

/// Crossing times of `ω̃_m = E(ω|F_{n+m}) / E(ω|F_n)` through the thresholds
/// `2^{kL}/2`.
///
/// `times[k][leaf]` is the offset `m` of the first level `n+m` at which the
/// leaf's chain exceeds threshold `k`, or [`CrossingTimes::infinity`] if it
/// never does. The last row is entirely infinite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingTimes {
    pub base: usize,
    pub step: u32,
    pub infinity: usize,
    pub times: Vec<Vec<usize>>,
}

impl CrossingTimes {
    pub fn threshold(&self, k: usize) -> f64 {
        crossing_threshold(k, self.step)
    }

    pub fn is_finite(&self, k: usize, leaf: usize) -> bool {
        self.times
            .get(k)
            .is_some_and(|row| row[leaf] < self.infinity)
    }

    /// Number of rows `τ_0, …, τ_K`; `τ_K ≡ ∞`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn crossing_threshold(k: usize, step: u32) -> f64 {
    0.5 * 2f64.powf(k as f64 * step as f64)
}

pub fn crossing_times(f: &Filtration, w: &Weight, n: usize, step: u32) -> Result<CrossingTimes> {
    f.check_len(w.values())?;
    f.check_level(n)?;
    if step < 1 {
        return Err(Error::param("L", step as f64, "must be at least 1"));
    }
    let infinity = f.depth() + 1;
    let base = w.level_mean(f, n)?;

    // ratio per (offset, leaf), computed level by level
    let mut ratios: Vec<Vec<f64>> = Vec::with_capacity(f.depth() - n + 1);
    for level in n..=f.depth() {
        let means = w.level_mean(f, level)?;
        let mut row = vec![0.0; f.leaf_count()];
        for (atom, &m) in f.level(level)?.iter().zip(&means.values) {
            let anc = f.atom_of(n, atom.start)?;
            let r = m / base.values[anc];
            row[atom.leaves()].fill(r);
        }
        ratios.push(row);
    }

    let exceeds = |r: f64, k: usize| r > crossing_threshold(k, step) * (1.0 + IDENTITY_TOL);
    let mut times = Vec::new();
    let mut k = 0;
    loop {
        let mut row = vec![infinity; f.leaf_count()];
        let mut any = false;
        for (leaf, t) in row.iter_mut().enumerate() {
            if let Some(m) = ratios.iter().position(|r| exceeds(r[leaf], k)) {
                *t = m;
                any = true;
            }
        }
        times.push(row);
        if !any {
            break;
        }
        k += 1;
    }
    Ok(CrossingTimes {
        base: n,
        step,
        infinity,
        times,
    })
}
