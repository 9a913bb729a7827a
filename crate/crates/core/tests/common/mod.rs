//! Brute-force oracles shared by the integration tests.
//!
//! Everything here works from leaf masses, leaf values and atom leaf ranges
//! only, so it shares no evaluation code with the library.

#![allow(dead_code)]

use ainfty::filtration::{parse_document, Filtration, Weight};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

pub const F2_W13: &str = r#"{"dyadic": {"depth": 1, "weights": {"w13": [1, 3]}}}"#;

/// Leaf indices of every atom, level by level.
pub fn atoms(f: &Filtration) -> Vec<Vec<Vec<usize>>> {
    f.levels()
        .iter()
        .map(|l| l.iter().map(|a| a.leaves().collect()).collect())
        .collect()
}

/// `μ`-average of `g` over `leaves`.
pub fn avg(f: &Filtration, leaves: &[usize], g: impl Fn(usize) -> f64) -> f64 {
    let mu = f.masses();
    let m: f64 = leaves.iter().map(|&i| mu[i]).sum();
    leaves.iter().map(|&i| mu[i] * g(i)).sum::<f64>() / m
}

/// Max over atoms of `h(leaves)`.
pub fn max_over_atoms(f: &Filtration, h: impl Fn(&[usize]) -> f64) -> f64 {
    atoms(f)
        .iter()
        .flatten()
        .map(|a| h(a))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Every nonempty subset of an atom as `(μ-fraction, ω-fraction)`.
pub fn subset_fractions(f: &Filtration, w: &Weight, leaves: &[usize]) -> Vec<(f64, f64)> {
    let mu = f.masses();
    let om = w.values();
    let tm: f64 = leaves.iter().map(|&i| mu[i]).sum();
    let tw: f64 = leaves.iter().map(|&i| mu[i] * om[i]).sum();
    (1u64..1 << leaves.len())
        .map(|mask| {
            let mut a = 0.0;
            let mut b = 0.0;
            for (j, &i) in leaves.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    a += mu[i];
                    b += mu[i] * om[i];
                }
            }
            (a / tm, b / tw)
        })
        .collect()
}

/// Largest `ω`-fraction of a subset with `μ`-fraction at most `alpha`.
pub fn am_oracle(f: &Filtration, w: &Weight, alpha: f64) -> f64 {
    max_over_atoms(f, |a| {
        subset_fractions(f, w, a)
            .into_iter()
            .filter(|&(t, _)| t <= alpha + 1e-12)
            .map(|(_, h)| h)
            .fold(0.0, f64::max)
    })
}

/// [`am_oracle`] with the roles of the two measures exchanged.
pub fn am_hat_oracle(f: &Filtration, w: &Weight, alpha: f64) -> f64 {
    max_over_atoms(f, |a| {
        subset_fractions(f, w, a)
            .into_iter()
            .filter(|&(_, h)| h <= alpha + 1e-12)
            .map(|(t, _)| t)
            .fold(0.0, f64::max)
    })
}

/// `max E_ω(χ_A|F_n) / E(χ_A|F_n)^ε` over nonempty subsets.
pub fn acf_oracle(f: &Filtration, w: &Weight, eps: f64) -> f64 {
    max_over_atoms(f, |a| {
        subset_fractions(f, w, a)
            .into_iter()
            .map(|(t, h)| h / t.powf(eps))
            .fold(0.0, f64::max)
    })
}

pub fn mean(f: &Filtration, w: &Weight, a: &[usize]) -> f64 {
    avg(f, a, |i| w.values()[i])
}

pub fn ap_oracle(f: &Filtration, w: &Weight, p: f64) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| {
        mean(f, w, a) * avg(f, a, |i| om[i].powf(-1.0 / (p - 1.0))).powf(p - 1.0)
    })
}

pub fn rh_oracle(f: &Filtration, w: &Weight, q: f64) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| avg(f, a, |i| om[i].powf(q)) / mean(f, w, a).powf(q))
}

pub fn aexp_oracle(f: &Filtration, w: &Weight) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| mean(f, w, a) / avg(f, a, |i| om[i].ln()).exp())
}

pub fn asw_oracle(f: &Filtration, w: &Weight, s: f64) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| {
        mean(f, w, a) / avg(f, a, |i| om[i].powf(s)).powf(1.0 / s)
    })
}

pub fn alog_oracle(f: &Filtration, w: &Weight) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| {
        let m = mean(f, w, a);
        avg(f, a, |i| {
            let v = om[i] / m;
            v * v.ln().max(0.0)
        })
    })
}

/// Largest conditional median: the largest leaf value `m` with both
/// `μ(ω > m)` and `μ(ω < m)` at most half the atom.
pub fn amed_oracle(f: &Filtration, w: &Weight) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| {
        let m_max = a
            .iter()
            .map(|&j| om[j])
            .filter(|&m| {
                avg(f, a, |i| (om[i] > m) as u8 as f64) <= 0.5 + 1e-12
                    && avg(f, a, |i| (om[i] < m) as u8 as f64) <= 0.5 + 1e-12
            })
            .fold(f64::NEG_INFINITY, f64::max);
        mean(f, w, a) / m_max
    })
}

/// `M*_n g` per leaf, from chains of atom averages.
pub fn tailed_max_oracle(f: &Filtration, g: &[f64], n: usize) -> Vec<f64> {
    let all = atoms(f);
    let mut out = vec![0.0f64; f.leaf_count()];
    for level in &all[n..] {
        for a in level {
            let v = avg(f, a, |i| g[i]).abs();
            for &i in a {
                out[i] = out[i].max(v);
            }
        }
    }
    out
}

pub fn astar_oracle(f: &Filtration, w: &Weight) -> f64 {
    let all = atoms(f);
    let mut best = f64::NEG_INFINITY;
    for (n, level) in all.iter().enumerate() {
        let star = tailed_max_oracle(f, w.values(), n);
        for a in level {
            best = best.max(avg(f, a, |i| star[i]) / mean(f, w, a));
        }
    }
    best
}

/// `sup_{λ>1} E_ω(χ{ṽ>λ}) / (λ E(χ{ṽ>βλ}))`, evaluated just to the right
/// of every point where either indicator can change.
pub fn alambda_oracle(f: &Filtration, w: &Weight, beta: f64) -> f64 {
    let om = w.values();
    max_over_atoms(f, |a| {
        let m = mean(f, w, a);
        let v: Vec<f64> = a.iter().map(|&i| om[i] / m).collect();
        let mut cands = vec![1.0];
        for &x in &v {
            cands.extend([x, x / beta]);
        }
        let mut best = 0.0f64;
        for c in cands.into_iter().filter(|&c| c >= 1.0) {
            let l = c * (1.0 + 1e-14);
            let num = avg(f, a, |i| om[i] * (om[i] / m > l) as u8 as f64) / m;
            let den = l * avg(f, a, |i| (om[i] / m > beta * l) as u8 as f64);
            if num > 0.0 {
                best = best.max(num / den);
            }
        }
        best
    })
}

/// Largest child/parent or parent/child ratio of consecutive means.
pub fn regularity_oracle(f: &Filtration, w: &Weight) -> f64 {
    let all = atoms(f);
    let mut best = 1.0f64;
    for n in 1..all.len() {
        for child in &all[n] {
            let parent = all[n - 1].iter().find(|p| p.contains(&child[0])).unwrap();
            let (c, p) = (mean(f, w, child), mean(f, w, parent));
            best = best.max(c / p).max(p / c);
        }
    }
    best
}

/// `E_ω(χ{τ_k<∞}|F_n)` per level-`n` atom, where `τ_k` is the first offset at
/// which `E(ω|F_{n+m})/E(ω|F_n)` exceeds `2^{kL}/2`.
pub fn crossing_oracle(f: &Filtration, w: &Weight, n: usize, step: u32) -> Vec<Vec<f64>> {
    let all = atoms(f);
    let om = w.values();
    let mu = f.masses();
    let leaf_mean = |level: usize, leaf: usize| {
        let a = all[level].iter().find(|a| a.contains(&leaf)).unwrap();
        mean(f, w, a)
    };
    all[n]
        .iter()
        .map(|a| {
            let base = mean(f, w, a);
            let peak: Vec<f64> = a
                .iter()
                .map(|&i| {
                    (n..all.len())
                        .map(|l| leaf_mean(l, i) / base)
                        .fold(0.0, f64::max)
                })
                .collect();
            let total: f64 = a.iter().map(|&i| mu[i] * om[i]).sum();
            let mut seq = Vec::new();
            for k in 0.. {
                let t = 0.5 * 2f64.powi((k * step) as i32);
                let hit: f64 = a
                    .iter()
                    .zip(&peak)
                    .filter(|(_, &p)| p > t * (1.0 + 1e-12))
                    .map(|(&i, _)| mu[i] * om[i])
                    .sum();
                seq.push(hit / total);
                if hit == 0.0 {
                    break;
                }
            }
            seq
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive leaf values with logs drawn from `N(0, σ²)`.
pub fn lognormal_values(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).unwrap();
    (0..n).map(|_| (normal.sample(rng)).exp()).collect()
}

fn random_node(rng: &mut ChaCha8Rng, id: String, depth: usize) -> Value {
    if depth == 0 {
        return json!({"id": id, "mass": rng.random_range(0.05..1.0)});
    }
    let k = rng.random_range(1..=3);
    let children: Vec<Value> = (0..k)
        .map(|c| random_node(rng, format!("{id}.{c}"), depth - 1))
        .collect();
    json!({"id": id, "children": children})
}

/// A random filtration of the given depth with one to three children per
/// atom and random leaf masses.
pub fn random_filtration(rng: &mut ChaCha8Rng, depth: usize) -> Filtration {
    let doc = json!({"tree": random_node(rng, "r".into(), depth)});
    parse_document(&doc.to_string()).unwrap().filtration
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
