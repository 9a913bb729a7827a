//! Finite probability spaces carrying a filtration.
//!
//! A [`Filtration`] is a rooted tree of atoms. Level `n` is the partition
//! generating `F_n`; level 0 is the single root atom and the deepest level
//! consists of the leaves. Leaves are stored in depth-first order, so every
//! atom covers a contiguous range of leaf indices. Atom ids are the pair
//! `(level, index)` with `index` counted left to right inside the level, which
//! coincides with preorder order and is stable across runs.
//!
//! Leaves shallower than the maximal depth are carried down unchanged, so a
//! level may repeat the previous partition.

mod document;

pub use document::{parse_document, Document, Node};

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance used for exact identities on masses.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Largest depth accepted by [`Filtration::dyadic`].
pub const MAX_DYADIC_DEPTH: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub start: usize,
    pub end: usize,
    pub mass: f64,
    pub parent: Option<usize>,
    /// Indices of the children at the next level.
    pub children: Range<usize>,
}

impl Atom {
    pub fn leaves(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    ids: Vec<String>,
    masses: Vec<f64>,
    levels: Vec<Vec<Atom>>,
}

/// One value per atom of a fixed level: the representation of `E(f|F_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelFunction {
    pub level: usize,
    pub values: Vec<f64>,
}

/// A strictly positive function on the leaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weight {
    name: String,
    values: Vec<f64>,
    normalized: bool,
}

impl Filtration {
    /// Uniform binary tree with `2^depth` leaves of mass `2^-depth`.
    pub fn dyadic(depth: usize) -> Result<Self> {
        if depth > MAX_DYADIC_DEPTH {
            return Err(Error::DepthOutOfRange(depth));
        }
        let count = 1usize << depth;
        let mass = 1.0 / count as f64;
        let ids = (0..count)
            .map(|i| {
                if depth == 0 {
                    "root".to_string()
                } else {
                    format!("{:0width$b}", i, width = depth)
                }
            })
            .collect();
        let mut levels = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let atoms = 1usize << n;
            let span = count >> n;
            let level = (0..atoms)
                .map(|i| Atom {
                    start: i * span,
                    end: (i + 1) * span,
                    mass: span as f64 * mass,
                    parent: if n == 0 { None } else { Some(i / 2) },
                    children: if n == depth { 0..0 } else { 2 * i..2 * i + 2 },
                })
                .collect();
            levels.push(level);
        }
        Ok(Filtration {
            ids,
            masses: vec![mass; count],
            levels,
        })
    }

    /// Builds a filtration from leaves in depth-first order together with the
    /// leaf ranges of each level. Masses are normalized to total one.
    pub(crate) fn from_ranges(
        ids: Vec<String>,
        masses: Vec<f64>,
        ranges: Vec<Vec<Range<usize>>>,
    ) -> Result<Self> {
        for (id, &m) in ids.iter().zip(&masses) {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NonPositiveMass {
                    id: id.clone(),
                    mass: m,
                });
            }
        }
        let total: f64 = masses.iter().sum();
        let masses: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let prefix = prefix_sums(&masses);

        let mut levels: Vec<Vec<Atom>> = ranges
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|r| Atom {
                        start: r.start,
                        end: r.end,
                        mass: prefix[r.end] - prefix[r.start],
                        parent: None,
                        children: 0..0,
                    })
                    .collect()
            })
            .collect();

        // Link consecutive levels; both are ordered left to right, so the
        // children of an atom are a contiguous run at the next level.
        for n in 1..levels.len() {
            let (upper, lower) = levels.split_at_mut(n);
            let parents = &mut upper[n - 1];
            let children = &mut lower[0];
            let mut p = 0;
            for (c, child) in children.iter_mut().enumerate() {
                while parents[p].end <= child.start {
                    p += 1;
                }
                debug_assert!(parents[p].start <= child.start && child.end <= parents[p].end);
                child.parent = Some(p);
                if parents[p].children.is_empty() {
                    parents[p].children = c..c + 1;
                } else {
                    parents[p].children.end = c + 1;
                }
            }
        }

        Ok(Filtration {
            ids,
            masses,
            levels,
        })
    }

    /// Depth `N`: the index of the finest level.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.masses.len()
    }

    pub fn leaf_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn leaf_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Leaf masses, normalized to total one.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn level(&self, n: usize) -> Result<&[Atom]> {
        self.levels
            .get(n)
            .map(Vec::as_slice)
            .ok_or(Error::LevelOutOfRange {
                level: n,
                depth: self.depth(),
            })
    }

    pub fn levels(&self) -> &[Vec<Atom>] {
        &self.levels
    }

    pub fn atom(&self, n: usize, index: usize) -> Result<&Atom> {
        self.level(n)?.get(index).ok_or(Error::AtomOutOfRange {
            level: n,
            atom: index,
        })
    }

    /// Index of the level-`n` atom containing `leaf`.
    pub fn atom_of(&self, n: usize, leaf: usize) -> Result<usize> {
        let level = self.level(n)?;
        let i = level.partition_point(|a| a.end <= leaf);
        Ok(i)
    }

    pub(crate) fn check_level(&self, n: usize) -> Result<()> {
        self.level(n).map(|_| ())
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.leaf_count() {
            return Err(Error::LengthMismatch {
                expected: self.leaf_count(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `E(f|F_n)`: the `μ`-average of `f` over each level-`n` atom.
    pub fn cond_exp(&self, f: &[f64], n: usize) -> Result<LevelFunction> {
        self.check_len(f)?;
        let level = self.level(n)?;
        let values = level.iter().map(|a| self.average(a, |i| f[i])).collect();
        Ok(LevelFunction { level: n, values })
    }

    /// `E_ω(f|F_n) = E(fω|F_n) / E(ω|F_n)`.
    pub fn weighted_cond_exp(&self, w: &Weight, f: &[f64], n: usize) -> Result<LevelFunction> {
        self.check_len(f)?;
        self.check_len(w.values())?;
        let level = self.level(n)?;
        let omega = w.values();
        let values = level
            .iter()
            .map(|a| {
                let mut num = 0.0;
                let mut den = 0.0;
                for i in a.leaves() {
                    let wm = omega[i] * self.masses[i];
                    num += f[i] * wm;
                    den += wm;
                }
                assert!(den > 0.0, "weight average vanished on an atom");
                num / den
            })
            .collect();
        Ok(LevelFunction { level: n, values })
    }

    /// Rebuilds the space under `ω dμ` with the dual weight `1/ω`.
    ///
    /// Conditional expectations on the returned filtration are `E_ω` on the
    /// original one; the returned weight is normalized under the new measure.
    pub fn swap_measure(&self, w: &Weight) -> Result<(Filtration, Weight)> {
        self.check_len(w.values())?;
        let omega = w.values();
        let masses: Vec<f64> = self.masses.iter().zip(omega).map(|(m, o)| m * o).collect();
        let ranges = self
            .levels
            .iter()
            .map(|l| l.iter().map(Atom::leaves).collect())
            .collect();
        let swapped = Filtration::from_ranges(self.ids.clone(), masses, ranges)?;
        let dual = Weight::new(w.name(), omega.iter().map(|o| 1.0 / o).collect())?;
        let dual = dual.normalized(&swapped)?;
        Ok((swapped, dual))
    }

    /// `μ`-average over one atom of a leaf-indexed quantity.
    pub(crate) fn average(&self, atom: &Atom, f: impl Fn(usize) -> f64) -> f64 {
        let s: f64 = atom.leaves().map(|i| f(i) * self.masses[i]).sum();
        s / atom.mass
    }

    /// Expands a level function to one value per leaf.
    pub fn lift(&self, lf: &LevelFunction) -> Result<Vec<f64>> {
        let level = self.level(lf.level)?;
        if lf.values.len() != level.len() {
            return Err(Error::LengthMismatch {
                expected: level.len(),
                got: lf.values.len(),
            });
        }
        let mut out = vec![0.0; self.leaf_count()];
        for (a, &v) in level.iter().zip(&lf.values) {
            out[a.leaves()].fill(v);
        }
        Ok(out)
    }

    /// Expectation of `f` under `μ`.
    pub fn expectation(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.masses).map(|(x, m)| x * m).sum()
    }

    /// Whether the leaf indicator `set` is a union of level-`n` atoms.
    pub fn is_measurable(&self, set: &[bool], n: usize) -> Result<bool> {
        if set.len() != self.leaf_count() {
            return Err(Error::LengthMismatch {
                expected: self.leaf_count(),
                got: set.len(),
            });
        }
        Ok(self.level(n)?.iter().all(|a| {
            let first = set[a.start];
            set[a.leaves()].iter().all(|&x| x == first)
        }))
    }
}

fn prefix_sums(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for x in xs {
        acc += x;
        out.push(acc);
    }
    out
}

impl Weight {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveWeight {
                    weight: name,
                    leaf: i.to_string(),
                    value: v,
                });
            }
        }
        Ok(Weight {
            name,
            values,
            normalized: false,
        })
    }

    /// The constant weight `ω ≡ 1`.
    pub fn uniform(name: impl Into<String>, f: &Filtration) -> Self {
        Weight {
            name: name.into(),
            values: vec![1.0; f.leaf_count()],
            normalized: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rescales so that `E(ω) = 1` on `f`.
    pub fn normalized(&self, f: &Filtration) -> Result<Self> {
        f.check_len(&self.values)?;
        let mean = f.expectation(&self.values);
        Ok(Weight {
            name: self.name.clone(),
            values: self.values.iter().map(|v| v / mean).collect(),
            normalized: true,
        })
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Weight::new(
            self.name.clone(),
            self.values.iter().map(|v| v * c).collect(),
        )
    }

    /// `ω_n = E(ω|F_n)`.
    pub fn level_mean(&self, f: &Filtration, n: usize) -> Result<LevelFunction> {
        f.cond_exp(&self.values, n)
    }
}
