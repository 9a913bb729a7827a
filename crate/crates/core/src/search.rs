//! Seeded weight generators and an annealed hill climber that looks for
//! weights where one constant is large relative to another.
//!
//! Everything is a pure function of the seed: the same [`SearchSpec`] always
//! produces the same [`SearchResult`], byte for byte once serialized.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::characterizations::{full_report, ConstantReport, Estimator, Evaluator, Grids};
use crate::error::{Error, Result};
use crate::filtration::{parse_document, Filtration, Weight, MAX_DYADIC_DEPTH};

/// Relative slack allowed when checking a constraint `X ≤ c`.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Per-step decay of the annealing temperature.
const COOLING: f64 = 0.999;

/// `T_0` as a fraction of the initial objective.
const INITIAL_TEMPERATURE: f64 = 0.1;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 output function applied to `x + γ`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th derived stream of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA)))
}

/// Random weight families. All are normalized to `E(ω) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// i.i.d. `exp(σ g)` per leaf with `g` standard normal.
    Lognormal { sigma: f64 },
    /// Leaf `i` (in leaf order) gets `r^i`.
    Geometric { ratio: f64 },
    /// One seeded leaf at `height`, every other leaf at 1.
    Spike { height: f64 },
}

pub fn random_weight(f: &Filtration, family: Family, seed: u64) -> Result<Weight> {
    let k = f.leaf_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = match family {
        Family::Lognormal { sigma } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::param("sigma", sigma, "must be finite and >= 0"));
            }
            (0..k)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    (sigma * g).exp()
                })
                .collect()
        }
        Family::Geometric { ratio } => {
            if !(ratio > 0.0 && ratio.is_finite()) {
                return Err(Error::param("ratio", ratio, "must be finite and > 0"));
            }
            (0..k).map(|i| ratio.powi(i as i32)).collect()
        }
        Family::Spike { height } => {
            if !(height > 0.0 && height.is_finite()) {
                return Err(Error::param("height", height, "must be finite and > 0"));
            }
            let at = rng.random_range(0..k);
            (0..k).map(|i| if i == at { height } else { 1.0 }).collect()
        }
    };
    let name = match family {
        Family::Lognormal { sigma } => format!("lognormal-{sigma}-{seed}"),
        Family::Geometric { ratio } => format!("geometric-{ratio}"),
        Family::Spike { height } => format!("spike-{height}-{seed}"),
    };
    Weight::new(name, values)?.normalized(f)
}

/// Quantity to maximize: one constant or the ratio of two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Single(Estimator),
    Ratio(Estimator, Estimator),
}

impl Objective {
    fn estimators(&self) -> Vec<Estimator> {
        match *self {
            Objective::Single(e) => vec![e],
            Objective::Ratio(a, b) => vec![a, b],
        }
    }

    pub fn evaluate(&self, ev: &Evaluator) -> f64 {
        match *self {
            Objective::Single(e) => ev.estimate_unchecked(e).value,
            Objective::Ratio(a, b) => {
                ev.estimate_unchecked(a).value / ev.estimate_unchecked(b).value
            }
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Single(e) => write!(f, "{e}"),
            Objective::Ratio(a, b) => write!(f, "{a}/{b}"),
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            None => Ok(Objective::Single(s.parse()?)),
            Some((a, b)) => Ok(Objective::Ratio(a.parse()?, b.parse()?)),
        }
    }
}

/// Upper bound `estimator ≤ max`, written `name[:param]<=value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub estimator: Estimator,
    pub max: f64,
}

impl Constraint {
    pub fn holds(&self, value: f64) -> bool {
        value <= self.max + CONSTRAINT_TOL * self.max.abs().max(1.0)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<={}", self.estimator, self.max)
    }
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .split_once("<=")
            .ok_or_else(|| Error::InvalidSpec(format!("constraint `{s}` is not NAME<=VALUE")))?;
        let max: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidSpec(format!("constraint bound `{value}` is not a number"))
        })?;
        if !max.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "constraint bound `{value}` is not finite"
            )));
        }
        Ok(Constraint {
            estimator: name.parse()?,
            max,
        })
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                String::deserialize(d)?
                    .parse()
                    .map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(Objective);
string_serde!(Constraint);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiltrationSpec {
    Dyadic {
        depth: usize,
    },
    /// An input document; only its tree is used.
    Document(serde_json::Value),
}

impl FiltrationSpec {
    pub fn build(&self) -> Result<Filtration> {
        match self {
            FiltrationSpec::Dyadic { depth } => Filtration::dyadic(*depth),
            FiltrationSpec::Document(v) => Ok(parse_document(&v.to_string())?.filtration),
        }
    }
}

fn default_restarts() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub filtration: FiltrationSpec,
    pub objective: Objective,
    #[serde(default)]
    pub constraint: Option<Constraint>,
    /// Objective evaluations per restart, the start included.
    pub budget: usize,
    pub seed: u64,
    /// Standard deviation of one log-weight proposal step.
    pub scale: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

impl SearchSpec {
    pub fn new(depth: usize, objective: Objective) -> Self {
        SearchSpec {
            filtration: FiltrationSpec::Dyadic { depth },
            objective,
            constraint: None,
            budget: 1000,
            seed: 0,
            scale: 0.5,
            restarts: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::param(
                "budget",
                self.budget as f64,
                "must be at least 1",
            ));
        }
        if self.restarts < 1 {
            return Err(Error::param(
                "restarts",
                self.restarts as f64,
                "must be at least 1",
            ));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::param("scale", self.scale, "must be finite and > 0"));
        }
        for e in self.objective.estimators() {
            e.validate()?;
        }
        if let Some(c) = self.constraint {
            c.estimator.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub objective: Objective,
    #[serde(default)]
    pub constraint: Option<Constraint>,
    /// Seed of the restart that produced the optimum.
    pub seed: u64,
    pub best_objective: f64,
    /// Leaf values of the best weight, normalized to `E(ω) = 1`.
    pub best_weight: Vec<f64>,
    /// Best objective after each evaluation; nondecreasing.
    pub trace: Vec<f64>,
    pub accepted: usize,
    /// Every constant at the optimum.
    pub constants: ConstantReport,
}

impl SearchResult {
    /// `iteration,best_objective` rows with a header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,best_objective\n");
        for (i, v) in self.trace.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }
}

struct Run {
    seed: u64,
    best: f64,
    best_logs: Vec<f64>,
    trace: Vec<f64>,
    accepted: usize,
}

/// Objective at `logs`, or `None` when the constraint fails or the
/// objective is NaN.
fn score(f: &Filtration, spec: &SearchSpec, logs: &[f64]) -> Option<f64> {
    let w = Weight::new("search", logs.iter().map(|x| x.exp()).collect()).ok()?;
    let ev = Evaluator::new(f, &w).ok()?;
    if let Some(c) = spec.constraint {
        if !c.holds(ev.estimate_unchecked(c.estimator).value) {
            return None;
        }
    }
    let v = spec.objective.evaluate(&ev);
    (!v.is_nan()).then_some(v)
}

fn anneal(f: &Filtration, spec: &SearchSpec, start: &[f64], seed: u64) -> Result<Run> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, spec.scale).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let k = f.leaf_count();
    let mut trace = Vec::with_capacity(spec.budget);

    // find a feasible start, falling back to random points
    let mut current = start.to_vec();
    let mut value = score(f, spec, &current);
    trace.push(value.unwrap_or(f64::NEG_INFINITY));
    while value.is_none() && trace.len() < spec.budget {
        for x in current.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        value = score(f, spec, &current);
        trace.push(value.unwrap_or(f64::NEG_INFINITY));
    }
    let Some(mut value) = value else {
        return Err(Error::Infeasible(format!(
            "no feasible start for `{}` in {} evaluations",
            spec.constraint.map(|c| c.to_string()).unwrap_or_default(),
            spec.budget
        )));
    };

    let t0 = INITIAL_TEMPERATURE * value.abs();
    let mut best = value;
    let mut best_logs = current.clone();
    let mut accepted = 0;
    let mut proposal = current.clone();
    let mut temperature = t0;
    while trace.len() < spec.budget {
        temperature *= COOLING;
        proposal.copy_from_slice(&current);
        let leaf = rng.random_range(0..k);
        proposal[leaf] += step.sample(&mut rng);
        let u: f64 = rng.random();
        if let Some(v) = score(f, spec, &proposal) {
            let delta = v - value;
            let take = delta >= 0.0 || (temperature > 0.0 && u < (delta / temperature).exp());
            if take {
                current.copy_from_slice(&proposal);
                value = v;
                accepted += 1;
                if v > best {
                    best = v;
                    best_logs.copy_from_slice(&current);
                }
            }
        }
        trace.push(best);
    }
    Ok(Run {
        seed,
        best,
        best_logs,
        trace,
        accepted,
    })
}

/// Runs the annealer from `ω ≡ 1`.
pub fn optimize(spec: &SearchSpec) -> Result<SearchResult> {
    let f = spec.filtration.build()?;
    optimize_on(&f, spec, None)
}

/// Runs the annealer on `f`, starting from `start` (leaf values) or `ω ≡ 1`.
pub fn optimize_on(
    f: &Filtration,
    spec: &SearchSpec,
    start: Option<&[f64]>,
) -> Result<SearchResult> {
    spec.validate()?;
    let start_logs: Vec<f64> = match start {
        Some(v) => {
            f.check_len(v)?;
            Weight::new("start", v.to_vec())?;
            v.iter().map(|x| x.ln()).collect()
        }
        None => vec![0.0; f.leaf_count()],
    };
    let runs: Vec<Result<Run>> = (0..spec.restarts as u64)
        .into_par_iter()
        .map(|r| anneal(f, spec, &start_logs, derive_seed(spec.seed, r)))
        .collect();
    let mut winner: Option<Run> = None;
    let mut last_err = None;
    for run in runs {
        match run {
            Ok(run) => {
                let better = match &winner {
                    None => true,
                    Some(w) => run.best > w.best || (run.best == w.best && run.seed < w.seed),
                };
                if better {
                    winner = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let run = match winner {
        Some(r) => r,
        None => return Err(last_err.expect("at least one restart")),
    };
    let w = Weight::new("best", run.best_logs.iter().map(|x| x.exp()).collect())?.normalized(f)?;
    let constants = full_report(f, &w, &Grids::default())?;
    Ok(SearchResult {
        objective: spec.objective,
        constraint: spec.constraint,
        seed: run.seed,
        best_objective: run.best,
        best_weight: w.values().to_vec(),
        trace: run.trace,
        accepted: run.accepted,
        constants,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub depth: usize,
    pub seed: u64,
    pub best_objective: f64,
}

/// Optimizes `template` on dyadic filtrations of every depth in `depths`.
///
/// Each depth is seeded from the template seed and warm-started from the
/// previous optimum copied onto both children of every leaf, which keeps
/// every constant unchanged. Entries are therefore nondecreasing in depth.
pub fn gap_scan(template: &SearchSpec, depths: RangeInclusive<usize>) -> Result<Vec<GapRow>> {
    if *depths.end() > MAX_DYADIC_DEPTH || depths.is_empty() {
        return Err(Error::InvalidSpec(format!(
            "scan depths {}..{} must be a nonempty range within 0..={MAX_DYADIC_DEPTH}",
            depths.start(),
            depths.end()
        )));
    }
    let mut rows = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    for depth in depths {
        let f = Filtration::dyadic(depth)?;
        let spec = SearchSpec {
            filtration: FiltrationSpec::Dyadic { depth },
            seed: derive_seed(template.seed, depth as u64),
            ..template.clone()
        };
        let start = previous.as_ref().map(|v| lift_dyadic(v));
        let result = optimize_on(&f, &spec, start.as_deref())?;
        rows.push(GapRow {
            depth,
            seed: spec.seed,
            best_objective: result.best_objective,
        });
        previous = Some(result.best_weight);
    }
    Ok(rows)
}

/// `depth,seed,best_objective` rows with a header.
pub fn gap_csv(rows: &[GapRow]) -> String {
    let mut out = String::from("depth,seed,best_objective\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.depth, r.seed, r.best_objective));
    }
    out
}

fn lift_dyadic(values: &[f64]) -> Vec<f64> {
    values.iter().flat_map(|&v| [v, v]).collect()
}
