//! All constants for one weight, with witnesses, in a stable JSON schema.

use rayon::prelude::*;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Estimate, Estimator, Evaluator, ProfileMode, EXACT_LEAF_LIMIT};
use crate::error::{Error, Result};
use crate::filtration::{Filtration, Weight};

/// Schema tag written at the top of every report document.
pub const SCHEMA: &str = "ainfty-report/1";

/// Parameter sample points for the parametrized estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        let unit = vec![0.05, 0.1, 0.25, 0.5, 0.75, 0.9];
        Grids {
            p: vec![1.25, 1.5, 2.0, 3.0, 5.0],
            q: vec![1.25, 1.5, 2.0, 3.0, 5.0],
            s: vec![0.5, 0.2, 0.1, 0.01, 0.001],
            gamma: unit.clone(),
            alpha: unit.clone(),
            beta: unit,
            eps: vec![0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

impl Grids {
    /// Every estimator the report evaluates, in report order.
    pub fn estimators(&self) -> Vec<Estimator> {
        let mut out = vec![Estimator::Regularity];
        out.extend(self.p.iter().map(|&x| Estimator::Ap(x)));
        out.extend(self.q.iter().map(|&x| Estimator::Rh(x)));
        out.push(Estimator::Aexp);
        out.extend(self.s.iter().map(|&x| Estimator::Asw(x)));
        out.extend(self.gamma.iter().map(|&x| Estimator::Acon(x)));
        out.extend(self.alpha.iter().map(|&x| Estimator::Am(x)));
        out.extend(self.alpha.iter().map(|&x| Estimator::AmHat(x)));
        out.extend(self.eps.iter().map(|&x| Estimator::Acf(x)));
        out.extend(self.beta.iter().map(|&x| Estimator::Alambda(x)));
        out.push(Estimator::Alog);
        out.push(Estimator::Amed);
        out.push(Estimator::Astar);
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.estimators().iter().try_for_each(Estimator::validate)
    }
}

/// `(parameter, value)` pairs serialized as a JSON object keyed by the
/// shortest round-trip rendering of the parameter. Non-finite values are
/// written as `null`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamMap(pub Vec<(f64, f64)>);

impl ParamMap {
    pub fn get(&self, param: f64) -> Option<f64> {
        self.0.iter().find(|(p, _)| *p == param).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.iter().copied()
    }

    fn set(&mut self, param: f64, value: f64) {
        match self.0.iter_mut().find(|(p, _)| *p == param) {
            Some(slot) => slot.1 = value,
            None => self.0.push((param, value)),
        }
    }
}

impl Serialize for ParamMap {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(self.0.len()))?;
        for (p, v) in &self.0 {
            map.serialize_entry(&p.to_string(), &crate::nullable::finite(*v))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ParamMap {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ParamMap;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map from parameter to value")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut m: A,
            ) -> std::result::Result<ParamMap, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = m.next_entry::<String, Option<f64>>()? {
                    let p: f64 = k.parse().map_err(serde::de::Error::custom)?;
                    out.push((p, v.unwrap_or(f64::INFINITY)));
                }
                Ok(ParamMap(out))
            }
        }
        de.deserialize_map(V)
    }
}

/// Where one reported constant is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Estimator in `name[:param]` form.
    pub estimator: String,
    pub level: usize,
    pub atom: usize,
    #[serde(with = "crate::nullable")]
    pub value: f64,
    /// False when an envelope profile made the value an upper bound.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub weight: String,
    pub depth: usize,
    pub leaves: usize,
    pub profile_mode: ProfileMode,
    #[serde(with = "crate::nullable")]
    pub regularity: f64,
    pub ap: ParamMap,
    pub rh: ParamMap,
    #[serde(with = "crate::nullable")]
    pub aexp: f64,
    pub asw: ParamMap,
    pub acon: ParamMap,
    pub am: ParamMap,
    pub am_hat: ParamMap,
    pub acf: ParamMap,
    /// 0 means both sides vanish for every `λ > 1`, so any constant works.
    pub alambda: ParamMap,
    #[serde(with = "crate::nullable")]
    pub alog: f64,
    #[serde(with = "crate::nullable")]
    pub amed: f64,
    #[serde(with = "crate::nullable")]
    pub astar: f64,
    pub witnesses: Vec<Witness>,
}

impl ConstantReport {
    fn empty(f: &Filtration, w: &Weight) -> Self {
        let envelope = f
            .levels()
            .iter()
            .flatten()
            .any(|a| a.len() > EXACT_LEAF_LIMIT);
        ConstantReport {
            weight: w.name().to_string(),
            depth: f.depth(),
            leaves: f.leaf_count(),
            profile_mode: if envelope {
                ProfileMode::Envelope
            } else {
                ProfileMode::Exact
            },
            regularity: f64::NAN,
            ap: ParamMap::default(),
            rh: ParamMap::default(),
            aexp: f64::NAN,
            asw: ParamMap::default(),
            acon: ParamMap::default(),
            am: ParamMap::default(),
            am_hat: ParamMap::default(),
            acf: ParamMap::default(),
            alambda: ParamMap::default(),
            alog: f64::NAN,
            amed: f64::NAN,
            astar: f64::NAN,
            witnesses: Vec::new(),
        }
    }

    pub fn get(&self, e: Estimator) -> Option<f64> {
        match e {
            Estimator::Ap(x) => self.ap.get(x),
            Estimator::Rh(x) => self.rh.get(x),
            Estimator::Aexp => Some(self.aexp),
            Estimator::Asw(x) => self.asw.get(x),
            Estimator::Acon(x) => self.acon.get(x),
            Estimator::Am(x) => self.am.get(x),
            Estimator::AmHat(x) => self.am_hat.get(x),
            Estimator::Acf(x) => self.acf.get(x),
            Estimator::Alambda(x) => self.alambda.get(x),
            Estimator::Alog => Some(self.alog),
            Estimator::Amed => Some(self.amed),
            Estimator::Astar => Some(self.astar),
            Estimator::Regularity => Some(self.regularity),
        }
    }

    pub fn set(&mut self, e: Estimator, value: f64) {
        match e {
            Estimator::Ap(x) => self.ap.set(x, value),
            Estimator::Rh(x) => self.rh.set(x, value),
            Estimator::Aexp => self.aexp = value,
            Estimator::Asw(x) => self.asw.set(x, value),
            Estimator::Acon(x) => self.acon.set(x, value),
            Estimator::Am(x) => self.am.set(x, value),
            Estimator::AmHat(x) => self.am_hat.set(x, value),
            Estimator::Acf(x) => self.acf.set(x, value),
            Estimator::Alambda(x) => self.alambda.set(x, value),
            Estimator::Alog => self.alog = value,
            Estimator::Amed => self.amed = value,
            Estimator::Astar => self.astar = value,
            Estimator::Regularity => self.regularity = value,
        }
    }

    /// Re-evaluates every witness on `(f, w)` and returns the largest
    /// discrepancy against both the witness value and the reported constant.
    pub fn witness_discrepancy(&self, f: &Filtration, w: &Weight) -> Result<f64> {
        let ev = Evaluator::new(f, w)?;
        let mut worst = 0.0f64;
        for wit in &self.witnesses {
            let e: Estimator = wit.estimator.parse()?;
            let v = ev.atom_value(e, wit.level, wit.atom)?;
            let reported = self.get(e).ok_or_else(|| {
                Error::InvalidSpec(format!("witness for unreported `{}`", wit.estimator))
            })?;
            for target in [wit.value, reported] {
                let d = if v.is_finite() || target.is_finite() {
                    (v - target).abs()
                } else {
                    0.0
                };
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }
}

/// The top-level analyze output: a schema tag and one report per weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub reports: Vec<ConstantReport>,
}

impl ReportDocument {
    pub fn new(reports: Vec<ConstantReport>) -> Self {
        ReportDocument {
            schema: SCHEMA.to_string(),
            reports,
        }
    }
}

/// Evaluates every estimator on the grids plus the regularity constant.
pub fn full_report(f: &Filtration, w: &Weight, grids: &Grids) -> Result<ConstantReport> {
    grids.validate()?;
    let ev = Evaluator::new(f, w)?;
    Ok(report_from(&ev, grids))
}

pub(crate) fn report_from(ev: &Evaluator, grids: &Grids) -> ConstantReport {
    let jobs = grids.estimators();
    let results: Vec<Estimate> = jobs.par_iter().map(|&e| ev.estimate_unchecked(e)).collect();
    let mut report = ConstantReport::empty(ev.filtration(), ev.weight());
    for (e, r) in jobs.iter().zip(results) {
        report.set(*e, r.value);
        report.witnesses.push(Witness {
            estimator: e.to_string(),
            level: r.level,
            atom: r.atom,
            value: r.value,
            exact: r.exact,
        });
    }
    report
}
