use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One characterization constant, with its parameter where it takes one.
///
/// The textual form is `name` or `name:param`, e.g. `ap:2`, `asw:0.01`,
/// `aexp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Ap(f64),
    Rh(f64),
    Aexp,
    Asw(f64),
    Acon(f64),
    Am(f64),
    AmHat(f64),
    Acf(f64),
    Alambda(f64),
    Alog,
    Amed,
    Astar,
    Regularity,
}

impl Estimator {
    pub const NAMES: [&'static str; 13] = [
        "ap",
        "rh",
        "aexp",
        "asw",
        "acon",
        "am",
        "am_hat",
        "acf",
        "alambda",
        "alog",
        "amed",
        "astar",
        "regularity",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Ap(_) => "ap",
            Estimator::Rh(_) => "rh",
            Estimator::Aexp => "aexp",
            Estimator::Asw(_) => "asw",
            Estimator::Acon(_) => "acon",
            Estimator::Am(_) => "am",
            Estimator::AmHat(_) => "am_hat",
            Estimator::Acf(_) => "acf",
            Estimator::Alambda(_) => "alambda",
            Estimator::Alog => "alog",
            Estimator::Amed => "amed",
            Estimator::Astar => "astar",
            Estimator::Regularity => "regularity",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            Estimator::Ap(x)
            | Estimator::Rh(x)
            | Estimator::Asw(x)
            | Estimator::Acon(x)
            | Estimator::Am(x)
            | Estimator::AmHat(x)
            | Estimator::Acf(x)
            | Estimator::Alambda(x) => Some(x),
            _ => None,
        }
    }

    pub fn from_parts(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| {
            p.ok_or_else(|| Error::UnknownEstimator(format!("{name} needs a parameter")))
        };
        let e = match name {
            "ap" => Estimator::Ap(need(param)?),
            "rh" => Estimator::Rh(need(param)?),
            "asw" => Estimator::Asw(need(param)?),
            "acon" => Estimator::Acon(need(param)?),
            "am" => Estimator::Am(need(param)?),
            "am_hat" | "amhat" => Estimator::AmHat(need(param)?),
            "acf" => Estimator::Acf(need(param)?),
            "alambda" => Estimator::Alambda(need(param)?),
            "aexp" | "alog" | "amed" | "astar" | "regularity" if param.is_some() => {
                return Err(Error::UnknownEstimator(format!(
                    "{name} takes no parameter"
                )))
            }
            "aexp" => Estimator::Aexp,
            "alog" => Estimator::Alog,
            "amed" => Estimator::Amed,
            "astar" => Estimator::Astar,
            "regularity" => Estimator::Regularity,
            other => return Err(Error::UnknownEstimator(other.to_string())),
        };
        e.validate()?;
        Ok(e)
    }

    pub(crate) fn domain(&self) -> &'static str {
        match self {
            Estimator::Ap(_) | Estimator::Rh(_) => "must be > 1",
            _ => "must lie in (0, 1)",
        }
    }

    pub(crate) fn parameter_name_value(&self) -> (&'static str, f64) {
        let v = self.parameter().unwrap_or(f64::NAN);
        let name = match self {
            Estimator::Ap(_) => "p",
            Estimator::Rh(_) => "q",
            Estimator::Asw(_) => "s",
            Estimator::Acon(_) => "gamma",
            Estimator::Am(_) | Estimator::AmHat(_) => "alpha",
            Estimator::Acf(_) => "eps",
            Estimator::Alambda(_) => "beta",
            _ => "-",
        };
        (name, v)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Estimator::Ap(x) | Estimator::Rh(x) => x > 1.0 && x.is_finite(),
            Estimator::Asw(x)
            | Estimator::Acon(x)
            | Estimator::Am(x)
            | Estimator::AmHat(x)
            | Estimator::Acf(x)
            | Estimator::Alambda(x) => x > 0.0 && x < 1.0,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(super::invalid(*self))
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parameter() {
            Some(p) => write!(f, "{}:{}", self.name(), p),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once(':') {
            None => Estimator::from_parts(s, None),
            Some((name, p)) => {
                let p: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::UnknownEstimator(s.to_string()))?;
                Estimator::from_parts(name.trim(), Some(p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for text in [
            "ap:2",
            "rh:1.5",
            "aexp",
            "asw:0.01",
            "am_hat:0.5",
            "alambda:0.5",
            "regularity",
        ] {
            let e: Estimator = text.parse().unwrap();
            assert_eq!(e.to_string(), text);
        }
        assert_eq!(
            "amhat:0.25".parse::<Estimator>().unwrap(),
            Estimator::AmHat(0.25)
        );
    }

    #[test]
    fn rejects_bad_names_and_params() {
        assert!(matches!(
            "nosuch".parse::<Estimator>(),
            Err(Error::UnknownEstimator(_))
        ));
        assert!("ap".parse::<Estimator>().is_err());
        assert!("aexp:2".parse::<Estimator>().is_err());
        assert!(matches!(
            "ap:1".parse::<Estimator>(),
            Err(Error::InvalidParameter { name: "p", .. })
        ));
        assert!("asw:1".parse::<Estimator>().is_err());
        assert!("acon:0".parse::<Estimator>().is_err());
        assert!("am:x".parse::<Estimator>().is_err());
    }
}
