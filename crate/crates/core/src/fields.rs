//! External fields `V` with analytic derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    /// `V = ln √(x²+1)`.
    CauchyLog,
    /// `V = t·x²`, `t > 0`.
    Quadratic { t: f64 },
    /// `V = arctan x`.
    Arctan,
    /// `V = Σ cᵢ xⁱ`.
    Polynomial { coeffs: Vec<f64> },
}

/// An external field. `offset` is a constant added to `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    #[serde(flatten)]
    kind: FieldKind,
    #[serde(default, skip_serializing_if = "is_zero")]
    offset: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Field {
    pub fn new(kind: FieldKind) -> Result<Self> {
        match &kind {
            FieldKind::Quadratic { t } if !(t.is_finite() && *t > 0.0) => {
                return Err(Error::InvalidField(format!(
                    "quadratic needs t > 0, got {t}"
                )))
            }
            FieldKind::Polynomial { coeffs }
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) =>
            {
                return Err(Error::InvalidField(
                    "polynomial needs at least one finite coefficient".into(),
                ));
            }
            _ => {}
        }
        Ok(Self { kind, offset: 0.0 })
    }

    pub fn cauchy_log() -> Self {
        Self::new(FieldKind::CauchyLog).unwrap()
    }

    pub fn quadratic(t: f64) -> Result<Self> {
        Self::new(FieldKind::Quadratic { t })
    }

    pub fn arctan() -> Self {
        Self::new(FieldKind::Arctan).unwrap()
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(FieldKind::Polynomial { coeffs })
    }

    /// Same field shifted by a constant, `V + c`.
    pub fn with_offset(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FieldKind::CauchyLog => "cauchy-log",
            FieldKind::Quadratic { .. } => "quadratic",
            FieldKind::Arctan => "arctan",
            FieldKind::Polynomial { .. } => "polynomial",
        }
    }

    pub fn params(&self) -> Vec<(String, f64)> {
        let mut p = match &self.kind {
            FieldKind::Quadratic { t } => vec![("t".to_string(), *t)],
            FieldKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| (format!("c{i}"), c))
                .collect(),
            _ => Vec::new(),
        };
        if self.offset != 0.0 {
            p.push(("offset".to_string(), self.offset));
        }
        p
    }

    pub fn value(&self, x: f64) -> f64 {
        let v = match &self.kind {
            FieldKind::CauchyLog => 0.5 * x.mul_add(x, 1.0).ln(),
            FieldKind::Quadratic { t } => t * x * x,
            FieldKind::Arctan => x.atan(),
            FieldKind::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
        };
        v + self.offset
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.kind {
            FieldKind::CauchyLog => x / x.mul_add(x, 1.0),
            FieldKind::Quadratic { t } => 2.0 * t * x,
            FieldKind::Arctan => 1.0 / x.mul_add(x, 1.0),
            FieldKind::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (i, &c)| acc * x + i as f64 * c),
        }
    }

    /// `V` at every node of `grid`; errors if any value is non-finite.
    pub fn values_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        let v: Vec<f64> = (0..grid.len()).map(|i| self.value(grid.node(i))).collect();
        match v.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(v),
        }
    }

    pub fn derivatives_on(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| self.derivative(grid.node(i)))
            .collect()
    }
}

/// Catalog lookup by name. `params` are `(key, value)` pairs: `t` for
/// `quadratic`, `c0, c1, …` (in order) for `polynomial`.
pub fn field_catalog(name: &str, params: &[(&str, f64)]) -> Result<Field> {
    let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|&(_, v)| v);
    match name {
        "cauchy-log" => Ok(Field::cauchy_log()),
        "arctan" => Ok(Field::arctan()),
        "quadratic" => {
            let t = get("t").unwrap_or(1.0);
            Field::quadratic(t)
        }
        "polynomial" | "poly" => {
            let coeffs = params.iter().map(|&(_, v)| v).collect();
            Field::polynomial(coeffs)
        }
        other => Err(Error::UnknownField(other.to_string())),
    }
}

impl FromStr for Field {
    type Err = Error;

    /// Parses `cauchy-log`, `arctan`, `quadratic:t=0.5` and
    /// `poly:c0,c1,c2,...`.
    fn from_str(spec: &str) -> Result<Self> {
        let (name, rest) = match spec.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r.trim())),
            None => (spec.trim(), None),
        };
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidField(format!("`{s}`: {e}")))
        };
        match (name, rest) {
            ("cauchy-log" | "arctan", None) => field_catalog(name, &[]),
            ("cauchy-log" | "arctan", Some(_)) => {
                Err(Error::InvalidField(format!("`{name}` takes no parameters")))
            }
            ("quadratic", None) => Field::quadratic(1.0),
            ("quadratic", Some(r)) => {
                let t = match r.split_once('=') {
                    Some(("t", v)) => num(v)?,
                    Some((k, _)) => {
                        return Err(Error::InvalidField(format!("unknown parameter `{k}`")))
                    }
                    None => num(r)?,
                };
                Field::quadratic(t)
            }
            ("poly" | "polynomial", Some(r)) => {
                let coeffs = r.split(',').map(num).collect::<Result<Vec<_>>>()?;
                Field::polynomial(coeffs)
            }
            ("poly" | "polynomial", None) => Err(Error::InvalidField(
                "polynomial needs coefficients, e.g. poly:0,0,1".into(),
            )),
            _ => Err(Error::UnknownField(name.to_string())),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::CauchyLog => write!(f, "cauchy-log")?,
            FieldKind::Arctan => write!(f, "arctan")?,
            FieldKind::Quadratic { t } => write!(f, "quadratic:t={t}")?,
            FieldKind::Polynomial { coeffs } => {
                let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "poly:{}", cs.join(","))?
            }
        }
        if self.offset != 0.0 {
            write!(f, "{:+}", self.offset)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admissibility {
    Confined,
    Borderline,
    NonConfining,
}

/// Compares `V(x) − ln|x|` at both endpoints: both `≥ 5` is confined, either
/// `≤ 0` is non-confining.
pub fn admissibility_check(field: &Field, lo: f64, hi: f64) -> Admissibility {
    let margin = |x: f64| field.value(x) - x.abs().ln();
    let (a, b) = (margin(lo), margin(hi));
    if a <= 0.0 || b <= 0.0 {
        Admissibility::NonConfining
    } else if a >= 5.0 && b >= 5.0 {
        Admissibility::Confined
    } else {
        Admissibility::Borderline
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignProfile {
    Nonnegative,
    Nonpositive,
    Mixed,
}

const SIGN_ZERO_TOL: f64 = 1e-12;

/// Sign of `V′` over the nodes of `grid`, treating `|V′| ≤ 1e-12` as zero.
pub fn sign_profile(field: &Field, grid: &Grid) -> SignProfile {
    let mut pos = false;
    let mut neg = false;
    for i in 0..grid.len() {
        let d = field.derivative(grid.node(i));
        pos |= d > SIGN_ZERO_TOL;
        neg |= d < -SIGN_ZERO_TOL;
    }
    match (pos, neg) {
        (true, true) => SignProfile::Mixed,
        (_, false) => SignProfile::Nonnegative,
        (false, true) => SignProfile::Nonpositive,
    }
}
