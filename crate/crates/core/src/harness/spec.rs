//! JSON specifications for couples and vectors read by the harness and CLI.

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::couples::{Exponent, WeightedCouple};
use crate::error::{Error, Result};

/// `"inf"` or a number `≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentSpec(pub Exponent);

impl<'de> Deserialize<'de> for ExponentSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Text(s) if s == "inf" || s == "∞" => f64::INFINITY,
            Raw::Text(s) => s
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("bad exponent `{s}`")))?,
        };
        Exponent::new(p)
            .map(ExponentSpec)
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for ExponentSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0.value())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaAdic {
    pub lambda: f64,
    pub k_min: i64,
    pub k_max: i64,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomCouple {
    pub n: usize,
    /// Weights are `exp(U(−s, s))`.
    pub log_spread: f64,
}

/// A couple given explicitly, as a λ-adic generator, or drawn per trial.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CoupleSpec {
    Explicit {
        #[serde(default)]
        labels: Option<Vec<i64>>,
        w0: Vec<f64>,
        w1: Vec<f64>,
        p: ExponentSpec,
    },
    LambdaAdic {
        lambda_adic: LambdaAdic,
        p: ExponentSpec,
    },
    Random {
        random: RandomCouple,
        p: ExponentSpec,
    },
}

impl CoupleSpec {
    pub fn lambda_adic(lambda: f64, k_min: i64, k_max: i64, p: Exponent) -> Self {
        CoupleSpec::LambdaAdic {
            lambda_adic: LambdaAdic {
                lambda,
                k_min,
                k_max,
            },
            p: ExponentSpec(p),
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, CoupleSpec::Random { .. })
    }

    /// Build the couple; random specs draw from `rng`.
    pub fn build<R: Rng>(&self, rng: &mut R) -> Result<WeightedCouple> {
        let CoupleSpec::Random { random: r, p } = self else {
            return self.build_fixed();
        };
        if r.n == 0 {
            return Err(Error::Config("random couple needs n ≥ 1".into()));
        }
        let s = r.log_spread.abs();
        let mut draw = || {
            if s == 0.0 {
                1.0
            } else {
                rng.random_range(-s..s).exp()
            }
        };
        let w0: Vec<f64> = (0..r.n).map(|_| draw()).collect();
        let w1: Vec<f64> = (0..r.n).map(|_| draw()).collect();
        WeightedCouple::from_weights(w0, w1, p.0)
    }

    /// Build a deterministic couple; random specs are rejected.
    pub fn build_fixed(&self) -> Result<WeightedCouple> {
        match self {
            CoupleSpec::Explicit { labels, w0, w1, p } => {
                let labels = labels
                    .clone()
                    .unwrap_or_else(|| (0..w0.len() as i64).collect());
                WeightedCouple::new(labels, w0.clone(), w1.clone(), p.0)
            }
            CoupleSpec::LambdaAdic { lambda_adic: l, p } => {
                WeightedCouple::lambda_adic(l.lambda, l.k_min, l.k_max, p.0)
            }
            CoupleSpec::Random { .. } => {
                Err(Error::Config("a fixed couple is required here".into()))
            }
        }
    }
}

/// Parse a couple JSON document.
pub fn parse_couple(text: &str) -> Result<WeightedCouple> {
    let spec: CoupleSpec = serde_json::from_str(text).map_err(|e| {
        Error::Config(format!(
            "couple spec, line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    spec.build_fixed()
}

/// Parse a vector CSV: one `value` or `label,value` per row; a non-numeric
/// first row is treated as a header. Labelled rows may omit coordinates
/// (taken as 0).
pub fn parse_vector_csv(text: &str, couple: &WeightedCouple) -> Result<Vec<f64>> {
    let mut plain = Vec::new();
    let mut labelled = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("vector csv line {}: cannot parse `{line}`", i + 1));
        match cols.as_slice() {
            [v] => match v.parse::<f64>() {
                Ok(v) => plain.push(v),
                Err(_) if i == 0 => continue,
                Err(_) => return Err(bad()),
            },
            [l, v] => match (l.parse::<i64>(), v.parse::<f64>()) {
                (Ok(l), Ok(v)) => labelled.push((l, v)),
                _ if i == 0 => continue,
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        }
    }
    if !plain.is_empty() && !labelled.is_empty() {
        return Err(Error::Config(
            "vector csv mixes plain and labelled rows".into(),
        ));
    }
    if labelled.is_empty() {
        crate::error::check_len(couple.len(), plain.len())?;
        return Ok(plain);
    }
    let mut x = vec![0.0; couple.len()];
    for (l, v) in labelled {
        let n = couple
            .labels()
            .iter()
            .position(|&k| k == l)
            .ok_or_else(|| Error::Config(format!("label {l} not in the couple")))?;
        x[n] = v;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couple_forms() {
        let c = parse_couple(r#"{"labels":[-1,0],"w0":[1,2],"w1":[1,1],"p":"inf"}"#).unwrap();
        assert_eq!(c.labels(), &[-1, 0]);
        assert!(c.p().is_inf());
        let c = parse_couple(r#"{"lambda_adic":{"lambda":2,"k_min":-1,"k_max":1},"p":1}"#).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.p().is_one());
        let e = parse_couple("{\n\"w0\":[1],\"w1\":[1],\"p\":0.5}").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert!(parse_couple(r#"{"random":{"n":3,"log_spread":1},"p":1}"#).is_err());
    }

    #[test]
    fn vector_csv_forms() {
        let c = WeightedCouple::lambda_adic(2.0, -1, 1, Exponent::ONE).unwrap();
        assert_eq!(
            parse_vector_csv("value\n1\n2\n3\n", &c).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            parse_vector_csv("-1,4\n1,5\n", &c).unwrap(),
            vec![4.0, 0.0, 5.0]
        );
        assert!(parse_vector_csv("7,1\n", &c).is_err());
        assert!(parse_vector_csv("1\n2\n", &c).is_err());
    }
}
