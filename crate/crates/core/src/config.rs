//! JSON configuration files for models and weights.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainModel, Transition};
use crate::rate::{parse_rate, RateExpr};
use crate::weighting::{WeightMatrix, WeightShape};

/// `{"kind", "S", "lambda", "mu", "xi", "q"}`; which rate tables are required depends on
/// `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mu: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub xi: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub q: Vec<TransitionConfig>,
}

/// Rate of the transition `i → j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub i: usize,
    pub j: usize,
    pub rate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub shape: String,
    pub d: Vec<f64>,
}

fn parse_list(name: &str, v: &[String]) -> Result<Vec<RateExpr>> {
    v.iter()
        .enumerate()
        .map(|(k, s)| parse_rate(s).map_err(|e| Error::Config(format!("{name}[{k}] = {s:?}: {e}"))))
        .collect()
}

fn reject_nonempty(kind: &str, name: &str, present: bool) -> Result<()> {
    if present {
        return Err(Error::Config(format!("field `{name}` is not used by kind `{kind}`")));
    }
    Ok(())
}

impl ModelConfig {
    pub fn to_model(&self) -> Result<ChainModel> {
        let kind = self.kind.as_str();
        match kind {
            "bdpc" => {
                reject_nonempty(kind, "q", !self.q.is_empty())?;
                ChainModel::bdpc(
                    self.s,
                    parse_list("lambda", &self.lambda)?,
                    parse_list("mu", &self.mu)?,
                    parse_list("xi", &self.xi)?,
                )
            }
            "szk" => {
                reject_nonempty(kind, "q", !self.q.is_empty())?;
                reject_nonempty(kind, "xi", !self.xi.is_empty())?;
                ChainModel::szk(self.s, parse_list("lambda", &self.lambda)?, parse_list("mu", &self.mu)?)
            }
            "absorbing" | "general" => {
                for name in ["lambda", "mu", "xi"] {
                    let present = match name {
                        "lambda" => !self.lambda.is_empty(),
                        "mu" => !self.mu.is_empty(),
                        _ => !self.xi.is_empty(),
                    };
                    reject_nonempty(kind, name, present)?;
                }
                let q = self
                    .q
                    .iter()
                    .enumerate()
                    .map(|(k, e)| {
                        let rate = parse_rate(&e.rate)
                            .map_err(|err| Error::Config(format!("q[{k}] ({} -> {}) = {:?}: {err}", e.i, e.j, e.rate)))?;
                        Ok(Transition::new(e.i, e.j, rate))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if kind == "absorbing" {
                    ChainModel::absorbing(self.s, q)
                } else {
                    ChainModel::general(self.s, q)
                }
            }
            other => Err(Error::Config(format!(
                "unknown model kind `{other}` (expected bdpc, szk, absorbing or general)"
            ))),
        }
    }
}

impl WeightsConfig {
    pub fn to_weights(&self) -> Result<WeightMatrix> {
        let shape: WeightShape = self.shape.parse()?;
        WeightMatrix::new(shape, self.d.clone())
    }

    pub fn from_weights(w: &WeightMatrix) -> Self {
        Self { shape: w.shape().to_string(), d: w.weights().to_vec() }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))
    })
}

pub fn parse_model(text: &str) -> Result<ChainModel> {
    from_json::<ModelConfig>(text, "model")?.to_model()
}

pub fn parse_weights(text: &str) -> Result<WeightMatrix> {
    from_json::<WeightsConfig>(text, "weights")?.to_weights()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ChainModel> {
    let path = path.as_ref();
    from_json::<ModelConfig>(&read(path)?, &path.display().to_string())?.to_model()
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightMatrix> {
    let path = path.as_ref();
    from_json::<WeightsConfig>(&read(path)?, &path.display().to_string())?.to_weights()
}

pub fn weights_to_json(w: &WeightMatrix) -> String {
    let mut s = serde_json::to_string_pretty(&WeightsConfig::from_weights(w)).expect("weights serialize");
    s.push('\n');
    s
}

pub fn save_weights(path: impl AsRef<Path>, w: &WeightMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, weights_to_json(w)).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn bdpc_config() {
        let m = parse_model(
            r#"{"kind": "bdpc", "S": 2, "lambda": ["1", "1"], "mu": ["2", "2"], "xi": ["0.5", "0.5"]}"#,
        )
        .unwrap();
        assert_eq!(m.kind(), ModelKind::Bdpc);
        let a = m.eval_a(0.0).unwrap();
        assert_eq!(a[(0, 1)], 2.5);
        assert_eq!(a[(0, 2)], 0.5);
    }

    #[test]
    fn absorbing_config() {
        let m = parse_model(r#"{"kind": "absorbing", "S": 1, "q": [{"i": 1, "j": 0, "rate": "3"}]}"#).unwrap();
        assert_eq!(m.eval_a(0.0).unwrap()[(0, 1)], 3.0);
    }

    #[test]
    fn errors_carry_context() {
        let e = parse_model(r#"{"kind": "szk", "S": 1, "lambda": ["1 +"], "mu": ["1"]}"#).unwrap_err();
        assert!(e.to_string().contains("lambda[0]"), "{e}");
        assert!(e.is_input_error());
        let e = parse_model("{\"kind\": \"szk\",\n \"S\": }").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = parse_model(r#"{"kind": "mystery", "S": 1}"#).unwrap_err();
        assert!(e.to_string().contains("mystery"));
        let e = parse_model(r#"{"kind": "szk", "S": 1, "lambda": ["1"], "mu": ["1"], "xi": ["1"]}"#).unwrap_err();
        assert!(e.to_string().contains("xi"));
    }

    #[test]
    fn weights_round_trip() {
        let w = WeightMatrix::new(WeightShape::CumulativeUpper, vec![1.0, 0.5, 0.1234567890123]).unwrap();
        let back = parse_weights(&weights_to_json(&w)).unwrap();
        assert_eq!(back, w);
        assert!(parse_weights(r#"{"shape": "diagonal", "d": [1, -1]}"#).is_err());
        assert!(parse_weights(r#"{"shape": "lower", "d": [1]}"#).is_err());
    }
}
