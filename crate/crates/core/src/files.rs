//! JSON descriptions of channels accepted by the command-line tool.
//!
//! A discrete channel is either the BSC shorthand
//! `{"bsc": {"eps": e, "delta": d, "correlation": "independent"}}` or
//! `{"alphabets": {...}, "noise": {"type": "independent" | "joint", ...}}`.
//! A lattice channel has the keys `m`, `g` and the three variances.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channels::{bsc_to_modadd, BscWiretapSpec, ModAddChannelSpec};
use crate::error::{Error, Result};
use crate::info_theory::{JointPmf, Pmf};
use crate::lattice::LatticeSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alphabets {
    pub x: usize,
    /// Defaults to `z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<usize>,
    /// Defaults to `x1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<usize>,
    pub y: usize,
    pub z: usize,
}

/// A probability tensor written flat or as nested rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tensor {
    Flat(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Cube(Vec<Vec<Vec<f64>>>),
}

impl Tensor {
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            Tensor::Flat(v) => v.clone(),
            Tensor::Matrix(m) => m.iter().flatten().copied().collect(),
            Tensor::Cube(c) => c.iter().flatten().flatten().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseFile {
    /// Independent `N0`, `N1`, `N2`; a missing `n0` is uniform.
    Independent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n0: Option<Vec<f64>>,
        n1: Vec<f64>,
        n2: Vec<f64>,
    },
    /// Either the full `(N0, N1, N2)` law or the `(N1, N2)` law with `N0`
    /// independent (uniform when `n0` is missing).
    Joint {
        tensor: Tensor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n0: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelFile {
    Bsc { bsc: BscWiretapSpec },
    General { alphabets: Alphabets, noise: NoiseFile },
}

fn parse_err(what: &str, e: serde_json::Error) -> Error {
    Error::InvalidSpec(format!("{what}: {e}"))
}

impl ChannelFile {
    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidSpec("channel description must be a JSON object".into()))?;
        if let Some(b) = obj.get("bsc") {
            let bsc: BscWiretapSpec =
                serde_json::from_value(b.clone()).map_err(|e| parse_err("bsc channel", e))?;
            return Ok(ChannelFile::Bsc { bsc });
        }
        let alphabets = obj
            .get("alphabets")
            .ok_or_else(|| Error::InvalidSpec("channel needs either \"bsc\" or \"alphabets\"".into()))?;
        let noise = obj
            .get("noise")
            .ok_or_else(|| Error::InvalidSpec("channel needs a \"noise\" entry".into()))?;
        Ok(ChannelFile::General {
            alphabets: serde_json::from_value(alphabets.clone()).map_err(|e| parse_err("alphabets", e))?,
            noise: serde_json::from_value(noise.clone()).map_err(|e| parse_err("noise", e))?,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| parse_err("channel file", e))?;
        Self::from_value(&v)
    }

    pub fn to_spec(&self) -> Result<ModAddChannelSpec> {
        match self {
            ChannelFile::Bsc { bsc } => bsc_to_modadd(bsc),
            ChannelFile::General { alphabets: a, noise } => {
                let x1 = a.x1.unwrap_or(a.z);
                let y0 = a.y0.unwrap_or(x1);
                let n0_pmf = |n0: &Option<Vec<f64>>| match n0 {
                    Some(v) => Pmf::new(v.clone()),
                    None => Pmf::uniform(y0),
                };
                let law = match noise {
                    NoiseFile::Independent { n0, n1, n2 } => {
                        let (n0, n1, n2) = (n0_pmf(n0)?, Pmf::new(n1.clone())?, Pmf::new(n2.clone())?);
                        JointPmf::product(&[&n0, &n1, &n2])?
                    }
                    NoiseFile::Joint { tensor, n0 } => {
                        let data = tensor.flatten();
                        if data.len() == y0 * a.y * a.z {
                            if n0.is_some() {
                                return Err(Error::InvalidSpec(
                                    "n0 is given twice: the tensor already covers (N0, N1, N2)".into(),
                                ));
                            }
                            JointPmf::new(vec![y0, a.y, a.z], data)?
                        } else if data.len() == a.y * a.z {
                            let n1n2 = JointPmf::new(vec![a.y, a.z], data)?;
                            let n0 = n0_pmf(n0)?;
                            let full = n0
                                .probs()
                                .iter()
                                .flat_map(|&p| n1n2.data().iter().map(move |&q| p * q))
                                .collect();
                            JointPmf::new(vec![n0.alphabet_size(), a.y, a.z], full)?
                        } else {
                            return Err(Error::InvalidSpec(format!(
                                "noise tensor has {} entries; expected |Y0||Y||Z| = {} or |Y||Z| = {}",
                                data.len(),
                                y0 * a.y * a.z,
                                a.y * a.z
                            )));
                        }
                    }
                };
                ModAddChannelSpec::new(a.x, x1, y0, a.y, a.z, law)
            }
        }
    }
}

/// Either kind of channel, told apart by the keys present.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyChannel {
    Discrete(ChannelFile),
    Lattice(LatticeSpec),
}

impl AnyChannel {
    pub fn from_value(v: &Value) -> Result<Self> {
        let is_lattice = v.as_object().is_some_and(|o| o.contains_key("g"));
        if is_lattice {
            serde_json::from_value(v.clone())
                .map(AnyChannel::Lattice)
                .map_err(|e| parse_err("lattice channel", e))
        } else {
            ChannelFile::from_value(v).map(AnyChannel::Discrete)
        }
    }
}

impl Serialize for AnyChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            AnyChannel::Discrete(c) => c.serialize(s),
            AnyChannel::Lattice(l) => l.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for AnyChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        AnyChannel::from_value(&v).map_err(serde::de::Error::custom)
    }
}

pub fn parse_lattice(s: &str) -> Result<LatticeSpec> {
    serde_json::from_str(s).map_err(|e| parse_err("lattice file", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::Correlation;

    #[test]
    fn bsc_shorthand() {
        let f = ChannelFile::from_json(r#"{"bsc": {"eps": 0.1, "delta": 0.3, "correlation": "degraded-wiretap"}}"#)
            .unwrap();
        match &f {
            ChannelFile::Bsc { bsc } => assert_eq!(bsc.correlation, Correlation::DegradedWiretap),
            _ => panic!("expected bsc"),
        }
        let spec = f.to_spec().unwrap();
        assert!((spec.main_noise().probs()[1] - 0.1).abs() < 1e-15);
        assert!((spec.wiretap_noise().probs()[1] - 0.3).abs() < 1e-15);
        let default = ChannelFile::from_json(r#"{"bsc": {"eps": 0.1, "delta": 0.1}}"#).unwrap();
        assert!(matches!(default, ChannelFile::Bsc { bsc } if bsc.correlation == Correlation::Independent));
    }

    #[test]
    fn independent_noise() {
        let f = ChannelFile::from_json(
            r#"{"alphabets": {"x": 3, "y": 3, "z": 3},
                "noise": {"type": "independent", "n1": [0.8, 0.1, 0.1], "n2": [0.5, 0.25, 0.25]}}"#,
        )
        .unwrap();
        let spec = f.to_spec().unwrap();
        assert_eq!((spec.x1_size, spec.y0_size), (3, 3));
        assert_eq!(spec.main_noise().probs(), &[0.8, 0.1, 0.1]);
        assert!((spec.noise().marginal(0).unwrap().probs()[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn joint_noise_shapes() {
        let nested = ChannelFile::from_json(
            r#"{"alphabets": {"x": 2, "y": 2, "z": 2},
                "noise": {"type": "joint", "tensor": [[0.7, 0.1], [0.05, 0.15]]}}"#,
        )
        .unwrap()
        .to_spec()
        .unwrap();
        let flat = ChannelFile::from_json(
            r#"{"alphabets": {"x": 2, "x1": 2, "y0": 2, "y": 2, "z": 2},
                "noise": {"type": "joint", "tensor": [0.35, 0.05, 0.025, 0.075, 0.35, 0.05, 0.025, 0.075]}}"#,
        )
        .unwrap()
        .to_spec()
        .unwrap();
        assert_eq!(nested.noise().dims(), &[2, 2, 2]);
        for (a, b) in nested.noise().data().iter().zip(flat.noise().data()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(ChannelFile::from_json(
            r#"{"alphabets": {"x": 2, "y": 2, "z": 2}, "noise": {"type": "joint", "tensor": [0.5, 0.5, 0.0]}}"#
        )
        .unwrap()
        .to_spec()
        .is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(ChannelFile::from_json("[1, 2]").is_err());
        assert!(ChannelFile::from_json(r#"{"noise": {}}"#).is_err());
        assert!(ChannelFile::from_json(r#"{"bsc": {"eps": 0.7, "delta": 0.1}}"#)
            .unwrap()
            .to_spec()
            .is_err());
        assert!(ChannelFile::from_json(r#"{"bsc": {"eps": "a"}}"#).is_err());
    }

    #[test]
    fn lattice_or_discrete() {
        let v: Value = serde_json::from_str(r#"{"m": 1, "g": [[1.0]], "sigma1_sq": 0.09, "sigma2_sq": 0.25}"#).unwrap();
        assert!(matches!(AnyChannel::from_value(&v).unwrap(), AnyChannel::Lattice(_)));
        let v: Value = serde_json::from_str(r#"{"bsc": {"eps": 0.1, "delta": 0.2}}"#).unwrap();
        let c = AnyChannel::from_value(&v).unwrap();
        let back: AnyChannel = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
