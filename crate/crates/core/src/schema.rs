//! JSON system files.
//!
//! A GIFS file lists affine maps; a difference-equation file (recognised by
//! its `rhs` key) is compiled on load. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "name": "fde",
//!   "domain": {"lo": [0.0], "hi": [1.0]},
//!   "degree": 2,
//!   "maps": [
//!     {"blocks": [[[0.25]], [[0.25]]], "offset": [0.0]},
//!     {"blocks": [[[0.25]], [[0.25]]], "offset": [0.5]}
//!   ],
//!   "weights": {"kind": "constant", "values": [0.3333333333333333, 0.6666666666666666]}
//! }
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fde::{compile_fde, CompiledFde, FdeSpec, Rhs};
use crate::geometry::Bounds;
use crate::system::{GifsMap, GifsSystem};
use crate::weights::{AffineWeight, WeightSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// One `d×d` matrix (list of rows) per argument, oldest first.
    pub blocks: Vec<Vec<Vec<f64>>>,
    pub offset: Vec<f64>,
    /// Checked against the block norms when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lip: Option<Vec<f64>>,
}

impl MapSpec {
    fn flat_blocks(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.offset.len();
        self.blocks
            .iter()
            .map(|rows| {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Schema(format!("every block must be {d}×{d}")));
                }
                Ok(rows.concat())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    Affine {
        coeffs: Vec<AffineWeight>,
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lip: Option<Vec<Vec<f64>>>,
    },
}

impl WeightSpec {
    pub fn build(&self, degree: usize, dim: usize) -> Result<WeightSystem> {
        match self {
            WeightSpec::Constant { values, delta } => WeightSystem::constant(values.clone(), degree, *delta),
            WeightSpec::Affine { coeffs, delta, lip } => {
                WeightSystem::affine(coeffs.clone(), degree, dim, *delta, lip.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub domain: Bounds,
    pub degree: usize,
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsSpec {
    Linear {
        coeffs: Vec<f64>,
        control_coeff: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        control_state_coeffs: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub order: usize,
    pub alphabet: Vec<f64>,
    pub rhs: RhsSpec,
    pub domain: Bounds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
}

impl FdeFile {
    pub fn spec(&self) -> FdeSpec {
        let RhsSpec::Linear {
            coeffs,
            control_coeff,
            control_state_coeffs,
            constant,
        } = &self.rhs;
        FdeSpec {
            order: self.order,
            alphabet: self.alphabet.clone(),
            rhs: Rhs::Linear {
                coeffs: coeffs.clone(),
                control_coeff: *control_coeff,
                control_state_coeffs: control_state_coeffs.clone(),
                constant: *constant,
            },
            domain: self.domain.clone(),
        }
    }
}

/// A loaded system with its weights (uniform when the file has none).
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub name: Option<String>,
    pub system: GifsSystem,
    pub weights: WeightSystem,
    /// Present when the file was a difference equation.
    pub fde: Option<FdeFile>,
}

fn weights_for(spec: &Option<WeightSpec>, sys: &GifsSystem) -> Result<WeightSystem> {
    match spec {
        Some(w) => {
            let ws = w.build(sys.degree(), sys.dim())?;
            if ws.len() != sys.len() {
                return Err(Error::Schema(format!(
                    "{} weights for {} maps",
                    ws.len(),
                    sys.len()
                )));
            }
            Ok(ws)
        }
        None => Ok(WeightSystem::uniform(sys.len(), sys.degree())),
    }
}

impl SystemSpec {
    pub fn build(&self) -> Result<GifsSystem> {
        let maps = self
            .maps
            .iter()
            .map(|m| GifsMap::affine(m.flat_blocks()?, m.offset.clone(), m.lip.clone()))
            .collect::<Result<Vec<_>>>()?;
        GifsSystem::new(self.domain.clone(), self.degree, maps)
    }
}

pub fn parse_system(json: &str) -> Result<LoadedSystem> {
    let value: serde_json::Value = serde_json::from_str(json)?;
    if value.get("rhs").is_some() {
        let file: FdeFile = serde_json::from_value(value)?;
        let CompiledFde { system, .. } = compile_fde(&file.spec())?;
        let weights = weights_for(&file.weights, &system)?;
        Ok(LoadedSystem {
            name: file.name.clone(),
            system,
            weights,
            fde: Some(file),
        })
    } else {
        let spec: SystemSpec = serde_json::from_value(value)?;
        let system = spec.build()?;
        let weights = weights_for(&spec.weights, &system)?;
        Ok(LoadedSystem {
            name: spec.name,
            system,
            weights,
            fde: None,
        })
    }
}

pub fn load_system(path: &std::path::Path) -> Result<LoadedSystem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_system(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FDE_SYSTEM: &str = r#"{
        "name": "fde",
        "domain": {"lo": [0.0], "hi": [1.0]},
        "degree": 2,
        "maps": [
            {"blocks": [[[0.25]], [[0.25]]], "offset": [0.0]},
            {"blocks": [[[0.25]], [[0.25]]], "offset": [0.5], "lip": [0.25, 0.25]}
        ],
        "weights": {"kind": "constant", "values": [0.3333333333333333, 0.6666666666666667]}
    }"#;

    #[test]
    fn parses_affine_system() {
        let l = parse_system(FDE_SYSTEM).unwrap();
        assert_eq!(l.name.as_deref(), Some("fde"));
        assert_eq!(l.system.lambda(), 0.5);
        assert_eq!(l.weights.len(), 2);
        assert!(l.fde.is_none());
    }

    #[test]
    fn missing_weights_are_uniform() {
        let json = r#"{"domain": {"lo": [0], "hi": [1]}, "degree": 2,
            "maps": [{"blocks": [[[0.5]], [[0]]], "offset": [0]}]}"#;
        let l = parse_system(json).unwrap();
        assert!(l.weights.is_constant());
        assert_eq!(l.weights.delta(), 1.0);
    }

    #[test]
    fn affine_weights_parse() {
        let json = r#"{"domain": {"lo": [0], "hi": [1]}, "degree": 2,
            "maps": [{"blocks": [[[0.5]], [[0]]], "offset": [0]}, {"blocks": [[[0.5]], [[0]]], "offset": [0.5]}],
            "weights": {"kind": "affine", "delta": 0.3, "coeffs": [
                {"offset": 0.5, "gradient": [0.2, -0.2]},
                {"offset": 0.5, "gradient": [-0.2, 0.2]}]}}"#;
        let l = parse_system(json).unwrap();
        assert!(!l.weights.is_constant());
        assert!((l.weights.lip_sum(0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        let typo = FDE_SYSTEM.replace("\"degree\"", "\"degre\"");
        assert!(matches!(parse_system(&typo), Err(Error::Schema(_))));
        let extra = FDE_SYSTEM.replace("\"offset\": [0.0]}", "\"offset\": [0.0], \"colour\": 1}");
        assert!(matches!(parse_system(&extra), Err(Error::Schema(_))));
        assert!(matches!(parse_system("{not json"), Err(Error::Schema(_))));
        let wrong_lip = FDE_SYSTEM.replace("[0.25, 0.25]}", "[0.2, 0.25]}");
        assert!(matches!(parse_system(&wrong_lip), Err(Error::Invalid(_))));
        let three = FDE_SYSTEM.replace("0.6666666666666667]", "0.3333333333333333, 0.3333333333333334]");
        assert!(parse_system(&three).is_err());
    }

    #[test]
    fn planar_blocks() {
        let json = r#"{"domain": {"lo": [0, 0], "hi": [1, 1]}, "degree": 2,
            "maps": [{"blocks": [[[0.5, 0], [0, 0.5]], [[0, 0], [0, 0]]], "offset": [0, 0.25]}]}"#;
        let l = parse_system(json).unwrap();
        assert_eq!(l.system.eval_map(0, &[1.0, 0.5, 0.3, 0.3]).unwrap(), vec![0.5, 0.5]);
        let ragged = json.replace("[0, 0.5]]", "[0.5]]");
        assert!(matches!(parse_system(&ragged), Err(Error::Schema(_))));
    }

    #[test]
    fn parses_difference_equation() {
        let json = r#"{"order": 2, "alphabet": [-1, 1], "domain": {"lo": [-1], "hi": [1]},
            "rhs": {"kind": "linear", "coeffs": [0, 1], "control_coeff": 0,
                    "control_state_coeffs": [1, 0]}}"#;
        let l = parse_system(json).unwrap();
        assert_eq!(l.system.lambda(), 2.0);
        assert_eq!(l.system.eval_map(0, &[0.5, 0.25]).unwrap(), vec![-0.25]);
        assert!(l.fde.is_some());
    }

    #[test]
    fn spec_round_trips() {
        let l: SystemSpec = serde_json::from_str(FDE_SYSTEM).unwrap();
        let back: SystemSpec = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(l, back);
    }
}
